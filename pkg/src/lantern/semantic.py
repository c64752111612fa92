"""Semantic alignment of automaton states across tasks.

State descriptions are embedded into a shared vector space, target
states are matched to the most similar source states (a bounded
neighborhood with clamp-normalized weights), and each target state gets
a precomputed misalignment score (one minus its best similarity).

Three embedding providers ship: an HTTP client for an external service,
a fixture provider for replayed vectors, and a deterministic lexical
fallback that needs no network or model files. The fallback assigns each
vocabulary token its own dimension, so texts without shared tokens are
exactly orthogonal; a fixed-width hashed variant is available for
callers that need a corpus-independent dimension, at the cost of
spurious bucket collisions.
"""

from __future__ import annotations

import hashlib
import json
import re
import warnings
from dataclasses import dataclass

import numpy as np

from .dfa import Dfa

_TOKEN_RE = re.compile(r"[a-z0-9]+")

# Function words carry no milestone semantics; keeping them would let
# "the"/"to" manufacture weak cross-task alignment out of nothing.
STOPWORDS = frozenset(
    "a an and are as at be by for from in into is it of on or the to up with".split()
)


def tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN_RE.findall(text.lower()) if t not in STOPWORDS]


class EmbeddingError(RuntimeError):
    pass


class BagOfWordsProvider:
    """L2-normalized token-count embeddings.

    With ``hash_dim=None`` (default) the dimension is the vocabulary of
    the corpus given at construction, one token per axis; unknown tokens
    embed to nothing, so fully out-of-vocabulary text yields the zero
    vector. With ``hash_dim=d`` tokens are hashed into d buckets instead
    and no corpus is needed.
    """

    def __init__(self, corpus=None, hash_dim: int | None = None):
        self.hash_dim = hash_dim
        if hash_dim is None:
            tokens = sorted({t for text in (corpus or []) for t in tokenize(text)})
            self._index = {t: i for i, t in enumerate(tokens)}
            self.dim = max(len(tokens), 1)
        else:
            self._index = None
            self.dim = hash_dim

    @property
    def provider_id(self) -> str:
        if self.hash_dim is None:
            vocab_hash = hashlib.sha256(
                "\x1f".join(sorted(self._index)).encode()
            ).hexdigest()[:12]
            return f"bow-exact-{self.dim}-{vocab_hash}"
        return f"bow-hashed-{self.dim}"

    def _bucket(self, token: str) -> int | None:
        if self.hash_dim is not None:
            digest = hashlib.sha256(token.encode()).digest()
            return int.from_bytes(digest[:8], "big") % self.hash_dim
        return self._index.get(token)

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        for token in tokenize(text):
            bucket = self._bucket(token)
            if bucket is not None:
                vec[bucket] += 1.0
        norm = np.linalg.norm(vec)
        return vec / norm if norm > 0 else vec


class FixtureProvider:
    """Replays precomputed vectors from a JSON map text -> vector."""

    def __init__(self, vectors: dict[str, list[float]], provider_id: str = "fixture"):
        self._vectors = {t: np.asarray(v, dtype=float) for t, v in vectors.items()}
        dims = {v.shape[0] for v in self._vectors.values()}
        if len(dims) > 1:
            raise EmbeddingError(f"fixture vectors have mixed dimensions {dims}")
        self.dim = dims.pop() if dims else 0
        self.provider_id = provider_id

    @classmethod
    def from_file(cls, path) -> "FixtureProvider":
        with open(path) as fh:
            return cls(json.load(fh), provider_id=f"fixture:{path}")

    def embed(self, text: str) -> np.ndarray:
        if text not in self._vectors:
            raise EmbeddingError(f"no fixture vector for text {text!r}")
        return self._vectors[text]


class HttpEmbeddingProvider:
    """Client for a service answering POST {"texts": [...]} with
    {"vectors": [[...], ...]}."""

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout
        self.provider_id = f"http:{endpoint}"

    def embed(self, text: str) -> np.ndarray:
        import requests

        try:
            resp = requests.post(
                self.endpoint, json={"texts": [text]}, timeout=self.timeout
            )
            resp.raise_for_status()
            vectors = resp.json()["vectors"]
        except Exception as exc:
            raise EmbeddingError(f"embedding service failed on {text!r}: {exc}") from exc
        return np.asarray(vectors[0], dtype=float)


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine in [-1, 1]; zero vectors compare as 0.0 with a warning."""
    nu, nv = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        warnings.warn("cosine similarity of a zero vector is defined as 0.0")
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


@dataclass(frozen=True)
class NeighborEntry:
    source_id: str
    state: str
    similarity: float
    weight: float = 0.0


@dataclass(frozen=True)
class Neighborhood:
    target_state: str
    entries: tuple[NeighborEntry, ...]
    degenerate: bool = False


def embed_all(dfa: Dfa, provider, cache: dict | None = None) -> dict[str, np.ndarray]:
    """Embed every state description, reusing (provider id, text) cache hits."""
    out = {}
    for state in dfa.states:
        text = dfa.descriptions[state]
        if cache is not None:
            cache_key = (provider.provider_id, text)
            if cache_key not in cache:
                cache[cache_key] = provider.embed(text)
            out[state] = cache[cache_key]
        else:
            out[state] = provider.embed(text)
    return out


def _score_all_sources(target_text: str, packs, provider) -> list[tuple[float, str, str]]:
    """(similarity, source_id, state) for every source automaton state."""
    target_vec = provider.embed(target_text)
    scored = []
    for pack in packs:
        for state in pack.dfa.states:
            sim = cosine_similarity(target_vec, provider.embed(pack.descriptions[state]))
            scored.append((sim, pack.source_id, state))
    return scored


def build_neighborhood(
    target_state: str, target_text: str, packs, provider, m: int
) -> Neighborhood:
    """Top-``m`` source states by similarity; ties break lexicographically
    on (source_id, state id). Empty when there are no packs."""
    if m < 1:
        raise ValueError("m must be >= 1")
    scored = _score_all_sources(target_text, packs, provider)
    scored.sort(key=lambda t: (-t[0], t[1], t[2]))
    entries = tuple(
        NeighborEntry(source_id=sid, state=state, similarity=sim)
        for sim, sid, state in scored[:m]
    )
    return Neighborhood(target_state=target_state, entries=entries)


def compute_weights(n: Neighborhood) -> Neighborhood:
    """Clamp similarities at zero and normalize into aggregation weights.

    When every similarity is nonpositive the weights fall back to uniform
    and the neighborhood is flagged degenerate, which downstream gating
    treats as "no usable sources".
    """
    if not n.entries:
        return Neighborhood(n.target_state, (), degenerate=True)
    clamped = [max(e.similarity, 0.0) for e in n.entries]
    total = sum(clamped)
    if total <= 0.0:
        uniform = 1.0 / len(n.entries)
        entries = tuple(
            NeighborEntry(e.source_id, e.state, e.similarity, uniform) for e in n.entries
        )
        return Neighborhood(n.target_state, entries, degenerate=True)
    entries = tuple(
        NeighborEntry(e.source_id, e.state, e.similarity, c / total)
        for e, c in zip(n.entries, clamped)
    )
    return Neighborhood(n.target_state, entries, degenerate=False)


def semantic_volatility(target_text: str, packs, provider) -> float:
    """One minus the best similarity over all source states, in [0, 2];
    1.0 with no sources."""
    scored = _score_all_sources(target_text, packs, provider)
    if not scored:
        return 1.0
    best = max(sim for sim, _, _ in scored)
    return float(min(max(1.0 - best, 0.0), 2.0))


@dataclass
class SemanticIndex:
    """Per-target-state neighborhoods, weights, and misalignment scores,
    precomputed once per (target automaton, pack set)."""

    neighborhoods: dict[str, Neighborhood]
    v_sem: dict[str, float]
    provider_id: str

    @classmethod
    def build(cls, target_dfa: Dfa, packs, provider=None, m: int = 3) -> "SemanticIndex":
        if provider is None:
            provider = default_provider(target_dfa, packs)
        cached = _CachedProvider(provider)
        neighborhoods = {}
        v_sem = {}
        for state in target_dfa.states:
            text = target_dfa.descriptions[state]
            n = build_neighborhood(state, text, packs, cached, m)
            neighborhoods[state] = compute_weights(n)
            v_sem[state] = semantic_volatility(text, packs, cached)
        return cls(neighborhoods, v_sem, provider.provider_id)

    def degenerate_states(self) -> frozenset[str]:
        return frozenset(s for s, n in self.neighborhoods.items() if n.degenerate)


class _CachedProvider:
    """Memoizes embed calls for one underlying provider."""

    def __init__(self, provider):
        self._provider = provider
        self.provider_id = provider.provider_id
        self._cache: dict[str, np.ndarray] = {}

    def embed(self, text: str) -> np.ndarray:
        vec = self._cache.get(text)
        if vec is None:
            vec = self._provider.embed(text)
            self._cache[text] = vec
        return vec


def default_provider(target_dfa: Dfa, packs) -> BagOfWordsProvider:
    """Lexical fallback fitted on every description in play."""
    corpus = list(target_dfa.descriptions.values())
    for pack in packs:
        corpus.extend(pack.descriptions.values())
    return BagOfWordsProvider(corpus=corpus)
