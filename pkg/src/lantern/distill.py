"""Distill a trained teacher into a portable knowledge pack.

A pack bundles, for one source task: per-automaton-transition values
(the teacher's Q averaged over every state-action pair that fires the
transition), per-state strategic summaries, a softmax teacher policy
over product states, the automaton's state descriptions, and the layout
snapshot of the environment the teacher was trained in.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dfa import Dfa, dfa_from_dict, dfa_to_dict
from .envs import GridEnv, N_ACTIONS, export_layout
from .product import (
    ProductConfig,
    enumerate_product_states,
    initial_product_state,
    product_key_from_str,
    product_key_to_str,
    product_step,
)
from .qlearn import QTable, softmax_row

PACK_FORMAT = "lantern-pack/1"

Transition = tuple[str, str]


class PackError(ValueError):
    pass


@dataclass
class KnowledgePack:
    source_id: str
    dfa: Dfa
    q_ad: dict[Transition, float]
    q_ad_state: dict[str, float]
    teacher_policy: dict[tuple, tuple[float, ...]]  # product key -> action probs
    descriptions: dict[str, str]
    env_snapshot: dict = field(default_factory=dict)
    estimator: str = "enumerated"

    def policy_row(self, key) -> tuple[float, ...]:
        """Teacher action distribution; uniform for states never seen."""
        row = self.teacher_policy.get(key)
        return row if row is not None else _UNIFORM


_UNIFORM = tuple([1.0 / N_ACTIONS] * N_ACTIONS)


def compute_q_ad(
    teacher_q: QTable,
    env: GridEnv,
    dfa: Dfa,
    bound: int = 2_000_000,
    sample_steps: int = 100_000,
    temperature: float = 1.0,
    seed: int = 0,
) -> tuple[dict[Transition, float], str]:
    """Average teacher Q over the trigger set of each automaton transition.

    Enumerates the reachable product space when it fits under ``bound``;
    otherwise estimates the trigger sets from ``sample_steps`` steps of
    the teacher's softmax policy. Self-loops are excluded, and transitions
    never triggered are absent from the result.
    """
    try:
        states = enumerate_product_states(env, dfa, bound=bound)
    except ValueError:
        return _q_ad_sampled(teacher_q, env, dfa, sample_steps, temperature, seed), "sampled"

    pcfg = ProductConfig(episode_cap=2**62)
    buckets: dict[Transition, list[float]] = {}
    for p in states:
        if p.auto_state in dfa.accepting:
            continue
        key = p.key()
        for a in range(N_ACTIONS):
            nxt, _, _ = product_step(env, dfa, pcfg, p, a)
            if nxt.auto_state != p.auto_state:
                buckets.setdefault((p.auto_state, nxt.auto_state), []).append(
                    teacher_q.value(key, a)
                )
    return {t: sum(vs) / len(vs) for t, vs in buckets.items()}, "enumerated"


def _q_ad_sampled(
    teacher_q: QTable,
    env: GridEnv,
    dfa: Dfa,
    sample_steps: int,
    temperature: float,
    seed: int,
) -> dict[Transition, float]:
    rng = np.random.default_rng(seed)
    pcfg = ProductConfig(episode_cap=2**62)
    buckets: dict[Transition, list[float]] = {}
    p = initial_product_state(env, dfa)
    for _ in range(sample_steps):
        key = p.key()
        probs = softmax_row(teacher_q.row(key), temperature)
        a = int(rng.choice(N_ACTIONS, p=probs))
        nxt, _, _ = product_step(env, dfa, pcfg, p, a)
        if nxt.auto_state != p.auto_state:
            buckets.setdefault((p.auto_state, nxt.auto_state), []).append(
                teacher_q.value(key, a)
            )
        p = nxt
        if p.auto_state in dfa.accepting:
            p = initial_product_state(env, dfa)
    return {t: sum(vs) / len(vs) for t, vs in buckets.items()}


def summarize_state(
    q_ad: dict[Transition, float], states: tuple[str, ...] | None = None
) -> dict[str, float]:
    """Mean outgoing transition value per automaton state (0.0 when none)."""
    outgoing: dict[str, list[float]] = {}
    for (src, _dst), value in q_ad.items():
        outgoing.setdefault(src, []).append(value)
    keys = states if states is not None else tuple(outgoing)
    return {s: (sum(outgoing[s]) / len(outgoing[s]) if s in outgoing else 0.0) for s in keys}


def extract_teacher_policy(
    teacher_q: QTable, temperature: float = 1.0, min_visits: int = 0
) -> dict[tuple, tuple[float, ...]]:
    """Softmax of each visited Q row.

    ``min_visits`` drops rows for states the teacher barely saw: a
    softmax of one or two haphazard updates is an opinionated-looking
    rather than informed distribution, and exporting it misleads
    downstream consumers. Unexported states are left implicit.
    """
    return {
        key: tuple(softmax_row(teacher_q.row(key), temperature))
        for key in teacher_q.keys()
        if teacher_q.visits(key) >= min_visits
    }


def distill_pack(
    source_id: str,
    env: GridEnv,
    dfa: Dfa,
    teacher_q: QTable,
    temperature: float = 1.0,
    bound: int = 2_000_000,
    sample_steps: int = 100_000,
    min_policy_visits: int = 0,
) -> KnowledgePack:
    q_ad, estimator = compute_q_ad(
        teacher_q, env, dfa, bound=bound, sample_steps=sample_steps,
        temperature=temperature,
    )
    return KnowledgePack(
        source_id=source_id,
        dfa=dfa,
        q_ad=q_ad,
        q_ad_state=summarize_state(q_ad, dfa.states),
        teacher_policy=extract_teacher_policy(teacher_q, temperature, min_policy_visits),
        descriptions=dict(dfa.descriptions),
        env_snapshot=export_layout(env),
        estimator=estimator,
    )


def save_pack(pack: KnowledgePack, path: str | Path) -> None:
    doc = {
        "format": PACK_FORMAT,
        "source_id": pack.source_id,
        "estimator": pack.estimator,
        "dfa": dfa_to_dict(pack.dfa),
        "q_ad": [
            {"from": src, "to": dst, "value": pack.q_ad[(src, dst)]}
            for src, dst in sorted(pack.q_ad)
        ],
        "q_ad_state": dict(sorted(pack.q_ad_state.items())),
        "teacher_policy": {
            product_key_to_str(k): list(row)
            for k, row in sorted(
                pack.teacher_policy.items(), key=lambda kv: product_key_to_str(kv[0])
            )
        },
        "descriptions": dict(sorted(pack.descriptions.items())),
        "env_snapshot": pack.env_snapshot,
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_pack(path: str | Path) -> KnowledgePack:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise PackError(f"{path}: corrupt pack file ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format") != PACK_FORMAT:
        raise PackError(f"{path}: unsupported pack format {doc.get('format')!r}")

    policy = {}
    for key_str, row in doc["teacher_policy"].items():
        if abs(sum(row) - 1.0) > 1e-9 or any(v < 0 for v in row):
            raise PackError(f"{path}: policy row for {key_str} is not a distribution")
        policy[product_key_from_str(key_str)] = tuple(row)

    return KnowledgePack(
        source_id=doc["source_id"],
        dfa=dfa_from_dict(doc["dfa"]),
        q_ad={(row["from"], row["to"]): row["value"] for row in doc["q_ad"]},
        q_ad_state=dict(doc["q_ad_state"]),
        teacher_policy=policy,
        descriptions=dict(doc["descriptions"]),
        env_snapshot=doc.get("env_snapshot", {}),
        estimator=doc.get("estimator", "enumerated"),
    )
