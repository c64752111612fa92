"""Generate task automata from natural-language descriptions via a
chat-completion endpoint, with a replay mode for offline runs.

The prompt pins the event vocabulary and the DFA-JSON output schema. A
response must parse and pass validation; on failure the validator's
message is appended to the conversation and the model is re-asked, up to
a fixed attempt budget. Replay mode resolves each request from a fixture
file mapping the request hash to a canned response, so tests and
experiments never need the network.
"""

from __future__ import annotations

import hashlib
import json
import re
import warnings
from dataclasses import dataclass

from .dfa import Dfa, DfaError, dfa_from_dict, validate_dfa

MAX_ATTEMPTS = 3

SCHEMA_INSTRUCTIONS = """\
Respond with exactly one JSON object and no other commentary, using this schema:
{
  "states": ["<state id>", ...],
  "alphabet": ["<event symbol>", ...],
  "initial": "<state id>",
  "accepting": ["<state id>", ...],
  "transitions": [{"from": "<state id>", "symbol": "<event symbol>", "to": "<state id>"}, ...],
  "descriptions": {"<state id>": "<short natural-language milestone>", ...}
}"""


class LlmDfaError(RuntimeError):
    pass


@dataclass(frozen=True)
class PromptSpec:
    task_description: str
    vocabulary: tuple[str, ...]
    schema_instructions: str = SCHEMA_INSTRUCTIONS

    def __post_init__(self):
        if not self.vocabulary:
            raise ValueError("vocabulary must be non-empty")


@dataclass(frozen=True)
class LlmClientConfig:
    mode: str = "replay"  # "replay" | "live"
    endpoint: str = ""
    model: str = ""
    temperature: float = 0.0
    fixture_path: str | None = None

    def __post_init__(self):
        if self.mode not in ("replay", "live"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "replay" and not self.fixture_path:
            raise ValueError("replay mode requires a fixture path")


def build_prompt(spec: PromptSpec) -> str:
    """Deterministic instruction prompt; byte-identical for equal specs."""
    if not spec.task_description.strip():
        raise ValueError("task description must be non-empty")
    vocabulary = ", ".join(spec.vocabulary)
    return (
        "You write finite-state task automata for reinforcement-learning agents.\n"
        f"Task: {spec.task_description}\n\n"
        "Do the following:\n"
        "(1) Extract the key subgoals and their temporal dependencies from the task.\n"
        "(2) Define automaton states representing task-progress milestones.\n"
        "(3) Specify a deterministic transition function over the states using only "
        f"these event symbols: {vocabulary}.\n"
        "(4) Designate the initial state and the accepting state(s).\n"
        "(5) Provide a short natural-language description of every state.\n\n"
        f"{spec.schema_instructions}"
    )


def request_hash(messages: list[dict]) -> str:
    return hashlib.sha256(
        json.dumps(messages, sort_keys=True, ensure_ascii=False).encode()
    ).hexdigest()


class ReplayClient:
    """Resolves chat requests from a JSON map request-hash -> response text."""

    def __init__(self, fixture_path: str):
        with open(fixture_path) as fh:
            self._responses = json.load(fh)
        self.fixture_path = fixture_path

    def complete(self, messages: list[dict]) -> str:
        h = request_hash(messages)
        if h not in self._responses:
            raise LlmDfaError(
                f"fixture {self.fixture_path} has no response for request hash {h}"
            )
        return self._responses[h]


class HttpChatClient:
    """Minimal chat-completion client: POST {model, messages, temperature}."""

    def __init__(self, cfg: LlmClientConfig, timeout: float = 60.0):
        self.cfg = cfg
        self.timeout = timeout

    def complete(self, messages: list[dict]) -> str:
        import requests

        payload = {
            "model": self.cfg.model,
            "messages": messages,
            "temperature": self.cfg.temperature,
        }
        try:
            resp = requests.post(self.cfg.endpoint, json=payload, timeout=self.timeout)
            resp.raise_for_status()
            body = resp.json()
        except Exception as exc:
            raise LlmDfaError(f"chat endpoint failed: {exc}") from exc
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise LlmDfaError(f"malformed chat response: {body!r}") from exc


def _make_client(cfg: LlmClientConfig):
    if cfg.mode == "replay":
        return ReplayClient(cfg.fixture_path)
    if not cfg.endpoint:
        raise LlmDfaError("live mode requires an endpoint")
    return HttpChatClient(cfg)


_JSON_CANDIDATE_RE = re.compile(r"\{")


def parse_llm_response(text: str) -> Dfa:
    """Extract and parse the first well-formed DFA-JSON object in a reply.

    Tolerates surrounding prose and markdown fences. If several candidate
    objects exist, the first one that parses wins and a warning is
    emitted for the rest.
    """
    decoder = json.JSONDecoder()
    candidates = []
    consumed_until = -1
    for match in _JSON_CANDIDATE_RE.finditer(text):
        if match.start() < consumed_until:
            continue  # nested object inside an already-parsed candidate
        try:
            doc, end = decoder.raw_decode(text, match.start())
        except json.JSONDecodeError:
            continue
        if isinstance(doc, dict):
            candidates.append(doc)
            consumed_until = end
    if not candidates:
        raise DfaError("no_json", "response contains no JSON object")

    first_error = None
    for doc in candidates:
        try:
            dfa = dfa_from_dict(doc)
        except DfaError as exc:
            if first_error is None:
                first_error = exc
            continue
        if len(candidates) > 1:
            warnings.warn(
                f"response contained {len(candidates)} JSON objects; using the first valid one"
            )
        return dfa
    raise first_error


def _check_vocabulary(dfa: Dfa, spec: PromptSpec) -> None:
    allowed = set(spec.vocabulary) | {"none"}
    extra = [s for s in dfa.alphabet if s not in allowed]
    if extra:
        raise DfaError("unknown_symbol", f"alphabet symbols outside vocabulary: {extra}")


def generate_dfa(spec: PromptSpec, cfg: LlmClientConfig) -> tuple[Dfa, str, dict]:
    """Generate, parse, and validate a task automaton.

    Returns (dfa, raw response, provenance). Parse or validation failures
    trigger a corrective re-prompt carrying the error text, up to
    ``MAX_ATTEMPTS`` total attempts; the returned automaton always passes
    validation with zero errors.
    """
    client = _make_client(cfg)
    prompt = build_prompt(spec)
    messages = [{"role": "user", "content": prompt}]
    provenance = {
        "prompt_sha256": hashlib.sha256(prompt.encode()).hexdigest(),
        "model": cfg.model,
        "mode": cfg.mode,
        "attempts": 0,
        "errors": [],
    }

    last_error = "unknown error"
    for attempt in range(MAX_ATTEMPTS):
        provenance["attempts"] += 1
        try:
            raw = client.complete(messages)
        except LlmDfaError as exc:
            if attempt == 0:
                raise
            raise LlmDfaError(
                f"re-prompt failed ({exc}); last validation error: {last_error}"
            ) from exc
        try:
            dfa = parse_llm_response(raw)
            _check_vocabulary(dfa, spec)
            report = validate_dfa(dfa)
            if report.errors:
                raise DfaError(
                    "validation_failed",
                    "; ".join(f"{code}: {msg}" for code, msg in report.errors),
                )
        except DfaError as exc:
            last_error = str(exc)
            provenance["errors"].append(last_error)
            messages.append({"role": "assistant", "content": raw})
            messages.append({
                "role": "user",
                "content": (
                    f"That automaton was invalid: {last_error}. "
                    "Return a corrected JSON object following the schema exactly."
                ),
            })
            continue
        provenance["raw_response"] = raw
        return dfa, raw, provenance

    raise LlmDfaError(
        f"no valid automaton after {MAX_ATTEMPTS} attempts; last error: {last_error}"
    )
