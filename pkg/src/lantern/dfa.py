"""Deterministic finite automata with natural-language state descriptions.

A task automaton is a tuple of states, an event alphabet, a deterministic
transition table, an initial state, a set of accepting states, and one
text description per state. Automata are parsed from a small JSON format
(see ``parse_dfa``) and are immutable after construction.

Transition tables may be partial in the document: any (state, symbol)
pair without a declared transition is a self-loop, which makes stepping
total. The symbol ``"none"`` is reserved for "no event" and is always a
member of the alphabet.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

NO_EVENT = "none"


class DfaError(ValueError):
    """Raised for malformed or inconsistent automaton documents."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


@dataclass(frozen=True)
class Dfa:
    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    transitions: dict[tuple[str, str], str]  # declared entries only
    initial: str
    accepting: frozenset[str]
    descriptions: dict[str, str]

    def step(self, state: str, symbol: str) -> str:
        """Advance one event; undeclared pairs self-loop."""
        if state not in self.descriptions:
            raise DfaError("unknown_state", f"state {state!r} not in automaton")
        if symbol not in self._symbols:
            raise DfaError("unknown_symbol", f"symbol {symbol!r} not in alphabet")
        return self.transitions.get((state, symbol), state)

    def is_accepting(self, state: str) -> bool:
        if state not in self.descriptions:
            raise DfaError("unknown_state", f"state {state!r} not in automaton")
        return state in self.accepting

    @property
    def _symbols(self) -> frozenset[str]:
        return frozenset(self.alphabet)


@dataclass
class DfaValidationReport:
    errors: list[tuple[str, str]] = field(default_factory=list)
    warnings: list[tuple[str, str]] = field(default_factory=list)
    reachable_states: set[str] = field(default_factory=set)
    accepting_reachable: bool = False

    @property
    def ok(self) -> bool:
        return not self.errors


def dfa_step(d: Dfa, state: str, symbol: str) -> str:
    return d.step(state, symbol)


def is_accepting(d: Dfa, state: str) -> bool:
    return d.is_accepting(state)


def parse_dfa(text: str) -> Dfa:
    """Parse a DFA-JSON document.

    Expected shape::

        {
          "states": ["w0", ...],
          "alphabet": ["key", ...],
          "initial": "w0",
          "accepting": ["w4"],
          "transitions": [{"from": "w0", "symbol": "key", "to": "w1"}, ...],
          "descriptions": {"w0": "start mission", ...}
        }

    ``"none"`` is appended to the alphabet if absent. States missing from
    ``descriptions`` get an empty description. Raises ``DfaError`` on
    malformed documents, duplicate ids, unknown symbols/states, or
    conflicting (nondeterministic) transitions.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DfaError("malformed_json", str(exc)) from exc
    return dfa_from_dict(doc)


def dfa_from_dict(doc: object) -> Dfa:
    if not isinstance(doc, dict):
        raise DfaError("malformed_document", "top level must be an object")

    states = _string_list(doc, "states")
    if len(set(states)) != len(states):
        raise DfaError("duplicate_state", "state ids must be unique")
    if not states:
        raise DfaError("missing_field", "at least one state is required")
    state_set = set(states)

    alphabet = _string_list(doc, "alphabet")
    if len(set(alphabet)) != len(alphabet):
        raise DfaError("duplicate_symbol", "alphabet symbols must be unique")
    if NO_EVENT not in alphabet:
        alphabet = alphabet + [NO_EVENT]
    symbol_set = set(alphabet)

    if "initial" not in doc:
        raise DfaError("missing_initial", "document lacks an initial state")
    initial = doc["initial"]
    if initial not in state_set:
        raise DfaError("unknown_state", f"initial state {initial!r} not declared")

    accepting = doc.get("accepting", [])
    if not isinstance(accepting, list):
        raise DfaError("bad_type", "accepting must be an array")
    for s in accepting:
        if s not in state_set:
            raise DfaError("unknown_state", f"accepting state {s!r} not declared")

    transitions: dict[tuple[str, str], str] = {}
    raw_transitions = doc.get("transitions", [])
    if not isinstance(raw_transitions, list):
        raise DfaError("bad_type", "transitions must be an array")
    for row in raw_transitions:
        if not isinstance(row, dict) or not {"from", "symbol", "to"} <= row.keys():
            raise DfaError("bad_type", f"transition row {row!r} needs from/symbol/to")
        src, sym, dst = row["from"], row["symbol"], row["to"]
        if src not in state_set:
            raise DfaError("unknown_state", f"transition source {src!r} not declared")
        if dst not in state_set:
            raise DfaError("unknown_state", f"transition target {dst!r} not declared")
        if sym not in symbol_set:
            raise DfaError("unknown_symbol", f"transition symbol {sym!r} not in alphabet")
        if (src, sym) in transitions:
            raise DfaError(
                "nondeterministic", f"duplicate transition for ({src!r}, {sym!r})"
            )
        transitions[(src, sym)] = dst

    raw_desc = doc.get("descriptions", {})
    if not isinstance(raw_desc, dict):
        raise DfaError("bad_type", "descriptions must be an object")
    for s, txt in raw_desc.items():
        if s not in state_set:
            raise DfaError("unknown_state", f"description for undeclared state {s!r}")
        if not isinstance(txt, str):
            raise DfaError("bad_type", f"description for {s!r} must be a string")
    descriptions = {s: raw_desc.get(s, "") for s in states}

    return Dfa(
        states=tuple(states),
        alphabet=tuple(alphabet),
        transitions=transitions,
        initial=initial,
        accepting=frozenset(accepting),
        descriptions=descriptions,
    )


def _string_list(doc: dict, key: str) -> list[str]:
    value = doc.get(key)
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise DfaError("bad_type" if key in doc else "missing_field",
                       f"{key} must be an array of strings")
    return value


def dfa_to_dict(d: Dfa) -> dict:
    """Inverse of ``dfa_from_dict``; only declared transitions are emitted."""
    return {
        "states": list(d.states),
        "alphabet": list(d.alphabet),
        "initial": d.initial,
        "accepting": sorted(d.accepting),
        "transitions": [
            {"from": src, "symbol": sym, "to": dst}
            for (src, sym), dst in d.transitions.items()
        ],
        "descriptions": {s: d.descriptions[s] for s in d.states},
    }


def serialize_dfa(d: Dfa) -> str:
    return json.dumps(dfa_to_dict(d), indent=2, ensure_ascii=False)


def validate_dfa(d: Dfa) -> DfaValidationReport:
    """Reachability and consistency report.

    Unreachable states are warnings; an accepting set with no reachable
    member is the error ``accepting_unreachable``. Determinism and
    totality hold by construction but are re-checked defensively.
    """
    report = DfaValidationReport()

    for (src, sym), dst in d.transitions.items():
        if src not in d.descriptions or dst not in d.descriptions:
            report.errors.append(("unknown_state", f"transition ({src}, {sym}) -> {dst}"))
        if sym not in d.alphabet:
            report.errors.append(("unknown_symbol", f"transition symbol {sym}"))

    seen = {d.initial}
    frontier = [d.initial]
    while frontier:
        state = frontier.pop()
        for sym in d.alphabet:
            nxt = d.transitions.get((state, sym), state)
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    report.reachable_states = seen

    for state in d.states:
        if state not in seen:
            report.warnings.append(("unreachable", f"state {state} is unreachable"))

    report.accepting_reachable = bool(d.accepting & seen)
    if not report.accepting_reachable:
        report.errors.append(
            ("accepting_unreachable", "no accepting state is reachable from the initial state")
        )
    return report


def chain_dfa(
    symbols: list[str],
    descriptions: list[str],
    alphabet: list[str] | None = None,
    state_prefix: str = "w",
) -> Dfa:
    """Build the linear automaton w0 -sym0-> w1 -sym1-> ... -> w[n].

    ``descriptions`` has one entry per state (len(symbols) + 1). The final
    state is the single accepting state. ``alphabet`` defaults to the
    distinct chain symbols.
    """
    if len(descriptions) != len(symbols) + 1:
        raise ValueError("need one description per state (len(symbols) + 1)")
    states = [f"{state_prefix}{i}" for i in range(len(symbols) + 1)]
    if alphabet is None:
        alphabet = list(dict.fromkeys(symbols))
    doc = {
        "states": states,
        "alphabet": alphabet,
        "initial": states[0],
        "accepting": [states[-1]],
        "transitions": [
            {"from": states[i], "symbol": sym, "to": states[i + 1]}
            for i, sym in enumerate(symbols)
        ],
        "descriptions": dict(zip(states, descriptions)),
    }
    return dfa_from_dict(doc)
