"""Product of a gridworld with a task automaton, plus progress shaping.

The product state couples an environment state with an automaton state.
Each step relabels the environment transition, advances the automaton,
and pays a three-part reward: a constant step penalty, a shaping bonus
for non-accepting automaton progress, and a terminal bonus on reaching
an accepting state. Self-loops earn only the penalty.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

from .dfa import Dfa
from .envs import EnvState, GridEnv, N_ACTIONS, env_step, initial_state, label


class ProductState(NamedTuple):
    env_state: EnvState
    auto_state: str

    def key(self) -> tuple:
        return (self.env_state.key(), self.auto_state)


@dataclass(frozen=True)
class ProductConfig:
    terminal_reward: float = 1.0
    transition_reward: float = 0.1
    step_penalty: float = -0.001
    episode_cap: int = 500


def initial_product_state(env: GridEnv, d: Dfa) -> ProductState:
    return ProductState(initial_state(env), d.initial)


def product_step(
    env: GridEnv, d: Dfa, cfg: ProductConfig, p: ProductState, action: int
) -> tuple[ProductState, float, bool]:
    """One product transition: (state', reward, done).

    ``done`` is true on acceptance or when the episode step cap is hit;
    callers that need to distinguish the two check ``is_accepting`` on the
    successor's automaton state.
    """
    s_next, _ = env_step(env, p.env_state, action)
    symbol = label(env, p.env_state, action, s_next)
    w_next = d.step(p.auto_state, symbol)

    accepted = w_next in d.accepting
    reward = cfg.step_penalty
    if accepted:
        reward += cfg.terminal_reward
    elif w_next != p.auto_state:
        reward += cfg.transition_reward

    done = accepted or s_next.steps >= cfg.episode_cap
    return ProductState(s_next, w_next), reward, done


def product_key_to_str(key: tuple) -> str:
    """Canonical string form of a product-state key, stable across runs."""
    (agent, inventory, consumed, depleted), omega = key
    return json.dumps(
        [list(agent), list(inventory), sorted(consumed), sorted(depleted), omega],
        separators=(",", ":"),
    )


def product_key_from_str(text: str) -> tuple:
    agent, inventory, consumed, depleted, omega = json.loads(text)
    env_key = (
        tuple(agent),
        tuple(inventory),
        frozenset(tuple(c) for c in consumed),
        frozenset(tuple(c) for c in depleted),
    )
    return (env_key, omega)


def enumerate_product_states(
    env: GridEnv, d: Dfa, bound: int = 2_000_000
) -> list[ProductState]:
    """Reachable product states (step counters zeroed); accepting states
    are included but not expanded."""
    cfg = ProductConfig(episode_cap=2**62)
    start = initial_product_state(env, d)
    seen = {start.key(): start}
    queue = [start]
    while queue:
        p = queue.pop()
        for action in range(N_ACTIONS):
            nxt, _, _ = product_step(env, d, cfg, p, action)
            nxt = ProductState(nxt.env_state._replace(steps=0), nxt.auto_state)
            k = nxt.key()
            if k not in seen:
                if len(seen) >= bound:
                    raise ValueError(f"product enumeration exceeded bound {bound}")
                seen[k] = nxt
                if nxt.auto_state not in d.accepting:
                    queue.append(nxt)
    return list(seen.values())
