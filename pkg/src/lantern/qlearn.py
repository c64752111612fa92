"""Tabular Q-learning on product states, plus an exact value-iteration oracle.

The Q-table is sparse: unseen keys read as 0.0. Action ties in greedy
selection break toward the lowest index, and exploration decays
multiplicatively per episode, so runs are bit-reproducible from a seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .dfa import Dfa
from .envs import GridEnv, N_ACTIONS
from .metrics import RunMetrics
from .product import (
    ProductConfig,
    ProductState,
    enumerate_product_states,
    initial_product_state,
    product_key_from_str,
    product_key_to_str,
    product_step,
)

QTABLE_FORMAT = "lantern-qtable/1"


@dataclass(frozen=True)
class LearnerConfig:
    alpha: float = 0.6
    gamma: float = 0.95
    epsilon0: float = 1.0
    epsilon_decay: float = 0.9995
    epsilon_min: float = 0.05
    episodes: int = 600
    max_steps: int = 300
    seed: int = 0


class QTable:
    """Sparse action-value table keyed by hashable product-state keys."""

    def __init__(self):
        self._rows: dict = {}
        self._visits: dict = {}

    def value(self, key, action: int) -> float:
        row = self._rows.get(key)
        return row[action] if row is not None else 0.0

    def row(self, key) -> list[float]:
        """Copy of the action-value row (zeros for unseen keys)."""
        row = self._rows.get(key)
        return list(row) if row is not None else [0.0] * N_ACTIONS

    def max_value(self, key) -> float:
        row = self._rows.get(key)
        return max(row) if row is not None else 0.0

    def greedy_action(self, key) -> int:
        row = self._rows.get(key)
        if row is None:
            return 0
        best, best_v = 0, row[0]
        for a in range(1, N_ACTIONS):
            if row[a] > best_v:
                best, best_v = a, row[a]
        return best

    def add(self, key, action: int, increment: float) -> None:
        row = self._rows.get(key)
        if row is None:
            row = [0.0] * N_ACTIONS
            self._rows[key] = row
            self._visits[key] = [0] * N_ACTIONS
        row[action] += increment
        self._visits[key][action] += 1

    def visits(self, key, action: int | None = None) -> int:
        v = self._visits.get(key)
        if v is None:
            return 0
        return sum(v) if action is None else v[action]

    def keys(self):
        return self._rows.keys()

    def __len__(self) -> int:
        return len(self._rows)

    def min_max(self) -> tuple[float, float]:
        lo, hi = 0.0, 0.0
        for row in self._rows.values():
            lo = min(lo, min(row))
            hi = max(hi, max(row))
        return lo, hi


def softmax_row(row, temperature: float = 1.0) -> list[float]:
    """Numerically stable softmax of an action-value row."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    top = max(row)
    exps = [math.exp((v - top) / temperature) for v in row]
    total = sum(exps)
    return [e / total for e in exps]


def td_error(
    q: QTable, cfg: LearnerConfig, key, action: int, reward: float, next_key, done: bool
) -> float:
    target = reward if done else reward + cfg.gamma * q.max_value(next_key)
    return target - q.value(key, action)


def plain_update(q: QTable, cfg: LearnerConfig, key, action: int, delta: float) -> None:
    q.add(key, action, cfg.alpha * delta)


def select_action(q: QTable, key, epsilon: float, rng: np.random.Generator) -> int:
    if rng.random() < epsilon:
        return int(rng.integers(N_ACTIONS))
    return q.greedy_action(key)


def train_teacher(
    env: GridEnv,
    dfa: Dfa,
    cfg: LearnerConfig,
    product_cfg: ProductConfig | None = None,
) -> tuple[QTable, RunMetrics]:
    """Plain epsilon-greedy Q-learning on the product MDP.

    Step-cap truncation bootstraps from the successor value; only
    acceptance is treated as terminal in the TD target.
    """
    pcfg = product_cfg or ProductConfig(episode_cap=cfg.max_steps)
    rng = np.random.default_rng(cfg.seed)
    q = QTable()
    metrics = RunMetrics(method="teacher", seed=cfg.seed)
    epsilon = cfg.epsilon0

    for _ in range(cfg.episodes):
        p = initial_product_state(env, dfa)
        key = p.key()
        total = 0.0
        accepted = False
        steps = 0
        while True:
            a = select_action(q, key, epsilon, rng)
            p_next, r, done = product_step(env, dfa, pcfg, p, a)
            next_key = p_next.key()
            accepted = p_next.auto_state in dfa.accepting
            delta = td_error(q, cfg, key, a, r, next_key, accepted)
            plain_update(q, cfg, key, a, delta)
            total += r
            steps = p_next.env_state.steps
            p, key = p_next, next_key
            if done:
                break
        metrics.add(total, steps, accepted, 1.0, epsilon)
        epsilon = max(cfg.epsilon_min, epsilon * cfg.epsilon_decay)

    return q, metrics


def greedy_rollout(
    env: GridEnv,
    dfa: Dfa,
    q: QTable,
    product_cfg: ProductConfig,
) -> tuple[list[ProductState], float, bool]:
    """Deterministic greedy trajectory from the initial product state."""
    p = initial_product_state(env, dfa)
    trajectory = [p]
    total = 0.0
    while True:
        a = q.greedy_action(p.key())
        p, r, done = product_step(env, dfa, product_cfg, p, a)
        trajectory.append(p)
        total += r
        if done:
            return trajectory, total, p.auto_state in dfa.accepting


class ValueIterationResult:
    """Exact optimal Q for an enumerable deterministic product MDP."""

    def __init__(self, states: list[ProductState], q: np.ndarray, residuals: list[float]):
        self.states = states
        self.q_array = q
        self.residuals = residuals
        self._index = {p.key(): i for i, p in enumerate(states)}

    def q(self, key, action: int) -> float:
        return float(self.q_array[self._index[key], action])

    def max_q(self, key) -> float:
        return float(self.q_array[self._index[key]].max())

    def greedy_action(self, key) -> int:
        return int(self.q_array[self._index[key]].argmax())

    def is_optimal_action(self, key, action: int, tol: float = 1e-9) -> bool:
        row = self.q_array[self._index[key]]
        return bool(row[action] >= row.max() - tol)

    def __contains__(self, key) -> bool:
        return key in self._index


def value_iteration(
    env: GridEnv,
    dfa: Dfa,
    cfg: LearnerConfig,
    product_cfg: ProductConfig | None = None,
    tol: float = 1e-10,
    max_sweeps: int = 100_000,
    bound: int = 2_000_000,
) -> ValueIterationResult:
    """Sweep Q <- r + gamma * max Q(s') to a sup-norm residual below tol.

    Treats the horizon as infinite (no step cap); acceptance is the only
    terminal event, matching how the learner bootstraps.
    """
    pcfg = ProductConfig(
        terminal_reward=(product_cfg or ProductConfig()).terminal_reward,
        transition_reward=(product_cfg or ProductConfig()).transition_reward,
        step_penalty=(product_cfg or ProductConfig()).step_penalty,
        episode_cap=2**62,
    )
    states = enumerate_product_states(env, dfa, bound=bound)
    index = {p.key(): i for i, p in enumerate(states)}
    n = len(states)

    next_idx = np.zeros((n, N_ACTIONS), dtype=np.int64)
    rewards = np.zeros((n, N_ACTIONS))
    terminal = np.zeros((n, N_ACTIONS), dtype=bool)
    for i, p in enumerate(states):
        if p.auto_state in dfa.accepting:
            terminal[i, :] = True  # absorbing; row never bootstrapped from
            continue
        for a in range(N_ACTIONS):
            nxt, r, _ = product_step(env, dfa, pcfg, p, a)
            nxt = ProductState(nxt.env_state._replace(steps=0), nxt.auto_state)
            next_idx[i, a] = index[nxt.key()]
            rewards[i, a] = r
            terminal[i, a] = nxt.auto_state in dfa.accepting

    q = np.zeros((n, N_ACTIONS))
    residuals: list[float] = []
    for _ in range(max_sweeps):
        v = q.max(axis=1)
        q_new = rewards + cfg.gamma * np.where(terminal, 0.0, v[next_idx])
        residual = float(np.abs(q_new - q).max())
        residuals.append(residual)
        q = q_new
        if residual < tol:
            return ValueIterationResult(states, q, residuals)
    raise RuntimeError(f"value iteration failed to reach tol={tol} in {max_sweeps} sweeps")


def save_qtable(q: QTable, cfg: LearnerConfig, path: str | Path) -> None:
    """JSON dump with a config header, keyed by the canonical product-key
    string form."""
    doc = {
        "format": QTABLE_FORMAT,
        "config": asdict(cfg),
        "rows": {product_key_to_str(k): row for k, row in q._rows.items()},
        "visits": {product_key_to_str(k): v for k, v in q._visits.items()},
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_qtable(path: str | Path) -> tuple[QTable, LearnerConfig]:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != QTABLE_FORMAT:
        raise ValueError(f"unsupported Q-table format {doc.get('format')!r}")
    q = QTable()
    for key_str, row in doc["rows"].items():
        key = product_key_from_str(key_str)
        q._rows[key] = list(row)
        q._visits[key] = list(doc["visits"][key_str])
    return q, LearnerConfig(**doc["config"])
