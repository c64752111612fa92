import math
from collections import deque

import numpy as np
import pytest

from lantern.dfa import chain_dfa
from lantern.envs import N_ACTIONS, make_env
from lantern.product import (
    ProductConfig,
    ProductState,
    enumerate_product_states,
    initial_product_state,
    product_step,
)
from lantern.qlearn import (
    LearnerConfig,
    QTable,
    greedy_rollout,
    load_qtable,
    plain_update,
    save_qtable,
    select_action,
    softmax_row,
    td_error,
    train_teacher,
    value_iteration,
)
from lantern.tasks import default_dfa

from conftest import tiny_env


def shortest_accepting_path(env, dfa) -> int:
    """Independent BFS oracle over the product graph (unit edge costs)."""
    cfg = ProductConfig(episode_cap=2**62)
    start = initial_product_state(env, dfa)
    dist = {start.key(): 0}
    queue = deque([start])
    while queue:
        p = queue.popleft()
        for a in range(N_ACTIONS):
            nxt, _, _ = product_step(env, dfa, cfg, p, a)
            nxt = ProductState(nxt.env_state._replace(steps=0), nxt.auto_state)
            k = nxt.key()
            if k in dist:
                continue
            dist[k] = dist[p.key()] + 1
            if nxt.auto_state in dfa.accepting:
                return dist[k]
            queue.append(nxt)
    raise AssertionError("no accepting path")


class TestTdError:
    def test_terminal_on_empty_table(self):
        q = QTable()
        cfg = LearnerConfig()
        assert td_error(q, cfg, "p", 0, 1.0, "p2", True) == 1.0

    def test_hand_arithmetic(self):
        # r + gamma * max_a' q(p',a') - q(p,a) = 0 + 0.95*0.5 - 0.5
        q = QTable()
        cfg = LearnerConfig(gamma=0.95)
        q.add("p", 0, 0.5)
        q.add("p2", 3, 0.5)
        expected = 0.0 + 0.95 * 0.5 - 0.5
        assert td_error(q, cfg, "p", 0, 0.0, "p2", False) == pytest.approx(expected, abs=1e-15)
        assert expected == pytest.approx(-0.025)

    def test_zero_everywhere(self):
        assert td_error(QTable(), LearnerConfig(), "p", 0, 0.0, "p2", False) == 0.0


class TestPlainUpdate:
    def test_single_step(self):
        q = QTable()
        plain_update(q, LearnerConfig(alpha=0.5), "p", 0, 1.0)
        assert q.value("p", 0) == 0.5
        assert q.visits("p", 0) == 1

    def test_two_updates_toward_unit_target(self):
        # Closed form after n updates toward target 1: 1 - (1 - alpha)^n.
        q = QTable()
        cfg = LearnerConfig(alpha=0.5)
        for _ in range(2):
            delta = td_error(q, cfg, "p", 0, 1.0, None, True)
            plain_update(q, cfg, "p", 0, delta)
        assert q.value("p", 0) == pytest.approx(1 - (1 - 0.5) ** 2)
        assert q.value("p", 0) == pytest.approx(0.75)

    def test_zero_delta_is_noop(self):
        q = QTable()
        q.add("p", 1, 0.3)
        plain_update(q, LearnerConfig(), "p", 1, 0.0)
        assert q.value("p", 1) == 0.3


class TestSelectAction:
    def test_greedy_picks_argmax(self):
        q = QTable()
        for a, v in enumerate([0.0, 2.0, 1.0, 0.0, 0.0]):
            if v:
                q.add("p", a, v)
        rng = np.random.default_rng(0)
        assert select_action(q, "p", 0.0, rng) == 1

    def test_tie_breaks_to_lowest_index(self):
        rng = np.random.default_rng(0)
        assert select_action(QTable(), "p", 0.0, rng) == 0

    def test_uniform_when_fully_exploring(self):
        rng = np.random.default_rng(123)
        counts = [0] * N_ACTIONS
        n = 100_000
        for _ in range(n):
            counts[select_action(QTable(), "p", 1.0, rng)] += 1
        expected = n / N_ACTIONS
        chi2 = sum((c - expected) ** 2 / expected for c in counts)
        assert chi2 < 40.0  # df=4; far beyond any plausible p-value cutoff


class TestTrainTeacher:
    def test_zero_episodes(self):
        env = make_env("rescue_mission", 7)
        dfa = default_dfa("rescue_mission")
        q, metrics = train_teacher(env, dfa, LearnerConfig(episodes=0))
        assert len(q) == 0
        assert metrics.n_episodes == 0

    def test_seed_determinism(self):
        env = make_env("rescue_mission", 7)
        dfa = default_dfa("rescue_mission")
        cfg = LearnerConfig(episodes=60, max_steps=120, seed=5)
        q1, m1 = train_teacher(env, dfa, cfg)
        q2, m2 = train_teacher(env, dfa, cfg)
        assert q1._rows == q2._rows
        assert m1.rewards == m2.rewards
        assert m1.epsilons == m2.epsilons

    def test_rescue_teacher_reaches_goal_quickly(self):
        env = make_env("rescue_mission", 7)
        dfa = default_dfa("rescue_mission")
        cfg = LearnerConfig(alpha=0.6, gamma=0.95, episodes=600, max_steps=150, seed=1)
        q, _ = train_teacher(env, dfa, cfg)
        pcfg = ProductConfig(episode_cap=150)
        trajectory, _, accepted = greedy_rollout(env, dfa, q, pcfg)
        optimal = shortest_accepting_path(env, dfa)
        steps = len(trajectory) - 1
        assert accepted
        assert optimal <= steps <= 40

    def test_q_values_bounded(self):
        env = make_env("rescue_mission", 7)
        dfa = default_dfa("rescue_mission")
        cfg = LearnerConfig(episodes=200, max_steps=150, seed=2)
        q, _ = train_teacher(env, dfa, cfg)
        r_max = 1.0 + 0.1 + 0.001
        bound = r_max / (1 - cfg.gamma)
        lo, hi = q.min_max()
        assert -bound <= lo <= hi <= bound


class TestValueIteration:
    def test_single_cell_terminal(self):
        env = tiny_env(1, 1, {(0, 0): "x"})
        dfa = chain_dfa(["x"], ["go", "done (goal)"])
        cfg = LearnerConfig(gamma=0.95)
        pcfg = ProductConfig(step_penalty=0.0)
        vi = value_iteration(env, dfa, cfg, pcfg)
        start = initial_product_state(env, dfa).key()
        assert vi.q(start, 4) == pytest.approx(1.0, abs=1e-9)
        # moving clamps in place; its value discounts the interact payoff
        assert vi.q(start, 0) == pytest.approx(0.95, abs=1e-9)

    def test_corridor_discounted_path(self):
        # 3x3, item two moves right of the start: optimal value is
        # gamma^(d-1) with d = 3 steps (right, right, interact).
        env = tiny_env(3, 3, {(2, 0): "x"})
        dfa = chain_dfa(["x"], ["go", "done (goal)"])
        cfg = LearnerConfig(gamma=0.95)
        pcfg = ProductConfig(step_penalty=0.0)
        vi = value_iteration(env, dfa, cfg, pcfg)
        start = initial_product_state(env, dfa).key()
        assert vi.q(start, 3) == pytest.approx(0.95 ** 2, abs=1e-9)
        assert vi.max_q(start) == pytest.approx(0.95 ** 2, abs=1e-9)

    def test_residuals_nonincreasing(self):
        env = tiny_env(3, 3, {(2, 2): "x"})
        dfa = chain_dfa(["x"], ["go", "done (goal)"])
        vi = value_iteration(env, dfa, LearnerConfig(gamma=0.95))
        for earlier, later in zip(vi.residuals, vi.residuals[1:]):
            assert later <= earlier + 1e-15

    def test_trained_greedy_matches_optimal_on_visited_states(self):
        env = tiny_env(3, 3, {(2, 1): "x"})
        dfa = chain_dfa(["x"], ["go", "done (goal)"])
        cfg = LearnerConfig(alpha=0.6, gamma=0.95, episodes=800, max_steps=60, seed=3)
        q, _ = train_teacher(env, dfa, cfg)
        vi = value_iteration(env, dfa, cfg)
        for key in q.keys():
            if q.visits(key) >= 50 and key in vi:
                assert vi.is_optimal_action(key, q.greedy_action(key))


class TestSoftmax:
    def test_uniform_row(self):
        assert softmax_row([0.0] * 5) == pytest.approx([0.2] * 5)

    def test_matches_direct_formula(self):
        row = [1.0, 0.0, 0.0, 0.0, 0.0]
        z = math.exp(1.0) + 4.0
        expected = [math.exp(1.0) / z] + [1.0 / z] * 4
        assert softmax_row(row) == pytest.approx(expected, abs=1e-12)

    def test_low_temperature_concentrates(self):
        probs = softmax_row([0.3, 0.2, 0.1, 0.0, 0.0], temperature=1e-3)
        assert probs[0] > 0.999

    def test_rejects_nonpositive_temperature(self):
        with pytest.raises(ValueError):
            softmax_row([0.0] * 5, temperature=0.0)


class TestQTableSerialization:
    def test_round_trip(self, tmp_path):
        env = make_env("rescue_mission", 7)
        dfa = default_dfa("rescue_mission")
        cfg = LearnerConfig(episodes=30, max_steps=80, seed=9)
        q, _ = train_teacher(env, dfa, cfg)
        path = tmp_path / "teacher.qtable.json"
        save_qtable(q, cfg, path)
        q2, cfg2 = load_qtable(path)
        assert cfg2 == cfg
        assert q2._rows == q._rows
        assert q2._visits == q._visits

    def test_rejects_unknown_format(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"format": "something-else"}')
        with pytest.raises(ValueError):
            load_qtable(path)
