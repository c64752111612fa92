import numpy as np
import pytest

from lantern.envs import (
    ENV_NAMES,
    EnvError,
    INTERACT,
    N_ACTIONS,
    Station,
    enumerate_states,
    env_step,
    initial_state,
    label,
    make_env,
)

from conftest import tiny_env


class TestMakeEnv:
    def test_rescue_layout(self):
        env = make_env("rescue_mission", 7)
        assert (env.width, env.height) == (5, 5)
        assert sorted(env.item_layout.values()) == ["base", "map", "medkit", "victim"]
        for cell in env.item_layout:
            assert 0 <= cell[0] < 5 and 0 <= cell[1] < 5
            assert cell != env.agent_start

    def test_craftsman_caps(self):
        env = make_env("blind_craftsman", 1)
        assert env.inventory_caps == {"wood": 2, "product": 3}

    def test_paper_dimensions(self):
        dims = {
            "dungeon_quest": 20, "blind_craftsman": 25, "rescue_mission": 5,
            "treasure_hunt": 6, "mining_operation": 7, "farming_operation": 8,
        }
        for name, side in dims.items():
            env = make_env(name, 0)
            assert (env.width, env.height) == (side, side)

    def test_seed_determinism(self):
        a = make_env("dungeon_quest", 3)
        b = make_env("dungeon_quest", 3)
        assert a.item_layout == b.item_layout
        c = make_env("dungeon_quest", 4)
        assert a.item_layout != c.item_layout

    def test_unknown_name(self):
        with pytest.raises(EnvError):
            make_env("volcano_base", 0)

    def test_size_override_too_small(self):
        with pytest.raises(EnvError):
            make_env("blind_craftsman", 0, size=2)

    def test_size_override(self):
        env = make_env("dungeon_quest", 0, size=10)
        assert (env.width, env.height) == (10, 10)


class TestStep:
    def test_wall_clamp(self):
        env = make_env("rescue_mission", 0)
        s = initial_state(env)
        assert s.agent == (0, 0)
        s2, _ = env_step(env, s, 2)  # left
        assert s2.agent == (0, 0)
        assert s2.steps == 1

    def test_pickup_single_item(self):
        # Rescue env, agent placed on the map cell: one interact adds the
        # item and marks the cell consumed; a second interact is a no-op.
        env = make_env("rescue_mission", 7)
        map_cell = next(c for c, t in env.item_layout.items() if t == "map")
        s = initial_state(env)._replace(agent=map_cell)
        s2, _ = env_step(env, s, INTERACT)
        assert s2.inventory[env.item_index("map")] == 1
        assert map_cell in s2.consumed
        s3, _ = env_step(env, s2, INTERACT)
        assert s3.inventory == s2.inventory
        assert s3.consumed == s2.consumed

    def test_wood_cap_blocks_pickup(self):
        env = make_env("blind_craftsman", 1)
        wood_cell = next(c for c, t in env.item_layout.items() if t == "wood")
        inv = [0] * len(env.item_types)
        inv[env.item_index("wood")] = 2
        s = initial_state(env)._replace(agent=wood_cell, inventory=tuple(inv))
        s2, _ = env_step(env, s, INTERACT)
        assert s2.inventory == s.inventory

    def test_craft_consumes_wood_and_renews(self):
        env = make_env("blind_craftsman", 1)
        bench = next(c for c, t in env.item_layout.items() if t == "craft")
        wood_cells = [c for c, t in env.item_layout.items() if t == "wood"]
        inv = [0] * len(env.item_types)
        inv[env.item_index("wood")] = 2
        s = initial_state(env)._replace(
            agent=bench, inventory=tuple(inv), depleted=frozenset(wood_cells[:2])
        )
        s2, _ = env_step(env, s, INTERACT)
        assert s2.inventory[env.item_index("wood")] == 0
        assert s2.inventory[env.item_index("product")] == 1
        assert s2.depleted == frozenset()

    def test_craft_needs_full_wood(self):
        env = make_env("blind_craftsman", 1)
        bench = next(c for c, t in env.item_layout.items() if t == "craft")
        s = initial_state(env)._replace(agent=bench)
        s2, _ = env_step(env, s, INTERACT)
        assert s2.inventory == s.inventory

    def test_deliver_decrements_product(self):
        env = make_env("blind_craftsman", 1)
        market = next(c for c, t in env.item_layout.items() if t == "deliver")
        inv = [0] * len(env.item_types)
        inv[env.item_index("product")] = 2
        s = initial_state(env)._replace(agent=market, inventory=tuple(inv))
        s2, _ = env_step(env, s, INTERACT)
        assert s2.inventory[env.item_index("product")] == 1


class TestLabel:
    def test_first_pickup_emits_tag(self):
        env = make_env("rescue_mission", 7)
        map_cell = next(c for c, t in env.item_layout.items() if t == "map")
        s = initial_state(env)._replace(agent=map_cell)
        s2, _ = env_step(env, s, INTERACT)
        assert label(env, s, INTERACT, s2) == "map"

    def test_movement_emits_none(self):
        env = make_env("rescue_mission", 7)
        s = initial_state(env)
        s2, _ = env_step(env, s, 1)
        assert label(env, s, 1, s2) == "none"

    def test_scripted_trajectory_event_log(self):
        # A 1x5 corridor with two items; walk right and interact along the
        # way. The expected log is computed by an independent simulation
        # of the pickup rules (cell tag emitted on first success only).
        env = tiny_env(5, 1, {(1, 0): "gem", (3, 0): "gem"}, caps={"gem": 2})
        script = [3, INTERACT, INTERACT, 3, 3, INTERACT, 3, INTERACT, INTERACT, 2]

        expected = []
        pos, taken = 0, set()
        for a in script:
            if a == 3:
                pos = min(pos + 1, 4)
                expected.append("none")
            elif a == 2:
                pos = max(pos - 1, 0)
                expected.append("none")
            else:
                if (pos, 0) in {(1, 0), (3, 0)} and (pos, 0) not in taken:
                    taken.add((pos, 0))
                    expected.append("gem")
                else:
                    expected.append("none")

        s = initial_state(env)
        got = []
        for a in script:
            s2, _ = env_step(env, s, a)
            got.append(label(env, s, a, s2))
            s = s2
        assert got == expected
        assert got.count("gem") == 2

    def test_label_in_vocab_under_fuzz(self):
        env = make_env("mining_operation", 2)
        rng = np.random.default_rng(0)
        s = initial_state(env)
        for _ in range(2000):
            a = int(rng.integers(N_ACTIONS))
            s2, _ = env_step(env, s, a)
            assert label(env, s, a, s2) in env.label_vocab | {"none"}
            s = s2


class TestEnumerate:
    def test_tiny_count_by_construction(self):
        # 3x3 grid, one one-shot item: every cell is reachable and the
        # item is either available (inventory 0) or consumed (inventory
        # 1), giving 9 * 2 = 18 reachable states. Inventory and consumed
        # move in lockstep for one-shot items, so no further combinations
        # are reachable.
        env = tiny_env(3, 3, {(2, 2): "key"})
        states = enumerate_states(env)
        assert len(states) == 18
        assert len({s.key() for s in states}) == 18

    def test_single_cell_no_items(self):
        env = tiny_env(1, 1, {})
        assert len(enumerate_states(env)) == 1

    def test_bound_guard(self):
        env = make_env("blind_craftsman", 0)
        with pytest.raises(EnvError):
            enumerate_states(env, bound=50)


class TestInvariants:
    @pytest.mark.parametrize("name", ENV_NAMES)
    def test_determinism_and_caps(self, name):
        env = make_env(name, 5, size=6 if name == "blind_craftsman" else None)
        rng = np.random.default_rng(42)
        actions = [int(rng.integers(N_ACTIONS)) for _ in range(2000)]

        def run():
            s = initial_state(env)
            trace = [s]
            for a in actions:
                s, _ = env_step(env, s, a)
                trace.append(s)
            return trace

        t1, t2 = run(), run()
        assert t1 == t2
        for prev, cur in zip(t1, t1[1:]):
            for tag in env.item_types:
                assert cur.inventory[env.item_index(tag)] <= env.inventory_caps[tag]
            assert prev.consumed <= cur.consumed  # consumption is monotone


class TestStationEdgeCases:
    def test_produce_blocked_at_cap(self):
        station = Station("mix", consumes=(("dust", 1),), produces=(("potion", 1),))
        env = tiny_env(
            2, 1, {(1, 0): "mix"}, stations=(station,),
            caps={"dust": 1, "potion": 1}, one_shot=(), renewable=("dust",),
        )
        inv_full = (1, 1)  # dust and potion both at cap
        s = initial_state(env)._replace(agent=(1, 0), inventory=inv_full)
        s2, _ = env_step(env, s, INTERACT)
        assert s2.inventory == inv_full
