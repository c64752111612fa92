"""Discrete gridworld environments with event-labeling functions.

Six tasks share one mechanic set: an agent moves on a W x H grid and
interacts with tagged cells. Pickups add to a capped inventory; stations
consume inventory to produce items (craft/smelt) or to register a
delivery. Every successful interaction emits exactly one event symbol
(the cell's tag), which the labeling function exposes to the automaton
layer; every other transition emits "none".

Dynamics are fully deterministic. Layouts are procedural from the
environment seed so experiment configs pin them exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .dfa import NO_EVENT

ACTIONS = ("up", "down", "left", "right", "interact")
N_ACTIONS = len(ACTIONS)
INTERACT = 4
_MOVES = ((0, -1), (0, 1), (-1, 0), (1, 0))

Cell = tuple[int, int]


class EnvState(NamedTuple):
    agent: Cell
    inventory: tuple[int, ...]        # aligned with GridEnv.item_types
    consumed: frozenset[Cell]         # one-shot cells used up
    depleted: frozenset[Cell]         # renewable cells awaiting renewal
    steps: int

    def key(self) -> tuple:
        """Identity without the step counter (Q-table / enumeration key)."""
        return (self.agent, self.inventory, self.consumed, self.depleted)


@dataclass(frozen=True)
class Station:
    """Interactable cell that converts inventory when its recipe is met."""

    tag: str                      # cell tag == emitted event symbol
    consumes: tuple[tuple[str, int], ...]
    produces: tuple[tuple[str, int], ...] = ()
    renews: bool = False          # clears the depleted set on success


@dataclass(frozen=True)
class GridEnv:
    name: str
    width: int
    height: int
    item_layout: dict[Cell, str]
    agent_start: Cell
    item_types: tuple[str, ...]   # inventory vector order
    inventory_caps: dict[str, int]
    one_shot: frozenset[str]
    renewable: frozenset[str]
    stations: dict[str, Station]
    label_vocab: frozenset[str]
    step_penalty: float
    rng_seed: int

    def item_index(self, tag: str) -> int:
        return self.item_types.index(tag)


class EnvError(ValueError):
    pass


@dataclass(frozen=True)
class EnvSpec:
    width: int
    height: int
    items: tuple[tuple[str, int], ...]      # (tag, cell count), placement order
    caps: tuple[tuple[str, int], ...]       # includes station products
    one_shot: tuple[str, ...]
    renewable: tuple[str, ...]
    stations: tuple[Station, ...] = ()


ENV_SPECS: dict[str, EnvSpec] = {
    # Sequential one-shot collection chains.
    "dungeon_quest": EnvSpec(
        width=20, height=20,
        items=(("key", 1), ("shield", 1), ("sword", 1), ("dragon", 1)),
        caps=(("key", 1), ("shield", 1), ("sword", 1), ("dragon", 1)),
        one_shot=("key", "shield", "sword", "dragon"),
        renewable=(),
    ),
    "rescue_mission": EnvSpec(
        width=5, height=5,
        items=(("map", 1), ("victim", 1), ("medkit", 1), ("base", 1)),
        caps=(("map", 1), ("victim", 1), ("medkit", 1), ("base", 1)),
        one_shot=("map", "victim", "medkit", "base"),
        renewable=(),
    ),
    "treasure_hunt": EnvSpec(
        width=6, height=6,
        items=(("clue", 1), ("decode", 1), ("shovel", 1), ("treasure", 1)),
        caps=(("clue", 1), ("decode", 1), ("shovel", 1), ("treasure", 1)),
        one_shot=("clue", "decode", "shovel", "treasure"),
        renewable=(),
    ),
    # Gather -> convert -> deliver cycles with renewable resources.
    "blind_craftsman": EnvSpec(
        width=25, height=25,
        items=(("wood", 4), ("craft", 1), ("deliver", 1)),
        caps=(("wood", 2), ("product", 3)),
        one_shot=(),
        renewable=("wood",),
        stations=(
            Station("craft", consumes=(("wood", 2),), produces=(("product", 1),), renews=True),
            Station("deliver", consumes=(("product", 1),), produces=(), renews=False),
        ),
    ),
    "mining_operation": EnvSpec(
        width=7, height=7,
        items=(("ore", 3), ("smelt", 1), ("deliver", 1)),
        caps=(("ore", 1), ("ingot", 1)),
        one_shot=(),
        renewable=("ore",),
        stations=(
            Station("smelt", consumes=(("ore", 1),), produces=(("ingot", 1),), renews=True),
            Station("deliver", consumes=(("ingot", 1),), produces=(), renews=False),
        ),
    ),
    "farming_operation": EnvSpec(
        width=8, height=8,
        items=(("plant", 1), ("crop", 2), ("deliver", 1)),
        caps=(("plant", 1), ("crop", 1)),
        one_shot=("plant",),
        renewable=("crop",),
        stations=(
            Station("deliver", consumes=(("crop", 1),), produces=(), renews=True),
        ),
    ),
}

ENV_NAMES = tuple(ENV_SPECS)


def make_env(name: str, seed: int, size: int | None = None) -> GridEnv:
    """Instantiate an environment; ``size`` overrides both grid dimensions.

    Item cells are drawn at seeded fractional coordinates and snapped to
    the grid, so a size override yields a geometrically downscaled
    variant of the same layout, and environments sharing a seed place
    their i-th items at corresponding relative positions. Collisions
    (and the agent start) resolve to the next free cell in row-major
    order.
    """
    if name not in ENV_SPECS:
        raise EnvError(f"unknown environment {name!r}")
    spec = ENV_SPECS[name]
    width = size if size is not None else spec.width
    height = size if size is not None else spec.height
    agent_start = (0, 0)

    n_cells_needed = sum(count for _, count in spec.items)
    if n_cells_needed > width * height - 1:
        raise EnvError(
            f"{name}: {width}x{height} grid cannot hold {n_cells_needed} item cells"
        )

    rng = np.random.default_rng(seed)
    layout: dict[Cell, str] = {}
    for tag, count in spec.items:
        for _ in range(count):
            u, v = rng.random(), rng.random()
            cell = (min(int(u * width), width - 1), min(int(v * height), height - 1))
            while cell == agent_start or cell in layout:
                idx = (cell[1] * width + cell[0] + 1) % (width * height)
                cell = (idx % width, idx // width)
            layout[cell] = tag

    pickup_types = [t for t in spec.one_shot] + [t for t in spec.renewable]
    produced = [t for st in spec.stations for t, _ in st.produces]
    item_types = tuple(dict.fromkeys(pickup_types + produced))
    vocab = frozenset(t for t, _ in spec.items)

    return GridEnv(
        name=name,
        width=width,
        height=height,
        item_layout=layout,
        agent_start=agent_start,
        item_types=item_types,
        inventory_caps=dict(spec.caps),
        one_shot=frozenset(spec.one_shot),
        renewable=frozenset(spec.renewable),
        stations={st.tag: st for st in spec.stations},
        label_vocab=vocab,
        step_penalty=-0.001,
        rng_seed=seed,
    )


def initial_state(env: GridEnv) -> EnvState:
    return EnvState(
        agent=env.agent_start,
        inventory=(0,) * len(env.item_types),
        consumed=frozenset(),
        depleted=frozenset(),
        steps=0,
    )


def env_step(env: GridEnv, s: EnvState, action: int) -> tuple[EnvState, bool]:
    """Deterministic transition; invalid moves and failed interacts are no-ops.

    The returned flag reports environment-level termination, which none of
    the bundled tasks use (episodes end via the automaton or step caps).
    """
    if action != INTERACT:
        dx, dy = _MOVES[action]
        x = min(max(s.agent[0] + dx, 0), env.width - 1)
        y = min(max(s.agent[1] + dy, 0), env.height - 1)
        return s._replace(agent=(x, y), steps=s.steps + 1), False

    tag = env.item_layout.get(s.agent)
    if tag is None:
        return s._replace(steps=s.steps + 1), False

    if tag in env.stations:
        nxt = _apply_station(env, s, env.stations[tag])
    else:
        nxt = _apply_pickup(env, s, tag)
    return nxt._replace(steps=s.steps + 1), False


def _apply_pickup(env: GridEnv, s: EnvState, tag: str) -> EnvState:
    cell = s.agent
    if tag in env.one_shot and cell in s.consumed:
        return s
    if tag in env.renewable and cell in s.depleted:
        return s
    idx = env.item_index(tag)
    if s.inventory[idx] >= env.inventory_caps[tag]:
        return s
    inventory = s.inventory[:idx] + (s.inventory[idx] + 1,) + s.inventory[idx + 1:]
    consumed = s.consumed | {cell} if tag in env.one_shot else s.consumed
    depleted = s.depleted | {cell} if tag in env.renewable else s.depleted
    return s._replace(inventory=inventory, consumed=consumed, depleted=depleted)


def _apply_station(env: GridEnv, s: EnvState, station: Station) -> EnvState:
    inv = list(s.inventory)
    for tag, count in station.consumes:
        if inv[env.item_index(tag)] < count:
            return s
    for tag, count in station.produces:
        if inv[env.item_index(tag)] + count > env.inventory_caps[tag]:
            return s
    for tag, count in station.consumes:
        inv[env.item_index(tag)] -= count
    for tag, count in station.produces:
        inv[env.item_index(tag)] += count
    depleted = frozenset() if station.renews else s.depleted
    return s._replace(inventory=tuple(inv), depleted=depleted)


def label(env: GridEnv, s_prev: EnvState, action: int, s_next: EnvState) -> str:
    """Event symbol emitted by a transition; "none" when nothing happened.

    A successful interact is visible as any change in inventory, consumed,
    or depleted; the emitted symbol is the tag of the interacted cell.
    """
    if action != INTERACT:
        return NO_EVENT
    if (s_prev.inventory, s_prev.consumed, s_prev.depleted) == (
        s_next.inventory, s_next.consumed, s_next.depleted
    ):
        return NO_EVENT
    return env.item_layout[s_prev.agent]


def enumerate_states(env: GridEnv, bound: int = 2_000_000) -> list[EnvState]:
    """All states reachable from the initial state, step counters zeroed.

    Breadth-first closure under the five actions; raises ``EnvError`` once
    more than ``bound`` distinct states are seen.
    """
    start = initial_state(env)
    seen = {start.key(): start}
    queue = [start]
    while queue:
        state = queue.pop()
        for action in range(N_ACTIONS):
            nxt, _ = env_step(env, state, action)
            nxt = nxt._replace(steps=0)
            k = nxt.key()
            if k not in seen:
                if len(seen) >= bound:
                    raise EnvError(f"state enumeration exceeded bound {bound}")
                seen[k] = nxt
                queue.append(nxt)
    return list(seen.values())


def export_layout(env: GridEnv) -> dict:
    """JSON-ready snapshot of the layout for run provenance."""
    return {
        "name": env.name,
        "width": env.width,
        "height": env.height,
        "seed": env.rng_seed,
        "agent_start": list(env.agent_start),
        "items": {f"{x},{y}": tag for (x, y), tag in sorted(env.item_layout.items())},
        "caps": dict(sorted(env.inventory_caps.items())),
        "item_types": list(env.item_types),
    }


def iter_cells(env: GridEnv) -> Iterator[Cell]:
    for y in range(env.height):
        for x in range(env.width):
            yield (x, y)
