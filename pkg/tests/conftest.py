import json

import pytest

from lantern.envs import ENV_SPECS, EnvSpec, GridEnv, Station


DUNGEON_DOC = json.dumps({
    "states": ["w0", "w1", "w2", "w3", "w4"],
    "alphabet": ["key", "shield", "sword", "dragon", "none"],
    "initial": "w0",
    "accepting": ["w4"],
    "transitions": [
        {"from": "w0", "symbol": "key", "to": "w1"},
        {"from": "w1", "symbol": "shield", "to": "w2"},
        {"from": "w2", "symbol": "sword", "to": "w3"},
        {"from": "w3", "symbol": "dragon", "to": "w4"},
    ],
    "descriptions": {
        "w0": "start mission",
        "w1": "collect key",
        "w2": "collect shield",
        "w3": "obtain sword from chest",
        "w4": "defeat dragon (goal)",
    },
})


@pytest.fixture
def dungeon_doc() -> str:
    return DUNGEON_DOC


def tiny_env(
    width: int,
    height: int,
    items: dict[tuple[int, int], str],
    caps: dict[str, int] | None = None,
    one_shot: tuple[str, ...] | None = None,
    renewable: tuple[str, ...] = (),
    stations: tuple[Station, ...] = (),
    agent_start: tuple[int, int] = (0, 0),
    name: str = "tiny",
) -> GridEnv:
    """Hand-placed environment for oracle-style tests."""
    tags = tuple(dict.fromkeys(items.values()))
    pickup_tags = tuple(t for t in tags if t not in {s.tag for s in stations})
    if one_shot is None:
        one_shot = tuple(t for t in pickup_tags if t not in renewable)
    produced = tuple(t for st in stations for t, _ in st.produces)
    item_types = tuple(dict.fromkeys(tuple(one_shot) + tuple(renewable) + produced))
    caps = caps or {t: 1 for t in item_types}
    return GridEnv(
        name=name,
        width=width,
        height=height,
        item_layout=dict(items),
        agent_start=agent_start,
        item_types=item_types,
        inventory_caps=caps,
        one_shot=frozenset(one_shot),
        renewable=frozenset(renewable),
        stations={st.tag: st for st in stations},
        label_vocab=frozenset(tags),
        step_penalty=-0.001,
        rng_seed=0,
    )
