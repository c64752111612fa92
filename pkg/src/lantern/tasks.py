"""Built-in task automata and natural-language task strings for the six
bundled environments.

Collection tasks are strict event chains; the cyclic tasks repeat a
gather/convert/deliver pattern, with the cycle count sizing the
automaton. Every task ends in a single accepting state whose description
carries a "(goal)" marker.
"""

from __future__ import annotations

from .dfa import Dfa, chain_dfa

TASK_DESCRIPTIONS = {
    "dungeon_quest": (
        "Navigate dungeon to collect key and shield, then open chest for "
        "sword, finally defeat dragon"
    ),
    "rescue_mission": (
        "Find the map, locate the victim, get the medkit, and return to base"
    ),
    "treasure_hunt": (
        "Find the clue, decode it, get the shovel, and dig up the treasure"
    ),
    "blind_craftsman": (
        "Gather wood, craft products at the bench, and deliver them to the "
        "market, repeatedly"
    ),
    "mining_operation": (
        "Collect ore, smelt it into ingots, and deliver them to the depot, "
        "repeatedly"
    ),
    "farming_operation": (
        "Plant seeds, then repeatedly harvest crops and deliver them to the market"
    ),
}

DEFAULT_CYCLES = {"blind_craftsman": 3, "mining_operation": 5, "farming_operation": 3}


def default_dfa(env_name: str, cycles: int | None = None) -> Dfa:
    """Task automaton for an environment; ``cycles`` resizes cyclic tasks."""
    if env_name == "dungeon_quest":
        return chain_dfa(
            ["key", "shield", "sword", "dragon"],
            [
                "start mission",
                "collect key",
                "collect shield",
                "obtain sword from chest",
                "defeat dragon (goal)",
            ],
        )
    if env_name == "rescue_mission":
        return chain_dfa(
            ["map", "victim", "medkit", "base"],
            [
                "start mission",
                "find the area map",
                "reach the trapped victim",
                "grab the first aid kit",
                "return to base",
            ],
        )
    if env_name == "treasure_hunt":
        return chain_dfa(
            ["clue", "decode", "shovel", "treasure"],
            [
                "start mission",
                "find the buried clue",
                "decode the clue",
                "grab the shovel",
                "dig up the treasure",
            ],
        )
    n = cycles if cycles is not None else DEFAULT_CYCLES.get(env_name, 1)
    if n < 1:
        raise ValueError("cycles must be >= 1")
    if env_name == "blind_craftsman":
        symbols = ["wood", "wood", "craft", "deliver"] * n
        descs = ["start shift"]
        for _ in range(n):
            descs += [
                "collect raw material (wood)",
                "collect raw material (wood)",
                "convert raw material into goods at the station (craft)",
                "deliver finished goods (market)",
            ]
        descs[-1] = "deliver final goods (market)"
        return chain_dfa(symbols, descs, alphabet=["wood", "craft", "deliver"])
    if env_name == "mining_operation":
        symbols = ["ore", "smelt", "deliver"] * n
        descs = ["start shift"]
        for _ in range(n):
            descs += [
                "collect raw material (ore)",
                "convert raw material into goods at the station (smelt)",
                "deliver finished goods (depot)",
            ]
        descs[-1] = "deliver final goods (depot)"
        return chain_dfa(symbols, descs, alphabet=["ore", "smelt", "deliver"])
    if env_name == "farming_operation":
        symbols = ["plant"] + ["crop", "deliver"] * n
        descs = ["begin the growing season", "plant the seeds"]
        for _ in range(n):
            descs += ["collect raw material (crops)", "deliver finished goods (market)"]
        descs[-1] = "deliver final goods (market)"
        return chain_dfa(symbols, descs, alphabet=["plant", "crop", "deliver"])
    raise ValueError(f"unknown environment {env_name!r}")
