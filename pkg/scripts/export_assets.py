#!/usr/bin/env python3
"""Regenerate the checked-in asset files: task DFA documents, the dungeon
LLM replay fixture, and example experiment configs.

Run from the repository root: python3 scripts/export_assets.py
"""

import json
from pathlib import Path

from lantern.dfa import serialize_dfa
from lantern.envs import make_env
from lantern.llm_dfa import PromptSpec, build_prompt, request_hash
from lantern.tasks import TASK_DESCRIPTIONS, default_dfa

ROOT = Path(__file__).resolve().parent.parent
ASSETS = ROOT / "assets"


def dungeon_fixture() -> dict:
    """Replay fixture for the dungeon task: one canned chat response
    wrapping the 5-state chain automaton in typical LLM prose."""
    spec = PromptSpec(
        task_description=TASK_DESCRIPTIONS["dungeon_quest"],
        vocabulary=tuple(sorted(make_env("dungeon_quest", 0).label_vocab)),
    )
    prompt = build_prompt(spec)
    doc = json.dumps(
        json.loads(serialize_dfa(default_dfa("dungeon_quest"))), indent=2
    )
    response = (
        "Here is the task automaton. The milestones are strictly ordered, "
        "so each event advances a linear chain of progress states.\n\n"
        "```json\n" + doc + "\n```\n\n"
        "The automaton starts in w0 and accepts in w4 once the dragon is defeated."
    )
    h = request_hash([{"role": "user", "content": prompt}])
    return {h: response}


def write_dfas() -> None:
    out = ASSETS / "dfas"
    out.mkdir(parents=True, exist_ok=True)
    for name in TASK_DESCRIPTIONS:
        (out / f"{name}.json").write_text(serialize_dfa(default_dfa(name)) + "\n")
    # Desk-scale craftsman: two gather/craft/deliver rounds instead of three.
    (out / "blind_craftsman_desk.json").write_text(
        serialize_dfa(default_dfa("blind_craftsman", cycles=2)) + "\n"
    )


def write_fixtures() -> None:
    out = ASSETS / "fixtures"
    out.mkdir(parents=True, exist_ok=True)
    (out / "llm_dungeon_v1.json").write_text(
        json.dumps(dungeon_fixture(), indent=2, sort_keys=True) + "\n"
    )


def write_example_configs() -> None:
    out = ASSETS / "configs"
    out.mkdir(parents=True, exist_ok=True)
    desk_dungeon = {
        "target_env": "dungeon_quest",
        "size": 10,
        "env_seed": 0,
        "dfa": {"mode": "file", "path": "../dfas/dungeon_quest.json"},
        "packs": [],
        "methods": ["no_transfer", "lantern"],
        "seeds": [1, 2, 3, 4, 5],
        "learner": {
            "alpha": 0.6, "gamma": 0.95, "epsilon0": 1.0,
            "epsilon_decay": 0.995, "epsilon_min": 0.05,
            "episodes": 800, "max_steps": 300,
        },
        "gate": {"eta": 0.01, "k_exp": 5.0, "k_sem": 5.0,
                 "theta_exp": 0.5, "theta_sem": 0.3},
        "method_params": {"lambda_ad": 0.15, "lambda_pd": 0.7, "m": 3, "rho": 0.99},
        "out_dir": "../../out/desk_dungeon",
        "plot": True,
    }
    (out / "desk_dungeon.json").write_text(
        json.dumps(desk_dungeon, indent=2, sort_keys=True) + "\n"
    )


if __name__ == "__main__":
    write_dfas()
    write_fixtures()
    write_example_configs()
    print(f"assets regenerated under {ASSETS}")
