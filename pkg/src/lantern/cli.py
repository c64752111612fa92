"""Command-line experiment harness.

Verbs: ``train-teacher`` (train a source teacher and distill its pack),
``distill`` (re-distill from a saved Q-table), ``generate-dfa`` (produce
a task automaton from a description via live or replayed LLM calls),
``run`` (train target students under one or more methods and seeds), and
``compare`` (aggregate metrics CSVs into a summary table).

Configs are single JSON documents (see README). Exit codes: 0 success,
1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .dfa import Dfa, parse_dfa, serialize_dfa, validate_dfa
from .distill import distill_pack, load_pack, save_pack
from .envs import make_env
from .gating import GateParams
from .llm_dfa import LlmClientConfig, PromptSpec, generate_dfa
from .metrics import RunMetrics, SummaryTable, summarize_runs
from .product import ProductConfig
from .qlearn import LearnerConfig, load_qtable, save_qtable, train_teacher
from .semantic import BagOfWordsProvider, FixtureProvider, HttpEmbeddingProvider
from .tasks import TASK_DESCRIPTIONS, default_dfa
from .training import METHODS, MethodConfig, train_student

LLM_ENDPOINT_VAR = "LANTERN_LLM_ENDPOINT"
EMBED_ENDPOINT_VAR = "LANTERN_EMBED_ENDPOINT"

# Ablation aliases: extended method name -> (base method, config overrides)
METHOD_ALIASES = {
    "lantern_single_source": ("lantern", {"single_source": True}),
    "lantern_no_semantic_gating": ("lantern", {"no_semantic_gating": True}),
    "lantern_strategic_only": ("lantern", {"strategic_only": True}),
}


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are configuration errors
        raise ConfigError(message)


def load_config(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc


def config_hash(config: dict) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True).encode()
    ).hexdigest()[:16]


def resolve_dfa(spec: dict, base_dir: Path) -> Dfa:
    mode = spec.get("mode", "file")
    if mode == "file":
        path = Path(spec["path"])
        if not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise ConfigError(f"DFA file does not exist: {path}")
        dfa = parse_dfa(path.read_text())
    elif mode in ("llm-replay", "llm-live"):
        env_name = spec.get("env")
        task = spec.get("task") or (TASK_DESCRIPTIONS.get(env_name) if env_name else None)
        vocabulary = spec.get("vocabulary")
        if vocabulary is None and env_name:
            vocabulary = sorted(make_env(env_name, 0).label_vocab)
        if not task or not vocabulary:
            raise ConfigError("llm DFA modes need task text and a vocabulary (or an env)")
        prompt_spec = PromptSpec(task_description=task, vocabulary=tuple(vocabulary))
        if mode == "llm-replay":
            fixture = spec.get("fixture")
            if not fixture:
                raise ConfigError("llm-replay needs a fixture path")
            client_cfg = LlmClientConfig(mode="replay", fixture_path=str(base_dir / fixture)
                                         if not Path(fixture).is_absolute() else fixture)
        else:
            endpoint = spec.get("endpoint") or os.environ.get(LLM_ENDPOINT_VAR, "")
            if not endpoint:
                raise ConfigError(f"llm-live needs an endpoint (or ${LLM_ENDPOINT_VAR})")
            client_cfg = LlmClientConfig(
                mode="live", endpoint=endpoint,
                model=spec.get("model", ""),
                temperature=spec.get("temperature", 0.0),
            )
        dfa, _, _ = generate_dfa(prompt_spec, client_cfg)
    else:
        raise ConfigError(f"unknown DFA mode {mode!r}")

    report = validate_dfa(dfa)
    if report.errors:
        raise ConfigError(f"target automaton fails validation: {report.errors}")
    return dfa


def resolve_provider(spec: dict | None):
    spec = spec or {}
    mode = spec.get("mode", "fallback")
    if mode == "fallback":
        return None  # training builds the corpus-fitted fallback itself
    if mode == "fixture":
        return FixtureProvider.from_file(spec["path"])
    if mode == "http":
        endpoint = spec.get("endpoint") or os.environ.get(EMBED_ENDPOINT_VAR, "")
        if not endpoint:
            raise ConfigError(f"http embedding needs an endpoint (or ${EMBED_ENDPOINT_VAR})")
        return HttpEmbeddingProvider(endpoint)
    if mode == "hashed":
        return BagOfWordsProvider(hash_dim=int(spec.get("dim", 64)))
    raise ConfigError(f"unknown embedding mode {mode!r}")


def method_config(config: dict, method_name: str) -> MethodConfig:
    if method_name in METHOD_ALIASES:
        base, overrides = METHOD_ALIASES[method_name]
    elif method_name in METHODS:
        base, overrides = method_name, {}
    else:
        raise ConfigError(f"unknown method {method_name!r}")
    params = config.get("method_params", {})
    learner = LearnerConfig(**config.get("learner", {}))
    product = ProductConfig(**config["product"]) if "product" in config else None
    gate = GateParams(**config.get("gate", {}))
    return MethodConfig(
        method=base,
        learner=learner,
        product=product,
        gate=gate,
        lambda_ad=params.get("lambda_ad", 0.15),
        lambda_pd=params.get("lambda_pd", 0.7),
        m=params.get("m", 3),
        rho=params.get("rho", 0.99),
        **overrides,
    )


def _run_cell(config: dict, base_dir: str, method_name: str, seed: int) -> str:
    """Train one (method, seed) cell and write its CSV; returns the path."""
    base = Path(base_dir)
    env = make_env(
        config["target_env"], config.get("env_seed", 0), size=config.get("size")
    )
    dfa = resolve_dfa(config["dfa"], base)
    packs = [load_pack(_resolve_path(p, base)) for p in config.get("packs", [])]
    provider = resolve_provider(config.get("embedding"))

    cfg = method_config(config, method_name)
    from dataclasses import replace

    cfg = replace(cfg, learner=replace(cfg.learner, seed=seed))
    _, metrics = train_student(env, dfa, packs, cfg, provider)
    metrics.method = method_name
    metrics.seed = seed
    metrics.config_hash = config_hash(config)

    out_dir = _resolve_path(config["out_dir"], base)
    csv_path = Path(out_dir) / f"{method_name}_seed{seed}.csv"
    metrics.write_csv(csv_path)
    return str(csv_path)


def _resolve_path(p: str | Path, base: Path) -> Path:
    p = Path(p)
    return p if p.is_absolute() else base / p


def cmd_run(config_path: str, workers: int = 1) -> Path:
    config = load_config(config_path)
    base = Path(config_path).resolve().parent
    for key in ("target_env", "dfa", "methods", "seeds", "out_dir"):
        if key not in config:
            raise ConfigError(f"config is missing required key {key!r}")
    if not config["seeds"]:
        raise ConfigError("seeds must be non-empty")
    for pack_path in config.get("packs", []):
        if not _resolve_path(pack_path, base).exists():
            raise ConfigError(f"pack file does not exist: {pack_path}")
    for name in config["methods"]:
        if name not in METHODS and name not in METHOD_ALIASES:
            raise ConfigError(f"unknown method {name!r}")
    # Fail fast on env/DFA problems before any training starts.
    make_env(config["target_env"], config.get("env_seed", 0), size=config.get("size"))
    resolve_dfa(config["dfa"], base)

    out_dir = _resolve_path(config["out_dir"], base)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(json.dumps(config, indent=2, sort_keys=True))

    cells = [(m, s) for m in config["methods"] for s in config["seeds"]]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_cell, config, str(base), m, s) for m, s in cells
            ]
            for f in futures:
                f.result()
    else:
        for m, s in cells:
            _run_cell(config, str(base), m, s)

    cmd_compare(out_dir, threshold=config.get("reward_threshold", 0.8))
    if config.get("plot", False):
        plot_learning_curves(out_dir, out_dir / "learning_curves.svg")
    return out_dir


def cmd_compare(results_dir: str | Path, threshold: float = 0.8) -> Path:
    """Summarize every metrics CSV under ``results_dir``; writes
    summary.json / summary.txt and returns the directory."""
    results_dir = Path(results_dir)
    runs: dict[str, list[RunMetrics]] = {}
    for csv_path in sorted(results_dir.glob("*_seed*.csv")):
        method, _, seed_part = csv_path.stem.rpartition("_seed")
        metrics = RunMetrics.read_csv(csv_path, method=method, seed=int(seed_part))
        runs.setdefault(method, []).append(metrics)
    if not runs:
        raise ConfigError(f"no metrics CSVs found in {results_dir}")

    table = summarize_runs(runs, threshold=threshold)
    (results_dir / "summary.json").write_text(
        json.dumps(table.as_dict(), indent=2, sort_keys=True)
    )
    (results_dir / "summary.txt").write_text(table.render() + "\n")
    print(table.render())
    return results_dir


def plot_learning_curves(results_dir: Path, out_path: Path, window: int = 25) -> None:
    """Mean reward curve with a +-1 std band per method, as SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    runs: dict[str, list[RunMetrics]] = {}
    for csv_path in sorted(results_dir.glob("*_seed*.csv")):
        method, _, seed_part = csv_path.stem.rpartition("_seed")
        runs.setdefault(method, []).append(
            RunMetrics.read_csv(csv_path, method=method, seed=int(seed_part))
        )

    fig, ax = plt.subplots(figsize=(8, 5))
    for method in sorted(runs):
        curves = np.array([m.rewards for m in runs[method]], dtype=float)
        kernel = np.ones(window) / window
        smoothed = np.array([np.convolve(c, kernel, mode="valid") for c in curves])
        x = np.arange(smoothed.shape[1])
        mean, std = smoothed.mean(axis=0), smoothed.std(axis=0)
        ax.plot(x, mean, label=method)
        ax.fill_between(x, mean - std, mean + std, alpha=0.2)
    ax.set_xlabel("episode")
    ax.set_ylabel(f"reward (window {window})")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def cmd_train_teacher(args) -> Path:
    if args.env not in TASK_DESCRIPTIONS:
        raise ConfigError(f"unknown environment {args.env!r}")
    env = make_env(args.env, args.env_seed, size=args.size)
    if args.dfa:
        dfa = parse_dfa(Path(args.dfa).read_text())
    else:
        dfa = default_dfa(args.env, cycles=args.cycles)
    report = validate_dfa(dfa)
    if report.errors:
        raise ConfigError(f"teacher automaton fails validation: {report.errors}")

    cfg = LearnerConfig(
        alpha=args.alpha, gamma=args.gamma, episodes=args.episodes,
        max_steps=args.max_steps, seed=args.seed,
        epsilon_decay=args.epsilon_decay,
    )
    q, _ = train_teacher(env, dfa, cfg)
    if args.qtable_out:
        save_qtable(q, cfg, args.qtable_out)
    pack = distill_pack(args.env, env, dfa, q)
    save_pack(pack, args.out)
    print(f"wrote pack {args.out} ({len(pack.q_ad)} transitions, {len(pack.teacher_policy)} policy rows)")
    return Path(args.out)


def cmd_distill(args) -> Path:
    q, _ = load_qtable(args.qtable)
    env = make_env(args.env, args.env_seed, size=args.size)
    if args.dfa:
        dfa = parse_dfa(Path(args.dfa).read_text())
    else:
        dfa = default_dfa(args.env, cycles=args.cycles)
    pack = distill_pack(args.env, env, dfa, q)
    save_pack(pack, args.out)
    print(f"wrote pack {args.out}")
    return Path(args.out)


def cmd_generate_dfa(args) -> Path:
    if args.env:
        task = args.task or TASK_DESCRIPTIONS[args.env]
        vocabulary = args.vocab.split(",") if args.vocab else sorted(
            make_env(args.env, 0).label_vocab
        )
    else:
        if not args.task or not args.vocab:
            raise ConfigError("generate-dfa needs --env or both --task and --vocab")
        task = args.task
        vocabulary = args.vocab.split(",")

    if args.mode == "replay":
        if not args.fixture:
            raise ConfigError("replay mode needs --fixture")
        client_cfg = LlmClientConfig(mode="replay", fixture_path=args.fixture)
    else:
        endpoint = args.endpoint or os.environ.get(LLM_ENDPOINT_VAR, "")
        if not endpoint:
            raise ConfigError(f"live mode needs --endpoint (or ${LLM_ENDPOINT_VAR})")
        client_cfg = LlmClientConfig(
            mode="live", endpoint=endpoint, model=args.model,
            temperature=args.temperature,
        )

    spec = PromptSpec(task_description=task, vocabulary=tuple(vocabulary))
    dfa, _, provenance = generate_dfa(spec, client_cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(serialize_dfa(dfa))
    provenance_path = out.with_suffix(out.suffix + ".provenance.json")
    provenance_path.write_text(json.dumps(provenance, indent=2, sort_keys=True))
    print(f"wrote {out} ({len(dfa.states)} states) and {provenance_path}")
    return out


def build_parser() -> _Parser:
    parser = _Parser(prog="lantern", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-teacher", help="train a source teacher and write its pack")
    p.add_argument("--env", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--env-seed", type=int, default=0)
    p.add_argument("--size", type=int, default=None)
    p.add_argument("--cycles", type=int, default=None)
    p.add_argument("--dfa", default=None, help="DFA-JSON file (default: built-in task)")
    p.add_argument("--episodes", type=int, default=600)
    p.add_argument("--max-steps", type=int, default=300)
    p.add_argument("--alpha", type=float, default=0.6)
    p.add_argument("--gamma", type=float, default=0.95)
    p.add_argument("--epsilon-decay", type=float, default=0.9995)
    p.add_argument("--qtable-out", default=None)

    p = sub.add_parser("distill", help="distill a pack from a saved Q-table")
    p.add_argument("--qtable", required=True)
    p.add_argument("--env", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--env-seed", type=int, default=0)
    p.add_argument("--size", type=int, default=None)
    p.add_argument("--cycles", type=int, default=None)
    p.add_argument("--dfa", default=None)

    p = sub.add_parser("generate-dfa", help="produce a task automaton via an LLM")
    p.add_argument("--out", required=True)
    p.add_argument("--env", default=None)
    p.add_argument("--task", default=None)
    p.add_argument("--vocab", default=None, help="comma-separated event symbols")
    p.add_argument("--mode", choices=("replay", "live"), default="replay")
    p.add_argument("--fixture", default=None)
    p.add_argument("--endpoint", default=None)
    p.add_argument("--model", default="")
    p.add_argument("--temperature", type=float, default=0.0)

    p = sub.add_parser("run", help="run a target experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("compare", help="summarize metrics CSVs in a directory")
    p.add_argument("--dir", required=True)
    p.add_argument("--threshold", type=float, default=0.8)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "train-teacher":
            cmd_train_teacher(args)
        elif args.command == "distill":
            cmd_distill(args)
        elif args.command == "generate-dfa":
            cmd_generate_dfa(args)
        elif args.command == "run":
            cmd_run(args.config, workers=args.workers)
        elif args.command == "compare":
            cmd_compare(args.dir, threshold=args.threshold)
        return 0
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
