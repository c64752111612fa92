"""Per-episode run metrics, CSV persistence, and summary statistics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CSV_COLUMNS = ("episode", "reward", "steps", "success", "mean_tau", "epsilon")


@dataclass
class RunMetrics:
    method: str
    seed: int
    config_hash: str = ""
    rewards: list[float] = field(default_factory=list)
    steps: list[int] = field(default_factory=list)
    successes: list[int] = field(default_factory=list)
    mean_taus: list[float] = field(default_factory=list)
    epsilons: list[float] = field(default_factory=list)

    def add(self, reward: float, steps: int, success: bool, mean_tau: float, epsilon: float) -> None:
        self.rewards.append(reward)
        self.steps.append(steps)
        self.successes.append(1 if success else 0)
        self.mean_taus.append(mean_tau)
        self.epsilons.append(epsilon)

    @property
    def n_episodes(self) -> int:
        return len(self.rewards)

    def write_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for i in range(self.n_episodes):
                writer.writerow([
                    i,
                    f"{self.rewards[i]:.6f}",
                    self.steps[i],
                    self.successes[i],
                    f"{self.mean_taus[i]:.6f}",
                    f"{self.epsilons[i]:.6f}",
                ])

    @classmethod
    def read_csv(cls, path: str | Path, method: str = "", seed: int = -1) -> "RunMetrics":
        m = cls(method=method, seed=seed)
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_COLUMNS:
                raise ValueError(f"{path}: unexpected CSV header {reader.fieldnames}")
            for row in reader:
                m.rewards.append(float(row["reward"]))
                m.steps.append(int(row["steps"]))
                m.successes.append(int(row["success"]))
                m.mean_taus.append(float(row["mean_tau"]))
                m.epsilons.append(float(row["epsilon"]))
        return m


_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def auc(rewards: list[float]) -> float:
    """Trapezoidal area under the episode-reward curve."""
    if len(rewards) < 2:
        return 0.0
    return float(_trapezoid(np.asarray(rewards, dtype=float)))


def final_window_mean(rewards: list[float], window: int = 100) -> float:
    if not rewards:
        return math.nan
    return float(np.mean(rewards[-window:]))


def episodes_to_threshold(
    rewards: list[float], threshold: float, window: int = 50
) -> int | None:
    """First episode whose trailing-``window`` mean reward reaches the
    threshold; None if never."""
    if len(rewards) < window:
        return None
    csum = np.cumsum(np.asarray(rewards, dtype=float))
    for i in range(window - 1, len(rewards)):
        lo = csum[i - window] if i >= window else 0.0
        if (csum[i] - lo) / window >= threshold:
            return i
    return None


@dataclass
class MethodSummary:
    method: str
    seeds: list[int]
    final_reward_mean: float
    final_reward_std: float
    auc_mean: float
    auc_std: float
    episodes_to_threshold_mean: float | None


@dataclass
class SummaryTable:
    rows: list[MethodSummary]

    def as_dict(self) -> dict:
        return {
            r.method: {
                "seeds": r.seeds,
                "final_reward_mean": r.final_reward_mean,
                "final_reward_std": r.final_reward_std,
                "auc_mean": r.auc_mean,
                "auc_std": r.auc_std,
                "episodes_to_threshold_mean": r.episodes_to_threshold_mean,
            }
            for r in self.rows
        }

    def render(self) -> str:
        header = f"{'method':<28} {'final100 mean±std':>22} {'AUC mean±std':>22} {'eps→thresh':>12}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            thresh = "-" if r.episodes_to_threshold_mean is None else f"{r.episodes_to_threshold_mean:.0f}"
            lines.append(
                f"{r.method:<28} {r.final_reward_mean:>11.4f}±{r.final_reward_std:<9.4f} "
                f"{r.auc_mean:>11.2f}±{r.auc_std:<9.2f} {thresh:>12}"
            )
        return "\n".join(lines)


def summarize_runs(
    runs: dict[str, list[RunMetrics]],
    threshold: float = 0.8,
    window: int = 100,
) -> SummaryTable:
    """Aggregate per-method statistics across seeds from exact run records."""
    rows = []
    for method in sorted(runs):
        ms = runs[method]
        finals = [final_window_mean(m.rewards, window) for m in ms]
        aucs = [auc(m.rewards) for m in ms]
        thresholds = [episodes_to_threshold(m.rewards, threshold) for m in ms]
        reached = [t for t in thresholds if t is not None]
        rows.append(MethodSummary(
            method=method,
            seeds=sorted(m.seed for m in ms),
            final_reward_mean=float(np.mean(finals)),
            final_reward_std=float(np.std(finals)),
            auc_mean=float(np.mean(aucs)),
            auc_std=float(np.std(aucs)),
            episodes_to_threshold_mean=float(np.mean(reached)) if len(reached) == len(thresholds) and reached else None,
        ))
    return SummaryTable(rows)
