"""Combine source knowledge across a semantic neighborhood.

Strategic values are a weighted sum of per-state summaries from the
matched source states; tactical guidance is a weighted mixture of
teacher action distributions queried at a mapped source-state context.
The context map is deliberately coarse: agent coordinates scale
proportionally between grids, inventory carries over by item name with
clamping, and everything else is dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

from .distill import KnowledgePack
from .envs import EnvState, GridEnv, N_ACTIONS
from .semantic import Neighborhood

_UNIFORM = tuple([1.0 / N_ACTIONS] * N_ACTIONS)


@dataclass(frozen=True)
class ContextMap:
    """Coordinate/inventory projection from a target env into one source env."""

    source_id: str
    x_scale: float
    y_scale: float
    x_max: int
    y_max: int
    # per source item type: index into the target inventory, or None if
    # the target has no item of that name
    item_indices: tuple[int | None, ...]
    item_caps: tuple[int, ...]

    @classmethod
    def build(cls, target_env: GridEnv, source_env: GridEnv, source_id: str) -> "ContextMap":
        indices = []
        caps = []
        for tag in source_env.item_types:
            indices.append(
                target_env.item_types.index(tag) if tag in target_env.item_types else None
            )
            caps.append(source_env.inventory_caps[tag])
        return cls(
            source_id=source_id,
            x_scale=source_env.width / target_env.width,
            y_scale=source_env.height / target_env.height,
            x_max=source_env.width - 1,
            y_max=source_env.height - 1,
            item_indices=tuple(indices),
            item_caps=tuple(caps),
        )


def map_context(cm: ContextMap, s: EnvState) -> tuple:
    """Source env-state key for a target state: scaled cell, name-matched
    clamped inventory, empty consumed/depleted sets."""
    x = min(int(s.agent[0] * cm.x_scale), cm.x_max)
    y = min(int(s.agent[1] * cm.y_scale), cm.y_max)
    inventory = tuple(
        0 if idx is None else min(s.inventory[idx], cap)
        for idx, cap in zip(cm.item_indices, cm.item_caps)
    )
    return ((x, y), inventory, frozenset(), frozenset())


def aggregate_strategic(n: Neighborhood, packs: dict[str, KnowledgePack]) -> float:
    """Weighted sum of source-state strategic summaries.

    Entries without a summary contribute zero and their weight is not
    redistributed, so missing knowledge attenuates the signal.
    """
    total = 0.0
    for e in n.entries:
        summary = packs[e.source_id].q_ad_state.get(e.state)
        if summary is not None:
            total += e.weight * summary
    return total


def aggregate_tactical(
    n: Neighborhood,
    packs: dict[str, KnowledgePack],
    context_maps: dict[str, ContextMap],
    s: EnvState,
    min_gap: float = 0.0,
) -> tuple[float, ...] | None:
    """Weighted mixture of teacher policies at the mapped context.

    Entries whose teacher never visited the mapped context are excluded
    and the remaining weights renormalized; None when no source knows the
    context at all, so callers can drop the tactical term instead of
    blending in a made-up distribution. (A uniform stand-in is not
    harmless: it steadily pushes whichever action the student prefers
    back toward uniform, which can drown a weak reward signal.)

    ``min_gap`` additionally treats near-uniform mixtures (max minus min
    probability below the gap) as no-advice: a flat row carries no
    direction, but its residual tilt is still strong enough to cancel
    the step-penalty pressure that rotates greedy ties, which can park
    the learner in a two-cell orbit.
    """
    mixed = [0.0] * N_ACTIONS
    total_weight = 0.0
    for e in n.entries:
        key = (map_context(context_maps[e.source_id], s), e.state)
        row = packs[e.source_id].teacher_policy.get(key)
        if row is None or e.weight <= 0.0:
            continue
        w = e.weight
        total_weight += w
        for a in range(N_ACTIONS):
            mixed[a] += w * row[a]
    if total_weight <= 0.0:
        return None
    total = sum(mixed)
    if total <= 0.0:
        return None
    out = tuple(v / total for v in mixed)
    if max(out) - min(out) < min_gap:
        return None
    return out
