"""Student training on a target product MDP under five transfer methods.

* ``no_transfer``  - plain Q-learning.
* ``ad``           - single-source strategic reward shaping from automaton
                     transition values, with per-episode exponential decay;
                     source states are matched by chain position, not
                     semantics.
* ``larm_lite``    - single-source strategic reward shaping through a
                     size-1 semantic neighborhood, undecayed and ungated.
* ``cadent``       - single-source strategic + tactical guidance blended
                     with the TD update through an experience-only trust
                     gate.
* ``lantern``      - multi-source neighborhoods, strategic + tactical
                     aggregation, and the dual (experience x semantic)
                     trust gate. Ablation flags restrict it to a single
                     source, an experience-only gate, or strategic-only
                     guidance.

When a run has no usable guidance (no packs, or both guidance weights
zero) every method takes the identical plain TD path, so transfer
configurations degrade bit-for-bit into ``no_transfer``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .aggregate import ContextMap, aggregate_strategic, aggregate_tactical
from .dfa import Dfa, validate_dfa
from .distill import KnowledgePack
from .envs import INTERACT, GridEnv, make_env
from .gating import GateParams, TrustGateState
from .metrics import RunMetrics
from .product import ProductConfig, initial_product_state, product_step
from .qlearn import LearnerConfig, QTable, select_action, softmax_row, td_error
from .semantic import Neighborhood, SemanticIndex, cosine_similarity, default_provider

METHODS = ("no_transfer", "ad", "cadent", "larm_lite", "lantern")


@dataclass(frozen=True)
class MethodConfig:
    method: str = "no_transfer"
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    product: ProductConfig | None = None  # episode cap defaults to learner.max_steps
    gate: GateParams = field(default_factory=GateParams)
    lambda_ad: float = 0.15
    lambda_pd: float = 0.7
    m: int = 3
    rho: float = 0.99
    # Tactical mixtures flatter than this are treated as no-advice.
    tactical_min_gap: float = 0.1
    single_source: bool = False
    no_semantic_gating: bool = False
    strategic_only: bool = False

    def product_config(self) -> ProductConfig:
        return self.product or ProductConfig(episode_cap=self.learner.max_steps)


def ad_decay(rho: float, episode: int) -> float:
    """Shaping attenuation for the ad baseline at a given episode."""
    return rho**episode


def select_best_pack(
    target_dfa: Dfa, packs: list[KnowledgePack], provider=None
) -> KnowledgePack:
    """Pack with the highest mean description similarity to the target,
    ties broken by source id."""
    if not packs:
        raise ValueError("no packs to select from")
    if provider is None:
        provider = default_provider(target_dfa, packs)
    target_vecs = [provider.embed(t) for t in target_dfa.descriptions.values()]
    best, best_score = None, -math.inf
    for pack in sorted(packs, key=lambda p: p.source_id):
        sims = [
            cosine_similarity(tv, provider.embed(text))
            for tv in target_vecs
            for text in pack.descriptions.values()
        ]
        score = sum(sims) / len(sims)
        if score > best_score:
            best, best_score = pack, score
    return best


def guidance(
    omega_t: str,
    omega_next: str,
    env_state,
    action: int,
    q: QTable,
    neighborhood: Neighborhood,
    packs: dict[str, KnowledgePack],
    context_maps: dict[str, ContextMap],
    lambda_ad: float,
    lambda_pd: float,
    interactable: frozenset | None = None,
    tactical_min_gap: float = 0.0,
) -> float:
    """Combined strategic + tactical teacher signal for one transition.

    The strategic part fires only on automaton progress; the tactical
    part is the gap between the aggregated teacher probability and the
    student's softmax probability of the taken action.

    When ``interactable`` is given, interact advice is dropped on cells
    with nothing to interact with: the coordinate map blurs a source
    cell onto several target cells, and repeating a teacher's "interact
    here" on the blurred neighbors of the real item pins the student to
    a no-op.
    """
    total = 0.0
    if lambda_ad != 0.0 and omega_t != omega_next:
        total += lambda_ad * aggregate_strategic(neighborhood, packs)
    if lambda_pd != 0.0 and not (
        action == INTERACT
        and interactable is not None
        and env_state.agent not in interactable
    ):
        pi_teacher = aggregate_tactical(
            neighborhood, packs, context_maps, env_state, min_gap=tactical_min_gap
        )
        if pi_teacher is not None:
            pi_student = softmax_row(q.row((env_state.key(), omega_t)))[action]
            total += lambda_pd * (pi_teacher[action] - pi_student)
    return total


def lantern_update(
    q: QTable,
    gate: TrustGateState,
    cfg: MethodConfig,
    key,
    omega_t: str,
    action: int,
    delta: float,
    guidance_value: float,
    q_bound: float | None = None,
) -> float:
    """Gated blend of the TD error with teacher guidance; returns the
    applied increment. Volatility absorbs the current TD error before
    the gate is read, so the gate reacts within the same step.

    With ``q_bound`` set, the increment saturates so the stored value
    stays inside [-q_bound, q_bound]: a persistent guidance push on a
    repeatedly-fired pair has no TD counterweight (the gated TD pull
    vanishes as volatility grows) and would otherwise creep without
    limit.
    """
    gate.update_exp_volatility(key, action, delta)
    tau = gate.composite_trust(key, omega_t, action)
    increment = cfg.learner.alpha * (tau * delta + (1.0 - tau) * guidance_value)
    if q_bound is not None:
        current = q.value(key, action)
        if current + increment > q_bound:
            increment = q_bound - current
        elif current + increment < -q_bound:
            increment = -q_bound - current
    q.add(key, action, increment)
    return increment


@dataclass
class _Setup:
    """Preresolved per-run transfer machinery."""

    mode: str  # "plain" | "shaped" | "gated"
    packs: dict[str, KnowledgePack] = field(default_factory=dict)
    neighborhoods: dict[str, Neighborhood] = field(default_factory=dict)
    context_maps: dict[str, ContextMap] = field(default_factory=dict)
    gate: TrustGateState | None = None
    ad_pack: KnowledgePack | None = None
    ad_state_map: dict[str, str] = field(default_factory=dict)
    rho: float | None = None  # per-episode shaping decay; None = undecayed
    lambda_ad: float = 0.0
    lambda_pd: float = 0.0


def _source_env(pack: KnowledgePack) -> GridEnv:
    snap = pack.env_snapshot
    return make_env(snap["name"], snap["seed"], size=snap["width"])


def _prepare(env: GridEnv, dfa: Dfa, packs: list[KnowledgePack], cfg: MethodConfig, provider):
    if cfg.method not in METHODS:
        raise ValueError(f"unknown method {cfg.method!r}")
    lambda_pd = 0.0 if cfg.strategic_only else cfg.lambda_pd
    lambda_ad = cfg.lambda_ad

    if cfg.method == "no_transfer" or not packs or (lambda_ad == 0.0 and lambda_pd == 0.0):
        return _Setup(mode="plain")

    if cfg.method == "ad":
        pack = select_best_pack(dfa, packs, provider)
        # Chain-position alignment: i-th target state -> i-th source state.
        src = pack.dfa.states
        state_map = {
            w: src[min(i, len(src) - 1)] for i, w in enumerate(dfa.states)
        }
        return _Setup(
            mode="shaped", ad_pack=pack, ad_state_map=state_map, rho=cfg.rho,
            lambda_ad=lambda_ad,
        )

    if cfg.method in ("cadent", "larm_lite") or cfg.single_source:
        selected = [select_best_pack(dfa, packs, provider)]
    else:
        selected = list(packs)
    m = 1 if cfg.method in ("cadent", "larm_lite") else cfg.m
    index = SemanticIndex.build(dfa, selected, provider, m=m)
    packs_by_id = {p.source_id: p for p in selected}
    context_maps = {
        p.source_id: ContextMap.build(env, _source_env(p), p.source_id)
        for p in selected
    }

    if cfg.method == "larm_lite":
        return _Setup(
            mode="shaped",
            packs=packs_by_id,
            neighborhoods=index.neighborhoods,
            context_maps=context_maps,
            lambda_ad=lambda_ad,
        )

    semantic_enabled = cfg.method == "lantern" and not cfg.no_semantic_gating
    gate = TrustGateState(
        cfg.gate,
        v_sem=index.v_sem,
        degenerate=index.degenerate_states(),
        semantic_enabled=semantic_enabled,
    )
    return _Setup(
        mode="gated",
        packs=packs_by_id,
        neighborhoods=index.neighborhoods,
        context_maps=context_maps,
        gate=gate,
        lambda_ad=lambda_ad,
        lambda_pd=lambda_pd,
    )


def train_student(
    env: GridEnv,
    dfa: Dfa,
    packs: list[KnowledgePack],
    cfg: MethodConfig,
    provider=None,
) -> tuple[QTable, RunMetrics]:
    """Full training run; returns the learned table and per-episode metrics."""
    report = validate_dfa(dfa)
    if not report.ok:
        raise ValueError(f"target automaton invalid: {report.errors}")

    setup = _prepare(env, dfa, packs, cfg, provider)
    lcfg = cfg.learner
    pcfg = cfg.product_config()
    interactable = frozenset(env.item_layout)
    rng = np.random.default_rng(lcfg.seed)
    q = QTable()
    metrics = RunMetrics(method=cfg.method, seed=lcfg.seed)
    epsilon = lcfg.epsilon0

    q_ad_hi = _guidance_scale(setup)
    r_max = pcfg.terminal_reward + pcfg.transition_reward + abs(pcfg.step_penalty)
    q_bound = (
        (r_max + cfg.lambda_ad * q_ad_hi) / (1.0 - lcfg.gamma)
        + cfg.lambda_ad * q_ad_hi
        + cfg.lambda_pd
        + 1.0
    )

    for episode in range(lcfg.episodes):
        p = initial_product_state(env, dfa)
        key = p.key()
        total = 0.0
        tau_sum = 0.0
        accepted = False
        steps = 0

        while True:
            a = select_action(q, key, epsilon, rng)
            p_next, r, done = product_step(env, dfa, pcfg, p, a)
            next_key = p_next.key()
            accepted = p_next.auto_state in dfa.accepting
            transitioned = p_next.auto_state != p.auto_state

            if setup.mode == "plain":
                delta = td_error(q, lcfg, key, a, r, next_key, accepted)
                q.add(key, a, lcfg.alpha * delta)
                tau_sum += 1.0
            elif setup.mode == "shaped":
                shaped = r
                if transitioned:
                    shaped += _shaping_bonus(setup, p.auto_state, p_next.auto_state, episode)
                delta = td_error(q, lcfg, key, a, shaped, next_key, accepted)
                q.add(key, a, lcfg.alpha * delta)
                tau_sum += 1.0
            else:
                delta = td_error(q, lcfg, key, a, r, next_key, accepted)
                g = guidance(
                    p.auto_state, p_next.auto_state, p.env_state, a, q,
                    setup.neighborhoods[p.auto_state], setup.packs,
                    setup.context_maps, setup.lambda_ad, setup.lambda_pd,
                    interactable=interactable,
                    tactical_min_gap=cfg.tactical_min_gap,
                )
                increment = lantern_update(
                    q, setup.gate, cfg, key, p.auto_state, a, delta, g,
                    q_bound=q_bound,
                )
                if not math.isfinite(increment):
                    raise AssertionError("non-finite update increment")
                tau_sum += setup.gate.composite_trust(key, p.auto_state, a)

            if abs(q.value(key, a)) > q_bound:
                raise AssertionError(
                    f"Q value {q.value(key, a):.3f} exceeded bound {q_bound:.3f}"
                )

            total += r
            steps = p_next.env_state.steps
            p, key = p_next, next_key
            if done:
                break

        metrics.add(total, steps, accepted, tau_sum / steps, epsilon)
        epsilon = max(lcfg.epsilon_min, epsilon * lcfg.epsilon_decay)

    return q, metrics


def _guidance_scale(setup: _Setup) -> float:
    values = [abs(v) for p in setup.packs.values() for v in p.q_ad_state.values()]
    if setup.ad_pack is not None:
        values += [abs(v) for v in setup.ad_pack.q_ad_state.values()]
        values += [abs(v) for v in setup.ad_pack.q_ad.values()]
    return max(values) if values else 0.0


def _shaping_bonus(setup: _Setup, omega_t: str, omega_next: str, episode: int) -> float:
    if setup.ad_pack is not None:
        src, dst = setup.ad_state_map[omega_t], setup.ad_state_map[omega_next]
        value = setup.ad_pack.q_ad.get(
            (src, dst), setup.ad_pack.q_ad_state.get(src, 0.0)
        )
        decay = ad_decay(setup.rho, episode) if setup.rho is not None else 1.0
        return setup.lambda_ad * decay * value
    return setup.lambda_ad * aggregate_strategic(
        setup.neighborhoods[omega_t], setup.packs
    )


def run_baseline(
    method: str,
    env: GridEnv,
    dfa: Dfa,
    packs: list[KnowledgePack],
    cfg: MethodConfig,
    provider=None,
) -> tuple[QTable, RunMetrics]:
    """Train under a named method, overriding whatever the config says."""
    return train_student(env, dfa, packs, replace(cfg, method=method), provider)
