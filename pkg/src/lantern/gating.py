"""Trust gating from experience and semantic volatility.

Experience volatility is an exponential moving average of absolute TD
error per state-action pair; semantic volatility is precomputed per
target automaton state from description similarity. Both map through a
falling sigmoid into trust coefficients whose product gates the learning
update. States whose semantic neighborhood is degenerate (no usable
sources) force the gate fully toward the student.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


@dataclass(frozen=True)
class GateParams:
    eta: float = 0.01
    k_exp: float = 5.0
    k_sem: float = 5.0
    theta_exp: float = 0.5
    theta_sem: float = 0.3
    v_exp_init: float = 1.0
    # Flips the semantic trust direction (sensitivity experiments only;
    # the default follows the composite gate as specified).
    semantic_inversion: bool = False


class TrustGateState:
    """Per-run gate state: the volatility EMA plus precomputed semantic
    misalignment and degeneracy per automaton state."""

    def __init__(
        self,
        params: GateParams,
        v_sem: dict[str, float] | None = None,
        degenerate: frozenset[str] = frozenset(),
        semantic_enabled: bool = True,
    ):
        self.params = params
        self.v_sem = dict(v_sem or {})
        self.degenerate = degenerate
        self.semantic_enabled = semantic_enabled
        self._v_exp: dict = {}

    def exp_volatility(self, key, action: int) -> float:
        return self._v_exp.get((key, action), self.params.v_exp_init)

    def update_exp_volatility(self, key, action: int, delta: float) -> float:
        eta = self.params.eta
        v = (1.0 - eta) * self.exp_volatility(key, action) + eta * abs(delta)
        self._v_exp[(key, action)] = v
        return v

    def trust_exp(self, key, action: int) -> float:
        p = self.params
        return sigmoid(-p.k_exp * (self.exp_volatility(key, action) - p.theta_exp))

    def trust_sem(self, omega: str) -> float:
        p = self.params
        if omega not in self.v_sem:
            raise KeyError(f"no precomputed semantic volatility for state {omega!r}")
        x = -p.k_sem * (self.v_sem[omega] - p.theta_sem)
        return sigmoid(-x if p.semantic_inversion else x)

    def composite_trust(self, key, omega: str, action: int) -> float:
        """Product of both trust terms; exactly 1.0 for degenerate states
        (pure student update).

        With ``semantic_enabled=False`` the gate reduces to the
        experience term alone and degeneracy is not consulted.
        """
        if not self.semantic_enabled:
            return self.trust_exp(key, action)
        if omega in self.degenerate:
            return 1.0
        return self.trust_exp(key, action) * self.trust_sem(omega)
