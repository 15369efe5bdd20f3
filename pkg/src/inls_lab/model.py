"""Model parameters for i u_t + Laplace(u) + |x|^{-b} |u|^{p-1} u = 0.

The triple (N, b, p) fixes the equation.  Everything the blow-up theory
needs downstream is derived from it here: the critical Sobolev index
s_c = N/2 - (2-b)/(p-1) left invariant by the equation's scaling, the
growth exponent alpha = N(p-1)/4 that separates the two blow-up regimes,
and the rate exponent b/(2 alpha - 2) governing the gradient lower bound
in the alpha > 1 regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError

# Regime labels
CASE1_FINITE = "case1_finite"
CASE2_RATE = "case2_rate"
OUT_OF_THEOREM = "out_of_theorem"

REGIMES = (CASE1_FINITE, CASE2_RATE, OUT_OF_THEOREM)

#: Largest supported spatial dimension (surface-measure table below).
N_MAX = 5


@dataclass(frozen=True)
class ModelParams:
    """The equation triple (N, b, p) with derived critical quantities.

    b = 0 is accepted as a degenerate mode (the classical homogeneous
    equation) used for closed-form regression oracles; it is never
    classified as inside the blow-up theorem's range.
    """

    N: int
    b: float
    p: float

    def __post_init__(self):
        if not isinstance(self.N, int) or isinstance(self.N, bool):
            raise ValidationError(f"N must be an integer, got {self.N!r}")
        if not 1 <= self.N <= N_MAX:
            raise ValidationError(f"N must be in 1..{N_MAX}, got {self.N}")
        if not (math.isfinite(self.b) and math.isfinite(self.p)):
            raise ValidationError("b and p must be finite")
        if not 0.0 <= self.b < min(2.0, float(self.N)):
            raise ValidationError(
                f"b must satisfy 0 <= b < min(2, N) = {min(2, self.N)}, got {self.b}"
            )
        if self.p <= 1.0:
            raise ValidationError(f"p must exceed 1, got {self.p}")

    # -- derived exponents -------------------------------------------------

    @property
    def s_c(self) -> float:
        """Critical regularity N/2 - (2-b)/(p-1)."""
        return self.N / 2.0 - (2.0 - self.b) / (self.p - 1.0)

    @property
    def alpha(self) -> float:
        """Regime exponent N(p-1)/4; alpha <= 1 is the finite-time case."""
        return self.N * (self.p - 1.0) / 4.0

    @property
    def p_star(self) -> float:
        """Upper admissible power: infinity for N <= 2, else 1+(4-2b)/(N-2)."""
        if self.N <= 2:
            return math.inf
        return 1.0 + (4.0 - 2.0 * self.b) / (self.N - 2.0)

    @property
    def p_lower(self) -> float:
        """Lower admissible power 1+(4-2b)/N (the mass-critical exponent)."""
        return 1.0 + (4.0 - 2.0 * self.b) / self.N

    @property
    def rate_exponent(self) -> float | None:
        """Exponent b/(2 alpha - 2) of the gradient lower bound.

        Defined only for alpha > 1; None at and below the boundary
        (division-by-zero guard at alpha == 1).
        """
        if self.alpha <= 1.0:
            return None
        return self.b / (2.0 * self.alpha - 2.0)

    @property
    def is_intercritical(self) -> bool:
        """0 < s_c < 1 (mass-supercritical, energy-subcritical)."""
        return 0.0 < self.s_c < 1.0

    @property
    def regime(self) -> str:
        """Blow-up regime label.

        Inside the theorem's range (0 < s_c < 1, b > 0, and b < 4/N when
        N >= 3) the split is by alpha: alpha <= 1 means finite-time
        blow-up, alpha > 1 means blow-up with the rate lower bound.
        """
        if self.b == 0.0 or not self.is_intercritical:
            return OUT_OF_THEOREM
        if self.N >= 3 and self.b >= 4.0 / self.N:
            return OUT_OF_THEOREM
        return CASE1_FINITE if self.alpha <= 1.0 else CASE2_RATE

    # -- validation helpers ------------------------------------------------

    def require_intercritical(self) -> None:
        """Raise unless p lies strictly between the critical exponents."""
        if not self.is_intercritical:
            raise ValidationError(
                f"(N,b,p)=({self.N},{self.b},{self.p}) is not intercritical: "
                f"s_c={self.s_c:.6g} not in (0,1)"
            )

    def require_ground_state_range(self) -> None:
        """Raise unless a ground state exists: 1 < p < 2*.

        At p == 2* (s_c == 1, the energy-critical endpoint) the two
        Pohozaev identities force M(Q) = 0, so no nontrivial ground state
        exists and any numerically 'converged' profile is a grid artifact.
        """
        if not self.p < self.p_star:
            raise ValidationError(
                f"no ground state for p={self.p} >= 2* = {self.p_star:.6g} "
                f"at (N,b)=({self.N},{self.b}); existence requires 1 < p < 2*"
            )

    def nonlinear_coupling(self, r):
        """Pointwise focusing factor r^{-b} (ones when b == 0)."""
        import numpy as np

        r = np.asarray(r)
        if self.b == 0.0:
            return np.ones_like(r)
        return r ** (-self.b)


def compute_criticality(params: ModelParams):
    """Return (s_c, alpha, rate_exponent, regime) for a parameter triple."""
    return params.s_c, params.alpha, params.rate_exponent, params.regime
