"""Threshold classification, the ODE blow-up mechanism, and rate reports.

classify() evaluates the two threshold conditions on concrete data:

    E(u0)^{s_c} M(u0)^{1-s_c}           <  E(Q)^{s_c} M(Q)^{1-s_c}
    ||grad u0||^{s_c} ||u0||^{1-s_c}    >  ||grad Q||^{s_c} ||Q||^{1-s_c}

Both satisfied predicts finite-time blow-up for alpha <= 1 and finite-or-
infinite-time blow-up with the rate lower bound

    sup_{[0,T]} ||grad u|| >~ T^{b/(2 alpha - 2)}

for alpha > 1.  The post-processing here reports only realized
quantities: the detected onset T0 of monotone I' < 0, the constant in
f^2 <= C f' for f(t) = int_{T0}^t ||grad u||^2, running suprema, and the
realized ratio R(T)/T.  Implicit constants are never asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, RegimeError, ValidationError
from .fields import FieldState
from .functionals import energy, gradient_norm_sq, mass
from .ground_state import GroundState
from .model import (
    CASE1_FINITE,
    CASE2_RATE,
    ModelParams,
    compute_criticality,
)
from .records import TimeSeriesRecord

FINITE_TIME_BLOWUP = "finite_time_blowup"
FINITE_OR_INFINITE_BLOWUP_WITH_RATE = "finite_or_infinite_blowup_with_rate"
NO_PREDICTION = "no_prediction"

__all__ = [
    "DichotomyVerdict",
    "OdeMechanismReport",
    "RateReport",
    "classify",
    "compute_criticality",
    "ode_mechanism_check",
    "rate_report",
    "FINITE_TIME_BLOWUP",
    "FINITE_OR_INFINITE_BLOWUP_WITH_RATE",
    "NO_PREDICTION",
]


@dataclass(frozen=True)
class DichotomyVerdict:
    s_c: float
    alpha: float
    regime: str
    value_EM: float | None      # None under the negative-energy shortcut
    threshold_EM: float
    cond_EM_satisfied: bool
    margin_EM: float            # threshold - value; +inf under the shortcut
    value_GM: float
    threshold_GM: float
    cond_GM_satisfied: bool
    margin_GM: float            # value - threshold
    negative_energy_shortcut: bool
    predicted: str


def classify(u0: FieldState, params: ModelParams, gs: GroundState) -> DichotomyVerdict:
    """Compare the data against the ground-state thresholds.

    E(u0) <= 0 is treated as satisfying the energy-mass condition (the
    power E^{s_c} is not real-valued there; the flag records the shortcut).
    """
    if gs.params != params:
        raise ValidationError(
            f"ground state was solved for {gs.params}, classify called with {params}"
        )
    if u0.grid.N != params.N:
        raise ValidationError("params dimension does not match grid dimension")
    if not (np.isfinite(gs.threshold_EM) and np.isfinite(gs.threshold_GM)):
        raise ValidationError("ground state carries no finite thresholds")

    s = params.s_c
    e_u = energy(u0, params)
    m_u = mass(u0)
    g_u = math.sqrt(gradient_norm_sq(u0))

    shortcut = e_u <= 0.0
    if shortcut:
        value_em = None
        margin_em = math.inf
        cond_em = True
    else:
        value_em = e_u**s * m_u ** (1.0 - s)
        margin_em = gs.threshold_EM - value_em
        cond_em = value_em < gs.threshold_EM

    value_gm = g_u**s * math.sqrt(m_u) ** (1.0 - s)
    margin_gm = value_gm - gs.threshold_GM
    cond_gm = value_gm > gs.threshold_GM

    regime = params.regime
    if cond_em and cond_gm and regime == CASE1_FINITE:
        predicted = FINITE_TIME_BLOWUP
    elif cond_em and cond_gm and regime == CASE2_RATE:
        predicted = FINITE_OR_INFINITE_BLOWUP_WITH_RATE
    else:
        predicted = NO_PREDICTION

    return DichotomyVerdict(
        s_c=s,
        alpha=params.alpha,
        regime=regime,
        value_EM=value_em,
        threshold_EM=gs.threshold_EM,
        cond_EM_satisfied=cond_em,
        margin_EM=margin_em,
        value_GM=value_gm,
        threshold_GM=gs.threshold_GM,
        cond_GM_satisfied=cond_gm,
        margin_GM=margin_gm,
        negative_energy_shortcut=shortcut,
        predicted=predicted,
    )


@dataclass(frozen=True)
class OdeMechanismReport:
    T0: float | None
    ode_constant: float | None  # max over the tail of f^2 / f'
    monotonic: bool             # True when a persistent I' < 0 onset exists
    f_times: np.ndarray | None = None
    f_values: np.ndarray | None = None


_NOISE_FACTOR = 1e-8
_MIN_SAMPLES = 10


def ode_mechanism_check(series: list[TimeSeriesRecord]) -> OdeMechanismReport:
    """Detect the onset T0 of persistently negative I' and fit f^2 <= C f'.

    Sign flickers within quadrature noise (|I'| < 1e-8 R ||grad u|| ||u||)
    are ignored when deciding persistence, but at least one sample beyond
    T0 must be negative beyond noise.
    """
    if len(series) < _MIN_SAMPLES:
        raise InsufficientDataError(
            f"ode mechanism check needs >= {_MIN_SAMPLES} samples, got {len(series)}"
        )
    t = np.array([r.t for r in series])
    ip = np.array([r.Iprime for r in series])
    grad_sq = np.array([r.grad_norm_sq for r in series])
    noise = _NOISE_FACTOR * np.array(
        [r.R_cutoff * math.sqrt(max(r.grad_norm_sq, 0.0) * max(r.mass, 0.0))
         for r in series]
    )

    acceptable = (ip < 0.0) | (np.abs(ip) <= noise)
    strictly_negative = ip < -noise
    onset = None
    suffix_ok = True
    has_negative = False
    for k in range(len(series) - 1, -1, -1):
        suffix_ok = suffix_ok and bool(acceptable[k])
        has_negative = has_negative or bool(strictly_negative[k])
        if suffix_ok and has_negative:
            onset = k
    if onset is None:
        return OdeMechanismReport(T0=None, ode_constant=None, monotonic=False)

    T0 = float(t[onset])
    tt = t[onset:]
    gg = grad_sq[onset:]
    f = np.concatenate([[0.0], np.cumsum(0.5 * (gg[1:] + gg[:-1]) * np.diff(tt))])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where((f > 0.0) & (gg > 0.0), f**2 / gg, 0.0)
    constant = float(ratios.max()) if ratios.size else 0.0
    return OdeMechanismReport(
        T0=T0,
        ode_constant=constant,
        monotonic=True,
        f_times=tt,
        f_values=f,
    )


@dataclass(frozen=True)
class RateReport:
    times: np.ndarray           # sample times with t > 0
    sup_grad: np.ndarray        # running suprema of ||grad u||
    R_of_T: np.ndarray          # sup_grad^{(2 alpha - 2)/b}
    fitted_exponent: float      # tail slope of log sup_grad vs log T
    min_ratio: float            # min_k R(T_k)/T_k
    T0: float | None = None
    ode_constant: float | None = None


def rate_report(series: list[TimeSeriesRecord], params: ModelParams,
                tail_fraction: float = 0.5) -> RateReport:
    """Realized rate quantities for an alpha > 1 run."""
    if params.alpha <= 1.0:
        raise RegimeError(
            f"rate report requires alpha > 1, got alpha = {params.alpha:.6g}"
        )
    if params.b <= 0.0:
        raise RegimeError("rate report requires b > 0")
    if not 0.0 < tail_fraction <= 1.0:
        raise ValidationError("tail_fraction must lie in (0, 1]")

    t_all = np.array([r.t for r in series])
    grad = np.sqrt(np.maximum(np.array([r.grad_norm_sq for r in series]), 0.0))
    sup_all = np.maximum.accumulate(grad)

    positive = t_all > 0.0
    if positive.sum() < 4:
        raise InsufficientDataError("rate report needs at least 4 samples with t > 0")
    t = t_all[positive]
    sup = sup_all[positive]
    exponent = (2.0 * params.alpha - 2.0) / params.b
    r_of_t = sup**exponent
    if np.any(np.diff(r_of_t) < 0.0):
        raise ValidationError("running supremum produced a decreasing R(T)")

    ratio = r_of_t / t
    min_ratio = float(ratio.min())

    n_tail = max(2, int(math.ceil(tail_fraction * len(t))))
    lt = np.log(t[-n_tail:])
    lg = np.log(np.maximum(sup[-n_tail:], 1e-300))
    design = np.vstack([np.ones_like(lt), lt]).T
    coef, *_ = np.linalg.lstsq(design, lg, rcond=None)
    fitted = float(coef[1])

    T0 = None
    constant = None
    if len(series) >= _MIN_SAMPLES:
        ode = ode_mechanism_check(series)
        T0 = ode.T0
        constant = ode.ode_constant

    return RateReport(
        times=t,
        sup_grad=sup,
        R_of_T=r_of_t,
        fitted_exponent=fitted,
        min_ratio=min_ratio,
        T0=T0,
        ode_constant=constant,
    )
