"""Time integration of i u_t + Laplace(u) + r^{-b}|u|^{p-1} u = 0.

Strang splitting: the nonlinear part only rotates the phase pointwise
(|u| is invariant under it), so that half-step is exact; the linear part
is a Crank-Nicolson solve with the finite-volume radial Laplacian.  The
Laplacian is self-adjoint in the quadrature inner product, which makes
the Cayley step unitary: the discrete mass is conserved to roundoff, and
both substeps are exactly time-reversible.

The step size follows dt = c_adapt / max(1, ||grad u||^2), capped at
dt_initial, which shrinks the step in proportion to the shrinking
timescale of a collapsing core.  Termination is by horizon, by the
gradient-factor blow-up proxy, by step underflow, or on non-finite
values; the proxy is a heuristic for the true blow-up time, never an
assertion about it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import SolverError, ValidationError
from .fields import FieldState, RadialGrid
from .functionals import energy, gradient_norm_sq, mass
from .model import ModelParams
from .records import TimeSeriesRecord
from .virial import VirialMonitor

COMPLETED_HORIZON = "completed_horizon"
BLOWUP_DETECTED = "blowup_detected"
STEP_UNDERFLOW = "step_underflow"
NUMERICAL_FAILURE = "numerical_failure"

RUN_STATUSES = (COMPLETED_HORIZON, BLOWUP_DETECTED, STEP_UNDERFLOW, NUMERICAL_FAILURE)


@dataclass(frozen=True)
class EvolutionConfig:
    """Stepping, termination and sampling controls for evolve().

    c_adapt = None derives the constant so the run starts at dt_initial;
    c_adapt = inf disables adaptation (fixed step).
    """

    dt_initial: float
    t_final: float
    dt_min: float = 1e-12
    c_adapt: float | None = None
    blowup_gradient_factor: float = 1e3
    record_stride: int = 10

    def __post_init__(self):
        if not (math.isfinite(self.dt_initial) and self.dt_initial > 0):
            raise ValidationError("dt_initial must be positive and finite")
        if not (math.isfinite(self.t_final) and self.t_final >= 0):
            raise ValidationError("t_final must be nonnegative and finite")
        if not (math.isfinite(self.dt_min) and self.dt_min > 0):
            raise ValidationError("dt_min must be positive")
        if self.blowup_gradient_factor <= 1.0:
            raise ValidationError("blowup_gradient_factor must exceed 1")
        if self.record_stride < 1:
            raise ValidationError("record_stride must be at least 1")
        if self.c_adapt is not None and not self.c_adapt > 0:
            raise ValidationError("c_adapt must be positive when given")


@dataclass
class RunOutcome:
    """Result of one evolution run."""

    status: str
    t_end: float
    series: list[TimeSeriesRecord] = field(default_factory=list)
    final_state: FieldState | None = None


class Stepper:
    """Cached operators for repeated Strang steps on one grid."""

    def __init__(self, grid: RadialGrid, params: ModelParams):
        if grid.N != params.N:
            raise ValidationError("params dimension does not match grid dimension")
        if grid.M < 4:
            raise ValidationError("evolution requires at least 4 cells")
        self.grid = grid
        self.params = params
        self.coupling = params.nonlinear_coupling(grid.nodes)
        self.lower, self.diag, self.upper = grid.laplacian_bands
        self._ab = np.zeros((3, grid.M), dtype=complex)

    def _apply_lap(self, v: np.ndarray) -> np.ndarray:
        out = np.empty_like(v)
        out[0] = self.diag[0] * v[0] + self.upper[0] * v[1]
        out[1:-1] = (
            self.lower[:-1] * v[:-2]
            + self.diag[1:-1] * v[1:-1]
            + self.upper[1:] * v[2:]
        )
        out[-1] = self.lower[-1] * v[-2] + self.diag[-1] * v[-1]
        return out

    def advance(self, values: np.ndarray, dt: float) -> np.ndarray:
        """One Strang step: exact phase half-step, CN linear step, phase half-step."""
        p = self.params.p
        v = values * np.exp(0.5j * dt * self.coupling * np.abs(values) ** (p - 1.0))
        half = 0.5j * dt
        ab = self._ab
        ab[0, 1:] = -half * self.upper
        ab[1, :] = 1.0 - half * self.diag
        ab[2, :-1] = -half * self.lower
        rhs = v + half * self._apply_lap(v)
        try:
            v = scipy.linalg.solve_banded((1, 1), ab, rhs,
                                          overwrite_ab=True, overwrite_b=True,
                                          check_finite=False)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise SolverError(f"linear solve breakdown: {exc}") from exc
        v *= np.exp(0.5j * dt * self.coupling * np.abs(v) ** (p - 1.0))
        return v


def step(u: FieldState, params: ModelParams, dt: float) -> FieldState:
    """Advance a field by one Strang-split step of size dt > 0."""
    if not (math.isfinite(dt) and dt > 0):
        raise ValidationError(f"dt must be positive and finite, got {dt}")
    u.require_finite()
    stepper = Stepper(u.grid, params)
    values = stepper.advance(u.values.astype(complex), dt)
    return FieldState(u.grid, values, u.t + dt)


def evolve(u0: FieldState, params: ModelParams, cfg: EvolutionConfig,
           monitor: VirialMonitor | None = None) -> RunOutcome:
    """Integrate from u0 with adaptive stepping and per-stride diagnostics.

    Never raises past the outcome record for numerical trouble; parameter
    and grid validation errors surface immediately.
    """
    u0.require_finite()
    if monitor is None:
        monitor = VirialMonitor(params, u0.grid)
    stepper = Stepper(u0.grid, params)
    grid = u0.grid

    values = u0.values.astype(complex)
    t = float(u0.t)
    t_final = u0.t + cfg.t_final
    eps_t = 1e-12 * max(1.0, abs(t_final))

    def grad_sq_of(vals) -> float:
        du = grid.radial_derivative(vals)
        return float(grid.integrate(np.abs(du) ** 2))

    g0 = grad_sq_of(values)
    sup_grad = math.sqrt(g0)
    trigger_sq = cfg.blowup_gradient_factor**2 * g0
    c_adapt = cfg.c_adapt
    if c_adapt is None:
        c_adapt = cfg.dt_initial * max(1.0, g0)

    series: list[TimeSeriesRecord] = []

    def record(state_values, t_now, grad_sq_now):
        state = FieldState(grid, state_values, t_now)
        report, r_used = monitor.evaluate(state, sup_grad)
        series.append(
            TimeSeriesRecord(
                t=t_now,
                mass=mass(state),
                energy=energy(state, params),
                grad_norm_sq=grad_sq_now,
                K=report.K,
                I=report.I,
                Iprime=report.I_prime,
                Idoubleprime=report.I_doubleprime_direct,
                R1=report.R1,
                R2=report.R2,
                R3=report.R3,
                delta_instant=report.delta_instant,
                R_cutoff=r_used,
            )
        )

    status = COMPLETED_HORIZON
    n_step = 0
    recorded_at = None
    g = g0
    while True:
        if not math.isfinite(g):
            status = NUMERICAL_FAILURE
            break
        sup_grad = max(sup_grad, math.sqrt(g))
        if n_step % cfg.record_stride == 0:
            record(values, t, g)
            recorded_at = t
        if g > trigger_sq:
            status = BLOWUP_DETECTED
            break
        if t >= t_final - eps_t:
            status = COMPLETED_HORIZON
            break
        dt = min(cfg.dt_initial, c_adapt / max(1.0, g), t_final - t)
        if dt < cfg.dt_min:
            status = STEP_UNDERFLOW
            break
        try:
            values = stepper.advance(values, dt)
        except SolverError:
            status = NUMERICAL_FAILURE
            break
        t += dt
        n_step += 1
        if np.all(np.isfinite(values)):
            g = grad_sq_of(values)
        else:
            g = math.nan

    if recorded_at != t and np.all(np.isfinite(values)):
        record(values, t, g if math.isfinite(g) else float("nan"))

    final = FieldState(grid, values, t) if np.all(np.isfinite(values)) else None
    return RunOutcome(status=status, t_end=t, series=series, final_state=final)
