"""Ground states of -Q + Laplace(Q) + r^{-b} Q^p = 0 and their thresholds.

Two independent routes:

* fixed_point_renormalization -- the primary solver.  Each sweep inverts
  the exact discrete linear part, w = (I - Lap)^{-1}[r^{-b} Q^p], and
  rescales by S^{p/(p-1)} where S = <(I-Lap)Q, Q> / <r^{-b}Q^p, Q> is the
  weighted ratio of the two sides of the equation tested against the
  current iterate.  The renormalization makes the map amplitude-invariant,
  so any positive multiple of the Gaussian seed lands on the same profile.

* shooting -- integrates the radial ODE outward from r0 = dr/2 and
  bisects the central value between decaying and sign-changing behavior.
  It discretizes nothing the fixed-point route uses, which makes the mass
  comparison between the two a genuine cross-check.

The converged profile certifies itself through the discrete residual and
through K(Q) ~ 0 (the Pohozaev identity).  Solving is refused at p >= 2*:
combining the multiplier identity V = M + G with the scaling identity
shows M(Q) = 0 there, so no ground state exists and any converged grid
profile would be a discretization artifact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from .errors import ConvergenceError, SolverError, ValidationError
from .fields import FieldState, RadialGrid
from .functionals import energy, gradient_norm_sq, mass
from .model import ModelParams

FIXED_POINT = "fixed_point_renormalization"
SHOOTING = "shooting"


@dataclass(frozen=True)
class SolverOptions:
    method: str = FIXED_POINT
    max_iterations: int = 10_000
    change_tol: float = 1e-10
    residual_tol: float = 1e-8
    min_cells: int = 512
    initial_amplitude: float = 1.0

    def __post_init__(self):
        if self.method not in (FIXED_POINT, SHOOTING):
            raise ValidationError(f"unknown ground-state method {self.method!r}")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be positive")
        if self.initial_amplitude <= 0:
            raise ValidationError("initial_amplitude must be positive")


@dataclass(frozen=True)
class GroundState:
    """Converged profile with its invariants and threshold products."""

    params: ModelParams
    profile: FieldState
    mass_Q: float
    energy_Q: float
    grad_Q: float           # L2 norm of the gradient, not its square
    threshold_EM: float     # E(Q)^{s_c} M(Q)^{1-s_c}
    threshold_GM: float     # ||grad Q||^{s_c} ||Q||^{1-s_c}
    residual: float         # discrete L2 residual of the elliptic equation
    method: str
    iterations: int


def elliptic_residual(Q: FieldState, params: ModelParams) -> float:
    """Discrete L2 norm of -Q + Lap(Q) + r^{-b}|Q|^{p-1}Q on the grid."""
    Q.require_finite()
    if not Q.is_real():
        raise ValidationError("elliptic residual expects a real-valued profile")
    if params.N != Q.grid.N:
        raise ValidationError("params dimension does not match grid dimension")
    vals = np.real(Q.values)
    coupling = params.nonlinear_coupling(Q.grid.nodes)
    res = -vals + Q.grid.apply_laplacian(vals) + coupling * np.abs(vals) ** (
        params.p - 1.0
    ) * vals
    return float(math.sqrt(Q.grid.integrate(res**2)))


def threshold_quantities(gs: GroundState, params: ModelParams) -> tuple[float, float]:
    """(E(Q)^{s_c} M(Q)^{1-s_c}, ||grad Q||^{s_c} ||Q||^{1-s_c})."""
    if gs.params != params:
        raise ValidationError("ground state was computed for different parameters")
    return _thresholds(params, gs.mass_Q, gs.energy_Q, gs.grad_Q)


def _thresholds(params: ModelParams, mass_Q: float, energy_Q: float,
                grad_Q: float) -> tuple[float, float]:
    s = params.s_c
    if energy_Q <= 0.0:
        if params.is_intercritical:
            raise SolverError(
                f"E(Q) = {energy_Q:.6g} <= 0 for intercritical parameters: "
                "inconsistent ground state"
            )
        return math.nan, math.nan
    em = energy_Q**s * mass_Q ** (1.0 - s)
    gm = grad_Q**s * math.sqrt(mass_Q) ** (1.0 - s)
    return float(em), float(gm)


def solve_ground_state(params: ModelParams, grid: RadialGrid,
                       options: SolverOptions | None = None) -> GroundState:
    """Compute the ground state on the given grid.

    Deterministic: the iteration starts from a unit-amplitude Gaussian
    (scaled by options.initial_amplitude, which does not change the fixed
    point).  Raises ConvergenceError with the last residual if the
    iteration budget is exhausted, ValidationError outside the existence
    range 1 < p < 2*.
    """
    options = options or SolverOptions()
    if params.N != grid.N:
        raise ValidationError("params dimension does not match grid dimension")
    params.require_ground_state_range()
    if grid.M < options.min_cells:
        raise ValidationError(
            f"grid has {grid.M} cells; ground-state solves require at least "
            f"{options.min_cells} (override via SolverOptions.min_cells)"
        )
    if options.method == FIXED_POINT:
        return _solve_fixed_point(params, grid, options)
    return _solve_shooting(params, grid, options)


def _finalize(params, grid, values, method, iterations) -> GroundState:
    profile = FieldState(grid, values, 0.0)
    m = mass(profile)
    e = energy(profile, params)
    g = math.sqrt(gradient_norm_sq(profile))
    res = elliptic_residual(profile, params)
    em, gm = _thresholds(params, m, e, g)
    return GroundState(
        params=params,
        profile=profile,
        mass_Q=m,
        energy_Q=e,
        grad_Q=g,
        threshold_EM=em,
        threshold_GM=gm,
        residual=res,
        method=method,
        iterations=iterations,
    )


def _check_shape(values: np.ndarray) -> None:
    peak = float(values.max())
    if float(values.min()) <= 0.0:
        raise SolverError("converged profile is not strictly positive")
    rises = np.diff(values) > 1e-10 * peak
    if np.any(rises):
        raise SolverError("converged profile is not non-increasing in r")


def _solve_fixed_point(params, grid, options) -> GroundState:
    M = grid.M
    lower, diag, upper = grid.laplacian_bands
    # banded form of I - Lap (symmetric positive definite in the weighted
    # inner product; tridiagonal solve is its exact inverse)
    ab = np.zeros((3, M))
    ab[0, 1:] = -upper
    ab[1, :] = 1.0 - diag
    ab[2, :-1] = -lower

    coupling = params.nonlinear_coupling(grid.nodes)
    p = params.p
    gamma = p / (p - 1.0)
    w = grid.weights

    Q = options.initial_amplitude * np.exp(-grid.nodes**2)
    norm_change = math.inf
    residual = math.inf
    for iteration in range(1, options.max_iterations + 1):
        rhs = coupling * np.abs(Q) ** (p - 1.0) * Q
        lin = Q - grid.apply_laplacian(Q)
        ratio = float(np.sum(w * lin * Q) / np.sum(w * rhs * Q))
        Q_next = ratio**gamma * scipy.linalg.solve_banded((1, 1), ab, rhs)
        norm_change = float(
            np.max(np.abs(Q_next - Q)) / max(np.max(np.abs(Q_next)), 1e-300)
        )
        Q = Q_next
        if norm_change < options.change_tol:
            residual = elliptic_residual(FieldState(grid, Q), params)
            rel = residual / math.sqrt(float(np.sum(w * Q * Q)))
            if rel < options.residual_tol:
                break
    else:
        residual = elliptic_residual(FieldState(grid, Q), params)
        rel = residual / math.sqrt(float(np.sum(w * Q * Q)))
        raise ConvergenceError(
            f"fixed-point iteration exhausted {options.max_iterations} sweeps "
            f"(last change {norm_change:.3e}, relative residual {rel:.3e})",
            last_residual=residual,
            iterations=options.max_iterations,
        )
    _check_shape(Q)
    return _finalize(params, grid, Q, FIXED_POINT, iteration)


# -- shooting ----------------------------------------------------------------


def _shoot_once(params, Q0, r0, r_stop, dense_r=None):
    """Integrate the radial ODE outward; classify or sample the trajectory."""
    N, b, p = params.N, params.b, params.p

    def rhs(r, y):
        Q, P = y
        force = Q - r ** (-b) * np.sign(Q) * np.abs(Q) ** p if b else (
            Q - np.sign(Q) * np.abs(Q) ** p
        )
        return (P, force - (N - 1) / r * P)

    # regular-solution series: Q'(r) = Q0 r / N - Q0^p r^{1-b}/(N-b) + ...
    P0 = Q0 * r0 / N - Q0**p * r0 ** (1.0 - b) / (N - b)

    def crossed(r, y):
        return y[0]

    crossed.terminal = True
    crossed.direction = -1.0

    def turned(r, y):
        return y[1]

    turned.terminal = True
    turned.direction = 1.0

    sol = solve_ivp(
        rhs,
        (r0, r_stop),
        (Q0, P0),
        method="RK45",
        rtol=1e-10,
        atol=1e-12 * Q0,
        events=(crossed, turned),
        t_eval=dense_r,
        max_step=r_stop / 50.0,
    )
    return sol


def _classify_shot(sol, Q0, r_stop) -> int:
    """+1: crossed zero (Q0 too large); -1: turned or survived (too small)."""
    if sol.t_events[0].size:
        return 1
    if sol.t_events[1].size:
        return -1
    tail = sol.y[0][-1]
    return -1 if tail > Q0 * math.exp(-0.8 * r_stop) else 1

def _solve_shooting(params, grid, options) -> GroundState:
    r0 = grid.dr / 2.0
    r_stop = grid.r_max

    lo, hi = 1e-2, 1.0
    # grow hi until the shot crosses zero
    for _ in range(60):
        if _classify_shot(_shoot_once(params, hi, r0, r_stop), hi, r_stop) > 0:
            break
        lo = hi
        hi *= 2.0
    else:
        raise ConvergenceError("shooting could not bracket the ground state")
    iterations = 0
    for _ in range(min(options.max_iterations, 200)):
        iterations += 1
        mid = 0.5 * (lo + hi)
        if _classify_shot(_shoot_once(params, mid, r0, r_stop), mid, r_stop) > 0:
            hi = mid
        else:
            lo = mid
        if (hi - lo) < 1e-14 * hi:
            break

    Q0 = lo  # the staying-positive side
    sol = _shoot_once(params, Q0, r0, r_stop, dense_r=grid.nodes)
    values = np.zeros(grid.M)
    n_got = sol.y[0].size
    values[:n_got] = sol.y[0]
    # the integration stops where the unstable mode takes over; graft the
    # far-field asymptotic C r^{-(N-1)/2} e^{-r} beyond the last good node
    good = np.where(values[: max(n_got, 1)] > 0)[0]
    if good.size == 0:
        raise ConvergenceError("shooting produced no positive profile")
    cut = good[-1]
    # back off from the contaminated end before grafting
    cut = max(int(cut * 0.9), 1)
    r_cut = grid.nodes[cut]
    tail = grid.nodes[cut + 1 :]
    values[cut + 1 :] = (
        values[cut]
        * (r_cut / tail) ** ((params.N - 1) / 2.0)
        * np.exp(-(tail - r_cut))
    )
    _check_shape(values)
    return _finalize(params, grid, values, SHOOTING, iterations)


# -- profile persistence ------------------------------------------------------

_HEADER_KEYS = (
    "N", "b", "p", "r_max", "M",
    "mass_Q", "energy_Q", "grad_Q", "residual", "method", "iterations",
)


def save_profile(gs: GroundState, path) -> None:
    """Write the profile file: '# key = value' header lines, then r,value rows."""
    path = Path(path)
    grid = gs.profile.grid
    meta = {
        "N": gs.params.N,
        "b": gs.params.b,
        "p": gs.params.p,
        "r_max": grid.r_max,
        "M": grid.M,
        "mass_Q": gs.mass_Q,
        "energy_Q": gs.energy_Q,
        "grad_Q": gs.grad_Q,
        "residual": gs.residual,
        "method": gs.method,
        "iterations": gs.iterations,
    }
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for key in _HEADER_KEYS:
            value = meta[key]
            if isinstance(value, float):
                fh.write(f"# {key} = {value:.17g}\n")
            else:
                fh.write(f"# {key} = {value}\n")
        fh.write("r,value\n")
        vals = np.real(gs.profile.values)
        for r, v in zip(grid.nodes, vals):
            fh.write(f"{r:.17g},{v:.17g}\n")


def load_profile(path) -> GroundState:
    """Read a profile file written by save_profile."""
    path = Path(path)
    meta: dict = {}
    rows: list[tuple[float, float]] = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line.lstrip("# ").partition("=")
                meta[key.strip()] = value.strip()
            elif line == "r,value":
                continue
            else:
                r_str, _, v_str = line.partition(",")
                rows.append((float(r_str), float(v_str)))
    missing = [k for k in _HEADER_KEYS if k not in meta]
    if missing:
        raise ValidationError(f"profile file {path} missing header keys: {missing}")
    params = ModelParams(int(meta["N"]), float(meta["b"]), float(meta["p"]))
    grid = RadialGrid(params.N, float(meta["r_max"]), int(meta["M"]))
    if len(rows) != grid.M:
        raise ValidationError(
            f"profile file {path} has {len(rows)} rows for a grid of {grid.M} cells"
        )
    values = np.array([v for _, v in rows])
    stored_r = np.array([r for r, _ in rows])
    if not np.allclose(stored_r, grid.nodes, rtol=0, atol=1e-12 * grid.r_max):
        raise ValidationError(f"profile file {path} radii do not match its grid header")
    m = float(meta["mass_Q"])
    e = float(meta["energy_Q"])
    g = float(meta["grad_Q"])
    em, gm = _thresholds(params, m, e, g)
    return GroundState(
        params=params,
        profile=FieldState(grid, values, 0.0),
        mass_Q=m,
        energy_Q=e,
        grad_Q=g,
        threshold_EM=em,
        threshold_GM=gm,
        residual=float(meta["residual"]),
        method=meta["method"],
        iterations=int(meta["iterations"]),
    )
