"""Conserved quantities and variational functionals of a radial field.

All integrals share the grid's shell-volume quadrature:

    mass              M(u) = int |u|^2
    gradient_norm_sq       = int |du/dr|^2
    weighted_potential      = int r^{-b} |u|^{p+1}
    energy            E(u) = 1/2 int |du/dr|^2 - 1/(p+1) int r^{-b}|u|^{p+1}
    K_functional      K(u) = int |du/dr|^2 - (N(p-1)+2b)/(2(p+1)) int r^{-b}|u|^{p+1}

K vanishes on the ground state (Pohozaev) and controls the convexity of
the variance: d^2/dt^2 int r^2 |u|^2 = 8 K(u) along the flow.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ResolutionError, ValidationError
from .fields import FieldState
from .model import ModelParams


def k_coefficient(params: ModelParams) -> float:
    """Potential-term coefficient (N(p-1)+2b)/(2(p+1)) in K."""
    return (params.N * (params.p - 1.0) + 2.0 * params.b) / (2.0 * (params.p + 1.0))


def mass(u: FieldState) -> float:
    u.require_finite()
    return float(u.grid.integrate(np.abs(u.values) ** 2))


def gradient_norm_sq(u: FieldState) -> float:
    u.require_finite()
    if u.grid.M < 4:
        raise ValidationError("gradient_norm_sq requires a grid with at least 4 cells")
    du = u.grid.radial_derivative(u.values)
    return float(u.grid.integrate(np.abs(du) ** 2))


def weighted_potential(u: FieldState, params: ModelParams,
                       exterior_of: float | None = None) -> float:
    """int r^{-b} |u|^{p+1}, optionally restricted to nodes with r > exterior_of."""
    u.require_finite()
    if params.N != u.grid.N:
        raise ValidationError("params dimension does not match grid dimension")
    vals = np.abs(u.values) ** (params.p + 1.0)
    coupling = params.nonlinear_coupling(u.grid.nodes)
    integrand = u.grid.weights * coupling * vals
    if exterior_of is not None:
        integrand = integrand[u.grid.nodes > exterior_of]
    return float(np.sum(integrand))


def energy(u: FieldState, params: ModelParams) -> float:
    return 0.5 * gradient_norm_sq(u) - weighted_potential(u, params) / (params.p + 1.0)


def K_functional(u: FieldState, params: ModelParams) -> float:
    return gradient_norm_sq(u) - k_coefficient(params) * weighted_potential(u, params)


def apply_scaling(u: FieldState, params: ModelParams, lam: float,
                  tail_tol: float = 1e-9) -> FieldState:
    """Rescaled field lam^{(2-b)/(p-1)} u(lam r) at time lam^2 t, on the same grid.

    In the continuum the rescaling multiplies the mass by lam^{-2 s_c} and
    the squared gradient norm by lam^{2-2 s_c}.  Resampling uses a cubic
    spline with even extension through r = 0; the operation refuses inputs
    whose rescaled support does not fit the grid (significant amplitude
    would be pushed past r_max).
    """
    u.require_finite()
    if not (np.isfinite(lam) and lam > 0):
        raise ValidationError(f"scaling factor must be positive, got {lam}")
    if params.N != u.grid.N:
        raise ValidationError("params dimension does not match grid dimension")
    if lam == 1.0:
        return FieldState(u.grid, u.values, u.t)

    grid = u.grid
    scale = lam ** ((2.0 - params.b) / (params.p - 1.0))
    peak = u.abs_max()
    if peak == 0.0:
        return FieldState(grid, np.zeros_like(u.values), lam**2 * u.t)

    if lam > 1.0:
        # sampling u at lam*r reaches past r_max; only valid if the tail there
        # is negligible (extended by zero).
        if np.max(np.abs(u.values[grid.nodes > grid.r_max / lam])) > tail_tol * peak:
            raise ResolutionError(
                f"rescaling with lam={lam} samples a non-negligible tail beyond r_max"
            )

    # even extension through the origin keeps the spline accurate on the
    # first few cells.
    n_ext = min(4, grid.M)
    r_ext = np.concatenate([-grid.nodes[:n_ext][::-1], grid.nodes])
    v_ext = np.concatenate([u.values[:n_ext][::-1], u.values])
    spline = CubicSpline(r_ext, v_ext, extrapolate=False)
    target = lam * grid.nodes
    new_vals = spline(target)
    new_vals = np.where(np.isnan(new_vals), 0.0, new_vals) * scale
    out = FieldState(grid, new_vals, lam**2 * u.t)

    if lam < 1.0:
        # the support was stretched by 1/lam; refuse if it now leaks off the
        # grid boundary.
        boundary = np.max(np.abs(out.values[grid.nodes > 0.95 * grid.r_max]))
        if boundary > tail_tol * out.abs_max():
            raise ResolutionError(
                f"rescaling with lam={lam} stretches the field past r_max"
            )
    return out
