import math

import numpy as np
import pytest

import inls_lab as il
from inls_lab.ground_state import FIXED_POINT, SHOOTING, _thresholds


def test_soliton_regression(gs_soliton, grid_soliton):
    # degenerate b = 0 mode: Q = sqrt(2) sech(r), M(Q) = 4, E(Q) = -2/3
    exact = np.sqrt(2.0) / np.cosh(grid_soliton.nodes)
    err = np.max(np.abs(np.real(gs_soliton.profile.values) - exact))
    assert err < 1e-4
    assert abs(gs_soliton.mass_Q - 4.0) / 4.0 < 1e-4
    assert abs(gs_soliton.energy_Q + 2.0 / 3.0) / (2.0 / 3.0) < 1e-3


def test_residual_contract(gs_soliton, gs_305, gs_205, gs_317):
    for gs in (gs_soliton, gs_305, gs_205, gs_317):
        assert gs.residual < 1e-8 * math.sqrt(gs.mass_Q)
        assert gs.method == FIXED_POINT


def test_pohozaev_consistency(gs_305, gs_205, gs_317):
    for gs in (gs_305, gs_205, gs_317):
        K = il.K_functional(gs.profile, gs.params)
        assert abs(K) / gs.grad_Q**2 < 1e-3


def test_profile_positive_and_monotone(gs_305):
    vals = np.real(gs_305.profile.values)
    assert np.all(vals > 0)
    assert np.all(np.diff(vals) <= 1e-10 * vals.max())


def test_cross_method_mass_agreement(
    gs_305, gs_shooting_305, gs_205, gs_shooting_205, gs_317, gs_shooting_317
):
    pairs = [
        (gs_305, gs_shooting_305),
        (gs_205, gs_shooting_205),
        (gs_317, gs_shooting_317),
    ]
    for fp, sh in pairs:
        assert sh.method == SHOOTING
        assert abs(fp.mass_Q - sh.mass_Q) / fp.mass_Q < 5e-3


def test_grid_refinement_stability(params_305):
    coarse = il.solve_ground_state(params_305, il.RadialGrid(3, 12.0, 2048))
    fine = il.solve_ground_state(params_305, il.RadialGrid(3, 12.0, 4096))
    for attr in ("mass_Q", "energy_Q", "grad_Q"):
        a, b = getattr(coarse, attr), getattr(fine, attr)
        assert abs(a - b) / abs(b) < 5e-3


def test_domain_size_stability(params_205):
    # doubling r_max at fixed dr: Q decays exponentially
    small = il.solve_ground_state(params_205, il.RadialGrid(2, 12.0, 2048))
    large = il.solve_ground_state(params_205, il.RadialGrid(2, 24.0, 4096))
    for attr in ("mass_Q", "energy_Q", "grad_Q"):
        a, b = getattr(small, attr), getattr(large, attr)
        assert abs(a - b) / abs(b) < 5e-3


def test_initial_amplitude_invariance(params_305, grid_305, gs_305):
    scaled = il.solve_ground_state(
        params_305, grid_305, il.SolverOptions(initial_amplitude=10.0)
    )
    ref = np.real(gs_305.profile.values)
    diff = np.max(np.abs(np.real(scaled.profile.values) - ref)) / ref.max()
    assert diff < 1e-6


def test_energy_critical_endpoint_refused():
    params = il.ModelParams(3, 1.0, 3.0)
    grid = il.RadialGrid(3, 12.0, 1024)
    with pytest.raises(il.ValidationError):
        il.solve_ground_state(params, grid)


def test_small_grid_refused_unless_overridden(params_305):
    grid = il.RadialGrid(3, 12.0, 256)
    with pytest.raises(il.ValidationError):
        il.solve_ground_state(params_305, grid)
    gs = il.solve_ground_state(
        params_305, grid, il.SolverOptions(min_cells=256)
    )
    assert gs.mass_Q > 0


def test_iteration_budget_error(params_305, grid_305):
    with pytest.raises(il.ConvergenceError) as err:
        il.solve_ground_state(
            params_305, grid_305, il.SolverOptions(max_iterations=3)
        )
    assert err.value.last_residual is not None


# --- elliptic residual --------------------------------------------------------


def test_elliptic_residual_zero_field(params_305):
    grid = il.RadialGrid(3, 12.0, 512)
    assert il.elliptic_residual(il.FieldState(grid, np.zeros(512)), params_305) == 0.0


def test_elliptic_residual_exact_soliton_discretization_limited(params_soliton):
    # residual of the continuum solution is pure truncation error: second
    # order under refinement
    residuals = []
    for M in (2048, 4096):
        grid = il.RadialGrid(1, 12.0, M)
        u = il.FieldState(grid, np.sqrt(2.0) / np.cosh(grid.nodes))
        residuals.append(il.elliptic_residual(u, params_soliton))
    assert residuals[1] < 1e-4
    assert residuals[0] / residuals[1] > 3.0


def test_elliptic_residual_rejects_complex(params_305):
    grid = il.RadialGrid(3, 12.0, 512)
    u = il.FieldState(grid, np.exp(1j * grid.nodes) * np.exp(-grid.nodes))
    with pytest.raises(il.ValidationError):
        il.elliptic_residual(u, params_305)


# --- thresholds ---------------------------------------------------------------


def test_threshold_exponent_degeneration_sc_one():
    # s_c = 1: the products collapse onto E(Q) and ||grad Q||
    params = il.ModelParams(3, 1.0, 3.0)
    assert params.s_c == pytest.approx(1.0)
    em, gm = _thresholds(params, mass_Q=2.5, energy_Q=0.7, grad_Q=1.3)
    assert em == pytest.approx(0.7, abs=1e-15)
    assert gm == pytest.approx(1.3, abs=1e-15)


def test_threshold_exponent_degeneration_sc_zero():
    # s_c = 0: the products collapse onto M(Q) and ||Q||
    params = il.ModelParams(2, 1.0, 2.0)
    assert params.s_c == pytest.approx(0.0)
    em, gm = _thresholds(params, mass_Q=2.5, energy_Q=0.7, grad_Q=1.3)
    assert em == pytest.approx(2.5, abs=1e-14)
    assert gm == pytest.approx(math.sqrt(2.5), abs=1e-14)


def test_threshold_recombination_oracle(gs_305, params_305):
    em, gm = il.threshold_quantities(gs_305, params_305)
    s = params_305.s_c
    em_oracle = gs_305.energy_Q**s * gs_305.mass_Q ** (1 - s)
    gm_oracle = gs_305.grad_Q**s * math.sqrt(gs_305.mass_Q) ** (1 - s)
    assert abs(em - em_oracle) <= 1e-12 * em_oracle
    assert abs(gm - gm_oracle) <= 1e-12 * gm_oracle
    assert em > 0 and gm > 0


def test_threshold_mismatch_rejected(gs_305):
    with pytest.raises(il.ValidationError):
        il.threshold_quantities(gs_305, il.ModelParams(3, 0.5, 2.5))


def test_negative_energy_intercritical_inconsistency():
    params = il.ModelParams(3, 0.5, 3.0)
    with pytest.raises(il.SolverError):
        _thresholds(params, mass_Q=1.0, energy_Q=-0.2, grad_Q=1.0)


# --- persistence --------------------------------------------------------------


def test_profile_roundtrip(tmp_path, gs_205):
    path = tmp_path / "profile.txt"
    il.save_profile(gs_205, path)
    loaded = il.load_profile(path)
    assert loaded.params == gs_205.params
    assert loaded.profile.grid == gs_205.profile.grid
    assert loaded.mass_Q == gs_205.mass_Q
    assert loaded.energy_Q == gs_205.energy_Q
    assert loaded.grad_Q == gs_205.grad_Q
    assert loaded.residual == gs_205.residual
    assert np.array_equal(np.real(loaded.profile.values),
                          np.real(gs_205.profile.values))


def test_profile_load_rejects_truncated(tmp_path, gs_205):
    path = tmp_path / "profile.txt"
    il.save_profile(gs_205, path)
    text = path.read_text().splitlines()
    path.write_text("\n".join(text[:-10]) + "\n")
    with pytest.raises(il.ValidationError):
        il.load_profile(path)
