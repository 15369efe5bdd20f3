import math

import numpy as np
import pytest
from scipy.integrate import quad

import inls_lab as il
from inls_lab.fields import SPHERE_SURFACE


def random_smooth_field(grid, rng):
    r = grid.nodes
    vals = np.zeros(grid.M, dtype=complex)
    for _ in range(4):
        amp = rng.uniform(0.2, 1.5) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        center = rng.uniform(0.0, 0.3 * grid.r_max)
        width = rng.uniform(0.3, 1.5)
        chirp = rng.uniform(-2.0, 2.0)
        vals += amp * np.exp(-(((r - center) / width) ** 2)) * np.exp(1j * chirp * r)
    return il.FieldState(grid, vals, 0.0)


# --- construction -------------------------------------------------------------


def test_cutoff_piecewise_values():
    phi = il.build_cutoff(1.0)
    assert phi.phi(0.5)[0] == pytest.approx(0.25, abs=1e-15)
    assert phi.phi(1.0)[0] == pytest.approx(1.0, abs=1e-15)
    assert phi.d1(1.0)[0] == pytest.approx(2.0, abs=1e-12)
    # past 2R the profile is flat: all derivatives vanish identically
    assert phi.d1(2.0 + 1e-12)[0] == 0.0
    assert phi.d2(3.0)[0] == 0.0
    assert phi.phi(2.0)[0] == pytest.approx(phi.plateau, rel=1e-12)
    assert 1.0 < phi.plateau_over_R2 < 4.0


def test_cutoff_admissibility_dense_sampling():
    for R in (0.5, 1.0, 3.0, 10.0):
        phi = il.build_cutoff(R)
        rep = phi.admissibility_report(100_000)
        assert rep["phi_min"] >= -1e-9
        assert rep["phi_excess_over_r2"] <= 1e-9
        assert rep["d2_max"] <= 2.0 + 1e-9
        assert rep["d4_max_times_R2"] <= il.CERTIFIED_QUARTIC_CONSTANT + 1e-9


def test_cutoff_quartic_scales_with_R():
    # phi'''' max scales exactly like 1/R^2
    a = il.build_cutoff(3.0).admissibility_report(20_000)["d4_max_times_R2"]
    b = il.build_cutoff(6.0).admissibility_report(20_000)["d4_max_times_R2"]
    assert a == pytest.approx(b, rel=1e-6)


def test_cutoff_c4_continuity_at_knots():
    phi = il.build_cutoff(2.0)
    eps = 1e-7
    for knot in (2.0, 4.0):
        for deriv in (phi.phi, phi.d1, phi.d2, phi.d3, phi.d4):
            left = deriv(knot - eps)[0]
            right = deriv(knot + eps)[0]
            scale = max(abs(left), abs(right), 1.0)
            assert abs(left - right) / scale < 1e-5
    # exact contact of the blend polynomials at the knots themselves
    assert phi.certificate["knot_jump_max"] < 1e-8


def test_cutoff_prime_bounded_by_2r():
    phi = il.build_cutoff(1.5)
    r = np.linspace(1e-6, 6.0, 50_000)
    assert np.max(phi.d1(r) - 2.0 * r) <= 1e-9


def test_cutoff_invalid_radius():
    with pytest.raises(il.ValidationError):
        il.build_cutoff(0.0)
    with pytest.raises(il.ValidationError):
        il.build_cutoff(-2.0)


# --- I, I', I'' ---------------------------------------------------------------


def test_I_zero_field():
    grid = il.RadialGrid(3, 12.0, 256)
    phi = il.build_cutoff(3.0)
    assert il.local_virial_I(il.FieldState(grid, np.zeros(256)), phi) == 0.0


def test_I_covering_cutoff_matches_second_moment():
    grid = il.RadialGrid(3, 12.0, 2048)
    u = il.gaussian_field(grid, 1.0, 1.0)
    phi = il.build_cutoff(grid.r_max)  # r^2 region covers the whole grid
    sigma = SPHERE_SURFACE[3]
    oracle, _ = quad(lambda r: sigma * r**4 * np.exp(-2 * r**2), 0, 12.0,
                     epsabs=1e-13, epsrel=1e-13)
    assert abs(il.local_virial_I(u, phi) - oracle) / oracle < 1e-4


def test_I_bounded_by_second_moment():
    grid = il.RadialGrid(3, 12.0, 1024)
    rng = np.random.default_rng(2)
    phi = il.build_cutoff(2.0)
    for _ in range(20):
        u = random_smooth_field(grid, rng)
        I = il.local_virial_I(u, phi)
        second = grid.integrate(grid.nodes**2 * np.abs(u.values) ** 2)
        assert 0.0 <= I <= second * (1 + 1e-12)


def test_Iprime_real_field_zero():
    grid = il.RadialGrid(3, 12.0, 1024)
    phi = il.build_cutoff(3.0)
    u = il.gaussian_field(grid, 1.3, 1.1)
    assert abs(il.local_virial_Iprime(u, phi)) < 1e-12


def test_Iprime_chirped_gaussian_oracle():
    grid = il.RadialGrid(3, 14.0, 4096)
    phi = il.build_cutoff(grid.r_max)  # phi' = 2r over the support
    r = grid.nodes
    u = il.FieldState(grid, np.exp(1j * r) * np.exp(-(r**2)))
    # u_r = (i - 2r) u; Im(u_r conj u) = |u|^2; I' = 2 int 2r |u|^2
    sigma = SPHERE_SURFACE[3]
    oracle, _ = quad(lambda s: 2 * sigma * s ** 3 * 2 * np.exp(-2 * s**2), 0, 14.0,
                     epsabs=1e-13, epsrel=1e-13)
    assert abs(il.local_virial_Iprime(u, phi) - oracle) / abs(oracle) < 1e-4


def test_Iprime_cauchy_schwarz_bound():
    grid = il.RadialGrid(2, 12.0, 1024)
    rng = np.random.default_rng(4)
    phi = il.build_cutoff(2.5)
    r = np.linspace(1e-6, 12.0, 20001)
    max_d1 = np.max(np.abs(phi.d1(r)))
    for _ in range(100):
        u = random_smooth_field(grid, rng)
        bound = 2.0 * max_d1 * math.sqrt(il.gradient_norm_sq(u)) * math.sqrt(il.mass(u))
        assert abs(il.local_virial_Iprime(u, phi)) <= bound * (1 + 1e-9)


def test_Idoubleprime_covering_equals_8K():
    grid = il.RadialGrid(3, 12.0, 2048)
    params = il.ModelParams(3, 1.0, 3.0)
    phi = il.build_cutoff(grid.r_max)
    u = il.gaussian_field(grid, 1.0, 1.0)
    Ipp = il.local_virial_Idoubleprime_direct(u, phi, params)
    K = il.K_functional(u, params)
    assert abs(Ipp - 8 * K) / abs(8 * K) < 1e-6
    # Gaussian oracle value: 8 * 4.335
    exact = 8 * (1.5 * math.pi * math.sqrt(math.pi / 2.0) - math.pi / 2.0)
    assert abs(Ipp - exact) / exact < 1e-3


def test_Idoubleprime_zero_field():
    grid = il.RadialGrid(3, 12.0, 256)
    params = il.ModelParams(3, 1.0, 3.0)
    phi = il.build_cutoff(3.0)
    assert il.local_virial_Idoubleprime_direct(
        il.FieldState(grid, np.zeros(256)), phi, params
    ) == 0.0


# --- decomposition ------------------------------------------------------------


def test_decomposition_covering_remainders_vanish():
    grid = il.RadialGrid(3, 12.0, 2048)
    params = il.ModelParams(3, 0.5, 3.0)
    phi = il.build_cutoff(grid.r_max)
    u = il.gaussian_field(grid, 1.2, 1.0)
    rep = il.decompose_remainders(u, phi, params)
    scale = abs(rep.I_doubleprime_direct) + 1.0
    assert abs(rep.R1) < 1e-8 * scale
    assert abs(rep.R2) < 1e-8 * scale
    assert abs(rep.R3) < 1e-8 * scale


def test_decomposition_identity_and_sign_random_fields():
    grid = il.RadialGrid(3, 25.0, 2048)
    params = il.ModelParams(3, 0.5, 3.0)
    rng = np.random.default_rng(17)
    for R in (1.0, 3.0, 10.0):
        phi = il.build_cutoff(R)
        for _ in range(20):
            u = random_smooth_field(grid, rng)
            rep = il.decompose_remainders(u, phi, params)
            denom = abs(rep.I_doubleprime_direct) + 8 * abs(rep.K) + 1e-30
            assert abs(rep.decomposition_residual) / denom < 1e-6
            assert rep.R1 <= 1e-10


def test_R2_interior_nodes_contribute_exactly_zero():
    # field supported strictly inside r < R: the bracket vanishes there
    grid = il.RadialGrid(3, 12.0, 1024)
    params = il.ModelParams(3, 0.5, 3.0)
    phi = il.build_cutoff(4.0)
    vals = np.where(grid.nodes < 3.0, np.exp(-grid.nodes**2), 0.0)
    u = il.FieldState(grid, vals)
    rep = il.decompose_remainders(u, phi, params)
    assert rep.R2 == 0.0


def test_delta_instant_sign_convention(gs_305, params_305):
    # K(Q) ~ 0, so delta_instant ~ 0 on the ground state; for a narrow
    # field the potential dominates and delta goes positive
    phi = il.build_cutoff(4.0)
    rep = il.decompose_remainders(gs_305.profile, phi, params_305)
    assert abs(rep.delta_instant) < 1e-3
    narrow = il.FieldState(
        gs_305.profile.grid, 1.3 * np.real(gs_305.profile.values)
    )
    rep2 = il.decompose_remainders(narrow, phi, params_305)
    assert rep2.delta_instant > 0.0


def test_domain_check_partial_overlap_rejected():
    grid = il.RadialGrid(3, 12.0, 512)
    phi = il.build_cutoff(8.0)  # blend [8, 16] cut by r_max = 12
    u = il.gaussian_field(grid, 1.0, 1.0)
    with pytest.raises(il.DomainError):
        il.local_virial_I(u, phi)


# --- remainder bounds ----------------------------------------------------------


def test_bounds_interior_supported_field():
    grid = il.RadialGrid(3, 12.0, 1024)
    params = il.ModelParams(3, 0.5, 3.0)
    phi = il.build_cutoff(5.0)
    vals = np.where(grid.nodes < 4.0, np.exp(-(grid.nodes**2)), 0.0)
    u = il.FieldState(grid, vals)
    rep = il.remainder_bounds_check(u, phi, params)
    assert rep.exterior_potential == 0.0
    assert rep.ratio_exterior == 0.0


def test_bounds_amplitude_family_share_one_constant():
    # both comparisons are homogeneous in the amplitude, so the realized
    # ratios agree across the family
    grid = il.RadialGrid(3, 12.0, 2048)
    params = il.ModelParams(3, 0.5, 3.0)
    phi = il.build_cutoff(2.0)
    ratios_ext = []
    ratios_r3 = []
    for amp in (0.5, 1.0, 2.0, 4.0, 8.0):
        u = il.gaussian_field(grid, amp, 1.0)
        rep = il.remainder_bounds_check(u, phi, params)
        ratios_ext.append(rep.ratio_exterior)
        ratios_r3.append(rep.ratio_r3)
    assert max(ratios_ext) / min(ratios_ext) == pytest.approx(1.0, rel=1e-10)
    assert max(ratios_r3) == pytest.approx(min(ratios_r3), rel=1e-10)
    assert all(r > 0 for r in ratios_ext)


def test_bounds_r3_comparison_scales_like_R_minus_2():
    grid = il.RadialGrid(3, 12.0, 1024)
    params = il.ModelParams(3, 0.5, 3.0)
    u = il.gaussian_field(grid, 1.0, 1.0)
    rep1 = il.remainder_bounds_check(u, il.build_cutoff(2.0), params)
    rep2 = il.remainder_bounds_check(u, il.build_cutoff(4.0), params)
    assert rep1.r3_bound == pytest.approx(4.0 * rep2.r3_bound, rel=1e-12)


# --- monitor -------------------------------------------------------------------


def test_monitor_fixed_default_radius():
    grid = il.RadialGrid(3, 12.0, 512)
    params = il.ModelParams(3, 0.5, 3.0)
    monitor = il.VirialMonitor(params, grid)
    profile = monitor.profile_for(1.0)
    assert profile.R == pytest.approx(0.4 * grid.r_max)


def test_monitor_adaptive_requires_rate_regime():
    grid = il.RadialGrid(2, 12.0, 512)
    params_case1 = il.ModelParams(2, 0.5, 3.0)  # alpha = 1
    with pytest.raises(il.ValidationError):
        il.VirialMonitor(params_case1, grid, mode="adaptive_RT")


def test_monitor_adaptive_radius_tracks_sup_grad():
    grid = il.RadialGrid(3, 12.0, 512)
    params = il.ModelParams(3, 0.5, 3.0)  # alpha = 1.5, exponent (2a-2)/b = 2
    monitor = il.VirialMonitor(params, grid, mode="adaptive_RT")
    r_small = monitor.profile_for(1.0).R
    r_big = monitor.profile_for(2.0).R
    assert r_small == pytest.approx(1.0)
    assert r_big == pytest.approx(4.0)
    # clamped into the grid interior
    assert monitor.profile_for(100.0).R == pytest.approx(0.45 * grid.r_max)
    assert monitor.profile_for(0.0).R == pytest.approx(4.0 * grid.dr)
