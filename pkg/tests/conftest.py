"""Shared fixtures: ground states and blow-up runs are session-scoped
because the solves are deterministic and several test modules reuse them."""

import numpy as np
import pytest

import inls_lab as il


@pytest.fixture(scope="session")
def params_soliton():
    return il.ModelParams(1, 0.0, 3.0)


@pytest.fixture(scope="session")
def params_305():
    return il.ModelParams(3, 0.5, 3.0)


@pytest.fixture(scope="session")
def params_205():
    return il.ModelParams(2, 0.5, 3.0)


@pytest.fixture(scope="session")
def params_317():
    return il.ModelParams(3, 1.0, 7.0 / 3.0)


@pytest.fixture(scope="session")
def grid_soliton():
    return il.RadialGrid(1, 12.0, 4096)


@pytest.fixture(scope="session")
def grid_305():
    return il.RadialGrid(3, 12.0, 4096)


@pytest.fixture(scope="session")
def grid_205():
    return il.RadialGrid(2, 12.0, 4096)


@pytest.fixture(scope="session")
def grid_317():
    return il.RadialGrid(3, 12.0, 8192)


@pytest.fixture(scope="session")
def gs_soliton(params_soliton, grid_soliton):
    return il.solve_ground_state(params_soliton, grid_soliton)


@pytest.fixture(scope="session")
def gs_305(params_305, grid_305):
    return il.solve_ground_state(params_305, grid_305)


@pytest.fixture(scope="session")
def gs_205(params_205, grid_205):
    return il.solve_ground_state(params_205, grid_205)


@pytest.fixture(scope="session")
def gs_317(params_317, grid_317):
    return il.solve_ground_state(params_317, grid_317)


@pytest.fixture(scope="session")
def gs_shooting_305(params_305, grid_305):
    return il.solve_ground_state(params_305, grid_305,
                                 il.SolverOptions(method="shooting"))


@pytest.fixture(scope="session")
def gs_shooting_205(params_205, grid_205):
    return il.solve_ground_state(params_205, grid_205,
                                 il.SolverOptions(method="shooting"))


@pytest.fixture(scope="session")
def gs_shooting_317(params_317, grid_317):
    return il.solve_ground_state(params_317, grid_317,
                                 il.SolverOptions(method="shooting"))


def make_multiple(gs, factor):
    """factor * Q as a fresh initial state on the ground-state grid."""
    return il.FieldState(gs.profile.grid, factor * np.real(gs.profile.values), 0.0)


@pytest.fixture(scope="session")
def blowup_run_205(params_205, gs_205):
    """1.1*Q above-threshold run at (2, 0.5, 3): the monitor scenario."""
    u0 = make_multiple(gs_205, 1.1)
    monitor = il.VirialMonitor(params_205, gs_205.profile.grid, mode="fixed_R", R=4.0)
    cfg = il.EvolutionConfig(dt_initial=1e-3, t_final=50.0,
                             blowup_gradient_factor=10.0, record_stride=5)
    return il.evolve(u0, params_205, cfg, monitor=monitor)


@pytest.fixture(scope="session")
def blowup_run_305(params_305, gs_305):
    """1.1*Q above-threshold run at (3, 0.5, 3): the rate (alpha > 1) scenario."""
    grid = il.RadialGrid(3, 12.0, 2048)
    gs = il.solve_ground_state(params_305, grid)
    u0 = make_multiple(gs, 1.1)
    cfg = il.EvolutionConfig(dt_initial=1e-3, t_final=50.0,
                             blowup_gradient_factor=10.0, record_stride=2)
    return il.evolve(u0, params_305, cfg)
