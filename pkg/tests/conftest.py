"""Shared fixtures: the sinusoidal three-component interval problem used
throughout (called F1 in the tests), a coarse 2D strip problem, and the
expensive session artifacts (spectral data, seed, constants, sweep)."""

import numpy as np
import pytest

import multibump as mb


@pytest.fixture(scope="session")
def mesh_f1():
    return mb.build_mesh([(0.0, 5.0)], [501])


@pytest.fixture(scope="session")
def weights_f1(mesh_f1):
    return mb.build_weight_field(mesh_f1, {"kind": "sinusoidal"})


@pytest.fixture(scope="session")
def A_f1(mesh_f1):
    return mb.assemble_stiffness(mesh_f1)


@pytest.fixture(scope="session")
def spec_f1(mesh_f1, weights_f1, A_f1):
    nl = mb.nonlinearity_from_scalars(mesh_f1.n_interior, p1=4.0, q1=2.0)
    return mb.ProblemSpec(mesh=mesh_f1, weights=weights_f1, A=A_f1, nonlin=nl,
                          lam=0.0, mu=1000.0)


@pytest.fixture(scope="session")
def spectral_f1(A_f1, weights_f1):
    return mb.compute_spectral_data(A_f1, weights_f1)


@pytest.fixture(scope="session")
def seed_f1(spec_f1):
    return mb.build_seed(spec_f1)


@pytest.fixture(scope="session")
def constants_f1(spec_f1, spectral_f1, seed_f1):
    return mb.compute_constants(spec_f1, spectral_f1, spec_f1.energy(seed_f1.u))


@pytest.fixture(scope="session")
def solve_opts():
    return mb.SolveOptions(max_iterations=30000)


@pytest.fixture(scope="session")
def sweep_f1(spec_f1, constants_f1, seed_f1, solve_opts):
    """Warm-started sweep over mu = 10, 100, 1000 plus the limit problems."""
    reports = mb.mu_sweep(spec_f1, [10.0, 100.0, 1000.0], solve_opts,
                          constants_f1, seed=seed_f1)
    limit = mb.solve_limit_problems(spec_f1, solve_opts)
    return reports, limit


@pytest.fixture(scope="session")
def mesh_2d():
    return mb.build_mesh([(0.0, 5.0), (0.0, 1.0)], [51, 11])


@pytest.fixture(scope="session")
def weights_2d(mesh_2d):
    return mb.build_weight_field(mesh_2d, {"kind": "sinusoidal", "axis": 0})


@pytest.fixture(scope="session")
def A_2d(mesh_2d):
    return mb.assemble_stiffness(mesh_2d)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
