import numpy as np
import pytest

import multibump as mb
from multibump.errors import ConfigError
from multibump.model import check_hypotheses, nonlinearity_from_scalars


def scalar_nonlin(**kw):
    return nonlinearity_from_scalars(1, **kw)


class TestNonlinearity:
    def test_pure_power_values(self):
        nl = scalar_nonlin(p1=4.0, q1=2.0)
        u = np.array([2.0])
        assert nl.f(u)[0] == pytest.approx(8.0)
        assert nl.F(u)[0] == pytest.approx(4.0)
        assert nl.fprime(u)[0] == pytest.approx(12.0)

    def test_vanishing_at_zero(self):
        nl = scalar_nonlin(p1=4.0, q1=1.5)
        z = np.array([0.0])
        for fn in (nl.f, nl.F, nl.fprime, nl.g, nl.G):
            assert fn(z)[0] == 0.0

    def test_theta_identity_pure_power(self):
        nl = scalar_nonlin(p1=4.0, q1=2.0)
        for u in (-1.0, 0.5, 3.0):
            arr = np.array([u])
            assert u * nl.f(arr)[0] - 4.0 * nl.F(arr)[0] == pytest.approx(0.0, abs=1e-14)

    def test_antiderivative_consistency(self, rng):
        # F and G are exact antiderivatives: central differences match f, g
        nl = scalar_nonlin(p1=3.2, p2=4.5, a2=0.7, q1=1.8, q2=2.5, b2=0.3)
        eps = 1e-6
        for u in rng.uniform(-3, 3, 10):
            arr = np.array([u])
            fd = (nl.F(np.array([u + eps])) - nl.F(np.array([u - eps]))) / (2 * eps)
            assert fd[0] == pytest.approx(nl.f(arr)[0], rel=1e-6, abs=1e-8)
            gd = (nl.G(np.array([u + eps])) - nl.G(np.array([u - eps]))) / (2 * eps)
            assert gd[0] == pytest.approx(nl.g(arr)[0], rel=1e-6, abs=1e-8)

    def test_exponent_validation(self):
        with pytest.raises(ConfigError, match="p1 must exceed 2"):
            scalar_nonlin(p1=2.0, q1=2.0)
        with pytest.raises(ConfigError, match="q1 must exceed 1"):
            scalar_nonlin(p1=3.0, q1=1.0)

    def test_negative_coefficient_rejected(self):
        ones = np.ones(3)
        with pytest.raises(ConfigError, match="nonnegative"):
            mb.Nonlinearity(p1=4.0, p2=4.0, q1=2.0, q2=2.0, a1=-ones,
                            a2=0 * ones, b1=ones, b2=0 * ones)

    def test_growth_exponents(self):
        nl = scalar_nonlin(p1=3.0, p2=5.0, a2=1.0, q1=2.0, q2=6.0, b2=1.0)
        assert nl.theta == 3.0
        assert nl.vartheta == 2.0
        assert nl.growth_p == 6.0
        # inactive powers are ignored
        nl2 = scalar_nonlin(p1=3.0, p2=5.0, a2=0.0, q1=2.0)
        assert nl2.theta == 3.0 and nl2.growth_p == 3.0

    def test_monotone_fiber_integrand(self, rng):
        # u d/du (f/u) > 0 away from zero (consequence of the convexity bound)
        nl = scalar_nonlin(p1=3.5, p2=4.5, a2=0.5, q1=2.0)
        for u in rng.uniform(-4, 4, 20):
            if abs(u) < 1e-3:
                continue
            eps = 1e-6 * abs(u)
            up, um = np.array([u + eps]), np.array([u - eps])
            deriv = (nl.f(up) / (u + eps) - nl.f(um) / (u - eps)) / (2 * eps)
            assert u * deriv[0] > 0


class TestHypotheses:
    def test_f1_passes(self, spec_f1, spectral_f1):
        rep = check_hypotheses(spec_f1, spectral_f1)
        assert rep.all_passed
        assert rep.lambda_min == spectral_f1.lambda_min

    def test_lambda_at_threshold_fails_d(self, spec_f1, spectral_f1):
        from dataclasses import replace
        bad = replace(spec_f1, lam=spectral_f1.lambda_min)
        rep = check_hypotheses(bad, spectral_f1)
        assert not rep.passed["d"]
        assert "lambda" in rep.witnesses["d"]

    def test_report_lines(self, spec_f1, spectral_f1):
        rep = check_hypotheses(spec_f1, spectral_f1)
        assert len(rep.lines()) == 4
        assert all("pass" in line for line in rep.lines())


class TestEnergy:
    def test_zero_field(self, spec_f1):
        assert spec_f1.energy(np.zeros(spec_f1.A.n)) == 0.0

    def test_scaling_split(self, spec_f1, seed_f1):
        # lam = 0, mu = 0, single power p = 4: I(tu) = t^2 a - t^4 b
        spec = spec_f1.with_mu(0.0)
        u = seed_f1.u
        a = 0.5 * spec.A.inner(u, u)
        b = float(np.sum(spec.mesh.quad * spec.weights.a_plus * u ** 4 / 4))
        for t in (1.0, 2.0):
            assert spec.energy(t * u) == pytest.approx(t ** 2 * a - t ** 4 * b,
                                                       rel=1e-12)

    def test_coefficient_linearity(self, mesh_f1, weights_f1, A_f1, seed_f1):
        # the nonlinear term scales linearly in the coefficient field
        vals = {}
        for c in (1.0, 2.0):
            nl = nonlinearity_from_scalars(mesh_f1.n_interior, p1=4.0, q1=2.0, a1=c)
            spec = mb.ProblemSpec(mesh=mesh_f1, weights=weights_f1, A=A_f1,
                                  nonlin=nl, lam=0.0, mu=0.0)
            vals[c] = 0.5 * A_f1.inner(seed_f1.u, seed_f1.u) - spec.energy(seed_f1.u)
        assert vals[2.0] == pytest.approx(2.0 * vals[1.0], rel=1e-12)

    def test_against_nodewise_quadrature_oracle(self, spec_f1, seed_f1):
        # independent slow path: every integral re-evaluated node by node
        spec = spec_f1.with_mu(10.0)
        u = seed_f1.u
        nl = spec.nonlin
        acc = 0.5 * float(u @ (spec.A.matrix @ u))
        x_ap = spec.weights.a_plus
        x_am = spec.weights.a_minus
        for i in range(u.size):
            ui = u[i]
            F = nl.a1[i] * abs(ui) ** nl.p1 / nl.p1 + nl.a2[i] * abs(ui) ** nl.p2 / nl.p2
            G = nl.b1[i] * abs(ui) ** nl.q1 / nl.q1 + nl.b2[i] * abs(ui) ** nl.q2 / nl.q2
            acc -= spec.mesh.quad[i] * (x_ap[i] * (F + 0.5 * spec.lam * ui * ui)
                                        - 10.0 * x_am[i] * G)
        assert spec.energy(u) == pytest.approx(acc, rel=1e-12)


class TestDerivative:
    def test_zero_field(self, spec_f1, rng):
        z = rng.standard_normal(spec_f1.A.n)
        assert spec_f1.energy_derivative(np.zeros_like(z), z) == 0.0

    def test_pure_power_identity(self, spec_f1, seed_f1):
        # I'(u)(u) = ||u||^2 - int a+ u^4 at lam = mu = 0
        spec = spec_f1.with_mu(0.0)
        u = seed_f1.u
        expected = spec.A.inner(u, u) - float(
            np.sum(spec.mesh.quad * spec.weights.a_plus * u ** 4))
        assert spec.energy_derivative(u, u) == pytest.approx(expected, rel=1e-12)

    def test_finite_difference_consistency(self, spec_f1, rng):
        eps = 1e-5
        for _ in range(20):
            u = rng.standard_normal(spec_f1.A.n)
            z = rng.standard_normal(spec_f1.A.n)
            deriv = spec_f1.energy_derivative(u, z)
            fd = (spec_f1.energy(u + eps * z) - spec_f1.energy(u - eps * z)) / (2 * eps)
            assert abs(deriv - fd) <= 1e-5 * (1.0 + abs(deriv))


class TestRieszGradient:
    def test_zero_field(self, spec_f1):
        g = spec_f1.riesz_gradient(np.zeros(spec_f1.A.n))
        assert np.all(g == 0.0)

    def test_represents_derivative(self, spec_f1, rng):
        u = rng.standard_normal(spec_f1.A.n)
        g = spec_f1.riesz_gradient(u)
        for _ in range(5):
            z = rng.standard_normal(spec_f1.A.n)
            lhs = spec_f1.A.inner(g, z)
            rhs = spec_f1.energy_derivative(u, z)
            assert abs(lhs - rhs) <= 1e-8 * spec_f1.A.norm(z) * max(1.0, abs(rhs))

    def test_penalty_value(self, spec_f1, seed_f1):
        # the seed carries no mass on the negative set
        assert spec_f1.penalty_value(seed_f1.residual) == 0.0
        u = np.ones(spec_f1.A.n)
        expected = 1000.0 * float(np.sum(spec_f1.mesh.quad
                                         * spec_f1.weights.a_minus * 0.5))
        assert spec_f1.penalty_value(u) == pytest.approx(expected, rel=1e-12)
