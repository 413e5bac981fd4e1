"""Problem data: two-power nonlinearities, parameters, hypothesis checks,
the energy functional, its directional derivative, and the Riesz gradient
with respect to the Dirichlet inner product.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .mesh import Mesh, WeightField
from .operators import SpectralData, StiffnessOperator, solve_dirichlet

# sampling grid for hypothesis verification: dense log-spaced magnitudes
HYP_SAMPLES = np.concatenate([-np.logspace(-3, 3, 61)[::-1], np.logspace(-3, 3, 61)])


def _power(u, exponent):
    """sign(u) |u|^(exponent-1), safe at u = 0 for any exponent > 1."""
    return np.sign(u) * np.abs(u) ** (exponent - 1.0)


@dataclass(frozen=True)
class Nonlinearity:
    """Two-power superlinear term on the focusing set and penalty term on the
    defocusing set:

        f(x, u) = a1 |u|^(p1-2) u + a2 |u|^(p2-2) u
        g(x, u) = b1 |u|^(q1-2) u + b2 |u|^(q2-2) u

    Coefficients are nodal (interior-indexed) and nonnegative; exponents obey
    2 < p1, p2 and 1 < q1, q2.  Growth data (theta, vartheta, the reference
    exponent and the constants C0, C0', C1) are derived for reporting.
    """

    p1: float
    p2: float
    q1: float
    q2: float
    a1: np.ndarray
    a2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        for name, p in (("p1", self.p1), ("p2", self.p2)):
            if p <= 2:
                raise ConfigError(f"{name} must exceed 2, got {p}")
        for name, q in (("q1", self.q1), ("q2", self.q2)):
            if q <= 1:
                raise ConfigError(f"{name} must exceed 1, got {q}")
        for name in ("a1", "a2", "b1", "b2"):
            arr = getattr(self, name)
            if np.any(arr < 0):
                raise ConfigError(f"coefficient field {name} must be nonnegative")

    # -- derived exponents -------------------------------------------------
    def _active_f(self):
        return [(p, c) for p, c in ((self.p1, self.a1), (self.p2, self.a2))
                if float(c.max()) > 0]

    def _active_g(self):
        return [(q, c) for q, c in ((self.q1, self.b1), (self.q2, self.b2))
                if float(c.max()) > 0]

    @property
    def theta(self) -> float:
        """Superlinearity exponent: min p over powers actually present."""
        active = self._active_f()
        return min(p for p, _ in active) if active else self.p1

    @property
    def vartheta(self) -> float:
        active = self._active_g()
        return min(q for q, _ in active) if active else self.q1

    @property
    def growth_p(self) -> float:
        """Reference subcritical exponent bounding every active power."""
        exps = [p for p, _ in self._active_f()] + [q for q, _ in self._active_g()]
        return max(exps) if exps else self.p1

    @property
    def c0(self) -> float:
        """|f'(x,u)| <= c0 (1 + |u|^(p-2)) with p = growth_p."""
        return float((self.a1 * (self.p1 - 1)).max() + (self.a2 * (self.p2 - 1)).max())

    @property
    def c0_prime(self) -> float:
        """|g(x,u)| <= c0' (1 + |u|^(p-1))."""
        return float(self.b1.max() + self.b2.max())

    @property
    def c1(self) -> float:
        """Power-sum growth constant used in the diagnostic constants."""
        return max(self.c0, float(self.a1.max() + self.a2.max()))

    # -- evaluation (vectorized over nodal arrays) -------------------------
    def f(self, u):
        return self.a1 * _power(u, self.p1) + self.a2 * _power(u, self.p2)

    def fprime(self, u):
        return (self.a1 * (self.p1 - 1.0) * np.abs(u) ** (self.p1 - 2.0)
                + self.a2 * (self.p2 - 1.0) * np.abs(u) ** (self.p2 - 2.0))

    def F(self, u):
        return (self.a1 * np.abs(u) ** self.p1 / self.p1
                + self.a2 * np.abs(u) ** self.p2 / self.p2)

    def g(self, u):
        return self.b1 * _power(u, self.q1) + self.b2 * _power(u, self.q2)

    def G(self, u):
        return (self.b1 * np.abs(u) ** self.q1 / self.q1
                + self.b2 * np.abs(u) ** self.q2 / self.q2)


def nonlinearity_from_scalars(n_interior: int, p1: float, q1: float,
                              a1: float = 1.0, b1: float = 1.0,
                              p2: float | None = None, a2: float = 0.0,
                              q2: float | None = None, b2: float = 0.0) -> Nonlinearity:
    """Convenience constructor with constant coefficient fields."""
    ones = np.ones(n_interior)
    return Nonlinearity(p1=p1, p2=p2 if p2 is not None else p1,
                        q1=q1, q2=q2 if q2 is not None else q1,
                        a1=a1 * ones, a2=a2 * ones, b1=b1 * ones, b2=b2 * ones)


@dataclass(frozen=True)
class ProblemSpec:
    """Everything a solve needs: mesh, weights, operators, parameters."""

    mesh: Mesh
    weights: WeightField
    A: StiffnessOperator
    nonlin: Nonlinearity
    lam: float = 0.0
    mu: float = 0.0
    linear_tol: float = 1e-10

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError(f"lambda must be nonnegative, got {self.lam}")
        if self.mu < 0:
            raise ConfigError(f"mu must be nonnegative, got {self.mu}")

    def with_mu(self, mu: float) -> "ProblemSpec":
        return replace(self, mu=mu)

    # -- energy and derivatives --------------------------------------------
    def energy(self, u: np.ndarray) -> float:
        """I(u) = 1/2 ||u||^2 - lam/2 int a+ u^2 - int (a+ F(u) - mu a- G(u))."""
        w = self.weights
        quad = self.mesh.quad
        quadratic = 0.5 * self.A.inner(u, u) - 0.5 * self.lam * float(
            np.sum(quad * w.a_plus * u * u))
        nonlinear = float(np.sum(quad * (w.a_plus * self.nonlin.F(u)
                                         - self.mu * w.a_minus * self.nonlin.G(u))))
        return quadratic - nonlinear

    def pde_residual(self, u: np.ndarray) -> np.ndarray:
        """Nodal residual r with r z = I'(u)(z) for every direction z."""
        w = self.weights
        load = w.a_plus * (self.lam * u + self.nonlin.f(u)) \
            - self.mu * w.a_minus * self.nonlin.g(u)
        return self.A.apply(u) - self.mesh.quad * load

    def energy_derivative(self, u: np.ndarray, z: np.ndarray) -> float:
        """Directional derivative I'(u)(z)."""
        return float(z @ self.pde_residual(u))

    def riesz_gradient(self, u: np.ndarray, tol: float | None = None,
                       x0: np.ndarray | None = None) -> np.ndarray:
        """Field G with <G, z> = I'(u)(z); vanishes exactly at weak solutions."""
        return solve_dirichlet(self.A, self.pde_residual(u),
                               tol=tol if tol is not None else self.linear_tol, x0=x0)

    def penalty_value(self, u: np.ndarray) -> float:
        """mu * int a- G(u), the penalty actually paid on the defocusing set."""
        return self.mu * float(np.sum(self.mesh.quad * self.weights.a_minus
                                      * self.nonlin.G(u)))


@dataclass(frozen=True)
class HypothesisReport:
    """Outcome of the four structural hypothesis checks, with witnesses."""

    passed: dict[str, bool]
    witnesses: dict[str, str]
    lambda_min: float

    @property
    def all_passed(self) -> bool:
        return all(self.passed.values())

    def lines(self) -> list[str]:
        out = []
        for key in ("a", "b", "c", "d"):
            status = "pass" if self.passed[key] else "FAIL"
            msg = self.witnesses.get(key, "")
            out.append(f"  ({key}) {status}" + (f"  [{msg}]" if msg else ""))
        return out


def check_hypotheses(spec: ProblemSpec, spectral: SpectralData) -> HypothesisReport:
    """Verify the growth, superlinearity, convexity-type and spectral
    hypotheses by dense sampling over signed log-spaced magnitudes.

    (a) derivative/penalty growth bounds with the derived constants,
    (b) theta F <= u f and vartheta G <= u g with strict positivity,
    (c) f(x,u)/u < f'(x,u) away from 0,
    (d) 0 <= lambda < the smallest component eigenvalue.
    Failures are reported with witnesses, never raised.
    """
    nl = spec.nonlin
    w = spec.weights
    passed, witness = {}, {}
    u = HYP_SAMPLES
    au = np.abs(u)
    pos = w.a_plus > 0
    neg = w.a_minus > 0
    p = nl.growth_p

    # (node, sample) matrices via coefficient[:, None] * power[None, :]
    def two_power(c1, e1, c2, e2, powers):
        return c1[:, None] * powers(e1)[None, :] + c2[:, None] * powers(e2)[None, :]

    fprime_m = two_power(nl.a1 * (nl.p1 - 1), nl.p1, nl.a2 * (nl.p2 - 1), nl.p2,
                         lambda e: au ** (e - 2.0))
    f_over_u = two_power(nl.a1, nl.p1, nl.a2, nl.p2, lambda e: au ** (e - 2.0))
    F_m = two_power(nl.a1 / nl.p1, nl.p1, nl.a2 / nl.p2, nl.p2, lambda e: au ** e)
    uf_m = f_over_u * (u * u)[None, :]
    g_over_u = two_power(nl.b1, nl.q1, nl.b2, nl.q2, lambda e: au ** (e - 2.0))
    G_m = two_power(nl.b1 / nl.q1, nl.q1, nl.b2 / nl.q2, nl.q2, lambda e: au ** e)
    ug_m = g_over_u * (u * u)[None, :]

    # (a): growth bounds
    bound_f = nl.c0 * (1.0 + au ** (p - 2.0))[None, :]
    bound_g = nl.c0_prime * (1.0 + au ** (p - 1.0))[None, :]
    ok_a = np.all(fprime_m[pos] <= bound_f * (1 + 1e-12)) and \
        np.all(g_over_u[neg] * au[None, :] <= bound_g * (1 + 1e-12))
    passed["a"] = bool(ok_a)
    if not passed["a"]:
        witness["a"] = "growth bound violated on sampled range"

    # (b): superlinearity with positivity on the respective supports
    ok_f = np.all(nl.theta * F_m[pos] <= uf_m[pos] * (1 + 1e-12)) and \
        np.all(F_m[pos] > 0)
    ok_g = np.all(nl.vartheta * G_m[neg] <= ug_m[neg] * (1 + 1e-12)) and \
        np.all(G_m[neg] > 0)
    passed["b"] = bool(ok_f and ok_g)
    if not passed["b"]:
        witness["b"] = "theta F <= u f (or positivity) violated on sampled range"

    # (c): strict monotonicity of f(x,u)/u
    passed["c"] = bool(np.all(f_over_u[pos] < fprime_m[pos] + 1e-15))
    if not passed["c"]:
        witness["c"] = "f/u < f' violated on sampled range"

    # (d): spectral admissibility of lambda
    lam_min = spectral.lambda_min
    passed["d"] = 0.0 <= spec.lam < lam_min
    if not passed["d"]:
        smallest = min(spectral.eigenvalues, key=spectral.eigenvalues.get)
        witness["d"] = (f"lambda = {spec.lam:g} not in [0, {lam_min:g}); "
                        f"binding eigenvalue on component '{smallest}'")

    return HypothesisReport(passed=passed, witnesses=witness, lambda_min=lam_min)
