"""The Nehari-type constraint set: scaling (fiber) equations for the signed
components, the projection that restores them, the fiber energy and its
curvature, the analytic constants, the seed construction, and the membership
report.

A field decomposed as u = tilde + hat + bar + residual is scaled through the
chart

    phi(r, s, t) = r*tilde+ - s*tilde- + t*hat+ - hat- + bar + residual,

and the three scalings are chosen so the energy derivative vanishes along
each signed direction.  On the support of a signed part w the field equals
(scale * w + residual) nodewise, so each equation reduces to a scalar root
problem; the only coupling between equations is the Dirichlet cross term of
the two signed halves sharing a component, which is carried explicitly so
the projected point is stationary for the exact discrete energy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decomposition import DecomposedField
from .errors import DegenerateComponentError, FiberRootError
from .mesh import HAT, TILDE
from .model import ProblemSpec
from .operators import SpectralData, estimate_sobolev_constant

DEFAULT_TOL_FIBER = 1e-8
BRACKET_LO = 1e-6
BRACKET_HI = 1e6
MAX_DOUBLINGS = 200


@dataclass(frozen=True)
class FiberPoint:
    """Scaling triple of the chart: (tilde+, tilde-, hat+) factors."""

    scale_tilde_pos: float
    scale_tilde_neg: float
    scale_hat_pos: float

    def __post_init__(self):
        if min(self.scale_tilde_pos, self.scale_tilde_neg, self.scale_hat_pos) <= 0:
            raise ValueError(f"fiber scalings must be positive, got {self.as_tuple()}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.scale_tilde_pos, self.scale_tilde_neg, self.scale_hat_pos)


class _Fiber:
    """Cached data for one scalar fiber equation along a signed direction.

    Everything is restricted to the support of w and the superlinear term is
    specialized to the active powers, so one residual evaluation is a handful
    of vector operations on a short slice.
    """

    def __init__(self, spec: ProblemSpec, w: np.ndarray, ubar: np.ndarray,
                 cross: float = 0.0):
        self.w2 = spec.A.inner(w, w)
        sup = np.nonzero(w)[0]
        quad = spec.mesh.quad
        ap = spec.weights.a_plus
        self.ws = w[sup]
        self.us = ubar[sup] if ubar is not None else np.zeros(sup.size)
        qa = quad[sup] * ap[sup]
        self.qaw = qa * self.ws
        self.qaww = self.qaw * self.ws
        nl = spec.nonlin
        self.terms = []
        for p, coeff in ((nl.p1, nl.a1), (nl.p2, nl.a2)):
            cs = coeff[sup]
            if cs.size and float(cs.max()) > 0:
                self.terms.append((p, cs))
        lam = spec.lam
        self.lin = self.w2 - lam * float(np.sum(qa * self.ws * self.ws))
        self.const = cross - lam * float(np.sum(qa * self.us * self.ws))
        self.trivial_rest = not np.any(self.us)

    def value(self, t: float) -> float:
        u = t * self.ws + self.us
        au = np.abs(u)
        acc = t * self.lin + self.const
        for p, cs in self.terms:
            acc -= float(np.sum(cs * self.qaw * np.sign(u) * au ** (p - 1.0)))
        return acc

    def slope(self, t: float) -> float:
        u = t * self.ws + self.us
        au = np.abs(u)
        acc = self.lin
        for p, cs in self.terms:
            acc -= (p - 1.0) * float(np.sum(cs * self.qaww * au ** (p - 2.0)))
        return acc

    def scale(self) -> float:
        return 1.0 + self.w2


def fiber_value(spec: ProblemSpec, w: np.ndarray, ubar: np.ndarray, t: float,
                cross: float = 0.0) -> float:
    """Residual of the scaling equation along w at scale t:

        t (||w||^2 - lam int a+ w^2) + cross - lam int a+ ubar w
          - int a+ f(t w + ubar) w

    whose positive root is the Nehari scaling.  ``cross`` carries the frozen
    Dirichlet pairing with the opposite-signed half of the same component
    (zero when w stands alone).
    """
    return _Fiber(spec, w, ubar, cross).value(t)


def _root_newton(fiber: _Fiber, hint: float, tol: float) -> float | None:
    """Damped-free Newton from the hint; succeeds only on the decaying branch."""
    t = max(hint, 1e-12)
    target = tol * fiber.scale()
    for _ in range(50):
        ft = fiber.value(t)
        d = fiber.slope(t)
        if abs(ft) <= target and d < 0:
            # with a trivial rest field the root is unique; otherwise confirm
            # this is the outermost (decaying) crossing
            if fiber.trivial_rest or fiber.value(4 * t) < 0:
                return t
            return None
        if d >= 0:
            return None
        t_next = t - ft / d
        if t_next <= 0 or t_next > BRACKET_HI * 10 or not np.isfinite(t_next):
            return None
        t = t_next
    return None


def _root_bracketed(fiber: _Fiber, hint: float, tol: float,
                    newton_polish: bool = True, width: float = 1e-8) -> float:
    """Geometric bracket expansion, bisection, optional Newton polish.

    Targets the outermost downward crossing of the residual, the energy
    maximum along the fiber.  With a small frozen ``ubar`` the residual has a
    single sign change and this is the unique root; with a large one the
    lower crossings are energy minima and are skipped deliberately.
    """
    hi = max(2.0 * hint, BRACKET_LO * 2)
    n = 0
    while fiber.value(hi) >= 0:
        hi *= 2.0
        n += 1
        if n > MAX_DOUBLINGS:
            raise FiberRootError("no root: residual stays nonnegative under "
                                 f"expansion to t = {hi:.3e}")
    lo = None
    t = hi
    for _ in range(300):
        t *= 0.7
        if t < BRACKET_LO * 1e-8:
            break
        if fiber.value(t) > 0:
            lo = t
            break
        hi = t
    if lo is None:
        raise FiberRootError("no root: residual negative on the whole bracket "
                             f"[{BRACKET_LO * 1e-8:.1e}, {hi:.3e}]")
    while hi - lo > width * max(lo, 1e-30):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if fiber.value(mid) > 0:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    if newton_polish:
        for _ in range(5):
            d = fiber.slope(t)
            if d >= 0:
                break
            t_next = t - fiber.value(t) / d
            if not (lo * 0.5 < t_next < hi * 2):
                break
            t = t_next
    return t


def solve_fiber_equation(spec: ProblemSpec, w: np.ndarray, ubar: np.ndarray,
                         hint: float = 1.0, *, cross: float = 0.0,
                         tol_fiber: float = DEFAULT_TOL_FIBER,
                         method: str = "auto") -> float:
    """Positive root of the fiber equation along w, |residual| <= tol * (1+||w||^2).

    ``method``: "auto" (Newton from the hint, bracketed fallback),
    "bisection" (bracket discipline only), "newton" (polished bracket root).
    """
    fiber = _Fiber(spec, w, ubar, cross)
    if fiber.w2 <= 0:
        raise DegenerateComponentError("fiber direction vanishes", which="w")
    if method == "auto":
        t = _root_newton(fiber, hint, 1e-13)
        if t is None:
            t = _root_bracketed(fiber, hint, tol_fiber)
    elif method == "bisection":
        # pure bisection pushed to rounding width (independent oracle mode)
        t = _root_bracketed(fiber, hint, tol_fiber, newton_polish=False,
                            width=1e-14)
    elif method == "newton":
        t = _root_bracketed(fiber, hint, tol_fiber)
    else:
        raise ValueError(f"unknown method {method!r}")
    if abs(fiber.value(t)) > tol_fiber * fiber.scale():
        raise FiberRootError(f"fiber root residual {fiber.value(t):.3e} above "
                             f"tolerance at t = {t:.6e}")
    return float(t)


def project_to_nehari(spec: ProblemSpec, dec: DecomposedField, *,
                      hint: FiberPoint | None = None,
                      tol_fiber: float = DEFAULT_TOL_FIBER,
                      max_sweeps: int = 50) -> tuple[DecomposedField, FiberPoint]:
    """Rescale the signed parts so the energy derivative vanishes along each.

    The two tilde equations couple through the Dirichlet cross term of the
    nodewise signed halves and are solved by alternating scalar sweeps (the
    coupling is a single frozen scalar per equation, so a few sweeps reach
    rounding level); the hat equation is independent.  The scaled field keeps
    the same orthogonal decomposition, so no new linear solves are needed.
    """
    tp, tn = dec.tilde_pos, dec.tilde_neg
    hp, hn = dec.hat_pos, dec.hat_neg
    A = spec.A
    for name, part in (("tilde+", tp), ("tilde-", tn), ("hat+", hp)):
        if A.inner(part, part) <= 0:
            raise DegenerateComponentError(
                f"signed part {name} vanishes; the chart is undefined", which=name)
    ub = dec.residual
    cross_t = A.inner(tp, tn)      # <= 0: signed halves meet along the nodal line
    cross_h = A.inner(hp, hn)
    r, s, t = hint.as_tuple() if hint is not None else (1.0, 1.0, 1.0)

    t = solve_fiber_equation(spec, hp, ub, t, cross=-cross_h, tol_fiber=tol_fiber)
    fib_r = _Fiber(spec, tp, ub, 0.0)
    fib_s = _Fiber(spec, -tn, ub, 0.0)
    for _ in range(max_sweeps):
        r_new = _solve_coupled(fib_r, -s * cross_t, r, tol_fiber)
        s_new = _solve_coupled(fib_s, -r_new * cross_t, s, tol_fiber)
        drift = abs(r_new - r) + abs(s_new - s)
        r, s = r_new, s_new
        if drift <= 1e-14 * (r + s):
            break
    tilde = r * tp - s * tn
    hat = t * hp - hn
    out = DecomposedField.from_parts(tilde, hat, dec.bar, ub)
    return out, FiberPoint(r, s, t)


def _solve_coupled(fiber: _Fiber, cross: float, hint: float,
                   tol_fiber: float) -> float:
    """Re-solve one cached fiber with an updated coupling constant."""
    base = getattr(fiber, "_const0", None)
    if base is None:
        fiber._const0 = fiber.const
        base = fiber._const0
    fiber.const = base + cross
    t = _root_newton(fiber, hint, 1e-13)
    if t is None:
        t = _root_bracketed(fiber, hint, tol_fiber)
    if abs(fiber.value(t)) > tol_fiber * fiber.scale():
        raise FiberRootError(f"coupled fiber residual {fiber.value(t):.3e} "
                             f"above tolerance")
    return t


def fiber_energy_and_curvature(spec: ProblemSpec, dec: DecomposedField,
                               point: FiberPoint) -> tuple[float, tuple[float, float, float]]:
    """Energy at the chart point and the three diagonal second derivatives.

    The diagonal curvature along the scaling of a signed part w at factor nu
    is ||w||^2 - lam int a+ w^2 - int a+ f'(nu w + residual) w^2; the cross
    term between the two tilde halves is bilinear in the scalings and drops
    out of the diagonal, so this is exact for the discrete energy.
    """
    r, s, t = point.as_tuple()
    u = (r * dec.tilde_pos - s * dec.tilde_neg + t * dec.hat_pos
         - dec.hat_neg + dec.bar + dec.residual)
    h = spec.energy(u)
    curv = []
    for w, nu in ((dec.tilde_pos, r), (-dec.tilde_neg, s), (dec.hat_pos, t)):
        fib = _Fiber(spec, w, dec.residual, 0.0)
        curv.append(fib.slope(nu))
    return h, tuple(curv)


@dataclass(frozen=True)
class NehariConstants:
    """Analytic constants contextualizing the membership margins.

    All are diagnostics built from the discrete spectral data, the Sobolev
    estimate, and the seed energy; the descent loop never branches on them
    except through the membership bounds (norm cap, small-ball radius,
    residual comparisons).
    """

    eig_min: float              # smallest weighted eigenvalue over components
    spectral_midpoint: float    # (lam/eig_min + 1)/2, strictly below 1
    gamma: float                # quadratic lower-bound coefficient
    growth_p: float             # reference exponent used for c_p and radii
    sobolev_c: float            # discrete embedding constant estimate
    small_radius: float         # norm radius of guaranteed positivity (rho)
    norm_cap: float             # cap on ||tilde + hat+|| in the set (R)
    signed_floor: float         # analytic lower bound for signed-part norms
    scale_floor: float          # small_radius / norm_cap
    seed_energy: float
    weighted_floor_observed: float | None = None  # empirical, filled by solves

    def table(self) -> list[tuple[str, float]]:
        return [("Lambda_1 (min eigenvalue)", self.eig_min),
                ("spectral midpoint", self.spectral_midpoint),
                ("gamma", self.gamma),
                ("growth exponent p", self.growth_p),
                ("Sobolev c_p estimate", self.sobolev_c),
                ("small-ball radius rho", self.small_radius),
                ("norm cap R", self.norm_cap),
                ("signed-part floor kappa_1", self.signed_floor),
                ("scale floor nu_0", self.scale_floor),
                ("seed energy", self.seed_energy)]


def compute_constants(spec: ProblemSpec, spectral: SpectralData,
                      seed_energy: float, c_p: float | None = None) -> NehariConstants:
    """Assemble the constants from spectral data and the seed energy.

    The norm cap is chosen so the set-defining inequality
    (1 - 2/theta)(1 - midpoint) R^2 > seed energy holds with margin, and
    R > rho; the scale floor is their ratio.
    """
    nl = spec.nonlin
    lam1 = spectral.lambda_min
    mid = (spec.lam / lam1 + 1.0) / 2.0
    gamma = (1.0 - mid) / 4.0
    p = nl.growth_p
    if c_p is None:
        c_p = estimate_sobolev_constant(spec.mesh, spec.A, p)
    sup_ap = spec.weights.sup_a_plus
    rho = (gamma * c_p ** p / (sup_ap * nl.c1)) ** (1.0 / (p - 2.0))
    kappa1 = 0.5 * (gamma * c_p ** p / (2.0 * sup_ap * nl.c1)) ** (1.0 / (p - 2.0))
    shape = (1.0 - 2.0 / nl.theta) * (1.0 - mid)
    radius = float(max(2.0 * rho, np.sqrt(max(seed_energy, 0.0) / shape) + 1.0))
    return NehariConstants(eig_min=float(lam1), spectral_midpoint=float(mid),
                           gamma=float(gamma), growth_p=float(p),
                           sobolev_c=float(c_p), small_radius=float(rho),
                           norm_cap=radius, signed_floor=float(kappa1),
                           scale_floor=float(rho / radius),
                           seed_energy=float(seed_energy))


def _component_columns(spec: ProblemSpec, label: int) -> tuple[np.ndarray, np.ndarray]:
    idx = spec.weights.interior_indices(label)
    if idx.size == 0:
        raise DegenerateComponentError("component has no interior nodes")
    xs = spec.mesh.interior_coords[idx, 0]
    return idx, xs


def _sine_bump(spec: ProblemSpec, idx: np.ndarray) -> np.ndarray:
    """Product of sine half-waves over the bounding box of a node set,
    vanishing one spacing outside it."""
    pts = spec.mesh.interior_coords[idx]
    v = np.ones(idx.size)
    for ax in range(spec.mesh.dim):
        lo = pts[:, ax].min() - spec.mesh.spacing[ax]
        hi = pts[:, ax].max() + spec.mesh.spacing[ax]
        v *= np.sin(np.pi * (pts[:, ax] - lo) / (hi - lo))
    out = np.zeros(spec.A.n)
    out[idx] = v
    return out


def build_seed(spec: ProblemSpec, rng: np.random.Generator | None = None,
               tol_fiber: float = DEFAULT_TOL_FIBER) -> DecomposedField:
    """Construct the reference member of the set: two disjoint half-bumps of
    opposite sign inside the tilde component (split along the first axis with
    a one-column gap) and a positive bump on the hat component, each scaled
    by its own fiber root.

    The gap column makes the halves non-adjacent, so the three equations
    decouple exactly and the seed satisfies the stationarity conditions with
    zero residual.  ``rng`` adds a mild nodewise shape perturbation (used for
    restarts); every sub-bump needs at least 3 interior nodes.
    """
    idx_t, xs = _component_columns(spec, TILDE)
    cols = np.unique(xs)
    if cols.size < 7:
        raise DegenerateComponentError(
            f"tilde component has only {cols.size} node columns; "
            "need >= 7 to host two separated half-bumps")
    mid = cols[cols.size // 2]
    left = idx_t[xs < mid]
    right = idx_t[xs > mid]
    idx_h = spec.weights.interior_indices(HAT)
    for name, sub in (("tilde+ half", left), ("tilde- half", right), ("hat bump", idx_h)):
        if sub.size < 3:
            raise DegenerateComponentError(
                f"{name} has {sub.size} interior nodes; need >= 3", which=name)

    vtp = _sine_bump(spec, left)
    vtn = _sine_bump(spec, right)
    vhp = _sine_bump(spec, idx_h)
    if rng is not None:
        for v in (vtp, vtn, vhp):
            sup = np.nonzero(v)[0]
            v[sup] *= 1.0 + 0.15 * rng.uniform(-1.0, 1.0, sup.size)

    zero = np.zeros(spec.A.n)
    r = solve_fiber_equation(spec, vtp, zero, tol_fiber=tol_fiber)
    s = solve_fiber_equation(spec, -vtn, zero, tol_fiber=tol_fiber)
    t = solve_fiber_equation(spec, vhp, zero, tol_fiber=tol_fiber)
    return DecomposedField.from_parts(r * vtp - s * vtn, t * vhp, zero.copy(), zero.copy())


@dataclass(frozen=True)
class MembershipCondition:
    value: float
    bound: float
    passed: bool
    lower_bound: bool = False    # condition reads value >= bound

    @property
    def margin(self) -> float:
        """Distance into feasibility; negative when the condition fails."""
        return (self.value - self.bound) if self.lower_bound else (self.bound - self.value)


@dataclass(frozen=True)
class MembershipReport:
    """Margins of the seven set conditions at one decomposed field."""

    conditions: dict[str, MembershipCondition]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.conditions.values())

    def to_dict(self) -> dict:
        return {name: {"value": c.value, "bound": c.bound,
                       "margin": c.margin, "passed": c.passed}
                for name, c in self.conditions.items()}


CONDITION_ORDER = ("stationarity", "nontriviality", "energy_bound", "core_norm",
                   "minor_parts", "residual_weighted", "residual_norm")

_SLACK = 1e-9


def check_membership(spec: ProblemSpec, constants: NehariConstants,
                     dec: DecomposedField,
                     tol_fiber: float = DEFAULT_TOL_FIBER,
                     include_stationarity: bool = True) -> MembershipReport:
    """Evaluate all seven set conditions with the discrete constants.

    Stationarity is measured directly as the energy derivative along each
    signed part, normalized by (1 + ||part||^2), independent of the fiber
    code path; it may be skipped in hot loops where the field is a fresh
    fiber projection (stationary by construction).  Every bound carries a
    small relative slack so boundary-active minimizers report as members.
    """
    A = spec.A
    quad = spec.mesh.quad
    ap = spec.weights.a_plus
    conds: dict[str, MembershipCondition] = {}

    signed = {"tilde+": dec.tilde_pos, "tilde-": dec.tilde_neg, "hat+": dec.hat_pos}
    norms = {k: A.norm(v) for k, v in signed.items()}
    wnorm = {k: float(np.sqrt(np.sum(quad * ap * v * v))) for k, v in signed.items()}

    if include_stationarity:
        resid = max(abs(spec.energy_derivative(dec.u, v)) / (1.0 + A.inner(v, v))
                    for v in signed.values())
        conds["stationarity"] = MembershipCondition(resid, tol_fiber,
                                                    resid <= tol_fiber)

    min_norm = min(norms.values())
    conds["nontriviality"] = MembershipCondition(min_norm, 0.0, min_norm > 0.0,
                                                 lower_bound=True)

    energy = spec.energy(dec.u)
    bound = constants.seed_energy + 1.0
    conds["energy_bound"] = MembershipCondition(
        energy, bound, energy <= bound + _SLACK * (1 + abs(bound)))

    core = A.norm(dec.tilde + dec.hat_pos)
    conds["core_norm"] = MembershipCondition(
        core, constants.norm_cap,
        core <= constants.norm_cap + _SLACK * (1 + constants.norm_cap))

    minor = max(A.norm(dec.hat_neg), A.norm(dec.bar))
    conds["minor_parts"] = MembershipCondition(
        minor, constants.small_radius,
        minor <= constants.small_radius + _SLACK * (1 + constants.small_radius))

    res_w = float(np.sqrt(np.sum(quad * ap * dec.residual ** 2)))
    bound_w = constants.gamma * min(wnorm.values())
    conds["residual_weighted"] = MembershipCondition(
        res_w, bound_w, res_w <= bound_w + _SLACK * (1 + bound_w))

    res_n = A.norm(dec.residual)
    bound_n = min(norms.values())
    conds["residual_norm"] = MembershipCondition(
        res_n, bound_n, res_n <= bound_n + _SLACK * (1 + bound_n))

    return MembershipReport(conditions=conds)
