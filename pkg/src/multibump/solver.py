"""Projected descent over the Nehari-type set, the ascending penalty sweep
with warm starts, the two single-component limit problems, and the
concentration metrics comparing penalized solutions to the limit pair.

Each iteration steps along the negative Riesz gradient, re-decomposes, and
restores the scaling conditions by fiber projection; acceptance is judged on
the post-projection energy.  Trial points must stay inside the full set:
when the residual comparisons are the only violations the residual part is
shrunk back to the boundary (a feasible restoration that lets iterates slide
along an active constraint), otherwise the step is rejected.  Termination is
either genuine criticality (small Riesz gradient), a constrained-stationary
stop with an active set condition, or the iteration cap.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .decomposition import DecomposedField, decompose
from .errors import (DegenerateComponentError, FiberRootError, MultibumpError,
                     StagnationError)
from .mesh import BAR, HAT, NEG, TILDE
from .model import ProblemSpec
from .operators import solve_dirichlet
from .nehari import (DEFAULT_TOL_FIBER, FiberPoint, MembershipReport,
                     NehariConstants, build_seed, check_membership,
                     project_to_nehari, solve_fiber_equation)

EPS_ENERGY = 1e-13   # double-precision resolution of energy comparisons


@dataclass(frozen=True)
class SolveOptions:
    """Knobs of one descent run; all positive, backtrack factor in (0,1)."""

    max_iterations: int = 5000
    tol_grad: float = 1e-6
    tol_fiber: float = DEFAULT_TOL_FIBER
    armijo_slope: float = 1e-4
    backtrack_factor: float = 0.5
    max_backtracks: int = 40
    initial_step: float = 1.0
    collapse_floor: float = 1e-6
    linear_tol: float = 1e-10
    enforce_membership: bool = True

    def __post_init__(self):
        if not (0 < self.backtrack_factor < 1):
            raise ValueError("backtrack factor must lie in (0, 1)")
        for name in ("max_iterations", "tol_grad", "tol_fiber", "armijo_slope",
                     "max_backtracks", "initial_step", "collapse_floor",
                     "linear_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class SolveReport:
    """Everything a solve produces besides the field itself."""

    u: np.ndarray
    energy: float
    grad_norm: float
    status: str                  # converged | constrained | max_iterations
    converged: bool
    iterations: int
    mu: float
    energy_trace: list[float]
    component_norms: dict[str, float]
    weighted_norms: dict[str, float]
    membership: MembershipReport | None
    penalty_residual: float      # mu int a- G(residual part)
    fiber_point: tuple[float, float, float] | None
    extras: dict = field(default_factory=dict)

    def off_support_norm(self) -> float:
        """Combined A-norm of the parts that vanish in the concentration limit."""
        return float(np.sqrt(self.component_norms["hat-"] ** 2
                             + self.component_norms["bar"] ** 2
                             + self.component_norms["residual"] ** 2))


class _FullStructure:
    """Descent callbacks for the three-scaling problem on the whole domain."""

    def __init__(self, spec: ProblemSpec, opts: SolveOptions,
                 constants: NehariConstants | None):
        self.spec = spec
        self.opts = opts
        self.constants = constants

    def decompose(self, u, warm):
        return decompose(self.spec.A, self.spec.weights, u, warm=warm)

    def project(self, dec, hint):
        return project_to_nehari(self.spec, dec, hint=hint,
                                 tol_fiber=self.opts.tol_fiber)

    def gradient(self, u, x0):
        return self.spec.riesz_gradient(u, tol=self.opts.linear_tol, x0=x0)

    def membership(self, dec, include_stationarity=True):
        if not self.opts.enforce_membership or self.constants is None:
            return None
        return check_membership(self.spec, self.constants, dec,
                                tol_fiber=self.opts.tol_fiber,
                                include_stationarity=include_stationarity)

    def feasible(self, dec, report=None):
        if not self.opts.enforce_membership or self.constants is None:
            return True, []
        report = report or self.membership(dec)
        bad = [name for name, c in report.conditions.items()
               if name not in ("stationarity",) and not c.passed]
        return not bad, bad

    def restore(self, dec, hint):
        """Shrink the residual part back inside the comparison bounds."""
        if self.constants is None:
            return None
        A = self.spec.A
        quad = self.spec.mesh.quad
        ap = self.spec.weights.a_plus
        res = dec.residual
        res_w = float(np.sqrt(np.sum(quad * ap * res ** 2)))
        res_n = A.norm(res)
        wmin = min(float(np.sqrt(np.sum(quad * ap * v * v)))
                   for v in (dec.tilde_pos, dec.tilde_neg, dec.hat_pos))
        nmin = min(A.norm(v) for v in (dec.tilde_pos, dec.tilde_neg, dec.hat_pos))
        beta = 1.0
        if res_w > 0:
            beta = min(beta, 0.999 * self.constants.gamma * wmin / res_w)
        if res_n > 0:
            beta = min(beta, 0.999 * nmin / res_n)
        if beta >= 1.0:
            return None
        shrunk = DecomposedField.from_parts(dec.tilde, dec.hat, dec.bar,
                                            beta * res)
        return project_to_nehari(self.spec, shrunk, hint=hint,
                                 tol_fiber=self.opts.tol_fiber)

    def collapse(self, dec):
        A = self.spec.A
        floor = self.opts.collapse_floor
        for name, part in (("tilde+", dec.tilde_pos), ("tilde-", dec.tilde_neg),
                           ("hat+", dec.hat_pos)):
            if A.norm(part) < floor:
                return name
        return None


class _ComponentStructure:
    """Descent callbacks for a single-component limit problem.

    For the nodal problem both signed parts are constrained; for the positive
    problem only the positive part is, and the negative part is projected out
    at every iteration so descent lands on the positive ground state.
    """

    def __init__(self, spec: ProblemSpec, opts: SolveOptions, label: int,
                 nodal: bool):
        self.spec = spec
        self.opts = opts
        self.label = label
        self.nodal = nodal
        self.idx = spec.weights.interior_indices(label)
        self.sub = spec.A.submatrix(self.idx)

    def decompose(self, u, warm):
        v = np.zeros(self.spec.A.n)
        v[self.idx] = u[self.idx]
        zero = np.zeros(self.spec.A.n)
        if self.label == TILDE:
            return DecomposedField.from_parts(v, zero, zero.copy(), zero.copy())
        return DecomposedField.from_parts(zero, v, zero.copy(), zero.copy())

    def _signed(self, dec):
        if self.label == TILDE:
            return dec.tilde_pos, dec.tilde_neg
        return dec.hat_pos, dec.hat_neg

    def _wrap(self, part):
        zero = np.zeros_like(part)
        if self.label == TILDE:
            return DecomposedField.from_parts(part, zero, zero.copy(), zero.copy())
        return DecomposedField.from_parts(zero, part, zero.copy(), zero.copy())

    def project(self, dec, hint):
        spec, opts = self.spec, self.opts
        pos, neg = self._signed(dec)
        zero = np.zeros_like(pos)
        if self.nodal:
            for name, part in (("positive half", pos), ("negative half", neg)):
                if spec.A.inner(part, part) <= 0:
                    raise DegenerateComponentError(f"{name} vanishes", which=name)
            cross = spec.A.inner(pos, neg)
            r, s = (hint.scale_tilde_pos, hint.scale_tilde_neg) if hint else (1.0, 1.0)
            for _ in range(50):
                r_new = solve_fiber_equation(spec, pos, zero, r, cross=-s * cross,
                                             tol_fiber=opts.tol_fiber)
                s_new = solve_fiber_equation(spec, -neg, zero, s, cross=-r_new * cross,
                                             tol_fiber=opts.tol_fiber)
                drift = abs(r_new - r) + abs(s_new - s)
                r, s = r_new, s_new
                if drift <= 1e-14 * (r + s):
                    break
            return self._wrap(r * pos - s * neg), FiberPoint(r, s, 1.0)
        # negative part dropped each iteration: descend to the positive state
        if spec.A.inner(pos, pos) <= 0:
            raise DegenerateComponentError("positive part vanishes", which="pos")
        t0 = hint.scale_hat_pos if hint else 1.0
        t = solve_fiber_equation(spec, pos, zero, t0, tol_fiber=opts.tol_fiber)
        return self._wrap(t * pos), FiberPoint(1.0, 1.0, t)

    def gradient(self, u, x0):
        resid = self.spec.pde_residual(u)[self.idx]
        g = np.zeros(self.spec.A.n)
        g[self.idx] = solve_dirichlet(self.spec.A, resid, tol=self.opts.linear_tol,
                                      indices=self.idx)
        return g

    def membership(self, dec, include_stationarity=True):
        return None

    def feasible(self, dec, report=None):
        return True, []

    def restore(self, dec, hint):
        return None

    def collapse(self, dec):
        A = self.spec.A
        floor = self.opts.collapse_floor
        pos, neg = self._signed(dec)
        parts = (("positive half", pos), ("negative half", neg)) if self.nodal \
            else (("positive part", pos),)
        for name, part in parts:
            if A.norm(part) < floor:
                return name
        return None


def _descend(structure, u0: np.ndarray, opts: SolveOptions,
             energy_fn) -> tuple[np.ndarray, DecomposedField, FiberPoint, dict]:
    """Core projected-descent loop shared by the full and limit problems.

    Returns the final field, decomposition, fiber point and a stats dict;
    raises StagnationError only when no set condition is active and the line
    search still fails.
    """
    spec = structure.spec
    A = spec.A
    dec = structure.decompose(u0, None)
    dec, fp = structure.project(dec, None)
    ok, bad = structure.feasible(dec)
    if not ok:
        restored = structure.restore(dec, fp)
        if restored is not None:
            dec, fp = restored
            ok, bad = structure.feasible(dec)
        if not ok:
            raise MultibumpError(f"start point violates set conditions: {bad}")
    u = dec.u
    g = structure.gradient(u, None)
    gn = A.norm(g)
    energy = energy_fn(u)
    trace = [energy]
    alpha = opts.initial_step
    if gn > 0:
        alpha = min(alpha, 0.1 * max(A.norm(u), 1.0) / gn)
    n_project = 0
    constrained_block = False
    for k in range(opts.max_iterations):
        if gn <= opts.tol_grad:
            return u, dec, fp, {"status": "converged", "iterations": k,
                                "grad_norm": gn, "trace": trace,
                                "projections": n_project}
        accepted = False
        constrained_block = False
        g_next = None
        alpha = min(alpha, 0.5 * max(A.norm(u), 1.0) / gn)
        for _ in range(opts.max_backtracks):
            try:
                trial = structure.decompose(u - alpha * g, dec)
                proj, fp_trial = structure.project(trial, fp)
            except (DegenerateComponentError, FiberRootError):
                alpha *= opts.backtrack_factor
                continue
            report = structure.membership(proj, include_stationarity=False)
            ok, bad = structure.feasible(proj, report)
            if not ok:
                restored = structure.restore(proj, fp_trial)
                if restored is not None:
                    proj, fp_trial = restored
                    report = structure.membership(proj, include_stationarity=False)
                    ok, bad = structure.feasible(proj, report)
            if not ok:
                constrained_block = True
                alpha *= opts.backtrack_factor
                continue
            e_trial = energy_fn(proj.u)
            predicted = opts.armijo_slope * alpha * gn * gn
            eps_floor = EPS_ENERGY * (1.0 + abs(energy))
            if predicted > eps_floor:
                accepted = e_trial <= energy - predicted
            else:
                # energy differences are below float resolution: accept on
                # gradient decrease instead, keeping the trace monotone to eps
                g_next = structure.gradient(proj.u, g)
                accepted = (e_trial <= energy + eps_floor
                            and A.norm(g_next) <= gn)
                if not accepted:
                    g_next = None
            if accepted:
                break
            alpha *= opts.backtrack_factor
        if not accepted:
            membership = structure.membership(dec)
            active = _active_conditions(membership)
            if constrained_block or active:
                return u, dec, fp, {"status": "constrained", "iterations": k,
                                    "grad_norm": gn, "trace": trace,
                                    "projections": n_project,
                                    "active_conditions": active}
            raise StagnationError(
                f"line search exhausted at gradient norm {gn:.3e} "
                f"with no active set condition", trace=trace)
        if g_next is None:
            g_next = structure.gradient(proj.u, g)
        du = proj.u - u
        dg = g_next - g
        denom = A.inner(du, dg)
        if denom > 0:
            alpha = float(np.clip(A.inner(du, du) / denom,
                                  0.25 * alpha, 8.0 * alpha))
        else:
            alpha = 2.0 * alpha
        u, dec, fp, g = proj.u, proj, fp_trial, g_next
        gn = A.norm(g)
        energy = energy_fn(u)
        trace.append(energy)
        n_project += 1
        which = structure.collapse(dec)
        if which is not None:
            raise DegenerateComponentError(
                f"signed part {which} collapsed below {opts.collapse_floor:g}",
                which=which)
    return u, dec, fp, {"status": "max_iterations", "iterations": opts.max_iterations,
                        "grad_norm": gn, "trace": trace, "projections": n_project}


def _active_conditions(report: MembershipReport | None,
                       rel: float = 1e-6) -> list[str]:
    if report is None:
        return []
    out = []
    for name, c in report.conditions.items():
        if name in ("stationarity", "nontriviality"):
            continue
        if c.margin <= rel * (1.0 + abs(c.bound)):
            out.append(name)
    return out


def _build_report(spec: ProblemSpec, dec: DecomposedField, fp: FiberPoint | None,
                  stats: dict, constants: NehariConstants | None,
                  tol_fiber: float) -> SolveReport:
    A = spec.A
    quad = spec.mesh.quad
    ap = spec.weights.a_plus
    comp = {"tilde+": A.norm(dec.tilde_pos), "tilde-": A.norm(dec.tilde_neg),
            "hat+": A.norm(dec.hat_pos), "hat-": A.norm(dec.hat_neg),
            "bar": A.norm(dec.bar), "residual": A.norm(dec.residual)}
    weighted = {k: float(np.sqrt(np.sum(quad * ap * v * v)))
                for k, v in (("tilde+", dec.tilde_pos), ("tilde-", dec.tilde_neg),
                             ("hat+", dec.hat_pos), ("residual", dec.residual))}
    membership = (check_membership(spec, constants, dec, tol_fiber=tol_fiber)
                  if constants is not None else None)
    nl = spec.nonlin
    p = nl.growth_p
    lp_resid = float(np.sum(quad * np.abs(dec.residual) ** p))
    shape = None
    if constants is not None:
        shape = ((1.0 - 2.0 / nl.theta) * (1.0 - constants.spectral_midpoint)
                 * A.inner(dec.tilde + dec.hat + dec.bar,
                           dec.tilde + dec.hat + dec.bar))
    extras = {"residual_lp": lp_resid,
              "kappa2_observed": min(weighted["tilde+"], weighted["tilde-"],
                                     weighted["hat+"]),
              "projections": stats.get("projections"),
              "core_energy_floor": shape}
    if "active_conditions" in stats:
        extras["active_conditions"] = stats["active_conditions"]
    return SolveReport(
        u=dec.u, energy=spec.energy(dec.u), grad_norm=stats["grad_norm"],
        status=stats["status"], converged=stats["status"] == "converged",
        iterations=stats["iterations"], mu=spec.mu, energy_trace=stats["trace"],
        component_norms=comp, weighted_norms=weighted, membership=membership,
        penalty_residual=spec.penalty_value(dec.residual),
        fiber_point=fp.as_tuple() if fp is not None else None, extras=extras)


def minimize(spec: ProblemSpec, seed: DecomposedField,
             opts: SolveOptions = SolveOptions(),
             constants: NehariConstants | None = None,
             rng: np.random.Generator | None = None) -> SolveReport:
    """Minimize the energy over the set by projected Riesz-gradient descent.

    Restarts once from a perturbed seed if a signed part collapses.  With
    membership enforcement on (the default), trial steps must stay inside
    the set, so for moderate penalty strengths the run may finish
    "constrained" with an active comparison condition; for large penalties
    the conditions go slack and the run converges to a genuine critical
    point.
    """
    structure = _FullStructure(spec, opts, constants)
    t0 = time.perf_counter()
    try:
        u, dec, fp, stats = _descend(structure, seed.u, opts, spec.energy)
    except DegenerateComponentError:
        fresh = build_seed(spec, rng=rng or np.random.default_rng(0),
                           tol_fiber=opts.tol_fiber)
        u, dec, fp, stats = _descend(structure, fresh.u, opts, spec.energy)
        stats["restarted"] = True
    report = _build_report(spec, dec, fp, stats, constants, opts.tol_fiber)
    report.extras["wall_time"] = time.perf_counter() - t0
    if stats.get("restarted"):
        report.extras["restarted"] = True
    return report


def mu_sweep(spec: ProblemSpec, mu_values, opts: SolveOptions = SolveOptions(),
             constants: NehariConstants | None = None,
             rng: np.random.Generator | None = None,
             seed: DecomposedField | None = None) -> list[SolveReport]:
    """Solve for each penalty strength in ascending order with warm starts.

    Each run starts from the previous solution re-projected; a sweep entry
    whose warm start is infeasible falls back to a fresh seed.  Errors carry
    the failing index and the completed reports on ``partial``.
    """
    mu_values = [float(m) for m in mu_values]
    if not mu_values:
        raise ValueError("mu list must be nonempty")
    if any(b <= a for a, b in zip(mu_values, mu_values[1:])):
        raise ValueError(f"mu list not ascending: {mu_values}")
    rng = rng or np.random.default_rng(0)
    reports: list[SolveReport] = []
    current = seed
    for i, mu in enumerate(mu_values):
        sub = spec.with_mu(mu)
        if current is None:
            current = build_seed(sub, tol_fiber=opts.tol_fiber)
        try:
            rep = minimize(sub, current, opts, constants, rng)
        except MultibumpError:
            # infeasible or failed warm start: retry once from a fresh seed
            try:
                fresh = build_seed(sub, rng=rng, tol_fiber=opts.tol_fiber)
                rep = minimize(sub, fresh, opts, constants, rng)
            except MultibumpError as err:
                wrapped = MultibumpError(
                    f"sweep entry {i} (mu = {mu:g}) failed: {err}")
                wrapped.partial = reports
                wrapped.mu_index = i
                raise wrapped from err
        reports.append(rep)
        current = decompose(spec.A, spec.weights, rep.u)
    return reports


@dataclass(frozen=True)
class LimitResult:
    """Least-energy nodal and positive solutions of the two limit problems."""

    u_nodal: np.ndarray
    energy_nodal: float
    report_nodal: SolveReport
    u_positive: np.ndarray
    energy_positive: float
    report_positive: SolveReport

    @property
    def energy_sum(self) -> float:
        return self.energy_nodal + self.energy_positive


def solve_limit_problems(spec: ProblemSpec,
                         opts: SolveOptions = SolveOptions(),
                         rng: np.random.Generator | None = None) -> LimitResult:
    """Solve the two decoupled component problems the penalized solutions
    concentrate on: the sign-changing minimizer on the tilde component and
    the positive minimizer on the hat component (penalty ignored: the fields
    vanish off the focusing set)."""
    spec0 = spec.with_mu(0.0)
    seed = build_seed(spec0, rng=rng)
    results = {}
    for label, nodal, u0 in ((TILDE, True, seed.tilde), (HAT, False, seed.hat)):
        structure = _ComponentStructure(spec0, opts, label, nodal)
        u, dec, fp, stats = _descend(structure, u0, opts, spec0.energy)
        results[label] = _build_report(spec0, dec, fp, stats, None, opts.tol_fiber)
    rn, rp = results[TILDE], results[HAT]
    return LimitResult(u_nodal=rn.u, energy_nodal=rn.energy, report_nodal=rn,
                       u_positive=rp.u, energy_positive=rp.energy,
                       report_positive=rp)


def concentration_gap(sweep_reports: list[SolveReport], limit: LimitResult,
                      spec: ProblemSpec) -> list[dict]:
    """Per-penalty concentration metrics against the limit pair.

    For each solution: the absolute energy gap to the sum of limit energies,
    the A-norm of the nodal restriction to the bar and negative regions, and
    the A-distance to the limit pair minimized over the sign flip of the
    nodal part.
    """
    A = spec.A
    labels = spec.weights.labels_interior
    off_mask = (labels == BAR) | (labels == NEG)
    out = []
    for rep in sweep_reports:
        if rep.u.shape != limit.u_nodal.shape:
            raise ValueError("sweep and limit results come from different meshes")
        restricted = np.where(off_mask, rep.u, 0.0)
        dist = min(A.norm(rep.u - (limit.u_nodal + limit.u_positive)),
                   A.norm(rep.u - (-limit.u_nodal + limit.u_positive)))
        out.append({"mu": rep.mu,
                    "energy": rep.energy,
                    "energy_gap": abs(rep.energy - limit.energy_sum),
                    "off_support_norm": A.norm(restricted),
                    "distance_to_limit": dist,
                    "penalty_residual": rep.penalty_residual,
                    "status": rep.status})
    return out
