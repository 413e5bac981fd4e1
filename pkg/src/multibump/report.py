"""Result emission: delimited solution tables, canonical JSON reports, and
rendered figures.

Floats are written in their shortest round-trip decimal form, so identical
runs produce byte-identical CSV and JSON; figures are rendered to files with
a non-interactive backend and sit alongside the delimited output.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .mesh import LABEL_NAMES, Mesh, WeightField
from .nehari import NehariConstants
from .solver import LimitResult, SolveReport


def _fmt(x: float) -> str:
    """Shortest decimal that round-trips the binary double."""
    return repr(float(x))


def write_solution_csv(path, mesh: Mesh, weights: WeightField,
                       u_interior: np.ndarray) -> None:
    """One row per node: coordinates, solution value, component label, weight.

    Boundary rows carry u = 0 exactly.
    """
    full = mesh.embed(u_interior)
    header = ("x," if mesh.dim == 1 else "x,y,") + "u,label,a"
    lines = [header]
    for i in range(mesh.n_total):
        coords = ",".join(_fmt(c) for c in mesh.coords[i])
        lines.append(f"{coords},{_fmt(full[i])},"
                     f"{LABEL_NAMES[int(weights.labels[i])]},{_fmt(weights.a[i])}")
    Path(path).write_text("\n".join(lines) + "\n")


def dump_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, allow_nan=False) + "\n")


def report_to_dict(report: SolveReport) -> dict:
    """JSON-ready view of a solve report (the field itself lives in the CSV)."""
    out = {
        "mu": report.mu,
        "converged": report.converged,
        "status": report.status,
        "energy": report.energy,
        "grad_norm": report.grad_norm,
        "iterations": report.iterations,
        "component_norms": {k: float(v) for k, v in report.component_norms.items()},
        "weighted_norms": {k: float(v) for k, v in report.weighted_norms.items()},
        "penalty_residual": report.penalty_residual,
        "fiber_point": list(report.fiber_point) if report.fiber_point else None,
        "off_support_norm": report.off_support_norm(),
        "energy_trace": [float(e) for e in report.energy_trace],
    }
    if report.membership is not None:
        out["membership"] = report.membership.to_dict()
    # wall-clock timing is real but not reproducible; keep it out of the archive
    extras = {k: v for k, v in report.extras.items()
              if _jsonable(v) and k != "wall_time"}
    if extras:
        out["diagnostics"] = extras
    return out


def _jsonable(v) -> bool:
    return isinstance(v, (bool, int, float, str, list)) or v is None


def constants_to_dict(constants: NehariConstants) -> dict:
    out = {name: value for name, value in constants.table()}
    if constants.weighted_floor_observed is not None:
        out["weighted floor kappa_2 (observed)"] = constants.weighted_floor_observed
    return out


def error_report(err: Exception, trace=None) -> dict:
    out = {"error": type(err).__name__, "message": str(err)}
    if trace:
        out["energy_trace"] = [float(e) for e in trace]
    return out


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------

def render_solution_figure(path, mesh: Mesh, weights: WeightField,
                           u_interior: np.ndarray, title: str = "") -> None:
    full = mesh.embed(u_interior)
    if mesh.dim == 1:
        fig, ax = plt.subplots(figsize=(8, 4))
        x = mesh.coords[:, 0]
        ax.axhline(0.0, color="0.8", lw=0.8)
        scale = max(np.abs(full).max(), 1e-12) / max(np.abs(weights.a).max(), 1e-12)
        ax.fill_between(x, weights.a * scale, 0.0, color="tab:orange", alpha=0.15,
                        label="weight (scaled)")
        ax.plot(x, full, color="tab:blue", lw=1.5, label="solution")
        ax.set_xlabel("x")
        ax.set_ylabel("u")
        ax.legend(loc="best", fontsize=9)
    else:
        fig, ax = plt.subplots(figsize=(6, 5))
        nx, ny = mesh.shape
        grid = full.reshape(nx, ny)
        xs = mesh.coords[:, 0].reshape(nx, ny)
        ys = mesh.coords[:, 1].reshape(nx, ny)
        pc = ax.pcolormesh(xs, ys, grid, shading="auto", cmap="RdBu_r")
        ax.contour(xs, ys, weights.a.reshape(nx, ny), levels=[0.0],
                   colors="k", linewidths=0.8)
        fig.colorbar(pc, ax=ax, label="u")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_trace_figure(path, report: SolveReport) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    trace = np.asarray(report.energy_trace)
    ax.plot(np.arange(trace.size), trace, lw=1.2)
    ax.set_xlabel("accepted step")
    ax.set_ylabel("energy")
    ax.set_title(f"energy trace (mu = {report.mu:g}, {report.status})")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_sweep_figure(path, gap_table: list[dict]) -> None:
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
    mus = [row["mu"] for row in gap_table]
    for ax, key, label in zip(
            axes,
            ("energy_gap", "off_support_norm", "penalty_residual"),
            ("|I - I_limit|", "off-support A-norm", "penalty residual")):
        ax.loglog(mus, [max(row[key], 1e-300) for row in gap_table], "o-")
        ax.set_xlabel("mu")
        ax.set_title(label, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_limit_figure(path, mesh: Mesh, weights: WeightField,
                        limit: LimitResult) -> None:
    full_n = mesh.embed(limit.u_nodal)
    full_p = mesh.embed(limit.u_positive)
    if mesh.dim != 1:
        render_solution_figure(path, mesh, weights,
                               limit.u_nodal + limit.u_positive,
                               title="limit pair")
        return
    fig, ax = plt.subplots(figsize=(8, 4))
    x = mesh.coords[:, 0]
    ax.axhline(0.0, color="0.8", lw=0.8)
    ax.plot(x, full_n, lw=1.5, label=f"nodal (I0 = {limit.energy_nodal:.4f})")
    ax.plot(x, full_p, lw=1.5, label=f"positive (I0 = {limit.energy_positive:.4f})")
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.legend(loc="best", fontsize=9)
    ax.set_title("limit problems")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
