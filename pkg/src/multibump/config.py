"""Run configuration: a single JSON document with domain, weight,
nonlinearity, parameters, solver and output blocks.  Unknown keys are
rejected with their full path; no environment state affects numerics, and
all randomness flows from the single integer seed declared here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .mesh import (DEFAULT_ZERO_TOL, Mesh, build_mesh, build_weight_field,
                   weight_from_descriptor)
from .model import Nonlinearity, ProblemSpec
from .operators import assemble_stiffness
from .solver import SolveOptions

_SOLVER_KEYS = {"max_iterations": int, "tol_grad": float, "tol_fiber": float,
                "armijo_slope": float, "backtrack_factor": float,
                "max_backtracks": int, "initial_step": float,
                "collapse_floor": float, "linear_tol": float,
                "enforce_membership": bool}

DEFAULT_FORMATS = ["csv", "json", "png"]


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; ``build()`` turns it into problem objects."""

    dimension: int
    extents: list
    nodes: list
    weight_descriptor: dict
    component_order: list | None
    zero_tol: float
    nonlinearity: dict          # exponents + coefficient descriptors
    lam: float
    mu_values: list[float]
    solver: SolveOptions
    rng_seed: int
    out_dir: str
    formats: list[str]

    def build(self) -> ProblemSpec:
        mesh = build_mesh(self.extents, self.nodes)
        weights = build_weight_field(mesh, dict(self.weight_descriptor),
                                     zero_tol=self.zero_tol,
                                     component_order=self.component_order)
        A = assemble_stiffness(mesh)
        nl = _build_nonlinearity(self.nonlinearity, mesh)
        return ProblemSpec(mesh=mesh, weights=weights, A=A, nonlin=nl,
                           lam=self.lam, mu=self.mu_values[-1],
                           linear_tol=self.solver.linear_tol)

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.rng_seed)


def _expect_dict(obj, path):
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object, got {type(obj).__name__}")
    return obj


def _take(block: dict, path: str, key: str, kind, default=_expect_dict):
    sentinel = default is _expect_dict
    if key not in block:
        if sentinel:
            raise ConfigError(f"{path}.{key}: missing required key")
        return default
    val = block.pop(key)
    if kind is float and isinstance(val, (int, float)) and not isinstance(val, bool):
        return float(val)
    if kind is int and isinstance(val, int) and not isinstance(val, bool):
        return int(val)
    if kind is bool and isinstance(val, bool):
        return val
    if kind is list and isinstance(val, list):
        return val
    if kind is dict and isinstance(val, dict):
        return val
    if kind is str and isinstance(val, str):
        return val
    raise ConfigError(f"{path}.{key}: expected {kind.__name__}, "
                      f"got {type(val).__name__}")


def _reject_unknown(block: dict, path: str):
    if block:
        raise ConfigError(f"{path}: unknown keys {sorted(block)}")


def _coefficient_field(value, mesh: Mesh, path: str) -> np.ndarray:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if value < 0:
            raise ConfigError(f"{path}: coefficient must be nonnegative")
        return float(value) * np.ones(mesh.n_interior)
    if isinstance(value, dict):
        fn = weight_from_descriptor(value)
        arr = np.asarray(fn(mesh.interior_coords), dtype=float)
        if np.any(arr < 0):
            raise ConfigError(f"{path}: coefficient descriptor takes negative values")
        return arr
    raise ConfigError(f"{path}: expected a number or descriptor object")


def _build_nonlinearity(block: dict, mesh: Mesh) -> Nonlinearity:
    block = dict(block)
    path = "nonlinearity"
    p1 = _take(block, path, "p1", float)
    q1 = _take(block, path, "q1", float)
    p2 = _take(block, path, "p2", float, default=p1)
    q2 = _take(block, path, "q2", float, default=q1)
    coeffs = {}
    for key, default in (("a1", 1.0), ("a2", 0.0), ("b1", 1.0), ("b2", 0.0)):
        raw = block.pop(key, default)
        coeffs[key] = _coefficient_field(raw, mesh, f"{path}.{key}")
    _reject_unknown(block, path)
    return Nonlinearity(p1=p1, p2=p2, q1=q1, q2=q2, **coeffs)


def parse_config(doc: dict) -> RunConfig:
    """Validate a parsed JSON document into a RunConfig."""
    doc = dict(_expect_dict(doc, "config"))

    domain = dict(_expect_dict(_take(doc, "config", "domain", dict), "domain"))
    dimension = _take(domain, "domain", "dimension", int)
    extents = _take(domain, "domain", "extents", list)
    nodes = _take(domain, "domain", "nodes", list)
    _reject_unknown(domain, "domain")
    if dimension not in (1, 2):
        raise ConfigError(f"domain.dimension: must be 1 or 2, got {dimension}")
    if len(extents) != dimension or len(nodes) != dimension:
        raise ConfigError("domain: extents and nodes must match the dimension")

    weight = dict(_expect_dict(_take(doc, "config", "weight", dict), "weight"))
    descriptor = _expect_dict(_take(weight, "weight", "descriptor", dict),
                              "weight.descriptor")
    order = _take(weight, "weight", "component_order", list, default=None)
    zero_tol = _take(weight, "weight", "zero_tol", float, default=DEFAULT_ZERO_TOL)
    _reject_unknown(weight, "weight")

    nonlin = _expect_dict(_take(doc, "config", "nonlinearity", dict), "nonlinearity")

    params = dict(_expect_dict(_take(doc, "config", "parameters", dict), "parameters"))
    lam = _take(params, "parameters", "lambda", float, default=0.0)
    mu_raw = _take(params, "parameters", "mu", list)
    _reject_unknown(params, "parameters")
    if not mu_raw:
        raise ConfigError("parameters.mu: must be a nonempty list")
    try:
        mu_values = [float(m) for m in mu_raw]
    except (TypeError, ValueError):
        raise ConfigError("parameters.mu: entries must be numbers")
    if any(m < 0 for m in mu_values):
        raise ConfigError("parameters.mu: entries must be nonnegative")

    solver_block = dict(_expect_dict(doc.pop("solver", {}), "solver"))
    rng_seed = _take(solver_block, "solver", "rng_seed", int, default=0)
    kwargs = {}
    for key, kind in _SOLVER_KEYS.items():
        if key in solver_block:
            kwargs[key] = _take(solver_block, "solver", key, kind)
    _reject_unknown(solver_block, "solver")
    try:
        solver = SolveOptions(**kwargs)
    except ValueError as err:
        raise ConfigError(f"solver: {err}")

    output = dict(_expect_dict(doc.pop("output", {}), "output"))
    out_dir = _take(output, "output", "directory", str, default="out")
    formats = _take(output, "output", "formats", list, default=list(DEFAULT_FORMATS))
    _reject_unknown(output, "output")
    bad = [f for f in formats if f not in ("csv", "json", "png")]
    if bad:
        raise ConfigError(f"output.formats: unsupported entries {bad}")

    _reject_unknown(doc, "config")
    return RunConfig(dimension=dimension, extents=extents, nodes=nodes,
                     weight_descriptor=descriptor, component_order=order,
                     zero_tol=zero_tol, nonlinearity=dict(nonlin), lam=lam,
                     mu_values=mu_values, solver=solver, rng_seed=rng_seed,
                     out_dir=out_dir, formats=[str(f) for f in formats])


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}")
    return parse_config(doc)
