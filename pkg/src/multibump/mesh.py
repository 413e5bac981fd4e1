"""Uniform Cartesian Dirichlet meshes and sign-structured weight fields.

The discrete domain is a tensor grid on an interval (1D) or axis-aligned
rectangle (2D) with homogeneous Dirichlet boundary.  All solver arithmetic
runs on interior-indexed vectors; boundary nodes carry the value zero and
only reappear when fields are embedded for output.

A weight field labels every node by the sign of the coefficient a(x):
the positive set must split into exactly three edge-connected components
(the focusing regions), everything with a < 0 is the penalized region, and
near-zero values form a dead zone that separates them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ConfigError

# node labels: the three positive components, the negative set, the zero set
TILDE, HAT, BAR, NEG, ZERO = 0, 1, 2, 3, 4

LABEL_NAMES = {TILDE: "tilde", HAT: "hat", BAR: "bar", NEG: "neg", ZERO: "zero"}
NAME_LABELS = {v: k for k, v in LABEL_NAMES.items()}
POSITIVE_LABELS = (TILDE, HAT, BAR)

DEFAULT_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class Mesh:
    """Uniform tensor grid with Dirichlet boundary and lumped quadrature.

    ``coords`` lists every node (C order, x-major in 2D); ``interior`` holds
    the flat indices of non-boundary nodes.  The lumped quadrature weight of
    an interior node is the product of the axis spacings.
    """

    dim: int
    extents: tuple[tuple[float, float], ...]
    shape: tuple[int, ...]
    spacing: tuple[float, ...]
    coords: np.ndarray          # (n_total, dim)
    interior: np.ndarray        # flat indices into coords
    quad: np.ndarray            # (n_interior,) lumped weights

    @property
    def n_total(self) -> int:
        return self.coords.shape[0]

    @property
    def n_interior(self) -> int:
        return self.interior.size

    @property
    def interior_coords(self) -> np.ndarray:
        return self.coords[self.interior]

    @property
    def interior_shape(self) -> tuple[int, ...]:
        return tuple(n - 2 for n in self.shape)

    def embed(self, u_interior: np.ndarray) -> np.ndarray:
        """Extend an interior-indexed field by zero onto the boundary."""
        full = np.zeros(self.n_total, dtype=float)
        full[self.interior] = u_interior
        return full

    def restrict(self, u_full: np.ndarray) -> np.ndarray:
        return np.asarray(u_full, dtype=float)[self.interior]

    def volume(self) -> float:
        return float(np.prod([hi - lo for lo, hi in self.extents]))


def build_mesh(extents, nodes) -> Mesh:
    """Build a uniform mesh from per-axis intervals and node counts.

    ``extents`` is a sequence of (lo, hi) pairs, ``nodes`` the node count per
    axis (boundary nodes included).  Only 1D and 2D grids are supported.
    """
    extents = [tuple(float(v) for v in e) for e in np.atleast_2d(np.asarray(extents, dtype=float))]
    nodes = [int(n) for n in np.atleast_1d(nodes)]
    dim = len(extents)
    if dim not in (1, 2):
        raise ConfigError(f"dimension must be 1 or 2, got {dim}")
    if len(nodes) != dim:
        raise ConfigError(f"got {len(nodes)} node counts for {dim} axes")
    for ax, ((lo, hi), n) in enumerate(zip(extents, nodes)):
        if not np.isfinite([lo, hi]).all() or hi - lo <= 0:
            raise ConfigError(f"axis {ax}: extent ({lo}, {hi}) has non-positive length")
        if n < 3:
            raise ConfigError(f"axis {ax}: node count {n} < 3")

    axes = [np.linspace(lo, hi, n) for (lo, hi), n in zip(extents, nodes)]
    spacing = tuple(float(ax[1] - ax[0]) for ax in axes)
    if dim == 1:
        coords = axes[0][:, None]
        inner = np.arange(1, nodes[0] - 1)
    else:
        gx, gy = np.meshgrid(axes[0], axes[1], indexing="ij")
        coords = np.column_stack([gx.ravel(), gy.ravel()])
        ix, iy = np.meshgrid(np.arange(1, nodes[0] - 1), np.arange(1, nodes[1] - 1),
                             indexing="ij")
        inner = (ix * nodes[1] + iy).ravel()
    quad = np.full(inner.size, float(np.prod(spacing)))
    return Mesh(dim=dim, extents=tuple(extents), shape=tuple(nodes),
                spacing=spacing, coords=coords, interior=inner, quad=quad)


def weight_from_descriptor(descriptor: dict):
    """Turn a weight descriptor into a callable on node coordinates.

    Supported kinds:
      * ``sinusoidal``: amplitude * sin(pi * frequency * (x_axis - offset))
      * ``piecewise-linear``: linear interpolation of (position, value)
        breakpoints along one axis, constant extrapolation outside.
    """
    if not isinstance(descriptor, dict) or "kind" not in descriptor:
        raise ConfigError("weight descriptor must be a dict with a 'kind' key")
    kind = descriptor["kind"]
    axis = int(descriptor.get("axis", 0))
    if kind == "sinusoidal":
        allowed = {"kind", "axis", "frequency", "amplitude", "offset"}
        unknown = set(descriptor) - allowed
        if unknown:
            raise ConfigError(f"unknown keys in sinusoidal descriptor: {sorted(unknown)}")
        freq = float(descriptor.get("frequency", 1.0))
        amp = float(descriptor.get("amplitude", 1.0))
        off = float(descriptor.get("offset", 0.0))
        return lambda pts: amp * np.sin(np.pi * freq * (pts[:, axis] - off))
    if kind == "piecewise-linear":
        allowed = {"kind", "axis", "points"}
        unknown = set(descriptor) - allowed
        if unknown:
            raise ConfigError(f"unknown keys in piecewise-linear descriptor: {sorted(unknown)}")
        pts = np.asarray(descriptor.get("points", []), dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
            raise ConfigError("piecewise-linear descriptor needs >= 2 [position, value] pairs")
        xp, fp = pts[:, 0], pts[:, 1]
        if np.any(np.diff(xp) <= 0):
            raise ConfigError("piecewise-linear breakpoints must be strictly increasing")
        return lambda p: np.interp(p[:, axis], xp, fp)
    raise ConfigError(f"unknown weight descriptor kind {kind!r}")


@dataclass(frozen=True)
class WeightField:
    """Nodal weight values plus the sign/component labeling of the domain."""

    mesh: Mesh
    a: np.ndarray               # (n_total,) nodal values of the weight
    labels: np.ndarray          # (n_total,) int8 labels
    sup_a_plus: float
    _interior_cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def a_interior(self) -> np.ndarray:
        return self._cached("a_int", lambda: self.a[self.mesh.interior])

    @property
    def a_plus(self) -> np.ndarray:
        return self._cached("ap", lambda: np.maximum(self.a_interior, 0.0))

    @property
    def a_minus(self) -> np.ndarray:
        return self._cached("am", lambda: self.a_plus - self.a_interior)

    @property
    def labels_interior(self) -> np.ndarray:
        return self._cached("lab_int", lambda: self.labels[self.mesh.interior])

    def _cached(self, key, fn):
        if key not in self._interior_cache:
            self._interior_cache[key] = fn()
        return self._interior_cache[key]

    def interior_indices(self, label: int) -> np.ndarray:
        """Indices (into interior ordering) of the nodes carrying ``label``."""
        key = ("idx", label)
        if key not in self._interior_cache:
            self._interior_cache[key] = np.where(self.labels_interior == label)[0]
        return self._interior_cache[key]

    def component_sizes(self) -> dict[str, int]:
        return {LABEL_NAMES[lab]: int(np.sum(self.labels == lab))
                for lab in (TILDE, HAT, BAR, NEG, ZERO)}


def _grid_labels(mesh: Mesh, values: np.ndarray, zero_tol: float) -> np.ndarray:
    sign = np.full(mesh.n_total, ZERO, dtype=np.int8)
    sign[values > zero_tol] = -1          # placeholder for positive, resolved below
    sign[values < -zero_tol] = NEG
    return sign


def build_weight_field(mesh: Mesh, a_spec, *, zero_tol: float = DEFAULT_ZERO_TOL,
                       component_order: list[str] | None = None) -> WeightField:
    """Evaluate the weight and label the three positive components.

    ``a_spec`` may be a callable on coordinate arrays, a nodal value array, or
    a descriptor dict (see ``weight_from_descriptor``).  The positive set must
    have exactly three components under edge connectivity (runs in 1D,
    4-neighbor in 2D); components are named tilde/hat/bar in ascending order
    of their minimal node coordinate unless ``component_order`` overrides the
    assignment.
    """
    if isinstance(a_spec, dict):
        a_spec = weight_from_descriptor(a_spec)
    if callable(a_spec):
        values = np.asarray(a_spec(mesh.coords), dtype=float)
    else:
        values = np.asarray(a_spec, dtype=float)
    if values.shape != (mesh.n_total,):
        raise ConfigError(f"weight values have shape {values.shape}, expected ({mesh.n_total},)")
    if not np.isfinite(values).all():
        raise ConfigError("weight values must be finite at every node")

    labels = _grid_labels(mesh, values, zero_tol)

    pos_mask = (labels == -1).reshape(mesh.shape)
    structure = np.array([1, 1, 1]) if mesh.dim == 1 else np.array(
        [[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    comp, n_comp = ndimage.label(pos_mask, structure=structure)
    if n_comp != 3:
        raise ConfigError(f"positive set has {n_comp} component"
                          f"{'' if n_comp == 1 else 's'}, need 3; "
                          f"component sizes: {[int(np.sum(comp == i + 1)) for i in range(n_comp)]}")
    comp = comp.ravel()

    # deterministic naming: ascending minimal node coordinate (lexicographic)
    min_coord = []
    for i in range(1, 4):
        pts = mesh.coords[comp == i]
        order = np.lexsort(pts.T[::-1])
        min_coord.append(tuple(pts[order[0]]))
    ranked = sorted(range(3), key=lambda i: min_coord[i])
    order_names = component_order or ["tilde", "hat", "bar"]
    if sorted(order_names) != ["bar", "hat", "tilde"]:
        raise ConfigError(f"component_order must be a permutation of "
                          f"['tilde', 'hat', 'bar'], got {order_names}")
    for rank, comp_idx in enumerate(ranked):
        labels[comp == comp_idx + 1] = NAME_LABELS[order_names[rank]]

    _check_separation(mesh, labels)
    ap = np.maximum(values, 0.0)
    return WeightField(mesh=mesh, a=values, labels=labels, sup_a_plus=float(ap.max()))


def _check_separation(mesh: Mesh, labels: np.ndarray) -> None:
    """Positive components may not touch each other across a grid edge."""
    lab = labels.reshape(mesh.shape)

    def bad(sl_a, sl_b):
        a, b = lab[sl_a], lab[sl_b]
        both_pos = (a <= BAR) & (b <= BAR)
        return np.any(both_pos & (a != b))

    if mesh.dim == 1:
        conflict = bad(np.s_[:-1], np.s_[1:])
    else:
        conflict = bad(np.s_[:-1, :], np.s_[1:, :]) or bad(np.s_[:, :-1], np.s_[:, 1:])
    if conflict:
        raise ConfigError("positive components are edge-adjacent; refine the mesh "
                          "so the sign change of the weight is resolved")
