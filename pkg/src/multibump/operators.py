"""Discrete Dirichlet operators: stiffness, weighted lumped mass, SPD solves,
smallest weighted eigenpairs, and a Sobolev-constant estimate.

The stiffness matrix is scaled so that ``u @ (A @ v)`` approximates the
Dirichlet inner product (the integral of grad u . grad v); all weighted L^2
pairings use the diagonal lumped mass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError
from .mesh import HAT, BAR, TILDE, LABEL_NAMES, Mesh, WeightField


@dataclass(frozen=True)
class StiffnessOperator:
    """Sparse SPD operator on interior nodes realizing the Dirichlet form."""

    mesh: Mesh
    matrix: sp.csr_matrix
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.matrix @ u

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        """Discrete Dirichlet inner product <u, v>."""
        return float(u @ (self.matrix @ v))

    def norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(u, u), 0.0)))

    def submatrix(self, indices: np.ndarray) -> sp.csc_matrix:
        key = indices.tobytes()
        if key not in self._cache:
            self._cache[key] = self.matrix[np.ix_(indices, indices)].tocsc()
        return self._cache[key]

    def factorized(self, indices: np.ndarray | None = None):
        """Cached sparse LU solve of the full matrix or a principal submatrix."""
        key = ("lu", None if indices is None else indices.tobytes())
        if key not in self._cache:
            mat = self.matrix.tocsc() if indices is None else self.submatrix(indices)
            self._cache[key] = spla.factorized(mat)
        return self._cache[key]


def _tridiag(n: int) -> sp.csr_matrix:
    return sp.diags([-np.ones(n - 1), 2.0 * np.ones(n), -np.ones(n - 1)],
                    [-1, 0, 1], format="csr")


def assemble_stiffness(mesh: Mesh) -> StiffnessOperator:
    """Assemble the 3-point / 5-point Laplacian scaled by lumped quadrature.

    With node spacings hx (and hy), the 1D matrix is T/h and the 2D one is
    (hy/hx) T kron I + (hx/hy) I kron T, which makes u @ A u a second-order
    approximation of the Dirichlet energy of u.
    """
    inner_shape = mesh.interior_shape
    if mesh.dim == 1:
        mat = _tridiag(inner_shape[0]) / mesh.spacing[0]
    else:
        nx, ny = inner_shape
        hx, hy = mesh.spacing
        mat = (hy / hx) * sp.kron(_tridiag(nx), sp.identity(ny), format="csr") \
            + (hx / hy) * sp.kron(sp.identity(nx), _tridiag(ny), format="csr")
    return StiffnessOperator(mesh=mesh, matrix=mat.tocsr())


@dataclass(frozen=True)
class WeightedMass:
    """Diagonal operator with entries quad * w for a nodal weight w >= 0."""

    weights: np.ndarray         # (n_interior,) = quad * w

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.weights * u

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.sum(self.weights * u * v))

    def norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(u, u), 0.0)))


def weighted_mass(mesh: Mesh, w_interior: np.ndarray) -> WeightedMass:
    return WeightedMass(weights=mesh.quad * np.asarray(w_interior, dtype=float))


def solve_spd(matrix, b: np.ndarray, tol: float = 1e-10, *,
              maxiter: int | None = None, x0: np.ndarray | None = None) -> np.ndarray:
    """Conjugate-gradient solve of an SPD system to a relative residual.

    Returns x with ||matrix x - b|| <= tol * ||b||; diagonal (Jacobi)
    preconditioning; raises ConvergenceError with the achieved residual when
    the iteration cap is exceeded.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if sp.issparse(matrix):
        mat = matrix
    else:
        mat = matrix.matrix
    n = mat.shape[0]
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n)
    if maxiter is None:
        maxiter = 4 * n + 200
    diag = mat.diagonal()
    precond = sp.diags(1.0 / diag) if np.all(diag > 0) else None
    x, info = spla.cg(mat, b, rtol=tol, atol=0.0, maxiter=maxiter, M=precond, x0=x0)
    if info != 0:
        achieved = float(np.linalg.norm(mat @ x - b) / bnorm)
        # CG's recursion can drift from the true residual; accept if actually met
        if achieved <= tol:
            return x
        raise ConvergenceError(
            f"CG did not reach rel. residual {tol:g} within {maxiter} iterations "
            f"(achieved {achieved:.3e})", achieved=achieved)
    return x


def solve_dirichlet(A: StiffnessOperator, b: np.ndarray, tol: float = 1e-10,
                    indices: np.ndarray | None = None,
                    x0: np.ndarray | None = None) -> np.ndarray:
    """Solve the (possibly component-restricted) Dirichlet system to ``tol``.

    Uses the cached factorization for speed and verifies the residual against
    the requested tolerance, falling back to conjugate gradients if the
    direct solve ever misses it.  Semantically identical to ``solve_spd`` on
    the corresponding submatrix.
    """
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        n = A.n if indices is None else indices.size
        return np.zeros(n)
    x = A.factorized(indices)(b)
    mat = A.matrix if indices is None else A.submatrix(indices)
    if np.linalg.norm(mat @ x - b) <= tol * bnorm:
        return x
    return solve_spd(mat, b, tol=tol, x0=x)


@dataclass(frozen=True)
class SpectralData:
    """First weighted eigenvalue and positive eigenfunction per component."""

    eigenvalues: dict[str, float]        # keyed "tilde"/"hat"/"bar"
    eigenfunctions: dict[str, np.ndarray]  # interior-indexed, zero off component

    @property
    def lambda_min(self) -> float:
        """Smallest of the three component eigenvalues (the admissible bound)."""
        return min(self.eigenvalues.values())


def smallest_weighted_eigenpair(A: StiffnessOperator, M: WeightedMass,
                                indices: np.ndarray, tol: float = 1e-10,
                                maxiter: int = 200) -> tuple[float, np.ndarray]:
    """Inverse power iteration for the smallest l with A phi = l M phi.

    The iteration runs on the subspace of fields supported on ``indices``
    (one positive component); the eigenfunction comes back interior-indexed,
    normalized to phi M phi = 1 and sign-fixed positive.
    """
    if indices.size == 0:
        raise ValueError("component is empty")
    mw = M.weights[indices]
    if np.any(mw <= 0):
        raise ValueError("weight vanishes on part of the component")
    sub = A.submatrix(indices)
    x = np.sqrt(mw)                      # positive start
    x /= np.sqrt(np.sum(mw * x * x))
    lam_old = np.inf
    for _ in range(maxiter):
        y = solve_dirichlet(A, mw * x, tol=min(tol, 1e-10), indices=indices)
        y /= np.sqrt(np.sum(mw * y * y))
        lam = float(y @ (sub @ y))       # Rayleigh quotient, M-normalized y
        resid = np.linalg.norm(sub @ y - lam * mw * y)
        x = y
        if abs(lam - lam_old) <= tol * abs(lam) and resid <= 10 * tol * abs(lam):
            break
        lam_old = lam
    else:
        raise ConvergenceError(f"eigen iteration cap {maxiter} exceeded "
                               f"(last change {abs(lam - lam_old):.3e})",
                               achieved=abs(lam - lam_old))
    if np.sum(x) < 0:
        x = -x
    phi = np.zeros(A.n)
    phi[indices] = x
    return lam, phi


def compute_spectral_data(A: StiffnessOperator, field: WeightField,
                          tol: float = 1e-10) -> SpectralData:
    """First weighted eigenpair on each of the three positive components."""
    M = weighted_mass(field.mesh, field.a_plus)
    eigenvalues, eigenfunctions = {}, {}
    for lab in (TILDE, HAT, BAR):
        idx = field.interior_indices(lab)
        lam, phi = smallest_weighted_eigenpair(A, M, idx, tol=tol)
        eigenvalues[LABEL_NAMES[lab]] = lam
        eigenfunctions[LABEL_NAMES[lab]] = phi
    return SpectralData(eigenvalues=eigenvalues, eigenfunctions=eigenfunctions)


def estimate_sobolev_constant(mesh: Mesh, A: StiffnessOperator, p: float,
                              tol: float = 1e-8, maxiter: int = 2000) -> float:
    """Discrete estimate of the embedding constant c_p = inf ||u|| / |u|_p.

    Ground-state iteration: repeatedly solve A v = quad * |u|^(p-2) u and
    renormalize in L^p, which drives u to the Rayleigh-ratio minimizer from a
    positive bump.  For p = 2 this is inverse power iteration and the square
    of the result is the first Dirichlet eigenvalue.  Diagnostic quality; the
    descent loop never branches on it.
    """
    if p < 2:
        raise ValueError(f"p out of range: need p >= 2 (and p < 2* for N >= 3), got {p}")
    pts = mesh.interior_coords
    u = np.ones(mesh.n_interior)
    for (lo, hi), ax in zip(mesh.extents, range(mesh.dim)):
        u *= np.sin(np.pi * (pts[:, ax] - lo) / (hi - lo))
    quad = mesh.quad

    def lp_norm(v):
        return float(np.sum(quad * np.abs(v) ** p) ** (1.0 / p))

    c_old = np.inf
    for _ in range(maxiter):
        u = u / lp_norm(u)
        v = solve_dirichlet(A, quad * np.abs(u) ** (p - 2.0) * u, tol=1e-12)
        c = A.norm(v) / lp_norm(v)
        u = v
        if abs(c - c_old) <= tol * c:
            return c
        c_old = c
    raise ConvergenceError(f"Sobolev-constant iteration cap {maxiter} exceeded",
                           achieved=abs(c - c_old))
