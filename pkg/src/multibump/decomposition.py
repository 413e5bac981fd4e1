"""Orthogonal splitting of a field into its three component projections and
the harmonic residual, plus nodewise signed parts.

The projections are orthogonal with respect to the discrete Dirichlet inner
product: the piece living on one positive component solves the
component-restricted system, and what remains is discretely harmonic at
every node of the positive set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import BAR, HAT, TILDE, WeightField
from .operators import StiffnessOperator, solve_dirichlet

PROJECTION_TOL = 1e-12


def signed_parts(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nodewise positive/negative parts: w = pos - neg, both >= 0."""
    pos = np.maximum(w, 0.0)
    return pos, pos - w


@dataclass
class DecomposedField:
    """A nodal field together with its four A-orthogonal pieces.

    ``tilde``/``hat``/``bar`` are supported on their components; ``residual``
    is the complement projection.  Signed parts are cached nodewise splits of
    the tilde and hat pieces.
    """

    u: np.ndarray
    tilde: np.ndarray
    hat: np.ndarray
    bar: np.ndarray
    residual: np.ndarray
    tilde_pos: np.ndarray
    tilde_neg: np.ndarray
    hat_pos: np.ndarray
    hat_neg: np.ndarray

    @classmethod
    def from_parts(cls, tilde, hat, bar, residual) -> "DecomposedField":
        tp, tn = signed_parts(tilde)
        hp, hn = signed_parts(hat)
        return cls(u=tilde + hat + bar + residual, tilde=tilde, hat=hat,
                   bar=bar, residual=residual, tilde_pos=tp, tilde_neg=tn,
                   hat_pos=hp, hat_neg=hn)

    def parts(self) -> dict[str, np.ndarray]:
        return {"tilde": self.tilde, "hat": self.hat, "bar": self.bar,
                "residual": self.residual}

    def signed(self) -> dict[str, np.ndarray]:
        return {"tilde+": self.tilde_pos, "tilde-": self.tilde_neg,
                "hat+": self.hat_pos, "hat-": self.hat_neg}


def project_component(A: StiffnessOperator, field: WeightField, u: np.ndarray,
                      label: int, tol: float = PROJECTION_TOL,
                      x0: np.ndarray | None = None) -> np.ndarray:
    """A-orthogonal projection of ``u`` onto fields supported on one component.

    Solves the component-restricted SPD system A_ww v = (A u)|_w; the result
    is interior-indexed with support on the component's nodes.
    """
    if label not in (TILDE, HAT, BAR):
        raise ValueError(f"label must identify a positive component, got {label}")
    idx = field.interior_indices(label)
    rhs = (A.matrix @ u)[idx]
    v = np.zeros(A.n)
    v[idx] = solve_dirichlet(A, rhs, tol=tol, indices=idx,
                             x0=None if x0 is None else x0[idx])
    return v


def decompose(A: StiffnessOperator, field: WeightField, u: np.ndarray,
              tol: float = PROJECTION_TOL,
              warm: DecomposedField | None = None) -> DecomposedField:
    """Split ``u`` into tilde + hat + bar + residual.

    The three component projections are independent solves; ``warm`` supplies
    starting guesses when the field is a small perturbation of an earlier one
    (the common case inside descent loops).
    """
    u = np.asarray(u, dtype=float)
    Au = A.matrix @ u
    out = {}
    warm_parts = warm.parts() if warm is not None else {}
    for name, label in (("tilde", TILDE), ("hat", HAT), ("bar", BAR)):
        idx = field.interior_indices(label)
        x0 = warm_parts.get(name)
        v = np.zeros(A.n)
        v[idx] = solve_dirichlet(A, Au[idx], tol=tol, indices=idx,
                                 x0=None if x0 is None else x0[idx])
        out[name] = v
    residual = u - out["tilde"] - out["hat"] - out["bar"]
    dec = DecomposedField.from_parts(out["tilde"], out["hat"], out["bar"], residual)
    dec.u = u   # keep the exact input; reconstruction error stays in the parts
    return dec
