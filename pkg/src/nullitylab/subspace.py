"""Numerically determined linear subspaces."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class Subspace:
    """Orthonormal column basis of a subspace of R^ambient_dim.

    ``tol`` is the rank tolerance that produced the basis and ``label`` names
    what the subspace stands for (for reports).
    """

    basis: np.ndarray
    tol: float = DEFAULT_TOL
    label: str = ""
    ambient_dim: int = field(default=-1)

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2:
            raise ValueError("basis must be a 2-d array of columns")
        object.__setattr__(self, "basis", b)
        if self.ambient_dim < 0:
            object.__setattr__(self, "ambient_dim", b.shape[0])
        elif self.ambient_dim != b.shape[0]:
            raise ValueError("basis rows must equal ambient_dim")
        if b.shape[1] > b.shape[0]:
            raise ValueError("more basis vectors than ambient dimensions")

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def orthonormality_error(self) -> float:
        if self.dim == 0:
            return 0.0
        return float(np.abs(self.basis.T @ self.basis - np.eye(self.dim)).max())

    def residual(self, vectors: np.ndarray) -> float:
        """Largest norm of the part of the given columns outside the subspace."""
        v = np.asarray(vectors, dtype=float).reshape(self.ambient_dim, -1)
        if v.shape[1] == 0:
            return 0.0
        out = v - self.projector() @ v
        return float(np.linalg.norm(out, axis=0).max())

    def contains(self, other: "Subspace") -> float:
        """Containment residual of ``other`` in ``self`` (0 when contained)."""
        return self.residual(other.basis)

    def complement(self, label: str = "") -> "Subspace":
        return kernel_subspace(self.basis.T, self.tol, label) if self.dim else Subspace(
            np.eye(self.ambient_dim), self.tol, label
        )

    def map(self, matrix: np.ndarray, label: str = "") -> "Subspace":
        """Image under a linear map, re-orthonormalized."""
        return span_subspace(np.asarray(matrix) @ self.basis, self.tol, label)

    def relabel(self, label: str) -> "Subspace":
        return Subspace(self.basis, self.tol, label)


def empty(ambient_dim: int, tol: float = DEFAULT_TOL, label: str = "") -> Subspace:
    return Subspace(np.zeros((ambient_dim, 0)), tol, label)


def full(ambient_dim: int, tol: float = DEFAULT_TOL, label: str = "") -> Subspace:
    return Subspace(np.eye(ambient_dim), tol, label)


def _threshold(s: np.ndarray, tol: float) -> float:
    top = float(s[0]) if s.size else 0.0
    return tol * max(top, 1.0)


def kernel_subspace(operator, tol: float = DEFAULT_TOL, label: str = "") -> Subspace:
    """Kernel of a matrix: right singular vectors with singular value below
    ``tol * max(largest singular value, 1)``."""
    a = np.asarray(operator, dtype=float)
    if a.ndim != 2:
        raise ValueError("operator must be a matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("operator has non-finite entries")
    n = a.shape[1]
    if a.shape[0] == 0 or n == 0:
        return Subspace(np.eye(n), tol, label)
    _, s, vt = np.linalg.svd(a, full_matrices=True)
    rank = int(np.sum(s > _threshold(s, tol)))
    return Subspace(_canonical(vt[rank:].T), tol, label)


def span_subspace(vectors, tol: float = DEFAULT_TOL, label: str = "") -> Subspace:
    """Column span of ``vectors`` with the same rank rule as the kernel."""
    v = np.asarray(vectors, dtype=float)
    m = v.shape[0]
    if v.ndim != 2:
        v = v.reshape(m, -1)
    if v.shape[1] == 0:
        return empty(m, tol, label)
    u, s, _ = np.linalg.svd(v, full_matrices=False)
    rank = int(np.sum(s > _threshold(s, tol)))
    return Subspace(_canonical(u[:, :rank]), tol, label)


def numerical_rank(matrix, tol: float = DEFAULT_TOL) -> int:
    a = np.asarray(matrix, dtype=float)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    return int(np.sum(s > _threshold(s, tol)))


def _canonical(basis: np.ndarray) -> np.ndarray:
    """Flip column signs so each column's largest entry is positive."""
    if basis.shape[1] == 0:
        return basis
    idx = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[idx, np.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    return basis * signs


def subspace_distance(a: Subspace, b: Subspace) -> float:
    """Spectral norm of the difference of orthogonal projectors.

    Equal to 1 whenever the dimensions differ.
    """
    if a.ambient_dim != b.ambient_dim:
        raise ValueError("subspaces live in different ambient spaces")
    if a.ambient_dim == 0:
        return 0.0
    return float(np.linalg.norm(a.projector() - b.projector(), 2))


def intersection(a: Subspace, b: Subspace, tol: float | None = None, label: str = "") -> Subspace:
    tol = a.tol if tol is None else tol
    if a.dim == 0 or b.dim == 0:
        return empty(a.ambient_dim, tol, label)
    out_of_a = b.basis - a.projector() @ b.basis
    coeffs = kernel_subspace(out_of_a, tol)
    return span_subspace(b.basis @ coeffs.basis, tol, label)


def subspace_sum(a: Subspace, b: Subspace, tol: float | None = None, label: str = "") -> Subspace:
    tol = a.tol if tol is None else tol
    return span_subspace(np.hstack([a.basis, b.basis]), tol, label)
