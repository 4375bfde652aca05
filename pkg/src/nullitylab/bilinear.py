"""Bilinear forms into a Euclidean space: flatness, regular elements,
nullity and diagonalization of flat symmetric forms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .subspace import (
    DEFAULT_TOL,
    Subspace,
    empty,
    kernel_subspace,
    numerical_rank,
    span_subspace,
)

FLAT_TOL = 1e-8


class NonFlatForm(ValueError):
    """The form fails the flatness test, so nullity via a regular element is not valid."""


class DiagonalizationError(RuntimeError):
    """Deflation did not reach the requested orthogonality."""


@dataclass(frozen=True)
class BilinearForm:
    """``values[i, j]`` is beta(e_i, f_j) in orthonormal target coordinates."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3:
            raise ValueError("values must have shape (dim_left, dim_right, dim_target)")
        if not np.all(np.isfinite(v)):
            raise ValueError("bilinear form has non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def dim_left(self) -> int:
        return self.values.shape[0]

    @property
    def dim_right(self) -> int:
        return self.values.shape[1]

    @property
    def dim_target(self) -> int:
        return self.values.shape[2]

    def __call__(self, x, y) -> np.ndarray:
        return np.einsum("i,j,ijt->t", x, y, self.values)

    def right_map(self, z) -> np.ndarray:
        """Matrix of X -> beta(X, z), shape (dim_target, dim_left)."""
        return np.einsum("ijt,j->ti", self.values, np.asarray(z, dtype=float))

    def scale(self) -> float:
        """Spectral norm of the values stacked as (left*right) x target."""
        flat = self.values.reshape(-1, self.dim_target)
        if flat.size == 0:
            return 0.0
        return float(np.linalg.norm(flat, 2))

    def change_bases(self, left=None, right=None, target=None) -> "BilinearForm":
        """Form expressed in new orthonormal bases (columns of the given matrices)."""
        v = self.values
        if left is not None:
            v = np.einsum("ijt,ia->ajt", v, left)
        if right is not None:
            v = np.einsum("ijt,jb->ibt", v, right)
        if target is not None:
            v = np.einsum("ijt,tc->ijc", v, target)
        return BilinearForm(v)


@dataclass(frozen=True)
class RegularElement:
    vector: np.ndarray
    rank: int


def flatness_tensor(b: BilinearForm) -> np.ndarray:
    """F[x,y,z,w] = <b(x,y), b(z,w)> - <b(x,w), b(z,y)>."""
    g = np.einsum("xyt,zwt->xyzw", b.values, b.values)
    return g - g.transpose(0, 3, 2, 1)


def flatness_residual(b: BilinearForm) -> float:
    """Normalized flatness defect; 0 exactly for flat forms and the zero form.

    The defect tensor is flattened to a (left*right) x (left*right) matrix and
    measured in spectral norm, then divided by the squared spectral norm of
    the stacked values.  Both are invariant under orthogonal changes of all
    three bases, and the defect norm bounds every single entry.
    """
    s = b.scale()
    if s == 0.0:
        return 0.0
    m = b.dim_left * b.dim_right
    f = flatness_tensor(b).reshape(m, m)
    return float(np.linalg.norm(f, 2)) / s**2


def _rank_profile(m: np.ndarray, tol: float) -> tuple[int, float]:
    if m.size == 0:
        return 0, 0.0
    s = np.linalg.svd(m, compute_uv=False)
    r = int(np.sum(s > tol * max(s[0], 1.0)))
    return r, float(s[r - 1]) if r else 0.0


def find_regular_element(
    b: BilinearForm, trials: int = 16, seed: int = 0, tol: float = DEFAULT_TOL
) -> RegularElement:
    """Right vector maximizing rank of X -> b(X, z) over the basis vectors and
    ``trials`` seeded random unit vectors.  Ties go to the best conditioned."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    d = b.dim_right
    if d == 0:
        return RegularElement(np.zeros(0), 0)
    rng = np.random.default_rng(seed)
    rand = rng.standard_normal((trials, d))
    rand /= np.linalg.norm(rand, axis=1, keepdims=True)
    candidates = np.vstack([np.eye(d), rand])
    best, best_key = candidates[0], (-1, -1.0)
    for z in candidates:
        key = _rank_profile(b.right_map(z), tol)
        if key > best_key:
            best, best_key = z, key
    return RegularElement(best.copy(), best_key[0])


def moore_nullity(
    b: BilinearForm,
    reg: RegularElement | None = None,
    tol: float = DEFAULT_TOL,
    flat_tol: float = FLAT_TOL,
) -> Subspace:
    """Left nullity of a flat form, read off as the kernel of b^z at a regular z."""
    res = flatness_residual(b)
    if res > flat_tol:
        raise NonFlatForm(f"flatness residual {res:.3e} exceeds threshold {flat_tol:.1e}")
    if b.dim_right == 0:
        return kernel_subspace(np.zeros((0, b.dim_left)), tol, "Delta_beta")
    if reg is None:
        reg = find_regular_element(b, tol=tol)
    return kernel_subspace(b.right_map(reg.vector), tol, "Delta_beta")


def kernel_intersection(b: BilinearForm, tol: float = DEFAULT_TOL) -> Subspace:
    """Left vectors killed by every right basis vector (brute force)."""
    stacked = b.values.transpose(1, 2, 0).reshape(-1, b.dim_left)
    return kernel_subspace(stacked, tol, "Delta_beta")


def span_of(b: BilinearForm, tol: float = DEFAULT_TOL) -> Subspace:
    """Span of all values b(X, Y) inside the target space."""
    flat = b.values.reshape(-1, b.dim_target).T
    if flat.shape[1] == 0:
        return empty(b.dim_target, tol, "S_beta")
    return span_subspace(flat, tol, "S_beta")


def _generalized_eigvecs(a1: np.ndarray, a2: np.ndarray):
    w, v = np.linalg.eig(np.linalg.solve(a2, a1))
    return w.real, v.real


def moore_diagonalize(
    b_sym: BilinearForm,
    nullity: Subspace,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    draws: int = 8,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairs (Z_i, rho_i) with b(Z_i, Z_j) = 0 for i != j and rho_i = b(Z_i, Z_i)
    orthonormal, for a flat symmetric form with the given nullity.

    Works by deflation.  On the current subspace U (initially the orthogonal
    complement of the nullity) the shape matrices A_eta = <b, eta> share the
    Z_i as generalized eigenvectors, so one is picked from a pencil with a
    well separated eigenvalue, normalized, and U is replaced by the kernel of
    b(., Z) inside U.
    """
    v = b_sym.values
    m = b_sym.dim_left
    if b_sym.dim_right != m:
        raise ValueError("moore_diagonalize needs a form with equal left and right slots")
    if not np.allclose(v, v.transpose(1, 0, 2), atol=tol * max(b_sym.scale(), 1.0)):
        raise ValueError("form is not symmetric")
    scale = b_sym.scale()
    if scale == 0.0:
        return []
    q = span_of(b_sym, tol).dim
    u = nullity.complement().basis if nullity.dim else np.eye(m)
    if u.shape[1] != q:
        raise DiagonalizationError(
            f"complement of the nullity has dimension {u.shape[1]} but the value span has {q}"
        )
    rng = np.random.default_rng(seed)
    pairs: list[tuple[np.ndarray, np.ndarray]] = []
    while u.shape[1] > 0:
        vu = np.einsum("ia,jb,ijt->abt", u, u, v)
        if u.shape[1] == 1:
            coeff = np.ones(1)
        else:
            coeff = _pick_direction(vu, rng, draws)
        z = u @ coeff
        rho = b_sym(z, z)
        norm = np.linalg.norm(rho)
        if norm <= tol * scale:
            raise DiagonalizationError("deflation produced a null direction")
        z = z / np.sqrt(norm)
        rho = rho / norm
        pairs.append((z, rho))
        # keep the part of U orthogonal to b(., z) in every target direction
        coupling = np.einsum("ijt,j,ia->ta", v, z, u)
        ker = kernel_subspace(coupling, tol)
        u = u @ ker.basis
        if u.shape[1] != q - len(pairs):
            raise DiagonalizationError("deflation lost or gained dimensions")
    _verify_pairs(b_sym, pairs, tol)
    return pairs


def _pick_direction(vu: np.ndarray, rng, draws: int) -> np.ndarray:
    d, _, t = vu.shape
    best_gap, best = -1.0, None
    for _ in range(draws):
        e1, e2 = rng.standard_normal((2, t))
        a1 = vu @ e1
        a2 = vu @ e2
        if np.linalg.cond(a2) > 1e10:
            continue
        w, vecs = _generalized_eigvecs(a1, a2)
        order = np.argsort(w)
        w = w[order]
        gaps = np.diff(w)
        left = np.concatenate([[np.inf], gaps])
        right = np.concatenate([gaps, [np.inf]])
        sep = np.minimum(left, right) / max(np.abs(w).max(), 1.0)
        i = int(np.argmax(sep))
        if sep[i] > best_gap:
            best_gap = float(sep[i])
            best = vecs[:, order[i]]
    if best is None:
        raise DiagonalizationError("no invertible shape matrix found on the current subspace")
    return best / np.linalg.norm(best)


def _verify_pairs(b: BilinearForm, pairs, tol: float) -> None:
    for i, (zi, _) in enumerate(pairs):
        for j, (zj, _) in enumerate(pairs):
            if i != j and np.linalg.norm(b(zi, zj)) > tol:
                raise DiagonalizationError(
                    f"off-diagonal value |b(Z_{i}, Z_{j})| = {np.linalg.norm(b(zi, zj)):.3e} exceeds {tol:.1e}"
                )
    rhos = np.array([r for _, r in pairs])
    err = np.abs(rhos @ rhos.T - np.eye(len(pairs))).max()
    if err > tol:
        raise DiagonalizationError(f"rho vectors deviate from orthonormal by {err:.3e}")


def diagonalization_errors(b: BilinearForm, pairs) -> tuple[float, float]:
    """(largest off-diagonal norm, orthonormality error of the rho vectors)."""
    off = 0.0
    for i, (zi, _) in enumerate(pairs):
        for j, (zj, _) in enumerate(pairs):
            if i != j:
                off = max(off, float(np.linalg.norm(b(zi, zj))))
    if not pairs:
        return off, 0.0
    rhos = np.array([r for _, r in pairs])
    return off, float(np.abs(rhos @ rhos.T - np.eye(len(pairs))).max())


def stacked_rank(b: BilinearForm, tol: float = DEFAULT_TOL) -> int:
    return numerical_rank(b.values.reshape(-1, b.dim_target), tol)
