"""Pointwise extrinsic and intrinsic data of an immersion.

Tangent quantities (second fundamental form, curvature, nullities) are
expressed in the orthonormal tangent frame obtained from a QR factorization
of the Jacobian, and normal components in the normal frame.  Chart vectors
convert to frame vectors through ``to_frame = R`` (upper triangular) and back
through ``from_frame = R^{-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import Jet
from .subspace import DEFAULT_TOL, Subspace, kernel_subspace, _canonical

IMMERSION_TOL = 1e-10


class NotAnImmersion(ValueError):
    """The Jacobian is rank deficient at the requested point."""


@dataclass(frozen=True)
class PointGeometry:
    x: np.ndarray
    position: np.ndarray
    jacobian: np.ndarray
    hessian: np.ndarray
    tangent_frame: np.ndarray
    normal_frame: np.ndarray
    metric: np.ndarray
    from_frame: np.ndarray
    alpha: np.ndarray
    curvature: np.ndarray

    @property
    def n(self) -> int:
        return self.tangent_frame.shape[1]

    @property
    def p(self) -> int:
        return self.normal_frame.shape[1]

    def alpha_ambient(self) -> np.ndarray:
        """Second fundamental form with ambient vector values, shape (n, n, n+p)."""
        return self.alpha @ self.normal_frame.T

    def tangent_vectors(self, sub: Subspace) -> np.ndarray:
        """Ambient images of the columns of a tangent-frame subspace."""
        return self.tangent_frame @ sub.basis


def frames(jacobian: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Orthonormal tangent frame, normal frame and triangular factor of J."""
    jac = np.asarray(jacobian, dtype=float)
    m, n = jac.shape
    q, r = np.linalg.qr(jac, mode="complete")
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    q[:, :n] *= d
    r = d[:, None] * r[:n]
    s = np.abs(np.diag(r))
    if n and s.min() <= IMMERSION_TOL * max(s.max(), 1.0):
        raise NotAnImmersion(f"Jacobian has numerical rank < {n}")
    return q[:, :n], _canonical(q[:, n:]), r


def point_geometry(j: Jet) -> PointGeometry:
    """Frames, metric, second fundamental form and Gauss curvature from a jet."""
    if j.order < 2:
        raise ValueError("point_geometry needs a jet of order >= 2")
    if j.ndim != 1:
        raise ValueError("expected a vector-valued jet")
    jac = j.derivative(1)
    hess = j.derivative(2)
    tangent, normal, r = frames(jac)
    rinv = np.linalg.solve(r, np.eye(r.shape[0]))
    hn = np.einsum("kij,kt->ijt", hess, normal)
    alpha = np.einsum("ia,jb,ijt->abt", rinv, rinv, hn)
    alpha = 0.5 * (alpha + alpha.transpose(1, 0, 2))
    return PointGeometry(
        x=np.zeros(jac.shape[1]),
        position=j.value.copy(),
        jacobian=jac,
        hessian=hess,
        tangent_frame=tangent,
        normal_frame=normal,
        metric=jac.T @ jac,
        from_frame=rinv,
        alpha=alpha,
        curvature=gauss_curvature(alpha),
    )


def point_geometry_at(immersion, x, order: int = 2) -> PointGeometry:
    from .jets import taylor_lift

    pg = point_geometry(taylor_lift(immersion, x, order))
    return _with_x(pg, x)


def _with_x(pg: PointGeometry, x) -> PointGeometry:
    return PointGeometry(**{**pg.__dict__, "x": np.asarray(x, dtype=float).copy()})


def gauss_curvature(alpha: np.ndarray) -> np.ndarray:
    """R(X,Y,Z,W) = <a(X,W), a(Y,Z)> - <a(X,Z), a(Y,W)>."""
    g = np.einsum("xwt,yzt->xyzw", alpha, alpha)
    return g - g.transpose(0, 1, 3, 2)


def curvature_symmetry_residuals(curv: np.ndarray) -> dict[str, float]:
    scale = max(float(np.abs(curv).max()), 1.0)
    bianchi = curv + curv.transpose(1, 2, 0, 3) + curv.transpose(2, 0, 1, 3)
    return {
        "antisymmetry": float(np.abs(curv + curv.transpose(1, 0, 2, 3)).max()) / scale,
        "pair_symmetry": float(np.abs(curv - curv.transpose(2, 3, 0, 1)).max()) / scale,
        "first_bianchi": float(np.abs(bianchi).max()) / scale,
    }


def frame_gram_error(pg: PointGeometry) -> float:
    full = np.hstack([pg.tangent_frame, pg.normal_frame])
    return float(np.abs(full.T @ full - np.eye(full.shape[1])).max())


def nullity_gamma(pg: PointGeometry, tol: float = DEFAULT_TOL) -> Subspace:
    """Kernel of X -> R(X, ., ., .)."""
    n = pg.n
    return kernel_subspace(pg.curvature.reshape(n, -1).T, tol, "Gamma")


def relative_nullity(pg: PointGeometry, tol: float = DEFAULT_TOL) -> Subspace:
    """Kernel of X -> alpha(X, .)."""
    n = pg.n
    return kernel_subspace(pg.alpha.reshape(n, -1).T, tol, "Delta_g")


def shape_operator(pg: PointGeometry, normal) -> np.ndarray:
    """Shape operator for a unit normal given by its normal-frame components.

    Orientation: ``<A X, Y> = <alpha(X, Y), normal>``, so the unit sphere with
    its outward normal has ``A = -I``.
    """
    nu = np.asarray(normal, dtype=float).reshape(-1)
    if nu.size != pg.p:
        raise ValueError(f"normal must have {pg.p} components")
    if abs(np.linalg.norm(nu) - 1.0) > 1e-10:
        raise ValueError("normal must be a unit vector")
    a = pg.alpha @ nu
    return 0.5 * (a + a.T)


def chart_to_frame(pg: PointGeometry, v) -> np.ndarray:
    """Orthonormal-frame components of a chart tangent vector."""
    return np.linalg.solve(pg.from_frame, np.asarray(v, dtype=float))
