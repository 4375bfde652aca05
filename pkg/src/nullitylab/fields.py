"""Jet-valued geometric fields around a chart point.

Everything here is a truncated Taylor expansion in the chart displacement,
so derivatives of frames, projectors and kernels are exact up to the
truncation order.  Kernels and ranges of matrix fields of locally constant
rank are continued smoothly from the base point.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import jets as J
from .jets import Jet
from .subspace import DEFAULT_TOL, kernel_subspace, span_subspace


def _eye(n: int, like: Jet) -> Jet:
    return Jet.constant(np.eye(n), like.nvars, like.order)


def projector(cols: Jet) -> Jet:
    """Orthogonal projector onto the column span of a full-rank matrix field."""
    if cols.shape[1] == 0:
        m = cols.shape[0]
        return Jet.constant(np.zeros((m, m)), cols.nvars, cols.order)
    gram = cols.T @ cols
    return cols @ J.inv(gram) @ cols.T


def smooth_kernel(matrix: Jet, tol: float = DEFAULT_TOL) -> Jet:
    """Column field spanning the kernel of a constant-rank matrix field.

    Starts from the numerical kernel K0 at the base point and corrects it by
    K = K0 - V0 (M V0)^+ M K0, with V0 the orthogonal complement of K0.
    """
    m0 = matrix.value
    d = m0.shape[1]
    k0 = kernel_subspace(m0, tol).basis
    r = k0.shape[1]
    if r == 0:
        return Jet.constant(np.zeros((d, 0)), matrix.nvars, matrix.order)
    if r == d:
        return Jet.constant(k0, matrix.nvars, matrix.order)
    v0 = kernel_subspace(k0.T, tol).basis
    mv = matrix @ v0
    correction = J.inv(mv.T @ mv) @ (mv.T @ (matrix @ k0))
    return Jet.constant(k0, matrix.nvars, matrix.order) - v0 @ correction


def smooth_range(matrix: Jet, tol: float = DEFAULT_TOL) -> Jet:
    """Column field spanning the range of a constant-rank matrix field."""
    m0 = matrix.value
    if m0.size == 0:
        return Jet.constant(np.zeros((m0.shape[0], 0)), matrix.nvars, matrix.order)
    rowspace = span_subspace(m0.T, tol).basis
    return matrix @ rowspace


def orthonormal_at_base(cols: Jet) -> Jet:
    """Re-mix a column field so its base value is orthonormal (same span)."""
    if cols.shape[1] == 0:
        return cols
    q, r = np.linalg.qr(cols.value)
    return cols @ np.linalg.inv(r)


@dataclass
class ImmersionField:
    """Jets of an immersion and its derived tensors around one chart point.

    ``order`` is the jet order of the immersion; a quantity built from k
    derivatives carries order ``order - k``.
    """

    jet: Jet
    tol: float = DEFAULT_TOL

    @property
    def n(self) -> int:
        return self.jet.nvars

    @property
    def ambient(self) -> int:
        return self.jet.shape[0]

    @property
    def p(self) -> int:
        return self.ambient - self.n

    @cached_property
    def jacobian(self) -> Jet:
        return self.jet.gradient()

    @cached_property
    def hessian(self) -> Jet:
        """(N, n, n) second partials, order - 2."""
        return self.jacobian.gradient()

    @cached_property
    def metric(self) -> Jet:
        return self.jacobian.T @ self.jacobian

    @cached_property
    def metric_inv(self) -> Jet:
        return J.inv(self.metric)

    @cached_property
    def tangent_projector(self) -> Jet:
        jac = self.jacobian
        return jac @ self.metric_inv @ jac.T

    @cached_property
    def normal_projector(self) -> Jet:
        pt = self.tangent_projector.truncate(self.jet.order - 2)
        return _eye(self.ambient, pt) - pt

    @cached_property
    def alpha(self) -> Jet:
        """Ambient-valued second fundamental form in chart slots, shape (n, n, N)."""
        pn = self.normal_projector
        return J.einsum("kl,lij->ijk", pn, self.hessian)

    @cached_property
    def christoffel(self) -> Jet:
        """Chart Christoffel symbols, ``christoffel[k, i, j]``."""
        order = self.jet.order - 2
        ginv_jt = (self.metric_inv @ self.jacobian.T).truncate(order)
        return J.einsum("kl,lij->kij", ginv_jt, self.hessian)

    @cached_property
    def curvature(self) -> Jet:
        """Gauss curvature in chart slots, R[i, j, k, l]."""
        a = self.alpha
        g = J.einsum("ilt,jkt->ijkl", a, a)
        return g - g.transpose(0, 1, 3, 2)

    @cached_property
    def gamma_field(self) -> Jet:
        """Chart-vector columns spanning the curvature nullity."""
        n = self.n
        return smooth_kernel(self.curvature.reshape(n, n * n * n).T, self.tol)

    def beta_values(self) -> Jet:
        """Ambient columns alpha(e_i, Z_j) over chart e_i and nullity fields Z_j."""
        a = self.alpha
        z = self.gamma_field
        vals = J.einsum("ijt,jm->tim", a, z)
        return vals.reshape(self.ambient, -1)

    @cached_property
    def s_beta_field(self) -> Jet:
        """Ambient columns spanning S(beta)."""
        return smooth_range(self.beta_values(), self.tol)

    @cached_property
    def delta_beta_field(self) -> Jet:
        """Chart-vector columns spanning the left nullity of beta."""
        a = self.alpha
        z = self.gamma_field
        vals = J.einsum("ijt,jm->mti", a, z)
        n = self.n
        return smooth_kernel(vals.reshape(-1, n), self.tol)

    def covariant_derivative(self, x: Jet, y: Jet) -> Jet:
        """nabla_X Y for chart vector fields (columns), evaluated as jets.

        ``x`` and ``y`` have shape (n,) and must carry order >= 1; the result
        has one order less.
        """
        order = min(x.order, y.order) - 1
        dy = y.gradient().truncate(order)  # dy[k, i] = d_i y^k
        xs = x.truncate(order)
        ys = y.truncate(order)
        gam = self.christoffel.truncate(order)
        return J.einsum("ki,i->k", dy, xs) + J.einsum("kij,i->kj", gam, xs) @ ys

    def chart_to_frame(self) -> np.ndarray:
        """Upper-triangular R with J = T R at the base point."""
        from .geometry import frames

        return frames(self.jacobian.value)[2]


def lift_field(immersion, x, order: int, tol: float = DEFAULT_TOL) -> ImmersionField:
    return ImmersionField(J.taylor_lift(immersion, x, order), tol)


def _frame_residual(r: np.ndarray, span_cols: np.ndarray, vec: np.ndarray) -> float:
    """Norm of the metric-orthogonal part of a chart vector outside a span of chart vectors."""
    v = r @ vec
    if span_cols.shape[1] == 0:
        return float(np.linalg.norm(v))
    q, _ = np.linalg.qr(r @ span_cols)
    return float(np.linalg.norm(v - q @ (q.T @ v)))


def bracket(x: Jet, y: Jet) -> np.ndarray:
    """Lie bracket of two chart vector fields at the base point."""
    dx = x.gradient().value  # dx[k, i] = d_i x^k
    dy = y.gradient().value
    return dy @ x.value - dx @ y.value


def bracket_closure_residual(f: ImmersionField, cols: Jet) -> float:
    """Worst bracket of two columns leaving their span, relative to the field size."""
    r = f.chart_to_frame()
    base = cols.value
    worst = 0.0
    m = cols.shape[1]
    for a in range(m):
        for b in range(a + 1, m):
            scale = max(np.linalg.norm(r @ base[:, a]) * np.linalg.norm(r @ base[:, b]), 1e-300)
            br = bracket(cols[:, a], cols[:, b])
            worst = max(worst, _frame_residual(r, base, br) / scale)
    return worst


def totally_geodesic_residual(f: ImmersionField, cols: Jet) -> float:
    """Worst covariant derivative nabla_{X} Y of columns leaving their span."""
    r = f.chart_to_frame()
    base = cols.value
    worst = 0.0
    m = cols.shape[1]
    for a in range(m):
        for b in range(m):
            cov = f.covariant_derivative(cols[:, a], cols[:, b]).value
            scale = max(np.linalg.norm(r @ base[:, a]) * np.linalg.norm(r @ base[:, b]), 1e-300)
            worst = max(worst, _frame_residual(r, base, cov) / scale)
    return worst


def straight_line_residual(f: ImmersionField, cols: Jet) -> float:
    """Worst ambient acceleration along the distribution leaving its image.

    For columns d_a, d_b the ambient derivative of g_* d_b along d_a is
    H(d_a, d_b) + J (d_a . grad) d_b; it must stay inside g_* span(d) for
    the leaves to be mapped into affine subspaces.
    """
    jac = f.jacobian.value
    hess = f.hessian.value
    base = cols.value
    m = cols.shape[1]
    if m == 0:
        return 0.0
    q, _ = np.linalg.qr(jac @ base)
    worst = 0.0
    for a in range(m):
        for b in range(m):
            db = cols[:, b].gradient().value
            w = np.einsum("kij,i,j->k", hess, base[:, a], base[:, b]) + jac @ (db @ base[:, a])
            scale = max(np.linalg.norm(jac @ base[:, a]) * np.linalg.norm(jac @ base[:, b]), 1e-300)
            worst = max(worst, float(np.linalg.norm(w - q @ (q.T @ w))) / scale)
    return worst
