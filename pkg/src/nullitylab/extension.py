"""The extension tensor phi, its curvature and nullities, and the ruled
extension G(x, s) = g(x) + Lambda(x) s built from them.

Normal subbundles are handled through projector fields.  With Q the
projector onto the complement of L inside the normal bundle and P = I - Q
the projector onto TM + L, the tensor is phi_i = -Q (d_i Q) P as an ambient
matrix, for chart direction i.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import audit as A
from . import jets as J
from .audit import Audit
from .fields import (
    ImmersionField,
    lift_field,
    orthonormal_at_base,
    projector,
    smooth_kernel,
    smooth_range,
    straight_line_residual,
    totally_geodesic_residual,
)
from .geometry import frames, nullity_gamma, point_geometry, relative_nullity
from .jets import Jet
from .subspace import (
    DEFAULT_TOL,
    Subspace,
    intersection,
    kernel_subspace,
    span_subspace,
    subspace_distance,
)

PHI_ORDER = 4
EXTENSION_ORDER = 5
CODAZZI_TOL = 1e-8
BIANCHI1_TOL = 1e-10
BIANCHI2_TOL = 1e-7
CONTAINMENT_TOL = 1e-8
R_PHI_TOL = 1e-8
R_N_TOL = 1e-6
GHAT_TOL = 1e-6
RULED_TOL = 1e-6
MAX_DROP_FRACTION = 0.1


class ExtensionError(RuntimeError):
    pass


class LambdaRankWarning(UserWarning):
    pass


# ---- choosing L ---------------------------------------------------------

def complement_projector(f: ImmersionField, l_spec=None) -> Jet:
    """Projector field Q onto the part of the normal bundle orthogonal to L.

    ``l_spec`` is ``None`` for L = S(beta)^perp, ``"normal"`` for the whole
    normal bundle, or an (N, l) array of ambient vectors whose normal parts
    span L.
    """
    if l_spec is None:
        return projector(f.s_beta_field)
    pn = f.normal_projector
    if isinstance(l_spec, str):
        if l_spec != "normal":
            raise ValueError(f"unknown L specification {l_spec!r}")
        return 0.0 * pn
    vecs = np.asarray(l_spec, dtype=float).reshape(f.ambient, -1)
    cols = pn @ vecs
    if np.linalg.matrix_rank(cols.value, 1e-8) != vecs.shape[1]:
        raise ValueError("L vectors are not independent modulo the tangent space")
    return pn - projector(cols)


# ---- phi as a field -----------------------------------------------------

@dataclass(frozen=True)
class PhiTensor:
    """phi at one point.

    ``basis`` is an orthonormal ambient basis of TM + L whose first n columns
    are the tangent frame.  ``values[a, m]`` is phi(e_a, basis_m) as an
    ambient vector, for orthonormal tangent directions e_a.
    """

    x: np.ndarray
    basis: np.ndarray
    L: Subspace
    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def ell(self) -> int:
        return self.L.dim


@dataclass(frozen=True)
class PhiCurvature:
    """R_phi(e_a, e_b, v_m, v_q) in tangent-frame and TM + L basis coordinates."""

    values: np.ndarray


@dataclass(frozen=True)
class PhiNullities:
    delta_left: Subspace
    delta_right: Subspace
    gamma_left: Subspace
    gamma_right: Subspace


class PhiField:
    """phi and its derivatives around one chart point."""

    def __init__(self, f: ImmersionField, l_spec=None, x=None):
        if f.jet.order < 3:
            raise ValueError("phi needs an immersion jet of order >= 3")
        self.f = f
        self.l_spec = l_spec
        self.x = np.zeros(f.n) if x is None else np.asarray(x, dtype=float)
        self.q = complement_projector(f, l_spec)
        self.ell = f.p - int(round(np.trace(self.q.value)))
        if self.ell < 1:
            raise ValueError("L must have rank >= 1")

    @property
    def n(self) -> int:
        return self.f.n

    @cached_property
    def p_tl(self) -> Jet:
        """Projector onto TM + L (order one less than Q)."""
        q = self.q.truncate(self.q.order - 1)
        return Jet.constant(np.eye(self.f.ambient), q.nvars, q.order) - q

    @cached_property
    def phi(self) -> Jet:
        """phi[i] = -Q d_iQ P, shape (n, N, N), chart index first."""
        dq = self.q.gradient()  # (N, N, n)
        q = self.q.truncate(dq.order)
        return -J.einsum("kl,lmi->ikm", q, dq) @ self.p_tl

    @cached_property
    def from_frame(self) -> np.ndarray:
        _, _, r = frames(self.f.jacobian.value)
        return np.linalg.inv(r)

    @cached_property
    def tangent_frame(self) -> np.ndarray:
        return frames(self.f.jacobian.value)[0]

    @cached_property
    def l_basis(self) -> np.ndarray:
        pl = self.p_tl.value - self.f.tangent_projector.value
        return span_subspace(pl, 1e-8).basis

    @cached_property
    def basis(self) -> np.ndarray:
        return np.hstack([self.tangent_frame, self.l_basis])

    def tensor(self) -> PhiTensor:
        phi_frame = np.einsum("ia,ikm->akm", self.from_frame, self.phi.value)
        values = np.einsum("akm,mv->avk", phi_frame, self.basis)
        return PhiTensor(self.x, self.basis, Subspace(self.l_basis, label="L"), values)

    def rphi_chart(self) -> Jet:
        """Ambient matrices R[b, c] = phi_c^T phi_b - phi_b^T phi_c."""
        phi = self.phi
        g = J.einsum("ckv,bkw->bcvw", phi, phi)
        return g - g.transpose(1, 0, 2, 3)

    def codazzi_residual(self) -> float:
        """Worst |(nabla_X phi)(Y, v) - (nabla_Y phi)(X, v)| over frame directions."""
        if self.phi.order < 1:
            raise ValueError("Codazzi residual needs phi of order >= 1 (immersion order >= 4)")
        n = self.n
        dphi = self.phi.gradient().value  # (n, N, N, n): d_i phi_j at [j, :, :, i]
        phi0 = self.phi.value
        dp = self.p_tl.gradient().value  # (N, N, n)
        q0 = self.q.value
        p0 = np.eye(self.f.ambient) - q0
        c = np.empty((n, n) + q0.shape)
        scale = 1.0
        for i in range(n):
            for j in range(n):
                c[i, j] = (q0 @ dphi[j, :, :, i] - phi0[j] @ dp[:, :, i]) @ p0
                scale = max(scale, float(np.abs(q0 @ dphi[j, :, :, i]).max()))
        c = c - c.transpose(1, 0, 2, 3)
        cf = np.einsum("ia,jb,ijkm,mv->abkv", self.from_frame, self.from_frame, c, self.basis)
        return float(np.linalg.norm(cf, axis=2).max()) / scale

    def bianchi2_residual(self) -> float:
        """Worst cyclic sum of the covariant derivative of R_phi."""
        r = self.rphi_chart()
        if r.order < 1:
            raise ValueError("second Bianchi residual needs immersion order >= 4")
        dr = r.gradient().value  # (n, n, N, N, n): d_a R_bc at [b, c, :, :, a]
        r0 = r.value
        gam = self.f.christoffel.value  # [k, a, b]
        dp = self.p_tl.gradient().value
        p0 = self.p_tl.value
        n = self.n
        cov = np.empty((n, n, n) + p0.shape)  # cov[a, b, c]
        scale = max(1.0, float(np.abs(dr).max()))
        for a in range(n):
            term = (
                dr[:, :, :, :, a]
                - np.einsum("kb,kcvw->bcvw", gam[:, a, :], r0)
                - np.einsum("kc,bkvw->bcvw", gam[:, a, :], r0)
                - np.einsum("vu,bcuw->bcvw", dp[:, :, a].T, r0)
                - np.einsum("bcvu,uw->bcvw", r0, dp[:, :, a])
            )
            cov[a] = np.einsum("vu,bcuz,zw->bcvw", p0, term, p0)
        cyc = cov + cov.transpose(1, 2, 0, 3, 4) + cov.transpose(2, 0, 1, 3, 4)
        f = self.from_frame
        e = self.basis
        cyc_f = np.einsum("ai,bj,ck,ijkvw,vm,wq->abcmq", f.T, f.T, f.T, cyc, e, e)
        return float(np.abs(cyc_f).max()) / scale

    @cached_property
    def lambda_field(self) -> Jet:
        """Ambient column field spanning Delta_phi^r intersected with (Delta_phi^l)^perp."""
        phi = self.phi
        n, big = self.n, self.f.ambient
        left = smooth_kernel(phi.reshape(n, big * big).T, self.f.tol)
        jac = self.f.jacobian.truncate(phi.order)
        dl = jac @ left
        q = self.q.truncate(phi.order)
        rows = J.concatenate([phi.reshape(n * big, big), q, dl.T], axis=0)
        return orthonormal_at_base(smooth_kernel(rows, self.f.tol))


def build_phi(immersion, x, l_spec=None, order: int = PHI_ORDER, tol: float = DEFAULT_TOL) -> PhiField:
    """phi for L = S(beta)^perp (default) or the given L at chart point x."""
    return PhiField(lift_field(immersion, x, order, tol), l_spec, x)


def curvature_of_phi(phi: PhiTensor) -> PhiCurvature:
    v = phi.values
    g = np.einsum("aqk,bmk->abmq", v, v)
    return PhiCurvature(g - g.transpose(0, 1, 3, 2))


def first_bianchi_residual(rphi: PhiCurvature) -> float:
    """Cyclic sum over the three tangent slots, relative to max |R_phi|."""
    r = rphi.values
    n = r.shape[0]
    t = r[:, :, :n, :]
    cyc = t + t.transpose(1, 2, 0, 3) + t.transpose(2, 0, 1, 3)
    return float(np.abs(cyc).max(initial=0.0)) / max(float(np.abs(r).max(initial=0.0)), 1.0)


def codazzi_residual_phi(fields) -> float:
    """Worst Codazzi residual over one PhiField or an iterable of them."""
    if isinstance(fields, PhiField):
        fields = [fields]
    return max((pf.codazzi_residual() for pf in fields), default=0.0)


def bianchi2_residual(fields) -> float:
    if isinstance(fields, PhiField):
        fields = [fields]
    return max((pf.bianchi2_residual() for pf in fields), default=0.0)


def phi_nullities(phi: PhiTensor, rphi: PhiCurvature, tol: float = DEFAULT_TOL) -> PhiNullities:
    """Left/right nullities of phi and R_phi; right ones in TM + L basis coordinates."""
    v = phi.values
    n, m = v.shape[0], v.shape[1]
    r = rphi.values
    return PhiNullities(
        delta_left=kernel_subspace(v.reshape(n, -1).T, tol, "Delta_phi_l"),
        delta_right=kernel_subspace(v.transpose(1, 0, 2).reshape(m, -1).T, tol, "Delta_phi_r"),
        gamma_left=kernel_subspace(r.reshape(n, -1).T, tol, "Gamma_phi_l"),
        gamma_right=kernel_subspace(r.transpose(3, 0, 1, 2).reshape(m, -1).T, tol, "Gamma_phi_r"),
    )


def embed_tangent(sub: Subspace, m: int) -> Subspace:
    """Tangent-frame subspace as a subspace of TM + L coordinates."""
    basis = np.zeros((m, sub.dim))
    basis[: sub.ambient_dim] = sub.basis
    return Subspace(basis, sub.tol, sub.label)


def tangent_part(m: int, n: int, tol: float = DEFAULT_TOL) -> Subspace:
    return Subspace(np.eye(m)[:, :n], tol, "TM")


def containment_audits(nul: PhiNullities, n: int) -> list[Audit]:
    m = nul.delta_right.ambient_dim
    tm = tangent_part(m, n)
    dr_tm = intersection(nul.delta_right, tm)
    gr_tm = intersection(nul.gamma_right, tm)
    dl = embed_tangent(nul.delta_left, m)
    gl = embed_tangent(nul.gamma_left, m)
    return [
        A.below("delta_phi_l_in_delta_phi_r_cap_tm", dr_tm.contains(dl), CONTAINMENT_TOL),
        A.below("delta_phi_l_in_gamma_phi_l", nul.gamma_left.contains(nul.delta_left), CONTAINMENT_TOL),
        A.below("gamma_phi_l_in_gamma_phi_r_cap_tm", gr_tm.contains(gl), CONTAINMENT_TOL),
    ]


def lambda_bundle(delta_left: Subspace, delta_right: Subspace, ell: int | None = None) -> Subspace:
    """Delta_phi^r intersected with the orthogonal complement of Delta_phi^l."""
    m = delta_right.ambient_dim
    comp = embed_tangent(delta_left, m).complement()
    lam = intersection(delta_right, comp, label="Lambda")
    if ell is not None and lam.dim != ell:
        warnings.warn(f"rank Lambda = {lam.dim} differs from rank L = {ell}", LambdaRankWarning, stacklevel=2)
    return lam


# ---- the ruled extension ------------------------------------------------

@dataclass
class ExtensionPoint:
    """Induced data of N at one sample (x, s)."""

    x: np.ndarray
    s: np.ndarray
    position: np.ndarray
    zero_section_error: float
    nu_G: int
    mu_N: int
    max_curvature: float
    delta_G_ambient: Subspace
    gamma_N_ambient: Subspace


@dataclass
class BasePointData:
    x: np.ndarray
    phi: PhiTensor
    rphi: PhiCurvature
    nullities: PhiNullities
    lam: Subspace
    gamma: Subspace
    tangent_frame: np.ndarray
    alpha_ambient: np.ndarray
    mu: int
    nu_g: int
    codazzi: float
    bianchi1: float
    bianchi2: float


@dataclass
class RuledExtensionSample:
    immersion_name: str
    n: int
    p: int
    ell: int
    radius: float
    bases: list[BasePointData]
    points: list[ExtensionPoint]
    dropped: int = 0
    halvings: int = 0
    warnings: list[str] = field(default_factory=list)


def _extension_jet(pf: PhiField, s: np.ndarray) -> Jet:
    """2-jet of G at (x, s) in the n + l variables (dx, ds)."""
    n = pf.n
    ell = s.size
    lam = pf.lambda_field.truncate(2).expand_vars(n + ell)
    g = pf.f.jet.truncate(2).expand_vars(n + ell)
    seed = Jet.variables(np.concatenate([np.zeros(n), s]), 2)
    svars = seed[n:]
    return g + lam @ svars


def _s_offsets(ell: int, radius: float) -> list[np.ndarray]:
    offs = [np.zeros(ell)]
    for i in range(ell):
        for sign in (-1.0, 1.0):
            e = np.zeros(ell)
            e[i] = sign * radius
            offs.append(e)
    return offs


def _base_data(pf: PhiField, tol: float) -> BasePointData:
    t = pf.tensor()
    r = curvature_of_phi(t)
    nul = phi_nullities(t, r, tol)
    lam = lambda_bundle(nul.delta_left, nul.delta_right, pf.ell)
    pg = point_geometry(pf.f.jet)
    gamma = nullity_gamma(pg, tol)
    return BasePointData(
        x=pf.x, phi=t, rphi=r, nullities=nul, lam=lam, gamma=gamma,
        tangent_frame=pg.tangent_frame, alpha_ambient=pg.alpha_ambient(),
        mu=gamma.dim, nu_g=relative_nullity(pg, tol).dim,
        codazzi=pf.codazzi_residual(), bianchi1=first_bianchi_residual(r), bianchi2=pf.bianchi2_residual(),
    )


def default_radius(immersion, xs) -> float:
    worst = 1.0
    for x in xs:
        pg = point_geometry(J.taylor_lift(immersion, x, 2))
        worst = max(worst, float(np.linalg.norm(pg.alpha, axis=2).max()))
    return 0.1 / worst


def build_ruled_extension(
    immersion,
    xs,
    radius: float | None = None,
    l_spec=None,
    tol: float = DEFAULT_TOL,
) -> RuledExtensionSample:
    """Sample G(x, s) = g(x) + Lambda(x) s for base points ``xs`` and
    ``|s| <= radius`` (zero section plus the ends of each fiber axis)."""
    xs = [np.asarray(x, dtype=float) for x in xs]
    fields = [build_phi(immersion, x, l_spec, EXTENSION_ORDER, tol) for x in xs]
    bases = [_base_data(pf, tol) for pf in fields]
    ells = {pf.lambda_field.shape[1] for pf in fields}
    notes = []
    if len(ells) != 1:
        raise ExtensionError(f"Lambda has non-constant rank over the patch: {sorted(ells)}")
    ell = ells.pop()
    if ell != fields[0].ell:
        notes.append(f"rank Lambda = {ell} differs from rank L = {fields[0].ell}; extension stopped")
        return RuledExtensionSample(immersion.name, immersion.n, immersion.p, ell, 0.0, bases, [], 0, 0, notes)
    r = default_radius(immersion, xs) if radius is None else float(radius)
    for halvings in range(5):
        points, dropped = [], 0
        for pf in fields:
            for s in _s_offsets(ell, r):
                pt = _extension_point(pf, s, tol)
                if pt is None:
                    dropped += 1
                else:
                    points.append(pt)
        total = len(fields) * len(_s_offsets(ell, r))
        if dropped == 0 or halvings == 4:
            break
        r *= 0.5
    if dropped > MAX_DROP_FRACTION * total:
        raise ExtensionError(f"{dropped} of {total} extension samples are not immersed points")
    return RuledExtensionSample(immersion.name, immersion.n, immersion.p, ell, r, bases, points, dropped,
                                halvings, notes)


def _extension_point(pf: PhiField, s: np.ndarray, tol: float) -> ExtensionPoint | None:
    gj = _extension_jet(pf, s)
    try:
        pg = point_geometry(gj)
    except ValueError:
        return None
    sv = np.linalg.svd(pg.jacobian, compute_uv=False)
    if sv[-1] < 1e-6 * sv[0]:
        return None
    zero_err = float(np.abs(gj.value - pf.f.jet.value).max()) if not s.any() else 0.0
    dg = relative_nullity(pg, tol)
    gn = nullity_gamma(pg, tol)
    return ExtensionPoint(
        x=pf.x, s=s.copy(), position=gj.value.copy(), zero_section_error=zero_err,
        nu_G=dg.dim, mu_N=gn.dim, max_curvature=float(np.abs(pg.curvature).max(initial=0.0)),
        delta_G_ambient=Subspace(pg.tangent_frame @ dg.basis) if dg.dim else Subspace(np.zeros((gj.shape[0], 0))),
        gamma_N_ambient=Subspace(pg.tangent_frame @ gn.basis) if gn.dim else Subspace(np.zeros((gj.shape[0], 0))),
    )


def _ambient(basis: np.ndarray, sub: Subspace) -> Subspace:
    return Subspace(basis @ sub.basis, sub.tol, sub.label)


def verify_extension(sample: RuledExtensionSample, case: str, mu: int, nu_g: int) -> list[Audit]:
    """Audits of the extension against the nullities of phi and the case conclusions."""
    audits: list[Audit] = []
    n, p, ell = sample.n, sample.p, sample.ell
    if not sample.points:
        return [Audit("lambda_rank_equals_ell", False, ell, None, "; ".join(sample.warnings))]
    by_x = {}
    for b in sample.bases:
        by_x[tuple(b.x)] = b
    nu_vals = sorted({pt.nu_G for pt in sample.points})
    worst = {"zero": 0.0, "delta": 0.0, "ghat": 0.0, "gamma_in_gphi": 0.0, "ghat_gamma": 0.0}
    nu_ok = mu_ok = True
    for pt in sample.points:
        b = by_x[tuple(pt.x)]
        nul = b.nullities
        nu_ok &= pt.nu_G == nul.delta_right.dim
        mu_ok &= pt.mu_N == nul.gamma_right.dim
        if not pt.s.any():
            worst["zero"] = max(worst["zero"], pt.zero_section_error)
            dr = _ambient(b.phi.basis, nul.delta_right)
            worst["delta"] = max(worst["delta"], subspace_distance(pt.delta_G_ambient, dr))
            gam_amb = _ambient(b.tangent_frame, b.gamma)
            worst["ghat_gamma"] = max(worst["ghat_gamma"], pt.gamma_N_ambient.contains(gam_amb))
    for b in sample.bases:
        lb = b.phi.L.basis
        alpha_l = np.einsum("abk,kt->abt", b.alpha_ambient, lb)
        n_ = alpha_l.shape[0]
        d_ghat = kernel_subspace(alpha_l.reshape(n_, -1).T, b.gamma.tol)
        worst["ghat"] = max(worst["ghat"], subspace_distance(d_ghat, b.gamma))
        worst["gamma_in_gphi"] = max(worst["gamma_in_gphi"], b.nullities.gamma_left.contains(b.gamma))
    max_rn = max(pt.max_curvature for pt in sample.points)
    max_rphi = max(float(np.abs(b.rphi.values).max(initial=0.0)) for b in sample.bases)
    nu_G = nu_vals[0] if len(nu_vals) == 1 else -1
    mu_N = min(pt.mu_N for pt in sample.points)

    audits += [
        A.below("zero_section_matches_g", worst["zero"], 1e-12),
        Audit("nu_G_equals_dim_delta_phi_r", bool(nu_ok), nu_G, None),
        A.below("delta_G_matches_delta_phi_r", worst["delta"], GHAT_TOL),
        Audit("mu_N_equals_dim_gamma_phi_r", bool(mu_ok), mu_N, None),
        A.below("delta_ghat_equals_gamma", worst["ghat"], GHAT_TOL),
    ]
    if case == "CompositionBound":
        audits += [
            A.equal("nu_G_formula", nu_G, (n + ell) - (p - ell), "nu_G = (n + l) - (p - l)"),
            A.below("r_phi_flat", max_rphi, R_PHI_TOL),
            A.below("r_n_flat", max_rn, R_N_TOL),
        ]
    elif case == "RankOneL_k1":
        audits += [
            Audit("nu_G_window", (n + 1) - (p - 1) <= nu_G <= (n + 1) - (mu - nu_g), nu_G,
                  (n + 1) - (mu - nu_g), "(n+1)-(p-1) <= nu_G <= (n+1)-(mu-nu_g)"),
            A.at_least("gamma_hat_bound", mu_N, mu - nu_g + nu_G, "dim Gamma_hat >= mu - nu_g + nu_G"),
            A.below("gamma_in_gamma_phi_l", worst["gamma_in_gphi"], CONTAINMENT_TOL),
            A.below("ghat_gamma_in_gamma_hat", worst["ghat_gamma"], GHAT_TOL),
            A.below("r_n_flat", max_rn, R_N_TOL),
            Audit("ell_in_1_2", ell in (1, 2), ell, None),
        ]
    return audits


@dataclass
class ExtensionReport:
    name: str
    case: str
    n: int
    p: int
    mu: int
    nu_g: int
    ell: int
    k: int
    max_r_phi: float
    codazzi: float
    bianchi1: float
    bianchi2: float
    nu_G: int | None
    dim_gamma_hat: int | None
    max_r_n: float | None
    radius: float | None
    audits: list[Audit]
    route: str

    @property
    def passed(self) -> bool:
        return A.all_passed(self.audits)

    def to_dict(self) -> dict:
        return {
            "immersion": self.name,
            "case": self.case,
            "route": self.route,
            "n": self.n,
            "p": self.p,
            "mu": self.mu,
            "nu_g": self.nu_g,
            "ell": self.ell,
            "k": self.k,
            "max_r_phi": self.max_r_phi,
            "codazzi_residual": self.codazzi,
            "bianchi1_residual": self.bianchi1,
            "bianchi2_residual": self.bianchi2,
            "nu_G": self.nu_G,
            "dim_gamma_hat": self.dim_gamma_hat,
            "max_r_n": self.max_r_n,
            "radius": self.radius,
            "audits": [a.to_dict() for a in self.audits],
        }


def ruled_case_check(immersion, xs, delta_field=None, tol: float = DEFAULT_TOL) -> list[Audit]:
    """Totally geodesic, straight-line and rank audits for a ruled patch.

    ``delta_field`` maps an :class:`ImmersionField` to chart columns of the
    distribution; it defaults to the left nullity of beta.
    """
    if delta_field is None:
        delta_field = lambda f: f.delta_beta_field  # noqa: E731
    tg = line = 0.0
    dims = []
    for x in xs:
        f = lift_field(immersion, x, 3, tol)
        cols = delta_field(f)
        dims.append(cols.shape[1])
        tg = max(tg, totally_geodesic_residual(f, cols))
        line = max(line, straight_line_residual(f, cols))
    n, p = immersion.n, immersion.p
    return [
        A.below("ruled_totally_geodesic", tg, RULED_TOL),
        A.below("ruled_straight_lines", line, RULED_TOL),
        A.at_least("ruling_rank", min(dims), n - p + 1, "dim Delta_beta >= n - p + 1"),
    ]


def extend(immersion, xs, case: str, mu: int, nu_g: int, k: int, radius=None, tol: float = DEFAULT_TOL) -> ExtensionReport:
    """Run the route matching the case: extension audits or the ruled check."""
    if case == "RankOneL_k0_Ruled":
        audits = ruled_case_check(immersion, xs, tol=tol)
        pfs = [build_phi(immersion, x, None, PHI_ORDER, tol) for x in xs]
        data = [_base_data(pf, tol) for pf in pfs]
        return ExtensionReport(
            immersion.name, case, immersion.n, immersion.p, mu, nu_g, data[0].phi.ell, k,
            max(float(np.abs(d.rphi.values).max()) for d in data),
            max(d.codazzi for d in data), max(d.bianchi1 for d in data), max(d.bianchi2 for d in data),
            None, None, None, None, audits, "ruled",
        )
    sample = build_ruled_extension(immersion, xs, radius, None, tol)
    audits = verify_extension(sample, case, mu, nu_g)
    for b in sample.bases:
        audits += containment_audits(b.nullities, sample.n)
    nu = sorted({pt.nu_G for pt in sample.points})
    return ExtensionReport(
        immersion.name, case, sample.n, sample.p, mu, nu_g, sample.ell, k,
        max(float(np.abs(b.rphi.values).max()) for b in sample.bases),
        max(b.codazzi for b in sample.bases), max(b.bianchi1 for b in sample.bases),
        max(b.bianchi2 for b in sample.bases),
        nu[0] if len(nu) == 1 else None,
        min((pt.mu_N for pt in sample.points), default=None),
        max((pt.max_curvature for pt in sample.points), default=None),
        sample.radius, _dedupe(audits), "extension",
    )


def _dedupe(audits: list[Audit]) -> list[Audit]:
    """Merge repeated audit names, keeping the worst value."""
    merged: dict[str, Audit] = {}
    for a in audits:
        old = merged.get(a.name)
        if old is None:
            merged[a.name] = a
        elif not a.passed or (isinstance(a.value, float) and isinstance(old.value, float) and a.value > old.value and old.passed):
            merged[a.name] = a
    return list(merged.values())
