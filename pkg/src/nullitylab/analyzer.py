"""Pointwise nullity audit and case classification."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from . import audit as A
from .audit import Audit
from .bilinear import (
    FLAT_TOL,
    BilinearForm,
    find_regular_element,
    flatness_residual,
    moore_nullity,
    span_of,
)
from .geometry import PointGeometry, nullity_gamma, point_geometry, relative_nullity
from .jets import taylor_lift
from .parallel import pmap
from .subspace import (
    DEFAULT_TOL,
    Subspace,
    intersection,
    span_subspace,
    subspace_distance,
    subspace_sum,
)

CASES = (
    "TrivialEqualNullities",
    "FlatExtreme",
    "CompositionBound",
    "RankOneL_k1",
    "RankOneL_k0_Ruled",
    "Unclassified",
    "StratumBoundary",
)

SUBSPACE_TOL = 1e-8
FLAT_CURVATURE_TOL = 1e-8


class ContainmentError(ValueError):
    pass


@dataclass
class ClassificationReport:
    x: np.ndarray
    n: int
    p: int
    mu: int
    nu_g: int
    dim_delta_beta: int
    dim_s_beta: int
    dim_sum: int
    ell: int
    k: int
    case: str
    audits: list[Audit] = field(default_factory=list)
    raw_case: str = ""
    nu_bound_holds: bool = False
    codim2_gap: int | None = None
    interior: bool = True

    @property
    def signature(self) -> tuple[int, ...]:
        return (self.mu, self.nu_g, self.dim_delta_beta, self.dim_s_beta, self.k)

    @property
    def passed(self) -> bool:
        return A.all_passed(self.audits)

    def audit(self, name: str) -> Audit:
        for a in self.audits:
            if a.name == name:
                return a
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "x": [float(v) for v in self.x],
            "n": self.n,
            "p": self.p,
            "mu": self.mu,
            "nu_g": self.nu_g,
            "dim_delta_beta": self.dim_delta_beta,
            "dim_s_beta": self.dim_s_beta,
            "dim_delta_beta_plus_gamma": self.dim_sum,
            "ell": self.ell,
            "k": self.k,
            "case": self.case,
            "raw_case": self.raw_case,
            "nu_bound_holds": self.nu_bound_holds,
            "codim2_gap": self.codim2_gap,
            "interior": self.interior,
            "audits": [a.to_dict() for a in self.audits],
        }


@dataclass
class PointAnalysis:
    """Subspaces behind one report, all in orthonormal tangent-frame coordinates."""

    pg: PointGeometry
    gamma: Subspace
    delta_g: Subspace
    beta: BilinearForm
    delta_beta: Subspace
    s_beta: Subspace
    report: ClassificationReport


def build_beta(pg: PointGeometry, gamma: Subspace, tol: float = SUBSPACE_TOL) -> BilinearForm:
    """alpha restricted to TM x Gamma, right slot in the basis of ``gamma``."""
    if gamma.ambient_dim != pg.n:
        raise ContainmentError(f"gamma lives in R^{gamma.ambient_dim}, tangent space has dimension {pg.n}")
    if gamma.orthonormality_error() > tol:
        raise ContainmentError("gamma basis is not orthonormal")
    return BilinearForm(np.einsum("abt,bj->ajt", pg.alpha, gamma.basis))


def delta_beta(
    pg: PointGeometry,
    gamma: Subspace,
    tol: float = DEFAULT_TOL,
    tol_flat: float = FLAT_TOL,
    seed: int = 0,
) -> Subspace:
    """Left nullity of beta through a regular element (raises on non-flat beta)."""
    b = build_beta(pg, gamma)
    reg = find_regular_element(b, seed=seed, tol=tol)
    return moore_nullity(b, reg, tol, tol_flat)


def k_invariant(pg: PointGeometry, delta_beta: Subspace, tol: float = DEFAULT_TOL) -> int:
    """Dimension of the span of alpha(d_i, d_j) over a basis of delta_beta."""
    return _alpha_span(pg, delta_beta, tol).dim


def _alpha_span(pg: PointGeometry, sub: Subspace, tol: float) -> Subspace:
    d = sub.basis
    vals = np.einsum("abt,ai,bj->tij", pg.alpha, d, d).reshape(pg.p, -1)
    return span_subspace(vals, tol)


def dimension_identity_audit(
    n: int, p: int, mu: int, nu_g: int, dim_delta_beta: int, dim_sum: int, dim_s_beta: int
) -> list[Audit]:
    """Integer identities and inequalities every point must satisfy."""
    audits = [
        A.equal("sum_identity", nu_g + dim_sum, dim_delta_beta + mu,
                "nu_g + dim(Delta_beta + Gamma) = dim Delta_beta + mu"),
        Audit("chern_kuiper", nu_g <= mu <= nu_g + p, mu - nu_g, p, "nu_g <= mu <= nu_g + p"),
    ]
    if nu_g <= n - p - 1:
        audits.append(Audit("s_beta_bounds", mu - nu_g <= dim_s_beta <= p - 1, dim_s_beta, p - 1,
                            "mu - nu_g <= dim S(beta) <= p - 1"))
    return audits


def case_of(n: int, p: int, mu: int, nu_g: int, dim_s_beta: int, k: int) -> str:
    if mu == nu_g:
        return "TrivialEqualNullities"
    if mu == nu_g + p:
        return "FlatExtreme"
    if dim_s_beta == mu - nu_g and dim_s_beta < p:
        return "CompositionBound"
    if dim_s_beta == p - 1 and nu_g <= n - p - 1:
        if k == 1:
            return "RankOneL_k1"
        if k == 0:
            return "RankOneL_k0_Ruled"
    return "Unclassified"


def classify(
    pg: PointGeometry,
    gamma: Subspace | None = None,
    tol: float = DEFAULT_TOL,
    tol_flat: float = FLAT_TOL,
    seed: int = 0,
) -> PointAnalysis:
    """Compute every nullity at a point, run the audits and assign a case."""
    n, p = pg.n, pg.p
    if gamma is None:
        gamma = nullity_gamma(pg, tol)
    delta_g = relative_nullity(pg, tol)
    beta = build_beta(pg, gamma)
    flat = flatness_residual(beta)
    audits = [A.below("beta_flatness", flat, tol_flat)]
    reg = find_regular_element(beta, seed=seed, tol=tol)
    dbeta = moore_nullity(beta, reg, tol, flat_tol=np.inf)
    s_beta = span_of(beta, tol)
    dim_sum = subspace_sum(dbeta, gamma, tol).dim
    k = k_invariant(pg, dbeta, tol)
    mu, nu_g = gamma.dim, delta_g.dim
    audits += dimension_identity_audit(n, p, mu, nu_g, dbeta.dim, dim_sum, s_beta.dim)
    audits.append(A.below("delta_g_in_gamma", gamma.contains(delta_g), SUBSPACE_TOL))
    audits.append(A.below(
        "delta_g_equals_delta_beta_cap_gamma",
        subspace_distance(delta_g, intersection(dbeta, gamma, tol)),
        SUBSPACE_TOL,
    ))
    audits.append(A.at_least("moore_bound", dbeta.dim, n - s_beta.dim, "dim Delta_beta >= n - dim S(beta)"))
    scale = max(float(np.abs(pg.alpha).max()) ** 2, 1.0)
    orth = float(np.abs(s_beta.basis.T @ _alpha_values(pg, dbeta)).max(initial=0.0)) / scale
    audits.append(A.below("alpha_delta_beta_perp_s_beta", orth, SUBSPACE_TOL))
    audits.append(Audit("k_le_rank_l", k <= p - s_beta.dim, k, p - s_beta.dim))

    case = case_of(n, p, mu, nu_g, s_beta.dim, k)
    if case == "FlatExtreme":
        curv = float(np.abs(pg.curvature).max()) / scale
        audits.append(A.below("flat_extreme_curvature", curv, FLAT_CURVATURE_TOL))
        audits.append(A.equal("flat_extreme_mu_is_n", mu, n))
    # in codimension two the gap mu - nu_g is 1 or 2 away from the trivial case
    codim2_gap = mu - nu_g if p == 2 and mu - nu_g in (1, 2) else None
    report = ClassificationReport(
        x=pg.x.copy(), n=n, p=p, mu=mu, nu_g=nu_g, dim_delta_beta=dbeta.dim, dim_s_beta=s_beta.dim,
        dim_sum=dim_sum, ell=p - s_beta.dim, k=k, case=case, audits=audits, raw_case=case,
        nu_bound_holds=nu_g <= n - p - 1, codim2_gap=codim2_gap,
    )
    return PointAnalysis(pg, gamma, delta_g, beta, dbeta, s_beta, report)


def _alpha_values(pg: PointGeometry, sub: Subspace) -> np.ndarray:
    d = sub.basis
    return np.einsum("abt,ai,bj->tij", pg.alpha, d, d).reshape(pg.p, -1)


def analyze_point(
    immersion, x, tol: float = DEFAULT_TOL, tol_flat: float = FLAT_TOL, seed: int = 0
) -> PointAnalysis:
    x = np.asarray(x, dtype=float)
    pg = point_geometry(taylor_lift(immersion, x, 2))
    pg = replace(pg, x=x.copy())
    return classify(pg, tol=tol, tol_flat=tol_flat, seed=seed)


# ---- grids --------------------------------------------------------------

def grid_axes(box, counts) -> list[np.ndarray]:
    if len(box) != len(counts):
        raise ValueError(f"grid has {len(counts)} axes but the box has {len(box)}")
    return [np.linspace(lo, hi, int(c)) if c > 1 else np.array([(lo + hi) / 2]) for (lo, hi), c in zip(box, counts)]


def grid_points(box, counts) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    """Points of a product grid in C order together with their index tuples."""
    axes = grid_axes(box, counts)
    index = list(itertools.product(*[range(len(a)) for a in axes]))
    pts = np.array([[axes[d][i] for d, i in enumerate(idx)] for idx in index])
    return pts, index


def is_interior(idx, counts) -> bool:
    """Off the grid boundary along every axis with at least three samples."""
    return all(0 < i < c - 1 for i, c in zip(idx, counts) if c > 2)


def mark_strata(reports: list[ClassificationReport], index, counts) -> None:
    """Flag points whose dimension signature differs from an axis neighbor."""
    where = {idx: r for idx, r in zip(index, reports)}
    for idx, r in zip(index, reports):
        for axis in range(len(idx)):
            for step in (-1, 1):
                nb = list(idx)
                nb[axis] += step
                other = where.get(tuple(nb))
                if other is not None and other.signature != r.signature:
                    r.case = "StratumBoundary"


def analyze_grid(
    immersion,
    counts,
    box=None,
    tol: float = DEFAULT_TOL,
    tol_flat: float = FLAT_TOL,
    seed: int = 0,
) -> list[ClassificationReport]:
    box = immersion.sample_box if box is None else box
    pts, index = grid_points(box, counts)
    reports = pmap(lambda x: analyze_point(immersion, x, tol, tol_flat, seed).report, pts)
    for idx, r in zip(index, reports):
        r.interior = is_interior(idx, counts)
    mark_strata(reports, index, counts)
    return reports


def sample_points(immersion, count: int, seed: int = 0, box=None) -> np.ndarray:
    box = immersion.sample_box if box is None else box
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    return lo + (hi - lo) * rng.random((count, len(box)))


def delta_beta_integrability(immersion, x, tol: float = DEFAULT_TOL) -> float:
    """Bracket-closure residual of the delta_beta distribution at x."""
    from .fields import bracket_closure_residual, lift_field

    f = lift_field(immersion, x, 3, tol)
    return bracket_closure_residual(f, f.delta_beta_field)


def gamma_geodesic_residual(immersion, x, tol: float = DEFAULT_TOL) -> float:
    """First-order check that the curvature nullity is totally geodesic at x."""
    from .fields import lift_field, totally_geodesic_residual

    f = lift_field(immersion, x, 3, tol)
    return totally_geodesic_residual(f, f.gamma_field)


def summarize(reports: list[ClassificationReport]) -> dict:
    hist = {c: 0 for c in CASES}
    for r in reports:
        hist[r.case] += 1
    worst: dict[str, float] = {}
    failures: dict[str, int] = {}
    for r in reports:
        for a in r.audits:
            if isinstance(a.value, float):
                worst[a.name] = max(worst.get(a.name, 0.0), a.value)
            if not a.passed:
                failures[a.name] = failures.get(a.name, 0) + 1
    ck = sum(1 for r in reports if not (r.nu_g <= r.mu <= r.nu_g + r.p))
    return {
        "points": len(reports),
        "interior_points": sum(1 for r in reports if r.interior),
        "case_histogram": hist,
        "interior_case_histogram": {c: sum(1 for r in reports if r.interior and r.case == c) for c in CASES},
        "worst_residuals": dict(sorted(worst.items())),
        "audit_failures": dict(sorted(failures.items())),
        "chern_kuiper_violations": ck,
        "stratum_boundary_count": hist["StratumBoundary"],
    }
