"""Invariant suite over a list of immersions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import analyzer as AN
from . import extension as EX
from .bilinear import FLAT_TOL, find_regular_element, kernel_intersection, moore_nullity
from .geometry import curvature_symmetry_residuals, frame_gram_error
from .jets import taylor_lift
from .subspace import DEFAULT_TOL, subspace_distance

ANNOTATION_KEYS = ("mu", "nu_g", "dim_s_beta", "case", "ell", "k")


@dataclass
class Family:
    name: str
    threshold: float | None = None
    worst: float = 0.0
    failures: list[str] = field(default_factory=list)

    def record(self, where: str, value: float | None = None, ok: bool | None = None) -> None:
        if value is not None:
            self.worst = max(self.worst, float(value))
        if ok is None:
            ok = value is not None and self.threshold is not None and value < self.threshold
        if not ok:
            self.failures.append(where)

    @property
    def passed(self) -> bool:
        return not self.failures


@dataclass
class SelftestResult:
    families: dict[str, Family]

    @property
    def passed(self) -> bool:
        return all(f.passed for f in self.families.values())

    def failing(self) -> list[Family]:
        return [f for f in self.families.values() if not f.passed]

    def lines(self) -> list[str]:
        out = []
        for f in self.families.values():
            flag = "PASS" if f.passed else "FAIL"
            thr = "" if f.threshold is None else f" (< {f.threshold:.0e})"
            out.append(f"{flag}  {f.name:36s} worst {f.worst:.3e}{thr}")
            for where in f.failures[:5]:
                out.append(f"      failed at {where}")
        return out


def _fd_error(immersion, x, h: float = 1e-4) -> float:
    """Scale-aware mismatch between jet derivatives and central differences of lower jets."""
    jet = taylor_lift(immersion, x, 3)
    worst = 0.0
    n = immersion.n
    for k in (1, 2, 3):
        exact = jet.derivative(k)
        approx = np.empty_like(exact)
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            if k == 1:
                fp, fm = immersion(x + e), immersion(x - e)
            else:
                fp = taylor_lift(immersion, x + e, k - 1).derivative(k - 1)
                fm = taylor_lift(immersion, x - e, k - 1).derivative(k - 1)
            approx[..., i] = (fp - fm) / (2 * h)
        scale = max(float(np.abs(exact).max()), 1.0)
        worst = max(worst, float(np.abs(approx - exact).max()) / scale)
    return worst


def run_selftest(
    defs,
    tol_rank: float = DEFAULT_TOL,
    tol_flat: float = FLAT_TOL,
    seed: int = 0,
    points_per_member: int = 4,
) -> SelftestResult:
    fam = {
        name: Family(name, thr)
        for name, thr in [
            ("jet_finite_difference", 1e-5),
            ("frame_orthonormality", 1e-10),
            ("curvature_symmetries", 1e-10),
            ("beta_flatness", tol_flat),
            ("delta_g_in_gamma", 1e-8),
            ("delta_g_equals_delta_beta_cap_gamma", 1e-8),
            ("moore_nullity_vs_brute_force", 1e-8),
            ("codazzi_phi", EX.CODAZZI_TOL),
            ("bianchi1_phi", EX.BIANCHI1_TOL),
            ("bianchi2_phi", EX.BIANCHI2_TOL),
            ("extension_audits", None),
            ("ruled_case_check", None),
            ("chern_kuiper", None),
            ("integer_identities", None),
            ("annotations", None),
        ]
    }
    for d in defs:
        pts = AN.sample_points(d, points_per_member, seed=seed)
        reports = []
        for j, x in enumerate(pts):
            where = f"{d.name}[{j}]"
            fam["jet_finite_difference"].record(where, _fd_error(d, x))
            pa = AN.analyze_point(d, x, tol_rank, tol_flat, seed)
            r = pa.report
            reports.append(r)
            fam["frame_orthonormality"].record(where, frame_gram_error(pa.pg))
            fam["curvature_symmetries"].record(where, max(curvature_symmetry_residuals(pa.pg.curvature).values()))
            fam["beta_flatness"].record(where, r.audit("beta_flatness").value)
            fam["delta_g_in_gamma"].record(where, r.audit("delta_g_in_gamma").value)
            fam["delta_g_equals_delta_beta_cap_gamma"].record(
                where, r.audit("delta_g_equals_delta_beta_cap_gamma").value
            )
            brute = kernel_intersection(pa.beta, tol_rank)
            dist = 0.0
            for s in range(3):
                reg = find_regular_element(pa.beta, seed=s, tol=tol_rank)
                dist = max(dist, subspace_distance(moore_nullity(pa.beta, reg, tol_rank, np.inf), brute))
            fam["moore_nullity_vs_brute_force"].record(where, dist)
            fam["chern_kuiper"].record(where, ok=r.audit("chern_kuiper").passed)
            ints = [a for a in r.audits if a.name in ("sum_identity", "s_beta_bounds", "moore_bound", "k_le_rank_l")]
            fam["integer_identities"].record(where, ok=all(a.passed for a in ints))
            for spec in _l_specs(d, r, seed):
                try:
                    pf = EX.build_phi(d, x, spec, EX.PHI_ORDER, tol_rank)
                except ValueError:
                    continue
                fam["codazzi_phi"].record(where, pf.codazzi_residual())
                fam["bianchi1_phi"].record(where, EX.first_bianchi_residual(EX.curvature_of_phi(pf.tensor())))
                fam["bianchi2_phi"].record(where, pf.bianchi2_residual())
        _check_annotations(d, reports, fam["annotations"])
        case = reports[0].case
        if d.expected and case in ("CompositionBound", "RankOneL_k1", "RankOneL_k0_Ruled") and all(
            r.case == case for r in reports
        ):
            r0 = reports[0]
            rep = EX.extend(d, pts[:2], case, r0.mu, r0.nu_g, r0.k, tol=tol_rank)
            key = "ruled_case_check" if case == "RankOneL_k0_Ruled" else "extension_audits"
            for a in rep.audits:
                fam[key].record(f"{d.name}:{a.name}", ok=a.passed)
    return SelftestResult(fam)


def _l_specs(d, report, seed: int):
    specs = []
    if report.ell >= 1:
        specs.append(None)
    specs.append("normal")
    if d.p >= 2:
        rng = np.random.default_rng(seed)
        specs.append(rng.standard_normal((d.ambient_dim, 1)))
    return specs


def _check_annotations(d, reports, family: Family) -> None:
    if not d.expected:
        return
    for j, r in enumerate(reports):
        got = {
            "mu": r.mu, "nu_g": r.nu_g, "dim_s_beta": r.dim_s_beta,
            "case": r.raw_case, "ell": r.ell, "k": r.k,
        }
        for key in ANNOTATION_KEYS:
            if key in d.expected and d.expected[key] != got[key]:
                family.record(f"annotation mismatch {d.name}[{j}].{key}: expected {d.expected[key]!r}, got {got[key]!r}",
                              ok=False)
