"""Acceptance criteria, one PASS/FAIL line each.

Run under pytest (lines appear in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.
"""

import dataclasses
import io
import json
import sys
import tempfile
import time
from contextlib import redirect_stdout
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_LINES, random_orthogonal  # noqa: E402
from nullitylab import analyzer as AN  # noqa: E402
from nullitylab import catalog as C  # noqa: E402
from nullitylab import extension as EX  # noqa: E402
from nullitylab.bilinear import (  # noqa: E402
    BilinearForm,
    NonFlatForm,
    diagonalization_errors,
    find_regular_element,
    kernel_intersection,
    moore_diagonalize,
    moore_nullity,
    span_of,
)
from nullitylab.cli import main as cli_main  # noqa: E402
from nullitylab.fields import (  # noqa: E402
    lift_field,
    smooth_kernel,
    straight_line_residual,
    totally_geodesic_residual,
)
from nullitylab.subspace import Subspace, kernel_subspace, subspace_distance  # noqa: E402

POINTS_PER_MEMBER = 45


def record(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _sampled_reports():
    out = []
    for d in C.list_catalog():
        for x in AN.sample_points(d, POINTS_PER_MEMBER, seed=2024):
            out.append(AN.analyze_point(d, x))
    return out


def test_criterion_1_chern_kuiper():
    t0 = time.perf_counter()
    reports = [pa.report for pa in _sampled_reports()]
    elapsed = time.perf_counter() - t0
    bad = sum(1 for r in reports if not r.nu_g <= r.mu <= r.nu_g + r.p)
    ok = len(reports) >= 500 and bad == 0 and elapsed < 30
    record(1, ok, f"{len(reports)} points, {bad} violations of nu_g <= mu <= nu_g + p, {elapsed:.1f} s (< 30 s)")


def test_criterion_2_dimension_identities():
    reports = [pa.report for pa in _sampled_reports()]
    sum_bad = sum(1 for r in reports if r.nu_g + r.dim_sum != r.dim_delta_beta + r.mu)
    bounded = [r for r in reports if r.nu_g <= r.n - r.p - 1]
    bound_bad = sum(1 for r in bounded if not r.mu - r.nu_g <= r.dim_s_beta <= r.p - 1)
    ok = sum_bad == 0 and bound_bad == 0 and len(bounded) > 0
    record(2, ok, f"sum identity failures {sum_bad}/{len(reports)}; "
                  f"S(beta) bound failures {bound_bad}/{len(bounded)} points with nu_g <= n-p-1")


def test_criterion_3_flat_extreme():
    reports = AN.analyze_grid(C.get("clifford_torus"), (9, 9))
    inner = [r for r in reports if r.interior]
    flat = sum(r.case == "FlatExtreme" for r in inner)
    max_r = max(r.audit("flat_extreme_curvature").value for r in inner)
    dims = {(r.mu, r.nu_g) for r in inner}
    ok = flat == len(inner) > 0 and max_r < 1e-8 and dims == {(2, 0)}
    record(3, ok, f"FlatExtreme at {flat}/{len(inner)} interior points, max |R| {max_r:.1e}, (mu, nu_g) {sorted(dims)}")


def test_criterion_4_moore_nullity():
    worst, bound_bad, forms = 0.0, 0, 0
    for pa in _sampled_reports():
        beta = pa.beta
        brute = kernel_intersection(beta)
        forms += 1
        for seed in range(10):
            dn = moore_nullity(beta, find_regular_element(beta, seed=seed))
            worst = max(worst, subspace_distance(dn, brute))
            bound_bad += dn.dim < beta.dim_left - span_of(beta).dim
    ok = worst < 1e-8 and bound_bad == 0
    record(4, ok, f"{forms} forms x 10 seeds, worst distance to kernel intersection {worst:.1e}, "
                  f"Moore bound failures {bound_bad}")


def test_criterion_5_moore_diagonalization():
    rng = np.random.default_rng(5)
    worst_off = worst_orth = 0.0
    for _ in range(50):
        q = int(rng.integers(1, 5))
        extra = int(rng.integers(0, 3))
        m = q + extra
        t = int(rng.integers(q, 5))
        v = np.zeros((m, m, t))
        for i in range(q):
            v[i, i, i] = rng.uniform(0.5, 2.0)
        o, ot = random_orthogonal(rng, m), random_orthogonal(rng, t)
        v = np.einsum("ia,jb,ijt,st->abs", o.T, o.T, v, ot)
        b = BilinearForm(v)
        null = Subspace(o.T[:, q:])
        off, orth = diagonalization_errors(b, moore_diagonalize(b, null, seed=int(rng.integers(1 << 16))))
        worst_off, worst_orth = max(worst_off, off), max(worst_orth, orth)
    catalog_forms = 0
    for d in C.list_catalog():
        for x in AN.sample_points(d, 3, seed=5):
            pa = AN.analyze_point(d, x)
            g = pa.gamma.basis
            vals = np.einsum("ia,jb,ijt->abt", g, g, pa.pg.alpha)
            b = BilinearForm(vals)
            null = kernel_subspace(vals.reshape(g.shape[1], g.shape[1] * d.p).T)
            off, orth = diagonalization_errors(b, moore_diagonalize(b, null))
            worst_off, worst_orth = max(worst_off, off), max(worst_orth, orth)
            catalog_forms += 1
    ok = worst_off < 1e-8 and worst_orth < 1e-8
    record(5, ok, f"50 synthetic + {catalog_forms} catalog forms, off-diagonal {worst_off:.1e}, "
                  f"rho orthonormality {worst_orth:.1e}")


def _l_specs(d, ell):
    specs = [("normal bundle", "normal")]
    if ell >= 1:
        specs.append(("S(beta) complement", None))
    if d.p >= 2:
        rng = np.random.default_rng(6)
        specs.append(("random normal line", rng.standard_normal((d.ambient_dim, 1))))
    if d.p >= 3:
        specs.append(("random normal plane", np.random.default_rng(7).standard_normal((d.ambient_dim, 2))))
    return specs


def test_criterion_6_phi_identities():
    t0 = time.perf_counter()
    worst = {"codazzi": 0.0, "bianchi1": 0.0, "bianchi2": 0.0}
    checked = 0
    for d in C.list_catalog():
        counts = (4,) * d.n if d.n <= 3 else (3,) * d.n
        pts, idx = AN.grid_points(d.sample_box, counts)
        for x, i in zip(pts, idx):
            if not AN.is_interior(i, counts):
                continue
            ell = AN.analyze_point(d, x).report.ell
            for _, spec in _l_specs(d, ell):
                pf = EX.build_phi(d, x, spec)
                worst["codazzi"] = max(worst["codazzi"], pf.codazzi_residual())
                worst["bianchi1"] = max(worst["bianchi1"], EX.first_bianchi_residual(EX.curvature_of_phi(pf.tensor())))
                worst["bianchi2"] = max(worst["bianchi2"], pf.bianchi2_residual())
                checked += 1
    elapsed = time.perf_counter() - t0
    ok = (worst["codazzi"] < 1e-8 and worst["bianchi1"] < 1e-10 and worst["bianchi2"] < 1e-7
          and elapsed < 120 and checked > 0)
    record(6, ok, f"{checked} (point, L) pairs, Codazzi {worst['codazzi']:.1e}, first Bianchi "
                  f"{worst['bianchi1']:.1e}, second Bianchi {worst['bianchi2']:.1e}, {elapsed:.1f} s (< 120 s)")


def test_criterion_7_composition_reconstruction():
    d = C.get("compo_s2xR_bend")
    xs = AN.sample_points(d, 3, seed=7)
    r0 = AN.analyze_point(d, xs[0]).report
    rep = EX.extend(d, xs, r0.case, r0.mu, r0.nu_g, r0.k)
    formula = (d.n + 1) - (d.p - rep.ell)
    ghat = next(a for a in rep.audits if a.name == "delta_ghat_equals_gamma")
    ok = (rep.max_r_phi < 1e-8 and rep.max_r_n < 1e-6 and rep.nu_G == formula
          and ghat.passed and ghat.value < 1e-6)
    record(7, ok, f"max |R_phi| {rep.max_r_phi:.1e}, max |R_N| {rep.max_r_n:.1e}, nu_G {rep.nu_G} "
                  f"vs (n+1)-(p-l) = {formula}, dist(Delta_ghat, Gamma) {ghat.value:.1e}")


def test_criterion_8_p3_reconstruction():
    d = C.get("compo_s3xR_double_bend")
    reports = [AN.analyze_point(d, x).report for x in AN.sample_points(d, 40, seed=8)]
    stratum = [r for r in reports if r.case == d.expected["case"]]
    ells = sorted({r.ell for r in stratum})
    xs = [r.x for r in stratum[:3]]
    r0 = stratum[0]
    rep = EX.extend(d, xs, r0.case, r0.mu, r0.nu_g, r0.k)
    bound = r0.mu - r0.nu_g + rep.nu_G
    ok = (len(stratum) == len(reports) and set(ells) <= {1, 2} and r0.k == 1
          and rep.dim_gamma_hat >= bound and rep.max_r_n < 1e-6 and rep.passed)
    record(8, ok, f"{len(stratum)}/{len(reports)} points on the stratum, l in {ells}, k = {r0.k}, "
                  f"dim Gamma_hat {rep.dim_gamma_hat} >= {bound}, max |R_N| {rep.max_r_n:.1e}")


def test_criterion_9_ruled_case():
    d = C.get("ruled_saddle_triple_bend")
    tg = line = 0.0
    dims = []
    for x in AN.sample_points(d, 10, seed=9):
        f = lift_field(d, x, 3)
        cols = f.delta_beta_field
        dims.append(cols.shape[1])
        tg = max(tg, totally_geodesic_residual(f, cols))
        line = max(line, straight_line_residual(f, cols))
    ok = tg < 1e-6 and line < 1e-6 and min(dims) >= d.n - d.p + 1
    record(9, ok, f"straight-line {line:.1e}, totally geodesic {tg:.1e}, "
                  f"dim Delta_beta {min(dims)} >= n-p+1 = {d.n - d.p + 1}")


def _cli(*argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli_main(list(argv))
    return code, buf.getvalue()


def test_criterion_10_negative_controls():
    checks = {}
    r = AN.analyze_point(C.get("compo_s2xR_bend"), np.array([0.4, 0.3, 0.2])).report
    bad = dataclasses.replace(r, mu=r.nu_g + r.p + 1)
    ck = AN.dimension_identity_audit(bad.n, bad.p, bad.mu, bad.nu_g, bad.dim_delta_beta, bad.dim_sum, bad.dim_s_beta)
    checks["corrupted report"] = not next(a for a in ck if a.name == "chern_kuiper").passed

    v = np.zeros((2, 2, 2))
    v[0, 0] = v[1, 1] = [1.0, 0.0]
    try:
        moore_nullity(BilinearForm(v))
        checks["non-flat form"] = False
    except NonFlatForm:
        checks["non-flat form"] = True

    d = C.get("ruled_saddle_triple_bend")
    xs = AN.sample_points(d, 2)
    swapped = EX.ruled_case_check(d, xs, delta_field=delta_beta_complement)
    checks["corrupted Delta_beta"] = not all(a.passed for a in swapped)

    code, _ = _cli("selftest")
    checks["selftest pristine exit 0"] = code == 0
    code, out = _cli("selftest", "--immersion", "clifford_torus", "--tol-flat", "1e-20")
    checks["selftest flatness 1e-20 exit 4"] = code == 4 and "FAIL  beta_flatness" in out
    doc = C.manifest([C.get("compo_s2xR_bend")])
    doc["immersions"][0]["expected"]["mu"] = 2
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "corrupt.json"
        path.write_text(json.dumps(doc))
        code, out = _cli("selftest", "--manifest", str(path))
    checks["selftest annotation exit 4"] = code == 4 and "annotation mismatch" in out
    failed = [k for k, ok in checks.items() if not ok]
    record(10, not failed, f"{len(checks) - len(failed)}/{len(checks)} controls behave"
                           + (f"; failing: {', '.join(failed)}" if failed else ""))


def delta_beta_complement(f):
    """Swap Delta_beta for its chart complement."""
    return smooth_kernel(f.delta_beta_field.T, f.tol)


if __name__ == "__main__":
    failures = 0
    tests = [(k, v) for k, v in globals().items() if k.startswith("test_criterion_")]
    for _, fn in sorted(tests, key=lambda kv: int(kv[0].split("_")[2])):
        try:
            fn()
        except AssertionError:
            failures += 1
    sys.exit(1 if failures else 0)
