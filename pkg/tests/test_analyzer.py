import dataclasses

import numpy as np
import pytest

from nullitylab import analyzer as AN
from nullitylab import catalog as C
from nullitylab.audit import Audit
from nullitylab.bilinear import FLAT_TOL
from nullitylab.fields import lift_field, straight_line_residual


def test_case_rules():
    assert AN.case_of(3, 2, 3, 3, 0, 0) == "TrivialEqualNullities"
    assert AN.case_of(2, 2, 2, 0, 2, 0) == "FlatExtreme"
    assert AN.case_of(3, 2, 1, 0, 1, 1) == "CompositionBound"
    assert AN.case_of(4, 3, 1, 0, 2, 1) == "RankOneL_k1"
    assert AN.case_of(5, 4, 1, 0, 3, 0) == "RankOneL_k0_Ruled"
    assert AN.case_of(3, 3, 1, 0, 2, 1) == "Unclassified"


def test_composition_five_details():
    d = C.get("compo_s2xR_bend")
    pa = AN.analyze_point(d, np.array([0.4, 0.3, 0.2]))
    r = pa.report
    assert (pa.beta.dim_left, pa.beta.dim_right, pa.beta.dim_target) == (3, 1, 2)
    assert np.linalg.matrix_rank(pa.beta.values.reshape(3, 2)) == 1
    assert pa.delta_beta.dim == 2 and r.dim_sum == 3
    assert r.case == "CompositionBound" and r.ell == 1 and r.k == 1
    assert r.codim2_gap == 1
    assert r.passed


def test_report_audits_and_dict():
    r = AN.analyze_point(C.get("clifford_torus"), np.array([0.1, 0.2])).report
    names = [a.name for a in r.audits]
    for want in ["beta_flatness", "sum_identity", "chern_kuiper", "delta_g_in_gamma",
                 "delta_g_equals_delta_beta_cap_gamma", "moore_bound", "flat_extreme_curvature"]:
        assert want in names
    d = r.to_dict()
    assert d["case"] == "FlatExtreme" and d["mu"] == 2 and d["nu_g"] == 0
    with pytest.raises(KeyError):
        r.audit("nope")


def test_corrupted_report_fails_chern_kuiper():
    r = AN.analyze_point(C.get("compo_s2xR_bend"), np.array([0.4, 0.3, 0.2])).report
    bad = dataclasses.replace(r, mu=r.nu_g + r.p + 1)
    audits = AN.dimension_identity_audit(bad.n, bad.p, bad.mu, bad.nu_g, bad.dim_delta_beta, bad.dim_sum,
                                         bad.dim_s_beta)
    ck = next(a for a in audits if a.name == "chern_kuiper")
    assert not ck.passed
    assert AN.summarize([bad])["chern_kuiper_violations"] == 1


def test_tight_flatness_threshold_fails_audit():
    r = AN.analyze_point(C.get("clifford_torus"), np.array([0.1, 0.2]), tol_flat=1e-20).report
    # exact zero would pass; the torus carries round-off
    assert r.audit("beta_flatness").value >= 0
    reports = [AN.analyze_point(C.get("clifford_torus"), x, tol_flat=1e-20).report
               for x in AN.sample_points(C.get("clifford_torus"), 10)]
    assert any(not rr.audit("beta_flatness").passed for rr in reports)


@pytest.mark.parametrize("name", C.names())
def test_identities_over_grid(name):
    d = C.get(name)
    counts = (4,) * d.n if d.n <= 3 else (3,) * d.n
    reports = AN.analyze_grid(d, counts)
    for r in reports:
        assert r.nu_g <= r.mu <= r.nu_g + r.p
        assert r.audit("sum_identity").passed
        if r.nu_bound_holds:
            assert r.audit("s_beta_bounds").passed
        assert r.passed, [a for a in r.audits if not a.passed]
    s = AN.summarize(reports)
    assert s["chern_kuiper_violations"] == 0
    assert s["points"] == int(np.prod(counts))


def test_grid_helpers():
    pts, idx = AN.grid_points(((0, 1), (0, 2)), (3, 2))
    assert pts.shape == (6, 2) and idx[0] == (0, 0) and idx[-1] == (2, 1)
    assert AN.is_interior((1, 0), (3, 2))
    assert not AN.is_interior((0, 1), (3, 2))
    with pytest.raises(ValueError):
        AN.grid_axes(((0, 1),), (2, 2))


def test_stratum_boundary_marking():
    def rep(mu):
        return AN.ClassificationReport(np.zeros(1), 1, 1, mu, 0, 0, 0, 0, 1, 0, "X", [Audit("a", True)], "X")

    reports = [rep(0), rep(0), rep(1), rep(1)]
    AN.mark_strata(reports, [(0,), (1,), (2,), (3,)], (4,))
    assert [r.case for r in reports] == ["X", "StratumBoundary", "StratumBoundary", "X"]


def test_clifford_grid_all_flat_extreme():
    reports = AN.analyze_grid(C.get("clifford_torus"), (9, 9))
    inner = [r for r in reports if r.interior]
    assert len(inner) == 49
    assert all(r.case == "FlatExtreme" for r in inner)


@pytest.mark.parametrize("name", ["cylinder_circle", "compo_s2xR_bend", "compo_s2xR_tilted_bend"])
def test_delta_beta_integrable(name):
    d = C.get(name)
    for x in AN.sample_points(d, 4, seed=1):
        assert AN.delta_beta_integrability(d, x) < 1e-6


@pytest.mark.parametrize("name", C.names())
def test_gamma_totally_geodesic(name):
    d = C.get(name)
    for x in AN.sample_points(d, 3, seed=6):
        assert AN.gamma_geodesic_residual(d, x) < 1e-6


def test_ruled_member_straight_lines():
    d = C.get("ruled_saddle_triple_bend")
    for x in AN.sample_points(d, 3):
        f = lift_field(d, x, 3)
        assert straight_line_residual(f, f.delta_beta_field) < 1e-6
        assert f.delta_beta_field.shape[1] >= d.n - d.p + 1


def test_default_tolerances():
    assert AN.SUBSPACE_TOL == 1e-8
    assert FLAT_TOL == 1e-8
