import numpy as np
import pytest

from conftest import random_orthogonal
from nullitylab import catalog as C
from nullitylab.analyzer import sample_points
from nullitylab.fields import lift_field
from nullitylab.geometry import (
    NotAnImmersion,
    curvature_symmetry_residuals,
    frame_gram_error,
    gauss_curvature,
    nullity_gamma,
    point_geometry,
    point_geometry_at,
    relative_nullity,
    shape_operator,
)
from nullitylab import jets as J
from nullitylab.jets import Jet
from nullitylab.subspace import (
    Subspace,
    intersection,
    kernel_subspace,
    span_subspace,
    subspace_distance,
    subspace_sum,
)


def test_kernel_examples():
    assert kernel_subspace(np.eye(3)).dim == 0
    assert kernel_subspace(np.zeros((2, 4))).dim == 4
    k = kernel_subspace(np.diag([1.0, 1e-14]), 1e-8)
    assert k.dim == 1
    assert np.allclose(k.basis[:, 0], [0, 1])
    assert k.tol == 1e-8


def test_kernel_idempotent(rng):
    for _ in range(20):
        a = rng.standard_normal((3, 6)) @ np.diag([1, 1, 1, 0, 0, 1.0]) @ random_orthogonal(rng, 6)
        k = kernel_subspace(a)
        rest = k.complement()
        assert kernel_subspace(a @ rest.basis).dim == 0
        assert k.orthonormality_error() < 1e-12


def test_subspace_algebra(rng):
    e = np.eye(4)
    a = Subspace(e[:, :2])
    b = span_subspace(e[:, 1:3] @ random_orthogonal(rng, 2))
    assert intersection(a, b).dim == 1
    assert subspace_sum(a, b).dim == 3
    assert subspace_distance(intersection(a, b), Subspace(e[:, 1:2])) < 1e-12
    assert subspace_distance(a, b) == pytest.approx(1.0)
    assert a.contains(Subspace(e[:, :1])) == 0.0


def test_affine_is_totally_geodesic():
    pg = point_geometry_at(C.affine(3, 2), np.array([0.1, 0.2, 0.3]))
    assert np.abs(pg.alpha).max() == 0
    assert np.abs(pg.curvature).max() == 0
    assert relative_nullity(pg).dim == 3
    assert np.abs(shape_operator(pg, [0.6, 0.8])).max() == 0


def test_cylinder_single_alpha_entry():
    pg = point_geometry_at(C.cylinder("circle", 2), np.array([0.7, -0.3]))
    assert abs(pg.alpha[0, 0, 0]) == pytest.approx(1.0)
    mask = np.ones_like(pg.alpha, bool)
    mask[0, 0] = False
    assert np.abs(pg.alpha[mask]).max() < 1e-14
    assert np.abs(pg.curvature).max() < 1e-14
    assert relative_nullity(pg).dim == 1
    assert np.linalg.matrix_rank(shape_operator(pg, [1.0])) == 1


def test_clifford_torus_flat_without_relative_nullity():
    pg = point_geometry_at(C.clifford_torus(), np.array([0.4, 1.1]))
    assert np.abs(pg.curvature).max() < 1e-14
    assert nullity_gamma(pg).dim == 2
    assert relative_nullity(pg).dim == 0
    # product of unit circles: alpha(e1,e1) and alpha(e2,e2) are orthogonal unit normals
    assert np.linalg.norm(pg.alpha[0, 0]) == pytest.approx(1.0)
    assert np.linalg.norm(pg.alpha[1, 1]) == pytest.approx(1.0)
    assert abs(pg.alpha[0, 0] @ pg.alpha[1, 1]) < 1e-14
    assert np.abs(pg.alpha[0, 1]).max() < 1e-14


def test_sphere_nullity_and_shape_operator():
    pg = point_geometry_at(C.sphere(2), np.array([0.3, -0.5]))
    assert nullity_gamma(pg).dim == 0
    outward = np.sign(pg.normal_frame[:, 0] @ pg.position)
    assert np.allclose(shape_operator(pg, [outward]), -np.eye(2), atol=1e-12)
    with pytest.raises(ValueError):
        shape_operator(pg, [2.0])


def test_s2xr_gamma_is_line_factor():
    pg = point_geometry_at(C.get("s2xR"), np.array([0.3, 0.2, 0.5]))
    g = nullity_gamma(pg)
    assert g.dim == 1
    line = np.linalg.solve(pg.from_frame, np.array([0, 0, 1.0]))
    line /= np.linalg.norm(line)
    assert g.residual(line) < 1e-10


def test_composition_five_has_no_relative_nullity():
    pg = point_geometry_at(C.get("compo_s2xR_bend"), np.array([1.0, 0.2, 0.3]))
    assert relative_nullity(pg).dim == 0


def test_rank_deficient_jacobian_rejected():
    x = Jet.variables(np.zeros(2), 2)
    f = J.stack([x[0], x[0], x[0] * x[0]])
    with pytest.raises(NotAnImmersion):
        point_geometry(f)


@pytest.mark.parametrize("name", C.names())
def test_pointwise_invariants(name):
    d = C.get(name)
    rng = np.random.default_rng(5)
    for x in sample_points(d, 20, seed=2):
        pg = point_geometry_at(d, x)
        assert frame_gram_error(pg) < 1e-10
        assert np.abs(pg.alpha - pg.alpha.transpose(1, 0, 2)).max() < 1e-14
        assert max(curvature_symmetry_residuals(pg.curvature).values()) < 1e-10
        g, dg = nullity_gamma(pg), relative_nullity(pg)
        assert g.contains(dg) < 1e-8
        # frame change: alpha'(a,b) = alpha(Oa, Ob); Gamma' = O^T Gamma
        o = random_orthogonal(rng, d.n)
        alpha2 = np.einsum("ia,jb,ijt->abt", o, o, pg.alpha)
        curv2 = gauss_curvature(alpha2)
        g2 = kernel_subspace(curv2.reshape(d.n, -1).T)
        assert g2.dim == g.dim
        assert subspace_distance(g2, g.map(o.T)) < 1e-8


@pytest.mark.parametrize("name", ["sphere_2", "s2xR", "compo_s2xR_bend", "compo_s3xR_double_bend"])
def test_intrinsic_curvature_matches_gauss(name):
    d = C.get(name)
    for x in sample_points(d, 3, seed=4):
        f = lift_field(d, x, 3)
        chart = f.curvature.value
        pg = point_geometry_at(d, x)
        r = f.chart_to_frame()
        from_gauss = np.einsum("abcd,ai,bj,ck,dl->ijkl", pg.curvature, r, r, r, r)
        scale = max(np.abs(chart).max(), 1.0)
        assert np.abs(chart - from_gauss).max() / scale < 1e-9
