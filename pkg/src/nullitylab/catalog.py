"""Closed catalog of immersion constructors and the named test subjects.

Every immersion is a tree of constructors.  Evaluation works on plain
arrays and on :class:`~nullitylab.jets.Jet` seeds alike, so derivatives come
out exactly.  Trees serialize to JSON and rebuild from it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import jets as J

MANIFEST_SCHEMA_VERSION = 1

Box = tuple[tuple[float, float], ...]


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class ImmersionDef:
    name: str
    n: int
    p: int
    domain: Box
    tag: str
    params: dict
    func: Callable = field(repr=False, compare=False)
    children: tuple["ImmersionDef", ...] = ()
    box: Box | None = None
    expected: dict | None = None
    description: str = ""

    @property
    def ambient_dim(self) -> int:
        return self.n + self.p

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float).reshape(-1)
        return all(lo <= xi <= hi for xi, (lo, hi) in zip(x, self.domain))

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    @property
    def sample_box(self) -> Box:
        """Box used for sampling: the annotated box, else the domain clipped to finite values."""
        if self.box is not None:
            return self.box
        return tuple((max(lo, -1.0), min(hi, 1.0)) for lo, hi in self.domain)

    def constructor_tree(self) -> dict:
        return {
            "tag": self.tag,
            "params": _jsonable(self.params),
            "children": [c.constructor_tree() for c in self.children],
        }

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "p": self.p,
            "domain": _box_json(self.domain),
            "box": None if self.box is None else _box_json(self.box),
            "expected": None if self.expected is None else dict(self.expected),
            "description": self.description,
            "constructor": self.constructor_tree(),
        }


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _box_json(box: Box) -> list:
    return [[None if math.isinf(lo) else lo, None if math.isinf(hi) else hi] for lo, hi in box]


def _box_from_json(box) -> Box:
    return tuple(
        (-math.inf if lo is None else float(lo), math.inf if hi is None else float(hi)) for lo, hi in box
    )


def _unbounded(n: int) -> Box:
    return tuple((-math.inf, math.inf) for _ in range(n))


def _stack(items):
    return J.stack(items) if any(isinstance(i, J.Jet) for i in items) else np.array(items, dtype=float)


def _zeros_like_scalar(x):
    return 0.0 * x if isinstance(x, J.Jet) else 0.0


# ---- constructors -------------------------------------------------------

def affine(n: int, p: int) -> ImmersionDef:
    """Totally geodesic inclusion x -> (x, 0)."""
    if n < 1 or p < 0:
        raise CatalogError("affine needs n >= 1 and p >= 0")

    def f(x):
        zero = _zeros_like_scalar(x[0])
        return _stack([x[i] for i in range(n)] + [zero] * p)

    return ImmersionDef(f"affine_{n}_{p}", n, p, _unbounded(n), "affine", {"n": n, "p": p}, f)


SPHERE_LATITUDE_LIMIT = 1.4


def sphere(n: int, radius: float = 1.0) -> ImmersionDef:
    """Round sphere in R^{n+1} in hyperspherical coordinates.

    Coordinate 0 is the longitude, the others are latitudes kept away from
    the poles.
    """
    if n < 1:
        raise CatalogError("sphere dimension must be >= 1")
    if radius <= 0:
        raise CatalogError("sphere radius must be positive")

    def f(x):
        pts = [J.cos(x[0]), J.sin(x[0])]
        for i in range(1, n):
            c = J.cos(x[i])
            pts = [c * q for q in pts] + [J.sin(x[i])]
        return _stack([radius * q for q in pts])

    lim = SPHERE_LATITUDE_LIMIT
    domain = ((-math.inf, math.inf),) + tuple((-lim, lim) for _ in range(n - 1))
    return ImmersionDef(f"sphere_{n}", n, 1, domain, "sphere", {"n": n, "radius": radius}, f)


_CURVES = {
    "circle": lambda t: [J.cos(t), J.sin(t)],
    "parabola": lambda t: [t, t * t],
}


def cylinder(curve: str, n: int) -> ImmersionDef:
    """Plane curve times R^{n-1} in R^{n+1}."""
    if curve not in _CURVES:
        raise CatalogError(f"unknown curve {curve!r}; choose from {sorted(_CURVES)}")
    if n < 1:
        raise CatalogError("cylinder dimension must be >= 1")
    c = _CURVES[curve]

    def f(x):
        return _stack(c(x[0]) + [x[i] for i in range(1, n)])

    return ImmersionDef(f"cylinder_{curve}_{n}", n, 1, _unbounded(n), "cylinder", {"curve": curve, "n": n}, f)


def clifford_torus() -> ImmersionDef:
    """Product of two unit circles in R^4."""

    def f(x):
        return _stack([J.cos(x[0]), J.sin(x[0]), J.cos(x[1]), J.sin(x[1])])

    return ImmersionDef("clifford_torus", 2, 2, _unbounded(2), "clifford_torus", {}, f)


def product(a: ImmersionDef, b: ImmersionDef) -> ImmersionDef:
    """Product immersion into the orthogonal sum of the ambient spaces."""
    na = a.n

    def f(x):
        ya = a.func(_stack([x[i] for i in range(na)]))
        yb = b.func(_stack([x[na + i] for i in range(b.n)]))
        return _stack(list(ya) + list(yb))

    return ImmersionDef(
        f"{a.name}x{b.name}", a.n + b.n, a.p + b.p, a.domain + b.domain, "product", {}, f, (a, b)
    )


def flat_bend(dim: int, radius: float = 1.0, coordinate: int | None = None, direction=None) -> ImmersionDef:
    """Isometric map R^dim -> R^{dim+1} rolling one direction onto a circle.

    The unit ``direction`` (or the 0-based ``coordinate`` axis) is wrapped
    onto a circle of the given radius; the orthogonal complement is left
    alone.  The image is a flat cylinder.
    """
    if radius <= 0:
        raise CatalogError("flat_bend radius must be positive")
    if (coordinate is None) == (direction is None):
        raise CatalogError("give exactly one of coordinate or direction")
    if direction is None:
        if not 0 <= coordinate < dim:
            raise CatalogError(f"coordinate {coordinate} out of range for dimension {dim}")
        a = np.eye(dim)[coordinate]
        params = {"dim": dim, "radius": radius, "coordinate": coordinate}
    else:
        a = np.asarray(direction, dtype=float).reshape(-1)
        if a.size != dim:
            raise CatalogError(f"direction must have {dim} components")
        if abs(np.linalg.norm(a) - 1.0) > 1e-12:
            raise CatalogError("direction must be a unit vector")
        params = {"dim": dim, "radius": radius, "direction": a.tolist()}
    r = float(radius)

    def f(y):
        s = sum((a[i] * y[i] for i in range(dim) if a[i] != 0.0), _zeros_like_scalar(y[0]))
        shift = r * J.sin(s / r) - s
        out = [y[i] + shift * a[i] if a[i] != 0.0 else y[i] for i in range(dim)]
        return _stack(out + [r * (1.0 - J.cos(s / r))])

    return ImmersionDef(f"flat_bend_{dim}", dim, 1, _unbounded(dim), "flat_bend", params, f)


def compose(outer: ImmersionDef, inner: ImmersionDef) -> ImmersionDef:
    """outer o inner; the outer chart is the inner ambient space."""
    if outer.n != inner.ambient_dim:
        raise CatalogError(
            f"cannot compose: outer expects R^{outer.n}, inner lands in R^{inner.ambient_dim}"
        )

    def f(x):
        return outer.func(inner.func(x))

    return ImmersionDef(
        f"{outer.name}o{inner.name}", inner.n, inner.p + outer.p, inner.domain, "compose", {}, f, (outer, inner)
    )


def graph(n: int, quadratics) -> ImmersionDef:
    """Graph of quadratic heights x -> (x, x^T Q_k x / 2)."""
    qs = [np.asarray(q, dtype=float) for q in quadratics]
    for q in qs:
        if q.shape != (n, n) or not np.allclose(q, q.T):
            raise CatalogError("each quadratic must be a symmetric n x n matrix")

    def f(x):
        heights = []
        for q in qs:
            h = _zeros_like_scalar(x[0])
            for i in range(n):
                for j in range(n):
                    if q[i, j] != 0.0:
                        h = h + 0.5 * q[i, j] * x[i] * x[j]
            heights.append(h)
        return _stack([x[i] for i in range(n)] + heights)

    return ImmersionDef(
        f"graph_{n}", n, len(qs), _unbounded(n), "graph", {"n": n, "quadratics": [q.tolist() for q in qs]}, f
    )


def named(defn: ImmersionDef, name: str, *, box=None, expected=None, description: str = "") -> ImmersionDef:
    if box is not None:
        box = tuple((float(lo), float(hi)) for lo, hi in box)
        if len(box) != defn.n:
            raise CatalogError(f"box for {name} must have {defn.n} intervals")
        for (lo, hi), (dlo, dhi) in zip(box, defn.domain):
            if not (dlo <= lo < hi <= dhi):
                raise CatalogError(f"box for {name} leaves the chart domain")
    return replace(defn, name=name, box=box, expected=expected, description=description)


# ---- rebuilding from JSON -----------------------------------------------

def from_tree(tree: dict) -> ImmersionDef:
    tag = tree["tag"]
    params = tree.get("params", {})
    kids = [from_tree(c) for c in tree.get("children", [])]
    try:
        if tag == "affine":
            return affine(params["n"], params["p"])
        if tag == "sphere":
            return sphere(params["n"], params.get("radius", 1.0))
        if tag == "cylinder":
            return cylinder(params["curve"], params["n"])
        if tag == "clifford_torus":
            return clifford_torus()
        if tag == "product":
            return product(*kids)
        if tag == "flat_bend":
            return flat_bend(
                params["dim"], params["radius"], params.get("coordinate"), params.get("direction")
            )
        if tag == "compose":
            return compose(*kids)
        if tag == "graph":
            return graph(params["n"], params["quadratics"])
    except (KeyError, TypeError) as exc:
        raise CatalogError(f"malformed {tag} node: {exc}") from exc
    raise CatalogError(f"unknown constructor tag {tag!r}")


def from_dict(d: dict) -> ImmersionDef:
    base = from_tree(d["constructor"])
    if base.n != d["n"] or base.p != d["p"]:
        raise CatalogError(f"{d['name']}: declared dimensions do not match the constructor")
    box = None if d.get("box") is None else _box_from_json(d["box"])
    out = named(base, d["name"], box=box, expected=d.get("expected"), description=d.get("description", ""))
    if d.get("domain") is not None:
        out = replace(out, domain=_box_from_json(d["domain"]))
    return out


def manifest(defs: list[ImmersionDef]) -> dict:
    return {"schema_version": MANIFEST_SCHEMA_VERSION, "immersions": [d.to_dict() for d in defs]}


def write_manifest(defs: list[ImmersionDef], path) -> None:
    Path(path).write_text(json.dumps(manifest(defs), indent=2, sort_keys=True) + "\n")


def load_manifest(path) -> list[ImmersionDef]:
    data = json.loads(Path(path).read_text())
    if data.get("schema_version") != MANIFEST_SCHEMA_VERSION:
        raise CatalogError(f"unsupported manifest schema_version {data.get('schema_version')!r}")
    return [from_dict(d) for d in data["immersions"]]


# ---- the named catalog --------------------------------------------------

def _s2xr():
    return product(sphere(2), affine(1, 0))


def _s3xr_bent():
    base = product(sphere(3), affine(1, 0))
    return compose(flat_bend(5, 1.0, coordinate=4), base)


TILT = math.pi / 6
_RULED_ROWS = np.array([[2.0, -1.0, 2.0], [2.0, 2.0, -1.0], [-1.0, 2.0, 2.0]]) / 3.0


def _ruled_saddle():
    q = np.zeros((4, 4))
    q[0, 2] = q[2, 0] = q[1, 3] = q[3, 1] = 1.0
    g = product(graph(4, [q]), affine(1, 0))
    axes = (2, 3, 5)
    for row in _RULED_ROWS:
        a = np.zeros(g.ambient_dim)
        a[list(axes)] = row
        g = compose(flat_bend(g.ambient_dim, 1.0, direction=a), g)
    return g


def _catalog() -> list[ImmersionDef]:
    c, s = math.cos(TILT), math.sin(TILT)
    s2_box = ((-1.0, 1.0), (-0.9, 0.9))
    s2xr_box = s2_box + ((-1.0, 1.0),)
    s3xr_box = ((0.5, 2.5), (-0.7, 0.7), (-0.7, 0.7), (-1.0, 1.0))

    defs = [
        named(affine(3, 2), "affine_3_2", box=((-1, 1),) * 3,
              expected={"mu": 3, "nu_g": 3, "case": "TrivialEqualNullities"},
              description="totally geodesic R^3 in R^5"),
        named(sphere(2), "sphere_2", box=s2_box,
              expected={"mu": 0, "nu_g": 0, "case": "TrivialEqualNullities"},
              description="unit round sphere in R^3"),
        named(clifford_torus(), "clifford_torus", box=((-3.0, 3.0), (-3.0, 3.0)),
              expected={"mu": 2, "nu_g": 0, "case": "FlatExtreme"},
              description="product of unit circles in R^4"),
        named(_s2xr(), "s2xR", box=s2xr_box,
              expected={"mu": 1, "nu_g": 1, "case": "TrivialEqualNullities"},
              description="unit sphere times a line in R^4"),
        named(compose(flat_bend(4, 1.0, coordinate=3), _s2xr()), "compo_s2xR_bend", box=s2xr_box,
              expected={"mu": 1, "nu_g": 0, "dim_s_beta": 1, "case": "CompositionBound", "ell": 1, "k": 1},
              description="sphere times a line with the line rolled onto a unit circle"),
        named(compose(flat_bend(6, 1.0, direction=[c, 0, 0, 0, s, 0]), _s3xr_bent()),
              "compo_s3xR_double_bend", box=s3xr_box,
              expected={"mu": 1, "nu_g": 0, "dim_s_beta": 2, "case": "RankOneL_k1", "ell": 1, "k": 1},
              description="S^3 times a line, bent twice; the second bend mixes a sphere axis with the rolled line"),
        named(cylinder("circle", 2), "cylinder_circle", box=((-3.0, 3.0), (-1.0, 1.0)),
              expected={"mu": 2, "nu_g": 1, "case": "FlatExtreme"},
              description="circular cylinder in R^3"),
        named(cylinder("parabola", 3), "cylinder_parabola_3", box=((-1.0, 1.0),) * 3,
              expected={"mu": 3, "nu_g": 2, "case": "FlatExtreme"},
              description="parabolic cylinder in R^4"),
        named(compose(flat_bend(4, 1.0, direction=[0, 0, s, c]), _s2xr()), "compo_s2xR_tilted_bend",
              box=((-1.0, 1.0), (0.2, 0.9), (-1.0, 1.0)),
              expected={"mu": 1, "nu_g": 0, "dim_s_beta": 1, "case": "CompositionBound", "ell": 1, "k": 1},
              description="sphere times a line, bent along a direction mixing a sphere axis and the line"),
        named(compose(flat_bend(6, 1.0, coordinate=0), _s3xr_bent()), "compo_s3xR_aligned_bends",
              box=s3xr_box,
              expected={"mu": 1, "nu_g": 0, "dim_s_beta": 1, "case": "CompositionBound", "ell": 2, "k": 2},
              description="S^3 times a line, rolled line plus a second bend along a sphere axis"),
        named(_ruled_saddle(), "ruled_saddle_triple_bend", box=((-0.5, 0.5),) * 5,
              expected={"mu": 1, "nu_g": 0, "dim_s_beta": 3, "case": "RankOneL_k0_Ruled", "ell": 1, "k": 0},
              description="quadratic saddle graph times a line, bent three times in mutually orthogonal directions"),
        named(compose(flat_bend(5, 1.0, direction=[0, 0, 0, s, c]),
                      compose(flat_bend(4, 1.0, direction=[0, 0, c, s]), _s2xr())),
              "compo_s2xR_double_tilted", box=((-1.0, 1.0), (0.2, 0.9), (-1.0, 1.0)),
              expected={"mu": 1, "nu_g": 0, "case": "Unclassified"},
              description="sphere times a line bent twice along tilted directions; no classification case applies"),
    ]
    return defs


_CACHE: list[ImmersionDef] | None = None


def list_catalog() -> list[ImmersionDef]:
    """All named catalog members in a fixed order."""
    global _CACHE
    if _CACHE is None:
        _CACHE = _catalog()
    return list(_CACHE)


def get(name: str) -> ImmersionDef:
    for d in list_catalog():
        if d.name == name:
            return d
    raise KeyError(name)


def names() -> list[str]:
    return [d.name for d in list_catalog()]
