"""Polyhedral complexes and exact piecewise-linear Federer-Fleming projections.

Sets are carried as lists of convex planar polygons in R^4.  Radial
projection from a centre ``c`` of a convex cell maps the part of a polygon
lying in the cone over facet ``i`` by the projective map
``y -> c + (y - c) / rho_i(y)``, where ``rho_i`` is the gauge of that facet;
images of planar convex polygons are again planar convex polygons, so areas
are exact sums and no quadrature is involved.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import shapely
from scipy.optimize import linprog
from scipy.spatial import ConvexHull
from shapely.geometry import MultiPoint, Polygon

from .exterior import wedge
from .geometry import ProductScene, build_scene
from .homology import ChainZ2, SimplicialComplex, _Reducer, bits_of

GEOM_TOL = 1e-9
AREA_EPS = 1e-14
COVER_TOL = 5e-13
CENTER_TOL = 1e-9


class DegenerateCell(ValueError):
    pass


class CenterOnSet(ValueError):
    pass


class NoValidCenter(RuntimeError):
    pass


# -- convex cell geometry ------------------------------------------------------


def affine_basis(points: np.ndarray, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Centroid and orthonormal rows spanning the affine hull of ``points``."""
    points = np.asarray(points, dtype=float)
    c = points.mean(0)
    if len(points) == 1:
        return c, np.zeros((0, points.shape[1]))
    _, s, vt = np.linalg.svd(points - c)
    scale = max(s[0], 1e-300)
    return c, vt[: int(np.sum(s > tol * scale))]


def _circumcenter(p: np.ndarray) -> tuple[np.ndarray, float] | None:
    if len(p) == 1:
        return p[0], 0.0
    d = p[1:] - p[0]
    g = d @ d.T
    try:
        alpha = np.linalg.solve(2.0 * g, np.diag(g))
    except np.linalg.LinAlgError:
        return None
    c = p[0] + alpha @ d
    return c, float(np.linalg.norm(c - p[0]))


def circumradius(points: np.ndarray) -> float:
    """Radius of the smallest ball containing the points (exhaustive support sets)."""
    points = np.asarray(points, dtype=float)
    _, basis = affine_basis(points)
    k = len(basis)
    best = math.inf
    for size in range(1, min(k + 1, len(points)) + 1):
        for sub in itertools.combinations(range(len(points)), size):
            res = _circumcenter(points[list(sub)])
            if res is None:
                continue
            c, r = res
            if r < best and np.all(np.linalg.norm(points - c, axis=1) <= r * (1 + 1e-12) + 1e-14):
                best = r
    return best


def inradius(points: np.ndarray) -> float:
    """Radius of the largest ball of the affine hull contained in the hull of the points."""
    points = np.asarray(points, dtype=float)
    c, basis = affine_basis(points)
    k = len(basis)
    if k == 0:
        return 0.0
    x = (points - c) @ basis.T
    if k == 1:
        return float(x.max() - x.min()) / 2.0
    eq = ConvexHull(x).equations  # rows (normal, offset) with unit normals
    a_ub = np.hstack([eq[:, :-1], np.ones((len(eq), 1))])
    cost = np.zeros(k + 1)
    cost[-1] = -1.0
    res = linprog(cost, A_ub=a_ub, b_ub=-eq[:, -1], bounds=[(None, None)] * k + [(0, None)], method="highs")
    if res.status != 0:
        raise DegenerateCell("inradius LP failed")
    return float(res.x[-1])


def roundness(points) -> float:
    """Inradius over circumradius within the affine hull; 1 for a point."""
    points = np.asarray(points, dtype=float)
    if len(points) == 1:
        return 1.0
    _, basis = affine_basis(points)
    if len(basis) == 0:
        raise DegenerateCell("cell has coincident vertices")
    rin = inradius(points)
    if rin <= 1e-14:
        raise DegenerateCell("cell has empty relative interior")
    return rin / circumradius(points)


def polygon_area(poly: np.ndarray) -> float:
    poly = np.asarray(poly, dtype=float)
    if len(poly) < 3:
        return 0.0
    w = wedge(poly[1:-1] - poly[0], poly[2:] - poly[0])
    if poly.shape[1] == 4:
        total = w.sum(0)
        return 0.5 * float(np.linalg.norm(total))
    raise ValueError("expected points of R^4")


def clip_polygon(poly: np.ndarray, a: np.ndarray, b: float, tol: float = 1e-13) -> np.ndarray:
    """Part of a convex polygon where ``a . y + b >= 0`` (Sutherland-Hodgman step)."""
    if len(poly) == 0:
        return poly
    vals = poly @ a + b
    scale = max(1.0, float(np.abs(vals).max()))
    vals = np.where(np.abs(vals) <= tol * scale, 0.0, vals)
    if np.all(vals >= 0):
        return poly
    if np.all(vals <= 0):
        return poly[:0]
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        fp, fq = vals[i], vals[(i + 1) % n]
        if fp >= 0:
            out.append(p)
        if (fp > 0 and fq < 0) or (fp < 0 and fq > 0):
            t = fp / (fp - fq)
            out.append(p + t * (q - p))
    return _dedupe(np.array(out)) if out else poly[:0]


def _dedupe(poly: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    keep = []
    for i in range(len(poly)):
        if np.linalg.norm(poly[i] - poly[i - 1]) > tol or len(poly) == 1:
            keep.append(i)
    return poly[keep]


def point_polygon_distance(p: np.ndarray, poly: np.ndarray) -> float:
    best = math.inf
    for k in range(1, len(poly) - 1):
        a, b, c = poly[0], poly[k], poly[k + 1]
        m = np.stack([b - a, c - a], axis=1)
        lam, *_ = np.linalg.lstsq(m, p - a, rcond=None)
        if lam[0] >= 0 and lam[1] >= 0 and lam.sum() <= 1:
            best = min(best, float(np.linalg.norm(a + m @ lam - p)))
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        ab = b - a
        t = np.clip((p - a) @ ab / max(ab @ ab, 1e-300), 0.0, 1.0)
        best = min(best, float(np.linalg.norm(a + t * ab - p)))
    return best


# -- complexes -----------------------------------------------------------------


@dataclass
class Cell:
    dim: int
    verts: tuple[int, ...]
    facets: tuple[int, ...]  # indices into the (dim - 1)-cells
    parts: tuple[int, int] = (-1, -1)  # product structure: (factor-1 face, factor-2 face)


@dataclass
class FacetData:
    normal: np.ndarray
    point: np.ndarray


class PolyComplex:
    """Convex cells by dimension with facet incidence and cached geometry."""

    def __init__(self, vertices: np.ndarray, cells: dict[int, list[Cell]]):
        self.vertices = np.asarray(vertices, dtype=float)
        self.cells = cells
        self._round: dict[tuple[int, int], float] = {}
        self._round_shape: dict[bytes, float] = {}
        self._facet_data: dict[tuple[int, int], list[FacetData]] = {}
        self._basis: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}

    @property
    def dim(self) -> int:
        return max(d for d, c in self.cells.items() if c)

    def points(self, d: int, i: int) -> np.ndarray:
        return self.vertices[list(self.cells[d][i].verts)]

    def basis(self, d: int, i: int) -> tuple[np.ndarray, np.ndarray]:
        key = (d, i)
        if key not in self._basis:
            self._basis[key] = affine_basis(self.points(d, i))
        return self._basis[key]

    def roundness(self, d: int, i: int) -> float:
        key = (d, i)
        if key not in self._round:
            pts = self.points(d, i)
            shape = np.round(pts - pts[0], 12).tobytes()
            if shape not in self._round_shape:
                self._round_shape[shape] = roundness(pts)
            self._round[key] = self._round_shape[shape]
        return self._round[key]

    def complex_roundness(self) -> float:
        return min(self.roundness(d, i) for d in self.cells if d > 0 for i in range(len(self.cells[d])))

    def facet_data(self, d: int, i: int) -> list[FacetData]:
        key = (d, i)
        if key in self._facet_data:
            return self._facet_data[key]
        centroid, bc = self.basis(d, i)
        out = []
        for f in self.cells[d][i].facets:
            fp = self.points(d - 1, f)
            fc, bf = self.basis(d - 1, f)
            m = bc - (bc @ bf.T) @ bf if len(bf) else bc
            _, _, vt = np.linalg.svd(m)
            n = vt[0]
            if n @ (fc - centroid) < 0:
                n = -n
            out.append(FacetData(n, fc))
        self._facet_data[key] = out
        return out

    def contains_in_facet(self, d: int, i: int, k: int, poly: np.ndarray, tol: float = GEOM_TOL) -> bool:
        fd = self.facet_data(d, i)[k]
        return bool(np.all(np.abs((poly - fd.point) @ fd.normal) <= tol))

    def home(self, d: int, i: int, poly: np.ndarray) -> tuple[int, int]:
        """Smallest face of cell ``(d, i)`` that contains a polygon lying in the cell."""
        while d > 2:
            for k, f in enumerate(self.cells[d][i].facets):
                if self.contains_in_facet(d, i, k, poly):
                    d, i = d - 1, f
                    break
            else:
                return d, i
        return d, i

    def volume(self, d: int, i: int) -> float:
        pts = self.points(d, i)
        c, b = self.basis(d, i)
        x = (pts - c) @ b.T
        if len(b) == 1:
            return float(x.max() - x.min())
        return float(ConvexHull(x).volume)


@dataclass
class GridComplex:
    """Product of two planar triangulations of the triangles ``C1`` and ``C2``."""

    poly: PolyComplex
    n: int
    aligned: bool
    skeleton: SimplicialComplex  # simplicial 2-skeleton (rectangles split in two)
    face_triangles: list[list[int]]  # 2-cell id -> skeleton triangle ids
    yxy_faces: list[int]  # 2-cells making up Y x Y (aligned grids only)
    scene: ProductScene

    def triangles(self) -> np.ndarray:
        return self.skeleton.vertices[np.array(self.skeleton.simplices[2])]


def triangulate_triangle(corners: np.ndarray, n: int, center: np.ndarray | None):
    """Planar triangulation of a triangle, split at ``center`` when given, each part ``n``-subdivided.

    Returns vertices, edges and triangles with vertex indices ordered by
    grid level from the split point (or from the first corner).
    """
    keys: dict = {}
    pts: list = []
    order: list = []

    def vid(key, p, level):
        if key not in keys:
            keys[key] = len(pts)
            pts.append(p)
            order.append((level, len(pts)))
        return keys[key]

    tris = []
    if center is not None:
        for i in range(3):
            a, b = corners[i], corners[(i + 1) % 3]

            def key_of(al, be, i=i):
                if al == 0 and be == 0:
                    return ("o",)
                if be == 0:
                    return ("r", i, al)
                if al == 0:
                    return ("r", (i + 1) % 3, be)
                return ("t", i, al, be)

            def vtx(al, be, a=a, b=b, key_of=key_of):
                p = center + (al / n) * (a - center) + (be / n) * (b - center)
                return vid(key_of(al, be), p, al + be)

            for al in range(n):
                for be in range(n - al):
                    tris.append((vtx(al, be), vtx(al + 1, be), vtx(al, be + 1)))
                    if al + be < n - 1:
                        tris.append((vtx(al + 1, be), vtx(al + 1, be + 1), vtx(al, be + 1)))
    else:
        a, b, c = corners

        def vtx(al, be):
            p = a + (al / n) * (b - a) + (be / n) * (c - a)
            return vid(("g", al, be), p, al + be)

        for al in range(n):
            for be in range(n - al):
                tris.append((vtx(al, be), vtx(al + 1, be), vtx(al, be + 1)))
                if al + be < n - 1:
                    tris.append((vtx(al + 1, be), vtx(al + 1, be + 1), vtx(al, be + 1)))
    # renumber by level so that indices grow away from the split point
    perm = sorted(range(len(pts)), key=lambda k: order[k])
    new = {old: new for new, old in enumerate(perm)}
    verts = np.array([pts[k] for k in perm])
    tris = sorted({tuple(sorted(new[v] for v in t)) for t in tris})
    edges = sorted({e for t in tris for e in itertools.combinations(t, 2)})
    return verts, edges, tris, {k: new[v] for k, v in keys.items()}


def build_grid_complex(scene: ProductScene | None = None, n: int = 1, aligned: bool = True) -> GridComplex:
    """Product complex over ``D = C1 x C2``.

    With ``aligned`` each ``C_i`` is first split at the centre of ``Y_i`` so
    that the branches of ``Y_i`` are edges and ``Y x Y`` lies in the
    2-skeleton.  Rectangle faces are split along the diagonal joining their
    lowest and highest product vertices.
    """
    if n < 1:
        raise ValueError("refinement must be >= 1")
    scene = scene or build_scene()
    c1 = scene.y1.endpoints
    c2 = scene.y2.endpoints
    v1, e1, t1, keys1 = triangulate_triangle(c1, n, scene.y1.center if aligned else None)
    v2, e2, t2, keys2 = triangulate_triangle(c2, n, scene.y2.center if aligned else None)
    faces1 = {0: [(i,) for i in range(len(v1))], 1: e1, 2: t1}
    faces2 = {0: [(i,) for i in range(len(v2))], 1: e2, 2: t2}
    idx1 = {d: {f: k for k, f in enumerate(fs)} for d, fs in faces1.items()}
    idx2 = {d: {f: k for k, f in enumerate(fs)} for d, fs in faces2.items()}
    n2 = len(v2)
    verts = np.array([np.concatenate([p, q]) for p in v1 for q in v2])

    def sub(face):
        return [face[:k] + face[k + 1 :] for k in range(len(face))] if len(face) > 1 else []

    cells: dict[int, list[Cell]] = {d: [] for d in range(5)}
    cell_index: dict[tuple, int] = {}
    for total in range(5):
        for d1 in range(3):
            d2 = total - d1
            if not 0 <= d2 <= 2:
                continue
            for f1 in faces1[d1]:
                for f2 in faces2[d2]:
                    pv = tuple(sorted(a * n2 + b for a in f1 for b in f2))
                    facets = [cell_index[(g, f2)] for g in sub(f1)] + [cell_index[(f1, g)] for g in sub(f2)]
                    cell_index[(f1, f2)] = len(cells[total])
                    cells[total].append(Cell(total, pv, tuple(facets), (idx1[d1][f1], idx2[d2][f2])))
    poly = PolyComplex(verts, cells)

    branch1 = _branch_edges(e1, keys1) if aligned else set()
    branch2 = _branch_edges(e2, keys2) if aligned else set()
    yxy, other = [], []
    for k, cell in enumerate(cells[2]):
        d1 = _factor_dim(cell, n2)
        f1, f2 = _factors(cell, n2)
        if d1 == 1 and f1 in branch1 and f2 in branch2:
            yxy.append(k)
        else:
            other.append(k)
    tri_list: list[tuple[int, ...]] = []
    face_tris: list[list[int]] = [[] for _ in cells[2]]
    for k in yxy + other:
        cell = cells[2][k]
        f1, f2 = _factors(cell, n2)
        if len(f1) == 2 and len(f2) == 2:
            (p0, p1), (q0, q1) = f1, f2
            a, b, c, d = p0 * n2 + q0, p1 * n2 + q0, p1 * n2 + q1, p0 * n2 + q1
            new = [tuple(sorted((a, b, c))), tuple(sorted((a, c, d)))]
        else:
            new = [cell.verts]
        for t in new:
            face_tris[k].append(len(tri_list))
            tri_list.append(t)
    skeleton = SimplicialComplex.from_maximal(verts, tri_list)
    return GridComplex(poly, n, aligned, skeleton, face_tris, sorted(yxy), scene)


def _factors(cell: Cell, n2: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    f1 = tuple(sorted({v // n2 for v in cell.verts}))
    f2 = tuple(sorted({v % n2 for v in cell.verts}))
    return f1, f2


def _factor_dim(cell: Cell, n2: int) -> int:
    return len(_factors(cell, n2)[0]) - 1


def _branch_edges(edges, keys) -> set:
    radial = {v for k, v in keys.items() if k[0] in ("o", "r")}
    branch_of = {v: k[1] for k, v in keys.items() if k[0] == "r"}
    out = set()
    for a, b in edges:
        if a in radial and b in radial:
            ba, bb = branch_of.get(a), branch_of.get(b)
            if ba is None or bb is None or ba == bb:
                out.add((a, b))
    return out


# -- radial projection -----------------------------------------------------------


@dataclass
class Piece:
    poly: np.ndarray  # (k, 4) convex planar polygon
    source: int  # index of the originating input triangle
    home: tuple[int, int]  # (dim, cell id) of the smallest face containing it

    @property
    def area(self) -> float:
        return polygon_area(self.poly)


def gauges(K: PolyComplex, d: int, i: int, center: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rows ``g_k`` with ``rho_k(y) = g_k . (y - center)``, and the facet ids."""
    fds = K.facet_data(d, i)
    h = np.array([fd.normal @ (fd.point - center) for fd in fds])
    if np.any(h <= 0):
        raise ValueError("centre is not interior to the cell")
    return np.array([fd.normal / hk for fd, hk in zip(fds, h)]), np.array(K.cells[d][i].facets)


def radial_map_point(K: PolyComplex, d: int, i: int, center: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Pointwise radial projection (used as an independent oracle)."""
    g, _ = gauges(K, d, i, center)
    rho = (np.asarray(y) - center) @ g.T
    return center + (y - center) / rho.max(-1, keepdims=True)


def project_pieces(
    K: PolyComplex, d: int, i: int, center: np.ndarray, pieces: Sequence[Piece]
) -> list[Piece]:
    """Exact image of polygons in cell ``(d, i)`` under the radial projection from ``center``."""
    g, facet_ids = gauges(K, d, i, center)
    out: list[Piece] = []
    for pc in pieces:
        if point_polygon_distance(center, pc.poly) <= CENTER_TOL:
            raise CenterOnSet("centre lies on the set")
        for k in range(len(g)):
            if K.contains_in_facet(d, i, k, pc.poly):
                out.append(Piece(pc.poly, pc.source, K.home(d - 1, int(facet_ids[k]), pc.poly)))
                break
        else:
            for k in range(len(g)):
                part = pc.poly
                for j in range(len(g)):
                    if j == k or len(part) < 3:
                        continue
                    a = g[k] - g[j]
                    part = clip_polygon(part, a, -(a @ center))
                if len(part) < 3:
                    continue
                rho = (part - center) @ g[k]
                img = center + (part - center) / rho[:, None]
                if polygon_area(img) <= AREA_EPS:
                    continue
                f = int(facet_ids[k])
                out.append(Piece(img, pc.source, K.home(d - 1, f, img)))
    return out


def radial_project(K: PolyComplex, d: int, i: int, center, triangles) -> list[Piece]:
    """Radially project a triangle set lying in cell ``(d, i)`` onto its boundary."""
    center = np.asarray(center, dtype=float)
    pieces = [Piece(np.asarray(t, dtype=float), s, (d, i)) for s, t in enumerate(triangles)]
    return project_pieces(K, d, i, center, pieces)


def total_area(pieces: Iterable[Piece]) -> float:
    return math.fsum(p.area for p in pieces)


def interior_samples(K: PolyComplex, d: int, i: int, count: int, rng: np.random.Generator) -> np.ndarray:
    pts = K.points(d, i)
    w = rng.dirichlet(np.ones(len(pts)), size=count)
    return w @ pts


@dataclass
class CenterChoice:
    center: np.ndarray
    area_in: float
    area_out: float
    best_ratio: float
    worst_ratio: float
    candidates: int
    pieces: list[Piece] = field(repr=False)

    @property
    def ratio(self) -> float:
        return self.area_out / self.area_in if self.area_in > 0 else 0.0


def choose_center(
    K: PolyComplex, d: int, i: int, pieces: Sequence[Piece], trials: int = 32, seed: int = 0
) -> CenterChoice:
    """Best of ``trials`` random interior centres (off the set) by image area."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng([seed, d, i])
    cands = interior_samples(K, d, i, trials, rng)
    area_in = total_area(pieces)
    if not pieces:
        return CenterChoice(cands[0], 0.0, 0.0, 0.0, 0.0, trials, [])
    best: tuple[float, np.ndarray, list[Piece]] | None = None
    worst = 0.0
    valid = 0
    for c in cands:
        if min(point_polygon_distance(c, p.poly) for p in pieces) <= CENTER_TOL:
            continue
        try:
            out = project_pieces(K, d, i, c, pieces)
        except CenterOnSet:
            continue
        valid += 1
        a = total_area(out)
        worst = max(worst, a)
        if best is None or a < best[0]:
            best = (a, c, out)
    if best is None:
        raise NoValidCenter("every sampled centre lies on the set")
    return CenterChoice(best[1], area_in, best[0], best[0] / area_in, worst / area_in, valid, best[2])


# -- the composite projection ------------------------------------------------------


@dataclass
class CellRecord:
    stage: str
    dim: int
    cell: int
    roundness: float
    center: tuple[float, ...]
    area_in: float
    area_out: float
    best_ratio: float
    worst_ratio: float
    covered: bool | None = None

    @property
    def ratio(self) -> float:
        return self.area_out / self.area_in if self.area_in > 0 else 0.0


@dataclass
class ProjectionTrace:
    records: list[CellRecord]
    area_input: float
    area_after_radial: float
    area_output: float
    complex_roundness: float

    def stage(self, name: str) -> list[CellRecord]:
        return [r for r in self.records if r.stage == name]

    def k_emp(self, name: str) -> float:
        """Largest ``ratio * R(cell)^4`` over the cells of a radial stage."""
        vals = [r.ratio * r.roundness**4 for r in self.stage(name) if r.area_in > 0]
        return max(vals, default=0.0)

    @property
    def k1_emp(self) -> float:
        return max(1.0, self.k_emp("radial4")) * max(1.0, self.k_emp("radial3"))

    @property
    def radial_ratio(self) -> float:
        return self.area_after_radial / self.area_input if self.area_input > 0 else 0.0

    def radial_bound(self) -> float:
        return self.k1_emp * self.complex_roundness**-8

    @property
    def erosion_ratio(self) -> float:
        """Worst area ratio over eroded or kept faces (set measure after / before)."""
        vals = [r.ratio for r in self.stage("erosion") if r.area_in > 0]
        return max(vals, default=0.0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["stage", "dim", "cell", "roundness", "center", "area_in", "area_out", "ratio"])
        for r in self.records:
            w.writerow(
                [
                    r.stage,
                    r.dim,
                    r.cell,
                    "%.17g" % r.roundness,
                    " ".join("%.17g" % x for x in r.center),
                    "%.17g" % r.area_in,
                    "%.17g" % r.area_out,
                    "%.17g" % r.ratio,
                ]
            )
        return buf.getvalue()


@dataclass
class FFResult:
    covered: list[int]  # 2-cells kept by the erosion
    chain: ChainZ2  # the kept faces as a 2-chain of the simplicial skeleton
    trace: ProjectionTrace
    radial_pieces: list[Piece] = field(repr=False)

    def area(self, grid: GridComplex) -> float:
        return grid.skeleton.area(self.chain)


def place_triangles(K: PolyComplex, triangles: np.ndarray) -> list[Piece]:
    """Cut triangles by the top cells and attach each piece to its smallest face."""
    top = K.dim
    lo = np.array([K.points(top, i).min(0) for i in range(len(K.cells[top]))])
    hi = np.array([K.points(top, i).max(0) for i in range(len(K.cells[top]))])
    seen: dict[tuple[int, tuple[int, int]], Piece] = {}
    placed = 0.0
    for s, tri in enumerate(np.asarray(triangles, dtype=float)):
        tlo, thi = tri.min(0), tri.max(0)
        hits = np.where(np.all(lo <= thi + GEOM_TOL, axis=1) & np.all(hi >= tlo - GEOM_TOL, axis=1))[0]
        for i in hits:
            part = tri
            for fd in K.facet_data(top, int(i)):
                part = clip_polygon(part, -fd.normal, fd.normal @ fd.point)
                if len(part) < 3:
                    break
            if len(part) < 3 or polygon_area(part) <= AREA_EPS:
                continue
            home = K.home(top, int(i), part)
            if (s, home) not in seen:
                seen[(s, home)] = Piece(part, s, home)
    pieces = list(seen.values())
    want = math.fsum(polygon_area(t) for t in triangles)
    placed = total_area(pieces)
    if abs(placed - want) > 1e-9 * max(1.0, want):
        raise ValueError("input set is not contained in the support of the complex")
    return pieces


def _face_frame(K: PolyComplex, k: int):
    c, b = K.basis(2, k)
    return c, b


def erode(K: PolyComplex, pieces: Sequence[Piece], seed: int = 0):
    """Keep fully covered 2-faces; clear the others from an uncovered point."""
    by_face: dict[int, list[Piece]] = {}
    for p in pieces:
        if p.home[0] == 2:
            by_face.setdefault(p.home[1], []).append(p)
    covered = []
    records = []
    for k in sorted(by_face):
        c, b = _face_frame(K, k)
        face = MultiPoint([tuple(x) for x in (K.points(2, k) - c) @ b.T]).convex_hull
        polys = []
        for p in by_face[k]:
            q = MultiPoint([tuple(x) for x in (p.poly - c) @ b.T]).convex_hull
            if isinstance(q, Polygon) and q.area > 0:
                polys.append(q)
        union = shapely.union_all(polys).intersection(face) if polys else Polygon()
        gap = face.difference(union)
        area_in = float(union.area)
        if gap.area <= COVER_TOL * face.area:
            covered.append(k)
            area_out = float(face.area)
            center = tuple(c)
            is_cov = True
        else:
            area_out = 0.0
            pt = np.array(gap.representative_point().coords[0])
            center = tuple(c + pt @ b)
            is_cov = False
        records.append(
            CellRecord("erosion", 2, k, K.roundness(2, k), center, area_in, area_out,
                       area_out / area_in if area_in else 0.0, area_out / area_in if area_in else 0.0, is_cov)
        )
    return covered, records


def ff_project(grid: GridComplex, triangles, trials: int = 32, seed: int = 0) -> FFResult:
    """Radial projections through the 4- and 3-cells, then erosion of the 2-faces."""
    K = grid.poly
    pieces = place_triangles(K, triangles)
    area_input = total_area(pieces)
    records: list[CellRecord] = []
    for d, name in ((4, "radial4"), (3, "radial3")):
        bins: dict[int, list[Piece]] = {}
        rest: list[Piece] = []
        for p in pieces:
            (bins.setdefault(p.home[1], []) if p.home[0] == d else rest).append(p)
        for i in sorted(bins):
            choice = choose_center(K, d, i, bins[i], trials, seed)
            records.append(
                CellRecord(name, d, i, K.roundness(d, i), tuple(choice.center), choice.area_in,
                           choice.area_out, choice.best_ratio, choice.worst_ratio)
            )
            rest.extend(choice.pieces)
        pieces = rest
    area_radial = total_area(pieces)
    covered, erosion_records = erode(K, pieces, seed)
    records.extend(erosion_records)
    bits = 0
    for k in covered:
        for t in grid.face_triangles[k]:
            bits |= 1 << t
    chain = ChainZ2(2, bits, grid.skeleton.count(2))
    trace = ProjectionTrace(records, area_input, area_radial, grid.skeleton.area(chain), K.complex_roundness())
    return FFResult(covered, chain, trace, pieces)


def full_face_violations(grid: GridComplex, result: FFResult) -> list[int]:
    """2-faces partly met by the output: must be empty."""
    bad = []
    bits = result.chain.bits
    for k, tris in enumerate(grid.face_triangles):
        member = [(bits >> t) & 1 for t in tris]
        if any(member) and not all(member):
            bad.append(k)
    return bad


def solve_within(K: SimplicialComplex, z: ChainZ2, allowed: ChainZ2) -> ChainZ2 | None:
    """A 2-chain supported in ``allowed`` with boundary ``z``, or None."""
    cols = K.boundary(2).columns
    masked = [c if (allowed.bits >> i) & 1 else 0 for i, c in enumerate(cols)]
    rest, combo = _Reducer(masked).reduce(z.bits)
    if rest:
        return None
    return ChainZ2(2, combo, K.count(2))


def grid_gamma(grid: GridComplex, j: int, l: int) -> ChainZ2:
    """The boundary cycle of ``S_j x R_l`` as a 1-chain of the grid skeleton."""
    scene = grid.scene
    K = grid.skeleton
    poly = scene.gamma_polyline(j, l)
    edges = []
    for p, q in zip(poly, np.roll(poly, -1, axis=0)):
        for e in K.simplices[1]:
            a, b = K.vertices[e[0]], K.vertices[e[1]]
            if _on_segment(a, p, q) and _on_segment(b, p, q):
                edges.append(e)
    return K.chain(1, edges)


def _on_segment(x, p, q, tol: float = 1e-9) -> bool:
    pq = q - p
    t = (x - p) @ pq / (pq @ pq)
    return -tol <= t <= 1 + tol and np.linalg.norm(p + t * pq - x) <= tol


def yxy_chain(grid: GridComplex) -> ChainZ2:
    bits = 0
    for k in grid.yxy_faces:
        for t in grid.face_triangles[k]:
            bits |= 1 << t
    return ChainZ2(2, bits, grid.skeleton.count(2))


def bumped_yxy(scene: ProductScene, n: int, height: float = 0.2, tilt: float = 0.5) -> np.ndarray:
    """Triangles of ``Y x Y`` in ``D`` with one quarter-square replaced by a pyramid.

    The pyramid sits on ``[o, a_1] x [o, b_1]``; its apex is the square centre
    pushed by ``height`` along a unit normal of ``a_1`` in the first factor,
    with ``tilt`` times a unit normal of ``b_1`` in the second factor.
    """
    from .geometry import triangulate_yxy

    T = triangulate_yxy(n, scene)
    K = T.complex
    skip = set(T.quarter[(0, 0)])
    tris = [K.vertices[list(K.simplices[2][i])] for i in range(K.count(2)) if i not in skip]
    a1, b1 = scene.a[0], scene.b[0]
    n1 = np.array([-a1[1], a1[0], 0.0, 0.0])
    m1 = np.array([0.0, 0.0, -b1[3], b1[2]])
    apex = 0.5 * a1 + 0.5 * b1 + height * (n1 + tilt * m1) / math.sqrt(1 + tilt * tilt)
    o = np.zeros(4)
    corners = [o, a1, a1 + b1, b1]
    for p, q in zip(corners, corners[1:] + corners[:1]):
        tris.append(np.stack([p, q, apex]))
    return np.array(tris)
