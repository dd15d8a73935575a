"""The Y x Y scene in R^4 = R^2_1 x R^2_2.

Indices ``j, l`` of branches, segments and squares are 0-based in code
(``j = 0`` is the first branch); report labels add one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exterior import det4, wedge
from .homology import ChainZ2, SimplicialComplex

REFERENCE_ANGLES = (90.0, 210.0, 330.0)
SQRT3 = math.sqrt(3.0)


def embed1(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return np.concatenate([p, np.zeros(p.shape[:-1] + (2,))], axis=-1)


def embed2(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.concatenate([np.zeros(q.shape[:-1] + (2,)), q], axis=-1)


@dataclass(frozen=True)
class YGraph:
    """Three unit segments from ``center`` at 120 degrees."""

    center: np.ndarray
    directions: np.ndarray  # (3, 2)

    @classmethod
    def standard(cls, rotation: float = 0.0) -> "YGraph":
        ang = np.radians(np.array(REFERENCE_ANGLES)) + rotation
        return cls(np.zeros(2), np.stack([np.cos(ang), np.sin(ang)], axis=-1))

    @property
    def endpoints(self) -> np.ndarray:
        return self.center + self.directions

    def check(self, tol: float = 1e-12) -> None:
        d = self.directions
        for i in range(3):
            if abs(np.linalg.norm(d[i]) - 1.0) > tol:
                raise ValueError("branch direction is not unit")
            for k in range(i + 1, 3):
                if abs(d[i] @ d[k] + 0.5) > tol:
                    raise ValueError("branches do not meet at 120 degrees")


@dataclass(frozen=True)
class ProductScene:
    y1: YGraph
    y2: YGraph
    a: np.ndarray  # (3, 4) endpoints of Y1 in R^4
    b: np.ndarray  # (3, 4) endpoints of Y2 in R^4
    x_mid: np.ndarray  # (3, 4) midpoints of L_j
    y_mid: np.ndarray  # (3, 4) midpoints of M_l
    w: np.ndarray  # (3, 4) unit normals of L_j
    u: np.ndarray  # (3, 4) unit normals of M_l
    t: np.ndarray  # (3, 4) unit directions of L_j
    m: np.ndarray  # (3, 4) unit directions of M_l
    v: np.ndarray = field(repr=False)  # (3, 3, 6) calibration 2-vectors w_j ^ u_l
    xi: np.ndarray = field(repr=False)  # (3, 3, 6) unit 2-vectors t_j ^ m_l of the planes P_jl

    @property
    def half_side(self) -> float:
        return SQRT3 / 2.0

    # segments and squares ---------------------------------------------------

    def segment_L(self, j: int) -> np.ndarray:
        return np.stack([self.a[j], self.a[(j + 1) % 3]])

    def segment_M(self, l: int) -> np.ndarray:
        return np.stack([self.b[l], self.b[(l + 1) % 3]])

    def square(self, j: int, l: int) -> np.ndarray:
        """Corners of ``Q_jl = L_j x M_l`` in cyclic order."""
        a0, a1 = self.segment_L(j)
        b0, b1 = self.segment_M(l)
        return np.stack([a0 + b0, a1 + b0, a1 + b1, a0 + b1])

    def square_area(self, j: int, l: int) -> float:
        c = self.square(j, l)
        return float(np.linalg.norm(c[1] - c[0]) * np.linalg.norm(c[3] - c[0]))

    def plane_origin(self, j: int, l: int) -> np.ndarray:
        return self.x_mid[j] + self.y_mid[l]

    def plane_coords(self, p, j: int, l: int) -> np.ndarray:
        """Coordinates of ``p_jl(p)`` in the frame ``(t_j, m_l)`` centred on ``Q_jl``."""
        d = np.asarray(p, dtype=float) - self.plane_origin(j, l)
        return np.stack([d @ self.t[j], d @ self.m[l]], axis=-1)

    def orthogonal_project(self, p, j: int, l: int) -> np.ndarray:
        c = self.plane_coords(p, j, l)
        return self.plane_origin(j, l) + c[..., :1] * self.t[j] + c[..., 1:] * self.m[l]

    def gamma_polyline(self, j: int, l: int) -> np.ndarray:
        """Closed polyline (first vertex not repeated) bounding ``S_j x R_l``."""
        o = np.zeros(4)
        a0, a1 = self.a[j], self.a[(j + 1) % 3]
        b0, b1 = self.b[l], self.b[(l + 1) % 3]
        return np.stack(
            [a0 + b0, o + b0, a1 + b0, a1 + o, a1 + b1, o + b1, a0 + b1, a0 + o]
        )

    # domain D = C1 x C2 --------------------------------------------------------

    def in_domain(self, p, tol: float = 1e-12) -> bool:
        p = np.asarray(p, dtype=float)
        return _in_triangle(p[:2], self.y1.endpoints, tol) and _in_triangle(
            p[2:], self.y2.endpoints, tol
        )

    def on_domain_boundary(self, p, tol: float = 1e-12) -> bool:
        p = np.asarray(p, dtype=float)
        if not self.in_domain(p, tol):
            return False
        return _on_triangle_boundary(p[:2], self.y1.endpoints, tol) or _on_triangle_boundary(
            p[2:], self.y2.endpoints, tol
        )

    def check(self, tol: float = 1e-12) -> None:
        self.y1.check(tol)
        self.y2.check(tol)
        if np.abs(self.w.sum(0)).max() > tol or np.abs(self.u.sum(0)).max() > tol:
            raise ValueError("normals do not sum to zero")
        if np.abs(self.v.sum(0)).max() > tol or np.abs(self.v.sum(1)).max() > tol:
            raise ValueError("calibration vectors fail the null row/column sums")
        if np.abs(np.linalg.norm(self.v, axis=-1) - 1.0).max() > tol:
            raise ValueError("calibration vectors are not unit")
        for j in range(3):
            if abs(np.linalg.norm(self.a[(j + 1) % 3] - self.a[j]) - SQRT3) > tol:
                raise ValueError("segment L has wrong length")
            if abs(np.linalg.norm(self.b[(j + 1) % 3] - self.b[j]) - SQRT3) > tol:
                raise ValueError("segment M has wrong length")
            for l in range(3):
                if not all(self.on_domain_boundary(p, 1e-9) for p in self.gamma_polyline(j, l)):
                    raise ValueError("boundary cycle leaves the boundary of D")


def _in_triangle(p, tri, tol) -> bool:
    s = [
        (tri[(i + 1) % 3, 0] - tri[i, 0]) * (p[1] - tri[i, 1])
        - (tri[(i + 1) % 3, 1] - tri[i, 1]) * (p[0] - tri[i, 0])
        for i in range(3)
    ]
    return all(x >= -tol for x in s) or all(x <= tol for x in s)


def _on_triangle_boundary(p, tri, tol) -> bool:
    for i in range(3):
        q0, q1 = tri[i], tri[(i + 1) % 3]
        e = q1 - q0
        cross = e[0] * (p[1] - q0[1]) - e[1] * (p[0] - q0[0])
        if abs(cross) <= tol * np.linalg.norm(e) and -tol <= (p - q0) @ e <= e @ e + tol:
            return True
    return False


def build_scene(rotation1: float = 0.0, rotation2: float = 0.0) -> ProductScene:
    """Construct the scene; rotations (radians) act on R^2_1 and R^2_2 separately."""
    y1 = YGraph.standard(rotation1)
    y2 = YGraph.standard(rotation2)
    a = embed1(y1.endpoints)
    b = embed2(y2.endpoints)
    nxt = [1, 2, 0]
    x_mid = 0.5 * (a + a[nxt])
    y_mid = 0.5 * (b + b[nxt])
    w = x_mid / np.linalg.norm(x_mid, axis=-1, keepdims=True)
    u = y_mid / np.linalg.norm(y_mid, axis=-1, keepdims=True)
    t = (a[nxt] - a) / np.linalg.norm(a[nxt] - a, axis=-1, keepdims=True)
    m = (b[nxt] - b) / np.linalg.norm(b[nxt] - b, axis=-1, keepdims=True)
    v = wedge(w[:, None, :], u[None, :, :])
    xi = wedge(t[:, None, :], m[None, :, :])
    return ProductScene(y1, y2, a, b, x_mid, y_mid, w, u, t, m, v, xi)


def xi_pairing(scene: ProductScene) -> np.ndarray:
    """``|det4(v_jl, xi_jl)|`` for all nine squares (all equal to one)."""
    return np.abs(det4(scene.v, scene.xi))


@dataclass(frozen=True)
class YxYTriangulation:
    """Grid triangulation of ``Y x Y`` inside ``D`` with the nine canonical fills."""

    complex: SimplicialComplex
    n: int
    fills: tuple[tuple[ChainZ2, ...], ...]  # fills[j][l] triangulates S_j x R_l
    gammas: tuple[tuple[ChainZ2, ...], ...]  # gammas[j][l] = boundary cycle as a 1-chain
    quarter: dict = field(repr=False)  # (i, k) -> list of triangle indices

    def total_area(self) -> float:
        full = ChainZ2(2, (1 << self.complex.count(2)) - 1, self.complex.count(2))
        return self.complex.area(full)


class _VertexTable:
    def __init__(self):
        self.keys: dict = {}
        self.coords: list[np.ndarray] = []

    def get(self, key, point) -> int:
        if key not in self.keys:
            self.keys[key] = len(self.coords)
            self.coords.append(np.asarray(point, dtype=float))
        return self.keys[key]


def yxy_vertex_key(i: int, s: int, k: int, t: int, n: int):
    """Identity of grid vertex ``(s/n) a_i + (t/n) b_k``; the centre lines are shared."""
    return ((i if s else -1), s, (k if t else -1), t, n)


def quarter_square_triangles(table: _VertexTable, scene: ProductScene, i: int, k: int, n: int):
    """Triangles of the ``n x n`` grid on ``[o, a_i] x [o, b_k]``.

    Every cell is cut along the diagonal from ``(s, t)`` to ``(s+1, t+1)``.
    """
    def vid(s, t):
        return table.get(yxy_vertex_key(i, s, k, t, n), (s / n) * scene.a[i] + (t / n) * scene.b[k])

    tris = []
    for s in range(n):
        for t in range(n):
            p00, p10, p11, p01 = vid(s, t), vid(s + 1, t), vid(s + 1, t + 1), vid(s, t + 1)
            tris.append(tuple(sorted((p00, p10, p11))))
            tris.append(tuple(sorted((p00, p11, p01))))
    return tris


def gamma_edges(table: _VertexTable, scene: ProductScene, j: int, l: int, n: int):
    """Edges of the boundary cycle of ``S_j x R_l`` on the grid."""
    def vid(i, s, k, t):
        return table.get(yxy_vertex_key(i, s, k, t, n), (s / n) * scene.a[i] + (t / n) * scene.b[k])

    edges = []
    rows = (j, (j + 1) % 3)
    cols = (l, (l + 1) % 3)
    for i in rows:
        for k in cols:
            for q in range(n):
                edges.append(tuple(sorted((vid(i, n, k, q), vid(i, n, k, q + 1)))))
                edges.append(tuple(sorted((vid(i, q, k, n), vid(i, q + 1, k, n)))))
    return edges


def triangulate_yxy(n: int, scene: ProductScene | None = None) -> YxYTriangulation:
    if n < 1:
        raise ValueError("refinement must be >= 1")
    scene = scene or build_scene()
    table = _VertexTable()
    tris: list = []
    quarter_tris: dict = {}
    for i in range(3):
        for k in range(3):
            q = quarter_square_triangles(table, scene, i, k, n)
            quarter_tris[(i, k)] = q
            tris.extend(q)
    K = SimplicialComplex.from_maximal(np.array(table.coords), tris)
    quarter = {key: [K.index(s) for s in q] for key, q in quarter_tris.items()}
    fills, gammas = _canonical_chains(K, table, scene, quarter, n)
    return YxYTriangulation(K, n, fills, gammas, quarter)


def _canonical_chains(K, table, scene, quarter, n):
    fills = []
    gammas = []
    for j in range(3):
        frow, grow = [], []
        for l in range(3):
            idx = [t for i in (j, (j + 1) % 3) for k in (l, (l + 1) % 3) for t in quarter[(i, k)]]
            bits = 0
            for t in idx:
                bits |= 1 << t
            frow.append(ChainZ2(2, bits, K.count(2)))
            grow.append(K.chain(1, gamma_edges(table, scene, j, l, n)))
        fills.append(tuple(frow))
        gammas.append(tuple(grow))
    return tuple(fills), tuple(gammas)
