"""The spherical net of Y x Y, stereographic projection and the half-plane frame equations."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .geometry import ProductScene, build_scene


class PoleInput(ValueError):
    pass


class BadIncidence(ValueError):
    pass


class NoRoot(ValueError):
    pass


class DichotomyViolation(Exception):
    pass


@dataclass(frozen=True)
class Arc:
    """Great-circle arc from ``start`` towards ``end`` (unit vectors, not antipodal)."""

    start: np.ndarray
    end: np.ndarray

    @property
    def length(self) -> float:
        return float(np.arccos(np.clip(self.start @ self.end, -1.0, 1.0)))

    def tangent(self, at_end: bool = False) -> np.ndarray:
        p, q = (self.end, self.start) if at_end else (self.start, self.end)
        d = q - (q @ p) * p
        return d / np.linalg.norm(d)

    def point(self, s: float) -> np.ndarray:
        """Point at arclength ``s`` from the start."""
        return math.cos(s) * self.start + math.sin(s) * self.tangent()


@dataclass(frozen=True)
class SphericalNet:
    nodes: np.ndarray  # (6, 4): x_1..x_3 then y_1..y_3
    arcs: dict  # (i, j) -> Arc from x_i to y_j, 0-based

    def node_arcs(self, node: int) -> list[Arc]:
        """The arcs at a node, each oriented to start there."""
        if node < 3:
            return [self.arcs[(node, j)] for j in range(3)]
        j = node - 3
        return [Arc(self.arcs[(i, j)].end, self.arcs[(i, j)].start) for i in range(3)]

    def degree(self, node: int) -> int:
        return sum(1 for (i, j) in self.arcs if i == node or j + 3 == node)

    def is_complete_bipartite(self) -> bool:
        return sorted(self.arcs) == [(i, j) for i in range(3) for j in range(3)]

    def checks(self, samples: int = 16) -> dict[str, float]:
        """Residuals of the net conditions: unit nodes, great-circle arcs, 120 degree meets."""
        node_res = float(np.abs(np.linalg.norm(self.nodes, axis=1) - 1.0).max())
        circle_res = 0.0
        for arc in self.arcs.values():
            basis = np.stack([arc.start, arc.tangent()])
            for s in np.linspace(0.0, arc.length, samples):
                p = arc.point(s)
                off = p - basis.T @ (basis @ p)
                circle_res = max(circle_res, abs(np.linalg.norm(p) - 1.0), float(np.linalg.norm(off)))
            circle_res = max(circle_res, float(np.linalg.norm(arc.point(arc.length) - arc.end)))
        angle_res = 0.0
        for node in range(6):
            tangents = [a.tangent() for a in self.node_arcs(node)]
            for t1, t2 in itertools.combinations(tangents, 2):
                angle_res = max(angle_res, abs(float(t1 @ t2) + 0.5))
        degrees = [self.degree(k) for k in range(6)]
        return {
            "node_unit": node_res,
            "great_circle": circle_res,
            "meet_120": angle_res,
            "free_ends": float(sum(d != 3 for d in degrees)),
        }


def build_net(scene: ProductScene | None = None) -> SphericalNet:
    scene = scene or build_scene()
    x = scene.a / np.linalg.norm(scene.a, axis=1, keepdims=True)
    y = scene.b / np.linalg.norm(scene.b, axis=1, keepdims=True)
    arcs = {(i, j): Arc(x[i], y[j]) for i in range(3) for j in range(3)}
    return SphericalNet(np.concatenate([x, y]), arcs)


def _complement_basis(pole: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(pole.reshape(4, 1), mode="complete")
    q = q * np.sign(r[0, 0])
    return q[:, 1:].T


def stereographic(p, pole) -> np.ndarray:
    """Project from ``pole`` onto the tangent 3-plane at ``-pole``; ``-pole`` goes to the origin."""
    p = np.asarray(p, dtype=float)
    pole = np.asarray(pole, dtype=float)
    denom = 1.0 - p @ pole
    if np.linalg.norm(p - pole) < 1e-12 or denom <= 0:
        raise PoleInput("cannot project the pole")
    x = pole + 2.0 * (p - pole) / denom
    return _complement_basis(pole) @ (x + pole)


def coplanarity_check(node, arcs, tol: float = 1e-9) -> bool:
    """True when the node and the arc tangents there span a 3-dimensional subspace."""
    node = np.asarray(node, dtype=float)
    tangents = []
    for arc in arcs:
        if np.linalg.norm(arc.start - node) > 1e-9:
            raise BadIncidence("arc does not start at the node")
        tangents.append(arc.tangent())
    m = np.stack([node] + tangents)
    sv = np.linalg.svd(m, compute_uv=False)
    return int(np.sum(sv > tol * sv[0])) == 3


# -- half-plane frames -------------------------------------------------------


def frame_f(u, t2: float, t3: float):
    u = np.asarray(u, dtype=float)
    root = lambda z: np.sqrt(np.maximum(z, 0.0))  # noqa: E731
    return root(1.0 - u) - root(1.0 - u * t2 * t2) - root(1.0 - u * t3 * t3)


def frame_fprime(u, t2: float, t3: float):
    u = np.asarray(u, dtype=float)
    return 0.5 * (
        -1.0 / np.sqrt(1.0 - u)
        + t2 * t2 / np.sqrt(1.0 - u * t2 * t2)
        + t3 * t3 / np.sqrt(1.0 - u * t3 * t3)
    )


def v_frame(t2: float, t3: float) -> tuple[np.ndarray, np.ndarray]:
    """Unit ``v_1, v_2, v_3`` with ``v_1 + t2 v_2 + t3 v_3 = 0`` and a unit ``w`` normal to them."""
    x = (t3 * t3 - 1.0 - t2 * t2) / 2.0
    y2 = t2 * t2 - x * x
    if y2 < -1e-12:
        raise ValueError("no unit vectors realise these coefficients")
    y = math.sqrt(max(y2, 0.0))
    v1 = np.array([1.0, 0.0, 0.0])
    v2 = np.array([x, y, 0.0]) / t2
    v3 = -(v1 + t2 * v2) / t3
    return np.stack([v1, v2, v3]), np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class HalfPlaneFrame:
    w: np.ndarray
    v: np.ndarray  # (3, 3)
    t2: float
    t3: float
    theta: tuple[float, float, float]

    @property
    def q(self) -> np.ndarray:
        th = np.array(self.theta)
        return np.cos(th)[:, None] * self.v + np.sin(th)[:, None] * self.w

    def residuals(self) -> dict[str, float]:
        th = np.array(self.theta)
        return {
            "linear": float(np.linalg.norm(self.v[0] + self.t2 * self.v[1] + self.t3 * self.v[2])),
            "sin_sum": abs(float(np.sin(th).sum())),
            "cos_sum": float(np.linalg.norm(np.cos(th) @ self.v)),
            "q_unit": float(np.abs(np.linalg.norm(self.q, axis=1) - 1.0).max()),
            "q_sum": float(np.linalg.norm(self.q.sum(0))),
        }


@dataclass(frozen=True)
class FrameSolution:
    t2: float
    t3: float
    u0: float
    f_u0: float
    theta: tuple[tuple[float, float, float], tuple[float, float, float]]
    monotone: bool
    frames: tuple[HalfPlaneFrame, HalfPlaneFrame]


def solve_frame(t2: float, t3: float, lo: float = 1e-14, audit_points: int = 1000) -> FrameSolution:
    """Root of ``f(u) = 0`` on ``(lo, 1/t3^2]`` by bisection, with the two angle triples."""
    if not (1.0 <= t2 <= t3):
        raise NoRoot("need 1 <= t2 <= t3 (negative coefficients give no admissible angles)")
    hi = 1.0 / (t3 * t3)
    f_lo, f_hi = float(frame_f(lo, t2, t3)), float(frame_f(hi, t2, t3))
    if f_lo > 0 or f_hi < 0:
        raise NoRoot("f has no sign change on the bracket")
    a, b = lo, hi
    if f_hi == 0.0:
        a = b = hi
    while b - a > 4e-16 * max(1.0, b):
        mid = 0.5 * (a + b)
        if mid in (a, b):
            break
        if frame_f(mid, t2, t3) < 0:
            a = mid
        else:
            b = mid
    u0 = b
    grid = hi * (np.arange(audit_points) + 0.5) / audit_points
    monotone = bool(np.all(frame_fprime(grid, t2, t3) > 0))
    s1 = math.asin(math.sqrt(max(0.0, 1.0 - u0)))
    s2 = math.asin(math.sqrt(max(0.0, 1.0 - u0 * t2 * t2)))
    s3 = math.asin(math.sqrt(max(0.0, 1.0 - u0 * t3 * t3)))
    th_a = (s1, -s2, -s3)
    th_b = (-s1, s2, s3)
    v, w = v_frame(t2, t3)
    frames = (HalfPlaneFrame(w, v, t2, t3, th_a), HalfPlaneFrame(w, v, t2, t3, th_b))
    return FrameSolution(t2, t3, u0, float(frame_f(u0, t2, t3)), (th_a, th_b), monotone, frames)


def symmetric_root(t: float) -> float:
    """Closed form of the root when ``t2 = t3 = t``."""
    return 3.0 / (4.0 * t * t - 1.0)


class Dichotomy(Enum):
    PARALLEL = "parallel"
    SYMMETRIC = "symmetric"


def frame_dichotomy(a: HalfPlaneFrame, b: HalfPlaneFrame, tol: float = 1e-9) -> Dichotomy:
    """Parallel if the angles agree, symmetric if they are opposite; parallel wins a tie."""
    if (
        abs(a.t2 - b.t2) > tol
        or abs(a.t3 - b.t3) > tol
        or np.abs(a.v - b.v).max() > tol
        or np.abs(a.w - b.w).max() > tol
    ):
        raise ValueError("frames do not share the same half-planes")
    ta, tb = np.array(a.theta), np.array(b.theta)
    if np.all(np.abs(ta - tb) <= tol):
        return Dichotomy.PARALLEL
    if np.all(np.abs(ta + tb) <= tol):
        return Dichotomy.SYMMETRIC
    raise DichotomyViolation("angle triples are neither equal nor opposite")
