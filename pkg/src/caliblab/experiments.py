"""Discrete minimality experiments, the calibration certificate and the product deformation demo."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .calib import BOUND, integrate_g
from .ffproj import GridComplex, build_grid_complex
from .geometry import ProductScene, build_scene, triangulate_yxy
from .homology import (
    BadBoundary,
    ChainZ2,
    NotABoundary,
    SimplicialComplex,
    _Reducer,
    bits_of,
    decompose,
    exactly_two_violations,
    kernel_basis,
    solve_boundary,
)

NotNullhomologous = NotABoundary
EXHAUSTIVE_DIM = 20
CERT_SLACK = 1e-9
TOL_DISC = 0.05


class MultiplicityViolation(AssertionError):
    pass


class BadDeformation(ValueError):
    pass


# -- chain minimization ------------------------------------------------------------


@dataclass
class MinimizationResult:
    chains: dict[tuple[int, int], ChainZ2]
    areas: dict[tuple[int, int], float]
    union_area: float
    iterations: int
    seed: int
    method: str


def _as_array(chain: ChainZ2) -> np.ndarray:
    out = np.zeros(chain.size, dtype=bool)
    out[chain.support] = True
    return out


def _as_chain(x: np.ndarray) -> ChainZ2:
    bits = 0
    for i in np.flatnonzero(x):
        bits |= 1 << int(i)
    return ChainZ2(2, bits, len(x))


def minimize_chain(
    K: SimplicialComplex,
    gamma: ChainZ2,
    budget: int = 2000,
    seed: int = 0,
    moves: Sequence[ChainZ2] | None = None,
) -> ChainZ2:
    """Smallest-area chain found in the coset of fills of ``gamma``.

    The coset is the elimination fill plus the span of ``moves`` (a basis of
    the 2-cycles by default).  With at most 20 independent moves the coset is
    enumerated; otherwise a seeded annealing walk over single moves runs for
    ``budget`` steps.  ``budget = 0`` returns the elimination fill.
    """
    start = solve_boundary(K, gamma)
    if budget <= 0:
        return start
    if moves is None:
        moves = kernel_basis(K, 2)
    moves = [m for m in moves if not m.is_zero()]
    if not moves:
        return start
    areas = K.triangle_areas()
    x = _as_array(start)
    B = np.array([_as_array(m) for m in moves])
    if len(moves) <= EXHAUSTIVE_DIM and _rank(moves) == len(moves):
        best = _exhaustive(x, B, areas)
    else:
        best = _anneal(x, B, areas, budget, seed)
    out = _as_chain(best)
    if K.boundary(2).apply(out) != gamma:
        raise AssertionError("minimizer produced a chain with the wrong boundary")
    return out


def _rank(moves: Sequence[ChainZ2]) -> int:
    r = _Reducer([m.bits for m in moves])
    return len(r.pivots)


def _exhaustive(x: np.ndarray, B: np.ndarray, areas: np.ndarray) -> np.ndarray:
    cur = x.copy()
    value = float(areas[cur].sum())
    best, best_value = cur.copy(), value
    for k in range(1, 2 ** len(B)):
        flip = (k & -k).bit_length() - 1  # Gray code step
        mask = B[flip]
        value += float(areas[mask] @ np.where(cur[mask], -1.0, 1.0))
        cur ^= mask
        if value < best_value - 1e-12:
            best, best_value = cur.copy(), value
    return best


def _anneal(x: np.ndarray, B: np.ndarray, areas: np.ndarray, budget: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    Bf = B.astype(float)
    cur = x.copy()
    value = float(areas[cur].sum())
    best, best_value = cur.copy(), value
    t0 = float(np.median(areas)) if len(areas) else 1.0
    for step in range(budget):
        temp = t0 * (1.0 - step / budget) ** 2 + 1e-12
        signed = areas * np.where(cur, -1.0, 1.0)
        deltas = Bf @ signed
        k = int(rng.integers(len(B)))
        if rng.random() < 0.5:  # greedy half-step keeps the walk productive
            k = int(np.argmin(deltas))
        d = deltas[k]
        if d < 0 or rng.random() < math.exp(-d / temp):
            cur ^= B[k]
            value += d
            if value < best_value - 1e-12:
                best, best_value = cur.copy(), value
    return best


def perturb_chain(chain: ChainZ2, moves: Sequence[ChainZ2], rng: np.random.Generator, count: int = 3) -> ChainZ2:
    out = chain
    for k in rng.choice(len(moves), size=min(count, len(moves)), replace=False):
        out = out + moves[int(k)]
    return out


# -- competitors on the aligned grid ------------------------------------------------


@dataclass
class Competitor:
    complex: SimplicialComplex
    fills: list[list[ChainZ2]]
    gammas: list[list[ChainZ2]]
    union: ChainZ2 = field(init=False)
    area: float = field(init=False)

    def __post_init__(self):
        bits = 0
        for row in self.fills:
            for c in row:
                bits |= c.bits
        self.union = ChainZ2(2, bits, self.complex.count(2))
        self.area = self.complex.area(self.union)


@dataclass
class AlignedSetup:
    grid: GridComplex
    gammas: list[list[ChainZ2]]
    canonical: list[list[ChainZ2]]
    moves: list[ChainZ2]


def _tri_key(pts: np.ndarray) -> tuple:
    return tuple(sorted(tuple(np.round(p, 9)) for p in pts))


def aligned_setup(n: int = 1, scene: ProductScene | None = None) -> AlignedSetup:
    """Aligned grid with the nine cycles and canonical fills carried over from ``triangulate_yxy``.

    Raises ``ValueError`` if a triangle or edge of the ``Y x Y`` triangulation
    is missing from the grid skeleton.
    """
    scene = scene or build_scene()
    grid = build_grid_complex(scene, n, aligned=True)
    G = grid.skeleton
    T = triangulate_yxy(n, scene)
    KT = T.complex
    lookup = {d: {_tri_key(G.vertices[list(s)]): i for i, s in enumerate(G.simplices[d])} for d in (1, 2)}

    def carry(chain: ChainZ2) -> ChainZ2:
        d = chain.dim
        bits = 0
        for i in chain.support:
            key = _tri_key(KT.vertices[list(KT.simplices[d][i])])
            if key not in lookup[d]:
                raise ValueError("grid skeleton does not contain the Y x Y triangulation")
            bits |= 1 << lookup[d][key]
        return ChainZ2(d, bits, G.count(d))

    gammas = [[carry(T.gammas[j][l]) for l in range(3)] for j in range(3)]
    canonical = [[carry(T.fills[j][l]) for l in range(3)] for j in range(3)]
    # boundaries of the 3-cells span the 2-cycles of the grid; they make local moves
    moves = []
    for cell in grid.poly.cells[3]:
        bits = 0
        for f in cell.facets:
            for t in grid.face_triangles[f]:
                bits ^= 1 << t
        moves.append(ChainZ2(2, bits, G.count(2)))
    return AlignedSetup(grid, gammas, canonical, moves)


def assemble_competitor(
    K: SimplicialComplex, gammas: Sequence[Sequence[ChainZ2]], fills: dict[tuple[int, int], ChainZ2]
) -> Competitor:
    nine = decompose(K, fills, gammas)
    return Competitor(K, nine, [list(r) for r in gammas])


def canonical_competitor(setup: AlignedSetup) -> Competitor:
    fills = {(j, l): setup.canonical[j][l] for j in range(2) for l in range(2)}
    return assemble_competitor(setup.grid.skeleton, setup.gammas, fills)


def minimize_competitor(setup: AlignedSetup, seed: int, budget: int = 400, kicks: int = 3) -> tuple[Competitor, MinimizationResult]:
    """Minimize the four generator fills from randomly kicked starts, then assemble."""
    K = setup.grid.skeleton
    rng = np.random.default_rng(seed)
    chains, areas = {}, {}
    for j, l in ((0, 0), (0, 1), (1, 0), (1, 1)):
        z = setup.gammas[j][l]
        start = perturb_chain(setup.canonical[j][l], setup.moves, rng, kicks)
        # anneal from the kicked fill by shifting the cycle basis origin
        best = _anneal(_as_array(start), np.array([_as_array(m) for m in setup.moves]),
                       K.triangle_areas(), budget, int(rng.integers(2**31)))
        c = _as_chain(best)
        if K.boundary(2).apply(c) != z:
            raise AssertionError("minimizer produced a chain with the wrong boundary")
        chains[(j, l)] = c
        areas[(j, l)] = K.area(c)
    comp = assemble_competitor(K, setup.gammas, chains)
    return comp, MinimizationResult(chains, areas, comp.area, budget, seed, "anneal")


# -- calibration certificate ---------------------------------------------------------


@dataclass
class CertificateReport:
    lhs: float
    mid: float
    rhs: float
    per_fill: list[list[float]]
    patterns: dict[str, int]

    @property
    def ok(self) -> bool:
        return self.lhs <= self.mid * (1 + CERT_SLACK) and self.mid <= self.rhs * (1 + CERT_SLACK)


def membership_kind(members: set[tuple[int, int]]) -> str:
    """Classify the set of fills containing a triangle."""
    if not members:
        return "empty"
    rows = {j for j, _ in members}
    cols = {l for _, l in members}
    if len(members) == 4 and len(rows) == 2 and len(cols) == 2:
        return "block"
    if len(members) == 6:
        for sigma in itertools.permutations(range(3)):
            if members == {(j, l) for j in range(3) for l in range(3) if l != sigma[j]}:
                return "permutation"
    raise MultiplicityViolation(f"membership pattern {sorted(members)} is not admissible")


def calibration_certificate(scene: ProductScene, comp: Competitor) -> CertificateReport:
    K = comp.complex
    lhs = math.fsum(scene.square_area(j, l) for j in range(3) for l in range(3))
    per = [[integrate_g(scene, j, l, K, comp.fills[j][l]) for l in range(3)] for j in range(3)]
    mid = math.fsum(v for row in per for v in row)
    rhs = BOUND * comp.area
    if exactly_two_violations(comp.fills):
        raise MultiplicityViolation("a triangle lies in one or three fills of a row or column")
    counts = {"block": 0, "permutation": 0}
    for i in comp.union.support:
        kind = membership_kind({(j, l) for j in range(3) for l in range(3) if (comp.fills[j][l].bits >> i) & 1})
        counts[kind] = counts.get(kind, 0) + 1
    return CertificateReport(lhs, mid, rhs, per, counts)


# -- product deformation demo ----------------------------------------------------------


@dataclass(frozen=True)
class SpurCollapse:
    """PL map of the plane shrinking the spur ``[p0, p0 + length * n]`` by ``factor``.

    The displacement is ``-h(s) * phi(r) * n`` with ``s, r`` the coordinates
    of ``x - p0`` along ``n`` and along the branch; ``h`` ramps linearly up
    to ``(1 - factor) * length`` and back to zero, ``phi`` is a tent of half
    width ``width``.  Both vanish outside a box inside the unit ball.
    """

    p0: np.ndarray
    n: np.ndarray
    length: float = 0.25
    factor: float = 0.25
    width: float = 0.3

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = np.array([-self.n[1], self.n[0]])
        s = (x - self.p0) @ self.n
        r = (x - self.p0) @ d
        top = (1.0 - self.factor) * self.length
        h = np.interp(s, [0.0, self.length, 2.0 * self.length], [0.0, top, 0.0], left=0.0, right=0.0)
        phi = np.clip(1.0 - np.abs(r) / self.width, 0.0, 1.0)
        return x - (h * phi)[..., None] * self.n


def identity_map(x: np.ndarray) -> np.ndarray:
    return np.asarray(x, dtype=float)


def spur_graph(scene: ProductScene | None = None, spur: float = 0.25, base: float = 0.4) -> list[np.ndarray]:
    """``Y_1`` inside the unit ball plus a spur leaving the first branch at distance ``base``."""
    scene = scene or build_scene()
    o = scene.y1.center
    segs = [np.stack([o, o + scene.y1.directions[k]]) for k in range(3)]
    d = scene.y1.directions[0]
    n = np.array([d[1], -d[0]])
    p0 = o + base * d
    segs.append(np.stack([p0, p0 + spur * n]))
    return segs


def default_spur_collapse(scene: ProductScene | None = None) -> SpurCollapse:
    scene = scene or build_scene()
    d = scene.y1.directions[0]
    return SpurCollapse(scene.y1.center + 0.4 * d, np.array([d[1], -d[0]]))


@dataclass
class DemoReport:
    R: float
    grid: int
    c: float
    lhs: float
    rhs: float
    rel_error: float
    lipschitz: float
    ramp_area: float
    ramp_bound: float
    ramp_share: float
    tolerance: float = 0.02

    @property
    def ok(self) -> bool:
        return self.rel_error <= self.tolerance and self.ramp_area <= self.ramp_bound * (1 + 1e-9)


def _polyline_length(segs: Sequence[np.ndarray], f: Callable, pieces: int = 512) -> float:
    total = []
    for a, b in segs:
        t = np.linspace(0.0, 1.0, pieces + 1)[:, None]
        img = f(a + t * (b - a))
        total.append(float(np.linalg.norm(np.diff(img, axis=0), axis=1).sum()))
    return math.fsum(total)


def _psi(y: np.ndarray, R: float) -> np.ndarray:
    return np.clip(R + 1.0 - np.linalg.norm(y, axis=-1), 0.0, 1.0)


def _product_area(f, segs1, segs2, R, grid, in_zone) -> float:
    """Area of the image of ``segs1 x segs2`` under ``phi``, midpoint rule on each product cell."""
    h = 1e-7
    total = []
    for a, b in segs1:
        for p, q in segs2:
            s = (np.arange(grid) + 0.5) / grid
            S, T = np.meshgrid(s, s, indexing="ij")
            x = a + S[..., None] * (b - a)
            y = p + T[..., None] * (q - p)

            def phi(xx, yy):
                psi = _psi(yy, R)[..., None]
                return np.concatenate([xx + psi * (f(xx) - xx), yy], axis=-1)

            base = phi(x, y)
            ds = (phi(x + h * (b - a), y) - phi(x - h * (b - a), y)) / (2 * h)
            dt = (phi(x, y + h * (q - p)) - phi(x, y - h * (q - p))) / (2 * h)
            gram = (ds * ds).sum(-1) * (dt * dt).sum(-1) - (ds * dt).sum(-1) ** 2
            jac = np.sqrt(np.maximum(gram, 0.0))
            mask = in_zone(base)
            total.append(float((jac * mask).sum()) / grid**2)
    return math.fsum(total)


def _clip_radial(segs: Sequence[np.ndarray], r0: float, r1: float) -> list[np.ndarray]:
    """Parts of segments leaving the origin radially with norm in ``[r0, r1]``."""
    out = []
    for a, b in segs:
        la, lb = np.linalg.norm(a), np.linalg.norm(b)
        u = (b - a) / np.linalg.norm(b - a)
        lo, hi = max(la, r0), min(lb, r1)
        if hi > lo:
            out.append(np.stack([u * lo, u * hi]))
    return out


def lipschitz_estimate(f: Callable, R: float, samples: int = 4000, seed: int = 0) -> float:
    """Largest operator norm of the finite-difference differential of ``phi`` at random points."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, size=(samples, 2))
    y = rng.standard_normal((samples, 2))
    y *= (rng.uniform(0, R + 1.5, samples) / np.linalg.norm(y, axis=1))[:, None]
    h = 1e-7
    best = 1.0
    for k in range(samples):
        cols = []
        for e in np.eye(4):
            p = np.concatenate([x[k], y[k]])

            def phi(z):
                psi = _psi(z[2:], R)
                return np.concatenate([z[:2] + psi * (f(z[:2]) - z[:2]), z[2:]])

            cols.append((phi(p + h * e) - phi(p - h * e)) / (2 * h))
        best = max(best, float(np.linalg.norm(np.stack(cols, 1), 2)))
    return best


def check_deformation(f: Callable, radius: float = 1.0, samples: int = 2000, seed: int = 0) -> None:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((samples, 2))
    x *= (radius * (1.0 + rng.uniform(1e-6, 2.0, samples)) / np.linalg.norm(x, axis=1))[:, None]
    moved = np.linalg.norm(f(x) - x, axis=1)
    if moved.max() > 1e-12:
        raise BadDeformation("deformation moves points outside the ball")


def product_deformation_demo(
    f: Callable | None = None,
    R: float = 4.0,
    grid: int = 32,
    scene: ProductScene | None = None,
    spur: bool = True,
) -> DemoReport:
    """Compare the two sides of the product measure identity for ``phi(x, y) = (g(x, y), y)``."""
    scene = scene or build_scene()
    f = f or default_spur_collapse(scene)
    check_deformation(f)
    segs1 = spur_graph(scene) if spur else spur_graph(scene)[:3]
    o2 = scene.y2.center
    segs2_full = [np.stack([o2, o2 + (R + 1.0) * scene.y2.directions[k]]) for k in range(3)]
    inner = _clip_radial(segs2_full, 0.0, R)
    ramp = _clip_radial(segs2_full, R, R + 1.0)
    len1 = _polyline_length(segs1, identity_map)
    len1_f = _polyline_length(segs1, f)
    c = len1 - len1_f
    len2 = math.fsum(float(np.linalg.norm(b - a)) for a, b in inner)
    len_ramp = math.fsum(float(np.linalg.norm(b - a)) for a, b in ramp)

    def in_ball(z):
        return (np.linalg.norm(z[..., :2], axis=-1) <= 1.0 + 1e-12) & (np.linalg.norm(z[..., 2:], axis=-1) <= R + 1e-12)

    def in_ramp(z):
        r = np.linalg.norm(z[..., 2:], axis=-1)
        return (np.linalg.norm(z[..., :2], axis=-1) <= 1.0 + 1e-12) & (r >= R - 1e-12) & (r <= R + 1.0 + 1e-12)

    lhs = _product_area(f, segs1, inner, R, grid, in_ball)
    rhs = len1 * len2 - c * len2
    L = lipschitz_estimate(f, R)
    ramp_area = _product_area(f, segs1, ramp, R, grid, in_ramp)
    ramp_bound = L**2 * len1 * len_ramp
    share = ramp_bound / (c * len2) if c > 0 else math.inf
    rel = abs(lhs - rhs) / max(abs(rhs), 1e-300)
    return DemoReport(R, grid, c, lhs, rhs, rel, L, ramp_area, ramp_bound, share)


# -- competitor files ------------------------------------------------------------------


def competitor_to_text(K: SimplicialComplex, gammas, fills: dict[tuple[int, int], ChainZ2]) -> str:
    """Complex block followed by the nine cycles and the four generator fills (1-based labels)."""
    lines = ["caliblab-competitor 1", K.to_text().rstrip("\n")]
    for j in range(3):
        for l in range(3):
            lines.append(f"gamma {j + 1} {l + 1} {gammas[j][l].bits:x}")
    for (j, l), c in sorted(fills.items()):
        lines.append(f"fill {j + 1} {l + 1} {c.bits:x}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def competitor_from_text(text: str) -> tuple[SimplicialComplex, list[list[ChainZ2]], dict[tuple[int, int], ChainZ2]]:
    from .homology import ParseError

    lines = text.strip().splitlines()
    if not lines or lines[0].strip() != "caliblab-competitor 1":
        raise ParseError("missing competitor header")
    try:
        stop = next(i for i, s in enumerate(lines) if s.strip() == "end" and i > 0)
    except StopIteration:
        raise ParseError("unterminated complex block") from None
    K = SimplicialComplex.from_text("\n".join(lines[1 : stop + 1]) + "\n")
    gammas: list[list[ChainZ2 | None]] = [[None] * 3 for _ in range(3)]
    fills: dict[tuple[int, int], ChainZ2] = {}
    tail = [s.split() for s in lines[stop + 1 :] if s.strip()]
    if not tail or tail[-1] != ["end"]:
        raise ParseError("missing final end")
    for parts in tail[:-1]:
        if len(parts) != 4 or parts[0] not in ("gamma", "fill"):
            raise ParseError(f"bad record {' '.join(parts)!r}")
        try:
            j, l, bits = int(parts[1]) - 1, int(parts[2]) - 1, int(parts[3], 16)
        except ValueError:
            raise ParseError(f"bad record {' '.join(parts)!r}") from None
        if not (0 <= j < 3 and 0 <= l < 3):
            raise ParseError("index out of range")
        d = 1 if parts[0] == "gamma" else 2
        if bits >> K.count(d):
            raise ParseError("mask longer than the complex")
        c = ChainZ2(d, bits, K.count(d))
        if d == 1:
            gammas[j][l] = c
        else:
            fills[(j, l)] = c
    if any(g is None for row in gammas for g in row):
        raise ParseError("all nine cycles are required")
    if sorted(fills) != [(0, 0), (0, 1), (1, 0), (1, 1)]:
        raise ParseError("fills 11, 12, 21, 22 are required")
    return K, gammas, fills  # type: ignore[return-value]
