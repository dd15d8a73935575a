"""Calibration functionals ``g_jl`` and the finite sign-sum enumerations."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .exterior import Plane, ascend_planes, comass, det4, hodge, random_frames, wedge
from .geometry import ProductScene
from .homology import ChainZ2, SimplicialComplex, bits_of

BOUND = 3.0
SLACK = 1e-9

Index = tuple[int, int]


class DegenerateTriangle(ValueError):
    pass


def _unit_beta(P) -> np.ndarray:
    beta = P.beta if isinstance(P, Plane) else np.asarray(P, dtype=float)
    n = np.linalg.norm(beta, axis=-1, keepdims=True)
    return beta / n


def g(scene: ProductScene, j: int, l: int, P) -> float | np.ndarray:
    """``|det4(v_jl, beta)|`` for a plane (or stacked unit simple 2-vectors)."""
    out = np.abs(det4(scene.v[j, l], _unit_beta(P)))
    return float(out) if np.ndim(out) == 0 else out


def triangle_beta(tri) -> tuple[np.ndarray, float]:
    """Unit 2-vector of a triangle's plane and the triangle's area."""
    tri = np.asarray(tri, dtype=float)
    w = wedge(tri[..., 1, :] - tri[..., 0, :], tri[..., 2, :] - tri[..., 0, :])
    n = np.linalg.norm(w, axis=-1)
    return w / np.maximum(n, 1e-300)[..., None], 0.5 * n


@dataclass(frozen=True)
class JacobianCheck:
    g_value: float
    area_ratio: float
    difference: float


def jacobian_identity_check(scene: ProductScene, j: int, l: int, tri) -> JacobianCheck:
    """Compare ``g_jl`` of a triangle's plane with the area ratio of its projection."""
    tri = np.asarray(tri, dtype=float)
    beta, area = triangle_beta(tri)
    scale = max(np.linalg.norm(tri[1] - tri[0]), np.linalg.norm(tri[2] - tri[0]), 1e-300)
    if area <= 1e-14 * scale * scale:
        raise DegenerateTriangle("triangle has no area")
    q = scene.plane_coords(tri, j, l)
    e1, e2 = q[1] - q[0], q[2] - q[0]
    ratio = 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0]) / area
    gv = g(scene, j, l, beta)
    return JacobianCheck(gv, ratio, abs(gv - ratio))


def integrate_g(scene: ProductScene, j: int, l: int, K: SimplicialComplex, chain: ChainZ2) -> float:
    """Sum over the triangles of the chain of ``area * g_jl(plane)``."""
    idx = chain.support
    if not idx:
        return 0.0
    tri = K.vertices[np.array([K.simplices[2][i] for i in idx])]
    beta, area = triangle_beta(tri)
    return math.fsum(area * np.abs(det4(scene.v[j, l], beta)))


# -- sign sums -----------------------------------------------------------------


def sign_sum(scene: ProductScene, S: Sequence[Index], eps: Sequence[int] | Mapping[Index, int]) -> np.ndarray:
    if isinstance(eps, Mapping):
        eps = [eps[s] for s in S]
    if len(eps) != len(S) or any(e not in (1, -1) for e in eps):
        raise ValueError("sign assignment must give +1 or -1 on every index")
    return sum((e * scene.v[j, l] for e, (j, l) in zip(eps, S)), np.zeros(6))


def sign_sum_norm(scene: ProductScene, S: Sequence[Index], eps) -> float:
    return comass(sign_sum(scene, S, eps))


def eps_from_bits(k: int, n: int) -> tuple[int, ...]:
    """Sign map number ``k``; the most significant of ``n`` bits is the first index, 1 means -1."""
    return tuple(-1 if (k >> (n - 1 - i)) & 1 else 1 for i in range(n))


def eps_label(eps: Sequence[int]) -> str:
    return "".join("+" if e > 0 else "-" for e in eps)


@dataclass(frozen=True)
class CalibrationRow:
    case: str
    eps: str
    value: float
    bound: float

    @property
    def margin(self) -> float:
        return self.bound - self.value


@dataclass
class CalibrationReport:
    label: str
    rows: list[CalibrationRow]
    bound: float = BOUND
    attaining: list[CalibrationRow] = field(default_factory=list)

    @property
    def maximum(self) -> float:
        return max(r.value for r in self.rows)

    @property
    def ok(self) -> bool:
        return self.maximum <= self.bound + SLACK


def block_index_sets() -> list[tuple[str, list[Index]]]:
    out = []
    for j1, j2 in itertools.combinations(range(3), 2):
        for l1, l2 in itertools.combinations(range(3), 2):
            S = [(j1, l1), (j1, l2), (j2, l1), (j2, l2)]
            out.append((f"block {j1 + 1}{j2 + 1}x{l1 + 1}{l2 + 1}", S))
    return out


def permutation_index_sets() -> list[tuple[str, list[Index]]]:
    out = []
    for sigma in itertools.permutations(range(3)):
        S = [(j, l) for j in range(3) for l in range(3) if l != sigma[j]]
        out.append(("perm " + "".join(str(s + 1) for s in sigma), S))
    return out


def is_fully_alternating(S: Sequence[Index], eps: Sequence[int]) -> bool:
    """Adjacent indices (same row or same column) always carry opposite signs."""
    for (a, ea), (b, eb) in itertools.combinations(zip(S, eps), 2):
        if (a[0] == b[0] or a[1] == b[1]) and ea == eb:
            return False
    return True


def enumerate_case(scene: ProductScene, label: str, S: Sequence[Index]) -> list[CalibrationRow]:
    n = len(S)
    rows = []
    for k in range(2**n):
        eps = eps_from_bits(k, n)
        rows.append(CalibrationRow(label, eps_label(eps), sign_sum_norm(scene, S, eps), BOUND))
    return rows


def lemma324_verify(scene: ProductScene) -> tuple[CalibrationReport, CalibrationReport]:
    """Enumerate every sign map on every 2x2 block and every permutation complement."""
    reports = []
    for label, sets in (("blocks", block_index_sets()), ("permutations", permutation_index_sets())):
        rows: list[CalibrationRow] = []
        for case, S in sets:
            rows.extend(enumerate_case(scene, case, S))
        top = max(r.value for r in rows)
        attaining = [r for r in rows if r.value >= top - SLACK]
        reports.append(CalibrationReport(label, rows, BOUND, attaining))
    return reports[0], reports[1]


def _parse_pattern(pattern: str) -> list[tuple[float, int, int]]:
    """Parse ``"2v11-v23+v32"`` into (coefficient, j, l) with 0-based indices."""
    terms = []
    s = pattern.replace(" ", "")
    pos = 0
    while pos < len(s):
        sign = 1.0
        if s[pos] in "+-":
            sign = -1.0 if s[pos] == "-" else 1.0
            pos += 1
        k = s.index("v", pos)
        coef = float(s[pos:k]) if k > pos else 1.0
        j, l = int(s[k + 1]) - 1, int(s[k + 2]) - 1
        terms.append((sign * coef, j, l))
        pos = k + 3
    return terms


def pattern_vector(scene: ProductScene, pattern: str) -> np.ndarray:
    return sum((c * scene.v[j, l] for c, j, l in _parse_pattern(pattern)), np.zeros(6))


def pattern_norm(scene: ProductScene, pattern: str) -> float:
    return comass(pattern_vector(scene, pattern))


SQ3 = math.sqrt(3.0)

# sub-case patterns of the permutation case with their stated bounds; "exact"
# marks the two values that are identities rather than upper bounds
SUBCASES: tuple[tuple[str, float, bool], ...] = (
    ("v12-v13+v23-v21+v31-v32", 1.5 * SQ3, True),
    ("2v11+v23+v32", 2.5, False),
    ("2v11-v23-v32", 1.5, True),
    ("2v11+v23-v32", 2.0 + SQ3 / 2.0, False),
    ("2v21-v23-v32", SQ3 + SQ3 / 2.0, False),
    ("2v21-v23+v32", 2.0 + SQ3 / 2.0, False),
)


@dataclass(frozen=True)
class SubcaseValue:
    pattern: str
    value: float
    bound: float
    exact: bool

    @property
    def ok(self) -> bool:
        if self.exact:
            return abs(self.value - self.bound) <= SLACK
        return self.value <= self.bound + SLACK


def subcase_values(scene: ProductScene) -> list[SubcaseValue]:
    return [SubcaseValue(p, pattern_norm(scene, p), b, ex) for p, b, ex in SUBCASES]


# -- pointwise supremum --------------------------------------------------------


def pointwise_objective(scene: ProductScene, S: Sequence[Index], beta: np.ndarray) -> np.ndarray:
    vs = np.array([scene.v[j, l] for j, l in S])
    return np.abs(det4(vs[None, :, :], beta[:, None, :])).sum(-1)


def pointwise_sum_sup(
    scene: ProductScene,
    S: Sequence[Index],
    starts: int = 64,
    seed: int = 0,
    rounds: int = 30,
) -> float:
    """Numerical sup over planes of ``sum_{S} g_jl``.

    Active-set ascent: freeze the signs of the determinants at the current
    plane, maximize the resulting linear functional, then re-sign, until the
    signs stop changing.
    """
    if not S:
        return 0.0
    rng = np.random.default_rng(seed)
    frames = random_frames(rng, starts)
    vs = np.array([scene.v[j, l] for j, l in S])
    best = -np.inf
    prev = None
    for _ in range(rounds):
        beta = wedge(frames[:, :, 0], frames[:, :, 1])
        d = det4(vs[None, :, :], beta[:, None, :])
        signs = np.where(d >= 0, 1.0, -1.0)
        best = max(best, float(np.abs(d).sum(-1).max()))
        if prev is not None and np.array_equal(signs, prev):
            break
        prev = signs
        s = hodge(signs @ vs)
        _, frames = ascend_planes(s, frames)
    beta = wedge(frames[:, :, 0], frames[:, :, 1])
    return max(best, float(pointwise_objective(scene, S, beta).max()))


def max_sign_sum_norm(scene: ProductScene, S: Sequence[Index]) -> float:
    n = len(S)
    return max(sign_sum_norm(scene, S, eps_from_bits(k, n)) for k in range(2**n))
