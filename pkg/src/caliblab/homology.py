"""Mod-2 simplicial homology on embedded complexes.

Chains over GF(2) are stored as Python integers used as bitsets: bit ``i`` of
a ``d``-chain is the coefficient of the ``i``-th ``d``-simplex of the complex.
Linear algebra is done by column elimination keyed on the lowest set bit,
which keeps pivot choices deterministic.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linprog

from .exterior import wedge


class NotABoundary(Exception):
    """The cycle has no filling chain in the complex."""


class NonCycle(ValueError):
    """A chain passed as a cycle has nonzero boundary."""


class BadBoundary(ValueError):
    """A filling chain does not have the prescribed boundary."""


class Degenerate(Exception):
    """No generic perturbation of the query point was found."""


class ParseError(ValueError):
    pass


Simplex = tuple[int, ...]


def _lowbit(x: int) -> int:
    return x & -x


def bits_of(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def mask_of(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


class SimplicialComplex:
    """Embedded simplicial complex with simplices listed per dimension.

    Simplices are sorted vertex tuples.  The order of simplices within a
    dimension is the order given; it fixes the bit layout of chains.
    """

    def __init__(self, vertices, simplices: Mapping[int, Sequence[Simplex]]):
        self.vertices = np.array(vertices, dtype=float)
        if self.vertices.ndim != 2 or not np.all(np.isfinite(self.vertices)):
            raise ValueError("vertices must be a finite 2-d array")
        top = max(simplices) if simplices else 0
        self.simplices: dict[int, list[Simplex]] = {}
        self._index: dict[int, dict[Simplex, int]] = {}
        for d in range(top + 1):
            items = [tuple(int(v) for v in s) for s in simplices.get(d, [])]
            index: dict[Simplex, int] = {}
            for s in items:
                if len(s) != d + 1 or list(s) != sorted(set(s)):
                    raise ValueError(f"simplex {s} is not a sorted {d}-simplex")
                if s in index:
                    raise ValueError(f"duplicate simplex {s}")
                index[s] = len(index)
            self.simplices[d] = items
            self._index[d] = index
        n = len(self.vertices)
        if self.simplices.get(0) and any(s[0] >= n for s in self.simplices[0]):
            raise ValueError("vertex index out of range")
        for d in range(1, top + 1):
            for s in self.simplices[d]:
                for f in faces(s):
                    if f not in self._index[d - 1]:
                        raise ValueError(f"face {f} of {s} missing")
        self._boundary: dict[int, BoundaryMatrix] = {}
        self._reducer: dict[int, _Reducer] = {}
        self._areas: np.ndarray | None = None

    @classmethod
    def from_maximal(cls, vertices, maximal: Iterable[Sequence[int]]) -> "SimplicialComplex":
        """Close a list of simplices under faces.

        Within each dimension the given simplices come first, in order, and
        faces follow in order of first appearance.
        """
        given = [tuple(sorted(int(v) for v in s)) for s in maximal]
        by_dim: dict[int, dict[Simplex, None]] = {}
        for s in given:
            by_dim.setdefault(len(s) - 1, {})[s] = None
        top = max(by_dim) if by_dim else 0
        for d in range(top, 0, -1):
            for s in list(by_dim.get(d, {})):
                for f in faces(s):
                    by_dim.setdefault(d - 1, {})[f] = None
        n = len(np.asarray(vertices))
        by_dim[0] = {**by_dim.get(0, {}), **{(i,): None for i in range(n)}}
        return cls(vertices, {d: list(v) for d, v in by_dim.items()})

    @property
    def dim(self) -> int:
        return max((d for d, s in self.simplices.items() if s), default=0)

    def count(self, d: int) -> int:
        return len(self.simplices.get(d, []))

    def index(self, simplex: Sequence[int]) -> int:
        s = tuple(sorted(simplex))
        return self._index[len(s) - 1][s]

    def has(self, simplex: Sequence[int]) -> bool:
        s = tuple(sorted(simplex))
        return s in self._index.get(len(s) - 1, {})

    def chain(self, d: int, simplices: Iterable[Sequence[int]]) -> "ChainZ2":
        bits = 0
        for s in simplices:
            bits ^= 1 << self.index(s)
        return ChainZ2(d, bits, self.count(d))

    def boundary(self, d: int) -> "BoundaryMatrix":
        if d not in self._boundary:
            self._boundary[d] = boundary_matrix(self, d)
        return self._boundary[d]

    def reducer(self, d: int) -> "_Reducer":
        if d not in self._reducer:
            self._reducer[d] = _Reducer(self.boundary(d).columns)
        return self._reducer[d]

    def triangle_areas(self) -> np.ndarray:
        if self._areas is None:
            tri = np.array(self.simplices.get(2, []), dtype=int).reshape(-1, 3)
            p = self.vertices[tri]
            if p.shape[-1] == 4:
                w = wedge(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
                self._areas = 0.5 * np.linalg.norm(w, axis=-1)
            else:
                e1 = p[:, 1] - p[:, 0]
                e2 = p[:, 2] - p[:, 0]
                g = (e1 * e1).sum(-1) * (e2 * e2).sum(-1) - (e1 * e2).sum(-1) ** 2
                self._areas = 0.5 * np.sqrt(np.maximum(g, 0.0))
        return self._areas

    def area(self, chain: "ChainZ2") -> float:
        """Total area of the support of a 2-chain."""
        if chain.dim != 2:
            raise ValueError("area is defined for 2-chains")
        areas = self.triangle_areas()
        return math.fsum(areas[i] for i in bits_of(chain.bits))

    def to_text(self) -> str:
        lines = ["caliblab-complex 1", f"vertices {len(self.vertices)}"]
        lines += [" ".join("%.17g" % c for c in row) for row in self.vertices]
        for d in sorted(self.simplices):
            if d == 0:
                continue
            lines.append(f"simplices {d} {len(self.simplices[d])}")
            lines += [" ".join(str(i) for i in s) for s in self.simplices[d]]
        lines.append("end")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SimplicialComplex":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        try:
            if lines[0] != "caliblab-complex 1":
                raise ParseError("bad complex header")
            tag, n = lines[1].split()
            if tag != "vertices":
                raise ParseError("expected vertex block")
            n = int(n)
            verts = [[float(x) for x in lines[2 + i].split()] for i in range(n)]
            pos = 2 + n
            simplices: dict[int, list[Simplex]] = {0: [(i,) for i in range(n)]}
            while lines[pos] != "end":
                tag, d, m = lines[pos].split()
                if tag != "simplices":
                    raise ParseError(f"unexpected line {lines[pos]!r}")
                d, m = int(d), int(m)
                simplices[d] = [tuple(int(x) for x in lines[pos + 1 + i].split()) for i in range(m)]
                pos += 1 + m
            if pos != len(lines) - 1:
                raise ParseError("trailing content after end")
            if any(len(v) != len(verts[0]) for v in verts):
                raise ParseError("ragged vertex coordinates")
            return cls(np.array(verts), simplices)
        except ParseError:
            raise
        except (IndexError, ValueError) as exc:
            raise ParseError(f"malformed complex: {exc}") from exc

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()


def faces(s: Simplex) -> list[Simplex]:
    return [s[:i] + s[i + 1 :] for i in range(len(s))] if len(s) > 1 else []


@dataclass(frozen=True)
class ChainZ2:
    dim: int
    bits: int
    size: int

    def __post_init__(self):
        if self.bits < 0 or self.bits >> self.size:
            raise ValueError("chain mask does not fit the complex")

    def __add__(self, other: "ChainZ2") -> "ChainZ2":
        if (self.dim, self.size) != (other.dim, other.size):
            raise ValueError("chains live in different groups")
        return ChainZ2(self.dim, self.bits ^ other.bits, self.size)

    @classmethod
    def zero(cls, dim: int, size: int) -> "ChainZ2":
        return cls(dim, 0, size)

    @property
    def support(self) -> list[int]:
        return bits_of(self.bits)

    def __len__(self) -> int:
        return bin(self.bits).count("1")

    def is_zero(self) -> bool:
        return self.bits == 0

    def to_text(self, K: SimplicialComplex) -> str:
        return "\n".join(
            [
                "caliblab-chain 1",
                f"complex {K.digest()}",
                f"dim {self.dim}",
                f"size {self.size}",
                f"bits {self.bits:x}",
                "end",
            ]
        ) + "\n"

    @classmethod
    def from_text(cls, text: str, K: SimplicialComplex | None = None) -> "ChainZ2":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        try:
            if lines[0] != "caliblab-chain 1" or lines[-1] != "end" or len(lines) != 6:
                raise ParseError("bad chain layout")
            fields = dict(ln.split(None, 1) for ln in lines[1:5])
            digest = fields["complex"]
            dim = int(fields["dim"])
            size = int(fields["size"])
            bits = int(fields["bits"], 16)
        except ParseError:
            raise
        except (IndexError, KeyError, ValueError) as exc:
            raise ParseError(f"malformed chain: {exc}") from exc
        if K is not None:
            if digest != K.digest():
                raise ParseError("chain refers to a different complex")
            if size != K.count(dim):
                raise ParseError("chain size does not match complex")
        try:
            return cls(dim, bits, size)
        except ValueError as exc:
            raise ParseError(str(exc)) from exc


@dataclass
class BoundaryMatrix:
    """GF(2) matrix of the boundary map; column ``i`` is a bitset of faces."""

    dim: int
    n_rows: int
    columns: list[int]

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    def apply(self, chain: ChainZ2) -> ChainZ2:
        if chain.dim != self.dim or chain.size != self.n_cols:
            raise ValueError("chain does not match boundary map")
        out = 0
        for i in bits_of(chain.bits):
            out ^= self.columns[i]
        return ChainZ2(self.dim - 1, out, self.n_rows)

    def rank(self) -> int:
        return len(_Reducer(self.columns).pivots)

    def dense(self) -> np.ndarray:
        m = np.zeros((self.n_rows, self.n_cols), dtype=np.uint8)
        for j, col in enumerate(self.columns):
            m[bits_of(col), j] = 1
        return m


def boundary_matrix(K: SimplicialComplex, d: int) -> BoundaryMatrix:
    if d < 1:
        raise ValueError("boundary is defined for d >= 1")
    rows = K._index.get(d - 1, {})
    cols = []
    for s in K.simplices.get(d, []):
        col = 0
        for f in faces(s):
            col |= 1 << rows[f]
        cols.append(col)
    return BoundaryMatrix(d, len(rows), cols)


class _Reducer:
    """Echelon basis of a column space with the column combination of each pivot."""

    def __init__(self, columns: Sequence[int]):
        self.pivots: dict[int, tuple[int, int]] = {}
        self.kernel: list[int] = []
        for i, col in enumerate(columns):
            vec, combo = self.reduce(col, 1 << i)
            if vec:
                self.pivots[_lowbit(vec)] = (vec, combo)
            else:
                self.kernel.append(combo)

    def reduce(self, vec: int, combo: int = 0) -> tuple[int, int]:
        while vec:
            p = self.pivots.get(_lowbit(vec))
            if p is None:
                break
            vec ^= p[0]
            combo ^= p[1]
        return vec, combo


def solve_boundary(K: SimplicialComplex, z: ChainZ2) -> ChainZ2:
    """A chain ``x`` with boundary ``z``, by elimination over GF(2)."""
    d = z.dim + 1
    if z.size != K.count(z.dim):
        raise ValueError("chain does not match complex")
    if z.dim >= 1 and not K.boundary(z.dim).apply(z).is_zero():
        raise NonCycle("input chain is not a cycle")
    rest, combo = K.reducer(d).reduce(z.bits)
    if rest:
        raise NotABoundary("cycle is not a boundary in this complex")
    x = ChainZ2(d, combo, K.count(d))
    assert K.boundary(d).apply(x) == z
    return x


def kernel_basis(K: SimplicialComplex, d: int) -> list[ChainZ2]:
    return [ChainZ2(d, m, K.count(d)) for m in K.reducer(d).kernel]


def h1_rank(K: SimplicialComplex) -> int:
    """Rank of H_1(K; Z/2) as dim ker d1 - rank d2."""
    ker1 = K.count(1) - len(K.reducer(1).pivots) if K.count(1) else 0
    rank2 = len(K.reducer(2).pivots) if K.count(2) else 0
    return ker1 - rank2


def interiors_disjoint(K: SimplicialComplex, tol: float = 1e-9) -> list[tuple[Simplex, Simplex]]:
    """Pairs of distinct simplices whose relative interiors meet.

    For each pair a small LP maximizes the smallest barycentric weight of a
    common point; the interiors meet iff that weight can be positive.
    Intended for desk-scale complexes only.
    """
    all_s = [s for d in sorted(K.simplices) for s in K.simplices[d]]
    lo = [K.vertices[list(s)].min(0) for s in all_s]
    hi = [K.vertices[list(s)].max(0) for s in all_s]
    bad = []
    for a, b in itertools.combinations(range(len(all_s)), 2):
        if np.any(lo[a] > hi[b] + tol) or np.any(lo[b] > hi[a] + tol):
            continue
        sa, sb = all_s[a], all_s[b]
        pa, pb = K.vertices[list(sa)], K.vertices[list(sb)]
        na, nb = len(sa), len(sb)
        # variables: lambda (na), mu (nb), t ; maximize t
        c = np.zeros(na + nb + 1)
        c[-1] = -1.0
        a_eq = np.zeros((pa.shape[1] + 2, na + nb + 1))
        a_eq[: pa.shape[1], :na] = pa.T
        a_eq[: pa.shape[1], na : na + nb] = -pb.T
        a_eq[-2, :na] = 1.0
        a_eq[-1, na : na + nb] = 1.0
        b_eq = np.zeros(pa.shape[1] + 2)
        b_eq[-2:] = 1.0
        a_ub = np.zeros((na + nb, na + nb + 1))
        a_ub[:, : na + nb] = -np.eye(na + nb)
        a_ub[:, -1] = 1.0
        res = linprog(c, A_ub=a_ub, b_ub=np.zeros(na + nb), A_eq=a_eq, b_eq=b_eq,
                      bounds=[(0, None)] * (na + nb) + [(None, 1.0)], method="highs")
        if res.status == 0 and -res.fun > tol:
            bad.append((sa, sb))
    return bad


# -- decomposition of fills ------------------------------------------------


def decompose(
    K: SimplicialComplex,
    fills: Mapping[tuple[int, int], ChainZ2],
    gammas: Sequence[Sequence[ChainZ2]],
) -> list[list[ChainZ2]]:
    """Extend fills of the four cycles with indices in ``{0,1}^2`` to all nine.

    The third row and column are sums of the first two, so that across any
    row or column each triangle lies in zero or exactly two of the fills.
    """
    for key in ((0, 0), (0, 1), (1, 0), (1, 1)):
        j, l = key
        if K.boundary(2).apply(fills[key]) != gammas[j][l]:
            raise BadBoundary(f"fill {j + 1}{l + 1} does not bound its cycle")
    out = [[fills.get((j, l)) for l in range(3)] for j in range(3)]
    for j in range(2):
        out[j][2] = out[j][0] + out[j][1]
    for l in range(2):
        out[2][l] = out[0][l] + out[1][l]
    out[2][2] = out[2][0] + out[2][1]
    for j in range(3):
        for l in range(3):
            if K.boundary(2).apply(out[j][l]) != gammas[j][l]:
                raise BadBoundary(f"derived fill {j + 1}{l + 1} does not bound its cycle")
    return out


def exactly_two_violations(chains: Sequence[Sequence[ChainZ2]]) -> list[tuple[str, int, int]]:
    """Triangles that lie in the union of a row (or column) but not in exactly two members."""
    bad = []
    for kind in ("row", "col"):
        for r in range(3):
            group = [chains[r][k] if kind == "row" else chains[k][r] for k in range(3)]
            union = group[0].bits | group[1].bits | group[2].bits
            for i in bits_of(union):
                if sum((g.bits >> i) & 1 for g in group) != 2:
                    bad.append((kind, r, i))
    return bad


# -- mod 2 degree -------------------------------------------------------------


@dataclass(frozen=True)
class DegreeResult:
    degree: int
    point: np.ndarray = field(repr=False)  # query point actually used (plane coordinates)
    perturbation: np.ndarray = field(repr=False)
    attempts: int = 1

    def __int__(self) -> int:
        return self.degree


def _orient(a: np.ndarray, b: np.ndarray, p: np.ndarray) -> np.ndarray:
    return (b[..., 0] - a[..., 0]) * (p[1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (p[0] - a[..., 0])


def _seg_dist(a: np.ndarray, b: np.ndarray, p: np.ndarray) -> np.ndarray:
    ab = b - a
    ll = np.maximum((ab * ab).sum(-1), 1e-300)
    t = np.clip(((p - a) * ab).sum(-1) / ll, 0.0, 1.0)
    q = a + t[..., None] * ab
    return np.linalg.norm(q - p, axis=-1)


def planar_degree(
    tri2d: np.ndarray,
    y: np.ndarray,
    scale: float,
    seed: int = 0,
    max_attempts: int = 64,
) -> DegreeResult:
    """Parity of projected triangles containing ``y``, perturbing ``y`` off edges.

    ``tri2d`` has shape ``(m, 3, 2)``.  A perturbation of size ``1e-7 * scale``
    in a seeded random direction is applied while ``y`` lies within
    ``1e-10 * scale`` of a projected edge.
    """
    y = np.asarray(y, dtype=float)
    rng = np.random.default_rng(seed)
    a, b, c = tri2d[:, 0], tri2d[:, 1], tri2d[:, 2]
    e1, e2 = b - a, c - a
    area2 = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    nondeg = np.abs(area2) > 1e-14 * scale * scale
    delta = np.zeros(2)
    for attempt in range(1, max_attempts + 1):
        p = y + delta
        if len(tri2d) == 0:
            return DegreeResult(0, p, delta, attempt)
        d = np.minimum(np.minimum(_seg_dist(a, b, p), _seg_dist(b, c, p)), _seg_dist(c, a, p))
        if np.all(d > 1e-10 * scale):
            o1 = _orient(a, b, p)
            o2 = _orient(b, c, p)
            o3 = _orient(c, a, p)
            inside = ((o1 > 0) & (o2 > 0) & (o3 > 0)) | ((o1 < 0) & (o2 < 0) & (o3 < 0))
            return DegreeResult(int(np.count_nonzero(inside & nondeg) % 2), p, delta, attempt)
        direction = rng.standard_normal(2)
        delta = 1e-7 * scale * direction / np.linalg.norm(direction)
    raise Degenerate("could not move the query point off the projected edges")


def mod2_degree(K: SimplicialComplex, gamma: ChainZ2, scene, j: int, l: int, y, seed: int = 0) -> DegreeResult:
    """Mod-2 degree of the projection of a 2-chain onto the square ``Q_jl`` at ``y``.

    ``y`` is either a point of R^4 on the plane of ``Q_jl`` or its two plane
    coordinates; it must lie in the open square.  Indices are 0-based.
    """
    y = np.asarray(y, dtype=float)
    if y.shape == (4,):
        y = scene.plane_coords(y, j, l)
    h = scene.half_side
    if np.any(np.abs(y) >= h):
        raise ValueError("query point is not interior to the square")
    if gamma.dim != 2 or gamma.size != K.count(2):
        raise ValueError("expected a 2-chain of the complex")
    tri = np.array([K.simplices[2][i] for i in gamma.support], dtype=int).reshape(-1, 3)
    tri2d = scene.plane_coords(K.vertices[tri], j, l)
    return planar_degree(tri2d, y, scale=2.0 * math.sqrt(2.0) * h, seed=seed)


# -- linking classes -----------------------------------------------------------


LinkingClass = tuple[tuple[int, int, int], tuple[int, int, int], tuple[int, int, int]]


def linking_class(coeffs: Mapping[tuple[int, int], int]) -> LinkingClass:
    """Build a 3x3 GF(2) class from 1-based index pairs, e.g. ``{(1, 3): 1}``."""
    m = [[0, 0, 0], [0, 0, 0], [0, 0, 0]]
    for (i, k), v in coeffs.items():
        m[i - 1][k - 1] ^= v & 1
    return tuple(tuple(r) for r in m)  # type: ignore[return-value]


def linking_reduce(c) -> tuple[int, int, int, int]:
    """Coordinates over the basis ``s11, s12, s21, s22`` modulo the row/column relations.

    The relations give ``s_i3 = s_i1 + s_i2`` and ``s_3k = s_1k + s_2k``.
    """
    c = [[int(c[i][k]) & 1 for k in range(3)] for i in range(3)]
    return tuple(
        (c[i][k] + c[i][2] + c[2][k] + c[2][2]) & 1 for i in range(2) for k in range(2)
    )  # type: ignore[return-value]


DELTA_LABELS = ("13", "23", "33", "31", "32")


@dataclass(frozen=True)
class ObstructionReport:
    verified: bool
    solutions: tuple[tuple[int, ...], ...]
    homogeneous_solutions: tuple[tuple[int, ...], ...]
    single_equation_solvable: tuple[bool, bool, bool, bool]
    coefficient_formulas_match: bool


def _expected_coefficients(d: dict[str, int], constant: int) -> tuple[int, int, int, int]:
    return (
        (constant + d["13"] + d["31"] + d["33"]) & 1,
        (d["13"] + d["32"] + d["33"]) & 1,
        (d["23"] + d["31"] + d["33"]) & 1,
        (d["23"] + d["32"] + d["33"]) & 1,
    )


def linking_obstruction() -> ObstructionReport:
    """Enumerate every ``delta`` in GF(2)^5 and look for a vanishing reduced class.

    The class is ``s11 + sum delta_ik s_ik`` over the five circles around the
    quarter-planes outside the chosen block.
    """
    solutions = []
    homogeneous = []
    single = [False, False, False, False]
    match = True
    for deltas in itertools.product((0, 1), repeat=5):
        d = dict(zip(DELTA_LABELS, deltas))
        for constant, sink in ((1, solutions), (0, homogeneous)):
            coeffs = {(1, 1): constant}
            for label, v in d.items():
                coeffs[(int(label[0]), int(label[1]))] = v
            reduced = linking_reduce(linking_class(coeffs))
            if reduced != _expected_coefficients(d, constant):
                match = False
            if not any(reduced):
                sink.append(deltas)
            if constant == 1:
                for k in range(4):
                    single[k] |= reduced[k] == 0
    return ObstructionReport(
        verified=not solutions and match,
        solutions=tuple(solutions),
        homogeneous_solutions=tuple(homogeneous),
        single_equation_solvable=tuple(single),  # type: ignore[arg-type]
        coefficient_formulas_match=match,
    )
