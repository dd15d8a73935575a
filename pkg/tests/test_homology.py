from __future__ import annotations

import numpy as np
import pytest

from caliblab.geometry import build_scene, triangulate_yxy
from caliblab.homology import (
    BadBoundary,
    ChainZ2,
    NonCycle,
    NotABoundary,
    ParseError,
    SimplicialComplex,
    boundary_matrix,
    decompose,
    exactly_two_violations,
    h1_rank,
    interiors_disjoint,
    kernel_basis,
    linking_class,
    linking_obstruction,
    linking_reduce,
    mod2_degree,
    solve_boundary,
)


def grid(nx: int, ny: int, holes=()) -> SimplicialComplex:
    pts = [(x, y, 0.0, 0.0) for y in range(ny + 1) for x in range(nx + 1)]
    vid = lambda x, y: y * (nx + 1) + x  # noqa: E731
    tris = []
    for x in range(nx):
        for y in range(ny):
            if (x, y) in holes:
                continue
            a, b, c, d = vid(x, y), vid(x + 1, y), vid(x + 1, y + 1), vid(x, y + 1)
            tris += [(a, b, c), (a, c, d)]
    return SimplicialComplex.from_maximal(pts, tris)


def loop(K: SimplicialComplex, pts) -> ChainZ2:
    nx = int(K.vertices[:, 0].max())
    vid = lambda p: int(p[1] * (nx + 1) + p[0])  # noqa: E731
    edges = [tuple(sorted((vid(p), vid(q)))) for p, q in zip(pts, pts[1:] + pts[:1])]
    return K.chain(1, edges)


def test_single_triangle_boundary_column():
    K = SimplicialComplex.from_maximal(np.eye(4)[:3], [(0, 1, 2)])
    assert bin(boundary_matrix(K, 2).columns[0]).count("1") == 3


def test_boundary_of_boundary_vanishes():
    K = triangulate_yxy(2).complex
    b1, b2 = K.boundary(1), K.boundary(2)
    for col in b2.columns:
        assert b1.apply(ChainZ2(1, col, K.count(1))).is_zero()


def gf2_rank(m: np.ndarray) -> int:
    m = m.copy() % 2
    rank = 0
    for c in range(m.shape[1]):
        rows = [r for r in range(rank, m.shape[0]) if m[r, c]]
        if not rows:
            continue
        m[[rank, rows[0]]] = m[[rows[0], rank]]
        for r in range(m.shape[0]):
            if r != rank and m[r, c]:
                m[r] ^= m[rank]
        rank += 1
    return rank


def test_square_grid_rank():
    # 2x2 squares, each split in two triangles: eight independent columns
    B = boundary_matrix(grid(2, 2), 2)
    assert B.rank() == gf2_rank(B.dense().astype(np.int64)) == 8
    B1 = boundary_matrix(grid(2, 2), 1)
    assert B1.rank() == gf2_rank(B1.dense().astype(np.int64)) == 8  # 9 vertices, connected


def test_disk_and_annulus():
    disk = grid(3, 3)
    assert h1_rank(disk) == 0
    z = loop(disk, [(0, 0), (1, 0), (2, 0), (3, 0), (3, 1), (3, 2), (3, 3), (2, 3), (1, 3), (0, 3), (0, 2), (0, 1)])
    x = solve_boundary(disk, z)
    assert disk.boundary(2).apply(x) == z
    annulus = grid(3, 3, holes={(1, 1)})
    assert h1_rank(annulus) == 1
    core = loop(annulus, [(1, 1), (2, 1), (2, 2), (1, 2)])
    with pytest.raises(NotABoundary):
        solve_boundary(annulus, core)


def test_non_cycle_rejected():
    K = grid(1, 1)
    with pytest.raises(NonCycle):
        solve_boundary(K, K.chain(1, [K.simplices[1][0]]))


def test_yxy_cycles_are_boundaries():
    for n in (1, 2, 3, 4):
        T = triangulate_yxy(n)
        assert h1_rank(T.complex) == 0
        for j in range(3):
            for l in range(3):
                x = solve_boundary(T.complex, T.gammas[j][l])
                assert T.complex.boundary(2).apply(x) == T.gammas[j][l]
                assert x == T.fills[j][l]


def test_decompose_xor_table_and_canonical_count():
    T = triangulate_yxy(1)
    fills = {(j, l): T.fills[j][l] for j in range(2) for l in range(2)}
    nine = decompose(T.complex, fills, T.gammas)
    assert not exactly_two_violations(nine)
    for i in range(T.complex.count(2)):
        assert sum((nine[j][l].bits >> i) & 1 for j in range(3) for l in range(3)) == 4
    for j in range(3):
        row = [(nine[j][l].bits >> 0) & 1 for l in range(3)]
        assert row[2] == row[0] ^ row[1]


def test_decompose_rejects_bad_fill():
    T = triangulate_yxy(1)
    fills = {(j, l): T.fills[j][l] for j in range(2) for l in range(2)}
    fills[(0, 0)] = ChainZ2.zero(2, T.complex.count(2))
    with pytest.raises(BadBoundary):
        decompose(T.complex, fills, T.gammas)


def test_degree_of_canonical_fill():
    s = build_scene()
    T = triangulate_yxy(2, s)
    for j in range(3):
        for l in range(3):
            assert mod2_degree(T.complex, T.fills[j][l], s, j, l, np.zeros(2)).degree == 1
            assert mod2_degree(T.complex, ChainZ2.zero(2, T.complex.count(2)), s, j, l, np.zeros(2)).degree == 0


def test_degree_perturbs_off_edges():
    s = build_scene()
    T = triangulate_yxy(2, s)
    # the square centre is the image of the Y x Y centre, a grid vertex
    res = mod2_degree(T.complex, T.fills[0][0], s, 0, 0, s.plane_origin(0, 0))
    assert res.degree == 1 and res.attempts >= 1


def test_degree_rejects_outside_point():
    s = build_scene()
    T = triangulate_yxy(1, s)
    with pytest.raises(ValueError):
        mod2_degree(T.complex, T.fills[0][0], s, 0, 0, np.array([2.0, 0.0]))


def test_kernel_of_yxy_is_trivial():
    assert kernel_basis(triangulate_yxy(2).complex, 2) == []


def test_complex_and_chain_text_round_trip():
    T = triangulate_yxy(1)
    K = T.complex
    K2 = SimplicialComplex.from_text(K.to_text())
    assert K2.digest() == K.digest()
    c = T.fills[1][2]
    assert ChainZ2.from_text(c.to_text(K), K) == c
    with pytest.raises(ParseError):
        ChainZ2.from_text(c.to_text(K), triangulate_yxy(2).complex)
    with pytest.raises(ParseError):
        SimplicialComplex.from_text("caliblab-complex 1\nvertices x\n")


def test_interiors_disjoint_detects_overlap():
    assert interiors_disjoint(triangulate_yxy(1).complex) == []
    pts = [(0, 0, 0, 0), (1, 0, 0, 0), (0, 1, 0, 0), (0.2, 0.2, 0, 0), (2, 0.2, 0, 0), (0.2, 2, 0, 0)]
    K = SimplicialComplex.from_maximal(pts, [(0, 1, 2), (3, 4, 5)])
    bad = interiors_disjoint(K)
    assert ((0, 1, 2), (3, 4, 5)) in bad or ((3, 4, 5), (0, 1, 2)) in bad


def test_linking_reduce_examples():
    assert linking_reduce(linking_class({(1, 3): 1})) == (1, 1, 0, 0)
    assert linking_reduce(linking_class({(3, 3): 1})) == (1, 1, 1, 1)
    assert linking_reduce(linking_class({})) == (0, 0, 0, 0)


def test_linking_reduce_is_linear():
    rng = np.random.default_rng(0)
    cells = [(i, k) for i in range(1, 4) for k in range(1, 4)]
    for _ in range(50):
        a = {c: int(rng.integers(2)) for c in cells}
        b = {c: int(rng.integers(2)) for c in cells}
        ab = {c: a[c] ^ b[c] for c in cells}
        ra, rb, rab = (linking_reduce(linking_class(x)) for x in (a, b, ab))
        assert tuple(x ^ y for x, y in zip(ra, rb)) == rab


def test_linking_obstruction():
    rep = linking_obstruction()
    assert rep.verified and rep.solutions == ()
    assert (0, 0, 0, 0, 0) in rep.homogeneous_solutions
    assert all(rep.single_equation_solvable)
