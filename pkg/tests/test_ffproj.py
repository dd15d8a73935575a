from __future__ import annotations

import math

import numpy as np
import pytest

from caliblab.exterior import wedge
from caliblab.ffproj import (
    CenterOnSet,
    DegenerateCell,
    Piece,
    build_grid_complex,
    bumped_yxy,
    choose_center,
    ff_project,
    full_face_violations,
    grid_gamma,
    polygon_area,
    project_pieces,
    radial_map_point,
    radial_project,
    roundness,
    solve_within,
    total_area,
    yxy_chain,
)
from caliblab.geometry import build_scene


@pytest.fixture(scope="module")
def grid1():
    return build_grid_complex(build_scene(), 1, aligned=True)


@pytest.fixture(scope="module")
def grid2():
    return build_grid_complex(build_scene(), 2, aligned=True)


def test_roundness_examples():
    assert roundness([[0.0, 0, 0, 0]]) == 1.0
    tri = np.array([[0, 0, 0, 0], [1, 0, 0, 0], [0.5, math.sqrt(3) / 2, 0, 0]])
    assert math.isclose(roundness(tri), 0.5, abs_tol=1e-12)
    sq = np.array([[0, 0, 1, 1], [1, 0, 1, 1], [1, 1, 1, 1], [0, 1, 1, 1]], dtype=float)
    assert math.isclose(roundness(sq), math.sqrt(2) / 2, abs_tol=1e-12)
    # three collinear points span a segment, which is perfectly round
    assert roundness([[0, 0, 0, 0], [1, 0, 0, 0], [2, 0, 0, 0]]) == 1.0
    with pytest.raises(DegenerateCell):
        roundness([[0, 0, 0, 0], [0, 0, 0, 0]])


def test_face_roundness_matches_closed_forms(grid2):
    K = grid2.poly
    for k in range(len(K.cells[2])):
        pts = K.points(2, k)
        if len(pts) == 3:
            a, b, c = (np.linalg.norm(pts[i] - pts[(i + 1) % 3]) for i in range(3))
            area = polygon_area(pts)
            # smallest enclosing ball: half the longest side when the triangle is not acute
            x, y, z = sorted((a, b, c))
            outer = z / 2 if x * x + y * y <= z * z else a * b * c / (4 * area)
            expect = (2 * area / (a + b + c)) / outer
        else:
            c, basis = K.basis(2, k)
            x = (pts - c) @ basis.T
            ext = np.sort(np.linalg.svd(x - x.mean(0))[1])
            # sides of the rectangle from its vertex spread
            s1, s2 = ext / math.sqrt(len(pts)) * 2
            expect = (min(s1, s2) / 2) / (math.hypot(s1, s2) / 2)
        assert math.isclose(K.roundness(2, k), expect, rel_tol=1e-9)


def test_cell_counts_and_volume(grid2):
    K = grid2.poly
    assert [len(K.cells[d]) for d in (4, 3, 2)] == [144, 504, 681]
    assert grid2.skeleton.count(2) == 1122
    vol = math.fsum(K.volume(4, i) for i in range(len(K.cells[4])))
    assert math.isclose(vol, 1.6875, rel_tol=1e-12)
    assert math.isclose(K.complex_roundness(), 0.18947, abs_tol=1e-5)


def test_alignment(grid1):
    assert grid1.yxy_faces
    z = yxy_chain(grid1)
    assert math.isclose(grid1.skeleton.area(z), 9.0, rel_tol=1e-12)
    other = build_grid_complex(build_scene(), 1, aligned=False)
    assert other.yxy_faces == []


def test_set_on_skeleton_is_unchanged(grid1):
    z = yxy_chain(grid1)
    tris = grid1.triangles()[z.support]
    res = ff_project(grid1, tris, seed=0)
    assert res.chain == z
    assert math.isclose(res.trace.radial_ratio, 1.0, rel_tol=1e-12)
    assert not full_face_violations(grid1, res)


def _random_interior_triangle(K, rng):
    i = int(rng.integers(len(K.cells[4])))
    pts = K.points(4, i)
    w = rng.dirichlet(np.ones(len(pts)), size=3)
    return i, w @ pts


def test_radial_area_matches_monte_carlo(grid1):
    K = grid1.poly
    rng = np.random.default_rng(3)
    for _ in range(3):
        i, tri = _random_interior_triangle(K, rng)
        center = K.points(4, i).mean(0)
        exact = total_area(radial_project(K, 4, i, center, [tri]))
        # integrate the Jacobian of the pointwise map over the triangle
        n = 40000
        u = rng.random((n, 2))
        flip = u.sum(1) > 1
        u[flip] = 1 - u[flip]
        e1, e2 = tri[1] - tri[0], tri[2] - tri[0]
        y = tri[0] + u[:, :1] * e1 + u[:, 1:] * e2
        h = 1e-7
        d1 = (radial_map_point(K, 4, i, center, y + h * e1) - radial_map_point(K, 4, i, center, y - h * e1)) / (2 * h)
        d2 = (radial_map_point(K, 4, i, center, y + h * e2) - radial_map_point(K, 4, i, center, y - h * e2)) / (2 * h)
        jac = np.linalg.norm(wedge(d1, d2), axis=-1) / np.linalg.norm(wedge(e1, e2))
        mc = float(jac.mean()) * polygon_area(tri)
        assert abs(exact - mc) <= 0.01 * exact


def test_near_facet_triangle_keeps_its_area(grid1):
    K = grid1.poly
    fd = K.facet_data(4, 0)[0]
    f = K.cells[4][0].facets[0]
    _, bf = K.basis(3, f)
    p = fd.point - 1e-7 * fd.normal
    tri = np.stack([p, p + 1e-3 * bf[0], p + 1e-3 * bf[1]])
    center = K.points(4, 0).mean(0)
    out = radial_project(K, 4, 0, center, [tri])
    assert math.isclose(total_area(out) / polygon_area(tri), 1.0, rel_tol=1e-3)


def test_empty_set(grid1):
    K = grid1.poly
    ch = choose_center(K, 4, 0, [])
    assert ch.ratio == 0.0
    res = ff_project(grid1, np.zeros((0, 3, 4)))
    assert res.trace.radial_ratio == 0.0 and res.chain.is_zero()


def test_center_selection(grid1):
    K = grid1.poly
    rng = np.random.default_rng(5)
    i, tri = _random_interior_triangle(K, rng)
    pieces = [Piece(tri, 0, (4, i))]
    a = choose_center(K, 4, i, pieces, trials=32, seed=7)
    b = choose_center(K, 4, i, pieces, trials=32, seed=7)
    assert np.array_equal(a.center, b.center) and a.area_out == b.area_out
    assert a.best_ratio < a.worst_ratio
    with pytest.raises(ValueError):
        choose_center(K, 4, i, pieces, trials=0)


def test_center_on_set_raises(grid1):
    K = grid1.poly
    rng = np.random.default_rng(6)
    i, tri = _random_interior_triangle(K, rng)
    with pytest.raises(CenterOnSet):
        project_pieces(K, 4, i, tri.mean(0), [Piece(tri, 0, (4, i))])


def test_input_outside_support(grid1):
    tri = np.array([[5.0, 5, 5, 5], [6, 5, 5, 5], [5, 6, 5, 5]])
    with pytest.raises(ValueError):
        ff_project(grid1, [tri])


def test_bumped_set_projects_to_faces(grid1):
    scene = build_scene()
    E = bumped_yxy(scene, 1)
    res = ff_project(grid1, E, seed=1)
    assert not full_face_violations(grid1, res)
    assert res.trace.erosion_ratio <= 1.0 + 1e-6
    assert res.trace.radial_ratio <= res.trace.radial_bound()
    for j in range(3):
        for l in range(3):
            assert solve_within(grid1.skeleton, grid_gamma(grid1, j, l), res.chain) is not None


def test_trace_csv(grid1):
    res = ff_project(grid1, bumped_yxy(build_scene(), 1), seed=0)
    lines = res.trace.to_csv().splitlines()
    assert lines[0] == "stage,dim,cell,roundness,center,area_in,area_out,ratio"
    assert {ln.split(",")[0] for ln in lines[1:]} >= {"radial4", "erosion"}
