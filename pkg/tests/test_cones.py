from __future__ import annotations

import math

import numpy as np
import pytest

from caliblab.cones import (
    Arc,
    BadIncidence,
    Dichotomy,
    DichotomyViolation,
    HalfPlaneFrame,
    NoRoot,
    PoleInput,
    build_net,
    coplanarity_check,
    frame_dichotomy,
    frame_f,
    solve_frame,
    stereographic,
    symmetric_root,
)


def test_net_structure():
    net = build_net()
    assert len(net.arcs) == 9 and len(net.nodes) == 6 and net.is_complete_bipartite()
    chk = net.checks()
    assert chk["node_unit"] < 1e-12 and chk["great_circle"] < 1e-12 and chk["meet_120"] < 1e-9
    assert chk["free_ends"] == 0
    for arc in net.arcs.values():
        assert math.isclose(arc.length, math.pi / 2, abs_tol=1e-12)


def test_tangents_at_x_nodes_are_b_directions():
    net = build_net()
    for i in range(3):
        for j, arc in enumerate(net.node_arcs(i)):
            assert np.allclose(arc.tangent(), net.nodes[3 + j], atol=1e-12)


def test_stereographic_antipode_and_pole():
    pole = build_net().nodes[5]
    assert np.allclose(stereographic(-pole, pole), 0.0, atol=1e-15)
    with pytest.raises(PoleInput):
        stereographic(pole, pole)


def test_stereographic_great_circle_through_pole_is_a_line():
    rng = np.random.default_rng(0)
    pole = build_net().nodes[5]
    q = rng.standard_normal(4)
    q -= (q @ pole) * pole
    q /= np.linalg.norm(q)
    pts = np.array([stereographic(math.cos(s) * pole + math.sin(s) * q, pole) for s in np.linspace(0.3, 6.0, 25)])
    d = pts[np.argmax(np.linalg.norm(pts, axis=1))]
    d /= np.linalg.norm(d)
    off = pts - np.outer(pts @ d, d)
    assert np.abs(off).max() < 1e-9


def test_stereographic_conformal():
    rng = np.random.default_rng(1)
    pole = build_net().nodes[0]
    h = 1e-6
    worst = 0.0
    for _ in range(100):
        p = rng.standard_normal(4)
        p /= np.linalg.norm(p)
        basis = np.linalg.svd(np.stack([p, pole, *rng.standard_normal((2, 4))]))[2]
        t1 = rng.standard_normal(4)
        t1 -= (t1 @ p) * p
        t2 = rng.standard_normal(4)
        t2 -= (t2 @ p) * p

        def curve(t, s):
            x = p + s * t
            return x / np.linalg.norm(x)

        def image_tangent(t):
            return (stereographic(curve(t, h), pole) - stereographic(curve(t, -h), pole)) / (2 * h)

        a1, a2 = image_tangent(t1), image_tangent(t2)
        before = t1 @ t2 / (np.linalg.norm(t1) * np.linalg.norm(t2))
        after = a1 @ a2 / (np.linalg.norm(a1) * np.linalg.norm(a2))
        worst = max(worst, abs(before - after))
    assert worst < 1e-6


def test_coplanarity():
    net = build_net()
    assert all(coplanarity_check(net.nodes[k], net.node_arcs(k)) for k in range(6))
    rng = np.random.default_rng(2)
    node = np.array([1.0, 0, 0, 0])
    hits = 0
    for _ in range(20):
        arcs = []
        for _ in range(3):
            d = rng.standard_normal(4)
            d[0] = 0
            d /= np.linalg.norm(d)
            arcs.append(Arc(node, d))
        hits += coplanarity_check(node, arcs)
    assert hits == 0
    # three arcs at 120 degrees inside the great sphere x4 = 0
    arcs = [Arc(node, np.array([0, math.cos(a), math.sin(a), 0])) for a in (0, 2 * math.pi / 3, 4 * math.pi / 3)]
    assert coplanarity_check(node, arcs)
    with pytest.raises(BadIncidence):
        coplanarity_check(np.array([0, 1.0, 0, 0]), arcs)


def test_frame_equation_basics():
    assert float(frame_f(0.0, 1.3, 2.0)) == -1.0
    sol = solve_frame(1.0, 1.0)
    assert math.isclose(sol.u0, 1.0, abs_tol=1e-12)
    assert np.allclose(sol.theta, 0.0, atol=1e-6)
    for t in (1.5, 2.0, 5.0, 30.0):
        sol = solve_frame(t, t)
        assert abs(sol.u0 - symmetric_root(t)) < 1e-10
        assert abs(sol.f_u0) < 1e-12 and sol.monotone


def test_frame_residuals():
    sol = solve_frame(1.4, 2.1)
    T = math.sqrt(sol.u0)
    for frame in sol.frames:
        res = frame.residuals()
        assert max(res.values()) < 1e-9
        assert np.allclose(np.cos(frame.theta), [T, 1.4 * T, 2.1 * T], atol=1e-9)


def test_frame_rejects_bad_coefficients():
    with pytest.raises(NoRoot):
        solve_frame(0.5, 2.0)
    with pytest.raises(NoRoot):
        solve_frame(2.0, 1.5)


def test_dichotomy():
    sol = solve_frame(1.3, 1.7)
    a, b = sol.frames
    assert frame_dichotomy(a, b) is Dichotomy.SYMMETRIC
    assert frame_dichotomy(a, a) is Dichotomy.PARALLEL
    s1 = solve_frame(1.0, 1.0)
    assert frame_dichotomy(*s1.frames) is Dichotomy.PARALLEL
    odd = HalfPlaneFrame(a.w, a.v, a.t2, a.t3, (a.theta[0], b.theta[1], a.theta[2]))
    with pytest.raises(DichotomyViolation):
        frame_dichotomy(a, odd)
