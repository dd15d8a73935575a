from __future__ import annotations

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from caliblab.exterior import (
    E12,
    E13,
    E24,
    E34,
    Plane,
    canonical_form,
    comass,
    comass_numeric,
    det4,
    hodge,
    norm2,
    plucker_residual,
    random_frames,
    wedge,
)
from caliblab.geometry import build_scene

E = np.eye(4)
vec6 = st.lists(st.floats(-5, 5, allow_nan=False), min_size=6, max_size=6).map(np.array)
vec4 = st.lists(st.floats(-5, 5, allow_nan=False), min_size=4, max_size=4).map(np.array)


def test_wedge_basis_and_antisymmetry():
    assert np.array_equal(wedge(E[0], E[1]), E12)
    u = np.array([1.0, -2.0, 0.5, 3.0])
    assert np.array_equal(wedge(u, u), np.zeros(6))


def test_wedge_components_match_definition():
    rng = np.random.default_rng(1)
    u, v = rng.standard_normal((2, 4))
    w = wedge(u, v)
    pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    assert np.allclose(w, [u[i] * v[j] - u[j] * v[i] for i, j in pairs])


def test_scene_calibration_vector_is_unit():
    s = build_scene()
    assert abs(norm2(wedge(s.w[0], s.u[0])) - 1.0) < 1e-12
    assert np.allclose(s.v[0, 0], wedge(s.w[0], s.u[0]))


def test_det4_examples():
    assert det4(E12, E34) == 1.0
    assert det4(E12, E12) == 0.0
    assert det4(E13, E24) == -1.0


def test_det4_matches_determinant():
    rng = np.random.default_rng(2)
    for _ in range(50):
        x = rng.standard_normal((4, 4))
        assert math.isclose(det4(wedge(x[0], x[1]), wedge(x[2], x[3])), np.linalg.det(x), abs_tol=1e-10)


def test_hodge_represents_det4():
    rng = np.random.default_rng(3)
    a, b = rng.standard_normal((2, 6))
    assert math.isclose(hodge(a) @ b, det4(a, b), abs_tol=1e-12)


def test_comass_examples():
    assert math.isclose(comass(E12 + E34), 1.0, abs_tol=1e-12)
    assert math.isclose(comass(E12), 1.0, abs_tol=1e-12)
    assert math.isclose(comass(2 * E12 + E34), 2.0, abs_tol=1e-12)
    assert math.isclose(comass_numeric(2 * E12 + E34, 32, 0), 2.0, abs_tol=1e-9)


def test_comass_numeric_examples():
    assert math.isclose(comass_numeric(E12 + E34, 32, 0), 1.0, abs_tol=1e-9)
    assert comass_numeric(np.zeros(6), 32, 0) == 0.0


def test_comass_numeric_deterministic():
    a = np.array([0.3, -1.2, 0.4, 2.0, 0.1, -0.7])
    assert comass_numeric(a, 8, 5) == comass_numeric(a, 8, 5)


@settings(max_examples=200, deadline=None)
@given(vec6)
def test_comass_at_most_euclidean(a):
    assert comass(a) <= norm2(a) + 1e-12


@settings(max_examples=200, deadline=None)
@given(vec4, vec4)
def test_comass_of_simple_is_euclidean(u, v):
    a = wedge(u, v)
    assert abs(plucker_residual(a)) < 1e-9 * max(1.0, norm2(a) ** 2)
    assert math.isclose(comass(a), norm2(a), rel_tol=1e-9, abs_tol=1e-9)


@settings(max_examples=200, deadline=None)
@given(vec6, vec6)
def test_comass_triangle_inequality(a, b):
    assert comass(a + b) <= comass(a) + comass(b) + 1e-12


@settings(max_examples=50, deadline=None)
@given(vec6)
def test_numeric_never_exceeds_closed_form(a):
    assert comass_numeric(a, 8, 0) <= comass(a) + 1e-9


def test_canonical_form_examples():
    cf = canonical_form(E12)
    assert (cf.lambda1, cf.lambda2) == (1.0, 0.0) or np.allclose([cf.lambda1, cf.lambda2], [1, 0])
    cf = canonical_form(2 * E12 + E34)
    assert np.allclose([cf.lambda1, cf.lambda2], [2.0, 1.0])
    z = canonical_form(np.zeros(6))
    assert z.lambda1 == 0 and z.lambda2 == 0 and np.array_equal(z.frame, np.eye(4))


@settings(max_examples=100, deadline=None)
@given(vec6)
def test_canonical_form_reconstructs_and_matches_comass(a):
    cf = canonical_form(a)
    assert np.linalg.norm(cf.reconstruct() - a) < 1e-10 * max(1.0, norm2(a))
    assert abs(cf.lambda1) >= abs(cf.lambda2) - 1e-12
    assert math.isclose(max(abs(cf.lambda1), abs(cf.lambda2)), comass(a), abs_tol=1e-9 * max(1.0, norm2(a)))
    assert np.allclose(cf.frame.T @ cf.frame, np.eye(4), atol=1e-12)


def test_plane_identified_up_to_sign():
    p = Plane.spanned_by([1, 0, 0, 0], [0, 1, 0, 0])
    q = Plane.spanned_by([0, 1, 0, 0], [1, 0, 0, 0])
    assert p.same_plane(q)
    p.check()


def test_random_frames_orthonormal():
    f = random_frames(np.random.default_rng(0), 100)
    g = np.transpose(f, (0, 2, 1)) @ f
    assert np.allclose(g, np.eye(2), atol=1e-12)
