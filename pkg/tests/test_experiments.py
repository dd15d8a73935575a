from __future__ import annotations

import math

import numpy as np
import pytest

from caliblab.experiments import (
    BadDeformation,
    MultiplicityViolation,
    SpurCollapse,
    aligned_setup,
    assemble_competitor,
    calibration_certificate,
    canonical_competitor,
    check_deformation,
    competitor_from_text,
    competitor_to_text,
    identity_map,
    membership_kind,
    minimize_chain,
    minimize_competitor,
    perturb_chain,
    product_deformation_demo,
)
from caliblab.geometry import build_scene
from caliblab.homology import ParseError, SimplicialComplex, solve_boundary


@pytest.fixture(scope="module")
def scene():
    return build_scene()


@pytest.fixture(scope="module")
def setup(scene):
    return aligned_setup(1, scene)


def _square_and_pyramid():
    v = np.array([[0, 0, 0, 0], [1, 0, 0, 0], [1, 1, 0, 0], [0, 1, 0, 0], [0.5, 0.5, 1, 0]], dtype=float)
    pyramid = [(0, 1, 4), (1, 2, 4), (2, 3, 4), (0, 3, 4)]
    # list the pyramid first so that elimination picks the larger fill
    K = SimplicialComplex.from_maximal(v, pyramid + [(0, 1, 2), (0, 2, 3)])
    gamma = K.chain(1, [(0, 1), (1, 2), (2, 3), (0, 3)])
    return K, gamma


def test_minimize_flat_square():
    K, gamma = _square_and_pyramid()
    best = minimize_chain(K, gamma, seed=0)
    assert math.isclose(K.area(best), 1.0, abs_tol=1e-12)
    assert K.boundary(2).apply(best) == gamma
    assert minimize_chain(K, gamma, budget=0) == solve_boundary(K, gamma)


def test_minimize_generator_fill(setup):
    K = setup.grid.skeleton
    best = minimize_chain(K, setup.gammas[0][0], seed=1, moves=setup.moves)
    assert K.area(best) <= 4.0 + 1e-9
    assert K.boundary(2).apply(best) == setup.gammas[0][0]


def test_canonical_competitor(scene, setup):
    comp = canonical_competitor(setup)
    assert math.isclose(comp.area, 9.0, rel_tol=1e-12)
    cert = calibration_certificate(scene, comp)
    for v in (cert.lhs, cert.mid, cert.rhs):
        assert math.isclose(v, 27.0, rel_tol=1e-9)
    assert cert.ok and cert.patterns["block"] + cert.patterns["permutation"] == len(comp.union.support)


def test_perturbed_and_minimized_competitors(scene, setup):
    rng = np.random.default_rng(0)
    for k in range(5):
        fills = {(j, l): perturb_chain(setup.canonical[j][l], setup.moves, rng, 3) for j in range(2) for l in range(2)}
        comp = assemble_competitor(setup.grid.skeleton, setup.gammas, fills)
        assert comp.area >= 9.0 * 0.95
        assert calibration_certificate(scene, comp).ok
        mc, res = minimize_competitor(setup, seed=k)
        assert mc.area >= 9.0 * 0.95 and res.union_area == mc.area


def test_membership_kinds():
    assert membership_kind(set()) == "empty"
    assert membership_kind({(0, 0), (0, 1), (1, 0), (1, 1)}) == "block"
    assert membership_kind({(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)}) == "permutation"
    with pytest.raises(MultiplicityViolation):
        membership_kind({(0, 0)})
    with pytest.raises(MultiplicityViolation):
        membership_kind({(0, 0), (0, 1), (0, 2)})


def test_demo_identity_map():
    rep = product_deformation_demo(identity_map, R=4.0, grid=8)
    assert rep.c == 0.0
    assert rep.rel_error < 1e-9 and rep.ok


def test_demo_spur_collapse():
    rep = product_deformation_demo(R=4.0, grid=32)
    assert math.isclose(rep.c, 0.1875, rel_tol=1e-9)
    assert rep.ok and rep.rel_error <= 0.02
    assert math.isclose(rep.ramp_share, 14.4, rel_tol=0.05)
    rep8 = product_deformation_demo(R=8.0, grid=16)
    assert rep8.ramp_share < rep.ramp_share


def test_bad_deformation():
    with pytest.raises(BadDeformation):
        check_deformation(lambda x: np.asarray(x) + 0.1)
    f = SpurCollapse(np.array([0.0, 0.4]), np.array([1.0, 0.0]))
    check_deformation(f)


def test_competitor_round_trip(setup):
    comp = canonical_competitor(setup)
    fills = {(j, l): comp.fills[j][l] for j in range(2) for l in range(2)}
    text = competitor_to_text(comp.complex, comp.gammas, fills)
    K, gammas, back = competitor_from_text(text)
    assert K.digest() == comp.complex.digest()
    assert gammas == comp.gammas and back == fills


@pytest.mark.parametrize(
    "mutate",
    [
        lambda t: t.replace("caliblab-competitor 1", "competitor"),
        lambda t: t.rsplit("end", 1)[0],
        lambda t: t.replace("fill 2 2", "fill 4 2"),
        lambda t: t.replace("gamma 1 1 ", "gamma 1 1 zz"),
        lambda t: "\n".join(ln for ln in t.splitlines() if not ln.startswith("fill 1 2")),
    ],
)
def test_competitor_parse_errors(setup, mutate):
    comp = canonical_competitor(setup)
    fills = {(j, l): comp.fills[j][l] for j in range(2) for l in range(2)}
    text = competitor_to_text(comp.complex, comp.gammas, fills)
    with pytest.raises(ParseError):
        competitor_from_text(mutate(text))
