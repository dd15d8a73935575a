"""Verification suites emitting report rows; shared by the command line driver."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import calib, cones, experiments, ffproj, geometry, homology
from .exterior import canonical_form, comass, comass_numeric, det4, plucker_residual, random_frames, wedge
from .report import Row, compare

DEFAULT_TOLS = {
    "comass": 1e-9,
    "numeric": 1e-6,
    "lemma": 1e-9,
    "pointwise": 1e-4,
    "jacobian": 1e-9,
    "area": 1e-12,
    "frame": 1e-10,
    "root": 1e-12,
    "net": 1e-12,
    "erosion": 1e-12,
    "certificate": 1e-9,
    "disc": 0.05,
    "demo": 0.02,
}


@dataclass
class Settings:
    seed: int = 0
    refine: int = 2
    tol: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLS))
    samples: int = 1000  # random inputs for the property sweeps
    minimize_seeds: int = 100

    def t(self, name: str) -> float:
        return self.tol[name]


def _haar(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((4, 4)))
    return q * np.sign(np.diag(r))


def comass_eval(alpha, s: Settings) -> list[Row]:
    a = np.asarray(alpha, dtype=float)
    cf = canonical_form(a)
    c = comass(a)
    num = comass_numeric(a, 32, s.seed)
    return [
        compare("comass.value", "closed form", c, np.linalg.norm(a), "<=", 1e-12),
        compare("comass.oracle", "multistart", num, c, "==", s.t("numeric")),
        compare("comass.canonical", "max |lambda|", max(abs(cf.lambda1), abs(cf.lambda2)), c, "==", s.t("comass")),
        compare("comass.canonical", "reconstruction", float(np.linalg.norm(cf.reconstruct() - a)), 0.0, "<=", 1e-10),
    ]


def unit_pairs(s: Settings) -> list[Row]:
    """Norm one for ``x1^x2 +- x3^x4`` in random orthonormal bases, attained on ``x3^x4``."""
    rng = np.random.default_rng(s.seed)
    worst_val, worst_att = 0.0, 0.0
    for _ in range(100):
        x = _haar(rng).T
        for sign in (1.0, -1.0):
            a = wedge(x[0], x[1]) + sign * wedge(x[2], x[3])
            worst_val = max(worst_val, abs(comass(a) - 1.0))
            # the sup is attained on x3^x4 with the orientation matching the sign
            att = max(float(det4(a, wedge(x[2], x[3]))), float(det4(a, wedge(x[3], x[2]))))
            worst_att = max(worst_att, abs(att - 1.0))
    return [
        compare("unitpair.norm", "100 bases x 2 signs", worst_val, 0.0, "<=", s.t("comass")),
        compare("unitpair.attained", "det4 with x3^x4", worst_att, 0.0, "<=", s.t("comass")),
    ]


def comass_oracle(s: Settings) -> list[Row]:
    rng = np.random.default_rng(s.seed)
    worst = 0.0
    for k in range(s.samples):
        a = rng.standard_normal(6)
        worst = max(worst, abs(comass(a) - comass_numeric(a, 32, s.seed + k)))
    return [compare("comass.oracle", f"{s.samples} random 2-vectors", worst, 0.0, "<=", s.t("numeric"))]


def sign_sums(s: Settings) -> list[Row]:
    scene = geometry.build_scene()
    blocks, perms = calib.lemma324_verify(scene)
    tol = s.t("lemma")
    rows = [
        compare("signsum.blocks", "max over 9 blocks x 16 signs", blocks.maximum, calib.BOUND, "==", tol),
        compare("signsum.blocks", "attaining rows", len(blocks.attaining), 18, "==", 0),
        compare("signsum.blocks", "attaining maps alternate", float(all(_alternates(r) for r in blocks.attaining)), 1, "==", 0),
        compare("signsum.perms", "max over 6 perms x 64 signs", perms.maximum, calib.BOUND, "<=", tol),
    ]
    for sv in calib.subcase_values(scene):
        rows.append(compare("signsum.subcase", sv.pattern, sv.value, sv.bound, "==" if sv.exact else "<=", tol))
    return rows


def _alternates(row: calib.CalibrationRow) -> bool:
    labels = row.case.split()[1]
    rows_, cols = labels.split("x")
    S = [(int(rows_[a]) - 1, int(cols[b]) - 1) for a in range(2) for b in range(2)]
    eps = [1 if ch == "+" else -1 for ch in row.eps]
    return calib.is_fully_alternating(S, eps)


def pointwise(s: Settings) -> list[Row]:
    scene = geometry.build_scene()
    rows = []
    for label, S in calib.block_index_sets() + calib.permutation_index_sets():
        sup = calib.pointwise_sum_sup(scene, S, 64, s.seed)
        rows.append(compare("pointwise.sup", label, sup, calib.max_sign_sum_norm(scene, S), "==", s.t("pointwise")))
    return rows


def jacobian(s: Settings) -> list[Row]:
    scene = geometry.build_scene()
    rng = np.random.default_rng(s.seed)
    rows = []
    for j in range(3):
        for l in range(3):
            worst = 0.0
            for _ in range(s.samples):
                tri = rng.standard_normal((3, 4))
                worst = max(worst, calib.jacobian_identity_check(scene, j, l, tri).difference)
            rows.append(compare("jacobian.identity", f"jl={j + 1}{l + 1}", worst, 0.0, "<=", s.t("jacobian")))
    return rows


def scene_measures(s: Settings) -> list[Row]:
    scene = geometry.build_scene()
    rows = []
    squares = math.fsum(scene.square_area(j, l) for j in range(3) for l in range(3))
    rows.append(compare("scene.squares", "sum of Q_jl areas", squares, 27.0, "==", s.t("area")))
    for n in range(1, 5):
        T = geometry.triangulate_yxy(n, scene)
        rows.append(compare("scene.yxy", f"area n={n}", T.total_area(), 9.0, "==", s.t("area")))
    return rows


def homology_suite(s: Settings) -> list[Row]:
    scene = geometry.build_scene()
    n = max(1, s.refine)
    T = geometry.triangulate_yxy(n, scene)
    K = T.complex
    rows = [compare("homology.h1", f"Y x Y n={n}", homology.h1_rank(K), 0, "==", 0)]
    bad = 0
    for j in range(3):
        for l in range(3):
            try:
                x = homology.solve_boundary(K, T.gammas[j][l])
                bad += K.boundary(2).apply(x) != T.gammas[j][l]
            except homology.NotABoundary:
                bad += 1
    rows.append(compare("homology.nullhomologous", "nine cycles in Y x Y", bad, 0, "==", 0))
    setup = experiments.aligned_setup(1, scene)
    G = setup.grid.skeleton
    rng = np.random.default_rng(s.seed)
    violations = 0
    for _ in range(100):
        fills = {(j, l): experiments.perturb_chain(setup.canonical[j][l], setup.moves, rng, 4) for j in range(2) for l in range(2)}
        nine = homology.decompose(G, fills, setup.gammas)
        violations += len(homology.exactly_two_violations(nine))
    rows.append(compare("homology.exactly-two", "100 random re-fills", violations, 0, "==", 0))
    h = scene.half_side
    wrong = 0
    for j in range(3):
        for l in range(3):
            ys = rng.uniform(-h, h, size=(200, 2)) * (1 - 1e-9)
            for k, y in enumerate(ys):
                wrong += homology.mod2_degree(K, T.fills[j][l], scene, j, l, y, s.seed + k).degree != 1
    rows.append(compare("homology.degree", "200 points per square, canonical fills", wrong, 0, "==", 0))
    wrong = 0
    for r in range(5):
        fills = {(j, l): experiments.perturb_chain(setup.canonical[j][l], setup.moves, rng, 4) for j in range(2) for l in range(2)}
        nine = homology.decompose(G, fills, setup.gammas)
        for j in range(3):
            for l in range(3):
                for k, y in enumerate(rng.uniform(-h, h, size=(20, 2)) * (1 - 1e-9)):
                    wrong += homology.mod2_degree(G, nine[j][l], scene, j, l, y, s.seed + k).degree != 1
    rows.append(compare("homology.degree", "5 re-fills x 20 points per square", wrong, 0, "==", 0))
    return rows


def linking(s: Settings) -> list[Row]:
    rep = homology.linking_obstruction()
    return [
        compare("linking.obstruction", "solutions among 32", len(rep.solutions), 0, "==", 0),
        compare("linking.control", "homogeneous solutions", len(rep.homogeneous_solutions), 1, ">=", 0),
        compare("linking.formulas", "reduced coefficients", float(rep.coefficient_formulas_match), 1, "==", 0),
    ]


def ff_suite(s: Settings) -> tuple[list[Row], ffproj.FFResult]:
    scene = geometry.build_scene()
    grid = ffproj.build_grid_complex(scene, s.refine, aligned=True)
    E = ffproj.bumped_yxy(scene, s.refine)
    res = ffproj.ff_project(grid, E, 32, s.seed)
    tr = res.trace
    lost = 0
    for j in range(3):
        for l in range(3):
            z = ffproj.grid_gamma(grid, j, l)
            lost += ffproj.solve_within(grid.skeleton, z, res.chain) is None
    rows = [
        compare("ff.full-face", "partly covered faces", len(ffproj.full_face_violations(grid, res)), 0, "==", 0),
        compare("ff.erosion", "worst area ratio", tr.erosion_ratio, 1.0, "<=", s.t("erosion")),
        compare("ff.homology", "cycles not bounding in output", lost, 0, "==", 0),
        compare("ff.radial", "area ratio vs K_emp R^-8", tr.radial_ratio, tr.radial_bound(), "<=", 0),
        compare("ff.k-emp", "radial 4-cells", tr.k_emp("radial4"), 0, "info", 0),
        compare("ff.k-emp", "radial 3-cells", tr.k_emp("radial3"), 0, "info", 0),
        compare("ff.roundness", "complex", tr.complex_roundness, 0, ">=", 0),
        compare("ff.area", "output", tr.area_output, 0, "info", 0),
    ]
    return rows, res


def minimize_suite(s: Settings, keep: list | None = None) -> list[Row]:
    scene = geometry.build_scene()
    setup = experiments.aligned_setup(1, scene)
    canon = experiments.canonical_competitor(setup)
    cert = experiments.calibration_certificate(scene, canon)
    floor = 9.0 * (1.0 - s.t("disc"))
    rows = [
        compare("minimize.canonical", "union area", canon.area, 9.0, "==", s.t("area") * 9),
        compare("certificate.canonical", "middle term", cert.mid, 27.0, "==", 27 * s.t("certificate")),
    ]
    smallest, worst_lo, worst_hi = math.inf, -math.inf, -math.inf
    rng = np.random.default_rng(s.seed)
    for k in range(s.minimize_seeds):
        comp, _ = experiments.minimize_competitor(setup, s.seed * 100003 + k)
        for c in (comp, _perturbed(setup, rng)):
            cert = experiments.calibration_certificate(scene, c)
            smallest = min(smallest, c.area)
            worst_lo = max(worst_lo, cert.lhs - cert.mid)
            worst_hi = max(worst_hi, cert.mid - cert.rhs)
        if keep is not None and not keep:
            keep.append(comp)
    rows += [
        compare("minimize.union", f"smallest of {2 * s.minimize_seeds} competitors", smallest, floor, ">=", 0),
        compare("certificate.lower", "27 - middle", worst_lo, 0.0, "<=", 27 * s.t("certificate")),
        compare("certificate.upper", "middle - 3 area", worst_hi, 0.0, "<=", 27 * s.t("certificate")),
    ]
    return rows


def _perturbed(setup, rng) -> experiments.Competitor:
    fills = {(j, l): experiments.perturb_chain(setup.canonical[j][l], setup.moves, rng, 3) for j in range(2) for l in range(2)}
    return experiments.assemble_competitor(setup.grid.skeleton, setup.gammas, fills)


def certificate_rows(scene, comp: experiments.Competitor, s: Settings) -> list[Row]:
    cert = experiments.calibration_certificate(scene, comp)
    slack = s.t("certificate")
    return [
        compare("certificate.lower", "27 <= middle", cert.lhs, cert.mid * (1 + slack), "<=", 0),
        compare("certificate.upper", "middle <= 3 area", cert.mid, cert.rhs * (1 + slack), "<=", 0),
        compare("certificate.union", "union area", comp.area, 9.0 * (1 - s.t("disc")), ">=", 0),
    ]


def cones_suite(s: Settings) -> list[Row]:
    net = cones.build_net()
    chk = net.checks()
    rows = [compare("net." + k, "standard net", v, 0.0, "<=", s.t("net") if k != "meet_120" else 1e-9) for k, v in chk.items()]
    rows.append(compare("net.graph", "complete bipartite", float(net.is_complete_bipartite()), 1, "==", 0))
    copl = sum(cones.coplanarity_check(net.nodes[k], net.node_arcs(k)) for k in range(6))
    rows.append(compare("net.coplanar", "nodes with coplanar arcs", copl, 6, "==", 0))
    sol = cones.solve_frame(1.0, 1.0)
    rows.append(compare("frame.root", "t2=t3=1", sol.u0, 1.0, "==", s.t("frame")))
    rows.append(compare("frame.angles", "t2=t3=1", float(np.abs(sol.theta).max()), 0.0, "<=", 1e-6))
    worst, mono, fres = 0.0, True, 0.0
    for t in np.linspace(1.05, 30.0, 40):
        sol = cones.solve_frame(t, t)
        worst = max(worst, abs(sol.u0 - cones.symmetric_root(t)))
        mono &= sol.monotone
        fres = max(fres, abs(sol.f_u0))
    rows.append(compare("frame.symmetric", "40 values of t", worst, 0.0, "<=", s.t("frame")))
    rows.append(compare("frame.monotone", "f' > 0 audit", float(mono), 1, "==", 0))
    rows.append(compare("frame.residual", "|f(u0)|", fres, 0.0, "<=", s.t("root")))
    sol = cones.solve_frame(1.3, 1.7)
    d = cones.frame_dichotomy(*sol.frames)
    rows.append(compare("frame.dichotomy", "t2=1.3 t3=1.7 symmetric", float(d is cones.Dichotomy.SYMMETRIC), 1, "==", 0))
    return rows


def demo_suite(s: Settings) -> list[Row]:
    rows = []
    ident = experiments.product_deformation_demo(f=experiments.identity_map, R=4.0)
    rows.append(compare("demo.identity", "c for identity", ident.c, 0.0, "==", 1e-12))
    rows.append(compare("demo.identity", "relative error", ident.rel_error, 0.0, "<=", s.t("demo")))
    shares = []
    for R in (4.0, 8.0):
        rep = experiments.product_deformation_demo(R=R)
        rows.append(compare("demo.spur", f"c at R={R:g}", rep.c, 0.0, ">=", 0))
        rows.append(compare("demo.spur", f"relative error R={R:g}", rep.rel_error, 0.0, "<=", s.t("demo")))
        rows.append(compare("demo.ramp", f"ramp area R={R:g}", rep.ramp_area, rep.ramp_bound, "<=", 1e-9 * rep.ramp_bound))
        shares.append(rep.ramp_share)
    rows.append(compare("demo.ramp-share", "share at 2R below share at R", shares[1], shares[0], "<=", 0))
    return rows


SUITES: dict[str, Callable[[Settings], list[Row]]] = {
    "unitpair": unit_pairs,
    "comass-oracle": comass_oracle,
    "signsum": sign_sums,
    "pointwise": pointwise,
    "jacobian": jacobian,
    "scene": scene_measures,
    "homology": homology_suite,
    "linking": linking,
    "ffproject": lambda s: ff_suite(s)[0],
    "minimize": minimize_suite,
    "cones": cones_suite,
    "demo": demo_suite,
}
