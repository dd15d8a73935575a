"""Command line driver: ``caliblab <subcommand> [--seed N] [--tol.NAME=V] [--refine N] [--out PATH] [--format csv|json]``."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field

from . import checks, experiments, ffproj, geometry, homology
from .report import FORMATS, Report, atomic_write, compare, error_document

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_PARSE = 0, 1, 2, 3
STOCHASTIC = {"comass", "lemma41", "homology", "ffproject", "minimize", "report-all"}
SEED_ENV = "CALIBLAB_SEED"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    seed: int | None = None
    tolerances: dict[str, float] = field(default_factory=lambda: dict(checks.DEFAULT_TOLS))
    refine: int = 2
    out: str | None = None
    fmt: str = "csv"
    args: argparse.Namespace | None = None

    def validate(self) -> None:
        for k, v in self.tolerances.items():
            if not v > 0:
                raise ConfigError(f"tolerance {k} must be positive")
        if self.refine < 1:
            raise ConfigError("--refine must be >= 1")
        if self.fmt not in FORMATS:
            raise ConfigError(f"--format must be one of {', '.join(FORMATS)}")
        if self.needs_seed() and self.seed is None:
            raise ConfigError(f"{self.command} needs --seed or {SEED_ENV}")

    def needs_seed(self) -> bool:
        if self.command == "homology" and self.args is not None:
            return self.args.action == "check" and not self.args.complex_file
        return self.command in STOCHASTIC

    def settings(self) -> checks.Settings:
        return checks.Settings(seed=self.seed or 0, refine=self.refine, tol=dict(self.tolerances))

    def echo(self) -> dict:
        return {"seed": self.seed, "refine": self.refine, "format": self.fmt, "tol": dict(sorted(self.tolerances.items()))}


def _split_tolerances(argv: list[str]) -> tuple[list[str], dict[str, float]]:
    rest, tols = [], {}
    it = iter(argv)
    for a in it:
        if a.startswith("--tol."):
            name, _, value = a[len("--tol.") :].partition("=")
            if not _:
                value = next(it, "")
            if name not in checks.DEFAULT_TOLS:
                raise ConfigError(f"unknown tolerance {name!r}")
            try:
                tols[name] = float(value)
            except ValueError:
                raise ConfigError(f"tolerance {name} is not a number") from None
        else:
            rest.append(a)
    return rest, tols


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--refine", type=int, default=2)
    common.add_argument("--out")
    common.add_argument("--format", dest="fmt", default="csv", choices=FORMATS)
    p = argparse.ArgumentParser(prog="caliblab", description="Calibration and minimality checks for Y x Y in R^4.")
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("comass", parents=[common], help="evaluate the norm of a 2-vector")
    c.add_argument("alpha", nargs=6, type=float, metavar="c", help="coefficients c12 c13 c14 c23 c24 c34")
    sub.add_parser("lemma41", parents=[common], help="unit norm of x1^x2 +- x3^x4")
    sub.add_parser("lemma324", parents=[common], help="sign-sum enumerations and sub-case values")
    c = sub.add_parser("calibrate", parents=[common], help="calibration certificate of a competitor file")
    c.add_argument("competitor")
    c = sub.add_parser("homology", parents=[common], help="homology checks")
    c.add_argument("action", choices=("check", "solve", "decompose"))
    c.add_argument("--complex", dest="complex_file")
    c.add_argument("--chain", dest="chain_file")
    c.add_argument("--competitor")
    c.add_argument("--fill-out")
    c = sub.add_parser("ffproject", parents=[common], help="Federer-Fleming projection of a bumped Y x Y")
    c.add_argument("--trace")
    c = sub.add_parser("minimize", parents=[common], help="seeded minimization over fills")
    c.add_argument("--seeds", type=int, default=100)
    c.add_argument("--save-competitor")
    sub.add_parser("demo-product", parents=[common], help="product deformation measure identity")
    sub.add_parser("cones", parents=[common], help="spherical net and half-plane frames")
    sub.add_parser("report-all", parents=[common], help="every check")
    return p


def parse_config(argv: list[str]) -> RunConfig:
    rest, tols = _split_tolerances(argv)
    ns = build_parser().parse_args(rest)
    seed = ns.seed
    if seed is None and os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} is not an integer") from None
    tolerances = dict(checks.DEFAULT_TOLS)
    tolerances.update(tols)
    cfg = RunConfig(ns.command, seed, tolerances, ns.refine, ns.out, ns.fmt, ns)
    cfg.validate()
    return cfg


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def run(cfg: RunConfig) -> tuple[Report, dict[str, str]]:
    """Execute a subcommand; returns the report and any side files (path -> text)."""
    s = cfg.settings()
    rep = Report(cfg.command, cfg.echo())
    side: dict[str, str] = {}
    a = cfg.args
    cmd = cfg.command
    if cmd == "comass":
        rep.extend(checks.comass_eval(a.alpha, s))
    elif cmd == "lemma41":
        rep.extend(checks.unit_pairs(s))
    elif cmd == "lemma324":
        rep.extend(checks.sign_sums(s))
    elif cmd == "calibrate":
        K, gammas, fills = experiments.competitor_from_text(_read(a.competitor))
        comp = experiments.assemble_competitor(K, gammas, fills)
        rep.extend(checks.certificate_rows(geometry.build_scene(), comp, s))
    elif cmd == "homology":
        _homology(a, s, rep, side)
    elif cmd == "ffproject":
        rows, res = checks.ff_suite(s)
        rep.extend(rows)
        if a.trace:
            side[a.trace] = res.trace.to_csv()
    elif cmd == "minimize":
        s.minimize_seeds = a.seeds
        keep: list = []
        rep.extend(checks.minimize_suite(s, keep))
        if a.save_competitor and keep:
            comp = keep[0]
            fills = {(j, l): comp.fills[j][l] for j in range(2) for l in range(2)}
            side[a.save_competitor] = experiments.competitor_to_text(comp.complex, comp.gammas, fills)
    elif cmd == "demo-product":
        rep.extend(checks.demo_suite(s))
    elif cmd == "cones":
        rep.extend(checks.cones_suite(s))
    elif cmd == "report-all":
        for name, fn in checks.SUITES.items():
            rep.extend(fn(s))
    else:  # pragma: no cover - argparse restricts the choices
        raise ConfigError(f"unknown command {cmd}")
    return rep, side


def _homology(a, s: checks.Settings, rep: Report, side: dict[str, str]) -> None:
    if a.action == "check":
        if a.complex_file:
            K = homology.SimplicialComplex.from_text(_read(a.complex_file))
            dd = 0
            if K.dim >= 2:
                b1, b2 = K.boundary(1), K.boundary(2)
                dd = sum(1 for col in b2.columns if not b1.apply(homology.ChainZ2(1, col, K.count(1))).is_zero())
            rep.add("homology.dd", "boundary of boundary", dd, 0, "==", 0)
            rep.add("homology.h1", "rank", homology.h1_rank(K), 0, "info", 0)
            rep.add("homology.disjoint", "overlapping pairs", len(homology.interiors_disjoint(K)), 0, "==", 0)
        else:
            rep.extend(checks.homology_suite(s))
            rep.extend(checks.linking(s))
    elif a.action == "solve":
        if not (a.complex_file and a.chain_file):
            raise ConfigError("solve needs --complex and --chain")
        K = homology.SimplicialComplex.from_text(_read(a.complex_file))
        z = homology.ChainZ2.from_text(_read(a.chain_file), K)
        try:
            x = homology.solve_boundary(K, z)
        except homology.NotABoundary:
            rep.add("homology.solve", "cycle bounds", 0, 1, "==", 0)
            return
        rep.add("homology.solve", "cycle bounds", 1, 1, "==", 0)
        rep.add("homology.solve", "fill area", K.area(x), 0, "info", 0)
        if a.fill_out:
            side[a.fill_out] = x.to_text(K)
    else:
        if not a.competitor:
            raise ConfigError("decompose needs --competitor")
        K, gammas, fills = experiments.competitor_from_text(_read(a.competitor))
        nine = homology.decompose(K, fills, gammas)
        rep.add("homology.exactly-two", "violations", len(homology.exactly_two_violations(nine)), 0, "==", 0)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    fmt = "json" if "json" in argv else "csv"
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        sys.stderr.write(error_document(argv[0] if argv else "", "config", str(exc), fmt))
        return EXIT_CONFIG
    try:
        rep, side = run(cfg)
    except homology.ParseError as exc:
        sys.stderr.write(error_document(cfg.command, "parse", str(exc), cfg.fmt))
        return EXIT_PARSE
    except (OSError, ConfigError) as exc:
        sys.stderr.write(error_document(cfg.command, "input", str(exc), cfg.fmt))
        return EXIT_CONFIG
    except (homology.BadBoundary, homology.NonCycle, experiments.MultiplicityViolation) as exc:
        sys.stderr.write(error_document(cfg.command, type(exc).__name__, str(exc), cfg.fmt))
        return EXIT_FAIL
    text = rep.render(cfg.fmt)
    for path, body in sorted(side.items()):
        atomic_write(path, body)
    if cfg.out:
        atomic_write(cfg.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if rep.ok else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
