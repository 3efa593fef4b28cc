"""
Command line front end.

Reports are JSON on stdout with a top-level "schema" key and sorted keys;
diagnostics go to stderr through logging. Exit codes: 0 on success, 1 when
a verify suite has failing checks, 2 on usage and domain errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import flows, stability, structures
from .config import (
    DEFAULT_ATOL,
    DEFAULT_METHOD,
    DEFAULT_RTOL,
    FORMS_DIR,
    MAX_STEP,
    RK4_STEP,
    SCHEMA_VERSION,
    seed_from_env,
)
from .errors import NotStableError, StableFormsError
from .exterior import Form, form_to_literal, load_form, top_pair, wedge
from .integrators import IntegratorConfig, Trajectory, integrate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

NORMAL_FORMS = {
    "g2": "normal-g2",
    "g2-star": "normal-g2-star",
    "su3-rho": "normal-su3-rho",
    "su3-rho-hat": "normal-su3-rho-hat",
    "su3-omega": "normal-su3-omega",
}

SUITES = ("euler", "volumes", "ast", "hodge", "k-scalar", "all")

# Cases exercised by the Euler identity check
EULER_CASES = (
    (4, 2),
    (6, 2),
    (8, 2),
    (6, 4),
    (8, 6),
    (6, 3),
    (7, 3),
    (7, 4),
    (8, 3),
    (8, 5),
)


def _emit(report: Dict) -> None:
    report = dict(report, schema=SCHEMA_VERSION)
    sys.stdout.write(json.dumps(report, sort_keys=True, indent=2) + "\n")


def _resolve_form_path(path: str) -> str:
    """Fall back to the packaged normal forms for bare file names."""
    if os.path.exists(path):
        return path
    packaged = os.path.join(FORMS_DIR, os.path.basename(path))
    if os.path.exists(packaged):
        logger.debug("Using packaged form %s", packaged)
        return packaged
    return path


def _read_form(path: str) -> Form:
    return load_form(_resolve_form_path(path))


def _matrix(m: np.ndarray) -> List[List[float]]:
    return [[float(v) for v in row] for row in m]


# Form commands


def cmd_classify(args: argparse.Namespace) -> int:
    rho = _read_form(args.form)
    result = stability.volume(rho)
    _emit(
        {
            "class": result.stability_class.value,
            "phi": result.phi,
            "dim": rho.dim,
            "degree": rho.degree,
        }
    )
    return EXIT_OK


def cmd_volume(args: argparse.Namespace) -> int:
    rho = _read_form(args.form)
    result = stability.require_stable(rho)
    _emit({"class": result.stability_class.value, "phi": result.phi})
    return EXIT_OK


def cmd_dual(args: argparse.Namespace) -> int:
    rho = _read_form(args.form)
    if args.numeric:
        dual = stability.dual_form_numeric(rho)
    else:
        dual = stability.dual_form_closed(rho)
    _emit(
        {
            "method": "numeric" if args.numeric else "closed",
            "dual": form_to_literal(dual),
            "euler_pairing": top_pair(dual, rho),
        }
    )
    return EXIT_OK


def cmd_metric(args: argparse.Namespace) -> int:
    rho = _read_form(args.form)
    if (rho.dim, rho.degree) == (6, 3):
        acs = stability.acs_from_rho(rho)
        _emit({"acs": _matrix(acs.matrix)})
        return EXIT_OK
    result = stability.metric_from_form(rho)
    _emit({"metric": _matrix(result.metric), "vol": result.vol})
    return EXIT_OK


def cmd_normal_form(args: argparse.Namespace) -> int:
    rho = structures.packaged_form(NORMAL_FORMS[args.name])
    _emit({"name": args.name, "form": form_to_literal(rho)})
    return EXIT_OK


# verify


@dataclass(frozen=True)
class Check:
    """One measured residual against its tolerance."""

    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        finite = np.isfinite(self.residual)
        return bool(finite and self.residual < self.tolerance)

    def as_dict(self) -> Dict:
        return {
            "name": self.name,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def _relative(a: Form, b: Form) -> float:
    return (a - b).norm_inf() / max(b.norm_inf(), 1e-300)


def suite_euler(rng: np.random.Generator, count: int) -> List[Check]:
    checks = []
    for n, p in EULER_CASES:
        forms = [stability.random_stable_form(n, p, rng) for _ in range(count)]
        closed = max(stability.euler_residual(rho) for rho in forms)
        numeric = max(
            stability.euler_residual(rho, stability.dual_form_numeric)
            for rho in forms
        )
        checks.append(Check(f"euler-closed-{n}-{p}", closed, 1e-10))
        checks.append(Check(f"euler-numeric-{n}-{p}", numeric, 1e-6))
    return checks


def suite_volumes(rng: np.random.Generator, count: int) -> List[Check]:
    """Volume identities of the normal pair.

    phi(sigma) = omega^3 / 6 = rho-hat ^ rho / 4 = phi(rho) / 2.
    """
    pair = structures.su3_normal_pair()
    phi_sigma = stability.volume(pair.sigma).phi
    values = {
        "liouville": abs(stability.liouville(pair.omega)),
        "euler-quarter": top_pair(pair.rho_hat, pair.rho) / 4.0,
        "phi-rho-half": stability.volume(pair.rho).phi / 2.0,
    }
    checks = [
        Check(f"volumes-{name}", abs(value - phi_sigma), 1e-12)
        for name, value in sorted(values.items())
    ]
    phi, _ = structures.g2_normal_forms()
    g = stability.metric_from_form(phi).metric
    deviation = float(np.max(np.abs(g - np.eye(7))))
    checks.append(Check("volumes-g2-metric-identity", deviation, 1e-10))
    return checks


def suite_ast(rng: np.random.Generator, count: int) -> List[Check]:
    """*phi = dt ^ rho-hat - sigma for phi = dt ^ omega + rho."""
    pair = structures.su3_normal_pair()
    phi, star_phi = structures.g2_normal_forms()
    checks = [
        Check(
            "ast-normal-assembly",
            (structures.assemble_7d(pair) - phi).norm_inf(),
            1e-12,
        ),
        Check(
            "ast-normal-star",
            (structures.expected_star_7d(pair) - star_phi).norm_inf(),
            1e-12,
        ),
    ]
    worst = 0.0
    for _ in range(count):
        pair = structures.random_compatible_pair(rng)
        phi = structures.assemble_7d(pair)
        star = structures.star_7d(phi)
        worst = max(worst, _relative(star, structures.expected_star_7d(pair)))
    checks.append(Check("ast-random-pairs", worst, 1e-8))
    return checks


def suite_hodge(rng: np.random.Generator, count: int) -> List[Check]:
    checks = []
    for n, p in ((7, 3), (7, 4), (8, 3)):
        worst = 0.0
        for _ in range(count):
            rho = stability.random_stable_form(n, p, rng)
            numeric = stability.dual_form_numeric(rho)
            closed = stability.dual_form_closed(rho)
            worst = max(worst, _relative(numeric, closed))
        checks.append(Check(f"hodge-dual-{n}-{p}", worst, 1e-6))
    worst = 0.0
    for _ in range(count):
        rho = stability.random_stable_form(6, 3, rng)
        worst = max(worst, stability.type_30_residual(rho) / rho.norm_inf())
    checks.append(Check("hodge-type-30", worst, 1e-8))
    return checks


def suite_k_scalar(rng: np.random.Generator, count: int) -> List[Check]:
    """K^2 is the scalar tr(K^2) / 6 for 3-forms on R^6."""
    worst = 0.0
    for _ in range(count):
        rho = stability.random_stable_form(6, 3, rng)
        k = stability.k_map(rho).matrix
        scalar = np.trace(k @ k) / 6.0
        deviation = np.max(np.abs(k @ k - scalar * np.eye(6)))
        worst = max(worst, float(deviation) / abs(scalar))
    return [Check("k-scalar", worst, 1e-10)]


Suite = Callable[[np.random.Generator, int], List[Check]]

SUITE_FUNCTIONS: Dict[str, Suite] = {
    "euler": suite_euler,
    "volumes": suite_volumes,
    "ast": suite_ast,
    "hodge": suite_hodge,
    "k-scalar": suite_k_scalar,
}


def verify(suite: str, seed: int, count: int) -> Dict:
    """Run a suite (or all of them) and build the report."""
    names = sorted(SUITE_FUNCTIONS) if suite == "all" else [suite]
    checks: List[Check] = []
    for name in names:
        # one generator per suite so results do not depend on suite order
        rng = np.random.default_rng([seed, sorted(SUITE_FUNCTIONS).index(name)])
        logger.debug("Running suite %s", name)
        checks.extend(SUITE_FUNCTIONS[name](rng, count))
    checks.sort(key=lambda c: c.name)
    return {
        "suite": suite,
        "seed": seed,
        "count": count,
        "checks": [c.as_dict() for c in checks],
        "passed": all(c.passed for c in checks),
        "max_residual": max(c.residual for c in checks),
    }


def cmd_verify(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else seed_from_env()
    report = verify(args.suite, seed, args.count)
    _emit(report)
    for check in report["checks"]:
        if not check["passed"]:
            logger.warning(
                "Check %s failed: residual %r", check["name"], check["residual"]
            )
    return EXIT_OK if report["passed"] else EXIT_FAILED


# Flows


def _integrator_config(args: argparse.Namespace) -> IntegratorConfig:
    return IntegratorConfig(
        method=args.method,
        t_span=(0.0, args.t),
        step=args.step,
        atol=args.atol,
        rtol=args.rtol,
        max_step=args.max_step,
    )


def _write_trajectory(
    traj: Trajectory,
    path: Optional[str],
    header: Sequence[str],
    with_hamiltonian: bool = False,
) -> None:
    if path is None:
        return
    with open(path, "w") as f:
        flows.write_csv(traj, f, header, with_hamiltonian)


def _trajectory_summary(traj: Trajectory) -> Dict:
    return {
        "complete": traj.complete,
        "reason": traj.reason,
        "samples": len(traj),
        "t_final": traj.times[-1],
        "final": [float(v) for v in traj.final],
    }


def cmd_flow_s7(args: argparse.Namespace) -> int:
    given = [n for n in ("y1", "y2", "y3") if getattr(args, n) is not None]
    if args.y is not None and given:
        raise argparse.ArgumentTypeError(
            f"--y cannot be combined with --{', --'.join(given)}"
        )
    if args.symmetric or args.y is not None:
        if args.y is None:
            raise argparse.ArgumentTypeError("--symmetric needs --y")
        y0 = [args.y, args.y, args.y, args.y4]
    else:
        if None in (args.y1, args.y2, args.y3):
            raise argparse.ArgumentTypeError(
                "give --y or all of --y1 --y2 --y3"
            )
        y0 = [args.y1, args.y2, args.y3, args.y4]
    traj = integrate(flows.s7_rhs_y, np.array(y0), _integrator_config(args))
    _write_trajectory(traj, args.out, flows.S7_CSV_HEADER)
    report = _trajectory_summary(traj)
    states = traj.array()
    volumes = [flows.s7_volume(s) for s in states]
    report["volume"] = {"initial": volumes[0], "final": volumes[-1]}
    if args.symmetric or args.y is not None:
        cs = np.array([flows.fitted_c(s) for s in states])
        report["fitted_c"] = {"mean": float(cs.mean()), "std": float(cs.std())}
    _emit(report)
    return EXIT_OK if traj.complete else EXIT_USAGE


def _compatibility(states: np.ndarray) -> Dict:
    """omega ^ rho and phi(rho) / phi(sigma) along a trajectory."""
    primitive = 0.0
    ratios = []
    for state in states:
        rho, sigma = flows.reconstruct_s3s3(state)
        try:
            omega = flows.s3s3_omega(state)
            rho_phi = stability.require_stable(rho).phi
            sigma_phi = stability.require_stable(sigma).phi
        except StableFormsError:
            return {"stable": False}
        primitive = max(primitive, wedge(omega, rho).norm_inf())
        ratios.append(rho_phi / sigma_phi)
    return {
        "stable": True,
        "omega_wedge_rho": primitive,
        "ratio_min": min(ratios),
        "ratio_max": max(ratios),
    }


def cmd_flow_s3s3(args: argparse.Namespace) -> int:
    if args.bryant_salamon is not None:
        state0 = flows.bryant_salamon_state(args.bryant_salamon).array()
    else:
        if args.x is None or args.y is None:
            raise argparse.ArgumentTypeError(
                "give --x and --y, or --bryant-salamon"
            )
        state0 = np.array([*args.x, *args.y], dtype=float)
    traj = integrate(flows.s3s3_rhs, state0, _integrator_config(args))
    _write_trajectory(
        traj, args.out, flows.S3S3_CSV_HEADER, with_hamiltonian=True
    )
    report = _trajectory_summary(traj)
    states = traj.array()
    h = np.array([flows.s3s3_hamiltonian(s) for s in states])
    report["hamiltonian"] = {
        "initial": float(h[0]),
        "max_drift": float(np.max(np.abs(h - h[0]))),
    }
    if args.bryant_salamon is not None:
        locus = [
            abs(4.0 * s[3] ** 3 - (1.0 + 3.0 * s[0]) * (s[0] - 1.0) ** 3)
            for s in states
        ]
        report["locus_residual"] = float(max(locus))
    if args.monitor:
        report["compatibility"] = _compatibility(states)
    _emit(report)
    return EXIT_OK if traj.complete else EXIT_USAGE


def cmd_squashed(args: argparse.Namespace) -> int:
    y, y4sq = flows.squashed_s7_values(args.lam)
    state = flows.squashed_s7(args.lam)
    tau, residual = flows.squashed_weak_g2(args.lam)
    _emit(
        {
            "lambda": args.lam,
            "y": y,
            "y4sq": y4sq,
            "residuals": list(flows.squashed_residuals(state, args.lam)),
            "weak_g2": {"tau": tau, "residual": residual},
        }
    )
    return EXIT_OK


def cmd_weak_su3(args: argparse.Namespace) -> int:
    point = flows.weak_su3_critical(args.c)
    _emit(
        {
            "c": args.c,
            "x": point.x,
            "y": point.y,
            "mu": point.mu,
            "closed_form_y": (np.sqrt(3.0) * args.c**2 / 2.0) ** (2.0 / 7.0),
            "lagrange_residual": flows.lagrange_residual(point, args.c),
            "nearly_kahler": {
                "lambda": flows.weak_su3_lambda(point),
                "residuals": list(flows.weak_su3_residuals(point)),
            },
        }
    )
    return EXIT_OK


# Parser


def _add_integrator_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--t", type=float, default=1.0, help="final time")
    parser.add_argument(
        "--method", choices=("rk4", "rkf45"), default=DEFAULT_METHOD
    )
    parser.add_argument("--step", type=float, default=RK4_STEP)
    parser.add_argument("--atol", type=float, default=DEFAULT_ATOL)
    parser.add_argument("--rtol", type=float, default=DEFAULT_RTOL)
    parser.add_argument("--max-step", type=float, default=MAX_STEP)
    parser.add_argument("--out", help="trajectory CSV path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stableforms",
        description="Stable forms, their volume functionals and reduced flows.",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, func, helptext in (
        ("classify", cmd_classify, "orbit type and volume"),
        ("volume", cmd_volume, "volume of a stable form"),
        ("dual", cmd_dual, "dual form rho-hat"),
        ("metric", cmd_metric, "induced metric or complex structure"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--form", required=True, help="form literal JSON file")
        p.set_defaults(func=func)
        if name == "dual":
            p.add_argument("--numeric", action="store_true")

    p = sub.add_parser("verify", help="identity suites")
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--count", type=int, default=20)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("flow-s7", help="S^7 gradient flow")
    p.add_argument("--symmetric", action="store_true")
    p.add_argument("--y", type=float, help="common value of y1, y2, y3")
    p.add_argument("--y1", type=float)
    p.add_argument("--y2", type=float)
    p.add_argument("--y3", type=float)
    p.add_argument("--y4", type=float, required=True)
    _add_integrator_flags(p)
    p.set_defaults(func=cmd_flow_s7)

    p = sub.add_parser("flow-s3s3", help="S^3 x S^3 Hamiltonian flow")
    p.add_argument("--x", type=float, nargs=3)
    p.add_argument("--y", type=float, nargs=3)
    p.add_argument("--bryant-salamon", type=float, metavar="X")
    p.add_argument("--monitor", action="store_true", help="check compatibility")
    _add_integrator_flags(p)
    p.set_defaults(func=cmd_flow_s3s3)

    p = sub.add_parser("critical-squashed-s7", help="squashed 7-sphere")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.set_defaults(func=cmd_squashed)

    p = sub.add_parser("critical-weak-su3", help="nearly Kahler S^3 x S^3")
    p.add_argument("--c", type=float, required=True)
    p.set_defaults(func=cmd_weak_su3)

    p = sub.add_parser("normal-form", help="print a packaged normal form")
    p.add_argument("name", choices=sorted(NORMAL_FORMS))
    p.set_defaults(func=cmd_normal_form)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, run the command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.getLogger("stableforms").setLevel(
        logging.DEBUG if args.verbose else logging.WARNING
    )
    logger.debug("Dispatching %s", args.command)
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as e:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"{parser.prog}: error: {e}\n")
        return EXIT_USAGE
    except NotStableError as e:
        sys.stderr.write(f"error: not stable: {e}\n")
        return EXIT_USAGE
    except StableFormsError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return run(argv)
