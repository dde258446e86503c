"""Command-line entry point: ``vaccine-evi {solve,verify,oracle-compare,report} SCENARIO``.

Exit codes: 0 success, 1 usage or scenario errors, 2 a verification
tolerance failed (or no certified solution), 3 oracle disagreement.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from .duality import duality_report
from .evi_solver import NoCertifiedSolution, StrategyProfile, TimeGrid, evi_value, evi_values, solve_profile
from .model import fd_gradient_check
from .oracle import OracleError, equilibrium_oracle, nash_check
from .scenario_io import Scenario, ScenarioError, load_scenario, read_profile_csv, write_report, write_timeseries_csv

log = logging.getLogger("vaccine_evi")

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_ORACLE = 0, 1, 2, 3

# acceptance tolerances enforced by `verify`
KKT_TOL = 1e-6
COMPLEMENTARITY_TOL = 1e-8
GAP_TOL = 1e-8
EVI_TOL = 1e-8
PSI_Q_TOL = 1e-10
NATURAL_RESIDUAL_TOL = 1e-6
FD_TOL = 1e-6


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vaccine-evi", description="Equilibrium vaccination strategies and their multipliers.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "solve": "solve the scenario and write the time-series CSV",
        "verify": "solve (or re-import --profile) and check every KKT/duality tolerance",
        "oracle-compare": "cross-check the solver against brute-force best responses",
        "report": "write the interpretation report",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("scenario", type=Path)
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--seed", type=int, default=0, help="seed for sampling checks")
        p.add_argument("--tol", type=float, help="override the solver residual tolerance")
        p.add_argument("--grid-points", type=int, help="override the number of grid nodes")
        p.add_argument("--parallel", action="store_true", help="solve slices in worker processes")
        if name == "verify":
            p.add_argument("--profile", type=Path, help="verify this CSV instead of re-solving")
    return parser


def _load(args) -> Scenario:
    sc = load_scenario(args.scenario)
    if args.tol is not None:
        sc.solver = dataclasses.replace(sc.solver, tol=args.tol)
    if args.grid_points is not None:
        sc.grid = TimeGrid(sc.model.T, args.grid_points)
    return sc


def _solve(sc: Scenario, parallel: bool) -> StrategyProfile:
    profile, diags = solve_profile(sc.model, sc.grid, sc.solver, parallel=parallel)
    n_fb = sum(d.fallback_used for d in diags)
    log.info("solved %d nodes, max residual %.3g, %d fallback(s)", len(diags), max(d.residual for d in diags), n_fb)
    return profile


def _cmd_solve(args, sc: Scenario) -> int:
    profile = _solve(sc, args.parallel)
    rep = duality_report(sc.model, profile, sc.solver.tol, sc.output.tol_active, 1, args.seed)
    path = args.out / f"{args.scenario.stem}.csv"
    n = write_timeseries_csv(sc.model, profile, rep.multipliers, path, sc.output.tol_active)
    print(f"wrote {n} rows to {path}", file=sys.stderr)
    return EXIT_OK


def verification_failures(sc: Scenario, profile: StrategyProfile, seed: int = 0) -> tuple[list[str], object]:
    """All tolerance violations for ``profile``; empty means verified."""
    m = sc.model
    fails = []
    rep = duality_report(m, profile, sc.solver.tol, sc.output.tol_active, sc.output.saddle_samples, seed)
    if rep.max_natural_residual > NATURAL_RESIDUAL_TOL:
        fails.append(f"natural residual {rep.max_natural_residual:.3e} > {NATURAL_RESIDUAL_TOL:g}")
    if not rep.sign_conditions_passed:
        fails.append(f"sign conditions: {rep.sign_condition_verdict}")
    if rep.kkt_residual > KKT_TOL:
        fails.append(f"KKT residual {rep.kkt_residual:.3e} > {KKT_TOL:g}")
    if rep.complementarity_residual > COMPLEMENTARITY_TOL:
        fails.append(f"complementarity {rep.complementarity_residual:.3e} > {COMPLEMENTARITY_TOL:g}")
    if rep.duality_gap > GAP_TOL:
        fails.append(f"duality gap {rep.duality_gap:.3e} > {GAP_TOL:g}")
    if not rep.saddle_passed:
        fails.append("saddle-point inequalities violated")
    psi_q = evi_value(m, profile, profile)
    if abs(psi_q) > PSI_Q_TOL:
        fails.append(f"psi(Q) = {psi_q:.3e}")
    rng = np.random.default_rng(seed)
    shape = profile.values.shape
    worst_psi = float(np.min(evi_values(m, profile, rng.random((sc.output.evi_samples, *shape))), initial=0.0))
    if worst_psi < -EVI_TOL:
        fails.append(f"psi(P) = {worst_psi:.3e} < -{EVI_TOL:g} for a sampled P")
    nodes = profile.grid.nodes
    fd = max(fd_gradient_check(m, nodes[rng.integers(len(nodes))], rng.random(m.k)) for _ in range(100))
    if fd > FD_TOL:
        fails.append(f"gradient vs finite differences {fd:.3e} > {FD_TOL:g}")
    return fails, rep


def _cmd_verify(args, sc: Scenario) -> int:
    if args.profile is not None:
        profile = read_profile_csv(args.profile, sc.model, sc.grid)
    else:
        profile = _solve(sc, args.parallel)
    fails, rep = verification_failures(sc, profile, args.seed)
    for f in fails:
        print(f"FAIL {f}", file=sys.stderr)
    if fails:
        return EXIT_VERIFY
    print(f"verified: kkt {rep.kkt_residual:.2e}, gap {rep.duality_gap:.2e}, "
          f"complementarity {rep.complementarity_residual:.2e}", file=sys.stderr)
    return EXIT_OK


def _cmd_oracle_compare(args, sc: Scenario) -> int:
    profile = _solve(sc, args.parallel)
    m, params = sc.model, sc.oracle
    bad = []
    for n, t in enumerate(profile.grid.nodes):
        q = profile.values[n]
        res = nash_check(m, t, q, params)
        if not res.passed:
            bad.append(f"node {n}: unit {res.unit} gains {res.gain:.3e} by deviating to {res.deviation:g}")
        if m.k <= 3:
            try:
                qo = equilibrium_oracle(m, t, params)
            except OracleError as exc:
                bad.append(f"node {n}: oracle failed: {exc}")
                continue
            dist = float(np.max(np.abs(qo - q)))
            if dist > params.resolution + sc.solver.tol:
                bad.append(f"node {n}: solver {q} vs oracle {qo} (distance {dist:.3g})")
    for b in bad:
        print(f"DISAGREE {b}", file=sys.stderr)
    if bad:
        return EXIT_ORACLE
    print(f"solver and oracle agree on {profile.grid.n_nodes} nodes", file=sys.stderr)
    return EXIT_OK


def _cmd_report(args, sc: Scenario) -> int:
    profile = _solve(sc, args.parallel)
    rep = duality_report(sc.model, profile, sc.solver.tol, sc.output.tol_active, sc.output.saddle_samples, args.seed)
    path = args.out / f"{args.scenario.stem}.report.txt"
    path.write_text(write_report(sc.model, profile, rep.multipliers, rep), encoding="utf-8")
    print(f"wrote report to {path}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "solve": _cmd_solve,
    "verify": _cmd_verify,
    "oracle-compare": _cmd_oracle_compare,
    "report": _cmd_report,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    try:
        sc = _load(args)
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, sc)
    except (ScenarioError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NoCertifiedSolution as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY


def main() -> None:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(run())


if __name__ == "__main__":
    main()
