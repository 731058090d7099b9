"""Command-line front end.

Exit codes: 0 every check passed, 1 a theory check failed, 2 bad input.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .instances import EnumerationTooLarge, Instance, InstanceFormatError, instance_to_dict, load_instance
from .lp_core import (
    DualCertificate,
    Parameters,
    PriceVector,
    build_dual,
    build_primal,
    certificate_from_dual,
    certificate_to_dict,
    check_dual_feasible,
    dual_objective,
    load_certificate,
    prices_from_primal,
)
from .mechanism import expected_welfare
from .offline import AllocationTooLarge, opt_stats
from .simplex import solve_lp
from .theory import CLASSES, claim1_margins, parameters_for, parameters_for_instance
from .valuations import UniverseMismatchError

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
EQ1_TOL = 1e-9


class InputError(Exception):
    pass


@dataclass
class ExperimentReport:
    command: str
    instance_digest: str
    parameters: dict = field(default_factory=dict)
    primal_status: Optional[str] = None
    primal_objective: Optional[float] = None
    prices: Optional[list] = None
    expected_welfare: Optional[float] = None
    welfare_stderr: Optional[float] = None
    welfare_samples: Optional[int] = None
    expected_optimum: Optional[float] = None
    achieved_ratio: Optional[float] = None
    dual_status: Optional[str] = None
    dual_optimum: Optional[float] = None
    dual_objective: Optional[float] = None
    eq1_min_margin: Optional[float] = None
    claim1_min_margin: Optional[float] = None
    tolerance: float = 1e-7
    flags: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.flags.values())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentReport":
        names = {f.name for f in fields(cls)}
        rep = cls(**{k: v for k, v in doc.items() if k in names})
        rep.validate()
        if "passed" in doc and doc["passed"] != rep.passed:
            raise ValueError("report 'passed' disagrees with its flags")
        return rep

    def validate(self) -> None:
        """Re-derive every flag and the ratio from the stored numbers."""
        tol = self.tolerance
        if self.achieved_ratio is not None:
            if not self.expected_welfare or self.expected_optimum is None:
                raise ValueError("ratio present without positive welfare and optimum")
            if abs(self.achieved_ratio - self.expected_optimum / self.expected_welfare) > 1e-12 * max(1.0, self.achieved_ratio):
                raise ValueError("achieved_ratio != expected_optimum / expected_welfare")
        expect = {}
        if "primal_nonnegative" in self.flags:
            expect["primal_nonnegative"] = self.primal_objective is not None and self.primal_objective >= -tol
        if "ratio_within_alpha" in self.flags:
            alpha = self.parameters.get("alpha")
            expect["ratio_within_alpha"] = (self.achieved_ratio is not None and alpha is not None
                                            and self.achieved_ratio <= alpha + tol)
        if "eq1_feasible" in self.flags:
            expect["eq1_feasible"] = self.eq1_min_margin is not None and self.eq1_min_margin >= -EQ1_TOL
        if "claim1" in self.flags:
            expect["claim1"] = self.claim1_min_margin is not None and self.claim1_min_margin >= -tol
        if "dual_objective_nonnegative" in self.flags:
            expect["dual_objective_nonnegative"] = self.dual_objective is not None and self.dual_objective >= -tol
        for k, v in expect.items():
            if bool(self.flags[k]) != v:
                raise ValueError(f"flag {k!r} inconsistent with reported values")


# --------------------------------------------------------------------------
# helpers


def _digest(inst: Instance) -> str:
    blob = json.dumps(instance_to_dict(inst), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _load(path: str) -> Instance:
    try:
        return load_instance(path)
    except FileNotFoundError as exc:
        raise InputError(f"{path}: no such file") from exc
    except (InstanceFormatError, ValueError) as exc:
        raise InputError(str(exc)) from exc


def _resolve_params(args, inst: Instance) -> dict:
    """Parameters as a dict with ``alpha``, ``beta`` and the class label."""
    if (args.alpha is None) != (args.beta is None):
        raise InputError("--alpha and --beta must be given together")
    if args.alpha is not None:
        try:
            Parameters(args.alpha, args.beta)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        return {"class": "custom", "alpha": args.alpha, "beta": args.beta}
    try:
        if args.cls is not None:
            k = args.k if args.k is not None else inst.class_tag.k
            cp = parameters_for(args.cls, k)
        else:
            cp = parameters_for_instance(inst, "improved")
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return {"class": cp.cls, "alpha": cp.alpha, "beta": cp.beta, "k": cp.k}


def _params(d: dict) -> Parameters:
    return Parameters(d["alpha"], d["beta"])


def _solve_primal(inst: Instance, params: Parameters):
    sol = solve_lp(build_primal(inst, params))
    if not sol.optimal:
        return sol, None, None
    prices, slack = prices_from_primal(sol)
    return sol, prices, slack


def _load_prices(path: str, m: int) -> PriceVector:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: cannot read prices ({exc})") from exc
    raw = doc.get("prices") if isinstance(doc, dict) else doc
    if not isinstance(raw, list) or len(raw) != m or any(not isinstance(p, (int, float)) for p in raw):
        raise InputError(f"{path}: expected a list of {m} numeric prices")
    try:
        return PriceVector(tuple(raw))
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _welfare(rep: ExperimentReport, inst: Instance, prices: PriceVector, args) -> None:
    est = expected_welfare(inst, prices, samples=args.samples, seed=args.seed)
    rep.expected_welfare = est.mean
    rep.welfare_stderr = est.stderr
    rep.welfare_samples = est.samples
    rep.expected_optimum = opt_stats(inst).expected_optimum
    if est.mean > 0:
        rep.achieved_ratio = rep.expected_optimum / est.mean


def _certificate_checks(rep: ExperimentReport, inst: Instance, cert: DualCertificate, params: Parameters) -> None:
    rep.eq1_min_margin = float(check_dual_feasible(cert, params).min())
    worst = np.inf
    for a in inst.agents:
        for v in a.valuations:
            worst = min(worst, float(claim1_margins(cert, v, params).min()))
    rep.claim1_min_margin = worst
    rep.dual_objective = dual_objective(cert, inst, params)
    rep.flags["eq1_feasible"] = rep.eq1_min_margin >= -EQ1_TOL
    rep.flags["claim1"] = rep.claim1_min_margin >= -rep.tolerance
    rep.flags["dual_objective_nonnegative"] = rep.dual_objective >= -rep.tolerance


def _emit(rep: ExperimentReport, args) -> int:
    text = json.dumps(rep.to_dict(), indent=2, sort_keys=True)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    if args.csv:
        row = {k: v for k, v in rep.to_dict().items() if not isinstance(v, (dict, list))}
        row["parameters"] = json.dumps(rep.parameters, sort_keys=True)
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(row))
            w.writeheader()
            w.writerow(row)
    return EXIT_OK if rep.passed else EXIT_FAIL


# --------------------------------------------------------------------------
# subcommands


def cmd_solve_prices(args) -> int:
    inst = _load(args.instance)
    pd = _resolve_params(args, inst)
    rep = ExperimentReport("solve-prices", _digest(inst), pd, tolerance=args.tolerance)
    sol, prices, slack = _solve_primal(inst, _params(pd))
    rep.primal_status = sol.status
    if prices is not None:
        rep.prices = list(prices)
        rep.primal_objective = slack
    rep.flags["primal_nonnegative"] = slack is not None and slack >= -args.tolerance
    return _emit(rep, args)


def cmd_simulate(args) -> int:
    inst = _load(args.instance)
    if args.samples is not None and args.samples < 2:
        raise InputError("--samples must be at least 2")
    pd = None
    if args.from_lp or args.cls is not None or args.alpha is not None:
        pd = _resolve_params(args, inst)
    rep = ExperimentReport("simulate", _digest(inst), pd or {}, tolerance=args.tolerance)
    if args.from_lp:
        sol, prices, slack = _solve_primal(inst, _params(pd))
        rep.primal_status = sol.status
        rep.primal_objective = slack
        if prices is None:
            rep.flags["primal_nonnegative"] = False
            return _emit(rep, args)
    elif args.prices:
        prices = _load_prices(args.prices, inst.m)
    else:
        raise InputError("give --prices FILE or --from-lp")
    rep.prices = list(prices)
    _welfare(rep, inst, prices, args)
    if pd is not None:
        rep.flags["ratio_within_alpha"] = (rep.achieved_ratio is not None
                                           and rep.achieved_ratio <= pd["alpha"] + args.tolerance)
    return _emit(rep, args)


def cmd_verify_dual(args) -> int:
    inst = _load(args.instance)
    pd = _resolve_params(args, inst)
    params = _params(pd)
    rep = ExperimentReport("verify-dual", _digest(inst), pd, tolerance=args.tolerance)
    if args.from_lp:
        sol = solve_lp(build_dual(inst, params))
        rep.dual_status = sol.status
        if not sol.optimal:
            rep.flags["dual_solved"] = False
            return _emit(rep, args)
        rep.dual_optimum = sol.objective
        cert = certificate_from_dual(sol, inst.m)
    elif args.certificate:
        try:
            cert = load_certificate(args.certificate, inst.m)
        except (OSError, ValueError) as exc:
            raise InputError(f"{args.certificate}: {exc}") from exc
    else:
        raise InputError("give --certificate FILE or --from-lp")
    if args.export_certificate:
        Path(args.export_certificate).write_text(json.dumps(certificate_to_dict(cert), indent=2) + "\n")
    _certificate_checks(rep, inst, cert, params)
    return _emit(rep, args)


def cmd_report(args) -> int:
    inst = _load(args.instance)
    pd = _resolve_params(args, inst)
    params = _params(pd)
    rep = ExperimentReport("report", _digest(inst), pd, tolerance=args.tolerance)
    sol, prices, slack = _solve_primal(inst, params)
    rep.primal_status = sol.status
    rep.primal_objective = slack
    rep.flags["primal_nonnegative"] = slack is not None and slack >= -args.tolerance
    if prices is not None:
        rep.prices = list(prices)
        _welfare(rep, inst, prices, args)
        rep.flags["ratio_within_alpha"] = (rep.achieved_ratio is not None
                                           and rep.achieved_ratio <= pd["alpha"] + args.tolerance)
    dsol = solve_lp(build_dual(inst, params))
    rep.dual_status = dsol.status
    if dsol.optimal:
        rep.dual_optimum = dsol.objective
        _certificate_checks(rep, inst, certificate_from_dual(dsol, inst.m), params)
    else:
        rep.flags["dual_solved"] = False
    return _emit(rep, args)


def cmd_params(args) -> int:
    classes = [args.cls] if args.cls else list(CLASSES)
    rows = []
    for c in classes:
        try:
            cp = parameters_for(c, args.k)
        except ValueError as exc:
            if args.cls:
                raise InputError(str(exc)) from exc
            continue
        rows.append({"class": c, "k": cp.k, "alpha": cp.alpha, "beta": cp.beta})
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        print(f"{'class':<14}{'k':>4}{'alpha':>20}{'beta':>20}")
        for r in rows:
            print(f"{r['class']:<14}{r['k']:>4}{r['alpha']:>20.12g}{r['beta']:>20.12g}")
    return EXIT_OK


# --------------------------------------------------------------------------


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--class", dest="cls", choices=CLASSES, help="use the proven (alpha, beta) of a class")
    p.add_argument("--k", type=int, help="rank bound for the MPH-k classes (default: instance k)")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)


def _add_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tolerance", type=float, default=1e-7)
    p.add_argument("--output", help="write the JSON report here instead of stdout")
    p.add_argument("--csv", help="also write a one-row CSV summary")


def _add_welfare_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true", help="exact expectation by enumeration (default)")
    g.add_argument("--samples", type=int, help="Monte Carlo sample count")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prophetlp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-prices", help="solve the price LP")
    p.add_argument("instance")
    _add_param_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_solve_prices)

    p = sub.add_parser("simulate", help="run the posted-price mechanism")
    p.add_argument("instance")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--prices", help="JSON file with a price list")
    src.add_argument("--from-lp", action="store_true", help="use prices from the LP")
    _add_param_flags(p)
    _add_welfare_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify-dual", help="check a dual certificate")
    p.add_argument("instance")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--certificate", help="JSON certificate file")
    src.add_argument("--from-lp", action="store_true", help="use the optimal dual solution")
    p.add_argument("--export-certificate", help="write the checked certificate here")
    _add_param_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_verify_dual)

    p = sub.add_parser("report", help="full pipeline: prices, welfare, certificates")
    p.add_argument("instance")
    _add_param_flags(p)
    _add_welfare_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("params", help="print proven (alpha, beta) pairs")
    p.add_argument("--class", dest="cls", choices=CLASSES)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_params)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, EnumerationTooLarge, AllocationTooLarge, UniverseMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        # size caps in LP construction surface as ValueError
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
