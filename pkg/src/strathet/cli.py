"""Command-line entry point: ``strathet <command> ...``.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .data import EstimatorMode, StratifiedDataset, TestConfig, validate
from .errors import StratHetError
from .hettest import het_test
from .io import ByColumn, ByQuantiles, ByThreshold, ingest_csv, parse_rule, stratify
from .lrt import lrt_test, mann_whitney
from .numerics import SeededStream
from .scenarios import SCENARIO_LABELS, build_scenario
from .simulation import PROFILES, power_sweep, rejection_rate, write_csv

log = logging.getLogger("strathet")

DEFAULT_SEED = 20240101
NSW_AGE_BREAKS = (17, 20, 24, 28, 55)


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _add_test_options(p: argparse.ArgumentParser, seed_required: bool = False) -> None:
    g = p.add_argument_group("test settings")
    g.add_argument("--estimator", choices=[m.value for m in EstimatorMode], default="auto")
    g.add_argument("--reference-draws", type=int, default=100_000)
    g.add_argument("--alpha", type=float, default=0.05)
    g.add_argument("--m-multiplier", type=int, default=1000,
                   help="sampled mode draws this many quadruples per subject of a pair")
    g.add_argument("--auto-exact-threshold", type=int, default=10**8)
    g.add_argument("--max-resample-attempts", type=int, default=100)
    g.add_argument("--report-t-statistic", action="store_true")
    g.add_argument("--report-max-statistic", action="store_true")
    if seed_required:
        g.add_argument("--seed", type=int, required=True)
    else:
        g.add_argument("--seed", type=int, default=DEFAULT_SEED)


def _add_input_options(p: argparse.ArgumentParser, stratified: bool = True) -> None:
    g = p.add_argument_group("input")
    g.add_argument("--input", required=True, help="CSV file with a header row")
    g.add_argument("--outcome", required=True)
    g.add_argument("--arm", required=True, help="column coding treatment (1) vs control (0)")
    g.add_argument("--transform", choices=["none", "log"], default="none",
                   help="log compares scale ratios as location shifts (outcomes must be > 0)")
    if stratified:
        s = p.add_mutually_exclusive_group(required=True)
        s.add_argument("--stratum-column", metavar="COL")
        s.add_argument("--stratify-threshold", metavar="COL:CUT")
        s.add_argument("--stratify-quantiles", metavar="COL:K")
        s.add_argument("--stratify-breaks", metavar="COL:B0,B1,...")


def _add_output_options(p: argparse.ArgumentParser, csv_out: bool = False) -> None:
    p.add_argument("--output", "-o", help="write the JSON report here (default: stdout)")
    if csv_out:
        p.add_argument("--csv", help="write plot-ready CSV rows here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="strathet",
        description="U-statistic test of treatment effect heterogeneity across strata.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("het-test", help="U-statistic heterogeneity test (with LRT alongside)")
    _add_input_options(p)
    _add_test_options(p)
    _add_output_options(p)

    p = sub.add_parser("lrt", help="parametric heterogeneity test")
    _add_input_options(p)
    _add_output_options(p)

    p = sub.add_parser("mann-whitney", help="pooled treatment vs control comparison")
    _add_input_options(p, stratified=False)
    _add_output_options(p)

    p = sub.add_parser("simulate", help="rejection rates for one catalog scenario")
    p.add_argument("--scenario", required=True, choices=SCENARIO_LABELS, type=str.upper)
    p.add_argument("--variant", choices=["null", "alternative"], default="null")
    p.add_argument("--gamma", type=float, help="effect spacing; overrides --variant")
    p.add_argument("--sizes", type=_int_list, default=[100, 100, 100], metavar="N1,N2,N3")
    p.add_argument("--profile", choices=sorted(PROFILES), default="desk")
    p.add_argument("--replicates", type=int, help="default from --profile")
    p.add_argument("--workers", type=int, default=1)
    _add_test_options(p, seed_required=True)
    p.set_defaults(reference_draws=None, estimator="sampled")
    _add_output_options(p, csv_out=True)

    p = sub.add_parser("power", help="rejection rates over a grid of effect sizes and n")
    p.add_argument("--scenario", required=True, choices=SCENARIO_LABELS, type=str.upper)
    p.add_argument("--gammas", type=_float_list, required=True, metavar="G1,G2,...")
    p.add_argument("--ns", type=_int_list, required=True, metavar="N1,N2,...")
    p.add_argument("--profile", choices=sorted(PROFILES), default="desk")
    p.add_argument("--replicates", type=int)
    p.add_argument("--workers", type=int, default=1)
    _add_test_options(p, seed_required=True)
    p.set_defaults(reference_draws=None, estimator="sampled")
    _add_output_options(p, csv_out=True)

    p = sub.add_parser("case-study", help="NSW analyses: pooled Mann-Whitney, age and 1974-income strata")
    p.add_argument("--input", required=True, help="NSW-format CSV (treat, age, re74, re78)")
    p.add_argument("--outcome", default="re78")
    p.add_argument("--arm", default="treat")
    p.add_argument("--age-column", default="age")
    p.add_argument("--income-column", default="re74")
    p.add_argument("--age-breaks", type=_float_list, default=list(NSW_AGE_BREAKS),
                   metavar="B0,B1,...")
    p.add_argument("--age-quartiles", action="store_true",
                   help="compute age quartiles from the data instead of --age-breaks")
    _add_test_options(p)
    _add_output_options(p)
    return parser


def config_from_args(args) -> TestConfig:
    draws = args.reference_draws
    if draws is None:
        draws = PROFILES[args.profile]["reference_draws"]
    return TestConfig(
        reference_draws=draws,
        alpha=args.alpha,
        estimator_mode=EstimatorMode(args.estimator),
        sampling_multiplier=args.m_multiplier,
        auto_exact_threshold=args.auto_exact_threshold,
        seed=args.seed,
        max_resample_attempts=args.max_resample_attempts,
        report_t_statistic=args.report_t_statistic,
        report_max_statistic=args.report_max_statistic,
    )


def _rule_from_args(args):
    for kind, value in (("column", args.stratum_column), ("threshold", args.stratify_threshold),
                        ("quantiles", args.stratify_quantiles), ("breaks", args.stratify_breaks)):
        if value is not None:
            return kind, value
    raise ValueError("no stratification given")


def _transform(data: StratifiedDataset, how: str) -> StratifiedDataset:
    if how == "none":
        return data
    strata = []
    for st in data.strata:
        if np.any(st.treatment <= 0) or np.any(st.control <= 0):
            raise ValueError(f"log transform needs positive outcomes (stratum {st.label})")
        strata.append((st.label, np.log(st.treatment), np.log(st.control)))
    return validate(strata)


def _load_stratified(args) -> tuple[StratifiedDataset, dict]:
    kind, value = _rule_from_args(args)
    if kind == "column":
        records = ingest_csv(args.input, args.outcome, args.arm, stratum=value)
        rule = ByColumn()
    else:
        rule = parse_rule(value, kind)
        records = ingest_csv(args.input, args.outcome, args.arm, covariates=[rule.column])
    data = _transform(stratify(records, rule), args.transform)
    echo = {"input": str(args.input), "outcome": args.outcome, "arm": args.arm,
            "stratification": {kind: value}, "transform": args.transform,
            "records": len(records)}
    return data, echo


def _strata_summary(data: StratifiedDataset) -> list[dict]:
    return [{"label": st.label, "n_treatment": int(st.treatment.size),
             "n_control": int(st.control.size)} for st in data.strata]


def _lrt_or_error(data: StratifiedDataset) -> dict:
    try:
        return lrt_test(data).to_dict()
    except StratHetError as exc:
        return {"error": f"{type(exc).__name__}: {exc}"}


def _het_block(data: StratifiedDataset, cfg: TestConfig) -> dict:
    res = het_test(data, cfg, SeededStream(cfg.seed))
    out = res.to_dict()
    out["strata"] = _strata_summary(data)
    out["lrt"] = _lrt_or_error(data)
    return out


def cmd_het_test(args) -> dict:
    cfg = config_from_args(args)
    data, echo = _load_stratified(args)
    return {"config": {**cfg.as_dict(), **echo}, "results": _het_block(data, cfg)}


def cmd_lrt(args) -> dict:
    data, echo = _load_stratified(args)
    res = lrt_test(data)
    out = {"strata": _strata_summary(data), "lrt": res.to_dict()}
    return {"config": echo, "results": out}


def cmd_mann_whitney(args) -> dict:
    records = ingest_csv(args.input, args.outcome, args.arm, covariates=[])
    y = np.array([r.outcome for r in records])
    is_t = np.array([r.arm == "t" for r in records])
    if args.transform == "log":
        if np.any(y <= 0):
            raise ValueError("log transform needs positive outcomes")
        y = np.log(y)
    res = mann_whitney(y[is_t], y[~is_t])
    echo = {"input": str(args.input), "outcome": args.outcome, "arm": args.arm,
            "transform": args.transform, "records": len(records)}
    return {"config": echo, "results": {"mann_whitney": {
        "statistic": res.statistic, "p_value": res.p_value, "z": res.z,
        "n_treatment": int(is_t.sum()), "n_control": int((~is_t).sum())}}}


def cmd_simulate(args) -> dict:
    cfg = config_from_args(args)
    if len(args.sizes) != 3:
        raise ValueError("--sizes needs three arm sizes")
    spec = build_scenario(args.scenario, args.variant, args.sizes, gamma=args.gamma)
    replicates = args.replicates or PROFILES[args.profile]["replicates"]
    report = rejection_rate(spec, replicates, cfg, SeededStream(cfg.seed), workers=args.workers)
    if args.csv:
        write_csv([report], args.csv)
    echo = {**cfg.as_dict(), "scenario": spec.label, "variant": spec.variant,
            "sizes": list(spec.sizes), "gamma": spec.gamma, "replicates": replicates,
            "profile": args.profile, "arms": [a.describe() for a in spec.arms],
            "log_transform": spec.log_transform}
    return {"config": echo, "results": {"reports": [report.to_dict()], "rows": report.rows()}}


def cmd_power(args) -> dict:
    cfg = config_from_args(args)
    base = build_scenario(args.scenario)
    replicates = args.replicates or PROFILES[args.profile]["replicates"]
    grid = power_sweep(base, args.gammas, args.ns, replicates, cfg, SeededStream(cfg.seed),
                       workers=args.workers)
    if args.csv:
        write_csv(grid, args.csv)
    echo = {**cfg.as_dict(), "scenario": base.label, "gammas": args.gammas, "ns": args.ns,
            "replicates": replicates, "profile": args.profile}
    return {"config": echo, "results": {"reports": [r.to_dict() for r in grid],
                                        "rows": [row for r in grid for row in r.rows()]}}


def cmd_case_study(args) -> dict:
    cfg = config_from_args(args)
    records = ingest_csv(args.input, args.outcome, args.arm,
                         covariates=[args.age_column, args.income_column])
    y = np.array([r.outcome for r in records])
    is_t = np.array([r.arm == "t" for r in records])
    mw = mann_whitney(y[is_t], y[~is_t])

    if args.age_quartiles:
        age_rule = ByQuantiles(args.age_column, 4)
    else:
        age_rule = ByQuantiles(args.age_column, breakpoints=tuple(args.age_breaks))
    by_age = stratify(records, age_rule)
    by_income = stratify(records, ByThreshold(args.income_column, 0.0))

    echo = {**cfg.as_dict(), "input": str(args.input), "outcome": args.outcome, "arm": args.arm,
            "age_rule": "quartiles" if args.age_quartiles else list(args.age_breaks),
            "income_threshold": 0.0, "records": len(records)}
    return {"config": echo, "results": {
        "mann_whitney": {"statistic": mw.statistic, "p_value": mw.p_value, "z": mw.z,
                         "n_treatment": int(is_t.sum()), "n_control": int((~is_t).sum())},
        "age": _het_block(by_age, cfg),
        "income": _het_block(by_income, cfg),
    }}


COMMANDS = {
    "het-test": cmd_het_test,
    "lrt": cmd_lrt,
    "mann-whitney": cmd_mann_whitney,
    "simulate": cmd_simulate,
    "power": cmd_power,
    "case-study": cmd_case_study,
}


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    start = time.perf_counter()
    try:
        payload = COMMANDS[args.command](args)
    except (StratHetError, ValueError, OSError) as exc:
        print(f"strathet {args.command}: error: {exc}", file=sys.stderr)
        return 1
    report = {"command": args.command, **payload,
              "timing": {"seconds": time.perf_counter() - start}}
    text = json.dumps(report, indent=2)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def main() -> None:
    sys.exit(run_cli())
