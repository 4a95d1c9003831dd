#!/usr/bin/env python3
"""
experiment_cli.py: phase diagrams, boundary scans, Monte Carlo exponent runs and
transfer-operator diagnostics for random dynamical systems.

Usage:
    python3 experiment_cli.py entropy --pA 0.3 --pB 0.6
    python3 experiment_cli.py phase-diagram --resolution 64 --out phase.csv [--svg phase.svg]
    python3 experiment_cli.py diag-scan --steps 199 --out diag.csv [--svg diag.svg]
    python3 experiment_cli.py exponent-mc --model bernoulli --pA 0.5 --pB 0.5 --n 1024 4096 \
        --replicas 200 --stat all --stat diag --out-json mc.json --out-csv mc.csv
    python3 experiment_cli.py transfer --preset cosine-doubling --out-json transfer.json
    python3 experiment_cli.py lcs x.txt y.txt --n 1000 --constraint offband --alpha 16

Every subcommand accepts --log-level; exponent-mc and transfer accept
--config FILE (UTF-8 JSON with ExperimentConfig fields; flags win).

Exit codes: 0 ok, 2 usage, 3 I/O, 4 resource limit, 5 numerical non-convergence.
"""

import argparse
import logging
import os
import sys
from multiprocessing import Pool
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from bernoulli_model import (
    DISCREPANCY_NOTE,
    ENV_MODEL_ID,
    BernoulliParams,
    closed_form_c_pm,
    diagonal_scan,
    exponent,
    exponent_level_set,
    phase_boundary_diag,
    phase_grid,
    printed_c_pm,
    renyi_quenched_printed,
    sample_fiber_sequence,
    trace_boundary,
)
from dimension_lab import RadiusGrid, fit_dimension, quenched_curve
from errors import FitError, ResourceLimitError, UsageError, exit_code_for
from models import (
    TOOL_VERSION,
    EntropyRecord,
    ExperimentConfig,
    ExponentReport,
    QuantileRow,
    ReplicaRecord,
    TheoryLines,
)
from orbit_matching import MatchConstraint, exponent_statistic, lcs_match, log_distance, min_dist_match, to_distance
from output_io import csv_text, json_text, read_json, read_symbols, write_csv, write_json
from rds_core import (
    CircleMapSystem,
    constant_env,
    gap_alpha,
    iterate_orbit,
    sample_circle_point,
    sample_env_path,
    seed64,
    stream_seed,
)
from transfer_operator import (
    FiberMeasureSampler,
    GridFunction,
    conformal_check,
    convergence_profile,
    fiber_measure,
    fiber_mixing_curve,
    fit_contraction,
    mixing_rate,
    preset_family,
    pushforward_residual,
    sample_family_env,
    smoothed_step,
    trig,
)

log = logging.getLogger("orbitgap.cli")

TRUNCATION_LIMIT = 0.01
PHASE_HEADER = ("pA", "pB", "h2_an", "h2_qu", "exponent", "regime")
DIAG_HEADER = ("pA", "exponent", "regime")
CONTOUR_LEVELS = (2.5, 3.0, 4.0, 6.0, 10.0)
QUANTILE_HEADER = ("n", "statistic", "q25", "q50", "q75", "median_value", "truncated", "replicas")


# ---------------- Records shared with the HTTP surface ----------------

def entropy_record(pA: float, pB: float) -> EntropyRecord:
    params = BernoulliParams(pA=pA, pB=pB)
    point = exponent(params)
    return EntropyRecord(
        pA=pA,
        pB=pB,
        h2_an=point.h2_an,
        h2_qu=point.h2_qu,
        exponent=point.exponent,
        regime=point.regime.value,
        h2_qu_printed=renyi_quenched_printed(params),
        note=DISCREPANCY_NOTE,
    )


def phase_rows(resolution: int) -> List[Tuple]:
    return [
        (p.params.pA, p.params.pB, p.h2_an, p.h2_qu, p.exponent, p.regime.value) for p in phase_grid(resolution)
    ]


def diag_boundary_report(k: int = 12) -> Dict:
    closed = phase_boundary_diag(source="closed")
    cylinders = phase_boundary_diag(source="cylinders", k=k)
    return {
        "c_minus": closed[0],
        "c_plus": closed[1],
        "c_minus_cylinders": cylinders[0],
        "c_plus_cylinders": cylinders[1],
        "cylinder_length": k,
        "c_pm_closed_form": list(closed_form_c_pm()),
        "c_pm_printed": list(printed_c_pm()),
        "note": DISCREPANCY_NOTE,
    }


# ---------------- entropy / phase diagram / diagonal scan ----------------

def cmd_entropy(pA: float, pB: float) -> EntropyRecord:
    record = entropy_record(pA, pB)
    sys.stdout.write(json_text(record))
    return record


def cmd_phase_diagram(resolution: int, out: Optional[str] = None, svg: Optional[str] = None) -> List[Tuple]:
    rows = phase_rows(resolution)
    if out:
        write_csv(out, PHASE_HEADER, rows)
        log.info("wrote %d rows to %s", len(rows), out)
    else:
        sys.stdout.write(csv_text(PHASE_HEADER, rows))
    if svg:
        from plotting import phase_diagram_svg

        phase_diagram_svg(phase_grid(resolution), resolution, svg, boundary=trace_boundary(64).samples,
                          contours=[exponent_level_set(c) for c in CONTOUR_LEVELS])
    return rows


def cmd_diag_scan(steps: int, out: Optional[str] = None, report_path: Optional[str] = None,
                  svg: Optional[str] = None) -> Dict:
    points = diagonal_scan(steps)
    rows = [(p.params.pA, p.exponent, p.regime.value) for p in points]
    if out:
        write_csv(out, DIAG_HEADER, rows)
    else:
        sys.stdout.write(csv_text(DIAG_HEADER, rows))
    report = diag_boundary_report()
    if report_path:
        write_json(report_path, report)
    log.info("c- = %.6f (cylinders %.6f), printed %.5f", report["c_minus"], report["c_minus_cylinders"],
             report["c_pm_printed"][0])
    if svg:
        from plotting import diagonal_scan_svg

        diagonal_scan_svg(points, (report["c_minus"], report["c_plus"]), svg)
    return report


# ---------------- Monte Carlo ----------------

def _constraint_for(statistic: str, n: int, c4: float) -> MatchConstraint:
    if statistic == "all":
        return MatchConstraint.all()
    if statistic == "diag":
        return MatchConstraint.diagonal()
    if statistic == "farthirds":
        return MatchConstraint.far_thirds()
    alpha = gap_alpha(n, c4)
    if statistic == "band":
        return MatchConstraint.band(alpha)
    return MatchConstraint.offband(min(alpha, n - 2))


def _symbolic_pair(cfg: ExperimentConfig, replica: int, length: int):
    params = BernoulliParams(pA=cfg.pA, pB=cfg.pB)
    env = sample_env_path(seed64(stream_seed(cfg.seed, replica, "env")), ENV_MODEL_ID, 2, 0, length)
    x = sample_fiber_sequence(params, env, stream_seed(cfg.seed, replica, "x"), length)
    y = sample_fiber_sequence(params, env, stream_seed(cfg.seed, replica, "y"), length)
    return x, y


def _circle_pair(cfg: ExperimentConfig, replica: int, n: int):
    degrees = (2,) if cfg.model == "doubling" else tuple(cfg.degrees)
    system = CircleMapSystem(degrees=degrees)
    bits = system.precision_for(n)
    system = system.with_precision(bits)
    if cfg.model == "doubling":
        env = constant_env(n)
    else:
        env_seed = seed64(stream_seed(cfg.seed, replica, "env"))
        env = sample_env_path(env_seed, "circle-" + "-".join(map(str, degrees)), len(degrees), 0, n)
    rng_x = np.random.Generator(np.random.PCG64(stream_seed(cfg.seed, replica, "x")))
    rng_y = np.random.Generator(np.random.PCG64(stream_seed(cfg.seed, replica, "y")))
    xs = iterate_orbit(system, env, sample_circle_point(rng_x, bits), n).points
    ys = iterate_orbit(system, env, sample_circle_point(rng_y, bits), n).points
    return xs, ys, system.space


def run_replica(task: Tuple[dict, int, int, int]) -> List[dict]:
    """All requested statistics for one (replica, n); the worker-pool unit of work."""
    cfg_data, replica, n, cap = task
    cfg = ExperimentConfig(**cfg_data)
    records = []
    if cfg.model == "bernoulli":
        x, y = _symbolic_pair(cfg, replica, n + cap)
        for stat in cfg.statistics:
            result = lcs_match(x, y, n, _constraint_for(stat, n, cfg.c4))
            records.append(ReplicaRecord(
                replica=replica, n=n, statistic=stat, value=result.value, exponent=exponent_statistic(result),
                witness=list(result.witness), truncated=result.truncated, cap=cap,
            ))
    else:
        xs, ys, space = _circle_pair(cfg, replica, n)
        for stat in cfg.statistics:
            result = min_dist_match(xs, ys, _constraint_for(stat, n, cfg.c4), space)
            records.append(ReplicaRecord(
                replica=replica, n=n, statistic=stat, value=result.value, exponent=exponent_statistic(result),
                witness=list(result.witness), truncated=False, cap=0,
            ))
    return [r.model_dump() for r in records]


def _map(tasks: List[tuple], workers: int) -> List[List[dict]]:
    if workers <= 1 or len(tasks) <= 1:
        return [run_replica(t) for t in tasks]
    with Pool(processes=workers) as pool:
        # map keeps task order, so results do not depend on scheduling
        return pool.map(run_replica, tasks, chunksize=1)


def _quantile_rows(n: int, statistics: Sequence[str], records: Dict[int, List[ReplicaRecord]]) -> List[QuantileRow]:
    rows = []
    for stat in statistics:
        chosen = [r for rep in sorted(records) for r in records[rep] if r.statistic == stat]
        ex = np.array([r.exponent for r in chosen], dtype=float)
        q25, q50, q75 = (float(v) for v in np.quantile(ex, [0.25, 0.5, 0.75]))
        rows.append(QuantileRow(
            n=n, statistic=stat, q25=q25, q50=q50, q75=q75,
            median_value=float(np.median([r.value for r in chosen])),
            truncated=sum(r.truncated for r in chosen), replicas=len(chosen),
        ))
    return rows


def theory_lines(cfg: ExperimentConfig) -> TheoryLines:
    if cfg.model == "bernoulli":
        point = exponent(BernoulliParams(pA=cfg.pA, pB=cfg.pB))
        return TheoryLines(annealed=2.0 / point.h2_an, quenched=1.0 / point.h2_qu, limit=point.exponent)
    # conformal circle maps: every fiber measure is Lebesgue, D2 = 1
    return TheoryLines(annealed=2.0, quenched=1.0, limit=2.0)


def _run_n(cfg: ExperimentConfig, n: int, cap_increases: Dict[str, int]) -> Dict[int, List[ReplicaRecord]]:
    cap = cfg.cap_for(n) if cfg.model == "bernoulli" else 0
    data = cfg.model_dump()
    tasks = [(data, r, n, cap) for r in range(cfg.replicas)]
    records = {r: [ReplicaRecord(**d) for d in out] for r, out in zip(range(cfg.replicas), _map(tasks, cfg.workers))}
    while True:
        bad = [r for r in sorted(records) if any(rec.truncated for rec in records[r])]
        if len(bad) <= TRUNCATION_LIMIT * cfg.replicas:
            return records
        cap *= 2
        log.warning("n=%d: %d of %d replicas truncated, rerunning them with cap %d", n, len(bad), cfg.replicas, cap)
        if cap > cfg.max_cap:
            raise ResourceLimitError(f"n={n}: sequence cap would exceed max_cap={cfg.max_cap}")
        cap_increases[str(n)] = cap
        rerun = _map([(data, r, n, cap) for r in bad], cfg.workers)
        for r, out in zip(bad, rerun):
            records[r] = [ReplicaRecord(**d) for d in out]


def _write_report(cfg: ExperimentConfig, report: ExponentReport) -> None:
    text_rows = [
        (row.n, row.statistic, row.q25, row.q50, row.q75, row.median_value, row.truncated, row.replicas)
        for row in report.rows
    ]
    if cfg.out_csv:
        write_csv(cfg.out_csv, QUANTILE_HEADER, text_rows)
    if cfg.out_json:
        write_json(cfg.out_json, report)
    if not cfg.out_csv and not cfg.out_json:
        sys.stdout.write(json_text(report))


def cmd_exponent_mc(cfg: ExperimentConfig) -> ExponentReport:
    log.info("exponent-mc: model=%s replicas=%d schedule=%s workers=%d", cfg.model, cfg.replicas, cfg.n_schedule,
             cfg.workers)
    report = ExponentReport(
        config=cfg,
        seed=cfg.seed,
        rows=[],
        theory=theory_lines(cfg),
        note=DISCREPANCY_NOTE if cfg.model == "bernoulli" else None,
    )
    try:
        for n in cfg.n_schedule:
            records = _run_n(cfg, n, report.cap_increases)
            report.rows.extend(_quantile_rows(n, cfg.statistics, records))
            log.info("n=%d done: %s", n, ", ".join(f"{r.statistic} q50={r.q50:.4f}" for r in report.rows[-len(cfg.statistics):]))
    except ResourceLimitError:
        # keep what was finished
        _write_report(cfg, report)
        raise
    _write_report(cfg, report)
    return report


# ---------------- Transfer operator diagnostics ----------------

def cmd_transfer(cfg: ExperimentConfig, k_max: int = 12, dim_envs: int = 10, dim_points: int = 2000) -> Dict:
    family = preset_family(cfg.preset, cfg.grid_size)
    depth = cfg.depth
    env_seed = seed64(stream_seed(cfg.seed, 0, "env"))
    env = sample_family_env(family, env_seed, -depth, max(depth + 2, k_max))
    g = cfg.grid_size
    probes = {
        "x": lambda x: np.mod(x, 1.0),
        "cos": trig("cos", 1, g),
        "step": smoothed_step(0.25, 0.75, 0.05, g),
        "one": GridFunction.constant(1.0, g),
    }
    integrals = {}
    for name, f in probes.items():
        # ConvergenceError propagates to main (exit 5)
        est = fiber_measure(family, env, depth, depth, f, tol=cfg.tolerance, max_depth=cfg.max_depth)
        integrals[name] = {"value": est.value, "residual": est.residual, "depth": est.n}
    depths = [d for d in (2, 4, 8, 16, 32, 64) if d <= depth]
    residuals = convergence_profile(family, env, probes["step"], depths)
    try:
        contraction: Optional[float] = fit_contraction(depths, residuals)
    except FitError as e:
        log.info("no contraction fit: %s", e)
        contraction = None
    curve = fiber_mixing_curve(family, env, depth, depth, probes["cos"], probes["cos"], k_max)

    sampler = FiberMeasureSampler(family, depth, depth)
    dim_curve = quenched_curve(sampler, dim_envs, dim_points, RadiusGrid.spanning(1e-3, 1e-1, 12), cfg.seed)
    dim_fit = fit_dimension(dim_curve)

    conformal = preset_family("conformal", g)
    conformal_env = sample_family_env(conformal, env_seed, -depth, depth + 1)
    record = {
        "tool_version": TOOL_VERSION,
        "config": cfg,
        "preset": cfg.preset,
        "grid_size": g,
        "depth": depth,
        "conformal_check": conformal_check(conformal),
        "conformal_integrals": {
            name: fiber_measure(conformal, conformal_env, depth, depth, probes[name]).value
            for name in ("x", "cos", "step")
        },
        "transfer_one_residual": conformal_check(family),
        "integrals": integrals,
        "pushforward_residual": pushforward_residual(family, env, depth, depth),
        "convergence": {"depths": depths, "residuals": residuals, "contraction": contraction},
        "mixing": {"curve": curve, "log_slope": mixing_rate(curve)},
        "quenched_dimension": {"slope": dim_fit.slope, "residual": dim_fit.residual,
                               "environments": dim_envs, "points": dim_points},
    }
    if cfg.out_json:
        write_json(cfg.out_json, record)
    else:
        sys.stdout.write(json_text(record))
    return record


# ---------------- lcs ----------------

def cmd_lcs(file_x: str, file_y: str, n: Optional[int], constraint: MatchConstraint,
            byte_alphabet: bool = False) -> Dict:
    x = read_symbols(file_x, byte_alphabet)
    y = read_symbols(file_y, byte_alphabet)
    if not x or not y:
        raise UsageError("input files must contain at least one symbol")
    n = min(len(x), len(y)) if n is None else n
    result = lcs_match(x, y, n, constraint)
    record = {
        "m": result.length,
        "witness": list(result.witness),
        "truncated": result.truncated,
        "n": n,
        "constraint": constraint.label(),
        "distance": to_distance(result.length),
        "log_distance": log_distance(result.length),
    }
    sys.stdout.write(json_text(record))
    return record


# ---------------- argparse ----------------

def _config_from(args: argparse.Namespace) -> ExperimentConfig:
    data = {}
    if getattr(args, "config", None):
        data.update(read_json(args.config))
    flags = {k: v for k, v in vars(args).items() if k in ExperimentConfig.model_fields}
    data.update(flags)
    if "workers" not in data:
        data["workers"] = int(os.environ.get("ORBITGAP_WORKERS", "1"))
    return ExperimentConfig(**data)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", help="UTF-8 JSON file with ExperimentConfig fields")
    p.add_argument("--model", choices=("bernoulli", "circle", "doubling"), default=S)
    p.add_argument("--pA", type=float, default=S)
    p.add_argument("--pB", type=float, default=S)
    p.add_argument("--degrees", type=int, nargs="+", default=S)
    p.add_argument("--preset", default=S, help="transfer-operator family: conformal, cosine-doubling, mixed")
    p.add_argument("--n", dest="n_schedule", type=int, nargs="+", default=S, help="window lengths, increasing")
    p.add_argument("--replicas", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--stat", dest="statistics", action="append",
                   choices=("all", "diag", "band", "offband", "farthirds"), default=S)
    p.add_argument("--c4", type=float, default=S)
    p.add_argument("--cap", type=int, default=S)
    p.add_argument("--max-cap", dest="max_cap", type=int, default=S)
    p.add_argument("--workers", type=int, default=S)
    p.add_argument("--grid-size", dest="grid_size", type=int, default=S)
    p.add_argument("--depth", type=int, default=S)
    p.add_argument("--tolerance", type=float, default=S, help="largest accepted fiber-measure residual")
    p.add_argument("--max-depth", dest="max_depth", type=int, default=S)
    p.add_argument("--out-json", dest="out_json", default=S)
    p.add_argument("--out-csv", dest="out_csv", default=S)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="experiment_cli", description=__doc__.split("\n\n")[0])
    ap.add_argument("--log-level", default=os.environ.get("ORBITGAP_LOG_LEVEL", "INFO"))
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("entropy", help="closed-form Renyi entropies and the limit exponent")
    p.add_argument("--pA", type=float, required=True)
    p.add_argument("--pB", type=float, required=True)

    p = sub.add_parser("phase-diagram", help="exponent and regime on a resolution x resolution grid")
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--out", help="CSV path (stdout when omitted)")
    p.add_argument("--svg", help="optional SVG heat map")

    p = sub.add_parser("diag-scan", help="exponent along pB = 1 - pA and the boundary points")
    p.add_argument("--steps", type=int, default=199)
    p.add_argument("--out", help="CSV path (stdout when omitted)")
    p.add_argument("--report", help="JSON path for the boundary report (stderr log when omitted)")
    p.add_argument("--svg", help="optional SVG line plot")

    p = sub.add_parser("exponent-mc", help="Monte Carlo distribution of the exponent statistic")
    _add_config_flags(p)

    p = sub.add_parser("transfer", help="fiber measures, equivariance and mixing diagnostics")
    _add_config_flags(p)
    p.add_argument("--k-max", dest="k_max_steps", type=int, default=12)
    p.add_argument("--dim-envs", type=int, default=10)
    p.add_argument("--dim-points", type=int, default=2000)

    p = sub.add_parser("lcs", help="constrained longest common substring of two symbol files")
    p.add_argument("file_x")
    p.add_argument("file_y")
    p.add_argument("--n", type=int, help="window starts (default: shorter file length)")
    p.add_argument("--constraint", choices=("all", "diag", "band", "offband", "farthirds"), default="all")
    p.add_argument("--alpha", type=int, default=0)
    p.add_argument("--bytes", dest="byte_alphabet", action="store_true", help="treat files as raw bytes")
    return ap


def _dispatch(args: argparse.Namespace) -> None:
    if args.command == "entropy":
        cmd_entropy(args.pA, args.pB)
    elif args.command == "phase-diagram":
        cmd_phase_diagram(args.resolution, args.out, args.svg)
    elif args.command == "diag-scan":
        cmd_diag_scan(args.steps, args.out, args.report, args.svg)
    elif args.command == "exponent-mc":
        cmd_exponent_mc(_config_from(args))
    elif args.command == "transfer":
        cmd_transfer(_config_from(args), args.k_max_steps, args.dim_envs, args.dim_points)
    elif args.command == "lcs":
        kind = args.constraint
        constraint = {
            "all": MatchConstraint.all,
            "diag": MatchConstraint.diagonal,
            "farthirds": MatchConstraint.far_thirds,
            "band": lambda: MatchConstraint.band(args.alpha),
            "offband": lambda: MatchConstraint.offband(args.alpha),
        }[kind]()
        cmd_lcs(args.file_x, args.file_y, args.n, constraint, args.byte_alphabet)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=str(args.log_level).upper(), format="[%(levelname)s] %(message)s")
    try:
        _dispatch(args)
    except Exception as e:
        code = exit_code_for(e)
        if code == 1:
            log.exception("%s failed", args.command)
        else:
            log.error("%s: %s", type(e).__name__, e)
        return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
