"""Command-line harness.

Subcommands::

    beliefbench optimal   [--config C] [--seed N] [--out DIR] [--no-plot]
    beliefbench evaluate  [--config C] [--seed N] [--out DIR] [--no-plot]
    beliefbench curve     [--config C] [--seed N] [--out DIR] [--no-plot]
    beliefbench selftest  [--config C]

``optimal`` reports the analytic per-shape guessing cost of the census
ordering; ``evaluate`` scores the configured expert's systems on the
reversal and guessing comparators; ``curve`` runs the bag experiment across
sample sizes; ``selftest`` re-derives core results by brute force and
reports pass/fail.  Exit codes: 0 success, 1 selftest/invariant failure,
2 config or input error.

Each report command writes a CSV (and, unless plotting is disabled, a
companion PNG) plus a manifest.json of output checksums into the output
directory.  Identical config and seed reproduce every output byte for byte.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from .blockworld import (
    SHAPES,
    ContingencyTable,
    PriorMode,
    TableFormatError,
    default_table,
    load_table,
)
from .calculi import (
    ContradictionError,
    ImpossibleEvidenceError,
    TotalConflictError,
    UndefinedCfError,
)
from .config import ConfigError, ExperimentConfig, load_config
from .evaluation import (
    BagCurvePoint,
    Calculus,
    ExpertSystem,
    GuessingReport,
    bag_experiment,
    guessing_task,
    optimal_guessing,
    reversal_test,
)
from .experts import (
    ConservativeExpert,
    ElicitationReport,
    NoisyExpert,
    OracleExpert,
    elicit,
    expert_label,
    train_learner,
)
from .reports import ResultRow, RunManifest, write_params, write_results
from .rng import substream
from .selftest import format_results, run_selfchecks

_ENGINE_ERRORS = (
    ImpossibleEvidenceError,
    TotalConflictError,
    ContradictionError,
    UndefinedCfError,
)


def _load_table(cfg: ExperimentConfig) -> ContingencyTable:
    if cfg.table_path is None:
        return default_table()
    return load_table(cfg.table_path)


def _elicit_reports(cfg: ExperimentConfig, table: ContingencyTable) -> list[tuple[str, ElicitationReport]]:
    """Run the configured expert's elicitation(s): (label, report) pairs."""
    spec = cfg.expert
    if spec.kind == "learner":
        reports = train_learner(
            table,
            n_trials=spec.trials,
            checkpoints=spec.checkpoints,
            rng=substream(cfg.base_seed, "train"),
            strength=spec.strength,
        )
        return [
            (f"learner(s={spec.strength:g},n={r.checkpoint})", r) for r in reports
        ]
    if spec.kind == "oracle":
        expert = OracleExpert()
    elif spec.kind == "noisy":
        expert = NoisyExpert(sigma=spec.sigma)
    else:
        expert = ConservativeExpert(lam=spec.lam)
    report = elicit(expert, table, substream(cfg.base_seed, "elicit"))
    return [(expert_label(expert), report)]


def _system_params(report: ElicitationReport, calculus: Calculus):
    return {
        Calculus.BAYES: report.bayes,
        Calculus.CF: report.cf,
        Calculus.DS: report.ds,
    }[calculus]


def _write_common(cfg: ExperimentConfig, manifest: RunManifest, started: float) -> None:
    manifest.duration_seconds = time.perf_counter() - started
    path = manifest.write(cfg.out_dir)
    print(f"wrote {path}")


def cmd_optimal(cfg: ExperimentConfig) -> int:
    started = time.perf_counter()
    table = _load_table(cfg)
    checksum = cfg.checksum()
    report = optimal_guessing(table)
    rows = [
        ResultRow(
            comparator="optimal", calculus="-", expert_model="-",
            shape_or_size=shape.label, metric="mean_guesses",
            value=report.mean[shape], std=report.std[shape],
            seed=cfg.base_seed, config_checksum=checksum,
        )
        for shape in SHAPES
    ]
    os.makedirs(cfg.out_dir, exist_ok=True)
    manifest = RunManifest("optimal", cfg.base_seed, checksum, cfg.canonical_text())
    csv_path = os.path.join(cfg.out_dir, "optimal.csv")
    write_results(csv_path, rows)
    manifest.record_output(cfg.out_dir, "optimal.csv")
    print(f"wrote {csv_path}")
    if cfg.plot:
        from .plotting import save_guessing_figure

        png_path = os.path.join(cfg.out_dir, "optimal.png")
        save_guessing_figure({"optimal": report}, report, png_path,
                             title="Optimal guessing cost by shape")
        manifest.record_output(cfg.out_dir, "optimal.png")
        print(f"wrote {png_path}")
    _write_common(cfg, manifest, started)
    return 0


def cmd_evaluate(cfg: ExperimentConfig) -> int:
    started = time.perf_counter()
    table = _load_table(cfg)
    checksum = cfg.checksum()
    labeled = _elicit_reports(cfg, table)
    rows: list[ResultRow] = []
    last_guessing: dict[str, GuessingReport] = {}
    for label, report in labeled:
        for calculus in cfg.calculi:
            system = ExpertSystem(calculus, _system_params(report, calculus))
            common = dict(calculus=calculus.value, expert_model=label,
                          seed=cfg.base_seed, config_checksum=checksum)
            try:
                score = reversal_test(system, table)
                rows.append(ResultRow(
                    comparator="reversal", shape_or_size="all",
                    metric="fraction", value=score.fraction, **common))
                rows.append(ResultRow(
                    comparator="reversal", shape_or_size="all",
                    metric="asked", value=score.asked, **common))
                rows.append(ResultRow(
                    comparator="reversal", shape_or_size="all",
                    metric="fraction_with_ties", value=score.fraction_with_ties,
                    **common))
            except _ENGINE_ERRORS as exc:
                rows.append(ResultRow(
                    comparator="reversal", shape_or_size="all", metric="fraction",
                    value=None, status=f"error:{type(exc).__name__}", **common))
            try:
                if cfg.guessing_mode == "montecarlo":
                    guessing = guessing_task(
                        system, table,
                        replications=cfg.guessing_replications,
                        rng=substream(cfg.base_seed, "guessing",
                                      calculus.value, report.checkpoint),
                    )
                else:
                    guessing = guessing_task(system, table)
                last_guessing[calculus.value] = guessing
                for shape in SHAPES:
                    rows.append(ResultRow(
                        comparator="guessing", shape_or_size=shape.label,
                        metric="mean_guesses", value=guessing.mean[shape],
                        std=guessing.std[shape],
                        replications=guessing.replications, **common))
            except _ENGINE_ERRORS as exc:
                rows.append(ResultRow(
                    comparator="guessing", shape_or_size="all",
                    metric="mean_guesses", value=None,
                    status=f"error:{type(exc).__name__}", **common))
    os.makedirs(cfg.out_dir, exist_ok=True)
    manifest = RunManifest("evaluate", cfg.base_seed, checksum, cfg.canonical_text())
    csv_path = os.path.join(cfg.out_dir, "evaluate.csv")
    write_results(csv_path, rows)
    manifest.record_output(cfg.out_dir, "evaluate.csv")
    print(f"wrote {csv_path}")
    params_path = os.path.join(cfg.out_dir, "params.csv")
    write_params(params_path, [report for _, report in labeled])
    manifest.record_output(cfg.out_dir, "params.csv")
    print(f"wrote {params_path}")
    if cfg.plot and last_guessing:
        from .plotting import save_guessing_figure

        png_path = os.path.join(cfg.out_dir, "evaluate.png")
        save_guessing_figure(last_guessing, optimal_guessing(table), png_path)
        manifest.record_output(cfg.out_dir, "evaluate.png")
        print(f"wrote {png_path}")
    _write_common(cfg, manifest, started)
    return 0


def _curve_observations(curves: dict[str, list[BagCurvePoint]]) -> list[str]:
    """Qualitative read-outs, reported but never asserted."""
    notes = []
    if "bayes" in curves and "cf" in curves:
        sizes = sorted(
            {p.sample_size for p in curves["bayes"]}
            & {p.sample_size for p in curves["cf"]}
        )
        if sizes:
            top = sizes[-1]
            mb = next(p.mean_guesses for p in curves["bayes"] if p.sample_size == top)
            mc = next(p.mean_guesses for p in curves["cf"] if p.sample_size == top)
            verdict = "yes" if mb < mc else "no"
            notes.append(
                f"largest bag size {top}: bayes mean {mb:.4f}, cf mean {mc:.4f} "
                f"(bayes advantage: {verdict})"
            )
    if "cf" in curves:
        points = {p.sample_size: p for p in curves["cf"]}
        later = [s for s in points if s > 5]
        if 5 in points and later:
            p5 = points[5]
            rest = min((points[s] for s in later), key=lambda p: p.mean_guesses)
            delta = p5.mean_guesses - rest.mean_guesses
            se = float(np.hypot(
                p5.std_guesses / np.sqrt(p5.replications),
                rest.std_guesses / np.sqrt(rest.replications),
            ))
            verdict = "yes" if abs(delta) <= 2 * se else "no"
            notes.append(
                f"cf mean at size 5 is {p5.mean_guesses:.4f}, best beyond is "
                f"{rest.mean_guesses:.4f} (plateau within 2 SE: {verdict})"
            )
    return notes


def cmd_curve(cfg: ExperimentConfig) -> int:
    started = time.perf_counter()
    table = _load_table(cfg)
    checksum = cfg.checksum()
    # Bags use the final elicitation only: diagnosis happens after training.
    label, report = _elicit_reports(cfg, table)[-1]
    rows: list[ResultRow] = []
    curves: dict[str, list[BagCurvePoint]] = {}
    for calculus in cfg.calculi:
        system = ExpertSystem(calculus, _system_params(report, calculus))
        # Every calculus gets an identically derived stream, hence the same
        # bag sequences: systems are compared on the same diagnoses.
        rng = substream(cfg.base_seed, "bags")
        common = dict(calculus=calculus.value, expert_model=label,
                      seed=cfg.base_seed, config_checksum=checksum)
        try:
            points = bag_experiment(
                system, table,
                sizes=cfg.bag_sizes,
                replications=cfg.bag_replications,
                prior_mode=cfg.prior_mode,
                rng=rng,
            )
        except _ENGINE_ERRORS as exc:
            rows.append(ResultRow(
                comparator="bags", shape_or_size="all", metric="mean_guesses",
                value=None, status=f"error:{type(exc).__name__}", **common))
            continue
        curves[calculus.value] = points
        for point in points:
            rows.append(ResultRow(
                comparator="bags", shape_or_size=str(point.sample_size),
                metric="mean_guesses", value=point.mean_guesses,
                std=point.std_guesses, replications=point.replications,
                conflicts=point.degraded, **common))
    os.makedirs(cfg.out_dir, exist_ok=True)
    manifest = RunManifest("curve", cfg.base_seed, checksum, cfg.canonical_text())
    csv_path = os.path.join(cfg.out_dir, "curve.csv")
    write_results(csv_path, rows)
    manifest.record_output(cfg.out_dir, "curve.csv")
    print(f"wrote {csv_path}")
    if cfg.plot and curves:
        from .plotting import save_curve_figure

        png_path = os.path.join(cfg.out_dir, "curve.png")
        save_curve_figure(curves, png_path)
        manifest.record_output(cfg.out_dir, "curve.png")
        print(f"wrote {png_path}")
    for note in _curve_observations(curves):
        manifest.observations.append(note)
        print(f"note: {note}")
    _write_common(cfg, manifest, started)
    return 0


def cmd_selftest(cfg: ExperimentConfig) -> int:
    table = _load_table(cfg)
    results = run_selfchecks(table)
    print(format_results(results))
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} of {len(results)} checks failed", file=sys.stderr)
        return 1
    print(f"all {len(results)} checks passed")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beliefbench",
        description="Compare Bayesian, certainty-factor, and Dempster-Shafer "
                    "aggregation on the colored-block guessing domain.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "optimal": "write the analytic optimal guessing cost per shape",
        "evaluate": "score the configured expert on reversal and guessing",
        "curve": "run the bag experiment across sample sizes",
        "selftest": "check the numerical core against brute-force oracles",
    }
    for name, help_text in specs.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", metavar="PATH",
                         help="experiment config file (defaults apply when omitted)")
        if name != "selftest":
            cmd.add_argument("--seed", type=int, metavar="N",
                             help="override the base seed")
            cmd.add_argument("--out", metavar="DIR",
                             help="override the output directory")
            cmd.add_argument("--no-plot", action="store_true",
                             help="skip the companion PNG")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(
            args.config,
            seed_override=getattr(args, "seed", None),
            out_override=getattr(args, "out", None),
            plot_override=False if getattr(args, "no_plot", False) else None,
        )
        handler = {
            "optimal": cmd_optimal,
            "evaluate": cmd_evaluate,
            "curve": cmd_curve,
            "selftest": cmd_selftest,
        }[args.command]
        return handler(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TableFormatError as exc:
        where = f" (line {exc.line})" if exc.line is not None else ""
        print(f"table error{where}: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"input not found: {exc.filename or exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
