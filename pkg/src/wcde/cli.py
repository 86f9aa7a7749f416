"""Command-line front end.

Subcommands mirror the module boundaries: ``estimate`` runs the plug-in
estimators on a dataset file, ``design`` simulates one run of the two-group
protocol, ``truth`` evaluates the ground-truth table, ``grid`` runs the full
replication study, and ``figure`` extracts bias-vs-coupling plot data.
Results go to stdout as a single JSON document; files land in ``--out-dir``.
Failures print one JSON error line to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .dataio import read_dataset, write_dataset
from .design import (
    ATE_SOURCES,
    DesignDataset,
    estimate_from_design,
    run_two_group_design,
)
from .estimands import GroupLabel
from .estimators import (
    EstimateReport,
    estimate_ate,
    estimate_ate_ipw,
    estimate_iie,
    estimate_nde_nie_plugin,
    estimate_wcde,
    estimate_wcde_stratified,
    fit_cell_statistics,
    merge_sparse_levels,
    reweight_hypothetical,
)
from .grid import (
    GridSpec,
    emit_figure_data,
    emit_table,
    read_result_rows,
    run_grid,
    write_manifest,
)
from .simulator import (
    SimulationConfig,
    compute_truth,
    make_oracle,
    sample_population,
    write_truth_table,
)

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors are machine readable."""

    def error(self, message):
        print(json.dumps({"error": "usage", "message": message}), file=sys.stderr)
        self.exit(2)


def _report_payload(report: EstimateReport) -> dict:
    return {
        "estimate": report.estimate,
        "se": report.se,
        "n_used": report.n_used,
        "notes": report.notes,
    }


def _emit(payload: dict) -> None:
    json.dump(payload, sys.stdout, sort_keys=True)
    sys.stdout.write("\n")


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------


def _cmd_estimate(args) -> int:
    data = read_dataset(args.dataset)
    payload: dict = {"dataset": str(args.dataset), "records": len(data)}
    if args.merge_sparse_cells:
        data, mapping = merge_sparse_levels(data, args.merge_sparse_cells)
        payload["merged_levels"] = {str(k): v for k, v in mapping.items()}
    if data.group is not None:
        if args.p_star is not None:
            raise ValueError("--p-star applies to a plain dataset, not a design one")
        reports = _estimate_design_file(data, args.ate_source)
    elif data.stratum is not None:
        if args.p_star is not None:
            raise ValueError("--p-star applies to a plain dataset, not a stratified one")
        wcde = estimate_wcde_stratified(data)
        ate = estimate_ate_ipw(data)
        reports = {"ATE": ate, "WCDE": wcde, "IIE": estimate_iie(ate, wcde)}
    else:
        if args.p_star is not None:
            data = reweight_hypothetical(data, args.p_star)
            payload["p_star"] = args.p_star
        ate = estimate_ate(data)
        wcde = estimate_wcde(fit_cell_statistics(data, data))
        nde, nie = estimate_nde_nie_plugin(data)
        reports = {
            "ATE": ate,
            "WCDE": wcde,
            "IIE": estimate_iie(ate, wcde),
            "NDE": nde,
            "NIE": nie,
        }
    payload["reports"] = {tag: _report_payload(r) for tag, r in reports.items()}
    _emit(payload)
    return 0


def _estimate_design_file(data, ate_source: str) -> dict[str, EstimateReport]:
    group = np.asarray(data.group)
    group1 = data.subset(group == GroupLabel.DESIGN_GROUP_1.value)
    group2 = data.subset(group == GroupLabel.DESIGN_GROUP_2.value)
    observational = data.subset(group == GroupLabel.OBSERVATIONAL.value)
    if len(group1) == 0 or len(group2) == 0:
        raise ValueError(
            "a dataset with a group column needs records in both design groups"
        )
    dataset = DesignDataset(
        group1=group1,
        group2=group2,
        observational=observational if len(observational) else None,
    )
    reports = estimate_from_design(dataset, ate_source=ate_source)
    if dataset.observational is not None:
        nde, nie = estimate_nde_nie_plugin(dataset.observational)
        reports["NDE"] = nde
        reports["NIE"] = nie
    return reports


# ---------------------------------------------------------------------------
# design / truth / grid / figure
# ---------------------------------------------------------------------------


def _cmd_design(args) -> int:
    config = SimulationConfig(
        phi=args.phi, p_treat=args.p, n=args.n, seed=args.seed
    )
    population = sample_population(config, args.n, stream_id=0)
    oracle = make_oracle(population)
    seed_seq = np.random.SeedSequence(entropy=args.seed, spawn_key=(1,))
    dataset = run_two_group_design(oracle, args.n, args.p, seed_seq)
    reports = estimate_from_design(dataset, ate_source=args.ate_source)
    nde, nie = estimate_nde_nie_plugin(dataset.observational)
    reports["NDE"] = nde
    reports["NIE"] = nie
    out = _out_dir(args)
    path = write_dataset(dataset.to_dataset(), out / "design_dataset.csv")
    _emit(
        {
            "n": args.n,
            "p": args.p,
            "phi": args.phi,
            "seed": args.seed,
            "dataset": str(path),
            "reports": {tag: _report_payload(r) for tag, r in reports.items()},
        }
    )
    return 0


def _cmd_truth(args) -> int:
    config = SimulationConfig(seed=args.seed)
    table = compute_truth(
        config,
        args.truth_pop_size,
        p_values=args.p_values,
        phi_values=args.phi_values,
    )
    out = _out_dir(args)
    path = write_truth_table(table, out / "truth_table.csv")
    _emit(
        {
            "truth_table": str(path),
            "population_size": table.population_size,
            "entries": len(table.entries),
        }
    )
    return 0


def _cmd_grid(args) -> int:
    spec = GridSpec(
        p_values=tuple(args.p_values),
        phi_values=tuple(args.phi_values),
        replications=args.reps,
        n=args.n,
        master_seed=args.seed,
    )
    base = SimulationConfig(n=spec.n, seed=spec.master_seed)
    truth = compute_truth(
        base, args.truth_pop_size, p_values=spec.p_values, phi_values=spec.phi_values
    )

    def progress(cell_rows):
        lead = cell_rows[0]
        print(f"cell p={lead.p} phi={lead.phi} done", file=sys.stderr)

    rows = run_grid(
        spec,
        truth=truth,
        ate_source=args.ate_source,
        workers=args.workers,
        progress=progress,
    )
    out = _out_dir(args)
    results_path = emit_table(rows, out / "grid_results.csv")
    truth_path = write_truth_table(truth, out / "truth_table.csv")
    manifest_path = write_manifest(
        out / "run_manifest.json",
        {
            "p_values": spec.p_values,
            "phi_values": spec.phi_values,
            "replications": spec.replications,
            "n": spec.n,
            "master_seed": spec.master_seed,
            "ate_source": args.ate_source,
            "workers": args.workers,
            "truth_population_size": args.truth_pop_size,
            "numpy": np.__version__,
        },
    )
    _emit(
        {
            "results": str(results_path),
            "truth_table": str(truth_path),
            "manifest": str(manifest_path),
            "rows": len(rows),
        }
    )
    return 0


def _cmd_figure(args) -> int:
    rows = read_result_rows(args.results)
    if args.p is not None:
        rows = [row for row in rows if row.p == args.p]
        if not rows:
            raise ValueError(f"no rows with p={args.p} in {args.results}")
    if args.bias_against == "wcde":
        rows = _bias_against_wcde_truth(rows)
    out = _out_dir(args)
    path = emit_figure_data(
        rows,
        out / "figure_data.csv",
        estimands=tuple(args.estimands),
        render=args.render,
    )
    payload = {"figure_data": str(path)}
    if args.render:
        payload["figure"] = str(path.with_suffix(".svg"))
    _emit(payload)
    return 0


def _bias_against_wcde_truth(rows):
    """Re-anchor every estimand's bias on the WCDE truth of its cell."""
    anchors = {(row.p, row.phi): row.truth for row in rows if row.estimand == "WCDE"}
    adjusted = []
    for row in rows:
        anchor = anchors.get((row.p, row.phi))
        if anchor is None or row.estimand == "WCDE":
            adjusted.append(row)
        else:
            adjusted.append(
                replace(row, truth=anchor, bias=row.mean_estimate - anchor)
            )
    return adjusted


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="wcde", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    spec_defaults = GridSpec()

    estimate = sub.add_parser("estimate", help="run estimators on a dataset file")
    estimate.add_argument("dataset", help="delimited dataset (columns t, m, y, ...)")
    estimate.add_argument(
        "--merge-sparse-cells",
        type=int,
        default=0,
        metavar="MIN_COUNT",
        help="merge mediator levels rarer than MIN_COUNT before estimating",
    )
    estimate.add_argument(
        "--p-star",
        type=float,
        default=None,
        help="reweight to this hypothetical treatment share before estimating",
    )
    estimate.add_argument("--ate-source", choices=ATE_SOURCES, default="observational")
    estimate.set_defaults(handler=_cmd_estimate)

    design = sub.add_parser("design", help="simulate one two-group protocol run")
    design.add_argument("--n", type=int, default=spec_defaults.n)
    design.add_argument("--p", type=float, default=0.5, help="treatment probability")
    design.add_argument("--phi", type=float, default=0.0, help="latent coupling")
    design.add_argument("--seed", type=int, default=0)
    design.add_argument("--ate-source", choices=ATE_SOURCES, default="observational")
    design.add_argument("--out-dir", default=".")
    design.set_defaults(handler=_cmd_design)

    truth = sub.add_parser("truth", help="evaluate the ground-truth table")
    truth.add_argument(
        "--p-values", type=float, nargs="+", default=list(spec_defaults.p_values)
    )
    truth.add_argument(
        "--phi-values", type=float, nargs="+", default=list(spec_defaults.phi_values)
    )
    truth.add_argument("--truth-pop-size", type=int, default=4_000_000)
    truth.add_argument("--seed", type=int, default=0)
    truth.add_argument("--out-dir", default=".")
    truth.set_defaults(handler=_cmd_truth)

    grid = sub.add_parser("grid", help="run the full replication study")
    grid.add_argument(
        "--p-values", type=float, nargs="+", default=list(spec_defaults.p_values)
    )
    grid.add_argument(
        "--phi-values", type=float, nargs="+", default=list(spec_defaults.phi_values)
    )
    grid.add_argument("--reps", type=int, default=spec_defaults.replications)
    grid.add_argument("--n", type=int, default=spec_defaults.n)
    grid.add_argument("--seed", type=int, default=spec_defaults.master_seed)
    grid.add_argument("--workers", type=int, default=1)
    grid.add_argument("--truth-pop-size", type=int, default=4_000_000)
    grid.add_argument("--ate-source", choices=ATE_SOURCES, default="observational")
    grid.add_argument("--out-dir", default=".")
    grid.set_defaults(handler=_cmd_grid)

    figure = sub.add_parser("figure", help="emit bias-vs-coupling plot data")
    figure.add_argument("--results", required=True, help="grid results file")
    figure.add_argument("--p", type=float, default=None, help="treatment share to plot")
    figure.add_argument(
        "--estimands", nargs="+", default=["WCDE", "NDE"], help="series to include"
    )
    figure.add_argument(
        "--bias-against",
        choices=("own", "wcde"),
        default="own",
        help="anchor comparator bias on its own truth or on the WCDE truth",
    )
    figure.add_argument("--render", action="store_true", help="also draw an SVG")
    figure.add_argument("--out-dir", default=".")
    figure.set_defaults(handler=_cmd_figure)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except Exception as exc:  # one machine-readable line, nonzero exit
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
