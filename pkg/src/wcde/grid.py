"""Replication grids comparing estimators against ground truth.

For every (treatment share, latent coupling) cell the engine repeatedly
samples a fresh finite population, runs the two-group protocol plus the
observational comparator, and aggregates estimator means, biases, spreads,
and average analytic standard errors against the truth table.  Streams are
keyed by (cell indices, replication, role), so results are byte-identical
for a fixed master seed regardless of worker count.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .design import estimate_from_design, run_two_group_design
from .estimators import EstimationError, estimate_nde_nie_plugin
from .simulator import (
    SimulationConfig,
    TruthTable,
    compute_truth,
    make_oracle,
    sample_population,
)

__all__ = [
    "CellReplicates",
    "ESTIMANDS",
    "GridResultRow",
    "GridSpec",
    "emit_figure_data",
    "emit_table",
    "read_result_rows",
    "replicate_cell",
    "run_grid",
    "write_manifest",
]

ESTIMANDS = ("ATE", "WCDE", "IIE", "NDE", "NIE")

_TABLE_COLUMNS = (
    "p",
    "phi",
    "estimand",
    "truth",
    "mean_estimate",
    "bias",
    "sd_estimates",
    "mean_delta_se",
    "replications",
    "note",
)


@dataclass(frozen=True)
class GridSpec:
    """The replication study grid: which cells, how many replications."""

    p_values: tuple[float, ...] = (0.01, 0.1, 0.3, 0.5)
    phi_values: tuple[float, ...] = (-0.15, -0.1, -0.05, 0.0, 0.05, 0.1, 0.15)
    replications: int = 1000
    n: int = 4000
    master_seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "p_values", tuple(float(p) for p in self.p_values))
        object.__setattr__(self, "phi_values", tuple(float(f) for f in self.phi_values))
        if not self.p_values or not self.phi_values:
            raise ValueError("p_values and phi_values must be nonempty")
        if self.replications < 2:
            raise ValueError("need at least two replications")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.master_seed < 0:
            raise ValueError("master_seed must be nonnegative")


@dataclass(frozen=True)
class GridResultRow:
    """Aggregated estimator performance for one estimand in one cell."""

    p: float
    phi: float
    estimand: str
    truth: float
    mean_estimate: float
    bias: float
    sd_estimates: float
    mean_delta_se: float | None
    replications: int
    note: str = ""


@dataclass(frozen=True)
class CellReplicates:
    """Raw per-replication estimates for one grid cell.

    ``skipped`` counts replications lost to empty required cells (possible
    at extreme treatment shares); arrays hold the successes only.  The
    ``*_se`` arrays carry analytic standard errors (NaN where unavailable).
    """

    p: float
    phi: float
    ate: np.ndarray
    wcde: np.ndarray
    iie: np.ndarray
    nde: np.ndarray
    nie: np.ndarray
    ate_se: np.ndarray
    wcde_se: np.ndarray
    iie_se: np.ndarray
    attempted: int
    skipped: int
    skip_note: str = ""

    def estimates(self, tag: str) -> np.ndarray:
        return getattr(self, tag.lower())

    def delta_se(self, tag: str) -> np.ndarray | None:
        return getattr(self, f"{tag.lower()}_se", None)


def replicate_cell(
    config: SimulationConfig,
    replications: int,
    stream_prefix: tuple[int, ...] = (),
    ate_source: str = "observational",
) -> CellReplicates:
    """Run one cell's replications and collect raw estimates.

    Each replication samples config.n fresh units, runs the two-group
    protocol with an observational view, and records the design estimates
    plus the classical plug-in comparator.  A replication that raises
    :class:`EstimationError` (an empty required cell) is skipped and
    counted; any other failure propagates.
    """
    collected: dict[str, list[float]] = {key: [] for key in
                                         ("ate", "wcde", "iie", "nde", "nie",
                                          "ate_se", "wcde_se", "iie_se")}
    skipped = 0
    skip_note = ""
    for r in range(replications):
        population = sample_population(
            config, config.n, stream_id=(*stream_prefix, r, 0)
        )
        oracle = make_oracle(population)
        seed_seq = np.random.SeedSequence(
            entropy=config.seed, spawn_key=(*stream_prefix, r, 1)
        )
        try:
            dataset = run_two_group_design(
                oracle, config.n, config.p_treat, seed_seq, observational=True
            )
            reports = estimate_from_design(dataset, ate_source=ate_source)
            nde, nie = estimate_nde_nie_plugin(dataset.observational)
        except EstimationError as exc:
            skipped += 1
            if not skip_note:
                skip_note = str(exc)
            continue
        collected["ate"].append(reports["ATE"].estimate)
        collected["wcde"].append(reports["WCDE"].estimate)
        collected["iie"].append(reports["IIE"].estimate)
        collected["nde"].append(nde.estimate)
        collected["nie"].append(nie.estimate)
        for key, report in (("ate_se", reports["ATE"]),
                            ("wcde_se", reports["WCDE"]),
                            ("iie_se", reports["IIE"])):
            collected[key].append(math.nan if report.se is None else report.se)
    return CellReplicates(
        p=config.p_treat,
        phi=config.phi,
        attempted=replications,
        skipped=skipped,
        skip_note=skip_note,
        **{key: np.asarray(values) for key, values in collected.items()},
    )


def _cell_rows(args) -> list[GridResultRow]:
    base, spec, truth, p_index, phi_index, ate_source = args
    p = spec.p_values[p_index]
    phi = spec.phi_values[phi_index]
    config = replace(base, p_treat=p, phi=phi, n=spec.n, seed=spec.master_seed)
    try:
        cell = replicate_cell(
            config,
            spec.replications,
            stream_prefix=(p_index, phi_index),
            ate_source=ate_source,
        )
        if len(cell.wcde) < 2:
            raise EstimationError(
                f"fewer than two successful replications ({cell.skip_note})"
            )
    except Exception as exc:  # diagnostic row; the rest of the grid survives
        return [
            GridResultRow(
                p=p,
                phi=phi,
                estimand="ERROR",
                truth=math.nan,
                mean_estimate=math.nan,
                bias=math.nan,
                sd_estimates=math.nan,
                mean_delta_se=None,
                replications=0,
                note=f"cell aborted: {exc}",
            )
        ]
    note = ""
    if cell.skipped:
        note = (
            f"skipped {cell.skipped} of {cell.attempted} replications "
            f"with empty required cells (first: {cell.skip_note})"
        )
    rows = []
    for tag in ESTIMANDS:
        estimates = cell.estimates(tag)
        truth_value = truth.value(p, phi, tag).value
        mean_estimate = float(np.mean(estimates))
        ses = cell.delta_se(tag)
        if ses is None or np.isnan(ses).all():
            mean_delta_se = None
        else:
            mean_delta_se = float(np.nanmean(ses))
        rows.append(
            GridResultRow(
                p=p,
                phi=phi,
                estimand=tag,
                truth=truth_value,
                mean_estimate=mean_estimate,
                bias=mean_estimate - truth_value,
                sd_estimates=float(np.std(estimates, ddof=1)),
                mean_delta_se=mean_delta_se,
                replications=int(estimates.shape[0]),
                note=note,
            )
        )
    return rows


def run_grid(
    spec: GridSpec,
    overrides: dict | None = None,
    *,
    truth: TruthTable | None = None,
    truth_population_size: int | None = None,
    ate_source: str = "observational",
    workers: int = 1,
    progress=None,
) -> list[GridResultRow]:
    """Replicate every grid cell and aggregate against the truth table.

    ``overrides`` adjusts process parameters (mixture, coupling pattern,
    identical_mediators, ...) on top of the defaults; ``truth`` may be a
    precomputed table, otherwise one is generated.  ``workers`` > 1 spreads
    cells over processes; results are identical to the sequential run.
    """
    base = SimulationConfig(**(overrides or {}))
    base = replace(base, n=spec.n, seed=spec.master_seed)
    if truth is None:
        size = truth_population_size or 4_000_000
        truth = compute_truth(
            base, size, p_values=spec.p_values, phi_values=spec.phi_values
        )
    jobs = [
        (base, spec, truth, p_index, phi_index, ate_source)
        for p_index in range(len(spec.p_values))
        for phi_index in range(len(spec.phi_values))
    ]
    rows: list[GridResultRow] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for cell_rows in pool.map(_cell_rows, jobs):
                rows.extend(cell_rows)
                if progress:
                    progress(cell_rows)
    else:
        for job in jobs:
            cell_rows = _cell_rows(job)
            rows.extend(cell_rows)
            if progress:
                progress(cell_rows)
    return rows


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_table(rows: list[GridResultRow], path) -> Path:
    """Write result rows as delimited text with a fixed column order."""
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(_TABLE_COLUMNS)
        for row in rows:
            writer.writerow([_format(getattr(row, column)) for column in _TABLE_COLUMNS])
    return path


def read_result_rows(path) -> list[GridResultRow]:
    """Read rows previously written by :func:`emit_table`."""
    path = Path(path)
    rows = []
    with path.open(newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames != list(_TABLE_COLUMNS):
            raise ValueError(f"{path}: unexpected result-table header")
        for record in reader:
            rows.append(
                GridResultRow(
                    p=float(record["p"]),
                    phi=float(record["phi"]),
                    estimand=record["estimand"],
                    truth=float(record["truth"]),
                    mean_estimate=float(record["mean_estimate"]),
                    bias=float(record["bias"]),
                    sd_estimates=float(record["sd_estimates"]),
                    mean_delta_se=(
                        float(record["mean_delta_se"])
                        if record["mean_delta_se"]
                        else None
                    ),
                    replications=int(record["replications"]),
                    note=record["note"],
                )
            )
    return rows


def emit_figure_data(
    rows: list[GridResultRow],
    path,
    estimands: tuple[str, ...] = ("WCDE", "NDE"),
    render: bool = False,
    render_path=None,
) -> Path:
    """Write per-estimand (phi, bias, sd) series for the bias comparison.

    Expects rows from a single treatment share; pass ``render=True`` to
    also draw the series (requires matplotlib, saved next to the data as
    SVG unless ``render_path`` says otherwise).
    """
    selected = [row for row in rows if row.estimand in estimands]
    if not selected:
        raise ValueError("no rows match the requested estimands")
    if len({row.p for row in selected}) > 1:
        raise ValueError("figure data must come from a single treatment share")
    selected.sort(key=lambda row: (estimands.index(row.estimand), row.phi))
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["estimand", "phi", "bias", "sd"])
        for row in selected:
            writer.writerow(
                [row.estimand, repr(row.phi), repr(row.bias), repr(row.sd_estimates)]
            )
    if render:
        target = Path(render_path) if render_path else path.with_suffix(".svg")
        _render_figure(selected, estimands, target)
    return path


def _render_figure(rows, estimands, target: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for tag in estimands:
        series = [row for row in rows if row.estimand == tag]
        if not series:
            continue
        phis = [row.phi for row in series]
        biases = [row.bias for row in series]
        sds = [row.sd_estimates for row in series]
        ax.errorbar(phis, biases, yerr=sds, marker="o", capsize=3, label=tag)
    ax.axhline(0.0, color="gray", linewidth=0.8)
    ax.set_xlabel("latent mediator-outcome coupling")
    ax.set_ylabel("bias of mean estimate")
    ax.legend()
    fig.tight_layout()
    fig.savefig(target)
    plt.close(fig)


def write_manifest(path, payload: dict) -> Path:
    """Write a JSON run manifest (config values, seed, tool version)."""
    from . import __version__

    path = Path(path)
    manifest = {"tool": "wcde", "version": __version__}
    manifest.update(payload)
    with path.open("w") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True, default=str)
        handle.write("\n")
    return path
