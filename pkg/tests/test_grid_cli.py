"""Tests for the replication grid and the command-line front end."""

import json

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from wcde import (
    GridSpec,
    ObservedData,
    SimulationConfig,
    compute_truth,
    emit_figure_data,
    emit_table,
    read_result_rows,
    replicate_cell,
    run_grid,
    write_dataset,
    write_manifest,
)
from wcde.cli import main
from wcde.grid import ESTIMANDS


@pytest.fixture(scope="module")
def small_truth():
    return compute_truth(
        SimulationConfig(seed=0),
        50_000,
        p_values=(0.1, 0.5),
        phi_values=(-0.1, 0.0),
    )


@pytest.fixture(scope="module")
def small_rows(small_truth):
    spec = GridSpec(
        p_values=(0.1, 0.5),
        phi_values=(-0.1, 0.0),
        replications=12,
        n=400,
        master_seed=0,
    )
    return spec, run_grid(spec, truth=small_truth)


# ---------------------------------------------------------------------------
# grid mechanics
# ---------------------------------------------------------------------------


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        GridSpec(p_values=())
    with pytest.raises(ValueError):
        GridSpec(replications=1)
    with pytest.raises(ValueError):
        GridSpec(n=1)


def test_row_structure(small_rows):
    spec, rows = small_rows
    assert len(rows) == 2 * 2 * 5
    cells = [(r.p, r.phi) for r in rows[::5]]
    assert cells == [(0.1, -0.1), (0.1, 0.0), (0.5, -0.1), (0.5, 0.0)]
    for start in range(0, len(rows), 5):
        assert tuple(r.estimand for r in rows[start : start + 5]) == ESTIMANDS


def test_bias_equals_mean_minus_truth_exactly(small_rows):
    _, rows = small_rows
    for row in rows:
        assert row.bias == row.mean_estimate - row.truth
        assert row.sd_estimates >= 0.0
        assert row.replications == 12


def test_grid_is_deterministic(small_truth, small_rows):
    spec, rows = small_rows
    assert run_grid(spec, truth=small_truth) == rows


def test_workers_do_not_change_results(small_truth, small_rows):
    spec, rows = small_rows
    assert run_grid(spec, truth=small_truth, workers=2) == rows


def test_replicate_cell_identities_hold_per_replication():
    config = SimulationConfig(p_treat=0.5, phi=-0.1, n=400, seed=0)
    cell = replicate_cell(config, 15, stream_prefix=(9,))
    assert cell.attempted == 15
    assert cell.skipped == 0
    assert_array_equal(cell.iie, cell.ate - cell.wcde)
    assert_array_equal(cell.nie, cell.ate - cell.nde)
    assert np.isfinite(cell.wcde_se).all()


def test_replicate_cell_skips_and_counts_empty_cells():
    # tiny samples at an extreme share leave the treated cells empty often
    config = SimulationConfig(p_treat=0.01, phi=0.0, n=120, seed=0)
    cell = replicate_cell(config, 30, stream_prefix=(10,))
    assert cell.skipped > 0
    assert "t=1" in cell.skip_note
    assert len(cell.wcde) == cell.attempted - cell.skipped


def test_cell_abort_produces_diagnostic_row():
    # a zero treatment share can never produce a treated arm
    spec = GridSpec(
        p_values=(0.0,), phi_values=(0.0,), replications=3, n=50, master_seed=0
    )
    truth = compute_truth(
        SimulationConfig(seed=0), 1000, p_values=(0.0,), phi_values=(0.0,)
    )
    rows = run_grid(spec, truth=truth)
    assert len(rows) == 1
    assert rows[0].estimand == "ERROR"
    assert "cell aborted" in rows[0].note


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------


def test_emit_table_round_trip(tmp_path, small_rows):
    _, rows = small_rows
    path = emit_table(rows, tmp_path / "rows.csv")
    assert read_result_rows(path) == rows


def test_emit_table_rejects_foreign_headers(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="header"):
        read_result_rows(path)


def test_emit_table_empty_rows_is_header_only(tmp_path):
    path = emit_table([], tmp_path / "empty.csv")
    assert path.read_text().strip() == (
        "p,phi,estimand,truth,mean_estimate,bias,sd_estimates,"
        "mean_delta_se,replications,note"
    )


def test_figure_data_series(tmp_path, small_rows):
    _, rows = small_rows
    half = [r for r in rows if r.p == 0.5]
    path = emit_figure_data(half, tmp_path / "fig.csv")
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "estimand,phi,bias,sd"
    assert len(lines) == 1 + 2 * 2  # two estimands x two coupling values
    assert not (tmp_path / "fig.svg").exists()


def test_figure_data_single_row(tmp_path, small_rows):
    _, rows = small_rows
    one = [r for r in rows if r.p == 0.5 and r.estimand == "WCDE"][:1]
    path = emit_figure_data(one, tmp_path / "one.csv", estimands=("WCDE",))
    assert len(path.read_text().strip().splitlines()) == 2


def test_figure_data_rejects_mixed_shares(tmp_path, small_rows):
    _, rows = small_rows
    with pytest.raises(ValueError, match="single treatment share"):
        emit_figure_data(rows, tmp_path / "fig.csv")


def test_figure_render_writes_vector_graphic(tmp_path, small_rows):
    pytest.importorskip("matplotlib")
    _, rows = small_rows
    half = [r for r in rows if r.p == 0.5]
    emit_figure_data(half, tmp_path / "fig.csv", render=True)
    svg = (tmp_path / "fig.svg").read_text()
    assert svg.lstrip().startswith("<?xml")


def test_write_manifest(tmp_path):
    path = write_manifest(tmp_path / "manifest.json", {"master_seed": 3})
    payload = json.loads(path.read_text())
    assert payload["tool"] == "wcde"
    assert payload["master_seed"] == 3
    assert "version" in payload


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------


def dataset_file(tmp_path, n=400, seed=0):
    rng = np.random.default_rng(seed)
    t = rng.integers(0, 2, n)
    m = rng.integers(0, 2, n)
    y = rng.normal(size=n) + t * (1.0 + 0.5 * m)
    path = tmp_path / "records.csv"
    write_dataset(ObservedData(t=t, m=m, y=y), path)
    return path


def test_cli_estimate_outputs_all_reports(tmp_path, capsys):
    path = dataset_file(tmp_path)
    assert main(["estimate", str(path)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert set(payload["reports"]) == {"ATE", "WCDE", "IIE", "NDE", "NIE"}
    assert payload["records"] == 400


def test_cli_estimate_p_star(tmp_path, capsys):
    path = dataset_file(tmp_path)
    assert main(["estimate", str(path), "--p-star", "0.5"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["p_star"] == 0.5


def test_cli_estimate_merge_sparse(tmp_path, capsys):
    rng = np.random.default_rng(1)
    t = np.tile([0, 1], 30)
    m = np.array([0, 0, 1, 1] * 14 + [2, 2, 2, 2])  # level 2 is rare
    y = rng.normal(size=60)
    path = tmp_path / "sparse.csv"
    write_dataset(ObservedData(t=t, m=m, y=y), path)
    assert main(["estimate", str(path), "--merge-sparse-cells", "5"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["merged_levels"]["2"] == 1


def test_cli_design_round_trip(tmp_path, capsys):
    assert (
        main(
            [
                "design",
                "--n",
                "300",
                "--p",
                "0.5",
                "--seed",
                "4",
                "--out-dir",
                str(tmp_path),
            ]
        )
        == 0
    )
    design_payload = json.loads(capsys.readouterr().out)
    assert main(["estimate", design_payload["dataset"]]) == 0
    estimate_payload = json.loads(capsys.readouterr().out)
    for tag in ("ATE", "WCDE", "IIE"):
        assert (
            estimate_payload["reports"][tag]["estimate"]
            == design_payload["reports"][tag]["estimate"]
        )


def test_cli_truth_grid_figure_pipeline(tmp_path, capsys):
    args = [
        "--p-values",
        "0.5",
        "--phi-values",
        "-0.1",
        "0.1",
        "--truth-pop-size",
        "20000",
        "--out-dir",
        str(tmp_path),
    ]
    assert main(["truth", *args, "--seed", "0"]) == 0
    capsys.readouterr()
    assert main(["grid", *args, "--reps", "8", "--n", "300", "--seed", "0"]) == 0
    grid_payload = json.loads(capsys.readouterr().out)
    assert grid_payload["rows"] == 2 * 5
    assert (
        main(
            [
                "figure",
                "--results",
                grid_payload["results"],
                "--p",
                "0.5",
                "--out-dir",
                str(tmp_path),
            ]
        )
        == 0
    )
    figure_payload = json.loads(capsys.readouterr().out)
    lines = (tmp_path / "figure_data.csv").read_text().strip().splitlines()
    assert len(lines) == 1 + 2 * 2
    manifest = json.loads((tmp_path / "run_manifest.json").read_text())
    assert manifest["replications"] == 8


def test_cli_grid_deterministic_bytes(tmp_path, capsys):
    args = [
        "grid",
        "--p-values",
        "0.5",
        "--phi-values",
        "0.0",
        "--reps",
        "6",
        "--n",
        "200",
        "--truth-pop-size",
        "5000",
        "--seed",
        "1",
    ]
    assert main([*args, "--out-dir", str(tmp_path / "a")]) == 0
    assert main([*args, "--out-dir", str(tmp_path / "b"), "--workers", "2"]) == 0
    capsys.readouterr()
    first = (tmp_path / "a" / "grid_results.csv").read_bytes()
    second = (tmp_path / "b" / "grid_results.csv").read_bytes()
    assert first == second


def test_cli_errors_are_machine_readable(tmp_path, capsys):
    assert main(["estimate", str(tmp_path / "missing.csv")]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "FileNotFoundError"

    bad = tmp_path / "bad.csv"
    bad.write_text("t,m,y\n1,0,abc\n")
    assert main(["estimate", str(bad)]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "DatasetFormatError"
    assert "bad.csv:2" in err["message"]


def test_cli_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["bogus-command"])
    assert exc.value.code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "usage"
