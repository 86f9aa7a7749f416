"""End-to-end acceptance suite.

One test per criterion, so a verbose run prints one pass/fail line for
each.  The heavyweight shared inputs -- the 4-million-unit truth table and
the full 4 x 7 replication grid at 1000 replications of n = 4000 -- are
computed once per session.  Tolerances are Monte Carlo aware: a mean over
R replications is compared at 3 standard errors (sd / sqrt(R)), truth
values carry their own simulation standard errors, and identities that
are exact by construction are asserted with floating equality.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats as sps

from wcde import (
    ConfoundedConfig,
    GridSpec,
    SimulationConfig,
    compute_truth,
    confounded_propensities,
    estimate_ate,
    estimate_ate_ipw,
    estimate_wcde,
    estimate_wcde_stratified,
    fit_cell_statistics,
    generate_confounded_observational,
    generate_observational,
    oracle_ate,
    oracle_wcde,
    replicate_cell,
    reweight_hypothetical,
    run_grid,
    sample_confounded,
    sample_population,
)

import _analytic

P_VALUES = (0.01, 0.1, 0.3, 0.5)
PHI_VALUES = (-0.15, -0.1, -0.05, 0.0, 0.05, 0.1, 0.15)
REPLICATIONS = 1000
N = 4000
MASTER_SEED = 0

SPEC = GridSpec(
    p_values=P_VALUES,
    phi_values=PHI_VALUES,
    replications=REPLICATIONS,
    n=N,
    master_seed=MASTER_SEED,
)


@pytest.fixture(scope="module")
def truth():
    return compute_truth(
        SimulationConfig(seed=MASTER_SEED),
        4_000_000,
        p_values=P_VALUES,
        phi_values=PHI_VALUES,
    )


@pytest.fixture(scope="module")
def rows(truth):
    return run_grid(SPEC, truth=truth)


@pytest.fixture(scope="module")
def half_share_replicates():
    """Raw per-replication arrays for the p = 0.5 row of the grid.

    Stream prefixes match run_grid's, so these are the same replications
    the aggregated rows were computed from.
    """
    base = SimulationConfig(seed=MASTER_SEED, n=N, p_treat=0.5)
    p_index = P_VALUES.index(0.5)
    cells = {}
    for phi_index, phi in enumerate(PHI_VALUES):
        config = replace(base, phi=phi)
        cells[phi] = replicate_cell(
            config, REPLICATIONS, stream_prefix=(p_index, phi_index)
        )
    return cells


def row_for(rows, p, phi, estimand):
    for row in rows:
        if (
            math.isclose(row.p, p)
            and math.isclose(row.phi, phi)
            and row.estimand == estimand
        ):
            return row
    raise KeyError((p, phi, estimand))


def mean_se(row):
    return row.sd_estimates / math.sqrt(row.replications)


def test_criterion_01_mediator_marginals_at_one_million_draws():
    pop = sample_population(
        SimulationConfig(seed=MASTER_SEED), 1_000_000, stream_id=(999, 0)
    )
    share_treated = float(pop.m1.mean())
    share_control = float(pop.m0.mean())
    assert 0.805 <= share_treated <= 0.813
    assert 0.187 <= share_control <= 0.195
    print(
        f"PASS criterion 1: treated mediator share {share_treated:.4f} in "
        f"[0.805, 0.813], control {share_control:.4f} in [0.187, 0.195] "
        f"(closed forms {_analytic.P_M1:.4f}, {_analytic.P_M0:.4f})"
    )


def test_criterion_02_identical_mediators_zero_indirect_effect():
    config = SimulationConfig(
        seed=MASTER_SEED, n=N, p_treat=0.5, phi=0.1, identical_mediators=True
    )
    table = compute_truth(config, 1_000_000, p_values=(0.5,), phi_values=(0.1,))
    truth_iie = table.value(0.5, 0.1, "IIE").value
    assert truth_iie == 0.0

    cell = replicate_cell(config, REPLICATIONS, stream_prefix=(998,))
    mean_iie = float(np.mean(cell.iie))
    bound = 3 * float(np.std(cell.iie, ddof=1)) / math.sqrt(len(cell.iie))
    assert abs(mean_iie) <= bound
    print(
        f"PASS criterion 2: truth IIE == 0.0 exactly; estimator mean "
        f"{mean_iie:+.5f} within {bound:.5f} over {len(cell.iie)} replications"
    )


def test_criterion_03_weighted_direct_effect_unbiased_everywhere(truth, rows):
    worst = 0.0
    for p in P_VALUES:
        for phi in PHI_VALUES:
            row = row_for(rows, p, phi, "WCDE")
            z = abs(row.bias) / mean_se(row)
            worst = max(worst, z)
            assert z <= 3.0, f"cell (p={p}, phi={phi}): |z| = {z:.2f}"

    start = time.monotonic()
    smoke_truth = compute_truth(
        SimulationConfig(seed=MASTER_SEED),
        4_000_000,
        p_values=(0.1, 0.5),
        phi_values=(-0.15, 0.0, 0.15),
    )
    smoke_spec = GridSpec(
        p_values=(0.1, 0.5),
        phi_values=(-0.15, 0.0, 0.15),
        replications=REPLICATIONS,
        n=N,
        master_seed=MASTER_SEED,
    )
    smoke_rows = run_grid(smoke_spec, truth=smoke_truth)
    elapsed = time.monotonic() - start
    assert elapsed < 120.0
    for row in smoke_rows:
        if row.estimand == "WCDE":
            assert abs(row.bias) <= 3.0 * mean_se(row)
    print(
        f"PASS criterion 3: all 28 cells unbiased (max |z| = {worst:.2f}); "
        f"2x3 smoke subgrid incl. its truth table took {elapsed:.0f}s (< 120s)"
    )


def test_criterion_04_spurious_mediation_of_the_classical_plugin(rows):
    nde = row_for(rows, 0.5, -0.15, "NDE")
    wcde = row_for(rows, 0.5, -0.15, "WCDE")
    nde_z = abs(nde.bias) / mean_se(nde)
    wcde_z = abs(wcde.bias) / mean_se(wcde)
    assert nde_z > 5.0
    assert wcde_z <= 3.0
    nde_null = row_for(rows, 0.5, 0.0, "NDE")
    null_z = abs(nde_null.bias) / mean_se(nde_null)
    assert null_z <= 3.0
    print(
        f"PASS criterion 4: at (0.5, -0.15) comparator |z| = {nde_z:.0f} > 5 "
        f"(bias {nde.bias:+.3f}) while weighted estimator |z| = {wcde_z:.2f}; "
        f"comparator |z| = {null_z:.2f} at zero coupling"
    )


def test_criterion_05_bias_pattern_across_the_coupling(rows):
    nde_bias = [row_for(rows, 0.5, phi, "NDE").bias for phi in PHI_VALUES]
    rho = sps.spearmanr(PHI_VALUES, nde_bias).statistic
    assert abs(rho) == 1.0

    signs = []
    for phi in PHI_VALUES:
        row = row_for(rows, 0.5, phi, "WCDE")
        if abs(row.bias) > 2.0 * mean_se(row):
            signs.append(1 if row.bias > 0 else -1)
    most_common = max(signs.count(1), signs.count(-1)) if signs else 0
    assert most_common <= 4
    print(
        f"PASS criterion 5: comparator bias strictly monotone in the "
        f"coupling (|rho| = 1); weighted estimator has {most_common} "
        f"same-signed cells beyond 2 SEs (at most 4 allowed)"
    )


def test_criterion_06_delta_method_variance_calibrated(half_share_replicates):
    cell = half_share_replicates[0.0]
    mean_delta_var = float(np.mean(cell.wcde_se**2))
    empirical_var = float(np.var(cell.wcde, ddof=1))
    ratio = mean_delta_var / empirical_var
    assert 0.85 <= ratio <= 1.15
    print(
        f"PASS criterion 6: mean delta-method variance {mean_delta_var:.2e} "
        f"vs empirical {empirical_var:.2e} (ratio {ratio:.3f})"
    )


def test_criterion_07_decompositions_exact_per_replication(
    truth, rows, half_share_replicates
):
    checked = 0
    cells = list(half_share_replicates.values())
    # an extreme-share cell as well, where some replications get skipped
    cells.append(
        replicate_cell(
            SimulationConfig(seed=MASTER_SEED, n=N, p_treat=0.01, phi=-0.15),
            REPLICATIONS,
            stream_prefix=(0, 0),
        )
    )
    for cell in cells:
        assert np.array_equal(cell.iie, cell.ate - cell.wcde)
        assert np.array_equal(cell.nie, cell.ate - cell.nde)
        checked += len(cell.iie)
    # and the aggregated rows came from the same streams
    agg = row_for(rows, 0.5, 0.0, "WCDE")
    assert agg.mean_estimate == float(np.mean(half_share_replicates[0.0].wcde))

    truth.validate_identities(rtol=1e-9)
    print(
        f"PASS criterion 7: ATE-hat = WCDE-hat + IIE-hat and NDE-hat + "
        f"NIE-hat = ATE-hat bitwise in {checked} replications; truth "
        f"identities within 1e-9 relative"
    )


def test_criterion_08_half_share_coincidence(truth):
    gaps = []
    for phi in PHI_VALUES:
        wcde = truth.value(0.5, phi, "WCDE")
        nde = truth.value(0.5, phi, "NDE")
        combined = math.hypot(wcde.mc_se, nde.mc_se)
        assert abs(wcde.value - nde.value) <= 2.0 * combined
        gaps.append(abs(wcde.value - nde.value))
    wcde_small = truth.value(0.01, 0.0, "WCDE")
    nde_small = truth.value(0.01, 0.0, "NDE")
    small_gap = wcde_small.value - nde_small.value
    print(
        f"PASS criterion 8: half-share gap at most {max(gaps):.2e} (within "
        f"2 combined MC SEs); at p=0.01 the gap is {small_gap:+.5f} "
        f"(reported, no threshold)"
    )


def test_criterion_09_hypothetical_share_reweighting(truth):
    config = SimulationConfig(seed=MASTER_SEED, n=N, p_treat=0.1, phi=0.0)
    pop = sample_population(config, N, stream_id=(997, 0))
    obs = generate_observational(config, pop, stream_id=(997, 1))
    plain = estimate_wcde(fit_cell_statistics(obs, obs))
    identical = reweight_hypothetical(obs, float(obs.t.mean()))
    assert np.all(identical.weight == 1.0)
    rematch = estimate_wcde(fit_cell_statistics(identical, identical))
    assert rematch.estimate == plain.estimate

    estimates = []
    for r in range(REPLICATIONS):
        pop_r = sample_population(config, N, stream_id=(996, r, 0))
        obs_r = generate_observational(config, pop_r, stream_id=(996, r, 1))
        rw = reweight_hypothetical(obs_r, 0.5)
        estimates.append(estimate_wcde(fit_cell_statistics(rw, rw)).estimate)
    target = truth.value(0.5, 0.0, "WCDE")
    err = float(np.mean(estimates)) - target.value
    se = float(np.std(estimates, ddof=1)) / math.sqrt(len(estimates))
    bound = 3.0 * math.hypot(se, target.mc_se)
    assert abs(err) <= bound
    print(
        f"PASS criterion 9: matched-share reweighting reproduces the "
        f"estimate bitwise; share 0.1 -> 0.5 mean error {err:+.5f} within "
        f"{bound:.5f}"
    )


def test_criterion_10_covariate_adjustment_on_the_confounded_variant():
    config = ConfoundedConfig(base=SimulationConfig(seed=MASTER_SEED, n=N))
    big = sample_confounded(config, 2_000_000, stream_id=(995, 0))
    target_wcde = oracle_wcde(big, confounded_propensities(config, big))
    target_ate = oracle_ate(big)

    adjusted_w, naive_w, adjusted_a, naive_a = [], [], [], []
    for r in range(400):
        pop = sample_confounded(config, N, stream_id=(994, r, 0))
        data = generate_confounded_observational(config, pop, stream_id=(994, r, 1))
        adjusted_w.append(estimate_wcde_stratified(data).estimate)
        naive_w.append(estimate_wcde(fit_cell_statistics(data, data)).estimate)
        adjusted_a.append(estimate_ate_ipw(data).estimate)
        naive_a.append(estimate_ate(data).estimate)

    def gap_and_bound(values, target):
        err = float(np.mean(values)) - target.value
        se = float(np.std(values, ddof=1)) / math.sqrt(len(values))
        return err, 3.0 * math.hypot(se, target.mc_se)

    err_w, bound_w = gap_and_bound(adjusted_w, target_wcde)
    err_a, bound_a = gap_and_bound(adjusted_a, target_ate)
    err_nw, bound_nw = gap_and_bound(naive_w, target_wcde)
    err_na, bound_na = gap_and_bound(naive_a, target_ate)
    assert abs(err_w) <= bound_w
    assert abs(err_a) <= bound_a
    assert abs(err_nw) > bound_nw
    assert abs(err_na) > bound_na
    print(
        f"PASS criterion 10: stratified WCDE error {err_w:+.4f} <= {bound_w:.4f} "
        f"and IPW ATE error {err_a:+.4f} <= {bound_a:.4f}, while naive "
        f"errors {err_nw:+.3f} and {err_na:+.3f} blow the same bounds"
    )
