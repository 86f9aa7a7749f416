"""Weighted controlled direct effects for causal mediation analysis.

The package is organized around five layers:

- :mod:`wcde.estimands` — potential-outcome populations and exact oracles
  for the average treatment effect, the weighted controlled direct effect,
  the implied indirect effect, and the classical natural-effect comparators.
- :mod:`wcde.estimators` — nonparametric plug-in estimators with
  delta-method standard errors, hypothetical-share reweighting, and
  covariate-adjusted (stratified / inverse-probability-weighted) variants.
- :mod:`wcde.design` — the two-group randomized protocol that makes the
  weighted direct effect identifiable without cross-world assumptions.
- :mod:`wcde.simulator` — a latent-threshold mixture process whose
  mediator-outcome coupling can be dialed to violate sequential
  ignorability, plus exact-oracle truth tables.
- :mod:`wcde.grid` / :mod:`wcde.cli` — the replication harness comparing
  estimators against truth over a (treatment share, coupling) grid.
"""

from .dataio import DatasetFormatError, read_dataset, write_dataset
from .design import (
    ATE_SOURCES,
    DesignDataset,
    ExperimentOracle,
    estimate_from_design,
    run_two_group_design,
)
from .estimands import (
    EstimandValue,
    GroupLabel,
    ObservedData,
    ObservedRecord,
    Population,
    PotentialTable,
    oracle_ate,
    oracle_cde,
    oracle_iie,
    oracle_nde,
    oracle_nie,
    oracle_wcde,
    unit_icde,
)
from .estimators import (
    CellStatistics,
    DeltaVarianceInputs,
    EstimateReport,
    EstimationError,
    estimate_ate,
    estimate_ate_ipw,
    estimate_cde,
    estimate_iie,
    estimate_nde_nie_plugin,
    estimate_wcde,
    estimate_wcde_stratified,
    fit_cell_statistics,
    merge_sparse_levels,
    reweight_hypothetical,
    wcde_variance,
)
from .grid import (
    CellReplicates,
    GridResultRow,
    GridSpec,
    emit_figure_data,
    emit_table,
    read_result_rows,
    replicate_cell,
    run_grid,
    write_manifest,
)
from .simulator import (
    ConfoundedConfig,
    SimulationConfig,
    TableOracle,
    TruthEntry,
    TruthTable,
    build_sigma,
    compute_truth,
    confounded_propensities,
    generate_confounded_observational,
    generate_observational,
    make_oracle,
    sample_confounded,
    sample_population,
    write_truth_table,
)

__version__ = "0.1.0"

__all__ = [
    "ATE_SOURCES",
    "CellReplicates",
    "CellStatistics",
    "ConfoundedConfig",
    "DatasetFormatError",
    "DeltaVarianceInputs",
    "DesignDataset",
    "EstimandValue",
    "EstimateReport",
    "EstimationError",
    "ExperimentOracle",
    "GridResultRow",
    "GridSpec",
    "GroupLabel",
    "ObservedData",
    "ObservedRecord",
    "Population",
    "PotentialTable",
    "SimulationConfig",
    "TableOracle",
    "TruthEntry",
    "TruthTable",
    "__version__",
    "build_sigma",
    "compute_truth",
    "confounded_propensities",
    "emit_figure_data",
    "emit_table",
    "estimate_ate",
    "estimate_ate_ipw",
    "estimate_cde",
    "estimate_from_design",
    "estimate_iie",
    "estimate_nde_nie_plugin",
    "estimate_wcde",
    "estimate_wcde_stratified",
    "fit_cell_statistics",
    "generate_confounded_observational",
    "generate_observational",
    "make_oracle",
    "merge_sparse_levels",
    "oracle_ate",
    "oracle_cde",
    "oracle_iie",
    "oracle_nde",
    "oracle_nie",
    "oracle_wcde",
    "read_dataset",
    "read_result_rows",
    "replicate_cell",
    "reweight_hypothetical",
    "run_grid",
    "run_two_group_design",
    "sample_confounded",
    "sample_population",
    "unit_icde",
    "wcde_variance",
    "write_dataset",
    "write_manifest",
    "write_truth_table",
]
