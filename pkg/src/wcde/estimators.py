"""Observed-data estimators for treatment and mediation-effect summaries.

All estimators consume :class:`~wcde.estimands.ObservedData` (or sequences
of :class:`~wcde.estimands.ObservedRecord`) and return
:class:`EstimateReport` values.  Empty required cells fail loudly with
:class:`EstimationError`; nothing is imputed.  Every estimator runs a single
weighted code path with weights defaulting to one, so weighted calls with
all-unit weights coincide bitwise with unweighted ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .estimands import ObservedData, ObservedLike, as_observed_data

__all__ = [
    "CellStatistics",
    "DeltaVarianceInputs",
    "EstimateReport",
    "EstimationError",
    "estimate_ate",
    "estimate_ate_ipw",
    "estimate_cde",
    "estimate_iie",
    "estimate_nde_nie_plugin",
    "estimate_wcde",
    "estimate_wcde_stratified",
    "fit_cell_statistics",
    "merge_sparse_levels",
    "reweight_hypothetical",
    "wcde_variance",
]


class EstimationError(RuntimeError):
    """A required arm or (t, m) cell is empty; no silent fallback exists."""


@dataclass(frozen=True)
class EstimateReport:
    """Point estimate with an optional analytic standard error.

    ``se`` is None when the inputs cannot support the variance formula
    (e.g. a needed cell has fewer than two records); ``notes`` says why.
    """

    tag: str
    estimate: float
    se: float | None
    n_used: dict[str, int] = field(default_factory=dict)
    notes: str = ""


@dataclass(frozen=True)
class CellStatistics:
    """Sufficient statistics for the cell-mean estimators.

    ``p_hat`` is the mediator-level frequency from the p-source records;
    ``cell_count``/``cell_mean``/``cell_var`` are (2, levels) arrays over
    (t, m) cells of the cell-source records, with NaN where undefined
    (empty cell, or a single record for the variance).  ``n_phat`` is the
    record count behind ``p_hat``.
    """

    mediator_support: int
    p_hat: np.ndarray
    cell_count: np.ndarray
    cell_mean: np.ndarray
    cell_var: np.ndarray
    n_phat: int

    def __post_init__(self) -> None:
        levels = self.mediator_support
        if levels < 1:
            raise ValueError("mediator support must have at least one level")
        if self.p_hat.shape != (levels,):
            raise ValueError("p_hat must have one entry per mediator level")
        if (self.p_hat < 0).any() or abs(float(self.p_hat.sum()) - 1.0) > 1e-12:
            raise ValueError("p_hat must be a probability vector")
        for name in ("cell_count", "cell_mean", "cell_var"):
            if getattr(self, name).shape != (2, levels):
                raise ValueError(f"{name} must have shape (2, levels)")
        with np.errstate(invalid="ignore"):
            if np.nanmin(self.cell_var, initial=0.0) < 0:
                raise ValueError("cell variances must be nonnegative")
        if self.n_phat < 1:
            raise ValueError("n_phat must be positive")


@dataclass(frozen=True)
class DeltaVarianceInputs:
    """Ingredients of the delta-method variance of the weighted-cell estimate.

    ``d_hat`` holds the per-level cell-mean differences, ``p_hat`` the
    mediator frequencies (from an independent source of size ``n_phat``),
    and ``mean_variances`` the (2, levels) variances *of the cell means*
    (cell variance over cell count).  Entries for levels with zero
    frequency contribute nothing and may be zeroed.
    """

    d_hat: np.ndarray
    p_hat: np.ndarray
    n_phat: int
    mean_variances: np.ndarray


def _weighted_cells(t, m, y, w, levels):
    """Count/mean/variance per (t, m) cell; NaN where undefined.

    Variance is the unbiased weighted form
    (sum w (y - ybar)^2 / sum w) * count / (count - 1),
    which reduces to the ordinary ddof=1 variance for constant weights.
    """
    idx = t * levels + m
    size = 2 * levels
    count = np.bincount(idx, minlength=size)
    wsum = np.bincount(idx, weights=w, minlength=size)
    wysum = np.bincount(idx, weights=w * y, minlength=size)
    mean = np.full(size, np.nan)
    occupied = count > 0
    mean[occupied] = wysum[occupied] / wsum[occupied]
    resid = y - mean[idx]
    wrss = np.bincount(idx, weights=w * resid * resid, minlength=size)
    var = np.full(size, np.nan)
    twice = count > 1
    var[twice] = (wrss[twice] / wsum[twice]) * (count[twice] / (count[twice] - 1))
    shape = (2, levels)
    return count.reshape(shape), mean.reshape(shape), var.reshape(shape), wsum.reshape(shape)


def _infer_support(datasets, support):
    observed_max = -1
    for data in datasets:
        if len(data):
            observed_max = max(observed_max, int(data.m.max()))
    if support is None:
        if observed_max < 0:
            raise ValueError("cannot infer mediator support from empty data")
        return observed_max + 1
    support = int(support)
    if support < 1:
        raise ValueError("support must be at least 1")
    if observed_max >= support:
        raise ValueError(
            f"mediator level {observed_max} outside declared support of {support} levels"
        )
    return support


def fit_cell_statistics(
    p_source: ObservedLike,
    cell_source: ObservedLike,
    support: int | None = None,
) -> CellStatistics:
    """Mediator frequencies from one record set, (t, m) cell moments from another.

    The two sources may be the same records (observational use) or the two
    groups of the randomized protocol (frequencies from group 1, cells from
    group 2).  ``support`` fixes the number of mediator levels; by default
    it is inferred as one past the largest level seen in either source.
    """
    p_data = as_observed_data(p_source)
    c_data = as_observed_data(cell_source)
    if len(p_data) == 0:
        raise ValueError("p_source has no records")
    if len(c_data) == 0:
        raise ValueError("cell_source has no records")
    levels = _infer_support((p_data, c_data), support)
    wsum = np.bincount(p_data.m, weights=p_data.weight, minlength=levels)
    p_hat = wsum / wsum.sum()
    count, mean, var, _ = _weighted_cells(
        c_data.t, c_data.m, c_data.y, c_data.weight, levels
    )
    return CellStatistics(
        mediator_support=levels,
        p_hat=p_hat,
        cell_count=count,
        cell_mean=mean,
        cell_var=var,
        n_phat=len(p_data),
    )


def _arm_moments(data: ObservedData, arm: int):
    mask = data.t == arm
    n = int(mask.sum())
    if n == 0:
        raise EstimationError(f"treatment arm t={arm} has no records")
    w = data.weight[mask]
    y = data.y[mask]
    wsum = float(w.sum())
    mean = float((w * y).sum() / wsum)
    if n >= 2:
        var = float(((w * (y - mean) ** 2).sum() / wsum) * (n / (n - 1)))
    else:
        var = None
    return n, mean, var


def estimate_ate(records: ObservedLike) -> EstimateReport:
    """Difference of arm means with the two-sample standard error."""
    data = as_observed_data(records)
    n1, mean1, var1 = _arm_moments(data, 1)
    n0, mean0, var0 = _arm_moments(data, 0)
    estimate = mean1 - mean0
    if var1 is None or var0 is None:
        se, notes = None, "an arm has a single record; se unavailable"
    else:
        se, notes = math.sqrt(var1 / n1 + var0 / n0), ""
    return EstimateReport(
        tag="ATE",
        estimate=estimate,
        se=se,
        n_used={"treated": n1, "control": n0},
        notes=notes,
    )


def wcde_variance(inputs: DeltaVarianceInputs) -> float:
    """Delta-method variance of the frequency-weighted cell-difference sum.

    Multinomial uncertainty of the frequencies (scaled by the frequency
    source's sample size) plus the frequency-squared-weighted variances of
    the per-cell means.
    """
    d = np.asarray(inputs.d_hat, dtype=np.float64)
    p = np.asarray(inputs.p_hat, dtype=np.float64)
    mv = np.asarray(inputs.mean_variances, dtype=np.float64)
    levels = d.shape[0]
    if d.ndim != 1 or p.shape != (levels,) or mv.shape != (2, levels):
        raise ValueError("inconsistent delta-variance input shapes")
    if (p < 0).any():
        raise ValueError("p_hat entries must be nonnegative")
    if inputs.n_phat < 1:
        raise ValueError("n_phat must be positive")
    if not np.isfinite(mv).all() or (mv < 0).any():
        raise ValueError("mean variances must be finite and nonnegative")
    weighted = float(np.dot(p, d))
    quad = float(np.dot(p, d * d)) - weighted * weighted
    quad = max(quad, 0.0)  # PSD quadratic form; guard float dust
    return quad / inputs.n_phat + float(np.dot(p * p, mv[1] + mv[0]))


def estimate_wcde(stats: CellStatistics) -> EstimateReport:
    """Frequency-weighted sum of per-level treated/control cell-mean differences."""
    levels = stats.mediator_support
    needed = stats.p_hat > 0
    for m in np.flatnonzero(needed):
        for arm in (1, 0):
            if stats.cell_count[arm, m] == 0:
                raise EstimationError(
                    f"required cell (t={arm}, m={m}) is empty"
                )
    d_hat = np.where(needed, stats.cell_mean[1] - stats.cell_mean[0], 0.0)
    estimate = float(np.dot(stats.p_hat, d_hat))
    thin = [
        (arm, m)
        for m in np.flatnonzero(needed)
        for arm in (1, 0)
        if stats.cell_count[arm, m] < 2
    ]
    if thin:
        arm, m = thin[0]
        se = None
        notes = f"cell (t={arm}, m={m}) has a single record; delta-method se unavailable"
    else:
        mean_variances = np.where(needed, stats.cell_var / stats.cell_count, 0.0)
        se = math.sqrt(
            wcde_variance(
                DeltaVarianceInputs(
                    d_hat=d_hat,
                    p_hat=stats.p_hat,
                    n_phat=stats.n_phat,
                    mean_variances=mean_variances,
                )
            )
        )
        notes = ""
    return EstimateReport(
        tag="WCDE",
        estimate=estimate,
        se=se,
        n_used={"p_source": stats.n_phat, "cell_source": int(stats.cell_count.sum())},
        notes=notes,
    )


def estimate_cde(stats: CellStatistics, m: int) -> EstimateReport:
    """Treated/control cell-mean difference at one mediator level."""
    if not 0 <= m < stats.mediator_support:
        raise ValueError(
            f"mediator level {m} outside support of {stats.mediator_support} levels"
        )
    for arm in (1, 0):
        if stats.cell_count[arm, m] == 0:
            raise EstimationError(f"required cell (t={arm}, m={m}) is empty")
    estimate = float(stats.cell_mean[1, m] - stats.cell_mean[0, m])
    if stats.cell_count[1, m] >= 2 and stats.cell_count[0, m] >= 2:
        se = math.sqrt(
            stats.cell_var[1, m] / stats.cell_count[1, m]
            + stats.cell_var[0, m] / stats.cell_count[0, m]
        )
        notes = ""
    else:
        se = None
        notes = "a cell has a single record; se unavailable"
    return EstimateReport(
        tag=f"CDE({m})",
        estimate=estimate,
        se=se,
        n_used={
            "treated_cell": int(stats.cell_count[1, m]),
            "control_cell": int(stats.cell_count[0, m]),
        },
        notes=notes,
    )


def estimate_iie(ate: EstimateReport, wcde: EstimateReport) -> EstimateReport:
    """Indirect effect implied by the two reports: ATE minus WCDE.

    The se treats the inputs as independent, which is exact when they come
    from disjoint record sets (observational view vs. design groups).
    """
    estimate = ate.estimate - wcde.estimate
    if ate.se is not None and wcde.se is not None:
        se = math.sqrt(ate.se**2 + wcde.se**2)
        notes = "se assumes the ATE and WCDE inputs are independent"
    else:
        se = None
        notes = "se unavailable for an input"
    n_used = {f"ate_{k}": v for k, v in ate.n_used.items()}
    n_used.update({f"wcde_{k}": v for k, v in wcde.n_used.items()})
    return EstimateReport(tag="IIE", estimate=estimate, se=se, n_used=n_used, notes=notes)


def estimate_nde_nie_plugin(
    records: ObservedLike, support: int | None = None
) -> tuple[EstimateReport, EstimateReport]:
    """Classical nonparametric direct/indirect decomposition of the ATE.

    Averages the per-level cell-mean differences under each arm's mediator
    distribution and averages the two arms; the indirect part is defined as
    ATE minus the direct part, so the decomposition is exact as computed.
    Unbiased only when mediator take-up is ignorable given treatment, which
    is precisely what the randomized two-group protocol does not assume.
    """
    data = as_observed_data(records)
    if len(data) == 0:
        raise ValueError("no records")
    levels = _infer_support((data,), support)
    count, mean, _, warm = _weighted_cells(data.t, data.m, data.y, data.weight, levels)
    arm_weight = warm.sum(axis=1)
    for arm in (1, 0):
        if arm_weight[arm] == 0:
            raise EstimationError(f"treatment arm t={arm} has no records")
    cond = warm / arm_weight[:, None]  # p(M = m | T = t), weighted
    needed = (cond[0] > 0) | (cond[1] > 0)
    for m in np.flatnonzero(needed):
        for arm in (1, 0):
            if count[arm, m] == 0:
                raise EstimationError(f"required cell (t={arm}, m={m}) is empty")
    d_hat = np.where(needed, mean[1] - mean[0], 0.0)
    nde_estimate = 0.5 * (float(np.dot(d_hat, cond[1])) + float(np.dot(d_hat, cond[0])))
    ate = estimate_ate(data)
    nie_estimate = ate.estimate - nde_estimate
    n_used = {"records": len(data)}
    nde = EstimateReport(
        tag="NDE",
        estimate=nde_estimate,
        se=None,
        n_used=n_used,
        notes="plug-in under mediator ignorability; no analytic se",
    )
    nie = EstimateReport(
        tag="NIE",
        estimate=nie_estimate,
        se=None,
        n_used=n_used,
        notes="defined as ATE minus NDE; decomposition exact as computed",
    )
    return nde, nie


def reweight_hypothetical(records: ObservedLike, p_star: float) -> ObservedData:
    """Reweight records to a hypothetical treatment share ``p_star``.

    Treated records get p*/p-hat, control records (1-p*)/(1-p-hat), with
    p-hat the observed treated share.  With p_star equal to p-hat every
    factor is exactly 1 and the records are returned unchanged in value.
    """
    data = as_observed_data(records)
    if len(data) == 0:
        raise ValueError("no records")
    if not 0.0 <= p_star <= 1.0:
        raise ValueError(f"p_star must lie in [0, 1], got {p_star}")
    p_hat = float(np.count_nonzero(data.t)) / len(data)
    if p_hat in (0.0, 1.0):
        raise ValueError("observed treatment share is degenerate; cannot reweight")
    factor = np.where(data.t == 1, p_star / p_hat, (1.0 - p_star) / (1.0 - p_hat))
    return data.with_weight(data.weight * factor)


def estimate_wcde_stratified(
    records: ObservedLike, support: int | None = None
) -> EstimateReport:
    """Covariate-stratified weighted direct effect.

    Runs the frequency-weighted cell estimator inside each stratum and
    combines with the stratum shares; the variance adds the per-stratum
    delta-method variances (share-squared weighted) and a multinomial term
    for the estimated shares.  With a single stratum this coincides with
    :func:`estimate_wcde`.
    """
    data = as_observed_data(records)
    if len(data) == 0:
        raise ValueError("no records")
    if data.stratum is None:
        raise ValueError("records carry no stratum column")
    levels = _infer_support((data,), support)
    strata = sorted(set(data.stratum.tolist()))
    total_weight = float(data.weight.sum())
    shares = []
    values = []
    variances = []
    for label in strata:
        sub = data.subset(data.stratum == label)
        try:
            stats = fit_cell_statistics(sub, sub, support=levels)
            report = estimate_wcde(stats)
        except EstimationError as exc:
            raise EstimationError(f"stratum {label!r}: {exc}") from None
        shares.append(float(sub.weight.sum()) / total_weight)
        values.append(report.estimate)
        variances.append(None if report.se is None else report.se**2)
    q = np.asarray(shares)
    w_v = np.asarray(values)
    estimate = float(np.dot(q, w_v))
    if any(v is None for v in variances):
        se = None
        notes = "a stratum lacks the delta-method variance; se unavailable"
    else:
        var_v = np.asarray([v for v in variances])
        between = float(np.dot(q, w_v * w_v)) - float(np.dot(q, w_v)) ** 2
        between = max(between, 0.0)
        se = math.sqrt(float(np.dot(q * q, var_v)) + between / len(data))
        notes = ""
    return EstimateReport(
        tag="WCDE",
        estimate=estimate,
        se=se,
        n_used={"records": len(data), "strata": len(strata)},
        notes=notes,
    )


def _resolve_propensity(data: ObservedData, propensity) -> np.ndarray:
    if propensity is None:
        if data.stratum is None:
            raise ValueError("need stratum labels or explicit propensities")
        e = np.empty(len(data), dtype=np.float64)
        for label in set(data.stratum.tolist()):
            mask = data.stratum == label
            w = data.weight[mask]
            e[mask] = float((w * (data.t[mask] == 1)).sum() / w.sum())
        return e
    if isinstance(propensity, dict):
        if data.stratum is None:
            raise ValueError("propensity mapping requires stratum labels")
        try:
            return np.asarray(
                [propensity[s] for s in data.stratum.tolist()], dtype=np.float64
            )
        except KeyError as exc:
            raise ValueError(f"no propensity for stratum {exc.args[0]!r}") from None
    e = np.asarray(propensity, dtype=np.float64)
    if e.ndim == 0:
        e = np.full(len(data), float(e))
    if e.shape != (len(data),):
        raise ValueError("propensity must be scalar, per-record, or a stratum mapping")
    return e


def estimate_ate_ipw(
    records: ObservedLike,
    propensity=None,
    clip: float | None = 0.01,
) -> EstimateReport:
    """Inverse-propensity (ratio-normalized) ATE for confounded assignment.

    Propensities come from an explicit scalar/array/mapping or, by default,
    from the within-stratum treated shares.  ``clip`` bounds them away from
    0 and 1; with clipping disabled (None) out-of-range propensities raise.
    """
    data = as_observed_data(records)
    if len(data) == 0:
        raise ValueError("no records")
    e = _resolve_propensity(data, propensity)
    if clip is not None:
        if not 0.0 < clip < 0.5:
            raise ValueError("clip must lie in (0, 0.5)")
        e = np.clip(e, clip, 1.0 - clip)
    elif ((e <= 0.0) | (e >= 1.0)).any():
        raise ValueError("propensity outside (0, 1) with clipping disabled")
    treated = data.t == 1
    if not treated.any():
        raise EstimationError("treatment arm t=1 has no records")
    if treated.all():
        raise EstimationError("treatment arm t=0 has no records")
    a1 = np.where(treated, data.weight / e, 0.0)
    a0 = np.where(treated, 0.0, data.weight / (1.0 - e))
    mu1 = float((a1 * data.y).sum() / a1.sum())
    mu0 = float((a0 * data.y).sum() / a0.sum())
    # ratio-estimator linearization, one influence term per record
    v1 = float(((a1 * (data.y - mu1)) ** 2).sum() / a1.sum() ** 2)
    v0 = float(((a0 * (data.y - mu0)) ** 2).sum() / a0.sum() ** 2)
    return EstimateReport(
        tag="ATE",
        estimate=mu1 - mu0,
        se=math.sqrt(v1 + v0),
        n_used={"treated": int(treated.sum()), "control": int((~treated).sum())},
        notes="ratio-normalized inverse-propensity weighting",
    )


def merge_sparse_levels(
    records: ObservedLike, min_count: int
) -> tuple[ObservedData, dict[int, int]]:
    """Merge mediator levels rarer than ``min_count`` into their nearest
    well-populated neighbor and relabel levels compactly.

    Returns the relabeled data and the old-level -> new-level mapping.
    Merging changes the estimand slightly; callers should surface the
    mapping when they use it.
    """
    data = as_observed_data(records)
    if len(data) == 0:
        raise ValueError("no records")
    if min_count < 1:
        raise ValueError("min_count must be positive")
    levels = int(data.m.max()) + 1
    counts = np.bincount(data.m, minlength=levels)
    anchors = [m for m in range(levels) if counts[m] >= min_count]
    if not anchors:
        raise EstimationError(
            f"no mediator level reaches the minimum count of {min_count}"
        )
    new_id = {anchor: i for i, anchor in enumerate(anchors)}
    mapping: dict[int, int] = {}
    for m in range(levels):
        if counts[m] == 0:
            continue
        nearest = min(anchors, key=lambda a: (abs(a - m), a))
        mapping[m] = new_id[nearest]
    lookup = np.zeros(levels, dtype=np.int64)
    for old, new in mapping.items():
        lookup[old] = new
    return (
        ObservedData(
            t=data.t,
            m=lookup[data.m],
            y=data.y,
            weight=data.weight,
            stratum=data.stratum,
            group=data.group,
        ),
        mapping,
    )
