"""The two-group randomized protocol that identifies the weighted direct effect.

Group 1 receives randomized treatment and responds naturally, yielding the
mediator distribution; group 2 receives randomized treatment *and* a
mediator externally assigned from group 1's empirical distribution,
yielding clean per-cell outcome means.  An optional observational view
(fresh treatment draw over all units, natural responses) serves as the
comparator data for the ATE and the classical direct/indirect plug-in.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .estimands import GroupLabel, ObservedData
from .estimators import (
    EstimateReport,
    estimate_ate,
    estimate_iie,
    estimate_wcde,
    fit_cell_statistics,
)

__all__ = [
    "DesignDataset",
    "ExperimentOracle",
    "estimate_from_design",
    "run_two_group_design",
]

ATE_SOURCES = ("observational", "group1")


class ExperimentOracle(Protocol):
    """What the protocol needs from an experiment: unit responses.

    Implementations may be simulated populations or wrappers around real
    data collection.  Both methods accept scalars or aligned arrays of
    unit ids and treatments.
    """

    def respond_natural(self, units, t):
        """Realized (mediator, outcome) for units under treatment t."""

    def respond_controlled(self, units, t, m):
        """Outcome for units under treatment t with the mediator set to m."""


@dataclass(frozen=True)
class DesignDataset:
    """Records produced by one run of the protocol.

    ``group1`` carries natural mediators (frequency source), ``group2``
    externally assigned mediators (cell source); ``observational`` is the
    independent full-size comparator view when requested.
    """

    group1: ObservedData
    group2: ObservedData
    observational: ObservedData | None = None

    def to_dataset(self) -> ObservedData:
        """Single table with the group column populated, for export."""
        parts = []
        for data, label in (
            (self.group1, GroupLabel.DESIGN_GROUP_1),
            (self.group2, GroupLabel.DESIGN_GROUP_2),
            (self.observational, GroupLabel.OBSERVATIONAL),
        ):
            if data is None:
                continue
            parts.append(
                ObservedData(
                    t=data.t,
                    m=data.m,
                    y=data.y,
                    weight=data.weight,
                    stratum=data.stratum,
                    group=np.array([label.value] * len(data)),
                )
            )
        return ObservedData.concat(parts)


def _as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def run_two_group_design(
    oracle: ExperimentOracle,
    n: int,
    p: float,
    seed,
    *,
    split: float = 0.5,
    joint: bool = False,
    observational: bool = True,
    support: int | None = None,
) -> DesignDataset:
    """Run the protocol on units 0..n-1 of an experiment oracle.

    Units are split at random (``split`` fraction to group 1).  Group 1
    gets T ~ Bernoulli(p) and responds naturally; group 2 gets an
    independent T ~ Bernoulli(p) and a mediator drawn from group 1's
    empirical mediator distribution (or, with ``joint=True``, (t, m) pairs
    resampled jointly from group 1).  Levels group 1 never produced get
    zero assignment probability.  With ``observational=True`` a fresh
    treatment draw over *all* n units with natural responses is included.

    Group 1 is only ever queried naturally and group 2 only ever with a
    controlled mediator; the observational view queries all units
    naturally.
    """
    if n < 2:
        raise ValueError("need at least two units")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if not 0.0 < split < 1.0:
        raise ValueError("split must lie strictly between 0 and 1")
    rng = np.random.Generator(np.random.Philox(_as_seed_sequence(seed)))

    perm = rng.permutation(n)
    n1 = min(max(int(round(n * split)), 1), n - 1)
    group1_units = np.sort(perm[:n1])
    group2_units = np.sort(perm[n1:])

    t1 = (rng.random(n1) < p).astype(np.int64)
    m1, y1 = oracle.respond_natural(group1_units, t1)
    m1 = np.asarray(m1, dtype=np.int64)

    levels = m1.max() + 1 if support is None else int(support)
    if m1.max() >= levels:
        raise ValueError("observed mediator level outside declared support")
    p_hat = np.bincount(m1, minlength=levels) / n1

    n2 = n - n1
    if joint:
        pick = rng.integers(0, n1, size=n2)
        t2, m2 = t1[pick], m1[pick]
    else:
        t2 = (rng.random(n2) < p).astype(np.int64)
        m2 = rng.choice(levels, size=n2, p=p_hat)
    y2 = oracle.respond_controlled(group2_units, t2, m2)

    obs = None
    if observational:
        units = np.arange(n)
        t_obs = (rng.random(n) < p).astype(np.int64)
        m_obs, y_obs = oracle.respond_natural(units, t_obs)
        obs = ObservedData(t=t_obs, m=m_obs, y=y_obs)

    return DesignDataset(
        group1=ObservedData(t=t1, m=m1, y=y1),
        group2=ObservedData(t=t2, m=m2, y=y2),
        observational=obs,
    )


def estimate_from_design(
    dataset: DesignDataset, ate_source: str = "observational"
) -> dict[str, EstimateReport]:
    """ATE, weighted direct effect, and implied indirect effect from one run.

    The WCDE always uses group 1 for frequencies and group 2 for cells.
    The ATE comes from the observational view by default (falling back to
    group 1 when the view is absent) or from group 1 on request.
    """
    if ate_source not in ATE_SOURCES:
        raise ValueError(f"ate_source must be one of {ATE_SOURCES}")
    stats = fit_cell_statistics(dataset.group1, dataset.group2)
    wcde = estimate_wcde(stats)
    if ate_source == "observational" and dataset.observational is not None:
        ate = estimate_ate(dataset.observational)
    else:
        ate = estimate_ate(dataset.group1)
    iie = estimate_iie(ate, wcde)
    return {"ATE": ate, "WCDE": wcde, "IIE": iie}
