"""Potential-outcome domain types and exact estimand oracles.

Every estimand here -- the average treatment effect, controlled direct
effects and their mediator-weighted average, the implied indirect effect,
and the natural direct/indirect pair -- is a population mean of a per-unit
quantity that requires the unit's complete table of potential mediators and
potential outcomes.  Such tables are observable only in simulation, which
makes these functions the ground truth against which the observed-data
estimators in :mod:`wcde.estimators` are benchmarked.

Mediators are binary at this layer.  General categorical support is handled
by the estimators, which never see potential tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "EstimandValue",
    "GroupLabel",
    "ObservedData",
    "ObservedRecord",
    "Population",
    "PotentialTable",
    "as_observed_data",
    "as_population",
    "oracle_ate",
    "oracle_cde",
    "oracle_iie",
    "oracle_nde",
    "oracle_nie",
    "oracle_wcde",
    "unit_icde",
]


class GroupLabel(str, Enum):
    """Provenance of an observed record within the two-group protocol."""

    OBSERVATIONAL = "observational"
    DESIGN_GROUP_1 = "group1"
    DESIGN_GROUP_2 = "group2"


_OUTCOME_FIELDS = ("y0_at_m0", "y0_at_m1", "y1_at_m0", "y1_at_m1")


@dataclass(frozen=True)
class PotentialTable:
    """One unit's complete latent world.

    Latent mediator propensities under control/treatment, the binary
    mediators they imply (1 exactly when the latent value is positive), and
    the four potential outcomes ``y<t>_at_m<m>`` = outcome under treatment
    ``t`` with the mediator externally set to ``m``.
    """

    m0_latent: float
    m1_latent: float
    m0: int
    m1: int
    y0_at_m0: float
    y0_at_m1: float
    y1_at_m0: float
    y1_at_m1: float

    def __post_init__(self) -> None:
        if self.m0 != int(self.m0_latent > 0) or self.m1 != int(self.m1_latent > 0):
            raise ValueError(
                "binary mediator must equal 1 exactly when its latent value is > 0"
            )
        for name in _OUTCOME_FIELDS:
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @classmethod
    def from_binary(
        cls,
        m0: int,
        m1: int,
        y0_at_m0: float,
        y0_at_m1: float,
        y1_at_m0: float,
        y1_at_m1: float,
    ) -> "PotentialTable":
        """Build a table from binary mediators, synthesizing consistent latents."""
        return cls(
            m0_latent=0.5 if m0 else -0.5,
            m1_latent=0.5 if m1 else -0.5,
            m0=int(m0),
            m1=int(m1),
            y0_at_m0=float(y0_at_m0),
            y0_at_m1=float(y0_at_m1),
            y1_at_m0=float(y1_at_m0),
            y1_at_m1=float(y1_at_m1),
        )

    def natural_mediator(self, t: int) -> int:
        """Mediator value the unit would produce on its own under treatment t."""
        _check_binary(t, "t")
        return self.m1 if t else self.m0

    def outcome(self, t: int, m: int) -> float:
        """Potential outcome under treatment t with the mediator set to m."""
        _check_binary(t, "t")
        _check_binary(m, "m")
        if t:
            return self.y1_at_m1 if m else self.y1_at_m0
        return self.y0_at_m1 if m else self.y0_at_m0


@dataclass(frozen=True)
class ObservedRecord:
    """One experiment record: treatment, realized mediator, outcome.

    ``stratum`` is an optional categorical covariate label, ``group`` tags
    which arm of the two-group protocol produced the record, and ``weight``
    carries hypothetical-scenario reweighting (1.0 = design weight).
    """

    t: int
    m: int
    y: float
    stratum: object | None = None
    group: GroupLabel = GroupLabel.OBSERVATIONAL
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.t not in (0, 1):
            raise ValueError(f"t must be 0 or 1, got {self.t!r}")
        if not isinstance(self.m, (int, np.integer)) or self.m < 0:
            raise ValueError(f"m must be a nonnegative integer, got {self.m!r}")
        if not math.isfinite(self.y):
            raise ValueError("y must be finite")
        if not (math.isfinite(self.weight) and self.weight > 0):
            raise ValueError("weight must be positive and finite")


@dataclass(frozen=True)
class EstimandValue:
    """A ground-truth estimand value with its Monte Carlo standard error.

    ``mc_se`` is None when the population has fewer than two units (no
    spread to estimate); it quantifies only the finite-population sampling
    noise of the oracle, not any estimation uncertainty.
    """

    tag: str
    value: float
    mc_se: float | None = None

    def __post_init__(self) -> None:
        if self.mc_se is not None and not (self.mc_se >= 0):
            raise ValueError("mc_se must be nonnegative")


class Population:
    """Column-oriented container of potential tables.

    Holds the same eight per-unit fields as :class:`PotentialTable` as numpy
    arrays (mediators stored as 0/1 floats for direct use in arithmetic),
    plus an optional integer ``stratum`` column for confounded variants.
    """

    __slots__ = (
        "m0_latent",
        "m1_latent",
        "m0",
        "m1",
        "y0_at_m0",
        "y0_at_m1",
        "y1_at_m0",
        "y1_at_m1",
        "stratum",
    )

    def __init__(
        self,
        m0_latent,
        m1_latent,
        y0_at_m0,
        y0_at_m1,
        y1_at_m0,
        y1_at_m1,
        stratum=None,
    ) -> None:
        self.m0_latent = np.asarray(m0_latent, dtype=np.float64)
        self.m1_latent = np.asarray(m1_latent, dtype=np.float64)
        self.y0_at_m0 = np.asarray(y0_at_m0, dtype=np.float64)
        self.y0_at_m1 = np.asarray(y0_at_m1, dtype=np.float64)
        self.y1_at_m0 = np.asarray(y1_at_m0, dtype=np.float64)
        self.y1_at_m1 = np.asarray(y1_at_m1, dtype=np.float64)
        n = self.m0_latent.shape[0] if self.m0_latent.ndim else -1
        for name in ("m1_latent",) + _OUTCOME_FIELDS:
            arr = getattr(self, name)
            if arr.ndim != 1 or arr.shape[0] != n:
                raise ValueError("population columns must be 1-d arrays of equal length")
        for name in _OUTCOME_FIELDS:
            if not np.isfinite(getattr(self, name)).all():
                raise ValueError(f"{name} must be finite")
        # thresholding is definitional, so the binary columns are derived
        self.m0 = (self.m0_latent > 0).astype(np.float64)
        self.m1 = (self.m1_latent > 0).astype(np.float64)
        if stratum is None:
            self.stratum = None
        else:
            self.stratum = np.asarray(stratum)
            if self.stratum.shape != (n,):
                raise ValueError("stratum must have one entry per unit")

    def __len__(self) -> int:
        return self.m0_latent.shape[0]

    def __getitem__(self, i: int) -> PotentialTable:
        return PotentialTable(
            m0_latent=float(self.m0_latent[i]),
            m1_latent=float(self.m1_latent[i]),
            m0=int(self.m0[i]),
            m1=int(self.m1[i]),
            y0_at_m0=float(self.y0_at_m0[i]),
            y0_at_m1=float(self.y0_at_m1[i]),
            y1_at_m0=float(self.y1_at_m0[i]),
            y1_at_m1=float(self.y1_at_m1[i]),
        )

    @classmethod
    def from_tables(cls, tables: Iterable[PotentialTable]) -> "Population":
        tables = list(tables)
        return cls(
            m0_latent=[t.m0_latent for t in tables],
            m1_latent=[t.m1_latent for t in tables],
            y0_at_m0=[t.y0_at_m0 for t in tables],
            y0_at_m1=[t.y0_at_m1 for t in tables],
            y1_at_m0=[t.y1_at_m0 for t in tables],
            y1_at_m1=[t.y1_at_m1 for t in tables],
        )

    def outcome(self, t: int, m: int) -> np.ndarray:
        _check_binary(t, "t")
        _check_binary(m, "m")
        if t:
            return self.y1_at_m1 if m else self.y1_at_m0
        return self.y0_at_m1 if m else self.y0_at_m0

    def icde(self, m: int) -> np.ndarray:
        """Per-unit controlled direct effect at mediator level m."""
        return self.outcome(1, m) - self.outcome(0, m)


PopulationLike = Union[Population, Sequence[PotentialTable]]


def as_population(population: PopulationLike) -> Population:
    """Accept a Population or any sequence of PotentialTable."""
    if isinstance(population, Population):
        return population
    return Population.from_tables(population)


class ObservedData:
    """Column-oriented container of observed records.

    ``t``/``m`` are integer arrays, ``y``/``weight`` float arrays;
    ``stratum`` and ``group`` are optional per-record columns.
    """

    __slots__ = ("t", "m", "y", "weight", "stratum", "group")

    def __init__(self, t, m, y, weight=None, stratum=None, group=None) -> None:
        self.t = np.asarray(t, dtype=np.int64)
        self.m = np.asarray(m, dtype=np.int64)
        self.y = np.asarray(y, dtype=np.float64)
        n = self.t.shape[0] if self.t.ndim else -1
        if self.t.ndim != 1 or self.m.shape != (n,) or self.y.shape != (n,):
            raise ValueError("t, m, y must be 1-d arrays of equal length")
        if not np.isin(self.t, (0, 1)).all():
            raise ValueError("t must contain only 0/1")
        if (self.m < 0).any():
            raise ValueError("m must be nonnegative")
        if not np.isfinite(self.y).all():
            raise ValueError("y must be finite")
        if weight is None:
            self.weight = np.ones(n, dtype=np.float64)
        else:
            self.weight = np.asarray(weight, dtype=np.float64)
            if self.weight.shape != (n,):
                raise ValueError("weight must have one entry per record")
            if not (np.isfinite(self.weight).all() and (self.weight > 0).all()):
                raise ValueError("weights must be positive and finite")
        self.stratum = None if stratum is None else np.asarray(stratum)
        if self.stratum is not None and self.stratum.shape != (n,):
            raise ValueError("stratum must have one entry per record")
        self.group = None if group is None else np.asarray(group)
        if self.group is not None and self.group.shape != (n,):
            raise ValueError("group must have one entry per record")

    def __len__(self) -> int:
        return self.t.shape[0]

    @classmethod
    def from_records(cls, records: Iterable[ObservedRecord]) -> "ObservedData":
        records = list(records)
        strata = [r.stratum for r in records]
        return cls(
            t=[r.t for r in records],
            m=[r.m for r in records],
            y=[r.y for r in records],
            weight=[r.weight for r in records],
            stratum=strata if any(s is not None for s in strata) else None,
            group=[r.group.value for r in records],
        )

    def to_records(self) -> list[ObservedRecord]:
        groups = (
            [GroupLabel.OBSERVATIONAL] * len(self)
            if self.group is None
            else [GroupLabel(str(g)) for g in self.group]
        )
        strata = [None] * len(self) if self.stratum is None else list(self.stratum)
        return [
            ObservedRecord(
                t=int(self.t[i]),
                m=int(self.m[i]),
                y=float(self.y[i]),
                stratum=strata[i],
                group=groups[i],
                weight=float(self.weight[i]),
            )
            for i in range(len(self))
        ]

    def subset(self, mask: np.ndarray) -> "ObservedData":
        return ObservedData(
            t=self.t[mask],
            m=self.m[mask],
            y=self.y[mask],
            weight=self.weight[mask],
            stratum=None if self.stratum is None else self.stratum[mask],
            group=None if self.group is None else self.group[mask],
        )

    def with_weight(self, weight: np.ndarray) -> "ObservedData":
        return ObservedData(
            t=self.t,
            m=self.m,
            y=self.y,
            weight=weight,
            stratum=self.stratum,
            group=self.group,
        )

    @staticmethod
    def concat(parts: Sequence["ObservedData"]) -> "ObservedData":
        if not parts:
            raise ValueError("no parts to concatenate")
        has_stratum = any(p.stratum is not None for p in parts)
        has_group = any(p.group is not None for p in parts)

        def strat(p):
            return p.stratum if p.stratum is not None else np.array([None] * len(p))

        def grp(p):
            if p.group is not None:
                return p.group
            return np.array([GroupLabel.OBSERVATIONAL.value] * len(p))

        return ObservedData(
            t=np.concatenate([p.t for p in parts]),
            m=np.concatenate([p.m for p in parts]),
            y=np.concatenate([p.y for p in parts]),
            weight=np.concatenate([p.weight for p in parts]),
            stratum=np.concatenate([strat(p) for p in parts]) if has_stratum else None,
            group=np.concatenate([grp(p) for p in parts]) if has_group else None,
        )


ObservedLike = Union[ObservedData, Sequence[ObservedRecord]]


def as_observed_data(records: ObservedLike) -> ObservedData:
    """Accept an ObservedData or any sequence of ObservedRecord."""
    if isinstance(records, ObservedData):
        return records
    return ObservedData.from_records(records)


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------


def _check_binary(value: int, name: str) -> None:
    if value not in (0, 1):
        raise ValueError(f"{name} must be 0 or 1, got {value!r}")


def _nonempty(population: Population) -> None:
    if len(population) == 0:
        raise ValueError("population is empty")


def _mc_summary(contributions: np.ndarray, tag: str) -> EstimandValue:
    value = float(np.mean(contributions))
    n = contributions.shape[0]
    mc_se = float(np.std(contributions, ddof=1) / math.sqrt(n)) if n >= 2 else None
    return EstimandValue(tag=tag, value=value, mc_se=mc_se)


def _treatment_share(p, n: int):
    """Validate p as a probability, scalar or one per unit; return broadcastable."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim == 0:
        if not (0.0 <= float(arr) <= 1.0):
            raise ValueError(f"p must lie in [0, 1], got {float(arr)}")
        return float(arr)
    if arr.shape != (n,):
        raise ValueError("per-unit treatment probabilities need one entry per unit")
    if ((arr < 0.0) | (arr > 1.0)).any():
        raise ValueError("per-unit treatment probabilities must lie in [0, 1]")
    return arr


def _ate_contributions(pop: Population) -> np.ndarray:
    return (
        pop.m1 * pop.y1_at_m1
        + (1.0 - pop.m1) * pop.y1_at_m0
        - pop.m0 * pop.y0_at_m1
        - (1.0 - pop.m0) * pop.y0_at_m0
    )


def _wcde_contributions(pop: Population, p) -> np.ndarray:
    # m0 + p*(m1 - m0) rather than p*m1 + (1-p)*m0: identical algebra, but it
    # collapses exactly to the realized mediator when m1 == m0, which keeps
    # "identical mediators => IIE = 0" an exact floating-point identity.
    w = pop.m0 + p * (pop.m1 - pop.m0)
    return w * pop.icde(1) + (1.0 - w) * pop.icde(0)


def unit_icde(table: PotentialTable, m: int) -> float:
    """Controlled direct effect of treatment for one unit at mediator level m."""
    _check_binary(m, "m")
    return table.outcome(1, m) - table.outcome(0, m)


def oracle_ate(population: PopulationLike) -> EstimandValue:
    """Average treatment effect: mean natural-outcome contrast over units."""
    pop = as_population(population)
    _nonempty(pop)
    return _mc_summary(_ate_contributions(pop), "ATE")


def oracle_cde(population: PopulationLike, m: int) -> EstimandValue:
    """Average controlled direct effect with the mediator held at level m."""
    pop = as_population(population)
    _nonempty(pop)
    _check_binary(m, "m")
    return _mc_summary(pop.icde(m), f"CDE({m})")


def oracle_wcde(population: PopulationLike, p) -> EstimandValue:
    """Mediator-weighted average of controlled direct effects.

    Each unit's controlled direct effects are weighted by the distribution
    of its realized mediator under treatment assignment probability ``p``
    (scalar, or one probability per unit for designs where assignment
    depends on a covariate).
    """
    pop = as_population(population)
    _nonempty(pop)
    share = _treatment_share(p, len(pop))
    return _mc_summary(_wcde_contributions(pop, share), "WCDE")


def oracle_iie(population: PopulationLike, p) -> EstimandValue:
    """Implied indirect effect: oracle ATE minus oracle WCDE, exactly.

    Computed as the difference of the two oracle means so that the
    decomposition ATE = WCDE + IIE holds to floating equality.  Zero
    (exactly) whenever treatment never moves the mediator.
    """
    pop = as_population(population)
    _nonempty(pop)
    share = _treatment_share(p, len(pop))
    ate = _ate_contributions(pop)
    wcde = _wcde_contributions(pop, share)
    value = float(np.mean(ate)) - float(np.mean(wcde))
    n = len(pop)
    diff = ate - wcde
    mc_se = float(np.std(diff, ddof=1) / math.sqrt(n)) if n >= 2 else None
    return EstimandValue(tag="IIE", value=value, mc_se=mc_se)


def oracle_nde(population: PopulationLike) -> EstimandValue:
    """Natural direct effect, averaged over both treatment arms.

    Equals the WCDE with p = 0.5 on the same population: both weight the
    unit-level controlled direct effects by (m0 + m1) / 2.
    """
    pop = as_population(population)
    _nonempty(pop)
    w = (pop.m1 + pop.m0) / 2.0
    contributions = w * pop.icde(1) + (1.0 - w) * pop.icde(0)
    return _mc_summary(contributions, "NDE")


def oracle_nie(population: PopulationLike) -> EstimandValue:
    """Natural indirect effect, averaged over both treatment arms.

    Mean of (m1 - m0)/2 times the sum of the two per-arm mediator effects
    on the outcome; satisfies ATE = NDE + NIE up to float roundoff.
    """
    pop = as_population(population)
    _nonempty(pop)
    contributions = (
        0.5
        * (pop.m1 - pop.m0)
        * ((pop.y1_at_m1 - pop.y1_at_m0) + (pop.y0_at_m1 - pop.y0_at_m0))
    )
    return _mc_summary(contributions, "NIE")
