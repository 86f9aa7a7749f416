"""Gaussian-mixture data-generating process with latent-threshold mediators.

One latent 6-vector per unit -- two latent mediator propensities followed
by the four potential outcomes -- drawn from a scale mixture of normals
with a shared mean.  The ``phi`` parameter couples latent mediators to
potential outcomes with alternating signs, violating mediator
ignorability while leaving every unit-level controlled direct effect
uncorrelated with mediator take-up.  Binary mediators threshold the
latents at zero.

Random streams are counter-based (numpy Philox) keyed by
``SeedSequence(seed, spawn_key=stream_id)``, so any stream can be
regenerated independently of draw order; determinism is guaranteed within
a numpy version, and statistical equivalence across versions.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .estimands import (
    EstimandValue,
    ObservedData,
    Population,
    oracle_ate,
    oracle_iie,
    oracle_nde,
    oracle_nie,
    oracle_wcde,
)

__all__ = [
    "ConfoundedConfig",
    "SimulationConfig",
    "TableOracle",
    "TruthEntry",
    "TruthTable",
    "build_sigma",
    "compute_truth",
    "confounded_propensities",
    "generate_confounded_observational",
    "generate_observational",
    "make_oracle",
    "sample_confounded",
    "sample_population",
    "write_truth_table",
]

# latent vector layout: (m0 latent, m1 latent, y0_at_m0, y0_at_m1, y1_at_m0, y1_at_m1)
_ALIGNED = ((0, 2), (0, 4), (1, 3), (1, 5))  # latent mediator moves with outcome
_OPPOSED = ((0, 3), (0, 5), (1, 2), (1, 4))  # latent mediator moves against outcome

_TRUTH_STREAM = 1_000_003  # spawn-key prefix reserved for truth populations

TRUTH_POPULATION_SIZE = 4_000_000


def build_sigma(
    phi: float, outcome_cov: float = 0.5, mediator_cov: float = 0.6
) -> np.ndarray:
    """Covariance of the latent 6-vector.

    Unit diagonal, ``mediator_cov`` between the latent mediators,
    ``outcome_cov`` between every pair of potential outcomes, and +/- phi
    between latent mediators and outcomes in the alternating pattern that
    cancels inside unit-level controlled direct effects.
    """
    sigma = np.full((6, 6), float(outcome_cov))
    sigma[0, 1] = sigma[1, 0] = float(mediator_cov)
    for i, j in _ALIGNED:
        sigma[i, j] = sigma[j, i] = phi
    for i, j in _OPPOSED:
        sigma[i, j] = sigma[j, i] = -phi
    np.fill_diagonal(sigma, 1.0)
    return sigma


def _cholesky_factor(config: "SimulationConfig") -> np.ndarray:
    sigma = build_sigma(config.phi, config.outcome_cov, config.mediator_cov)
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise ValueError(
            f"latent covariance is not positive definite at phi={config.phi}"
        ) from None


@dataclass(frozen=True)
class SimulationConfig:
    """Everything that defines one simulation setting.

    ``mean`` follows the latent vector layout; ``mixture_weights`` and
    ``scale_factors`` define the scale mixture (covariances are
    scale * sigma with a common mean).  ``identical_mediators`` copies the
    control latent into the treated latent after sampling, producing a
    world where treatment never moves the mediator.
    """

    mixture_weights: tuple[float, ...] = (0.6, 0.4)
    scale_factors: tuple[float, ...] = (1.0, 2.0)
    mean: tuple[float, ...] = (-1.0, 1.0, 0.0, 0.2, 0.6, 1.0)
    phi: float = 0.0
    outcome_cov: float = 0.5
    mediator_cov: float = 0.6
    p_treat: float = 0.5
    n: int = 4000
    seed: int = 0
    replications: int = 1000
    identical_mediators: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "mixture_weights", tuple(float(w) for w in self.mixture_weights))
        object.__setattr__(self, "scale_factors", tuple(float(s) for s in self.scale_factors))
        object.__setattr__(self, "mean", tuple(float(v) for v in self.mean))
        if len(self.mixture_weights) != len(self.scale_factors) or not self.mixture_weights:
            raise ValueError("mixture_weights and scale_factors must align and be nonempty")
        if any(w <= 0 for w in self.mixture_weights) or abs(sum(self.mixture_weights) - 1.0) > 1e-12:
            raise ValueError("mixture weights must be positive and sum to 1")
        if any(s <= 0 for s in self.scale_factors):
            raise ValueError("scale factors must be positive")
        if len(self.mean) != 6:
            raise ValueError("mean must have six entries")
        if not 0.0 <= self.p_treat <= 1.0:
            raise ValueError(f"p_treat must lie in [0, 1], got {self.p_treat}")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.replications < 1:
            raise ValueError("replications must be positive")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        _cholesky_factor(self)  # fail fast on a non-PD covariance


def _stream_key(stream_id) -> tuple[int, ...]:
    if isinstance(stream_id, (int, np.integer)):
        key = (int(stream_id),)
    else:
        key = tuple(int(s) for s in stream_id)
    if any(s < 0 for s in key):
        raise ValueError("stream ids must be nonnegative")
    return key


def _rng(seed: int, stream_id) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=seed, spawn_key=_stream_key(stream_id))
    return np.random.Generator(np.random.Philox(seq))


def _sample_latents(
    config: SimulationConfig, count: int, rng: np.random.Generator
) -> np.ndarray:
    components = rng.choice(
        len(config.mixture_weights), size=count, p=config.mixture_weights
    )
    z = rng.standard_normal((count, 6))
    factor = _cholesky_factor(config)
    scale = np.sqrt(np.asarray(config.scale_factors))[components]
    return np.asarray(config.mean) + (z @ factor.T) * scale[:, None]


def _population_from_latents(latents: np.ndarray, stratum=None) -> Population:
    return Population(
        m0_latent=latents[:, 0],
        m1_latent=latents[:, 1],
        y0_at_m0=latents[:, 2],
        y0_at_m1=latents[:, 3],
        y1_at_m0=latents[:, 4],
        y1_at_m1=latents[:, 5],
        stratum=stratum,
    )


def sample_population(
    config: SimulationConfig, count: int, stream_id=0
) -> Population:
    """Draw ``count`` units from the process on the given stream."""
    if count < 1:
        raise ValueError("count must be positive")
    rng = _rng(config.seed, stream_id)
    latents = _sample_latents(config, count, rng)
    if config.identical_mediators:
        latents[:, 1] = latents[:, 0]
    return _population_from_latents(latents)


class TableOracle:
    """Experiment oracle backed by a fully simulated population."""

    def __init__(self, population: Population) -> None:
        n = len(population)
        self._n = n
        outcomes = np.empty((n, 2, 2))
        outcomes[:, 0, 0] = population.y0_at_m0
        outcomes[:, 0, 1] = population.y0_at_m1
        outcomes[:, 1, 0] = population.y1_at_m0
        outcomes[:, 1, 1] = population.y1_at_m1
        self._outcomes = outcomes
        self._mediators = np.stack(
            [population.m0, population.m1], axis=1
        ).astype(np.int64)

    def __len__(self) -> int:
        return self._n

    def _index(self, units, values, name, upper):
        u = np.asarray(units, dtype=np.int64)
        v = np.asarray(values, dtype=np.int64)
        if ((u < 0) | (u >= self._n)).any():
            raise IndexError(f"unit id outside 0..{self._n - 1}")
        if ((v < 0) | (v >= upper)).any():
            raise ValueError(f"{name} must lie in 0..{upper - 1}")
        return u, v

    def respond_natural(self, units, t):
        scalar = np.isscalar(units)
        u, tt = self._index(units, t, "t", 2)
        m = self._mediators[u, tt]
        y = self._outcomes[u, tt, m]
        if scalar:
            return int(m), float(y)
        return m, y

    def respond_controlled(self, units, t, m):
        scalar = np.isscalar(units)
        u, tt = self._index(units, t, "t", 2)
        _, mm = self._index(units, m, "m", 2)
        y = self._outcomes[u, tt, mm]
        if scalar:
            return float(y)
        return y


def make_oracle(population: Population) -> TableOracle:
    """Wrap a population as an experiment oracle."""
    return TableOracle(population)


def generate_observational(
    config: SimulationConfig, population: Population, stream_id=1
) -> ObservedData:
    """Observational records: T ~ Bernoulli(p_treat), natural responses."""
    n = len(population)
    rng = _rng(config.seed, stream_id)
    t = (rng.random(n) < config.p_treat).astype(np.int64)
    m, y = make_oracle(population).respond_natural(np.arange(n), t)
    return ObservedData(t=t, m=m, y=y, stratum=population.stratum)


# ---------------------------------------------------------------------------
# truth tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TruthEntry:
    """Oracle values for one (p, phi) setting."""

    p: float
    phi: float
    values: dict[str, EstimandValue]


@dataclass(frozen=True)
class TruthTable:
    """Ground-truth estimand values over a (p, phi) grid.

    Each entry holds ATE, WCDE, IIE, NDE, NIE as oracle means over a large
    simulated population (size ``population_size``) with Monte Carlo SEs.
    """

    population_size: int
    entries: tuple[TruthEntry, ...]

    def value(self, p: float, phi: float, tag: str) -> EstimandValue:
        for entry in self.entries:
            if math.isclose(entry.p, p, abs_tol=1e-12) and math.isclose(
                entry.phi, phi, abs_tol=1e-12
            ):
                return entry.values[tag]
        raise KeyError(f"no truth entry for (p={p}, phi={phi})")

    def validate_identities(self, rtol: float = 1e-9) -> None:
        """Check ATE = WCDE + IIE and ATE = NDE + NIE on every entry."""
        for entry in self.entries:
            ate = entry.values["ATE"].value
            scale = max(1.0, abs(ate))
            if abs(ate - (entry.values["WCDE"].value + entry.values["IIE"].value)) > rtol * scale:
                raise ValueError(f"ATE != WCDE + IIE at (p={entry.p}, phi={entry.phi})")
            if abs(ate - (entry.values["NDE"].value + entry.values["NIE"].value)) > rtol * scale:
                raise ValueError(f"ATE != NDE + NIE at (p={entry.p}, phi={entry.phi})")


def compute_truth(
    config: SimulationConfig,
    population_size: int = TRUTH_POPULATION_SIZE,
    p_values=None,
    phi_values=None,
) -> TruthTable:
    """Oracle estimand values from one large population per phi.

    Defaults to the config's own (p_treat, phi); pass lists to fill a
    grid.  Treatment share only enters through the oracle weights, so all
    p values share each phi's population.
    """
    if population_size < 2:
        raise ValueError("population_size must be at least 2")
    ps = tuple(float(p) for p in (p_values if p_values is not None else (config.p_treat,)))
    phis = tuple(float(f) for f in (phi_values if phi_values is not None else (config.phi,)))
    if not ps or not phis:
        raise ValueError("p_values and phi_values must be nonempty")
    entries = []
    for phi_index, phi in enumerate(phis):
        cfg = replace(config, phi=phi)
        population = sample_population(
            cfg, population_size, stream_id=(_TRUTH_STREAM, phi_index)
        )
        ate = oracle_ate(population)
        nde = oracle_nde(population)
        nie = oracle_nie(population)
        for p in ps:
            entries.append(
                TruthEntry(
                    p=p,
                    phi=phi,
                    values={
                        "ATE": ate,
                        "WCDE": oracle_wcde(population, p),
                        "IIE": oracle_iie(population, p),
                        "NDE": nde,
                        "NIE": nie,
                    },
                )
            )
    table = TruthTable(population_size=population_size, entries=tuple(entries))
    table.validate_identities()
    return table


def write_truth_table(table: TruthTable, path) -> Path:
    """Export a truth table as delimited text (p, phi, estimand, value, mc_se)."""
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["p", "phi", "estimand", "value", "mc_se"])
        for entry in table.entries:
            for tag in ("ATE", "WCDE", "IIE", "NDE", "NIE"):
                value = entry.values[tag]
                writer.writerow(
                    [
                        repr(entry.p),
                        repr(entry.phi),
                        tag,
                        repr(value.value),
                        "" if value.mc_se is None else repr(value.mc_se),
                    ]
                )
    return path


# ---------------------------------------------------------------------------
# confounded test variant
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConfoundedConfig:
    """Binary-confounder variant: one covariate moves treatment take-up,
    mediator take-up, and outcome levels at once.

    ``propensity`` gives P(T=1 | v) for v = 0, 1; ``outcome_shift`` is
    added to all four potential outcomes and ``mediator_shift`` to both
    latent mediators when v = 1.  Because the outcome shift is common to
    all potential outcomes it cancels in every effect, so the confounding
    hits estimators, not estimands.
    """

    base: SimulationConfig = field(default_factory=SimulationConfig)
    stratum_prob: float = 0.5
    propensity: tuple[float, float] = (0.3, 0.7)
    outcome_shift: float = 2.0
    mediator_shift: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.stratum_prob < 1.0:
            raise ValueError("stratum_prob must lie strictly between 0 and 1")
        if len(self.propensity) != 2 or not all(0.0 < e < 1.0 for e in self.propensity):
            raise ValueError("propensity must hold two probabilities in (0, 1)")


def sample_confounded(
    config: ConfoundedConfig, count: int, stream_id=0
) -> Population:
    """Draw units with the stratum column set and shifts applied."""
    if count < 1:
        raise ValueError("count must be positive")
    rng = _rng(config.base.seed, stream_id)
    stratum = (rng.random(count) < config.stratum_prob).astype(np.int64)
    latents = _sample_latents(config.base, count, rng)
    if config.base.identical_mediators:
        latents[:, 1] = latents[:, 0]
    flagged = stratum == 1
    latents[flagged, :2] += config.mediator_shift
    latents[flagged, 2:] += config.outcome_shift
    return _population_from_latents(latents, stratum=stratum)


def confounded_propensities(
    config: ConfoundedConfig, population: Population
) -> np.ndarray:
    """Per-unit P(T=1 | v) for a confounded population."""
    if population.stratum is None:
        raise ValueError("population carries no stratum column")
    e0, e1 = config.propensity
    return np.where(population.stratum == 1, e1, e0)


def generate_confounded_observational(
    config: ConfoundedConfig, population: Population, stream_id=1
) -> ObservedData:
    """Observational records with T ~ Bernoulli(P(T=1 | v))."""
    n = len(population)
    rng = _rng(config.base.seed, stream_id)
    e = confounded_propensities(config, population)
    t = (rng.random(n) < e).astype(np.int64)
    m, y = make_oracle(population).respond_natural(np.arange(n), t)
    return ObservedData(t=t, m=m, y=y, stratum=population.stratum)
