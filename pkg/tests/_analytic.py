"""Closed-form benchmark values for the latent-threshold mixture process.

Derived independently of the library code so simulator output and oracle
averages can be cross-checked against exact numbers:

- Mediator shares are normal-mixture tail probabilities: the latent draw is
  a two-component scale mixture with unit-variance base, so
  P(latent > 0) = sum_c w_c * Phi(mean / sqrt(s_c)).
- Covariance slopes come from Stein's identity per component: for jointly
  normal (X, W) with Cov(X, W) = sigma, Cov(X, 1{W > 0}) = sigma * f_W(0).
  With component covariance s * Sigma the factor is sqrt(s) * phi(mean/sqrt(s))
  per unit Sigma-entry, giving the mixture constant K below.

The coupling parameter enters eight cross-covariances with entries +/-phi,
arranged so mediator indicators are uncorrelated with same-level outcome
contrasts; the slopes below follow by adding the surviving +/-K terms.
"""

import math

from scipy.stats import norm

# (weight, variance scale) of the two mixture components
MIXTURE = ((0.6, 1.0), (0.4, 2.0))

# latent means: control/treated mediator, then the 2x2 outcome table
# E[Y0(0)], E[Y0(1)], E[Y1(0)], E[Y1(1)]
MEAN = (-1.0, 1.0, 0.0, 0.2, 0.6, 1.0)

_Y00, _Y01, _Y10, _Y11 = MEAN[2:]
ICDE0 = _Y10 - _Y00  # mean treatment effect with the mediator held at 0
ICDE1 = _Y11 - _Y01  # ... held at 1


def threshold_prob(mean: float) -> float:
    """P(latent > 0) for the scale mixture centered at ``mean``."""
    return sum(w * norm.cdf(mean / math.sqrt(s)) for w, s in MIXTURE)


P_M1 = threshold_prob(MEAN[1])  # natural mediator share under treatment
P_M0 = threshold_prob(MEAN[0])  # ... under control

# Cov(X, 1{latent > 0}) per unit covariance entry, at threshold distance 1
K_SLOPE = sum(w * math.sqrt(s) * norm.pdf(1.0 / math.sqrt(s)) for w, s in MIXTURE)


def true_ate(phi: float) -> float:
    # E[Y1(M1)] - E[Y0(M0)]; each natural outcome picks up 2*phi*K from the
    # two +/-phi covariances between its own mediator and its outcome pair.
    return (
        _Y10
        + (_Y11 - _Y10) * P_M1
        - _Y00
        - (_Y01 - _Y00) * P_M0
        + 4.0 * K_SLOPE * phi
    )


def true_wcde(p: float) -> float:
    # mediator indicators are uncorrelated with same-level outcome contrasts,
    # so the weighted effect is exactly the share-weighted mean of ICDEs.
    share = p * P_M1 + (1.0 - p) * P_M0
    return ICDE0 + (ICDE1 - ICDE0) * share


def true_nde() -> float:
    # (P_M1 + P_M0) / 2 = 1/2 by threshold symmetry, and every phi term
    # cancels, so the natural direct effect is flat in the coupling.
    return ICDE0 + (ICDE1 - ICDE0) * 0.5 * (P_M1 + P_M0)


def true_nie(phi: float) -> float:
    mean_part = 0.5 * (P_M1 - P_M0) * ((_Y11 - _Y10) + (_Y01 - _Y00))
    return mean_part + 4.0 * K_SLOPE * phi


def true_iie(p: float, phi: float) -> float:
    return true_ate(phi) - true_wcde(p)
