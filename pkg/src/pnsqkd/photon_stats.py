"""Poisson photon statistics and fiber loss.

Pure functions: Poisson emission probabilities, fiber power-loss ratios and
the per-photon loss probability, both in closed form and by numerically
inverting the expected-loss balance of a Poisson-fed lossy fiber.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

# Poisson tail mass below which the outer sum of the loss balance is cut.
TAIL_CUTOFF = 1e-15
BISECTION_TOL = 1e-12


def poisson_pmf(mean: float, j: int) -> float:
    """P(J = j) for J ~ Poisson(mean), evaluated in log space."""
    if mean < 0:
        raise ValueError(f"Poisson mean must be >= 0 (got {mean})")
    if j < 0:
        raise ValueError(f"photon count must be >= 0 (got {j})")
    if mean == 0:
        return 1.0 if j == 0 else 0.0
    return math.exp(j * math.log(mean) - mean - math.lgamma(j + 1))


@dataclass(frozen=True)
class EmissionProfile:
    mean: float
    probs: tuple[float, ...]  # phi_0 .. phi_J
    tail: float  # P(j > J)

    @property
    def truncation_order(self) -> int:
        return len(self.probs) - 1

    def multi_photon(self) -> float:
        """P(j > 1), recomputed from the full distribution."""
        return 1.0 - self.probs[0] - self.probs[1]


def emission_profile(mean: float, J: int = 4) -> EmissionProfile:
    if J < 2:
        raise ValueError(f"truncation order must be >= 2 (got {J})")
    probs = tuple(poisson_pmf(mean, j) for j in range(J + 1))
    # math.fsum keeps the residual accurate when it is tiny
    tail = max(0.0, 1.0 - math.fsum(probs))
    return EmissionProfile(mean=mean, probs=probs, tail=tail)


@dataclass(frozen=True)
class FiberSegment:
    alpha: float  # dB/km
    length: float  # km
    loss_db: float
    rho: float  # linear power-loss ratio P_T / P_R
    p_fl: float  # per-photon loss probability

    @property
    def survival(self) -> float:
        return 1.0 / self.rho


def fiber_segment(alpha: float, length: float) -> FiberSegment:
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0 (got {alpha})")
    if length < 0:
        raise ValueError(f"length must be >= 0 (got {length})")
    loss_db = alpha * length
    rho = 10.0 ** (loss_db / 10.0)
    return FiberSegment(alpha=alpha, length=length, loss_db=loss_db, rho=rho, p_fl=1.0 - 1.0 / rho)


def arrival_mean(lam: float, rho: float) -> float:
    """Mean photon count at the fiber output for source mean ``lam``."""
    if lam < 0:
        raise ValueError(f"source mean must be >= 0 (got {lam})")
    if rho < 1:
        raise ValueError(f"loss ratio must be >= 1, a fiber cannot amplify (got {rho})")
    return lam / rho


def _poisson_support(lam: float) -> np.ndarray:
    """Counts 0..mu_max with the upper tail beyond mu_max below TAIL_CUTOFF."""
    mu_max = int(lam)
    cdf = 0.0
    # walk the pmf upward from 0 with the ratio recurrence
    p = math.exp(-lam)
    mu = 0
    while True:
        cdf += p
        if mu >= lam and 1.0 - cdf < TAIL_CUTOFF:
            break
        mu += 1
        p *= lam / mu
        if p == 0.0 and mu > lam:
            break
    mu_max = max(mu_max, mu)
    return np.arange(mu_max + 1)


def expected_loss(lam: float, p_fl: float, _cache: dict | None = None) -> float:
    """E over mu ~ Poisson(lam) of the expected number of photons lost,
    with each of the mu photons lost independently with probability p_fl.

    The inner binomial expectation is summed term by term, not collapsed.
    """
    if _cache is None:
        _cache = _loss_tables(lam)
    mu, kappa, log_weight, mask = _cache["mu"], _cache["kappa"], _cache["log_weight"], _cache["mask"]
    if p_fl <= 0.0:
        return 0.0
    if p_fl >= 1.0:
        return float(np.sum(np.exp(_cache["log_pmf"]) * mu[:, 0]))
    log_terms = log_weight + kappa * math.log(p_fl) + (mu - kappa) * math.log1p(-p_fl)
    terms = np.where(mask, kappa * np.exp(np.where(mask, log_terms, -np.inf)), 0.0)
    return float(terms.sum())


def _loss_tables(lam: float) -> dict:
    support = _poisson_support(lam)
    mu = support[:, None].astype(float)
    kappa = support[None, :].astype(float)
    mask = kappa <= mu
    log_pmf = np.where(support > 0, support * math.log(lam), 0.0) - lam - gammaln(support + 1)
    log_comb = gammaln(mu + 1) - gammaln(kappa + 1) - gammaln(np.maximum(mu - kappa, 0) + 1)
    log_weight = np.where(mask, log_pmf[:, None] + log_comb, -np.inf)
    return {"mu": mu, "kappa": kappa, "mask": mask, "log_weight": log_weight, "log_pmf": log_pmf}


def solve_photon_loss_prob(lam: float, n: float) -> float:
    """Per-photon loss probability that turns source mean ``lam`` into
    received mean ``n``, found by bisection on the expected-loss balance.

    ``n = lam - E[lost photons]`` is monotone in the loss probability, so
    bisection on [0, 1] always converges.
    """
    if not (lam > 0):
        raise ValueError(f"source mean must be > 0 (got {lam})")
    if n > lam:
        raise ValueError(f"received mean {n} exceeds transmitted mean {lam}")
    if n <= 0:
        raise ValueError("received mean must be > 0; total loss is outside the model")
    tables = _loss_tables(lam)
    lo, hi = 0.0, 1.0
    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if lam - expected_loss(lam, mid, tables) > n:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
