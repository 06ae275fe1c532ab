"""Analytic Alice -> Eve -> Bob impairment enumeration.

Every quantity here is an expected count or a probability; nothing is
rounded. Photon classes are indexed by the number ``k`` of photons Eve
receives in one pulse. Under the photon-number-splitting rule Eve blocks
``k <= 1``, keeps one photon and forwards one when ``k == 2``, and forwards
all ``k`` photons when ``k >= 3``. Bob's class ``i = k - 1`` collects the
pulses that originated from Eve's ``k``-photon receptions.

Ratios whose denominator is zero are reported as ``None`` (undefined).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb
from typing import Mapping

from .config import Scenario, validate
from .photon_stats import fiber_segment, poisson_pmf


@dataclass(frozen=True)
class SurvivalProbs:
    psi_ae: float
    psi_eb: float
    p_fl_ae: float
    p_fl_eb: float


def survival_probs(scenario: Scenario) -> SurvivalProbs:
    """Per-photon probability of reaching, and matching the polarization
    setting of, Eve (``psi_ae``) and Bob (``psi_eb``)."""
    link, p_pl = scenario.link, scenario.receiver.p_pl
    ae = fiber_segment(link.alpha, link.l_ae)
    eb = fiber_segment(link.alpha, link.l_eb)
    return SurvivalProbs(
        psi_ae=(1.0 - ae.p_fl) * (1.0 - p_pl),
        psi_eb=(1.0 - eb.p_fl) * (1.0 - p_pl),
        p_fl_ae=ae.p_fl,
        p_fl_eb=eb.p_fl,
    )


def forwarded_photons(k: int) -> int:
    """Photons Eve forwards to Bob after receiving ``k`` photons in one pulse."""
    if k <= 1:
        return 0
    return 1 if k == 2 else k


def reception_probs_at_eve(mean: float, psi_ae: float, J: int = 4) -> dict[int, float]:
    """Probability that Eve receives exactly ``k`` photons of one pulse, for k = 2..J.

    Alice emits ``j <= J`` photons with Poisson probability; each survives
    independently with ``psi_ae``. Emissions above ``J`` are ignored.
    """
    if mean < 0:
        raise ValueError(f"source mean must be >= 0 (got {mean})")
    if not 0.0 <= psi_ae <= 1.0:
        raise ValueError(f"psi_ae must be in [0,1] (got {psi_ae})")
    if J < 2:
        raise ValueError(f"truncation order must be >= 2 (got {J})")
    p_tx = [poisson_pmf(mean, j) for j in range(J + 1)]
    return {
        k: sum(p_tx[j] * comb(j, k) * psi_ae**k * (1.0 - psi_ae) ** (j - k) for j in range(k, J + 1))
        for k in range(2, J + 1)
    }


@dataclass(frozen=True)
class EveReception:
    signal: Mapping[int, float]  # p_rx(k) for the signal stream
    decoy: Mapping[int, float]
    n_es_2: float
    n_ed_2: float

    @property
    def n_e_2(self) -> float:
        return self.n_es_2 + self.n_ed_2


def eve_two_photon_counts(
    scenario: Scenario, signal: Mapping[int, float], decoy: Mapping[int, float]
) -> EveReception:
    """Expected numbers of two-photon pulses Eve receives from each stream."""
    src = scenario.source
    return EveReception(
        signal=dict(signal),
        decoy=dict(decoy),
        n_es_2=src.m_s * signal[2],
        n_ed_2=src.m_d * decoy[2],
    )


def _at_least_one(f: int, psi: float) -> float:
    """1 - (1 - psi)**f without cancellation for small psi."""
    if psi >= 1.0:
        return 1.0 if f > 0 else 0.0
    return -math.expm1(f * math.log1p(-psi))


def _optical_probs(p_rx: Mapping[int, float], psi_eb: float) -> tuple[float, ...]:
    # per-slot probability that Bob sees a pulse of class i = k - 1
    return tuple(p_rx[k] * _at_least_one(forwarded_photons(k), psi_eb) for k in sorted(p_rx))


def _detected_probs(p_rx: Mapping[int, float], psi_eb: float, eta_pd: float) -> tuple[float, ...]:
    out = []
    for k in sorted(p_rx):
        f = forwarded_photons(k)
        # every one of the a arriving photons must be detected
        bracket = sum(
            comb(f, a) * psi_eb**a * (1.0 - psi_eb) ** (f - a) * eta_pd**a for a in range(1, f + 1)
        )
        out.append(p_rx[k] * bracket)
    return tuple(out)


def bob_optical_counts(m: float, p_rx: Mapping[int, float], psi_eb: float) -> tuple[float, ...]:
    """Expected optical pulses at Bob per class i = 1..J-1.

    A pulse counts when at least one forwarded photon arrives.
    """
    return tuple(m * p for p in _optical_probs(p_rx, psi_eb))


def bob_photodetected_counts(
    m: float, p_rx: Mapping[int, float], psi_eb: float, eta_pd: float
) -> tuple[float, ...]:
    """Expected photodetected bits at Bob per class i = 1..J-1.

    For ``a`` arriving photons the arrival probability is weighted by
    ``eta_pd**a``, i.e. a bit is retrieved only if all of them are detected.
    """
    return tuple(m * p for p in _detected_probs(p_rx, psi_eb, eta_pd))


@dataclass(frozen=True)
class BobTally:
    m: int  # slot count of the stream
    op: tuple[float, ...]  # n_op(1), n_op(2), ...
    pd: tuple[float, ...]
    yield_: float  # probability that one pulse of the stream reaches Bob

    @property
    def n_op(self) -> float:
        return sum(self.op)

    @property
    def n_pd(self) -> float:
        return sum(self.pd)


def bob_tally(m: int, p_rx: Mapping[int, float], psi_eb: float, eta_pd: float) -> BobTally:
    optical = _optical_probs(p_rx, psi_eb)
    return BobTally(
        m=m,
        op=tuple(m * p for p in optical),
        pd=bob_photodetected_counts(m, p_rx, psi_eb, eta_pd),
        yield_=sum(optical),
    )


def post_process(n_pd_bs: float, alpha_err: float, alpha_sift: float) -> float:
    """Signal bits left after error correction and sifting losses."""
    return n_pd_bs * (1.0 - alpha_err) * (1.0 - alpha_sift)


def _ratio(num: float, den: float) -> float | None:
    return None if den == 0 else num / den


@dataclass(frozen=True)
class Metrics:
    n_err_sift: float
    R_k: float
    y_bs: float
    y_bd: float
    rho_y_sd: float | None
    rho_e_sd: float | None


@dataclass(frozen=True)
class Evaluation:
    """Every intermediate of one analytic pipeline run."""

    scenario: Scenario
    survival: SurvivalProbs
    eve: EveReception
    bob_signal: BobTally
    bob_decoy: BobTally
    metrics: Metrics

    def counters(self) -> dict[str, float]:
        """Expected values keyed by the Monte Carlo counter names."""
        out: dict[str, float] = {}
        for tag, p_rx, m, bob in (
            ("s", self.eve.signal, self.scenario.source.m_s, self.bob_signal),
            ("d", self.eve.decoy, self.scenario.source.m_d, self.bob_decoy),
        ):
            for k in sorted(p_rx):
                out[f"eve_{tag}_{k}"] = m * p_rx[k]
            for i, v in enumerate(bob.op, start=1):
                out[f"op_{tag}_{i}"] = v
            out[f"op_{tag}"] = bob.n_op
            for i, v in enumerate(bob.pd, start=1):
                out[f"pd_{tag}_{i}"] = v
            out[f"pd_{tag}"] = bob.n_pd
        out["sift_s"] = self.metrics.n_err_sift
        return out

    def record(self) -> dict[str, float | None]:
        """Flat record: the scenario's sweep coordinates plus the metrics."""
        src, m = self.scenario.source, self.metrics
        return {
            "lambda_s": src.lambda_s,
            "lambda_d": src.lambda_d,
            "l_total": self.scenario.link.l_total,
            "rho_e_sd": m.rho_e_sd,
            "rho_y_sd": m.rho_y_sd,
            "R_k": m.R_k,
            "y_bs": m.y_bs,
            "y_bd": m.y_bd,
        }


def evaluate(scenario: Scenario) -> Evaluation:
    validate(scenario)
    src, rx, J = scenario.source, scenario.receiver, scenario.truncation_order
    surv = survival_probs(scenario)
    eve = eve_two_photon_counts(
        scenario,
        reception_probs_at_eve(src.lambda_s, surv.psi_ae, J),
        reception_probs_at_eve(src.lambda_d, surv.psi_ae, J),
    )
    bs = bob_tally(src.m_s, eve.signal, surv.psi_eb, rx.eta_pd)
    bd = bob_tally(src.m_d, eve.decoy, surv.psi_eb, rx.eta_pd)
    n_sift = post_process(bs.n_pd, rx.alpha_err, rx.alpha_sift)
    # per-slot forms of n_op/m and n_es/n_ed: equal streams give ratios of exactly 1 and m_s/m_d
    y_bs, y_bd = bs.yield_, bd.yield_
    p2_ratio = _ratio(eve.signal[2], eve.decoy[2])
    metrics = Metrics(
        n_err_sift=n_sift,
        R_k=n_sift / src.m_total,
        y_bs=y_bs,
        y_bd=y_bd,
        rho_y_sd=_ratio(y_bs, y_bd),
        rho_e_sd=None if p2_ratio is None else (src.m_s / src.m_d) * p2_ratio,
    )
    return Evaluation(scenario, surv, eve, bs, bd, metrics)


def metrics(scenario: Scenario) -> Metrics:
    return evaluate(scenario).metrics
