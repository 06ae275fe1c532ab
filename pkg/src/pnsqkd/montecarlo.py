"""Event-by-event Monte Carlo oracle for the enumeration model.

Every slot is an independent trial: Alice emits a Poisson number of photons,
each photon survives the Alice->Eve segment independently, Eve applies the
photon-number-splitting rule to what she receives, each forwarded photon
survives the Eve->Bob segment independently, and Bob's detector must register
every arriving photon. Signal bits are then thinned by error-correction and
sifting losses.

Two samplers are provided.

``dense``
    Draws every slot literally. Cost grows with the slot count; meant for
    small runs and for checking the sparse sampler.
``sparse`` (default)
    Uses the Poisson splitting property: the photons of a Poisson(lambda)
    pulse that reach Eve and those that do not are independent
    Poisson(lambda*psi_ae) and Poisson(lambda*(1-psi_ae)) counts. Only slots
    where Eve receives two or more photons can reach Bob, so their number is
    drawn as one binomial, and just those slots are then simulated photon by
    photon. The emitted count is reconstructed as received + lost, so
    truncation is applied to the same quantity as in the dense sampler.

Reproducibility
---------------
Each replication is split into a fixed shard plan: stream ``s`` (0 = signal,
1 = decoy) with ``N`` slots is cut into ``ceil(N / SHARD_SLOTS)`` shards.
Shard ``c`` of replication ``r`` draws from
``PCG64(SeedSequence(seed, spawn_key=(r, s, c)))``. Shard counters are merged
by summation, so the tally depends only on (scenario, options), never on the
worker count or completion order.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np
from scipy import stats

from .config import Scenario, validate

SHARD_SLOTS = 10_000_000
DENSE_CHUNK = 1_000_000

TruncationMode = Literal["match-analytic", "physical"]
Method = Literal["sparse", "dense"]


@dataclass(frozen=True)
class McOptions:
    seed: int = 0
    replications: int = 1
    truncation_mode: TruncationMode = "match-analytic"
    slots_scale: int = 1
    method: Method = "sparse"

    def __post_init__(self) -> None:
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ValueError(f"seed must be a 64-bit unsigned integer (got {self.seed!r})")
        if not (isinstance(self.replications, int) and self.replications >= 1):
            raise ValueError(f"replications must be a positive integer (got {self.replications!r})")
        if not (isinstance(self.slots_scale, int) and self.slots_scale >= 1):
            raise ValueError(f"slots_scale must be a positive integer (got {self.slots_scale!r})")
        if self.truncation_mode not in ("match-analytic", "physical"):
            raise ValueError(f"unknown truncation_mode {self.truncation_mode!r}")
        if self.method not in ("sparse", "dense"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class StreamJob:
    """Everything one shard needs; picklable for process pools."""

    replication: int
    stream: int  # 0 signal, 1 decoy
    shard: int
    n_slots: int
    mean: float
    psi_ae: float
    psi_eb: float
    eta_pd: float
    keep_prob: float | None  # post-processing survival; None for decoy
    J: int
    physical: bool
    method: str
    seed: int


def _rng(seed: int, replication: int, stream: int, shard: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(replication, stream, shard))
    return np.random.Generator(np.random.PCG64(ss))


def _support_end(a: float) -> int:
    """Largest count worth tabulating for Poisson(a): beyond it the pmf is < 1e-20."""
    k = max(2, int(a) + 1)
    while stats.poisson.pmf(k, a) >= 1e-20:
        k += 1
    return k


def _eve_counts_sparse(rng: np.random.Generator, job: StreamJob) -> tuple[np.ndarray, np.ndarray]:
    """(photons Eve received, photons Alice emitted) for slots with >= 2 at Eve."""
    a = job.mean * job.psi_ae
    b = job.mean * (1.0 - job.psi_ae)
    if a == 0.0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    # P(K >= 2) for K ~ Poisson(a); expm1 keeps precision for small a
    q2 = -math.expm1(-a) - a * math.exp(-a)
    n_hit = rng.binomial(job.n_slots, q2)
    if n_hit == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    support = np.arange(2, _support_end(a) + 1)
    pmf = stats.poisson.pmf(support, a)
    cdf = np.cumsum(pmf)
    cdf /= cdf[-1]
    k = support[np.searchsorted(cdf, rng.random(n_hit), side="right").clip(max=len(support) - 1)]
    lost = rng.poisson(b, n_hit)
    return k, k + lost


def _eve_counts_dense(rng: np.random.Generator, n: int, job: StreamJob) -> tuple[np.ndarray, np.ndarray]:
    j = rng.poisson(job.mean, n)
    k = rng.binomial(j, job.psi_ae)
    hit = k >= 2
    return k[hit], j[hit]


def _downstream(rng: np.random.Generator, k: np.ndarray, j: np.ndarray, job: StreamJob) -> dict[str, int]:
    """Eve's rule, the Eve->Bob segment, detection and post-processing.

    Draws are made for every slot before truncation is applied as a mask, so
    both truncation modes consume identical random streams.
    """
    tag = "s" if job.stream == 0 else "d"
    counted = np.ones(k.shape, bool) if job.physical else j <= job.J
    forwarded = np.where(k == 2, 1, k)
    arrived = rng.binomial(forwarded, job.psi_eb)
    optical = (arrived >= 1) & counted
    detected = optical & (rng.binomial(arrived, job.eta_pd) == arrived)
    out: dict[str, int] = {}
    for kk in range(2, job.J + 1):
        cls = k == kk
        out[f"eve_{tag}_{kk}"] = int(np.count_nonzero(cls & counted))
        out[f"op_{tag}_{kk - 1}"] = int(np.count_nonzero(optical & cls))
        out[f"pd_{tag}_{kk - 1}"] = int(np.count_nonzero(detected & cls))
    # totals include k > J receptions, which only occur in physical mode
    out[f"op_{tag}"] = int(np.count_nonzero(optical))
    out[f"pd_{tag}"] = int(np.count_nonzero(detected))
    if job.keep_prob is not None:
        kept = rng.random(len(k)) < job.keep_prob
        out["sift_s"] = int(np.count_nonzero(detected & kept))
    return out


def run_shard(job: StreamJob) -> dict[str, int]:
    rng = _rng(job.seed, job.replication, job.stream, job.shard)
    if job.method == "sparse":
        k, j = _eve_counts_sparse(rng, job)
        return _downstream(rng, k, j, job)
    totals: dict[str, int] = {}
    remaining = job.n_slots
    while remaining:
        n = min(remaining, DENSE_CHUNK)
        k, j = _eve_counts_dense(rng, n, job)
        _merge(totals, _downstream(rng, k, j, job))
        remaining -= n
    return totals


def _merge(into: dict[str, int], part: dict[str, int]) -> None:
    for key, v in part.items():
        into[key] = into.get(key, 0) + v


def _ratio(num: float, den: float) -> float | None:
    return None if den == 0 else num / den


@dataclass(frozen=True)
class McTally:
    scenario: Scenario
    options: McOptions
    replication: int
    counters: dict[str, int]

    @property
    def slots_scale(self) -> int:
        return self.options.slots_scale

    @property
    def m_s(self) -> int:
        return self.scenario.source.m_s * self.slots_scale

    @property
    def m_d(self) -> int:
        return self.scenario.source.m_d * self.slots_scale

    @property
    def R_k(self) -> float:
        return self.counters["sift_s"] / (self.scenario.source.m_total * self.slots_scale)

    @property
    def y_bs(self) -> float:
        return self.counters["op_s"] / self.m_s

    @property
    def y_bd(self) -> float:
        return self.counters["op_d"] / self.m_d

    @property
    def rho_y_sd(self) -> float | None:
        return _ratio(self.y_bs, self.y_bd)

    @property
    def rho_e_sd(self) -> float | None:
        return _ratio(self.counters["eve_s_2"], self.counters["eve_d_2"])


def survival(scenario: Scenario) -> tuple[float, float]:
    """(psi_ae, psi_eb) straight from the link budget, independent of the analytic module."""
    link, match = scenario.link, 1.0 - scenario.receiver.p_pl
    psi_ae = 10.0 ** (-link.alpha * link.l_ae / 10.0) * match
    psi_eb = 10.0 ** (-link.alpha * link.l_eb / 10.0) * match
    return psi_ae, psi_eb


def shard_plan(scenario: Scenario, options: McOptions, *, survival_override: tuple[float, float] | None = None) -> list[StreamJob]:
    src, rx = scenario.source, scenario.receiver
    psi_ae, psi_eb = survival_override or survival(scenario)
    keep = (1.0 - rx.alpha_err) * (1.0 - rx.alpha_sift)
    jobs = []
    for rep in range(options.replications):
        for stream, (m, mean, kp) in enumerate(((src.m_s, src.lambda_s, keep), (src.m_d, src.lambda_d, None))):
            total = m * options.slots_scale
            for shard in range(math.ceil(total / SHARD_SLOTS)):
                jobs.append(
                    StreamJob(
                        replication=rep,
                        stream=stream,
                        shard=shard,
                        n_slots=min(SHARD_SLOTS, total - shard * SHARD_SLOTS),
                        mean=mean,
                        psi_ae=psi_ae,
                        psi_eb=psi_eb,
                        eta_pd=rx.eta_pd,
                        keep_prob=kp,
                        J=scenario.truncation_order,
                        physical=options.truncation_mode == "physical",
                        method=options.method,
                        seed=options.seed,
                    )
                )
    return jobs


def simulate(
    scenario: Scenario,
    options: McOptions | None = None,
    *,
    workers: int = 1,
    survival_override: tuple[float, float] | None = None,
) -> list[McTally]:
    """Simulate ``options.replications`` independent runs; one tally each.

    ``survival_override`` replaces (psi_ae, psi_eb) for fault-injection checks.
    """
    options = options or McOptions()
    validate(scenario)
    jobs = shard_plan(scenario, options, survival_override=survival_override)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_shard, jobs))
    else:
        parts = [run_shard(job) for job in jobs]
    per_rep: list[dict[str, int]] = [{} for _ in range(options.replications)]
    for job, part in zip(jobs, parts):
        _merge(per_rep[job.replication], part)
    return [McTally(scenario, options, rep, counters) for rep, counters in enumerate(per_rep)]


# --- agreement with the analytic model -------------------------------------

Z_LIMIT = 4.0
Z_MIN_EXPECTED = 25.0


@dataclass(frozen=True)
class CounterCheck:
    counter: str
    expected: float
    observed: int
    z: float | None  # None when the interval rule was used
    passed: bool


@dataclass(frozen=True)
class AgreementReport:
    replication: int
    checks: tuple[CounterCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CounterCheck]:
        return [c for c in self.checks if not c.passed]


def check_counter(name: str, expected: float, observed: int) -> CounterCheck:
    """z-test at |z| <= 4 when the expectation is at least 25, otherwise
    the one-sided interval [0, mu + 6 sqrt(mu + 1)]."""
    if expected >= Z_MIN_EXPECTED:
        z = (observed - expected) / math.sqrt(expected)
        return CounterCheck(name, expected, observed, z, abs(z) <= Z_LIMIT)
    upper = expected + 6.0 * math.sqrt(expected + 1.0)
    return CounterCheck(name, expected, observed, None, 0 <= observed <= upper)


def compare(expected, tally: McTally) -> AgreementReport:
    """Check every tallied counter against the analytic expectation.

    ``expected`` is an :class:`~pnsqkd.enumeration.Evaluation` for the same
    scenario; expectations are scaled by the tally's ``slots_scale``.
    """
    if expected.scenario != tally.scenario:
        raise ValueError("analytic evaluation and Monte Carlo tally come from different scenarios")
    scale = tally.slots_scale
    checks = []
    for name, mu in expected.counters().items():
        if name not in tally.counters:
            raise ValueError(f"Monte Carlo tally lacks counter {name!r}")
        checks.append(check_counter(name, mu * scale, tally.counters[name]))
    return AgreementReport(tally.replication, tuple(checks))


def compare_all(expected, tallies: Iterable[McTally]) -> list[AgreementReport]:
    return [compare(expected, t) for t in tallies]
