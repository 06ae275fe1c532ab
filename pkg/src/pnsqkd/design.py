"""Parameter sweeps and decoy-mean selection on top of the analytic model."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

from .config import Scenario, ScenarioError, validate
from .enumeration import Evaluation, Metrics, evaluate

Axis = Literal["lambda_d", "l_total"]

DECOY_GRID = (0.01, 0.05, 0.10, 0.15, 0.20, 0.30, 0.40, 0.50)
LENGTH_GRID = tuple(float(x) for x in range(10, 101, 10))


class SweepError(ValueError):
    def __init__(self, axis: str, value: float, errors: list[str]):
        self.axis, self.value, self.errors = axis, value, errors
        super().__init__(f"{axis}={value}: " + "; ".join(errors))


@dataclass(frozen=True)
class SweepSpec:
    base: Scenario
    axis: Axis
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.axis not in ("lambda_d", "l_total"):
            raise ValueError(f"unknown sweep axis {self.axis!r}")
        values = tuple(self.values)
        if not values:
            raise ValueError("sweep values must be nonempty")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("sweep values must be strictly increasing")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class SweepRow:
    value: float
    evaluation: Evaluation

    @property
    def metrics(self) -> Metrics:
        return self.evaluation.metrics


def sweep(spec: SweepSpec) -> list[SweepRow]:
    """Evaluate the model at each axis value; rows follow ``spec.values`` order."""
    rows = []
    for value in spec.values:
        scenario = spec.base.replace(**{spec.axis: value})
        try:
            validate(scenario)
        except ScenarioError as exc:
            raise SweepError(spec.axis, value, exc.errors) from exc
        rows.append(SweepRow(value, evaluate(scenario)))
    return rows


@dataclass(frozen=True)
class DesignConstraints:
    min_yield_ratio: float = 2.0
    max_eve_ratio: float = 12.0

    def __post_init__(self) -> None:
        if not self.min_yield_ratio > 1:
            raise ValueError(f"min_yield_ratio must be > 1 (got {self.min_yield_ratio})")
        if not self.max_eve_ratio > 0:
            raise ValueError(f"max_eve_ratio must be > 0 (got {self.max_eve_ratio})")


@dataclass(frozen=True)
class Candidate:
    lambda_d: float
    rho_y_sd: float | None
    rho_e_sd: float | None
    meets_yield: bool
    meets_eve: bool

    @property
    def feasible(self) -> bool:
        return self.meets_yield and self.meets_eve

    @property
    def decoy_clutter_pct(self) -> float | None:
        """Decoy share of Eve's two-photon receptions, as 100 / rho_e_sd."""
        return None if not self.rho_e_sd else 100.0 / self.rho_e_sd


@dataclass(frozen=True)
class DesignReport:
    constraints: DesignConstraints
    candidates: tuple[Candidate, ...]
    recommended: float | None  # feasible point with the highest yield ratio
    most_cluttered: float | None  # feasible point with the most decoy clutter at Eve
    reason: str

    @property
    def feasible(self) -> bool:
        return self.recommended is not None


def select_decoy_mean(
    base: Scenario,
    constraints: DesignConstraints | None = None,
    grid: Sequence[float] = DECOY_GRID,
) -> DesignReport:
    """Pick a decoy mean from ``grid`` that keeps Eve detectable and cluttered.

    A grid point is feasible when ``rho_y_sd >= min_yield_ratio`` and
    ``rho_e_sd <= max_eve_ratio``. Detectability of Eve takes priority, so
    the recommendation is the feasible point with the largest yield ratio;
    the feasible point giving Eve the most decoy clutter is reported
    alongside it. No feasible point yields ``recommended=None`` and a reason.
    """
    constraints = constraints or DesignConstraints()
    grid = sorted(grid)
    if not grid:
        raise ValueError("decoy-mean grid is empty")
    lam_s = base.source.lambda_s
    bad = [g for g in grid if not 0 < g <= lam_s]
    if bad:
        raise ValueError(f"grid values must lie in (0, lambda_s={lam_s}]: {bad}")

    candidates = []
    for row in sweep(SweepSpec(base, "lambda_d", tuple(grid))):
        m = row.metrics
        candidates.append(
            Candidate(
                lambda_d=row.value,
                rho_y_sd=m.rho_y_sd,
                rho_e_sd=m.rho_e_sd,
                meets_yield=m.rho_y_sd is not None and m.rho_y_sd >= constraints.min_yield_ratio,
                meets_eve=m.rho_e_sd is not None and m.rho_e_sd <= constraints.max_eve_ratio,
            )
        )
    feasible = [c for c in candidates if c.feasible]
    if feasible:
        best = max(feasible, key=lambda c: c.rho_y_sd)
        cluttered = min(feasible, key=lambda c: c.rho_e_sd)
        reason = (
            f"{len(feasible)} of {len(candidates)} grid points feasible; "
            f"lambda_d={best.lambda_d:g} maximizes rho_y_sd={best.rho_y_sd:.2f}"
        )
        return DesignReport(constraints, tuple(candidates), best.lambda_d, cluttered.lambda_d, reason)

    floor = base.source.m_s / base.source.m_d
    if constraints.max_eve_ratio <= floor:
        reason = (
            f"infeasible: rho_e_sd >= m_s/m_d = {floor:g} whenever lambda_d <= lambda_s, "
            f"so max_eve_ratio={constraints.max_eve_ratio:g} cannot be met"
        )
    else:
        reason = (
            f"infeasible: no grid point has rho_y_sd >= {constraints.min_yield_ratio:g} "
            f"and rho_e_sd <= {constraints.max_eve_ratio:g}"
        )
    return DesignReport(constraints, tuple(candidates), None, None, reason)
