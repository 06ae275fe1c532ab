"""Scenario parameters for a decoy-pulse BB84 link with an intercepting eavesdropper.

All types are frozen dataclasses. Construction never raises on bad values;
:func:`validate` collects every violated constraint at once so a malformed
scenario file can be reported in full.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any

log = logging.getLogger(__name__)


class ScenarioError(ValueError):
    """Raised when a scenario violates one or more constraints.

    ``errors`` holds one human-readable message per violation.
    """

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class SourceParams:
    lambda_s: float = 0.5
    lambda_d: float = 0.2
    m_s: int = 1_000_000
    m_d: int = 500_000
    m_v: int = 10_000

    @property
    def m_total(self) -> int:
        return self.m_s + self.m_d + self.m_v


@dataclass(frozen=True)
class LinkGeometry:
    alpha: float = 0.2  # dB/km
    l_total: float = 50.0  # km
    eve_fraction: float = 0.5

    @property
    def l_ae(self) -> float:
        return self.eve_fraction * self.l_total

    @property
    def l_eb(self) -> float:
        # complement of l_ae so the two segments sum to l_total exactly
        return self.l_total - self.l_ae


@dataclass(frozen=True)
class ReceiverParams:
    p_pl: float = 0.5
    eta_pd: float = 0.3
    alpha_sift: float = 0.2
    alpha_err: float = 0.2


@dataclass(frozen=True)
class Scenario:
    source: SourceParams = field(default_factory=SourceParams)
    link: LinkGeometry = field(default_factory=LinkGeometry)
    receiver: ReceiverParams = field(default_factory=ReceiverParams)
    truncation_order: int = 4

    def replace(self, **changes: Any) -> "Scenario":
        """Return a copy with flat field overrides, e.g. ``replace(lambda_d=0.3)``.

        Keys are looked up in source, link, receiver, then the scenario itself.
        """
        parts = {"source": self.source, "link": self.link, "receiver": self.receiver}
        top: dict[str, Any] = {}
        updates: dict[str, dict[str, Any]] = {k: {} for k in parts}
        for key, value in changes.items():
            for part_name, part in parts.items():
                if key in _field_names(type(part)):
                    updates[part_name][key] = value
                    break
            else:
                if key != "truncation_order":
                    raise KeyError(f"unknown scenario field {key!r}")
                top[key] = value
        new_parts = {
            name: type(part)(**{**asdict(part), **updates[name]})
            for name, part in parts.items()
        }
        return Scenario(**new_parts, truncation_order=top.get("truncation_order", self.truncation_order))

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def digest(self) -> str:
        """SHA-256 of the canonical (key-sorted, compact) JSON form."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Scenario":
        """Strictly parse a scenario document.

        Unknown keys and missing keys are both errors; nothing is defaulted.
        Raises :class:`ScenarioError` listing every structural problem.
        """
        errors: list[str] = []
        if not isinstance(data, dict):
            raise ScenarioError(["scenario document must be a JSON object"])
        sections = {"source": SourceParams, "link": LinkGeometry, "receiver": ReceiverParams}
        expected_top = set(sections) | {"truncation_order"}
        for key in sorted(set(data) - expected_top):
            errors.append(f"unknown key {key!r}")
        for key in sorted(expected_top - set(data)):
            errors.append(f"missing key {key!r}")
        built: dict[str, Any] = {}
        for name, klass in sections.items():
            sub = data.get(name)
            if sub is None:
                continue
            if not isinstance(sub, dict):
                errors.append(f"{name} must be an object")
                continue
            names = _field_names(klass)
            for key in sorted(set(sub) - names):
                errors.append(f"unknown key {name}.{key!r}")
            for key in sorted(names - set(sub)):
                errors.append(f"missing key {name}.{key!r}")
            built[name] = klass(**{k: v for k, v in sub.items() if k in names})
        if errors:
            raise ScenarioError(errors)
        return cls(**built, truncation_order=data["truncation_order"])

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError([f"invalid JSON: {exc}"]) from exc
        return cls.from_dict(data)


def _field_names(klass: type) -> set[str]:
    return {f.name for f in fields(klass)}


def _is_int(x: Any) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _is_real(x: Any) -> bool:
    return (isinstance(x, (int, float)) and not isinstance(x, bool)) and math.isfinite(x)


def violations(scenario: Scenario) -> list[str]:
    """Every violated constraint of ``scenario``, as ``field: constraint (got value)``."""
    errs: list[str] = []

    def check(name: str, value: Any, ok: bool, rule: str) -> None:
        if not ok:
            errs.append(f"{name} must be {rule} (got {value!r})")

    src, link, rx = scenario.source, scenario.link, scenario.receiver

    ls, ld = src.lambda_s, src.lambda_d
    check("lambda_s", ls, _is_real(ls) and ls > 0, "> 0")
    check("lambda_d", ld, _is_real(ld) and ld >= 0, ">= 0")
    if _is_real(ls) and _is_real(ld) and 0 < ls < ld:
        errs.append(f"lambda_d must be <= lambda_s (got lambda_d={ld!r}, lambda_s={ls!r})")
    check("m_s", src.m_s, _is_int(src.m_s) and src.m_s >= 1, "an integer >= 1")
    check("m_d", src.m_d, _is_int(src.m_d) and src.m_d >= 1, "an integer >= 1")
    check("m_v", src.m_v, _is_int(src.m_v) and src.m_v >= 0, "an integer >= 0")

    check("alpha", link.alpha, _is_real(link.alpha) and link.alpha > 0, "> 0")
    check("l_total", link.l_total, _is_real(link.l_total) and link.l_total > 0, "> 0")
    ef = link.eve_fraction
    check("eve_fraction", ef, _is_real(ef) and 0 < ef < 1, "in (0,1)")

    check("p_pl", rx.p_pl, _is_real(rx.p_pl) and 0 <= rx.p_pl <= 1, "in [0,1]")
    check("eta_pd", rx.eta_pd, _is_real(rx.eta_pd) and 0 < rx.eta_pd <= 1, "in (0,1]")
    check("alpha_sift", rx.alpha_sift, _is_real(rx.alpha_sift) and 0 <= rx.alpha_sift < 1, "in [0,1)")
    check("alpha_err", rx.alpha_err, _is_real(rx.alpha_err) and 0 <= rx.alpha_err < 1, "in [0,1)")

    j = scenario.truncation_order
    check("truncation_order", j, _is_int(j) and j >= 2, "an integer >= 2")
    return errs


def validate(scenario: Scenario) -> Scenario:
    """Return ``scenario`` unchanged if valid, else raise :class:`ScenarioError`.

    An empty decoy stream (``lambda_d == 0``) is accepted with a logged
    warning, since the signal-to-decoy ratios are then undefined.
    """
    errs = violations(scenario)
    if errs:
        raise ScenarioError(errs)
    if scenario.source.lambda_d == 0:
        log.warning("lambda_d = 0: signal-to-decoy ratios will be undefined")
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    """Parse and validate a scenario JSON file."""
    return validate(Scenario.from_json(Path(path).read_text()))


def baseline() -> Scenario:
    """The shipped baseline scenario (50 km link, Eve halfway, decoy mean 0.2)."""
    text = resources.files("pnsqkd").joinpath("data/baseline.json").read_text()
    return validate(Scenario.from_json(text))


def baseline_path() -> Path:
    return Path(str(resources.files("pnsqkd").joinpath("data/baseline.json")))
