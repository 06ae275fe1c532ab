import json

import pytest
from hypothesis import given, strategies as st

from pnsqkd.config import (
    LinkGeometry,
    ReceiverParams,
    Scenario,
    ScenarioError,
    SourceParams,
    baseline_path,
    load_scenario,
    validate,
    violations,
)


def test_baseline_is_valid(base):
    assert validate(base) is base
    assert base == Scenario()  # dataclass defaults mirror the shipped file
    assert base.source.m_total == 1_510_000


def test_eta_pd_zero_rejected(base):
    with pytest.raises(ScenarioError) as exc:
        validate(base.replace(eta_pd=0.0))
    assert exc.value.errors == ["eta_pd must be in (0,1] (got 0.0)"]


def test_eve_fraction_one_rejected(base):
    with pytest.raises(ScenarioError, match=r"eve_fraction must be in \(0,1\)"):
        validate(base.replace(eve_fraction=1.0))


def test_all_violations_reported():
    bad = Scenario(
        source=SourceParams(lambda_s=-1.0, lambda_d=-0.1, m_s=0, m_d=2.5, m_v=-1),
        link=LinkGeometry(alpha=0.0, l_total=-5.0, eve_fraction=0.0),
        receiver=ReceiverParams(p_pl=1.5, eta_pd=0.0, alpha_sift=1.0, alpha_err=-0.1),
        truncation_order=1,
    )
    errs = violations(bad)
    names = [e.split()[0] for e in errs]
    assert names == [
        "lambda_s", "lambda_d", "m_s", "m_d", "m_v",
        "alpha", "l_total", "eve_fraction",
        "p_pl", "eta_pd", "alpha_sift", "alpha_err",
        "truncation_order",
    ]
    assert "(got 2.5)" in errs[3]


def test_lambda_d_above_lambda_s_rejected(base):
    with pytest.raises(ScenarioError, match="lambda_d must be <= lambda_s"):
        validate(base.replace(lambda_d=0.6))


def test_lambda_d_equal_and_zero_accepted(base, caplog):
    validate(base.replace(lambda_d=0.5))
    validate(base.replace(lambda_d=0.0))
    assert "undefined" in caplog.text


def test_segments_sum_to_total():
    link = LinkGeometry(alpha=0.2, l_total=37.3, eve_fraction=0.3)
    assert link.l_ae + link.l_eb == link.l_total
    assert link.l_ae > 0 and link.l_eb > 0


def test_json_round_trip(base):
    assert Scenario.from_json(base.to_json()) == base


def test_strict_parsing_rejects_unknown_and_missing(base):
    doc = base.to_dict()
    doc["source"]["lambda_x"] = 1.0
    del doc["receiver"]["p_pl"]
    doc["extra"] = 3
    with pytest.raises(ScenarioError) as exc:
        Scenario.from_dict(doc)
    assert exc.value.errors == [
        "unknown key 'extra'",
        "unknown key source.'lambda_x'",
        "missing key receiver.'p_pl'",
    ]


def test_digest_ignores_key_order(base, tmp_path):
    doc = json.loads(baseline_path().read_text())
    shuffled = {k: dict(reversed(list(v.items()))) if isinstance(v, dict) else v for k, v in reversed(list(doc.items()))}
    path = tmp_path / "s.json"
    path.write_text(json.dumps(shuffled))
    assert load_scenario(path).digest() == base.digest()
    assert base.replace(lambda_d=0.3).digest() != base.digest()


@given(
    lam_s=st.floats(0.01, 2.0),
    frac=st.floats(0.0, 1.0),
    m_s=st.integers(1, 10**7),
    m_d=st.integers(1, 10**7),
    m_v=st.integers(0, 10**6),
)
def test_validate_idempotent_and_integer_total(lam_s, frac, m_s, m_d, m_v):
    s = Scenario(source=SourceParams(lam_s, lam_s * frac, m_s, m_d, m_v))
    assert validate(validate(s)) == validate(s)
    assert s.source.m_total == m_s + m_d + m_v
    assert isinstance(s.source.m_total, int)
