import math

import pytest

from pnsqkd.enumeration import evaluate
from pnsqkd.montecarlo import (
    McOptions,
    check_counter,
    compare,
    compare_all,
    shard_plan,
    simulate,
    survival,
)


@pytest.fixture(scope="module")
def base_eval():
    from pnsqkd import baseline

    return evaluate(baseline())


def test_photodetected_within_four_sigma(base, base_eval):
    (tally,) = simulate(base, McOptions(seed=7, slots_scale=100))
    mu = base_eval.bob_signal.n_pd * 100
    assert abs(tally.counters["pd_s"] - mu) <= 4 * math.sqrt(mu)


def test_opaque_first_segment(base):
    _, psi_eb = survival(base)
    (tally,) = simulate(base, McOptions(seed=3, slots_scale=5), survival_override=(0.0, psi_eb))
    assert set(tally.counters.values()) == {0}
    (tally,) = simulate(base.replace(p_pl=1.0), McOptions(seed=3, slots_scale=5, method="dense"))
    assert set(tally.counters.values()) == {0}


def test_equal_means_give_double_eve_ratio(base):
    s = base.replace(lambda_d=0.5)
    (tally,) = simulate(s, McOptions(seed=11, slots_scale=100))
    # n_es ~ 2.9e5, n_ed ~ 1.4e5: the ratio's sd is about 0.0065
    assert tally.rho_e_sd == pytest.approx(2.0, abs=0.03)
    assert tally.rho_y_sd == pytest.approx(1.0, abs=0.05)


def test_thirty_replications_agree(base, base_eval):
    tallies = simulate(base, McOptions(seed=1, replications=30, slots_scale=100))
    reports = compare_all(base_eval, tallies)
    assert sum(r.passed for r in reports) >= 29


def test_corrupted_downstream_survival_is_caught(base, base_eval):
    psi_ae, psi_eb = survival(base)
    (tally,) = simulate(base, McOptions(seed=5, slots_scale=100), survival_override=(psi_ae, psi_eb * 1.1))
    report = compare(base_eval, tally)
    check = next(c for c in report.checks if c.counter == "op_s")
    assert not check.passed and check.z > 4
    assert not report.passed


def test_all_zero_against_zero_expectation(base):
    s = base.replace(p_pl=1.0)
    (tally,) = simulate(s, McOptions(seed=2, slots_scale=3))
    assert compare(evaluate(s), tally).passed


def test_compare_rejects_other_scenario(base, base_eval):
    (tally,) = simulate(base.replace(lambda_d=0.3), McOptions(seed=1))
    with pytest.raises(ValueError, match="different scenarios"):
        compare(base_eval, tally)


@pytest.mark.parametrize(
    "expected, observed, passed",
    [(100.0, 140, True), (100.0, 141, False), (100.0, 59, False), (0.0, 6, True), (0.0, 7, False), (10.0, 0, True)],
)
def test_check_counter_rules(expected, observed, passed):
    assert check_counter("x", expected, observed).passed is passed


def test_determinism(base):
    opts = McOptions(seed=42, replications=3, slots_scale=20)
    a = simulate(base, opts)
    b = simulate(base, opts)
    assert [t.counters for t in a] == [t.counters for t in b]
    assert a[0].counters != a[1].counters
    c = simulate(base, McOptions(seed=43, replications=3, slots_scale=20))
    assert a[0].counters != c[0].counters


def test_determinism_across_worker_counts(base):
    opts = McOptions(seed=9, replications=2, slots_scale=25)  # 2.5e7 signal slots: three shards
    assert len(shard_plan(base, opts)) == 2 * (3 + 2)
    serial = simulate(base, opts, workers=1)
    parallel = simulate(base, opts, workers=2)
    assert [t.counters for t in serial] == [t.counters for t in parallel]


def test_replication_prefix_is_stable(base):
    # replication r draws the same stream no matter how many replications are requested
    one = simulate(base, McOptions(seed=4, replications=1, slots_scale=5))
    three = simulate(base, McOptions(seed=4, replications=3, slots_scale=5))
    assert one[0].counters == three[0].counters


def test_counter_consistency(base):
    for t in simulate(base, McOptions(seed=8, replications=3, slots_scale=10, truncation_mode="physical")):
        c = t.counters
        for tag, m in (("s", t.m_s), ("d", t.m_d)):
            assert 0 <= c[f"pd_{tag}"] <= c[f"op_{tag}"] <= m
            for i in (1, 2, 3):
                assert 0 <= c[f"pd_{tag}_{i}"] <= c[f"op_{tag}_{i}"] <= c[f"eve_{tag}_{i + 1}"]
        assert c["sift_s"] <= c["pd_s"]
        assert all(isinstance(v, int) and v >= 0 for v in c.values())


def test_dense_sampler_agrees_with_model(base, base_eval):
    tallies = simulate(base, McOptions(seed=21, replications=2, slots_scale=3, method="dense"))
    assert all(r.passed for r in compare_all(base_eval, tallies))


def test_dense_and_sparse_agree(base):
    dense = simulate(base, McOptions(seed=5, slots_scale=4, method="dense"))[0].counters
    sparse = simulate(base, McOptions(seed=6, slots_scale=4))[0].counters
    for key in ("eve_s_2", "op_s", "pd_s", "eve_d_2", "op_d"):
        a, b = dense[key], sparse[key]
        # two independent counts with equal means: difference sd is sqrt(a + b)
        assert abs(a - b) <= 4 * math.sqrt(a + b)


def test_physical_truncation_gap_matches_model(base):
    # both modes share every draw; only emissions above J differ
    opts = dict(seed=13, slots_scale=100)
    match = simulate(base, McOptions(**opts))[0].counters
    phys = simulate(base, McOptions(**opts, truncation_mode="physical"))[0].counters
    assert all(phys[k] >= match[k] for k in ("op_s", "pd_s", "op_d", "sift_s"))
    # the untruncated model (J = 20 carries all relevant mass) predicts the extra pulses
    gap = (evaluate(base.replace(truncation_order=20)).bob_signal.n_op - evaluate(base).bob_signal.n_op) * 100
    extra = phys["op_s"] - match["op_s"]
    assert abs(extra - gap) <= 4 * math.sqrt(gap)
    # about 1.3% of Bob's signal pulses come from emissions above four photons
    assert 0.01 < extra / match["op_s"] < 0.02


def test_realized_metrics(base):
    (t,) = simulate(base, McOptions(seed=1, slots_scale=10))
    c = t.counters
    assert t.R_k == c["sift_s"] / (base.source.m_total * 10)
    assert t.y_bs == c["op_s"] / (base.source.m_s * 10)
    assert t.rho_e_sd == c["eve_s_2"] / c["eve_d_2"]


def test_undefined_realized_ratio(base):
    (t,) = simulate(base.replace(lambda_d=0.0), McOptions(seed=1))
    assert t.rho_e_sd is None and t.rho_y_sd is None


@pytest.mark.parametrize(
    "kwargs",
    [{"seed": -1}, {"seed": 2**64}, {"replications": 0}, {"slots_scale": 0}, {"truncation_mode": "x"}, {"method": "x"}],
)
def test_options_validation(kwargs):
    with pytest.raises(ValueError):
        McOptions(**kwargs)
