import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chsh_qkd.attack import (
    AttackConfig,
    attacked_box_source,
    chsh_variance_decomposition,
    expected_chsh,
    honest_chsh_std_error,
    max_replacement_probability,
    pass_probability_estimate,
    per_kind_probability,
    simulate_attack,
    tradeoff_sweep,
)
from chsh_qkd.boxes import BoxKind
from chsh_qkd.protocol import Mode, run_session
from chsh_qkd.stats import TSIRELSON, AcceptancePolicy

POLICY = AcceptancePolicy(2.5)
R2 = math.sqrt(2)


class TestClosedForm:
    def test_expected_chsh(self):
        assert expected_chsh(0, TSIRELSON) == TSIRELSON
        assert expected_chsh(1, TSIRELSON) == 2
        assert abs(expected_chsh(0.3964, TSIRELSON) - 2.5) <= 2e-4
        with pytest.raises(ValueError):
            expected_chsh(1.2)

    def test_max_replacement(self):
        assert abs(max_replacement_probability(2.5, TSIRELSON) - 0.396447) <= 5e-6
        assert max_replacement_probability(TSIRELSON, TSIRELSON) == 0
        assert round(per_kind_probability(2.5), 4) == 0.0991
        with pytest.raises(ValueError):
            max_replacement_probability(2.5, 2.0)
        with pytest.raises(ValueError):
            max_replacement_probability(2.0)

    @given(st.floats(2.0, TSIRELSON, exclude_min=True))
    def test_inverse_pair(self, s):
        assert expected_chsh(max_replacement_probability(s)) == pytest.approx(s, abs=1e-12)


class TestSource:
    def test_p_zero_is_all_honest(self):
        src = attacked_box_source(AttackConfig(0.0))
        comp, replaced, eve = src.assign(10_000, np.random.default_rng(0))
        assert not comp.any() and not replaced.any() and not eve.any()
        assert src.components[0].kind is BoxKind.HONEST

    def test_next_box(self):
        src = attacked_box_source(AttackConfig(1.0, kind_weights=(0, 0, 1, 0)))
        box, replaced, a0 = src.next_box(np.random.default_rng(1))
        assert replaced and box.kind is BoxKind.X3 and a0 in (1, -1)
        assert box.respond(0, 0) == (a0, a0)

    def test_full_replacement_single_kind_is_exact(self):
        src = attacked_box_source(AttackConfig(1.0, kind_weights=(1, 0, 0, 0)))
        res = run_session(Mode.DI, src, 10_000, POLICY, seed=3)
        assert res.chsh.s_hat == 2.0

    def test_full_replacement_equal_kinds(self):
        res = run_session(Mode.DI, attacked_box_source(AttackConfig(1.0)), 10_000, POLICY, seed=3)
        assert abs(res.chsh.s_hat - 2.0) <= 5 * res.chsh.std_error
        assert not res.accepted

    def test_full_replacement_dd(self):
        src = attacked_box_source(AttackConfig(1.0, mode=Mode.DD))
        for box in src.components[1:]:
            corr = box.joint_distribution() @ np.array([1, -1, -1, 1])
            assert corr[1, 0] + corr[1, 1] + corr[2, 0] - corr[2, 1] == pytest.approx(R2, abs=1e-12)
        res = run_session(Mode.DD, src, 100_000, POLICY, seed=3)
        assert abs(res.chsh.s_hat - R2) <= 5 * res.chsh.std_error

    def test_config_validation(self):
        with pytest.raises(ValueError):
            AttackConfig(-0.1)
        with pytest.raises(ValueError):
            AttackConfig(0.1, kind_weights=(0.5, 0.5, 0.5, 0))
        with pytest.raises(ValueError):
            AttackConfig(0.1, a0_plus_probability=2)


class TestSimulation:
    def test_eve_knows_leaked_bits(self):
        out = simulate_attack(AttackConfig(0.4), 20_000, 20, POLICY, seed=4)
        assert out.eve_bits_all_correct
        assert out.agreement_rate == 1.0
        assert all(r.leaked_bits > 0 for r in out.rows)

    def test_mean_s_hat_converges(self):
        p = 0.25
        trials, n = 200, 20_000
        out = simulate_attack(AttackConfig(p), n, trials, POLICY, seed=5)
        se = out.s_hat_spread / math.sqrt(trials)
        assert abs(out.mean_s_hat - expected_chsh(p)) <= 5 * se

    def test_variance_decomposition_matches_spread(self):
        cfg = AttackConfig(0.396447)
        n = 20_000
        out = simulate_attack(cfg, n, 400, POLICY, seed=6)
        decomp = chsh_variance_decomposition(cfg, n)
        assert decomp["total"] == pytest.approx(decomp["honest"] + decomp["eve_boxes"] + decomp["mixing"])
        # sample std of 400 draws has relative error ~ 1/sqrt(800)
        assert out.s_hat_spread == pytest.approx(decomp["std_error"], rel=0.15)

    def test_single_kind_adds_no_variance(self):
        d = chsh_variance_decomposition(AttackConfig(0.3, kind_weights=(0, 1, 0, 0)), 60_000)
        assert d["eve_boxes"] == pytest.approx(0.0, abs=1e-18)
        full = chsh_variance_decomposition(AttackConfig(1.0, kind_weights=(1, 0, 0, 0)), 60_000)
        assert full["total"] == pytest.approx(0.0, abs=1e-18)

    def test_pass_probability_estimate_at_boundary(self):
        assert pass_probability_estimate(AttackConfig(max_replacement_probability(2.5)), 100_000, 2.5) == pytest.approx(0.5, abs=0.01)

    def test_di_equal_weights_is_balanced(self):
        p = 0.3
        res = run_session(Mode.DI, attacked_box_source(AttackConfig(p)), 400_000, POLICY, seed=7)
        signed = [s * est for s, (est, _) in zip((1, 1, 1, -1), res.chsh.per_correlator)]
        ses = [se for _, se in res.chsh.per_correlator]
        expected = (1 - p) / R2 + p * 0.5
        for v, se in zip(signed, ses):
            assert abs(v - expected) <= 5 * se

    def test_dd_bias_pattern(self):
        p = 0.2
        res = run_session(Mode.DD, attacked_box_source(AttackConfig(p, mode=Mode.DD)), 400_000, POLICY, seed=8)
        expected = (1 / R2, (1 - p) / R2, 1 / R2, -(1 - p) / R2)
        for (est, se), e in zip(res.chsh.per_correlator, expected):
            assert abs(est - e) <= 5 * se
        assert res.bias_detected

    def test_worker_count_does_not_change_results(self):
        cfg = AttackConfig(0.3)
        one = simulate_attack(cfg, 5000, 12, POLICY, seed=9, workers=1)
        many = simulate_attack(cfg, 5000, 12, POLICY, seed=9, workers=4)
        assert one.rows == many.rows
        assert one.summary() == many.summary()

    def test_insufficient_data_counts_as_reject(self):
        out = simulate_attack(AttackConfig(0.1), 4, 10, POLICY, seed=1)
        assert any(r.insufficient_data for r in out.rows)
        assert all(not r.accepted for r in out.rows if r.insufficient_data)

    def test_no_accepted_runs(self):
        out = simulate_attack(AttackConfig(1.0), 5000, 5, POLICY, seed=1)
        assert out.pass_rate == 0 and out.leaked_fraction_given_pass is None


class TestSweep:
    def test_monotone(self):
        rows = tradeoff_sweep([10**4, 10**5, 10**6, 10**7], 0.01)
        assert all(a.s_min < b.s_min for a, b in zip(rows, rows[1:]))
        assert all(a.p_max > b.p_max for a, b in zip(rows, rows[1:]))
        assert all(a.expected_leaked_bits < b.expected_leaked_bits for a, b in zip(rows, rows[1:]))

    def test_limit(self):
        a, b = tradeoff_sweep([10**4, 10**8], 0.01)
        assert b.p_max < a.p_max

    def test_alpha_half(self):
        (row,) = tradeoff_sweep([10**4], 0.5)
        assert row.s_min == pytest.approx(TSIRELSON, abs=1e-15)
        assert row.p_max == pytest.approx(0.0, abs=1e-15)

    def test_values(self):
        (row,) = tradeoff_sweep([600], 0.05)
        sigma = math.sqrt(2 / 100)
        assert honest_chsh_std_error(600) == pytest.approx(sigma)
        assert row.s_min == pytest.approx(TSIRELSON - 1.6448536269514722 * sigma)
        assert row.expected_leaked_bits == pytest.approx(row.p_max * 100)

    def test_domain(self):
        with pytest.raises(ValueError):
            tradeoff_sweep([10**4], 0.0)
        with pytest.raises(ValueError):
            tradeoff_sweep([50], 0.01)
