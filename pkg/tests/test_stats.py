import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chsh_qkd.boxes import BoxKind, LocalBoxSpec, dd_product_box, honest_box, local_box
from chsh_qkd.protocol import simulate_rounds, FixedSource
from chsh_qkd.quantum import bell_phi_plus
from chsh_qkd.stats import (
    HONEST_CORRELATORS,
    AcceptancePolicy,
    CorrelatorTable,
    InsufficientDataError,
    balance_test,
    bias_test,
    binomial_exact,
    chsh_estimate,
    correlator_estimate,
    fluctuation_report,
    log_binomial_probability,
    pass_probability_normal,
    perfect_ratio_probability,
)


def _table_from_box(box, n, seed):
    log = simulate_rounds(FixedSource(box), n, seed)
    return CorrelatorTable.from_rounds(log["alice_input"], log["bob_input"], log["a"], log["b"])


class TestCorrelatorEstimate:
    def test_examples(self):
        assert correlator_estimate(100, 0) == (1.0, 0.01)
        est, se = correlator_estimate(75, 25)
        assert est == 0.5
        assert se == pytest.approx(math.sqrt(0.75 / 100), rel=1e-12)
        assert correlator_estimate(50, 50) == (0.0, 0.1)

    def test_empty_cell(self):
        with pytest.raises(InsufficientDataError):
            correlator_estimate(0, 0)

    @given(st.lists(st.sampled_from([1, -1]), min_size=1, max_size=400))
    def test_equals_mean_of_products(self, products):
        n_same = products.count(1)
        est, _ = correlator_estimate(n_same, len(products) - n_same)
        assert est == pytest.approx(sum(products) / len(products), abs=1e-12)


class TestChshEstimate:
    def test_algebraic_maximum(self):
        est = chsh_estimate(CorrelatorTable((100, 100, 100, 0), (0, 0, 0, 100)))
        assert est.s_hat == 4.0

    def test_empty_cell_raises(self):
        with pytest.raises(InsufficientDataError):
            chsh_estimate(CorrelatorTable((5, 5, 5, 0), (5, 5, 5, 0)))

    def test_std_error_combines_cells(self):
        table = CorrelatorTable((75, 50, 100, 10), (25, 50, 0, 90))
        per = [correlator_estimate(s, d) for s, d in zip(table.n_same, table.n_diff)]
        est = chsh_estimate(table)
        assert est.std_error == pytest.approx(math.sqrt(sum(se**2 for _, se in per)))
        assert est.s_hat == pytest.approx(0.5 + 0.0 + 1.0 - (-0.8))

    @pytest.mark.parametrize("kind", [BoxKind.X1, BoxKind.X2, BoxKind.X3, BoxKind.X4])
    @pytest.mark.parametrize("a0", [1, -1])
    def test_single_local_box_has_no_fluctuation(self, kind, a0):
        table = _table_from_box(local_box(LocalBoxSpec(kind, a0)), 5000, 3)
        est = chsh_estimate(table)
        assert est.s_hat == 2.0
        # extreme cells contribute only the 1/n floor
        floor = math.sqrt(sum(1 / n**2 for n in table.totals))
        assert est.std_error == pytest.approx(floor)

    def test_honest_simulation(self):
        est = chsh_estimate(_table_from_box(honest_box(bell_phi_plus()), 100_000, 17))
        assert abs(est.s_hat - 2 * math.sqrt(2)) <= 5 * est.std_error

    def test_honest_std_error_matches_analytic_and_monte_carlo(self):
        # Oracle: draw cell counts directly from binomials, independent of the box machinery.
        m = 2000
        rng = np.random.default_rng(123)
        s_hats, ses = [], []
        for _ in range(1000):
            n_same = [rng.binomial(m, (1 + c) / 2) for c in HONEST_CORRELATORS]
            est = chsh_estimate(CorrelatorTable(n_same, [m - s for s in n_same]))
            s_hats.append(est.s_hat)
            ses.append(est.std_error)
        analytic = math.sqrt(2 / m)
        assert np.mean(ses) == pytest.approx(analytic, rel=0.10)
        assert np.std(s_hats, ddof=1) == pytest.approx(analytic, rel=0.10)


class TestTable:
    def test_json_round_trip(self):
        t = CorrelatorTable((1, 2, 3, 4), (5, 6, 7, 8))
        text = json.dumps(t.to_dict())
        assert json.loads(text) == {"n_same": [1, 2, 3, 4], "n_diff": [5, 6, 7, 8]}
        assert CorrelatorTable.from_dict(json.loads(text)) == t

    def test_merge_is_associative_and_commutative(self):
        a = CorrelatorTable((1, 2, 3, 4), (0, 0, 1, 1))
        b = CorrelatorTable((4, 0, 0, 1), (2, 2, 2, 2))
        c = CorrelatorTable((0, 9, 0, 0), (1, 0, 0, 3))
        assert (a + b) + c == a + (b + c)
        assert a + b == b + a

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            CorrelatorTable((1, -1, 0, 0), (0, 0, 0, 0))

    def test_from_rounds_ignores_a0(self):
        t = CorrelatorTable.from_rounds([0, 1, 1, 2, 2], [0, 0, 1, 0, 1], [1, 1, 1, -1, 1], [-1, 1, -1, -1, -1])
        assert t.n_same == (1, 0, 1, 0)
        assert t.n_diff == (0, 1, 0, 1)


class TestBinomial:
    def test_two_tosses(self):
        assert binomial_exact(2, 1) == 0.5

    def test_four_tosses_by_enumeration(self):
        seqs = list(itertools.product("HT", repeat=4))
        oracle = sum(1 for s in seqs if s.count("H") == 2) / len(seqs)
        assert oracle == 0.375
        assert binomial_exact(4, 2) == oracle

    @pytest.mark.parametrize("n", [1, 7, 30, 60])
    def test_all_heads(self, n):
        assert binomial_exact(n, n) == 2.0**-n

    @pytest.mark.parametrize("n", range(0, 21))
    def test_sums_to_one(self, n):
        assert math.fsum(binomial_exact(n, k) for k in range(n + 1)) == pytest.approx(1.0, abs=1e-12)

    def test_log_space_path_matches_exact_fraction(self):
        for n, k in ((3000, 1500), (5000, 2600), (10_000, 5_500)):
            exact = float(Fraction(math.comb(n, k), 2**n))
            assert binomial_exact(n, k) == pytest.approx(exact, rel=1e-9)

    def test_large_n(self):
        assert 0 < binomial_exact(10**6, 5 * 10**5) < 1e-3

    def test_domain(self):
        with pytest.raises(ValueError):
            binomial_exact(3, 4)
        with pytest.raises(ValueError):
            perfect_ratio_probability(5)
        with pytest.raises(ValueError):
            perfect_ratio_probability(0)

    def test_perfect_ratio(self):
        assert perfect_ratio_probability(2) == 0.5
        assert perfect_ratio_probability(4) == 0.375
        vals = [perfect_ratio_probability(n) for n in range(2, 1003, 2)]
        assert all(x > y for x, y in zip(vals, vals[1:]))

    def test_fluctuation_ratio(self):
        r = fluctuation_report([2, 4])["ratio"]
        oracle = float(Fraction(math.comb(10_000, 5_500), math.comb(10_000, 5_000)))
        assert r["ratio"] == pytest.approx(oracle, rel=1e-9)
        assert r["log_ratio"] == pytest.approx(
            log_binomial_probability(10_000, 5_500) - log_binomial_probability(10_000, 5_000)
        )
        assert -51 < r["log_ratio"] < -50


class TestPassProbability:
    def test_examples(self):
        assert pass_probability_normal(2.5, 0.03, 2.5) == 0.5
        assert pass_probability_normal(2.5 + 5 * 0.01, 0.01, 2.5) == pytest.approx(0.9999997, abs=1e-7)
        assert pass_probability_normal(2 * math.sqrt(2), 0.05, 2.5) > 1 - 1e-9

    def test_rejects_zero_error(self):
        with pytest.raises(ValueError):
            pass_probability_normal(2.5, 0.0, 2.5)

    @given(st.floats(2.0, 2.9), st.floats(2.0, 2.9), st.floats(0.001, 0.2), st.floats(0.0, 0.05))
    def test_monotone(self, s, s_min, se, delta):
        assert pass_probability_normal(s + delta, se, s_min) >= pass_probability_normal(s, se, s_min)
        assert pass_probability_normal(s, se, s_min + delta) <= pass_probability_normal(s, se, s_min)


class TestBiasTest:
    def test_exact_match_is_null(self):
        table = CorrelatorTable((75, 50, 60, 40), (25, 50, 40, 60))
        ref = tuple(correlator_estimate(s, d)[0] for s, d in zip(table.n_same, table.n_diff))
        detected, z = bias_test(table, ref, 5.0)
        assert not detected and z == (0.0, 0.0, 0.0, 0.0)

    def test_product_state_detected(self):
        table = _table_from_box(dd_product_box(1), 100_000, 4)
        detected, z = bias_test(table, HONEST_CORRELATORS, 5.0)
        assert detected
        assert z[1] < -50
        assert abs(z[0]) < 5 and abs(z[2]) < 5

    def test_honest_rarely_flagged(self):
        box = honest_box(bell_phi_plus())
        flagged = sum(bias_test(_table_from_box(box, 100_000, s), HONEST_CORRELATORS, 5.0)[0] for s in range(200))
        assert flagged == 0

    def test_bad_reference(self):
        with pytest.raises(ValueError):
            bias_test(CorrelatorTable((1,) * 4, (1,) * 4), (2, 0, 0, 0), 5.0)


def test_balance_test_sees_dd_pattern_but_not_local_mixture():
    rng = np.random.default_rng(0)
    m = 20_000

    def table(correlators):
        same = [rng.binomial(m, (1 + c) / 2) for c in correlators]
        return CorrelatorTable(same, [m - s for s in same])

    assert not balance_test(table((0.5, 0.5, 0.5, -0.5)), 5.0)[0]
    assert balance_test(table((0.707, 0.0, 0.707, 0.0)), 5.0)[0]


def test_policy_bounds():
    AcceptancePolicy(2.0)
    AcceptancePolicy(2 * math.sqrt(2))
    with pytest.raises(ValueError):
        AcceptancePolicy(1.9)
    with pytest.raises(ValueError):
        AcceptancePolicy(2.9)
