import csv
import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cosched.csi import (
    MutingIndicatorSet,
    RateMapper,
    canonical_subsets,
    enumerate_scenarios,
    generate_reports,
    lookup_rate_rho,
    map_rate,
    mask_of,
    scenario_sinr,
    sinr_under_scenario,
)
from cosched.network import NetworkScenario, associate_ues, strongest_interferers
from oracles import random_instance


def table_instance(num_prb=2):
    # UE served by BS 3; BSs 0 and 1 are its two strongest interferers
    p = np.array([[9.0, 5.0, 1.0, 100.0]])[:, :, None] * np.linspace(1.0, 2.0, num_prb)
    sc = NetworkScenario(gain=p, tx_power=np.ones(4), noise_power=0.5)
    conn = associate_ues(sc)
    inter = strongest_interferers(sc, conn, 2)
    return sc, conn, inter


class TestScenarioEnumeration:
    def test_no_interferers(self):
        assert canonical_subsets([]) == [()]

    def test_table_order_and_patterns(self):
        sc, conn, inter = table_instance()
        assert inter.of(0) == (0, 1)
        scen = enumerate_scenarios(inter, 0)
        assert [s.members for s in scen] == [(), (0, 1), (0,), (1,)]
        pats = [s.pattern(4).tolist() for s in scen]
        assert pats == [[0, 0, 0, 0], [1, 1, 0, 0], [1, 0, 0, 0], [0, 1, 0, 0]]
        assert [s.scenario_id for s in scen] == [0, 1, 2, 3]

    def test_three_interferers_power_set(self):
        subs = canonical_subsets([4, 1, 7])
        assert len(subs) == 8
        oracle = {frozenset(c) for k in range(4) for c in itertools.combinations([1, 4, 7], k)}
        assert {frozenset(s) for s in subs} == oracle
        assert subs[:2] == [(), (1, 4, 7)]

    @given(st.sets(st.integers(0, 12), max_size=6))
    def test_distinct_full_power_set(self, members):
        subs = canonical_subsets(sorted(members))
        assert len(subs) == 2 ** len(members)
        assert len({mask_of(s) for s in subs}) == len(subs)
        sizes = [len(s) for s in subs[2:]]
        assert sizes == sorted(sizes)


class TestSinr:
    def two_bs(self):
        sc = NetworkScenario(gain=[[[4.0], [1.0]]], tx_power=[1.0, 1.0], noise_power=1.0)
        conn = associate_ues(sc)
        return sc, conn, strongest_interferers(sc, conn, 1)

    def test_hand_values(self):
        sc, conn, inter = self.two_bs()
        none = MutingIndicatorSet(0, 0, ())
        muted = MutingIndicatorSet(0, 1, (1,))
        assert sinr_under_scenario(sc, conn, inter, 0, 0, none) == 2.0
        assert sinr_under_scenario(sc, conn, inter, 0, 0, muted) == 4.0
        assert scenario_sinr(sc, conn, inter)[0, 0].tolist() == [2.0, 4.0]

    def test_interference_free_limit(self):
        sc, conn, inter = table_instance(1)
        full = strongest_interferers(sc, conn, 3)
        s = scenario_sinr(sc, conn, full)
        assert s[0, 0, 1] == pytest.approx(100.0 / 0.5)

    def test_vectorised_matches_scalar(self):
        rng = np.random.default_rng(5)
        sc, conn, inter, _, _ = random_instance(rng, 4, m_prime=2, num_prb=3, oc=True)
        vec = scenario_sinr(sc, conn, inter)
        for n in range(sc.num_ue):
            for ind in enumerate_scenarios(inter, n):
                for l in range(3):
                    ref = sinr_under_scenario(sc, conn, inter, n, l, ind)
                    assert vec[n, l, ind.scenario_id] == pytest.approx(ref, rel=1e-12)

    @given(st.integers(0, 2**31 - 1), st.integers(2, 5))
    def test_inclusion_monotone(self, seed, m):
        rng = np.random.default_rng(seed)
        sc, conn, inter, reports, _ = random_instance(rng, m, num_prb=2)
        s = scenario_sinr(sc, conn, inter)
        for n in range(sc.num_ue):
            masks = reports.masks[n]
            for i, j in itertools.permutations(range(len(masks)), 2):
                a, b = int(masks[i]), int(masks[j])
                if a & b == a and a != b:
                    assert (s[n, :, i] < s[n, :, j]).all()
                    assert (reports.rates[n, :, i] <= reports.rates[n, :, j]).all()


class TestRateMapping:
    def test_values(self):
        assert map_rate(RateMapper(), 0.0) == 0.0
        assert map_rate(RateMapper(), 3.0) == 2.0
        assert map_rate(RateMapper(cap=5.4), 1e6) == 5.4
        assert RateMapper(scale=2.0)(3.0) == 4.0

    def test_domain(self):
        with pytest.raises(ValueError):
            map_rate(RateMapper(), -0.1)
        with pytest.raises(ValueError):
            map_rate(RateMapper(), float("nan"))

    @given(st.lists(st.floats(0, 1e9), min_size=2, max_size=20))
    def test_non_decreasing_and_bounded(self, xs):
        xs = np.sort(np.array(xs))
        r = map_rate(RateMapper(cap=5.4), xs)
        assert (np.diff(r) >= 0).all() and (r >= 0).all() and (r <= 5.4).all()


class TestReports:
    def test_count_and_table_rows(self):
        sc, conn, inter = table_instance()
        rep = generate_reports(sc, conn, inter, RateMapper())
        assert len(rep) == sc.num_ue * sc.num_prb * 4
        assert len(list(rep)) == len(rep)
        rows = [r for r in rep if r.prb == 0]
        assert [r.indicator.members for r in rows] == [(), (0, 1), (0,), (1,)]
        expect = [100 / (15 + 0.5), 100 / (1 + 0.5), 100 / (6 + 0.5), 100 / (10 + 0.5)]
        for r, s in zip(rows, expect):
            assert r.rate == pytest.approx(np.log2(1 + s))

    def test_no_strong_interferers(self):
        sc, conn, _ = table_instance()
        rep = generate_reports(sc, conn, strongest_interferers(sc, conn, 0), RateMapper())
        assert rep.rates.shape == (1, 2, 1)
        assert rep.rates[0, 0, 0] == pytest.approx(np.log2(1 + 100 / 15.5))

    def test_rho_table(self):
        sc, conn, inter = table_instance()
        rep = generate_reports(sc, conn, inter, RateMapper())
        r = rep.rates[0, 1]
        # columns restricted to the two strongest interferers (BS 0, BS 1)
        assert lookup_rate_rho(rep, 0, 1, [0, 0, 0, 0]) == r[0]
        assert lookup_rate_rho(rep, 0, 1, [0, 1, 0, 0]) == r[3]
        assert lookup_rate_rho(rep, 0, 1, [1, 0, 0, 0]) == r[2]
        assert lookup_rate_rho(rep, 0, 1, [1, 1, 0, 0]) == r[1]
        # a muted BS outside the set changes nothing
        assert lookup_rate_rho(rep, 0, 1, [0, 0, 1, 0]) == r[0]
        assert lookup_rate_rho(rep, 0, 1, 0b0100) == r[0]

    def test_rho_four_values_over_all_columns(self):
        sc, conn, inter = table_instance()
        rep = generate_reports(sc, conn, inter, RateMapper())
        vals = {lookup_rate_rho(rep, 0, 0, a) for a in range(16)}
        assert len(vals) == 4

    @given(st.integers(0, 2**31 - 1))
    def test_rho_consistency(self, seed):
        rng = np.random.default_rng(seed)
        sc, conn, inter, rep, _ = random_instance(rng, 4, m_prime=2, num_prb=2)
        for n in range(sc.num_ue):
            for ind in enumerate_scenarios(inter, n):
                for l in range(2):
                    assert lookup_rate_rho(rep, n, l, ind.pattern(4)) == rep.rates[n, l, ind.scenario_id]
            for alpha in range(16):
                j = rep.scenario_under_column(alpha)[n]
                assert rep.rates[n, 0, j] == lookup_rate_rho(rep, n, 0, alpha)

    def test_csv(self, tmp_path):
        sc, conn, inter = table_instance()
        rep = generate_reports(sc, conn, inter, RateMapper())
        path = tmp_path / "r.csv"
        rep.to_csv(path)
        rows = list(csv.DictReader(open(path)))
        assert len(rows) == len(rep)
        assert rows[1]["indicator_bitmask"] == "3"
        assert float(rows[1]["rate"]) == rep.rates[0, 0, 1]
