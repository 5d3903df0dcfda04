import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from d2dcache.model import Instance
from d2dcache.prob import (CountDistribution, expected_min, min_count_dist, pr_count,
                           segment_count_dist)

from helpers import random_instance, random_placement


class TestPrCount:
    @pytest.mark.parametrize("mu", [0.0, 0.3, 4.0])
    def test_zero_count(self, mu):
        assert pr_count(mu, 1.0, 1, 0) == pytest.approx(math.exp(-mu), rel=1e-15)

    def test_off_lattice(self):
        assert pr_count(1.0, 1.0, 2, 3) == 0.0

    def test_batch_lattice(self):
        # B*M = 4 means M = 2
        assert pr_count(0.7, 2.0, 2, 4) == pytest.approx(stats.poisson.pmf(2, 1.4), rel=1e-13)

    def test_monte_carlo(self):
        n = 10**6
        draws = np.random.default_rng(1).poisson(0.5, size=n)
        freq = np.mean(draws == 2)
        p = pr_count(0.5, 1.0, 1, 2)
        assert abs(freq - p) < 3 * math.sqrt(p * (1 - p) / n)

    def test_large_count_no_overflow(self):
        assert pr_count(1.0, 300.0, 1, 300) == pytest.approx(stats.poisson.pmf(300, 300), rel=1e-11)


class TestMinCountDist:
    def test_zero_cap(self):
        d = min_count_dist(2.0, 1.0, 1, 0)
        assert d.pmf.tolist() == [1.0]

    def test_no_contacts(self):
        d = min_count_dist(0.0, 5.0, 2, 3)
        assert d.pmf.tolist() == [1.0, 0.0, 0.0, 0.0]

    def test_tail_closed_form(self):
        d = min_count_dist(1.0, 1.0, 1, 3)
        assert d.pmf[3] == pytest.approx(1 - math.exp(-1) * (1 + 1 + 0.5), rel=1e-14)

    def test_tail_monte_carlo(self):
        n = 10**6
        m = np.minimum(np.random.default_rng(2).poisson(1.0, size=n), 3)
        d = min_count_dist(1.0, 1.0, 1, 3)
        for k in range(4):
            p = d.pmf[k]
            assert abs(np.mean(m == k) - p) < 4 * math.sqrt(p * (1 - p) / n)

    def test_batch_support(self):
        d = min_count_dist(0.8, 1.0, 2, 5)
        assert d.pmf[1] == d.pmf[3] == 0.0
        assert d.pmf[5] == pytest.approx(stats.poisson.sf(2, 0.8), rel=1e-13)

    def test_tiny_tail_is_not_cancelled(self):
        # 1 - cdf would round to zero; the complement is computed directly
        d = min_count_dist(0.01, 1.0, 1, 8)
        assert d.pmf[8] == pytest.approx(stats.poisson.sf(7, 0.01), rel=1e-10)
        assert d.pmf[8] > 0


class TestExpectedMin:
    def test_zero_level(self):
        assert expected_min(3.0, 1.0, 1, 0) == 0.0

    def test_saturates(self):
        assert expected_min(1e3, 1.0, 1, 4) == pytest.approx(4.0, abs=1e-12)

    def test_monte_carlo(self):
        n = 10**6
        m = np.minimum(np.random.default_rng(3).poisson(1.0, size=n), 2)
        v = expected_min(1.0, 1.0, 1, 2)
        assert abs(m.mean() - v) < 3 * m.std() / math.sqrt(n)
        # closed form: P(1) + 2 P(M >= 2)
        assert v == pytest.approx(math.exp(-1) + 2 * (1 - 2 * math.exp(-1)), rel=1e-14)

    @settings(max_examples=200, deadline=None)
    @given(lam=st.floats(0, 50), T=st.floats(0, 20), B=st.integers(1, 4), k=st.integers(0, 12))
    def test_agrees_with_distribution_mean(self, lam, T, B, k):
        d = min_count_dist(lam, T, B, k)
        assert abs(expected_min(lam, T, B, k) - d.mean()) <= 1e-12 * max(1, k)
        assert abs(d.total() - 1) <= 1e-9


def brute_segment_pmf(inst: Instance, x, f, i, cap):
    """Joint enumeration over the other users' independent min-counts."""
    others = [j for j in range(inst.U) if j != i]
    supports = []
    for j in others:
        mu = inst.lam[i, j] * inst.T_D
        levels = {}
        for t in range(0, int(x[f, j]) + 1):
            if t < x[f, j]:
                p = stats.poisson.pmf(t // inst.B, mu) if t % inst.B == 0 else 0.0
            else:
                p = stats.poisson.sf(math.ceil(t / inst.B) - 1, mu)
            levels[t] = p
        supports.append(list(levels.items()))
    out = np.zeros(cap + 1)
    for combo in itertools.product(*supports):
        s = int(x[f, i]) + sum(t for t, _ in combo)
        out[min(s, cap)] += math.prod(p for _, p in combo)
    return out


class TestSegmentCountDist:
    def test_single_user(self):
        inst = Instance(C=[3], s_rec=[2], s_max=[4], P=[[1.0]], lam=[[0.0]])
        d = segment_count_dist(inst, np.array([[2]]), 0, 0)
        assert d.pmf.tolist() == [0.0, 0.0, 1.0]

    def test_no_contacts(self):
        inst = Instance(C=[2, 2], s_rec=[3], s_max=[6], P=[[1.0, 1.0]], lam=np.zeros((2, 2)))
        d = segment_count_dist(inst, np.array([[1, 2]]), 0, 0)
        assert d.pmf.tolist() == [0.0, 1.0, 0.0, 0.0]

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_joint_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        inst = random_instance(rng, U=3, F=2, C=3, s_star=3)
        x = random_placement(inst, rng)
        for f in range(inst.F):
            for i in range(inst.U):
                d = segment_count_dist(inst, x, f, i)
                ref = brute_segment_pmf(inst, x, f, i, int(inst.s_rec[f]))
                assert np.allclose(d.pmf, ref, atol=1e-13)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 10**6))
    def test_invariants(self, seed):
        rng = np.random.default_rng(seed)
        inst = random_instance(rng, U=int(rng.integers(2, 6)), s_star=3)
        x = random_placement(inst, rng)
        f, i = int(rng.integers(inst.F)), int(rng.integers(inst.U))
        d = segment_count_dist(inst, x, f, i)
        assert abs(d.total() - 1) <= 1e-9
        assert d.tail_absorbed
        assert d.pmf[-1] == pytest.approx(1 - d.pmf[:-1].sum(), abs=1e-12)
        order = [int(j) for j in rng.permutation(inst.U)]
        d2 = segment_count_dist(inst, x, f, i, order=order)
        assert np.allclose(d.pmf, d2.pmf, rtol=0, atol=1e-12)


def test_count_distribution_clamps_negative_mass():
    d = CountDistribution(2, [-1e-13, 0.5, 0.5])
    assert d.pmf[0] == 0.0
    with pytest.raises(ValueError):
        CountDistribution(2, [1.0])
