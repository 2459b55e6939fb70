"""Batch labeling subroutine: sorting, grouping, search, and batch sizes."""

import math

import numpy as np
import pytest
from scipy.stats import binom

from adgac.core import (AdgacParams, DegenerateGroupingError, adgac,
                        group_binary_search, k_adv, k_tnc, noisy_quicksort,
                        partition_groups)
from adgac.oracles import (ComparisonNoiseSpec, LabelNoiseSpec, Oracle,
                           bayes_label, uniform_scenario)


def perfect_comparator(a, b):
    return 1 if a - b >= 0 else -1


class TestNoisyQuicksort:
    def test_singleton(self):
        order, comps = noisy_quicksort(np.array([3.0]), perfect_comparator,
                                       np.random.default_rng(0))
        assert list(order) == [0] and comps == 0

    def test_perfect_comparator_sorts(self):
        items = np.array([0.3, 0.1, 0.2])
        for seed in range(20):
            order, _ = noisy_quicksort(items, perfect_comparator,
                                       np.random.default_rng(seed))
            np.testing.assert_allclose(items[order], [0.1, 0.2, 0.3])

    def test_output_is_permutation(self):
        rng = np.random.default_rng(1)
        items = rng.random(200)
        order, comps = noisy_quicksort(items, perfect_comparator, rng)
        assert sorted(order) == list(range(200))
        assert comps > 0

    def test_mean_comparisons_within_classic_bound(self):
        m = 128
        rng = np.random.default_rng(2)
        items = rng.random(m)
        counts = []
        for seed in range(200):
            _, comps = noisy_quicksort(items, perfect_comparator,
                                       np.random.default_rng(seed))
            counts.append(comps)
        assert np.mean(counts) <= 2.0 * m * math.log(m)

    def test_argument_order_randomized(self):
        # a comparator answering +1 in both orientations: the effective
        # orientation of the pair must be a fair coin across seeds
        items = np.array([0.0, 1.0])
        wins_first = 0
        trials = 400
        for seed in range(trials):
            order, _ = noisy_quicksort(items, lambda a, b: 1,
                                       np.random.default_rng(seed))
            wins_first += order[0] == 0
        assert abs(wins_first / trials - 0.5) < 0.1


class TestPartitionGroups:
    def _params(self, n, m, eps):
        return AdgacParams(n=n, m=m, eps=eps, delta=0.1, k=1)

    def test_exact_division(self):
        groups = partition_groups(np.arange(100), self._params(1000, 100, 0.01))
        assert groups.n_groups == 10
        assert all(e - s == 10 for s, e in groups.bounds)

    def test_remainder_merged_into_last(self):
        groups = partition_groups(np.arange(103), self._params(1030, 103, 0.01))
        sizes = [e - s for s, e in groups.bounds]
        assert sizes == [10] * 9 + [13]

    def test_floor_at_one(self):
        # nominal group size 0.4 floors to single-point groups
        groups = partition_groups(np.arange(5), self._params(8, 5, 0.05))
        assert groups.n_groups == 5
        assert all(e - s == 1 for s, e in groups.bounds)

    def test_degenerate_configuration_rejected(self):
        with pytest.raises(DegenerateGroupingError):
            partition_groups(np.arange(10), self._params(4, 10, 0.1))


class TestGroupBinarySearch:
    def _groups(self, values, group_size):
        m = len(values)
        order = np.argsort(values)
        params = AdgacParams(n=2 * m, m=m, eps=group_size / (2 * m), delta=0.1, k=1)
        return partition_groups(order, params)

    def test_all_negative_lands_on_last_group_with_its_own_vote(self):
        values = np.linspace(0.0, 1.0, 64)
        groups = self._groups(values, 8)
        rng = np.random.default_rng(3)
        t, labels, votes, probes = group_binary_search(
            groups, values, lambda x: -1, 8, rng)
        assert t == groups.n_groups - 1
        assert votes[t] < 0  # that group's own majority is negative

    def test_boundary_on_group_edge_three_probes(self):
        # 8 groups of 8, first positive group is index 4: the bisection
        # probes groups 3, 5, 4 and stops
        values = np.linspace(0.005, 0.635, 64)
        groups = self._groups(values, 8)
        label = lambda x: 1 if x >= 0.32 else -1
        rng = np.random.default_rng(4)
        t, labels, votes, probes = group_binary_search(groups, values, label, 8, rng)
        assert groups.n_groups == 8
        assert t == 4
        assert probes == 3
        assert labels == 24

    def test_majority_failure_rate_matches_binomial_tail(self):
        # one group of 25 identical points whose labels flip at rate 0.3:
        # a wrong (positive) majority needs 13 of 25 flips
        values = np.full(25, 0.2)
        groups = self._groups(values, 25)
        exact_tail = binom.sf(12, 25, 0.3)
        rng = np.random.default_rng(5)
        fails = 0
        trials = 10_000
        for _ in range(trials):
            label = lambda x: 1 if rng.random() < 0.3 else -1
            t, _, votes, _ = group_binary_search(groups, values, label, 25, rng)
            fails += votes[t] >= 0
        se = math.sqrt(exact_tail * (1 - exact_tail) / trials)
        assert abs(fails / trials - exact_tail) <= 4 * se


class TestAdgac:
    def test_empty_input(self):
        spec = uniform_scenario()
        oracle = Oracle(spec, np.random.default_rng(6))
        result = adgac(np.empty(0), 100, 0.05, 0.1, oracle, oracle.rng, k=5)
        assert len(result.labels) == 0
        assert oracle.counters.snapshot() == (0, 0)

    def test_noiseless_mismatch_bound(self):
        spec = uniform_scenario(0.5)
        hits = 0
        for seed in range(100):
            oracle = Oracle(spec, np.random.default_rng(seed))
            xs = oracle.sample(1000)
            result = adgac(xs, 1000, 0.05, 0.1, oracle, oracle.rng, k=5)
            mismatches = int(np.sum(result.labels != bayes_label(spec, xs)))
            hits += mismatches <= 50
            assert result.label_queries <= 5 * math.ceil(math.log2(result.n_groups))
        assert hits >= 99

    def test_band_adversarial_mismatch_bound(self):
        spec = uniform_scenario(
            0.5, LabelNoiseSpec(kind="massart", beta=0.0),
            ComparisonNoiseSpec(kind="band-adversarial", nu_prime=1e-4))
        hits = 0
        for seed in range(100):
            oracle = Oracle(spec, np.random.default_rng(seed))
            xs = oracle.sample(1000)
            result = adgac(xs, 1000, 0.05, 0.1, oracle, oracle.rng, k=5)
            mismatches = int(np.sum(result.labels != bayes_label(spec, xs)))
            hits += mismatches <= 50
        assert hits >= 90

    def test_output_is_monotone_step_in_rank(self):
        spec = uniform_scenario(0.5, LabelNoiseSpec(kind="massart", beta=0.3))
        for seed in range(20):
            oracle = Oracle(spec, np.random.default_rng(seed))
            xs = oracle.sample(300)
            result = adgac(xs, 300, 0.1, 0.1, oracle, oracle.rng, k=7)
            ranked = result.labels[result.groups.order]
            changes = np.flatnonzero(ranked[1:] != ranked[:-1])
            assert changes.size <= 1
            if changes.size == 1:
                assert ranked[0] == -1 and ranked[-1] == 1

    def test_small_inputs_brute_force_bound(self):
        # perfect oracles, m = n <= 64: zero mismatches when the boundary
        # falls on a group edge, otherwise at most one group's worth
        spec = uniform_scenario(0.5)
        for seed in range(30):
            rng = np.random.default_rng(seed)
            oracle = Oracle(spec, rng)
            m = int(rng.integers(8, 65))
            xs = oracle.sample(m)
            eps = 0.125
            result = adgac(xs, m, eps, 0.1, oracle, oracle.rng, k=3)
            mismatches = int(np.sum(result.labels != bayes_label(spec, xs)))
            group_size = max(1, round(eps * m))
            sorted_truth = np.asarray(bayes_label(spec, xs))[np.argsort(xs)]
            n_neg = int(np.sum(sorted_truth == -1))
            if n_neg % group_size == 0:
                assert mismatches == 0
            else:
                assert mismatches <= 2 * group_size - 1  # last group may be larger

    def test_diagnostics_in_test_mode(self):
        spec = uniform_scenario(0.5)
        oracle = Oracle(spec, np.random.default_rng(7))
        xs = oracle.sample(200)
        result = adgac(xs, 200, 0.1, 0.1, oracle, oracle.rng, k=3,
                       truth_labeler=lambda x: bayes_label(spec, x))
        q = result.groups.group_minority_fractions
        mu = result.groups.group_majorities
        assert q is not None and mu is not None
        assert np.all((q >= 0) & (q <= 0.5))
        assert set(np.unique(mu)) <= {-1, 1}
        # the majority labels themselves form a monotone step
        changes = np.flatnonzero(mu[1:] != mu[:-1])
        assert changes.size <= 1


class TestBatchSizeFormulas:
    def test_kappa_one_collapses_to_adversarial_size(self):
        assert k_tnc(0.07, 0.2, 1.0, 2.5) == k_adv(0.07, 0.2, 2.5)

    def test_power_law_value(self):
        # C3 = 1, eps = 0.1, delta = 0.1, kappa = 1.5:
        # ceil(ln(ln 10 / 0.1) * 10) = ceil(31.366) = 32
        assert k_tnc(0.1, 0.1, 1.5, 1.0) == 32

    def test_adversarial_value(self):
        assert k_adv(0.1, 0.1, 1.0) == 4

    def test_at_least_one(self):
        assert k_adv(0.4, 0.9, 0.01) == 1

    @pytest.mark.parametrize("eps,delta,kappa,c3", [
        (0.0, 0.1, 1.5, 1.0), (0.6, 0.1, 1.5, 1.0), (0.1, 0.0, 1.5, 1.0),
        (0.1, 1.0, 1.5, 1.0), (0.1, 0.1, 0.5, 1.0), (0.1, 0.1, 1.5, 0.0),
    ])
    def test_domain_rejections(self, eps, delta, kappa, c3):
        with pytest.raises(ValueError):
            k_tnc(eps, delta, kappa, c3)
