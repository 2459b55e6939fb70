"""Hinge machinery, the geometric schedule, and the banded learner."""

import math

import numpy as np
import pytest
from scipy.stats import norm

from adgac.margin import (EmptyBandError, MarginParams, MarginSchedule,
                          band_membership, fit_initial_direction, hinge_loss,
                          hinge_loss_batch, hinge_subgradient, minimize_hinge,
                          project_to_feasible, run_margin_adgac)
from adgac.oracles import LabelNoiseSpec, gaussian_scenario, sample_unlabeled


def hinge_grid_minimum(xs, ys, w_prev, radius, tau, angle_step=1e-3, n_radii=96):
    """Dense polar grid search over the feasible set (d = 2 oracle)."""
    angles = np.arange(0.0, 2 * math.pi, angle_step)
    radii = np.linspace(0.05, 1.0, n_radii)
    best = np.inf
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    for rho in radii:
        cand = rho * dirs
        feasible = np.linalg.norm(cand - w_prev, axis=1) <= radius
        if not feasible.any():
            continue
        margins = 1.0 - (ys[None, :] * (cand[feasible] @ xs.T)) / tau
        losses = np.maximum(margins, 0.0).mean(axis=1)
        best = min(best, float(losses.min()))
    return best


def rotate(w, angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([c * w[0] - s * w[1], s * w[0] + c * w[1]])


class TestHingeLoss:
    def test_flat_region(self):
        assert hinge_loss(np.array([1.0, 0.0]), np.array([2.0, 0.0]), 1, tau=1.0) == 0.0

    def test_boundary_point_loses_one(self):
        w = np.array([1.0, 0.0])
        x = np.array([0.0, 3.0])
        assert hinge_loss(w, x, 1, tau=0.5) == 1.0
        assert hinge_loss(w, x, -1, tau=2.0) == 1.0

    def test_direct_value(self):
        assert hinge_loss(np.array([1.0, 0.0]), np.array([0.5, 0.0]), -1, tau=1.0) == 1.5

    def test_batch_is_mean(self):
        xs = np.array([[0.5, 0.0], [2.0, 0.0]])
        ys = np.array([-1, 1])
        w = np.array([1.0, 0.0])
        assert hinge_loss_batch(w, xs, ys, 1.0) == pytest.approx((1.5 + 0.0) / 2)

    def test_nonpositive_tau_rejected(self):
        with pytest.raises(ValueError):
            hinge_loss(np.array([1.0]), np.array([1.0]), 1, tau=0.0)

    def test_dominates_zero_one_loss(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            xs = rng.standard_normal((50, 3))
            ys = rng.choice([-1, 1], 50)
            w = rng.standard_normal(3)
            w /= np.linalg.norm(w)
            tau = rng.uniform(0.05, 1.0)
            zero_one = np.mean(np.where(xs @ w >= 0, 1, -1) != ys)
            assert hinge_loss_batch(w, xs, ys, tau) >= zero_one - 1e-12


class TestHingeSubgradient:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        checked = 0
        while checked < 100:
            d = int(rng.integers(2, 5))
            xs = rng.standard_normal((30, d))
            ys = rng.choice([-1, 1], 30)
            w = rng.standard_normal(d)
            w /= np.linalg.norm(w)
            tau = rng.uniform(0.1, 1.0)
            # skip batches with any point near the hinge kink
            if np.min(np.abs(1.0 - ys * (xs @ w) / tau)) <= 1e-4:
                continue
            g = hinge_subgradient(w, xs, ys, tau)
            h = 1e-6
            fd = np.empty(d)
            for j in range(d):
                e = np.zeros(d)
                e[j] = h
                fd[j] = (hinge_loss_batch(w + e, xs, ys, tau)
                         - hinge_loss_batch(w - e, xs, ys, tau)) / (2 * h)
            scale = max(np.linalg.norm(fd), 1e-12)
            assert np.linalg.norm(g - fd) / scale < 1e-4
            checked += 1


class TestProjection:
    def test_point_inside_unchanged(self):
        v = np.array([0.3, 0.1])
        out = project_to_feasible(v.copy(), np.array([0.5, 0.0]), 0.5)
        np.testing.assert_allclose(out, v)

    def test_lands_in_intersection(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            d = int(rng.integers(2, 6))
            center = rng.standard_normal(d)
            center /= np.linalg.norm(center)
            radius = rng.uniform(0.1, 1.5)
            v = rng.standard_normal(d) * 3
            out = project_to_feasible(v, center, radius)
            assert np.linalg.norm(out - center) <= radius + 1e-9
            assert np.linalg.norm(out) <= 1.0 + 1e-9


class TestMinimizeHinge:
    def test_zero_loss_fixed_point(self):
        rng = np.random.default_rng(3)
        w = np.array([1.0, 0.0])
        xs = rng.standard_normal((100, 2))
        tau = 0.2
        keep = np.abs(xs @ w) >= tau
        xs = xs[keep]
        ys = np.where(xs @ w >= 0, 1, -1)
        fit = minimize_hinge(xs, ys, w, radius=0.5, tau=tau)
        assert fit.loss == 0.0
        assert hinge_loss_batch(fit.v, xs, ys, tau) == 0.0

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_quality_against_grid_oracle(self, seed):
        rng = np.random.default_rng(seed)
        w_star = np.array([1.0, 0.0])
        w_prev = rotate(w_star, rng.uniform(-0.4, 0.4))
        xs = rng.standard_normal((200, 2))
        ys = np.where(xs @ w_star >= 0, 1, -1)
        flips = rng.random(200) < 0.05
        ys[flips] = -ys[flips]
        tau = rng.uniform(0.2, 0.8)
        radius = rng.uniform(0.4, 1.0)
        fit = minimize_hinge(xs, ys, w_prev, radius, tau)
        grid_min = hinge_grid_minimum(xs, ys, w_prev, radius, tau)
        kappa_prec = MarginSchedule(MarginParams(eps=0.1, delta=0.2), d=2).kappa_prec
        assert fit.loss <= grid_min + kappa_prec / 8.0

    def test_whole_ball_matches_unconstrained_then_normalized(self):
        rng = np.random.default_rng(4)
        w_star = np.array([0.6, 0.8])
        xs = rng.standard_normal((150, 2))
        ys = np.where(xs @ w_star >= 0, 1, -1)
        tau = 0.3
        start = np.array([1.0, 0.0])
        fit = minimize_hinge(xs, ys, start, radius=2.0, tau=tau)
        # second optimizer: plain subgradient descent, then pull back to the ball
        v = start.copy()
        for t in range(1, 2001):
            g = hinge_subgradient(v, xs, ys, tau)
            if not g.any():
                break
            v = v - (0.5 / math.sqrt(t)) * g
        v = v / max(1.0, np.linalg.norm(v))
        oracle_loss = hinge_loss_batch(v, xs, ys, tau)
        assert fit.loss <= oracle_loss + 1e-3

    def test_degraded_flag_on_stalled_budget(self):
        # contradictory labels at a single point: the loss floor is 1 and no
        # step can improve it, so a tiny budget with a short window flags
        xs = np.array([[1.0, 0.0], [1.0, 0.0]])
        ys = np.array([1, -1])
        fit = minimize_hinge(xs, ys, np.array([1.0, 0.0]), radius=0.5, tau=0.5,
                             max_iters=50, patience=5)
        assert fit.degraded
        assert fit.loss >= 1.0 - 1e-9


class TestSchedule:
    def _schedule(self):
        return MarginSchedule(MarginParams(eps=0.1, delta=0.2), d=2)

    def test_growth_constant(self):
        sched = self._schedule()
        assert sched.M == pytest.approx(max(2.0 / (0.28 * math.pi), 2.0))
        assert sched.kappa_prec == pytest.approx(1.0 / (4.0 * sched.M))

    def test_identities_every_round(self):
        sched = self._schedule()
        for k in range(0, sched.rounds + 1):
            assert sched.z2(k) == pytest.approx(sched.r(k) ** 2 + sched.b(k - 1) ** 2)
            expected = (1.0 * sched.tau(k) ** 2 * sched.b(k) * sched.kappa_prec ** 2
                        / (256.0 * 2.0 * sched.z2(k)))
            assert sched.eps_k(k) == pytest.approx(expected)
            assert sched.b(k) > 0 and sched.r(k) > 0 and sched.tau(k) > 0
            assert sched.eps_k(k) > 0

    def test_geometric_decay(self):
        sched = self._schedule()
        for k in range(1, sched.rounds):
            assert sched.b(k + 1) == pytest.approx(sched.b(k) / sched.M)
            assert sched.r(k + 1) <= sched.r(k)

    def test_round_count(self):
        sched = self._schedule()
        assert sched.rounds == math.ceil(math.log2(4.0 / 0.1))


class TestBandMembership:
    def test_zero_width_band(self):
        rng = np.random.default_rng(5)
        xs = rng.standard_normal((1000, 2))
        w = np.array([1.0, 0.0])
        assert band_membership(w, xs, 0.0).sum() == 0

    def test_boundary_inclusive(self):
        w = np.array([1.0, 0.0])
        assert band_membership(w, 0.3 * w, 0.3)

    def test_gaussian_band_mass(self):
        spec = gaussian_scenario([1.0])
        xs = sample_unlabeled(spec, 200_000, np.random.default_rng(6))
        b = 0.25
        est = np.mean(np.abs(xs) <= b)
        target = 2 * norm.cdf(b) - 1
        se = math.sqrt(target * (1 - target) / xs.size)
        assert abs(est - target) <= 3 * se


class TestRunMargin:
    def test_noiseless_small_battery(self):
        params = MarginParams(eps=0.1, delta=0.2)
        hits = 0
        for seed in range(10):
            w_star = np.array([math.cos(seed), math.sin(seed)])
            spec = gaussian_scenario(w_star, seed=seed)
            res = run_margin_adgac(spec, params, w_star=w_star)
            angle = math.acos(float(np.clip(res.w_hat @ w_star, -1, 1)))
            hits += (angle / math.pi) <= 0.1
            assert abs(np.linalg.norm(res.w_hat) - 1.0) <= 1e-12
        assert hits >= 9

    def test_truth_start_stays_close(self):
        w_star = np.array([1.0, 0.0])
        params = MarginParams(eps=0.1, delta=0.2)
        spec = gaussian_scenario(w_star, seed=21)
        res = run_margin_adgac(spec, params, w0=w_star, w_star=w_star)
        sched = res.schedule
        for k, w_k in enumerate(res.iterates[1:], start=1):
            angle = math.acos(float(np.clip(w_k @ w_star, -1, 1)))
            assert angle <= sched.r(k) + 0.05
        final = math.acos(float(np.clip(res.w_hat @ w_star, -1, 1)))
        assert final / math.pi <= 0.1

    def test_empty_band_raises_advice(self):
        w_star = np.array([1.0, 0.0])
        spec = gaussian_scenario(w_star, seed=2)
        params = MarginParams(eps=0.1, delta=0.2, n_mult=1e-9, min_round_samples=2)
        with pytest.raises(EmptyBandError):
            run_margin_adgac(spec, params, w0=w_star)

    def test_requires_gaussian_scenario(self):
        from adgac.oracles import uniform_scenario
        with pytest.raises(ValueError):
            run_margin_adgac(uniform_scenario(), MarginParams(eps=0.1, delta=0.2))

    def test_bad_initial_direction_flagged_not_dropped(self):
        w_star = np.array([1.0, 0.0])
        spec = gaussian_scenario(w_star, seed=8)
        params = MarginParams(eps=0.2, delta=0.2)
        res = run_margin_adgac(spec, params, w0=-w_star, w_star=w_star)
        assert "w0-angle" in res.flags
        assert res.rounds_run == res.schedule.rounds  # the run still completed

    def test_initial_direction_from_seed_batch(self):
        rng = np.random.default_rng(7)
        w_star = np.array([0.0, 1.0])
        xs = rng.standard_normal((32, 2))
        ys = np.where(xs @ w_star >= 0, 1, -1)
        w0 = fit_initial_direction(xs, ys)
        assert np.linalg.norm(w0) == pytest.approx(1.0)
        assert math.acos(float(np.clip(w0 @ w_star, -1, 1))) < math.pi / 2

    def test_massart_run_completes_with_accounting(self):
        w_star = np.array([1.0, 0.0, 0.0])
        spec = gaussian_scenario(w_star, LabelNoiseSpec(kind="massart", beta=0.2), seed=4)
        params = MarginParams(eps=0.1, delta=0.2)
        res = run_margin_adgac(spec, params, w_star=w_star)
        # total = seed batch + round 0 (not traced) + traced rounds
        assert res.labels >= params.seed_batch + sum(t.labels for t in res.trace)
        assert res.comparisons >= sum(t.comparisons for t in res.trace)
        assert len(res.trace) == res.rounds_run
