"""Numerical checks of the comparison-noise minimax identity.

Builds the worst-case monotone distortion of a score distribution that hides
sqrt(nu') of each class across the decision boundary, measures the induced
pairwise-comparison error and the best achievable threshold error on
equal-mass quantile grids, and verifies the combinatorial inequality that
links the two.  All integrals are discretized on quantile grids following a
Riemann construction, with a one-cell slop budget of 4/n per estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm


@dataclass(frozen=True)
class LemmaInstance:
    """Nonnegative sequences x, y with constraint sum_i sum_{j>=i} x_i y_j <= t."""

    xs: tuple[float, ...]
    ys: tuple[float, ...]
    t: float

    @property
    def n(self) -> int:
        return len(self.xs)


def make_lemma_instance(xs, ys, t: float | None = None) -> LemmaInstance:
    """Validate entries and default t to the achieved constraint value."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1 or xs.size == 0:
        raise ValueError("need two equal-length non-empty sequences")
    if (xs < 0).any() or (ys < 0).any():
        raise ValueError("entries must be nonnegative")
    # sum_i x_i * (y_i + ... + y_n) via a reversed cumulative sum
    tail = np.cumsum(ys[::-1])[::-1]
    achieved = float(np.dot(xs, tail))
    if t is None:
        t = achieved
    elif achieved > t + 1e-12 * max(1.0, abs(t)):
        raise ValueError(f"constraint violated: achieved {achieved:.6g} > t {t:.6g}")
    return LemmaInstance(xs=tuple(xs), ys=tuple(ys), t=t)


def lemma_min_f(instance: LemmaInstance) -> tuple[float, int]:
    """Exact minimum over k of x_1+...+x_k + y_{k+1}+...+y_n, with its argmin.

    Also asserts the bound min_k f(k) <= sqrt(2 n t / (n + 1)) + 1e-9; a
    violation would be a counterexample and raises immediately.
    """
    xs = np.asarray(instance.xs)
    ys = np.asarray(instance.ys)
    n = instance.n
    cx = np.concatenate(([0.0], np.cumsum(xs)))
    cy = np.concatenate(([0.0], np.cumsum(ys)))
    f = cx + (cy[-1] - cy)
    k = int(np.argmin(f))
    fmin = float(f[k])
    bound = math.sqrt(2.0 * n * instance.t / (n + 1.0))
    if fmin > bound + 1e-9:
        raise AssertionError(f"inequality violated: min f = {fmin:.12g} > bound {bound:.12g}")
    return fmin, k


def equality_instance(n: int, t: float = 1.0) -> LemmaInstance:
    """The tight configuration x_i = y_i = sqrt(2 t / (n (n + 1)))."""
    a = math.sqrt(2.0 * t / (n * (n + 1.0)))
    xs = np.full(n, a)
    return make_lemma_instance(xs, xs)


class ScoreDistribution:
    """Continuous score distribution with an invertible cdf.

    kind "uniform" is symmetric on [-half_width, half_width]; kind "gaussian"
    is standard normal.  The induced optimal label is the sign of the score.
    """

    def __init__(self, kind: str = "uniform", half_width: float = 0.5):
        if kind not in ("uniform", "gaussian"):
            raise ValueError(f"unknown score distribution {kind!r}")
        if kind == "uniform" and half_width <= 0:
            raise ValueError("half width must be positive")
        self.kind = kind
        self.half_width = half_width

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "uniform":
            return np.clip((t + self.half_width) / (2.0 * self.half_width), 0.0, 1.0)
        return norm.cdf(t)

    def ppf(self, q):
        q = np.asarray(q, dtype=float)
        if self.kind == "uniform":
            return q * 2.0 * self.half_width - self.half_width
        return norm.ppf(q)

    def quantile_grid(self, n: int) -> np.ndarray:
        """n equal-mass cell midpoints; never hits the boundary score 0 exactly
        for even n only -- an odd n is shifted to keep cells off the origin."""
        qs = (np.arange(n) + 0.5) / n
        return self.ppf(qs)


@dataclass
class GhatConstruction:
    """Piecewise-rescaled score map that folds sqrt(nu') of each class."""

    base: ScoreDistribution
    nu_prime: float
    a: float
    b: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.nu_prime == 0.0:
            return t
        root = math.sqrt(self.nu_prime)
        f = self.base.cdf(t)
        f0 = float(self.base.cdf(0.0))
        fa = float(self.base.cdf(self.a))
        span = self.b - self.a
        out = np.array(t, dtype=float, copy=True)
        neg = (t >= self.a) & (t <= 0.0)
        pos = (t > 0.0) & (t <= self.b)
        out[neg] = self.a + span * (f[neg] - fa) / root
        out[pos] = self.a + span * (f[pos] - f0) / root
        return out


def construct_ghat(base: ScoreDistribution, nu_prime: float) -> GhatConstruction:
    """Build the adversarial monotone distortion for a target comparison error.

    Requires both classes to carry mass at least sqrt(nu'); the interval
    [a, b] straddling zero holds exactly that much mass on each side.
    """
    if nu_prime < 0:
        raise ValueError("comparison error mass must be nonnegative")
    if nu_prime == 0.0:
        return GhatConstruction(base=base, nu_prime=0.0, a=0.0, b=0.0)
    root = math.sqrt(nu_prime)
    f0 = float(base.cdf(0.0))
    if min(f0, 1.0 - f0) < root:
        raise ValueError(
            f"class mass {min(f0, 1.0 - f0):.4g} below sqrt(nu') = {root:.4g}")
    a = float(base.ppf(f0 - root))
    b = float(base.ppf(f0 + root))
    return GhatConstruction(base=base, nu_prime=nu_prime, a=a, b=b)


def comparison_error_of(ghat, base: ScoreDistribution, n: int,
                        chunk: int = 4096) -> float:
    """Quantile-grid estimate of 2 P[ghat(X) > ghat(X'), h*(X) = -1, h*(X') = +1]."""
    if n < 2:
        raise ValueError("need at least two grid cells")
    grid = base.quantile_grid(n)
    vals = np.asarray(ghat(grid), dtype=float)
    neg_vals = vals[grid < 0]
    pos_vals = vals[grid >= 0]
    count = 0
    for start in range(0, neg_vals.size, chunk):
        block = neg_vals[start:start + chunk]
        count += int(np.sum(block[:, None] > pos_vals[None, :]))
    return 2.0 * count / (n * n)


def best_threshold_error(ghat, base: ScoreDistribution, n: int) -> tuple[float, float]:
    """Exact discrete minimum over thresholds of P[sign(ghat(X) - t) != h*(X)].

    Scans all n + 1 cuts between consecutive sorted ghat values on the
    quantile grid; returns (minimum error, a minimizing threshold).
    """
    if n < 2:
        raise ValueError("need at least two grid cells")
    grid = base.quantile_grid(n)
    vals = np.asarray(ghat(grid), dtype=float)
    labels = np.where(grid >= 0, 1, -1)
    order = np.argsort(vals, kind="stable")
    sorted_vals = vals[order]
    sorted_pos = (labels[order] > 0)
    # cut after position c: predictions -1 for ranks <= c, +1 above
    pos_prefix = np.concatenate(([0], np.cumsum(sorted_pos)))
    neg_prefix = np.concatenate(([0], np.cumsum(~sorted_pos)))
    total_neg = neg_prefix[-1]
    errors = (pos_prefix + (total_neg - neg_prefix)).astype(float)
    # a cut between tied values is not realizable by any real threshold
    if n > 1:
        tied = sorted_vals[:-1] >= sorted_vals[1:]
        errors[1:n][tied] = np.inf
    c = int(np.argmin(errors))
    err = float(errors[c]) / n
    if c == 0:
        thr = float(sorted_vals[0]) - 1.0
    elif c == n:
        thr = float(sorted_vals[-1]) + 1.0
    else:
        thr = 0.5 * (float(sorted_vals[c - 1]) + float(sorted_vals[c]))
    return err, thr
