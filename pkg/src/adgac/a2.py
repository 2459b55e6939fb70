"""Disagreement-based active learning over a finite class.

Both learners share one round loop: sample unlabeled data, keep the part
inside the current disagreement region, obtain labels, and filter the version
space by weighted empirical error.  The comparison-assisted variant labels
each round's batch with the ADGAC subroutine; the label-only baseline queries
the labeling oracle directly for every retained instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import core
from .hypotheses import LabeledDataset, ThresholdClass, VersionSpace
from .oracles import Oracle, TSYBAKOV


def _is_monotone_step(xs, ys) -> bool:
    """True when labels sorted by instance value change sign at most once, -1 to +1."""
    order = np.argsort(np.asarray(xs, dtype=float))
    sorted_ys = np.asarray(ys)[order]
    changes = np.flatnonzero(sorted_ys[1:] != sorted_ys[:-1])
    if changes.size == 0:
        return True
    return changes.size == 1 and sorted_ys[0] == -1


class BudgetExceededError(RuntimeError):
    """A round needs more samples or queries than the configured cap."""


@dataclass(frozen=True)
class RunParams:
    """Target error, failure probability, constants, and budget caps."""

    eps: float
    delta: float
    c0: float = 1.0
    c3: float = 5.0
    n_mult: float = 1.0
    tnc_mult: float = 1.0
    max_round_samples: int = 2_000_000
    max_labels: int = 10_000_000
    max_comparisons: int = 100_000_000
    early_exit_singleton: bool = True

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0 or not 0.0 < self.delta < 1.0:
            raise ValueError("eps and delta must lie in (0, 1)")


@dataclass
class RoundTrace:
    round: int
    eps_i: float
    n_i: int
    subset_size: int
    labels: int
    comparisons: int
    survivors: int


@dataclass
class RunResult:
    hypothesis_index: int
    labels: int
    comparisons: int
    rounds_run: int
    trace: list[RoundTrace] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)


def vc_bound_u(n: float, gamma: float, d: float, c0: float = 1.0) -> float:
    """Uniform deviation bound c0 * (d log(n/d) + log(1/gamma)) / n."""
    if d < 1 or n < d:
        raise ValueError("need n >= d >= 1")
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    if c0 <= 0:
        raise ValueError("c0 must be positive")
    return c0 * (d * math.log(n / d) + math.log(1.0 / gamma)) / n


_smallest_n_cache: dict[tuple, int] = {}


def _smallest_n_for_bound(eps_i: float, gamma: float, d: float, c0: float, cap: int) -> int:
    """Smallest integer n >= d with vc_bound_u(n, gamma, d, c0) <= eps_i."""
    key = (eps_i, gamma, d, c0)
    if key in _smallest_n_cache:
        n = _smallest_n_cache[key]
        if n > cap:
            raise BudgetExceededError(f"round needs n={n} > cap {cap}")
        return n
    start = int(math.ceil(d))
    lo = start
    block = 1024
    while lo <= cap:
        hi = min(lo + block, cap + 1)
        ns = np.arange(lo, hi, dtype=float)
        vals = c0 * (d * np.log(ns / d) + math.log(1.0 / gamma)) / ns
        ok = np.flatnonzero(vals <= eps_i)
        if ok.size:
            n = int(ns[ok[0]])
            _smallest_n_cache[key] = n
            return n
        lo = hi
        block *= 4
    raise BudgetExceededError(f"no n <= {cap} meets the deviation bound at eps_i={eps_i:.4g}")


def choose_n_i(i: int, eps: float, d: float, delta: float, params: RunParams,
               kappa: float = 1.0) -> int:
    """Per-round unlabeled sample size.

    Smallest n meeting the deviation bound at eps_i = 2^-(i+2) with the
    per-round failure share, then max with the constant-scaled
    (1/eps_i)^(2 kappa - 1) log(1/delta) term, capped by the budget.
    """
    if i < 1:
        raise ValueError("rounds are 1-indexed")
    eps_i = 2.0 ** -(i + 2)
    gamma = delta / (4.0 * math.log2(1.0 / eps))
    n_u = _smallest_n_for_bound(eps_i, gamma, d, params.c0, params.max_round_samples)
    term = params.tnc_mult * (1.0 / eps_i) ** (2.0 * kappa - 1.0) * math.log(1.0 / delta)
    n = int(math.ceil(params.n_mult * max(n_u, term)))
    if n > params.max_round_samples:
        raise BudgetExceededError(f"round {i} needs n={n} > cap {params.max_round_samples}")
    return n


def _round_count(eps: float) -> int:
    return max(1, math.ceil(math.log2(1.0 / eps)))


def _noise_kappa(spec) -> float:
    noise = spec.label_noise
    if noise.kind == TSYBAKOV and noise.kappa > 1.0:
        return noise.kappa
    return 1.0


def run_a2_adgac(spec, klass, params: RunParams,
                 rng: np.random.Generator | None = None,
                 oracle: Oracle | None = None) -> RunResult:
    """Comparison-assisted disagreement learner; returns the first survivor."""
    return _run_rounds(spec, klass, params, use_comparisons=True, rng=rng, oracle=oracle)


def run_baseline_a2(spec, klass, params: RunParams,
                    rng: np.random.Generator | None = None,
                    oracle: Oracle | None = None) -> RunResult:
    """Label-only baseline: every retained instance is labeled directly.

    Filtering uses the excess-error form (count above the round's best
    hypothesis), which reduces to the absolute rule on clean labels but keeps
    the optimum alive when the direct labels themselves are noisy.
    """
    return _run_rounds(spec, klass, params, use_comparisons=False, rng=rng, oracle=oracle)


def _run_rounds(spec, klass, params: RunParams, use_comparisons: bool,
                rng: np.random.Generator | None, oracle: Oracle | None) -> RunResult:
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    if oracle is None:
        oracle = Oracle(spec, rng)
    kappa = _noise_kappa(spec)
    rounds = _round_count(params.eps)
    gamma = params.delta / (4.0 * math.log2(1.0 / params.eps))
    space = VersionSpace(klass)
    trace: list[RoundTrace] = []
    flags: list[str] = []
    rounds_run = 0

    for i in range(1, rounds + 1):
        if params.early_exit_singleton and len(space) == 1:
            flags.append(f"early-exit-round-{i}")
            break
        eps_i = 2.0 ** -(i + 2)
        n_i = choose_n_i(i, params.eps, klass.vc_dim, params.delta, params, kappa)
        s_tilde = oracle.sample(n_i)
        mask = space.dis_mask(s_tilde)
        subset = s_tilde[mask]
        labels_before, comps_before = oracle.counters.snapshot()
        if len(subset) > 0:
            if use_comparisons:
                if kappa > 1.0:
                    k_i = core.k_tnc(eps_i, gamma, kappa, params.c3)
                else:
                    k_i = core.k_adv(eps_i, gamma, params.c3)
                result = core.adgac(subset, n_i, eps_i, gamma, oracle, rng, k=k_i)
                dataset = LabeledDataset(subset, result.labels, provenance="adgac-predicted")
                counts = klass.error_counts(dataset.xs, dataset.ys)
                space = space.filter_by_counts(counts, n_i * eps_i)
                if isinstance(klass, ThresholdClass) and _is_monotone_step(subset, result.labels):
                    assert space.is_contiguous(), "monotone-step labels must keep an interval alive"
            else:
                ys = np.fromiter((oracle.label(x) for x in subset), dtype=int, count=len(subset))
                dataset = LabeledDataset(subset, ys, provenance="oracle-direct")
                counts = klass.error_counts(dataset.xs, dataset.ys)
                alive_min = counts[space.alive].min()
                space = space.filter_by_counts(counts - alive_min, n_i * eps_i)
        labels_after, comps_after = oracle.counters.snapshot()
        rounds_run = i
        trace.append(RoundTrace(round=i, eps_i=eps_i, n_i=n_i, subset_size=len(subset),
                                labels=labels_after - labels_before,
                                comparisons=comps_after - comps_before,
                                survivors=len(space)))
        if oracle.counters.labels > params.max_labels:
            raise BudgetExceededError("label budget exhausted")
        if oracle.counters.comparisons > params.max_comparisons:
            raise BudgetExceededError("comparison budget exhausted")

    return RunResult(hypothesis_index=space.first_index,
                     labels=oracle.counters.labels,
                     comparisons=oracle.counters.comparisons,
                     rounds_run=rounds_run, trace=trace, flags=flags)
