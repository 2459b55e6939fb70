"""Comparison-assisted batch labeling (ADGAC).

Ranks a dataset with a noisy comparison oracle via randomized quicksort,
partitions the ranking into contiguous groups, binary-searches the group
where labels flip from -1 to +1 using small majority-vote label batches, and
emits a monotone-step labeling of the whole dataset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class DegenerateGroupingError(ValueError):
    """Group size collapsed below one in an unsupported configuration."""


@dataclass(frozen=True)
class AdgacParams:
    """Parameters of one labeling invocation.

    n is the ambient sample count the error budget refers to, m the size of
    the subset actually labeled.  The per-group label batch k is derived from
    (eps, delta) unless supplied.  alpha * m = eps * n is the nominal group
    size before rounding.
    """

    n: int
    m: int
    eps: float
    delta: float
    k: int

    def __post_init__(self):
        # m > n is tolerated here; partition_groups rejects the harmful
        # combination (nominal group size below one with m exceeding n)
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if self.k < 1:
            raise ValueError("label batch size must be >= 1")

    @property
    def alpha(self) -> float:
        return self.eps * self.n / self.m

    @property
    def group_size(self) -> int:
        return max(1, int(round(self.alpha * self.m)))


@dataclass
class RankedGroups:
    """A sorted permutation of the input plus contiguous group boundaries."""

    order: np.ndarray                 # rank -> original index
    bounds: list[tuple[int, int]]     # per-group [start, end) over ranks
    # test-mode diagnostics, populated when a ground-truth labeler is supplied
    group_majorities: np.ndarray | None = None   # mu(S_i)
    group_minority_fractions: np.ndarray | None = None  # q(S_i)

    @property
    def n_groups(self) -> int:
        return len(self.bounds)

    def group_ranks(self, gi: int) -> np.ndarray:
        start, end = self.bounds[gi]
        return np.arange(start, end)


@dataclass
class AdgacResult:
    """Predicted labels aligned to the input order, plus exact accounting."""

    labels: np.ndarray
    boundary_group: int
    n_groups: int
    comparisons: int
    label_queries: int
    probes: int
    groups: RankedGroups | None = None
    flags: list[str] = field(default_factory=list)


def noisy_quicksort(items, comparator, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Randomized-pivot quicksort driven by a (possibly asymmetric) comparator.

    comparator(a, b) answers +1 when a ranks above b, else -1; each queried
    pair is presented in uniformly random argument order, so an asymmetric
    comparator sees either orientation with probability 1/2.  Returns the
    permutation (rank -> input index) and the exact comparison count.
    """
    m = len(items)
    order = np.arange(m)
    comparisons = 0
    # iterative to keep worst-case adversarial recursion off the interpreter stack
    stack = [(0, m)]
    while stack:
        lo, hi = stack.pop()
        if hi - lo <= 1:
            continue
        p = int(rng.integers(lo, hi))
        order[p], order[hi - 1] = order[hi - 1], order[p]
        pivot = items[order[hi - 1]]
        store = lo
        for i in range(lo, hi - 1):
            elem = items[order[i]]
            if rng.random() < 0.5:
                below = comparator(elem, pivot) == -1
            else:
                below = comparator(pivot, elem) == 1
            comparisons += 1
            if below:
                order[i], order[store] = order[store], order[i]
                store += 1
        order[store], order[hi - 1] = order[hi - 1], order[store]
        stack.append((lo, store))
        stack.append((store + 1, hi))
    return order, comparisons


def partition_groups(order: np.ndarray, params: AdgacParams,
                     truth_labeler=None, items=None) -> RankedGroups:
    """Split the sorted ranking into contiguous groups of the nominal size.

    All groups have size max(1, round(alpha * m)); a nonzero remainder is
    merged into the last group, so its size lies in [g, 2g).
    """
    m = len(order)
    if m == 0:
        return RankedGroups(order=order, bounds=[])
    g = params.group_size
    if params.alpha * params.m < 1.0 and params.m > params.n:
        raise DegenerateGroupingError(
            f"nominal group size {params.alpha * params.m:.3g} < 1 with m={params.m} > n={params.n}")
    full = m // g
    if full <= 1:
        bounds = [(0, m)]
    else:
        bounds = [(i * g, (i + 1) * g) for i in range(full - 1)]
        bounds.append(((full - 1) * g, m))
    groups = RankedGroups(order=order, bounds=bounds)
    if truth_labeler is not None and items is not None:
        maj = np.empty(len(bounds), dtype=int)
        frac = np.empty(len(bounds), dtype=float)
        for gi, (s, e) in enumerate(bounds):
            ys = np.asarray([truth_labeler(items[j]) for j in order[s:e]])
            pos = int(np.sum(ys > 0))
            neg = ys.size - pos
            maj[gi] = 1 if pos - neg >= 0 else -1
            frac[gi] = min(pos, neg) / ys.size
        groups.group_majorities = maj
        groups.group_minority_fractions = frac
    return groups


def group_binary_search(groups: RankedGroups, items, label_query, k: int,
                        rng: np.random.Generator) -> tuple[int, int, dict[int, int], int]:
    """Binary-search the first group whose label-batch majority is positive.

    At each probed group, min(k, group size) points are sampled uniformly
    without replacement and their label sum decides the move; a tie counts as
    positive.  If the search lands on a group that was never probed (possible
    only when every probe voted negative, or with a single group), that group
    is probed once so its majority is taken from actual labels.

    Returns (boundary group, exact label count, per-group vote sums, probes).
    """
    n_groups = groups.n_groups
    if n_groups == 0:
        return 0, 0, {}, 0
    votes: dict[int, int] = {}
    label_count = 0
    probes = 0

    def probe(gi: int) -> int:
        nonlocal label_count, probes
        start, end = groups.bounds[gi]
        size = end - start
        take = min(k, size)
        ranks = rng.choice(size, size=take, replace=False) + start
        total = 0
        for r in ranks:
            total += label_query(items[groups.order[r]])
        votes[gi] = total
        label_count += take
        probes += 1
        return total

    t_min, t_max = 0, n_groups - 1
    while t_min < t_max:
        t = (t_min + t_max) // 2
        if probe(t) >= 0:
            t_max = t
        else:
            t_min = t + 1
    t = t_min
    if t not in votes:
        probe(t)
    return t, label_count, votes, probes


def adgac(S, n: int, eps: float, delta: float, oracle, rng: np.random.Generator,
          k: int | None = None, kappa: float = 1.0, c3: float = 1.0,
          truth_labeler=None) -> AdgacResult:
    """Label a dataset with comparisons plus a few label batches.

    S is the dataset to label (array of instances), n the ambient sample count
    for the error budget eps * n.  The oracle supplies compare/label calls and
    owns the counters.  Pass a truth_labeler to populate per-group diagnostics
    (test mode only; it consumes no oracle queries).
    """
    m = len(S)
    if m == 0:
        return AdgacResult(labels=np.empty(0, dtype=int), boundary_group=0, n_groups=0,
                           comparisons=0, label_queries=0, probes=0)
    if k is None:
        k = k_tnc(eps, delta, kappa, c3) if kappa > 1.0 else k_adv(eps, delta, c3)
    params = AdgacParams(n=n, m=m, eps=eps, delta=delta, k=k)

    order, comparisons = noisy_quicksort(S, oracle.compare, rng)
    groups = partition_groups(order, params, truth_labeler=truth_labeler, items=S)
    t, label_count, votes, probes = group_binary_search(groups, S, oracle.label, k, rng)

    majority = 1 if votes[t] >= 0 else -1
    yhat = np.empty(m, dtype=int)
    for gi, (s, e) in enumerate(groups.bounds):
        if gi < t:
            val = -1
        elif gi > t:
            val = 1
        else:
            val = majority
        yhat[groups.order[s:e]] = val
    return AdgacResult(labels=yhat, boundary_group=t, n_groups=groups.n_groups,
                       comparisons=comparisons, label_queries=label_count, probes=probes,
                       groups=groups)


def k_tnc(eps: float, delta: float, kappa: float, c3: float = 1.0) -> int:
    """Label batch size per probed group under power-law posterior noise."""
    _check_k_domain(eps, delta, c3)
    if kappa < 1.0:
        raise ValueError("noise exponent must be >= 1")
    val = c3 * math.log(math.log(1.0 / eps) / delta) * (1.0 / eps) ** (2.0 * kappa - 2.0)
    return max(1, math.ceil(val))


def k_adv(eps: float, delta: float, c3: float = 1.0) -> int:
    """Label batch size per probed group under bounded adversarial label noise."""
    _check_k_domain(eps, delta, c3)
    val = c3 * math.log(math.log(1.0 / eps) / delta)
    return max(1, math.ceil(val))


def _check_k_domain(eps: float, delta: float, c3: float):
    if not 0.0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if c3 <= 0.0:
        raise ValueError("batch constant must be positive")
