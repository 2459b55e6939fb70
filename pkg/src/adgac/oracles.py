"""Synthetic classification worlds and noisy oracles with exact query accounting.

A scenario fixes a marginal distribution over instances, a scoring rule whose
sign is the optimal label, and independent corruption models for the labeling
oracle and the pairwise-comparison oracle.  Every oracle call increments a
counter exactly once, so query complexity can be audited after any experiment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNIFORM = "uniform-interval"
GAUSSIAN = "isotropic-gaussian"

TSYBAKOV = "tsybakov"
MASSART = "massart"
ADVERSARIAL = "adversarial"

PERFECT = "perfect"
BAND_ADVERSARIAL = "band-adversarial"

# Band calibration runs on its own fixed stream so that trial randomness is
# never consumed by setup work.
_CALIBRATION_SEED = 0x5EEDCA1B
_CALIBRATION_SAMPLES = 200_000
_CALIBRATION_MASS_TOL = 1e-3


class CalibrationError(ValueError):
    """Requested corruption mass is not achievable for this scenario."""


@dataclass(frozen=True)
class GroundTruth:
    """Score rule g whose sign gives the optimal label.

    kind "threshold" scores x - t (1-D); kind "halfspace" scores w . x with a
    unit direction w.
    """

    kind: str
    threshold: float = 0.0
    direction: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("threshold", "halfspace"):
            raise ValueError(f"unknown ground truth kind {self.kind!r}")
        if self.kind == "halfspace":
            w = np.asarray(self.direction, dtype=float)
            if w.ndim != 1 or w.size == 0:
                raise ValueError("halfspace ground truth needs a direction vector")
            if abs(np.linalg.norm(w) - 1.0) > 1e-9:
                raise ValueError("halfspace direction must be a unit vector")

    @property
    def w(self) -> np.ndarray:
        return np.asarray(self.direction, dtype=float)


@dataclass(frozen=True)
class LabelNoiseSpec:
    """Corruption model for the labeling oracle.

    massart flips each label with probability beta; tsybakov uses a power-law
    posterior margin with exponent kappa > 1 and scale mu (kappa == 1 falls
    back to massart); adversarial deterministically flips a band of total
    instance mass nu around the decision boundary.
    """

    kind: str = MASSART
    beta: float = 0.0
    kappa: float = 1.0
    mu: float = 1.0
    nu: float = 0.0

    def __post_init__(self):
        if self.kind not in (TSYBAKOV, MASSART, ADVERSARIAL):
            raise ValueError(f"unknown label noise kind {self.kind!r}")
        if not 0.0 <= self.beta < 0.5:
            raise ValueError("massart flip rate must lie in [0, 1/2)")
        if self.kappa < 1.0:
            raise ValueError("tsybakov exponent must be >= 1")
        if self.mu <= 0.0:
            raise ValueError("tsybakov scale must be positive")
        if self.nu < 0.0:
            raise ValueError("adversarial mass must be nonnegative")


@dataclass(frozen=True)
class ComparisonNoiseSpec:
    """Corruption model for the comparison oracle.

    band-adversarial flips the answer exactly on opposite-label pairs that
    both fall inside a score band around the boundary; the band radius is
    calibrated so the flipped-pair mass equals nu_prime.
    """

    kind: str = PERFECT
    nu_prime: float = 0.0

    def __post_init__(self):
        if self.kind not in (PERFECT, BAND_ADVERSARIAL):
            raise ValueError(f"unknown comparison noise kind {self.kind!r}")
        if self.nu_prime < 0.0:
            raise ValueError("comparison corruption mass must be nonnegative")


@dataclass(frozen=True)
class ScenarioSpec:
    """One synthetic world: marginal, ground truth, noise models, seed."""

    dist_kind: str
    d: int
    ground_truth: GroundTruth
    label_noise: LabelNoiseSpec = LabelNoiseSpec()
    comparison_noise: ComparisonNoiseSpec = ComparisonNoiseSpec()
    seed: int = 0

    def __post_init__(self):
        if self.dist_kind not in (UNIFORM, GAUSSIAN):
            raise ValueError(f"unknown distribution kind {self.dist_kind!r}")
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.dist_kind == UNIFORM and self.d != 1:
            raise ValueError("uniform-interval scenarios are one-dimensional")
        if self.ground_truth.kind == "threshold" and self.d != 1:
            raise ValueError("threshold ground truth needs d = 1")
        if self.ground_truth.kind == "halfspace" and self.ground_truth.w.size != self.d:
            raise ValueError("halfspace direction dimension mismatch")


@dataclass
class QueryCounters:
    """Exact per-oracle call counts; incremented once per oracle invocation."""

    labels: int = 0
    comparisons: int = 0

    def snapshot(self) -> tuple[int, int]:
        return (self.labels, self.comparisons)


def uniform_scenario(threshold: float = 0.5, label_noise: LabelNoiseSpec | None = None,
                     comparison_noise: ComparisonNoiseSpec | None = None, seed: int = 0) -> ScenarioSpec:
    """Uniform(0,1) instances with a threshold ground truth."""
    return ScenarioSpec(
        dist_kind=UNIFORM,
        d=1,
        ground_truth=GroundTruth(kind="threshold", threshold=threshold),
        label_noise=label_noise or LabelNoiseSpec(),
        comparison_noise=comparison_noise or ComparisonNoiseSpec(),
        seed=seed,
    )


def gaussian_scenario(w_star, label_noise: LabelNoiseSpec | None = None,
                      comparison_noise: ComparisonNoiseSpec | None = None, seed: int = 0) -> ScenarioSpec:
    """Standard isotropic gaussian instances with a halfspace ground truth."""
    w = np.asarray(w_star, dtype=float)
    w = w / np.linalg.norm(w)
    return ScenarioSpec(
        dist_kind=GAUSSIAN,
        d=w.size,
        ground_truth=GroundTruth(kind="halfspace", direction=tuple(w)),
        label_noise=label_noise or LabelNoiseSpec(),
        comparison_noise=comparison_noise or ComparisonNoiseSpec(),
        seed=seed,
    )


def sample_unlabeled(spec: ScenarioSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n i.i.d. instances from the scenario marginal.

    Returns shape (n,) for uniform-interval and (n, d) for the gaussian.
    """
    if n < 1:
        raise ValueError("sample size must be >= 1")
    if spec.dist_kind == UNIFORM:
        return rng.random(n)
    return rng.standard_normal((n, spec.d))


def score(spec: ScenarioSpec, x) -> np.ndarray | float:
    """Evaluate the ground-truth score g on one instance or a batch."""
    gt = spec.ground_truth
    if gt.kind == "threshold":
        return np.asarray(x, dtype=float) - gt.threshold
    x = np.asarray(x, dtype=float)
    return x @ gt.w


def bayes_label(spec: ScenarioSpec, x) -> np.ndarray | int:
    """Optimal label sign(g); the measure-zero tie g == 0 resolves to +1."""
    g = score(spec, x)
    if np.ndim(g) == 0:
        return 1 if g >= 0 else -1
    return np.where(np.asarray(g) >= 0, 1, -1)


def label_positive_probability(spec: ScenarioSpec, x, band_radius: float | None = None) -> np.ndarray | float:
    """P[Y = +1 | X = x] under the scenario's label noise.

    For adversarial noise the answer is deterministic (0 or 1) given the
    calibrated flip band; pass the radius to avoid recalibrating.
    """
    noise = spec.label_noise
    g = np.asarray(score(spec, x), dtype=float)
    sgn = np.where(g >= 0, 1.0, -1.0)
    if noise.kind == ADVERSARIAL:
        if band_radius is None:
            band_radius = calibrate_band(spec, noise.nu, "label")
        flipped = np.abs(g) < band_radius
        eta = np.where(flipped, -sgn, sgn) * 0.5 + 0.5
    elif noise.kind == TSYBAKOV and noise.kappa > 1.0:
        margin = np.minimum(0.5, 0.5 * (np.abs(g) / noise.mu) ** (noise.kappa - 1.0))
        eta = 0.5 + np.where(g == 0, 0.0, sgn) * margin
    else:
        # massart, and the kappa == 1 tsybakov case which coincides with it
        eta = 0.5 + np.where(g == 0, 0.0, sgn) * (0.5 - noise.beta)
    if eta.ndim == 0:
        return float(eta)
    return eta


def query_label(spec: ScenarioSpec, x, counters: QueryCounters, rng: np.random.Generator,
                band_radius: float | None = None) -> int:
    """Ask the labeling oracle for one instance; increments counters.labels."""
    counters.labels += 1
    noise = spec.label_noise
    if noise.kind == ADVERSARIAL:
        if band_radius is None:
            band_radius = calibrate_band(spec, noise.nu, "label")
        g = float(score(spec, x))
        y = 1 if g >= 0 else -1
        if abs(g) < band_radius:
            y = -y
        return y
    eta = label_positive_probability(spec, x)
    return 1 if rng.random() < eta else -1


def query_comparison(spec: ScenarioSpec, x, x_prime, counters: QueryCounters,
                     band_radius: float | None = None) -> int:
    """Ask which of two instances is more likely positive; +1 means the first.

    Perfect kind answers sign(g(x) - g(x')) with ties broken to +1.  The
    band-adversarial kind flips the answer when both scores fall inside the
    calibrated band and the optimal labels disagree.  Increments
    counters.comparisons.  Argument-order randomization is the caller's job.
    """
    counters.comparisons += 1
    g = float(score(spec, x))
    gp = float(score(spec, x_prime))
    z = 1 if g - gp >= 0 else -1
    noise = spec.comparison_noise
    if noise.kind == BAND_ADVERSARIAL:
        if band_radius is None:
            band_radius = calibrate_band(spec, noise.nu_prime, "comparison")
        opposite = (g >= 0) != (gp >= 0)
        if opposite and abs(g) < band_radius and abs(gp) < band_radius:
            z = -z
    return z


def calibrate_band(spec: ScenarioSpec, target_mass: float, which: str = "label") -> float:
    """Find the band radius realizing a target corruption mass.

    For labels the calibrated quantity is P[|g(X)| < rho]; for comparisons it
    is the flipped-pair probability P[|g(X)| < rho, |g(X')| < rho,
    h*(X) != h*(X')] over an i.i.d. pair.  Bisection on Monte Carlo estimates
    with a fixed internal seed, to absolute mass tolerance 1e-3.
    """
    if which not in ("label", "comparison"):
        raise ValueError(f"unknown calibration target {which!r}")
    if not 0.0 <= target_mass < 1.0:
        raise CalibrationError("target mass must lie in [0, 1)")
    if target_mass == 0.0:
        return 0.0
    rng = np.random.default_rng(_CALIBRATION_SEED)
    g = np.asarray(score(spec, sample_unlabeled(spec, _CALIBRATION_SAMPLES, rng)))

    if which == "label":
        def mass(rho):
            return float(np.mean(np.abs(g) < rho))
    else:
        def mass(rho):
            p_pos = float(np.mean((g >= 0) & (g < rho)))
            p_neg = float(np.mean((g < 0) & (g > -rho)))
            return 2.0 * p_pos * p_neg

    hi = float(np.max(np.abs(g))) * (1.0 + 1e-9) + 1e-12
    if mass(hi) < target_mass - _CALIBRATION_MASS_TOL:
        raise CalibrationError(
            f"target {which} mass {target_mass} exceeds achievable maximum {mass(hi):.4f}")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        m = mass(mid)
        if abs(m - target_mass) <= _CALIBRATION_MASS_TOL:
            return mid
        if m < target_mass:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class Oracle:
    """Bundles one trial's scenario, rng stream, counters, and cached bands.

    State is per-trial: concurrent trials must each own their instance.
    """

    def __init__(self, spec: ScenarioSpec, rng: np.random.Generator | None = None):
        self.spec = spec
        self.rng = rng if rng is not None else np.random.default_rng(spec.seed)
        self.counters = QueryCounters()
        self._label_band = None
        self._comparison_band = None
        if spec.label_noise.kind == ADVERSARIAL and spec.label_noise.nu > 0:
            self._label_band = calibrate_band(spec, spec.label_noise.nu, "label")
        if spec.comparison_noise.kind == BAND_ADVERSARIAL and spec.comparison_noise.nu_prime > 0:
            self._comparison_band = calibrate_band(spec, spec.comparison_noise.nu_prime, "comparison")

    def sample(self, n: int) -> np.ndarray:
        return sample_unlabeled(self.spec, n, self.rng)

    def label(self, x) -> int:
        return query_label(self.spec, x, self.counters, self.rng, band_radius=self._label_band or 0.0)

    def compare(self, x, x_prime) -> int:
        return query_comparison(self.spec, x, x_prime, self.counters,
                                band_radius=self._comparison_band or 0.0)

    def bayes(self, x):
        return bayes_label(self.spec, x)
