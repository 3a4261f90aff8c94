"""Monte Carlo reproduction of the trial-by-trial counting procedure.

Each trial is one write/read cycle. The 16-outcome joint click distribution
of D1..D4 is computed once per configuration by :mod:`memhom.fock_engine`
and trials are drawn from it i.i.d.

Randomness is counter based: trials are grouped in blocks of
``BLOCK_SIZE`` and block ``k`` draws from a Philox generator keyed by
``(seed, k)``. The outcome of trial ``i`` therefore depends only on the
seed and ``i``, and results do not depend on how blocks are spread over
worker threads.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import analytic_rates
from .fock_engine import FockEngineError, experiment_click_distribution
from .params import ExperimentConfig

SCENARIOS = ("parallel", "perpendicular", "blocked_A", "blocked_B")
BLOCK_SIZE = 1 << 16
MAX_LEAKAGE = 1e-4
U64 = 1 << 64
_PAIRING_STREAM = 0x57504552  # second key word for the W-perp pairing generator

ALL_FOUR = 0b1111
PAIR_12 = 0b0011


class TruncationError(FockEngineError):
    """The Fock cutoff drops more probability than the sampler tolerates."""


class SamplerError(ValueError):
    pass


@dataclass(frozen=True)
class TrialPlan:
    n_trials: int
    seed: int
    scenario: str
    config: ExperimentConfig
    cutoff: int = 4
    dark_count: float = 0.0

    def __post_init__(self):
        if int(self.n_trials) != self.n_trials or self.n_trials < 1:
            raise SamplerError("n_trials must be a positive integer")
        if not 0 <= self.seed < U64:
            raise SamplerError("seed must be an unsigned 64-bit integer")
        if self.scenario not in SCENARIOS:
            raise SamplerError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if not 0.0 <= self.dark_count <= 1.0:
            raise SamplerError("dark_count must be a probability")


def scenario_config(config: ExperimentConfig, scenario: str) -> ExperimentConfig:
    """Configuration actually run for a scenario.

    Blocked runs use the perpendicular arrangement; with one source dark the
    polarization of the other does not affect polarization-blind detectors.
    """
    if scenario == "parallel":
        return config.with_polarization("parallel")
    if scenario == "perpendicular":
        return config.with_polarization("perpendicular")
    if scenario == "blocked_A":
        return config.with_polarization("perpendicular").blocked("A")
    if scenario == "blocked_B":
        return config.with_polarization("perpendicular").blocked("B")
    raise SamplerError(f"unknown scenario {scenario!r}")


def outcome_distribution(plan: TrialPlan) -> np.ndarray:
    """Normalized engine distribution for a plan, refusing if truncation is too lossy."""
    dist = experiment_click_distribution(scenario_config(plan.config, plan.scenario), plan.cutoff)
    if dist.leakage > MAX_LEAKAGE:
        raise TruncationError(
            f"truncation leakage {dist.leakage:.3g} exceeds {MAX_LEAKAGE:g} at cutoff {plan.cutoff}; "
            f"rerun with a larger cutoff"
        )
    p = np.clip(dist.probs, 0.0, None)
    return p / p.sum()


def _block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, block]))


def _sample_block(cdf: np.ndarray, seed: int, block: int, size: int, dark_count: float) -> np.ndarray:
    rng = _block_generator(seed, block)
    codes = np.searchsorted(cdf, rng.random(size), side="right").astype(np.uint8)
    np.minimum(codes, 15, out=codes)
    if dark_count > 0:
        dark = rng.random((size, 4)) < dark_count
        codes |= (dark @ np.array([1, 2, 4, 8])).astype(np.uint8)
    return codes


def sample_outcomes(probs: np.ndarray, n_trials: int, seed: int, dark_count: float = 0.0,
                    workers: int = 1) -> np.ndarray:
    """Per-trial outcome codes (uint8, bit i = detector i clicked)."""
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    n_blocks = -(-n_trials // BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, n_trials - k * BLOCK_SIZE) for k in range(n_blocks)]

    def job(k):
        return _sample_block(cdf, seed, k, sizes[k], dark_count)

    if workers <= 1 or n_blocks == 1:
        parts = [job(k) for k in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(n_blocks)))
    return np.concatenate(parts)


def _count_mask(histogram: np.ndarray, mask: int) -> int:
    return int(sum(int(c) for k, c in enumerate(histogram) if k & mask == mask))


@dataclass(frozen=True)
class CountsReport:
    """Counts accumulated over the trials of one plan.

    ``histogram[k]`` counts trials whose click pattern is exactly ``k``.
    Singles and coincidences count trials in which at least the named
    detectors clicked.
    """

    n_trials: int
    scenario: str
    histogram: np.ndarray = field(repr=False)
    outcomes: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def count(self, *detectors: str) -> int:
        mask = 0
        for d in detectors:
            mask |= 1 << analytic_rates.DETECTORS.index(d)
        return _count_mask(self.histogram, mask)

    @property
    def singles(self) -> tuple[int, int, int, int]:
        return tuple(_count_mask(self.histogram, 1 << i) for i in range(4))

    @property
    def pair_12(self) -> int:
        return _count_mask(self.histogram, PAIR_12)

    @property
    def quad_1234(self) -> int:
        return int(self.histogram[ALL_FOUR])

    @property
    def quad_variants(self) -> dict[str, int]:
        """Four-fold count plus the three-fold signal-signal-idler subsets."""
        return {
            "D1D2D3D4": self.quad_1234,
            "D1D2D3": self.count("D1", "D2", "D3"),
            "D1D2D4": self.count("D1", "D2", "D4"),
        }

    @property
    def p1_hat(self) -> float:
        n1, n2, _, _ = self.singles
        return (n1 + n2) / self.n_trials

    @property
    def p1_stderr(self) -> float:
        # N1 and N2 are each binomial; their covariance is neglected at these rates
        n = self.n_trials
        n1, n2, _, _ = self.singles
        return math.sqrt(sum((c / n) * (1 - c / n) for c in (n1, n2)) / n)

    def rate(self, count: int) -> tuple[float, float]:
        """Per-trial probability and its binomial standard error."""
        p = count / self.n_trials
        return p, math.sqrt(p * (1 - p) / self.n_trials)


def run_trials(plan: TrialPlan, workers: int = 1, keep_outcomes: bool = True) -> CountsReport:
    probs = outcome_distribution(plan)
    codes = sample_outcomes(probs, plan.n_trials, plan.seed, plan.dark_count, workers)
    hist = np.bincount(codes, minlength=16).astype(np.int64)
    return CountsReport(plan.n_trials, plan.scenario, hist, codes if keep_outcomes else None)


def ratio_with_error(num: tuple[float, float], den: tuple[float, float]) -> tuple[float, float]:
    """Ratio of two independent estimates (value, stderr) with first-order error propagation."""
    (a, sa), (b, sb) = num, den
    if b == 0:
        return math.nan, math.inf
    r = a / b
    if a == 0:
        return 0.0, sa / b
    return r, abs(r) * math.hypot(sa / a, sb / b)


@dataclass(frozen=True)
class WPerpEstimate:
    value: float
    stderr: float
    count: int
    n_pairs: int
    flagged: bool

    @property
    def relative_error(self) -> float:
        return self.stderr / self.value if self.value else math.inf


def estimate_w_perp(blocked_a: CountsReport, blocked_b: CountsReport, seed: int = 0,
                    n_boot: int = 400) -> WPerpEstimate:
    """Benchmark four-fold probability from two blocked-source runs.

    ``blocked_a`` is the run with site A blocked, ``blocked_b`` the run with
    site B blocked. Trial ``i`` of the first is paired with trial ``pi(i)`` of
    the second, ``pi`` a permutation drawn from a generator keyed by ``seed``. A
    detector counts as clicked if it clicked in either member of the pair. The
    error is a bootstrap over pairs, drawn as multinomial resamples of the
    combined-outcome histogram.
    """
    if (blocked_a.scenario, blocked_b.scenario) != ("blocked_A", "blocked_B"):
        raise SamplerError("expected the A-blocked report first and the B-blocked report second")
    if blocked_a.outcomes is None or blocked_b.outcomes is None:
        raise SamplerError("blocked reports must keep per-trial outcomes")
    n = min(blocked_a.n_trials, blocked_b.n_trials)
    rng = np.random.Generator(np.random.Philox(key=[seed, _PAIRING_STREAM]))
    perm = rng.permutation(blocked_b.n_trials)[:n]
    combined = blocked_a.outcomes[:n] | blocked_b.outcomes[perm]
    hist = np.bincount(combined, minlength=16)
    k = int(hist[ALL_FOUR])
    if k == 0:
        warnings.warn(
            "no four-fold events in the paired blocked runs; W-perp estimate is 0 with "
            "infinite relative error",
            RuntimeWarning,
            stacklevel=2,
        )
        return WPerpEstimate(0.0, 0.0, 0, n, True)
    boot = rng.multinomial(n, hist / n, size=n_boot)[:, ALL_FOUR] / n
    return WPerpEstimate(k / n, float(np.std(boot, ddof=1)), k, n, False)


@dataclass(frozen=True)
class SweepRow:
    """All four scenarios at one configuration, plus the derived ratios."""

    config: ExperimentConfig
    p1: float
    reports: dict
    w_perp: WPerpEstimate

    @property
    def p1_hat(self) -> float:
        # pooled over the two interfering-source scenarios
        par, perp = self.reports["parallel"], self.reports["perpendicular"]
        return (par.p1_hat * par.n_trials + perp.p1_hat * perp.n_trials) / (par.n_trials + perp.n_trials)

    @property
    def two_fold_ratio(self) -> tuple[float, float]:
        par, perp = self.reports["parallel"], self.reports["perpendicular"]
        return ratio_with_error(par.rate(par.pair_12), perp.rate(perp.pair_12))

    def four_fold_ratio(self, scenario: str) -> tuple[float, float]:
        rep = self.reports[scenario]
        if self.w_perp.flagged:
            return math.nan, math.inf
        return ratio_with_error(rep.rate(rep.quad_1234), (self.w_perp.value, self.w_perp.stderr))


def scenario_seed(seed: int, point: int, scenario: str) -> int:
    ss = np.random.SeedSequence([seed, point, SCENARIOS.index(scenario)])
    return int(ss.generate_state(1, np.uint64)[0])


def sweep(configs: Sequence[ExperimentConfig], n_trials: int, seed: int, cutoff: int = 4,
          dark_count: float = 0.0, workers: int = 1) -> list[SweepRow]:
    """Run every scenario at each configuration; rows come back ordered by p1.

    Seeds are derived from ``(seed, point index, scenario)`` so a point's
    results do not depend on the other points in the grid.
    """
    rows = []
    for i, cfg in enumerate(configs):
        reports = {}
        for sc in SCENARIOS:
            plan = TrialPlan(n_trials, scenario_seed(seed, i, sc), sc, cfg, cutoff, dark_count)
            reports[sc] = run_trials(plan, workers, keep_outcomes=sc.startswith("blocked"))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            w = estimate_w_perp(reports["blocked_A"], reports["blocked_B"], scenario_seed(seed, i, "blocked_A"))
        for sc in ("blocked_A", "blocked_B"):
            reports[sc] = CountsReport(reports[sc].n_trials, sc, reports[sc].histogram)
        rows.append(SweepRow(cfg, analytic_rates.p1(cfg), reports, w))
    return sorted(rows, key=lambda r: r.p1)


def expected_four_fold_visibility(config: ExperimentConfig, cutoff: int = 6, dark_count: float = 0.0) -> float:
    """1 - P_par(all four) / W_perp from exact distributions, dark clicks included.

    This is the value the sampled ratio converges to.
    """
    dists = {}
    for sc in SCENARIOS:
        plan = TrialPlan(1, 0, sc, config, cutoff, dark_count)
        dists[sc] = analytic_rates.apply_dark_counts(outcome_distribution(plan), dark_count)
    w = analytic_rates.or_combine(dists["blocked_A"], dists["blocked_B"])[ALL_FOUR]
    return 1.0 - dists["parallel"][ALL_FOUR] / w
