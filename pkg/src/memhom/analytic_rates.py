"""Closed-form coincidence rates for two interfering Raman sources.

Two-fold rates follow the time-resolved second-order cross-correlation at
the beamsplitter outputs; four-fold rates are the normally ordered
signal-signal-idler-idler correlation for identical wavepackets. Both are
the leading order in detection efficiency of the threshold-detector
probabilities computed by :mod:`memhom.fock_engine`.

Weights: in the time-resolved functions each site enters through
``mode_amplitude**2 * s**2``. In the probability-level functions
(``two_fold_probability``, ``four_fold_*``) a site's signal enters through
``epsilon * s**2`` and its idler through the overall idler efficiency
``exp(-2 dt/tau_c) * retrieval_efficiency * idler_epsilon``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .params import ExperimentConfig, EnsembleParams, Wavepacket, simpson_rule


class QuadratureError(RuntimeError):
    pass


class WavepacketMismatchError(ValueError):
    pass


class MissingStatisticsError(ValueError):
    pass


DETECTORS = ("D1", "D2", "D3", "D4")


def memory_decay_factor(delta_t: float, tau_c: float) -> float:
    """Spin-wave amplitude surviving the write/read delay, exp(-dt/tau_c)."""
    if not tau_c > 0:
        raise ValueError("tau_c must be positive")
    return math.exp(-delta_t / tau_c)


def idler_efficiency(config: ExperimentConfig, site: EnsembleParams) -> float:
    """Probability that a stored excitation is read out and detected as an idler click."""
    return memory_decay_factor(config.delta_t, site.tau_c) ** 2 * site.retrieval_efficiency * site.idler_epsilon


def p1(config: ExperimentConfig) -> float:
    """Per-trial signal detection probability eps_A s_A^2 + eps_B s_B^2."""
    a, b = config.site_params
    return a.epsilon * a.s2 + b.epsilon * b.s2


# --- time-resolved two-fold correlation -------------------------------------------------

def _g12_terms_tu(config: ExperimentConfig, t, u, interfering: bool):
    a, b = config.site_params
    R, T = config.reflectance, config.transmittance
    fa, fb = a.wavepacket, b.wavepacket
    wa = a.mode_amplitude ** 2 * a.s2
    wb = b.mode_amplitude ** 2 * b.s2
    pa_u, pa_t, pb_u, pb_t = fa(u), fa(t), fb(u), fb(t)
    if interfering:
        hom = wa * wb * np.abs(T * pa_u * pb_t - R * pb_u * pa_t) ** 2
    else:
        hom = wa * wb * (np.abs(T * pa_u * pb_t) ** 2 + np.abs(R * pb_u * pa_t) ** 2)
    multi = 2 * R * T * (wa * wa * np.abs(pa_u * pa_t) ** 2 + wb * wb * np.abs(pb_u * pb_t) ** 2)
    return hom, multi


def g12_terms(config: ExperimentConfig, t, tau, interfering: bool = True):
    """(HOM term, multiphoton term) of the two-fold correlation at times t and t + tau."""
    t = np.asarray(t, dtype=float)
    return _g12_terms_tu(config, t, t + np.asarray(tau, dtype=float), interfering)


def g12_parallel(config: ExperimentConfig, t, tau):
    hom, multi = g12_terms(config, t, tau, interfering=True)
    return hom + multi


def g12_perpendicular(config: ExperimentConfig, t, tau):
    hom, multi = g12_terms(config, t, tau, interfering=False)
    return hom + multi


def mode_overlap(fa: Wavepacket, fb: Wavepacket) -> complex:
    """<phi_A|phi_B> by composite Simpson over both supports.

    Normalized by the norms on the same grid, so that tails cut off by the
    finite window do not bias the result (identical modes give exactly 1).
    """
    if fa.same_mode(fb):
        return 1.0 + 0.0j
    lo = min(fa.support()[0], fb.support()[0])
    hi = max(fa.support()[1], fb.support()[1])
    bp = [x for x in fa.breakpoints() + fb.breakpoints() if lo <= x <= hi] + [lo, hi]
    x, w = simpson_rule(bp, 512)
    va, vb = fa(x), fb(x)
    na = np.sum(w * np.abs(va) ** 2)
    nb = np.sum(w * np.abs(vb) ** 2)
    return complex(np.sum(w * np.conj(va) * vb) / math.sqrt(na * nb))


def integrated_g12(config: ExperimentConfig, interfering: bool) -> float:
    """Double integral of the two-fold correlation via the mode overlap."""
    a, b = config.site_params
    R, T = config.reflectance, config.transmittance
    wa = a.mode_amplitude ** 2 * a.s2
    wb = b.mode_amplitude ** 2 * b.s2
    ov = abs(mode_overlap(a.wavepacket, b.wavepacket)) ** 2 if interfering else 0.0
    return wa * wb * (T * T + R * R - 2 * R * T * ov) + 2 * R * T * (wa * wa + wb * wb)


def closed_form_two_fold_ratio(config: ExperimentConfig) -> float:
    """Integrated parallel/perpendicular ratio for identical wavepackets."""
    a, b = config.site_params
    if not a.wavepacket.same_mode(b.wavepacket):
        raise WavepacketMismatchError("closed form needs identical wavepackets; use integrated_two_fold_ratio")
    R, T = config.reflectance, config.transmittance
    wa = a.mode_amplitude ** 2 * a.s2
    wb = b.mode_amplitude ** 2 * b.s2
    multi = 2 * R * T * (wa * wa + wb * wb)
    return ((T - R) ** 2 * wa * wb + multi) / ((T * T + R * R) * wa * wb + multi)


def _integrate_2d(f, breakpoints: Sequence[float], atol_scale: float, max_panels: int = 4096):
    """Tensor-product composite Simpson, panels doubled until successive estimates agree."""
    n = 16
    prev = None
    history = []
    while n <= max_panels:
        x, w = simpson_rule(breakpoints, n)
        val = float(w @ f(x[:, None], x[None, :]) @ w)
        history.append((n, val))
        if prev is not None:
            if abs(val - prev) <= max(atol_scale, 1e-13 * abs(val)):
                return val
        prev = val
        n *= 2
    raise QuadratureError(f"2-D quadrature did not converge; (panels, estimate) history: {history}")


def _integration_window(config: ExperimentConfig) -> list[float]:
    a, b = config.site_params
    lo = min(a.wavepacket.support()[0], b.wavepacket.support()[0])
    hi = max(a.wavepacket.support()[1], b.wavepacket.support()[1])
    bp = [lo, hi] + [x for x in a.wavepacket.breakpoints() + b.wavepacket.breakpoints() if lo <= x <= hi]
    return sorted(set(bp))


def integrate_two_fold(config: ExperimentConfig, interfering: bool) -> float:
    """Numerical double integral of the two-fold correlation over (t, tau).

    Integration runs over (t, u = t + tau), unit Jacobian, on the window
    spanned by both wavepacket supports (gaussians: +-6 widths). Stops when
    successive estimates differ by less than 1e-9 of peak density times
    window area.
    """
    bp = _integration_window(config)
    span = bp[-1] - bp[0]

    def f(t, u):
        hom, multi = _g12_terms_tu(config, t, u, interfering)
        return hom + multi

    x, _ = simpson_rule(bp, 64)
    peak = float(np.max(f(x[:, None], x[None, :])))
    if peak == 0:
        return 0.0
    return _integrate_2d(f, bp, 1e-9 * peak * span * span)


def integrated_two_fold_ratio(config: ExperimentConfig) -> float:
    """Ratio of integrated parallel to perpendicular two-fold rates, by quadrature."""
    den = integrate_two_fold(config, interfering=False)
    if den == 0:
        raise ZeroDivisionError("perpendicular two-fold rate vanishes")
    return integrate_two_fold(config, interfering=True) / den


# --- probability-level rates ----------------------------------------------------------

def _hom_coefficient(config: ExperimentConfig, polarization: Optional[str]) -> float:
    R, T = config.reflectance, config.transmittance
    pol = polarization or config.polarization_config
    return (R - T) ** 2 if pol == "parallel" else R * R + T * T


def two_fold_probability(config: ExperimentConfig, polarization: Optional[str] = None) -> float:
    """Lowest-order D1 & D2 coincidence probability for identical wavepackets."""
    a, b = config.site_params
    R, T = config.reflectance, config.transmittance
    wa, wb = a.epsilon * a.s2, b.epsilon * b.s2
    return _hom_coefficient(config, polarization) * wa * wb + 2 * R * T * (wa * wa + wb * wb)


def _four_fold(config: ExperimentConfig, coefficient: float, efficiency_weighted: bool) -> float:
    a, b = config.site_params
    if not a.wavepacket.same_mode(b.wavepacket):
        raise WavepacketMismatchError(
            "four-fold rates assume identical wavepackets; "
            "mismatch is only supported by the time-resolved two-fold functions"
        )
    R, T = config.reflectance, config.transmittance
    sa, sb = a.s2, b.s2
    if not efficiency_weighted:
        return sa * sb * (coefficient * (1 + 2 * sa) * (1 + 2 * sb)
                          + 2 * R * T * (3 * sa * sa + 3 * sb * sb + 2 * sa + 2 * sb))
    ea, eb = a.epsilon, b.epsilon
    ia, ib = idler_efficiency(config, a), idler_efficiency(config, b)
    # equal signal efficiencies reduce this to ea*eb*ia*ib times the unweighted form
    return ia * ib * sa * sb * (
        coefficient * ea * eb * (1 + 2 * sa) * (1 + 2 * sb)
        + R * T * (ea * ea * (6 * sa * sa + 4 * sa) + eb * eb * (6 * sb * sb + 4 * sb))
    )


def four_fold_parallel(config: ExperimentConfig, efficiency_weighted: bool = True) -> float:
    """Four-fold rate with parallel signal polarizations."""
    return _four_fold(config, _hom_coefficient(config, "parallel"), efficiency_weighted)


def four_fold_perpendicular(config: ExperimentConfig, efficiency_weighted: bool = True) -> float:
    """Four-fold rate with B's signal rotated to V (no two-photon interference)."""
    return _four_fold(config, _hom_coefficient(config, "perpendicular"), efficiency_weighted)


# --- blocked-source statistics and the orthogonal benchmark -------------------------

def _pow_diff(b: float, d: float, n: int) -> float:
    """b**n - (b - d)**n for 0 <= d <= b, without cancellation."""
    if n == 0 or d <= 0.0:
        return 0.0
    if d >= b:
        return b ** n
    return b ** n * -math.expm1(n * math.log1p(-d / b))


def _signal_patterns(n: int, a1: float, a2: float) -> tuple[float, float, float, float]:
    """P(D1, D2 clicks) for n signal photons, each detected at D1 w.p. a1 or D2 w.p. a2."""
    lost = 1.0 - a1 - a2
    none = lost ** n
    only1 = _pow_diff(1.0 - a2, a1, n)
    only2 = _pow_diff(1.0 - a1, a2, n)
    both = 0.0
    if n >= 2 and a1 > 0 and a2 > 0:
        for k in range(1, n):
            both += math.comb(n, k) * a1 ** k * _pow_diff(1.0 - a1, a2, n - k)
    return none, only1, only2, both


def apply_dark_counts(probs: np.ndarray, dark_count: float) -> np.ndarray:
    """OR independent per-detector dark clicks (probability ``dark_count`` per trial) into a distribution."""
    if dark_count == 0:
        return np.asarray(probs, dtype=float).copy()
    nd = int(round(math.log2(len(probs))))
    out = np.zeros(len(probs))
    for x, px in enumerate(probs):
        if px == 0:
            continue
        free = [i for i in range(nd) if not x >> i & 1]
        for k in range(1 << len(free)):
            y = x
            nk = 0
            for j, i in enumerate(free):
                if k >> j & 1:
                    y |= 1 << i
                    nk += 1
            out[y] += px * dark_count ** nk * (1 - dark_count) ** (len(free) - nk)
    return out


def site_click_distribution(config: ExperimentConfig, site: str, dark_count: float = 0.0) -> np.ndarray:
    """Exact 16-outcome click distribution with only ``site`` active.

    Pattern bit i set means detector ``DETECTORS[i]`` clicked. The source
    emits n pairs with probability (1 - x) x^n, x = tanh^2 r; given n, each
    signal photon reaches D1 or D2 independently and each idler photon is
    detected independently. All terms are summed as non-negative
    contributions so that small coincidence probabilities stay accurate.
    """
    idx = {"A": 0, "B": 1}[site]
    p = config.site_params[idx]
    R, T = config.reflectance, config.transmittance
    x = math.tanh(p.squeeze_parameter) ** 2
    to_d1, to_d2 = (T, R) if site == "A" else (R, T)
    a1, a2 = p.epsilon * to_d1, p.epsilon * to_d2
    eta = idler_efficiency(config, p)
    idler_bit = 2 if site == "A" else 3
    probs = np.zeros(16)
    n = 0
    weight = 1.0 - x
    while True:
        sig = _signal_patterns(n, a1, a2)
        idle_off = (1.0 - eta) ** n
        idle_on = _pow_diff(1.0, eta, n)
        for s_pat, ps in enumerate(sig):
            probs[s_pat] += weight * ps * idle_off
            probs[s_pat | 1 << idler_bit] += weight * ps * idle_on
        n += 1
        weight *= x
        if weight < 1e-30 * (1.0 - x) or n > 5000:
            break
    return apply_dark_counts(probs, dark_count)


def or_combine(dist_a: np.ndarray, dist_b: np.ndarray) -> np.ndarray:
    """Click distribution of two independent, mutually non-interfering fields."""
    out = np.zeros(len(dist_a))
    for x, px in enumerate(dist_a):
        for y, py in enumerate(dist_b):
            out[x | y] += px * py
    return out


def blocked_site_statistics(config: ExperimentConfig, dark_count: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    return (site_click_distribution(config, "A", dark_count),
            site_click_distribution(config, "B", dark_count))


def w_perp_benchmark(config: ExperimentConfig, singles_stats) -> float:
    """Four-fold rate expected from the two sources without interference.

    ``singles_stats`` is a pair of 16-outcome click distributions measured
    with B blocked and with A blocked. The sources are independent and their
    fields do not interfere, so each detector fires if either run fires it;
    the benchmark is the probability that the combined pattern has all four
    detectors clicking.
    """
    if singles_stats is None or len(singles_stats) != 2 or any(s is None for s in singles_stats):
        raise MissingStatisticsError("blocked-run statistics for both sites are required")
    dist_a, dist_b = (np.asarray(s, dtype=float) for s in singles_stats)
    return float(or_combine(dist_a, dist_b)[15])


@dataclass(frozen=True)
class RatePrediction:
    two_fold_parallel: float
    two_fold_perp: float
    four_fold_parallel: float
    four_fold_perp: float
    w_perp: float
    p1: float
    visibility_two_fold: float
    visibility_four_fold: float


def predict(config: ExperimentConfig, dark_count: float = 0.0) -> RatePrediction:
    """All analytic observables for one configuration.

    Two-fold rates are the integrated correlation functions (mode-amplitude
    units, wavepacket overlap included); four-fold rates and the benchmark are
    detection probabilities.
    """
    r_par = integrated_g12(config, True)
    r_perp = integrated_g12(config, False)
    f_par = four_fold_parallel(config)
    f_perp = four_fold_perpendicular(config)
    w = w_perp_benchmark(config, blocked_site_statistics(config, dark_count))
    return RatePrediction(
        two_fold_parallel=r_par,
        two_fold_perp=r_perp,
        four_fold_parallel=f_par,
        four_fold_perp=f_perp,
        w_perp=w,
        p1=p1(config),
        visibility_two_fold=1 - r_par / r_perp if r_perp else float("nan"),
        visibility_four_fold=1 - f_par / w if w else float("nan"),
    )
