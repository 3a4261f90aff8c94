"""Parameter records shared by the analytic, Fock-space and sampling layers."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

import numpy as np

# cos^2(eta) quoted for the 85Rb D1 write scheme; used as the configuration default.
DEFAULT_COS2_ETA = Fraction(91, 122)
DEFAULT_COS_ETA = math.sqrt(DEFAULT_COS2_ETA)
DEFAULT_DELTA_T = 100e-9
DEFAULT_TAU_C = 30e-6
DEFAULT_EPSILON = 0.06
DEFAULT_RETRIEVAL = 0.5
DEFAULT_IDLER_EPSILON = 0.06
DEFAULT_WIDTH = 50e-9

SHAPES = ("gaussian", "square", "custom")
POLARIZATIONS = ("parallel", "perpendicular")


class ParameterError(ValueError):
    pass


def _simpson_segment_nodes(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Simpson nodes/weights on [a, b] with ``n`` (even) panels."""
    x = np.linspace(a, b, n + 1)
    h = (b - a) / n
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return x, w * h / 3.0


def simpson_rule(breakpoints, panels_per_segment: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Simpson rule over consecutive breakpoint segments."""
    xs, ws = [], []
    bp = np.unique(np.asarray(breakpoints, dtype=float))
    for a, b in zip(bp[:-1], bp[1:]):
        x, w = _simpson_segment_nodes(a, b, panels_per_segment)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


@dataclass(frozen=True, eq=False)
class Wavepacket:
    """Temporal mode function phi(t), normalized so that the integral of |phi|^2 is 1.

    ``width`` is the intensity standard deviation for a gaussian, the full
    duration for a square pulse, and the span of the sample grid for a custom
    profile (the grid is centred on ``center``). Custom profiles are linearly
    interpolated and vanish outside the grid.
    """

    shape: str = "gaussian"
    center: float = 0.0
    width: float = DEFAULT_WIDTH
    samples: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ParameterError(f"unknown wavepacket shape {self.shape!r}")
        if not self.width > 0:
            raise ParameterError("wavepacket width must be positive")
        if self.shape == "custom":
            if self.samples is None or len(self.samples) < 2:
                raise ParameterError("custom wavepacket needs at least two samples")
            s = np.asarray(self.samples, dtype=complex).copy()
            object.__setattr__(self, "samples", s)
            norm = self._custom_norm()
            if norm == 0:
                raise ParameterError("custom wavepacket is identically zero")
            if abs(norm - 1.0) > 1e-9:
                warnings.warn(f"custom wavepacket norm {norm:.6g} renormalized to 1", stacklevel=3)
                object.__setattr__(self, "samples", s / math.sqrt(norm))

    def _grid(self) -> np.ndarray:
        return np.linspace(self.center - self.width / 2, self.center + self.width / 2, len(self.samples))

    def _custom_norm(self) -> float:
        # |phi|^2 is quadratic on each linear segment, so Simpson per segment is exact
        x, w = simpson_rule(self._grid(), 2)
        return float(np.sum(w * np.abs(self(x)) ** 2))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.shape == "gaussian":
            s = self.width
            return ((2 * np.pi * s * s) ** -0.25 * np.exp(-((t - self.center) ** 2) / (4 * s * s))).astype(complex)
        if self.shape == "square":
            lo, hi = self.center - self.width / 2, self.center + self.width / 2
            return np.where((t >= lo) & (t <= hi), 1.0 / math.sqrt(self.width), 0.0).astype(complex)
        grid = self._grid()
        re = np.interp(t, grid, self.samples.real, left=0.0, right=0.0)
        im = np.interp(t, grid, self.samples.imag, left=0.0, right=0.0)
        return re + 1j * im

    def support(self) -> tuple[float, float]:
        """Interval outside which phi is negligible (gaussian: +-6 widths)."""
        if self.shape == "gaussian":
            return self.center - 6 * self.width, self.center + 6 * self.width
        return self.center - self.width / 2, self.center + self.width / 2

    def breakpoints(self) -> list[float]:
        """Points where phi is not smooth; quadrature segments end here."""
        if self.shape == "custom":
            return list(self._grid())
        return list(self.support())

    def same_mode(self, other: "Wavepacket") -> bool:
        if self.shape != other.shape or self.center != other.center or self.width != other.width:
            return False
        if self.shape == "custom":
            return len(self.samples) == len(other.samples) and bool(np.all(self.samples == other.samples))
        return True


@dataclass(frozen=True)
class EnsembleParams:
    """One atomic-ensemble source and the efficiencies of its two detection paths."""

    chi: float
    cos_eta: float = DEFAULT_COS_ETA
    epsilon: float = DEFAULT_EPSILON
    retrieval_efficiency: float = DEFAULT_RETRIEVAL
    idler_epsilon: float = DEFAULT_IDLER_EPSILON
    tau_c: float = DEFAULT_TAU_C
    wavepacket: Wavepacket = field(default_factory=Wavepacket)
    mode_amplitude: float = 1.0

    def __post_init__(self):
        if not (-1.0 <= self.cos_eta <= 1.0):
            raise ParameterError("cos_eta must lie in [-1, 1]")
        for name in ("epsilon", "retrieval_efficiency", "idler_epsilon"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"{name} = {v} outside [0, 1]")
        if not self.tau_c > 0:
            raise ParameterError("tau_c must be positive")

    @property
    def squeeze_parameter(self) -> float:
        """r = chi cos(eta), the two-mode squeezing of signal and spin wave."""
        return self.chi * self.cos_eta

    @property
    def s2(self) -> float:
        return math.sinh(self.squeeze_parameter) ** 2

    def blocked(self) -> "EnsembleParams":
        return replace(self, chi=0.0)

    @classmethod
    def from_s2(cls, s2: float, **kw) -> "EnsembleParams":
        cos_eta = kw.get("cos_eta", DEFAULT_COS_ETA)
        return cls(chi=math.asinh(math.sqrt(s2)) / cos_eta, **kw)


@dataclass(frozen=True)
class ExperimentConfig:
    """Two sources, the signal beamsplitter and the write/read timing."""

    site_params: tuple[EnsembleParams, EnsembleParams]
    reflectance: float = 0.5
    polarization_config: str = "parallel"
    delta_t: float = DEFAULT_DELTA_T

    def __post_init__(self):
        if not 0.0 <= self.reflectance <= 1.0:
            raise ParameterError(f"reflectance = {self.reflectance} outside [0, 1]")
        if self.polarization_config not in POLARIZATIONS:
            raise ParameterError(f"unknown polarization configuration {self.polarization_config!r}")
        if self.delta_t < 0:
            raise ParameterError("delta_t must be non-negative")
        if len(self.site_params) != 2:
            raise ParameterError("exactly two sites are required")
        object.__setattr__(self, "site_params", tuple(self.site_params))

    @property
    def transmittance(self) -> float:
        return 1.0 - self.reflectance

    @property
    def site_a(self) -> EnsembleParams:
        return self.site_params[0]

    @property
    def site_b(self) -> EnsembleParams:
        return self.site_params[1]

    def with_polarization(self, polarization: str) -> "ExperimentConfig":
        return replace(self, polarization_config=polarization)

    def with_sites(self, a: EnsembleParams, b: EnsembleParams) -> "ExperimentConfig":
        return replace(self, site_params=(a, b))

    def blocked(self, site: str) -> "ExperimentConfig":
        """Configuration with the MOT at ``site`` ('A' or 'B') removed."""
        a, b = self.site_params
        if site == "A":
            a = a.blocked()
        elif site == "B":
            b = b.blocked()
        else:
            raise ParameterError(f"unknown site {site!r}")
        return self.with_sites(a, b)


def symmetric_config(s2: float, reflectance: float = 0.5, polarization: str = "parallel",
                     delta_t: float = DEFAULT_DELTA_T, **site_kw) -> ExperimentConfig:
    """Two identical sites with signal excitation probability ``s2``."""
    site = EnsembleParams.from_s2(s2, **site_kw)
    return ExperimentConfig((site, site), reflectance, polarization, delta_t)
