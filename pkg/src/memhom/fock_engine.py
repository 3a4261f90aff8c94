"""Truncated multi-mode Fock-space engine.

States are dense amplitude arrays over ``cutoff + 1`` occupations per mode
(mixed-radix indexing, one numpy axis per mode) with a leading *branch*
axis. A pure state has one branch; Kraus-style loss turns the state into an
incoherent mixture of branches. Probability mass pushed above the cutoff by
a squeezer or beamsplitter is dropped and shows up in ``norm_deficit``.

Loss is exact in three interchangeable ways:

``deferred`` (default)
    The transmission is recorded per mode and applied when the mode is
    measured, through the lossy no-click operator ``sum_n (1-t)^n |n><n|``.
    Before an operation that does not commute with it, the pending loss is
    materialized by Kraus operators; uniform loss on both inputs of a passive
    two-mode element commutes with it and stays pending.
``kraus``
    Kraus operators ``K_k|n> = sqrt(C(n,k) t^(n-k) (1-t)^k) |n-k>`` spawn branches.
``purify``
    A vacuum ancilla mode is appended and mixed in by a beamsplitter of
    transmittance ``t``; ancillas are never detected, so they are traced out.

Beamsplitter convention: creation operators transform with the real
orthogonal matrix ``[[sqrt(T), sqrt(R)], [sqrt(R), -sqrt(T)]]``, i.e.
input 1 leaves by output 1 with amplitude ``sqrt(T)`` and by output 2 with
``sqrt(R)``; input 2 reaches output 1 with ``sqrt(R)`` and output 2 with
``-sqrt(T)``. The matrix is its own inverse, so Schroedinger and Heisenberg
pictures coincide.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .params import ExperimentConfig


class FockEngineError(ValueError):
    pass


class TruncationWarning(UserWarning):
    pass


LOSS_METHODS = ("deferred", "kraus", "purify")


@dataclass(frozen=True)
class ModeRegistry:
    labels: tuple[str, ...]
    cutoff: int = 4

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(set(self.labels)) != len(self.labels):
            raise FockEngineError(f"duplicate mode labels in {self.labels}")
        if self.cutoff < 2:
            raise FockEngineError("cutoff must be at least 2")

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise FockEngineError(f"mode {label!r} is not registered") from None

    @property
    def dim(self) -> int:
        return self.cutoff + 1

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True, eq=False)
class FockState:
    """Truncated state: ``amplitudes`` has shape ``(branches, d, d, ..., d)``.

    ``transmission[i]`` is the deferred (not yet materialized) loss on mode i.
    """

    registry: ModeRegistry
    amplitudes: np.ndarray
    transmission: np.ndarray

    @property
    def probabilities(self) -> np.ndarray:
        """Occupation-number distribution summed over branches (deferred loss not applied)."""
        return np.sum(np.abs(self.amplitudes) ** 2, axis=0)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    @property
    def norm_deficit(self) -> float:
        return 1.0 - self.norm

    @property
    def n_branches(self) -> int:
        return self.amplitudes.shape[0]

    def mean_photon_number(self, label: str) -> float:
        """<n> of a mode, including its deferred loss."""
        i = self.registry.index(label)
        p = self.probabilities
        marg = p.sum(axis=tuple(j for j in range(p.ndim) if j != i))
        return float(np.dot(np.arange(len(marg)), marg) * self.transmission[i])

    def marginal(self, labels: Sequence[str]) -> np.ndarray:
        """Joint photon-number distribution of ``labels`` (deferred loss not applied)."""
        idx = [self.registry.index(l) for l in labels]
        p = self.probabilities
        rest = tuple(j for j in range(p.ndim) if j not in idx)
        m = p.sum(axis=rest)
        order = sorted(idx)
        return np.transpose(m, [order.index(i) for i in idx])

    def _replace(self, amplitudes=None, transmission=None, registry=None) -> "FockState":
        return FockState(
            self.registry if registry is None else registry,
            self.amplitudes if amplitudes is None else amplitudes,
            self.transmission if transmission is None else transmission,
        )


def vacuum(registry: ModeRegistry) -> FockState:
    amps = np.zeros((1,) + (registry.dim,) * len(registry), dtype=complex)
    amps[(0,) * amps.ndim] = 1.0
    return FockState(registry, amps, np.ones(len(registry)))


def basis_state(registry: ModeRegistry, occupations: Mapping[str, int]) -> FockState:
    """Fock basis state with the given occupations (others vacuum)."""
    idx = [0] * len(registry)
    for label, n in occupations.items():
        if not 0 <= n <= registry.cutoff:
            raise FockEngineError(f"occupation {n} of {label!r} outside the truncation")
        idx[registry.index(label)] = n
    amps = np.zeros((1,) + (registry.dim,) * len(registry), dtype=complex)
    amps[(0, *idx)] = 1.0
    return FockState(registry, amps, np.ones(len(registry)))


def state_from_amplitudes(registry: ModeRegistry, amplitudes: np.ndarray) -> FockState:
    amps = np.asarray(amplitudes, dtype=complex).reshape((1,) + (registry.dim,) * len(registry))
    if np.sum(np.abs(amps) ** 2) > 1 + 1e-12:
        raise FockEngineError("state norm exceeds 1")
    return FockState(registry, amps.copy(), np.ones(len(registry)))


# --- two-mode operator matrices, indexed [(m_a, m_b), (n_a, n_b)] -------------------

@lru_cache(maxsize=256)
def squeezer_matrix(r: float, cutoff: int) -> np.ndarray:
    """Truncation-projected exp(r (a^dag b^dag - a b)), exact matrix elements.

    Uses the disentangled form exp(G a^dag b^dag) cosh(r)^-(n_a+n_b+1) exp(-G a b)
    with G = tanh r. Lowering never leaves the truncated space and raising
    never re-enters it, so projecting each factor separately is exact.
    """
    d = cutoff + 1
    g = math.tanh(r)
    c = 1.0 / math.cosh(r)
    f = [math.factorial(k) for k in range(2 * d)]
    lower = np.zeros((d * d, d * d))
    raise_ = np.zeros((d * d, d * d))
    diag = np.zeros(d * d)
    for na in range(d):
        for nb in range(d):
            col = na * d + nb
            diag[col] = c ** (na + nb + 1)
            for k in range(min(na, nb) + 1):
                lower[(na - k) * d + nb - k, col] = (-g) ** k / f[k] * math.sqrt(
                    f[na] / f[na - k] * f[nb] / f[nb - k])
            for k in range(d - max(na, nb)):
                raise_[(na + k) * d + nb + k, col] = g ** k / f[k] * math.sqrt(
                    f[na + k] / f[na] * f[nb + k] / f[nb])
    return raise_ @ (diag[:, None] * lower)


@lru_cache(maxsize=256)
def _passive_matrix(u: tuple, cutoff: int) -> np.ndarray:
    """Fock representation of a 2x2 mode unitary u with a_i^dag -> sum_j u[j][i] a_j^dag."""
    (u11, u12), (u21, u22) = u
    d = cutoff + 1
    out = np.zeros((d * d, d * d), dtype=complex)
    comb = math.comb
    f = [math.factorial(k) for k in range(2 * d)]
    for n1 in range(d):
        for n2 in range(d):
            N = n1 + n2
            norm = 1.0 / math.sqrt(f[n1] * f[n2])
            for k in range(n1 + 1):
                for l in range(n2 + 1):
                    p = k + l
                    if p > cutoff or N - p > cutoff:
                        continue
                    amp = (comb(n1, k) * comb(n2, l) * u11 ** k * u21 ** (n1 - k)
                           * u12 ** l * u22 ** (n2 - l))
                    out[p * d + N - p, n1 * d + n2] += norm * amp * math.sqrt(f[p] * f[N - p])
    if np.all(out.imag == 0):
        out = out.real.copy()
    return out


def beamsplitter_matrix(R: float, cutoff: int) -> np.ndarray:
    t, r = math.sqrt(1.0 - R), math.sqrt(R)
    return _passive_matrix(((t, r), (r, -t)), cutoff)


def rotation_matrix(angle: float, cutoff: int) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    # a_H^dag -> c a_H^dag + s a_V^dag, a_V^dag -> -s a_H^dag + c a_V^dag
    return _passive_matrix(((c, -s), (s, c)), cutoff)


@lru_cache(maxsize=256)
def kraus_operators(t: float, cutoff: int) -> np.ndarray:
    """Loss Kraus operators, shape (k, n_out, n_in)."""
    d = cutoff + 1
    K = np.zeros((d, d, d))
    for n in range(d):
        for k in range(n + 1):
            K[k, n - k, n] = math.sqrt(math.comb(n, k) * t ** (n - k) * (1.0 - t) ** k)
    return K


def _apply_two_mode(amps: np.ndarray, i: int, j: int, M: np.ndarray) -> np.ndarray:
    d = amps.shape[1]
    psi = np.moveaxis(amps, (i + 1, j + 1), (-2, -1))
    shape = psi.shape
    psi = (psi.reshape(-1, d * d) @ M.T).reshape(shape)
    return np.ascontiguousarray(np.moveaxis(psi, (-2, -1), (i + 1, j + 1)))


def _kraus_branch(state: FockState, i: int, t: float) -> FockState:
    if t == 1.0:
        return state
    K = kraus_operators(float(t), state.registry.cutoff)
    # new leading axis k (lost photons) merged with the branch axis
    out = np.tensordot(K, state.amplitudes, axes=([2], [i + 1]))  # (k, n_out, b, ...)
    out = np.moveaxis(out, 1, i + 2)  # (k, b, ..., n_out at mode i, ...)
    out = out.reshape((-1,) + state.amplitudes.shape[1:])
    keep = np.any(out.reshape(out.shape[0], -1) != 0, axis=1)
    if not keep.any():
        keep[0] = True
    return state._replace(amplitudes=np.ascontiguousarray(out[keep]))


def materialize_loss(state: FockState, label: str, keep: float = 1.0) -> FockState:
    """Turn deferred loss on ``label`` into Kraus branches, leaving ``keep`` pending.

    ``keep`` must be at least the pending transmission (a transmission factor
    cannot exceed 1).
    """
    i = state.registry.index(label)
    t = state.transmission[i]
    if t >= keep:
        return state
    state = _kraus_branch(state, i, t / keep)
    tr = state.transmission.copy()
    tr[i] = keep
    return state._replace(transmission=tr)


def _prepare_passive(state: FockState, i: int, j: int) -> FockState:
    ti, tj = state.transmission[i], state.transmission[j]
    if ti == tj:
        return state
    common = max(ti, tj)
    labels = state.registry.labels
    state = materialize_loss(state, labels[i], common)
    return materialize_loss(state, labels[j], common)


def _two_modes(state: FockState, mode_a: str, mode_b: str) -> tuple[int, int]:
    i, j = state.registry.index(mode_a), state.registry.index(mode_b)
    if i == j:
        raise FockEngineError(f"two-mode element needs distinct modes, got {mode_a!r} twice")
    return i, j


def apply_two_mode_squeezer(state: FockState, mode_a: str, mode_b: str, r: float) -> FockState:
    i, j = _two_modes(state, mode_a, mode_b)
    if r == 0:
        return state
    state = materialize_loss(materialize_loss(state, mode_a), mode_b)
    M = squeezer_matrix(float(r), state.registry.cutoff)
    return state._replace(amplitudes=_apply_two_mode(state.amplitudes, i, j, M))


def apply_passive(state: FockState, mode_1: str, mode_2: str, M: np.ndarray) -> FockState:
    i, j = _two_modes(state, mode_1, mode_2)
    state = _prepare_passive(state, i, j)
    amps = state.amplitudes
    if np.iscomplexobj(M) or np.iscomplexobj(amps):
        amps = amps.astype(complex)
    return state._replace(amplitudes=_apply_two_mode(amps, i, j, M))


def apply_beamsplitter(state: FockState, mode_1: str, mode_2: str, R: float) -> FockState:
    if not 0.0 <= R <= 1.0:
        raise FockEngineError(f"reflectance {R} outside [0, 1]")
    return apply_passive(state, mode_1, mode_2, beamsplitter_matrix(float(R), state.registry.cutoff))


def apply_polarization_rotation(state: FockState, mode_h: str, mode_v: str, angle: float) -> FockState:
    """Rotate the linear polarization at one port by ``angle`` (pi/2 maps H to V)."""
    return apply_passive(state, mode_h, mode_v, rotation_matrix(float(angle), state.registry.cutoff))


def apply_loss(state: FockState, mode: str, transmission: float, method: str = "deferred") -> FockState:
    if not 0.0 <= transmission <= 1.0:
        raise FockEngineError(f"transmission {transmission} outside [0, 1]")
    if method not in LOSS_METHODS:
        raise FockEngineError(f"unknown loss method {method!r}")
    i = state.registry.index(mode)
    if method == "deferred":
        tr = state.transmission.copy()
        tr[i] *= transmission
        return state._replace(transmission=tr)
    if method == "kraus":
        state = materialize_loss(state, mode)
        return _kraus_branch(state, i, float(transmission))
    n_anc = sum(1 for l in state.registry.labels if l.startswith("ancilla:"))
    anc = f"ancilla:{n_anc}:{mode}"
    state = add_mode(state, anc)
    # beamsplitter with T = transmission between the mode and its vacuum ancilla
    return apply_beamsplitter(state, mode, anc, 1.0 - transmission)


def add_mode(state: FockState, label: str) -> FockState:
    """Append a vacuum mode."""
    reg = ModeRegistry(state.registry.labels + (label,), state.registry.cutoff)
    amps = np.zeros(state.amplitudes.shape + (reg.dim,), dtype=state.amplitudes.dtype)
    amps[..., 0] = state.amplitudes
    return FockState(reg, amps, np.append(state.transmission, 1.0))


def relabel(state: FockState, old: str, new: str) -> FockState:
    labels = list(state.registry.labels)
    labels[state.registry.index(old)] = new
    return state._replace(registry=ModeRegistry(tuple(labels), state.registry.cutoff))


# --- circuits -------------------------------------------------------------------------

@dataclass(frozen=True)
class TwoModeSqueezer:
    r: float
    mode_a: str
    mode_b: str

    def apply(self, state: FockState) -> FockState:
        return apply_two_mode_squeezer(state, self.mode_a, self.mode_b, self.r)


@dataclass(frozen=True)
class Beamsplitter:
    R: float
    mode_1: str
    mode_2: str

    def apply(self, state: FockState) -> FockState:
        return apply_beamsplitter(state, self.mode_1, self.mode_2, self.R)


@dataclass(frozen=True)
class PolarizationRotation:
    angle: float
    mode_h: str
    mode_v: str

    def apply(self, state: FockState) -> FockState:
        return apply_polarization_rotation(state, self.mode_h, self.mode_v, self.angle)


@dataclass(frozen=True)
class Loss:
    transmission: float
    mode: str
    method: str = "deferred"

    def apply(self, state: FockState) -> FockState:
        return apply_loss(state, self.mode, self.transmission, self.method)


@dataclass(frozen=True)
class Relabel:
    old: str
    new: str

    def apply(self, state: FockState) -> FockState:
        return relabel(state, self.old, self.new)


Element = Union[TwoModeSqueezer, Beamsplitter, PolarizationRotation, Loss, Relabel]


@dataclass(frozen=True)
class OpticalCircuit:
    elements: tuple[Element, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))

    def apply(self, state: FockState) -> FockState:
        for el in self.elements:
            state = el.apply(state)
        return state


# --- detection ------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ClickDistribution:
    """Joint threshold-detector outcomes.

    ``probs[k]`` is the probability of click pattern ``k``, where bit ``i`` of
    ``k`` set means ``detectors[i]`` clicked. ``leakage`` is the truncation
    deficit; ``probs`` sums to ``1 - leakage``.
    """

    detectors: tuple[str, ...]
    probs: np.ndarray
    leakage: float = 0.0

    def _mask(self, ids: Iterable[str]) -> int:
        m = 0
        for d in ids:
            m |= 1 << self.detectors.index(d)
        return m

    def pattern(self, clicked: Iterable[str]) -> float:
        """Probability that exactly the detectors in ``clicked`` fire."""
        return float(self.probs[self._mask(clicked)])

    def all_click(self, *ids: str) -> float:
        """Probability that every listed detector fires (others unconstrained)."""
        m = self._mask(ids)
        return float(sum(p for k, p in enumerate(self.probs) if k & m == m))

    def normalized(self) -> np.ndarray:
        return self.probs / self.probs.sum()


def _detector_weights(trans: Sequence[float], dim: int) -> np.ndarray:
    """(no-click, click) weights over the joint occupations of one detector's modes."""
    n = np.arange(dim)
    log_dark = np.zeros((dim,) * len(trans))
    vacuum_only = np.zeros((dim,) * len(trans), dtype=bool)
    for k, t in enumerate(trans):
        shape = [1] * len(trans)
        shape[k] = dim
        nk = n.reshape(shape)
        if t >= 1.0:
            vacuum_only = vacuum_only | (nk > 0)
        else:
            log_dark = log_dark + nk * math.log1p(-t)
    no_click = np.where(vacuum_only, 0.0, np.exp(log_dark))
    click = np.where(vacuum_only, 1.0, -np.expm1(log_dark))
    return np.stack([no_click.ravel(), click.ravel()], axis=1)


def click_probabilities(state: FockState, detectors: Mapping[str, Iterable[str]]) -> ClickDistribution:
    """Threshold (on/off) detection; each detector sums over all of its modes.

    A detector's no-click element is ``prod_m sum_n (1 - t_m)^n |n><n|`` over its
    modes, with ``t_m`` the deferred transmission of mode m. Patterns are
    evaluated as sums of non-negative terms, so tiny coincidence
    probabilities keep full relative precision.
    """
    ids = tuple(detectors)
    mode_sets = [tuple(state.registry.index(m) for m in detectors[d]) for d in ids]
    flat = [i for ms in mode_sets for i in ms]
    if len(set(flat)) != len(flat):
        raise FockEngineError("detectors must not share modes")
    p = state.probabilities
    rest = tuple(i for i in range(p.ndim) if i not in flat)
    p = p.sum(axis=rest)
    kept = [i for i in range(state.probabilities.ndim) if i not in rest]
    p = np.transpose(p, [kept.index(i) for i in flat])
    dim = state.registry.dim
    p = p.reshape([dim ** len(ms) for ms in mode_sets])
    for ms in mode_sets:
        W = _detector_weights([state.transmission[i] for i in ms], dim)
        # contract the leading detector axis; its (no-click, click) index goes last
        p = np.tensordot(p, W, axes=([0], [0]))
    # p[b_0, b_1, ...] with b_i = 1 when detector i clicks; pattern bit i <-> b_i
    probs = np.transpose(p, list(range(len(ids)))[::-1]).reshape(-1) if ids else p.reshape(-1)
    return ClickDistribution(ids, probs, leakage=max(state.norm_deficit, 0.0))


def dump_state(state: FockState, threshold: float = 0.0) -> str:
    """Text dump for golden tests.

    Format::

        # modes: <label> <label> ...
        # cutoff: <n>
        # transmission: <t> <t> ...
        branch <k>
        (n1,n2,...) <re> <im>

    Amplitudes with modulus <= ``threshold`` are omitted; occupations are
    listed in lexicographic order.
    """
    lines = [
        "# modes: " + " ".join(state.registry.labels),
        f"# cutoff: {state.registry.cutoff}",
        "# transmission: " + " ".join(f"{t:.12g}" for t in state.transmission),
    ]
    for b, amps in enumerate(state.amplitudes):
        lines.append(f"branch {b}")
        for occ in itertools.product(range(state.registry.dim), repeat=len(state.registry)):
            a = amps[occ]
            if abs(a) > threshold:
                lines.append(f"({','.join(map(str, occ))}) {a.real:.12e} {a.imag:.12e}")
    return "\n".join(lines) + "\n"


# --- the two-site experiment ----------------------------------------------------------

EXPERIMENT_MODES = (
    "A.signal.H", "B.signal.H", "A.signal.V", "B.signal.V", "A.spin", "B.spin",
)
EXPERIMENT_DETECTORS = {
    "D1": ("port1.H", "port1.V"),
    "D2": ("port2.H", "port2.V"),
    "D3": ("A.idler",),
    "D4": ("B.idler",),
}


def memory_transmission(delta_t: float, tau_c: float) -> float:
    """Spin-wave intensity transmission exp(-2 dt / tau_c) over the write/read delay."""
    return math.exp(-2.0 * delta_t / tau_c)


def experiment_circuit(config: ExperimentConfig) -> OpticalCircuit:
    """Circuit for one write/read cycle of both sites.

    The signal of site A enters beamsplitter port 1 and that of site B port 2;
    each port carries an H and a V mode. Only the H-polarized Raman channel is
    modeled (the V channel is removed by the polarizers). In the perpendicular
    configuration a half-wave plate turns B's signal from H to V. The spin
    wave of each site is read out after ``delta_t``; the retrieved idler
    occupies the spin-wave mode, the unread remainder is loss.
    """
    a, b = config.site_params
    el: list[Element] = [
        TwoModeSqueezer(a.squeeze_parameter, "A.signal.H", "A.spin"),
        TwoModeSqueezer(b.squeeze_parameter, "B.signal.H", "B.spin"),
    ]
    if config.polarization_config == "perpendicular":
        el.append(PolarizationRotation(math.pi / 2, "B.signal.H", "B.signal.V"))
    el += [
        Loss(a.epsilon, "A.signal.H"), Loss(a.epsilon, "A.signal.V"),
        Loss(b.epsilon, "B.signal.H"), Loss(b.epsilon, "B.signal.V"),
        Beamsplitter(config.reflectance, "A.signal.H", "B.signal.H"),
        Beamsplitter(config.reflectance, "A.signal.V", "B.signal.V"),
        Relabel("A.signal.H", "port1.H"), Relabel("B.signal.H", "port2.H"),
        Relabel("A.signal.V", "port1.V"), Relabel("B.signal.V", "port2.V"),
    ]
    for site, p in (("A", a), ("B", b)):
        el += [
            Loss(memory_transmission(config.delta_t, p.tau_c), f"{site}.spin"),
            Loss(p.retrieval_efficiency, f"{site}.spin"),
            Relabel(f"{site}.spin", f"{site}.idler"),
            Loss(p.idler_epsilon, f"{site}.idler"),
        ]
    return OpticalCircuit(tuple(el))


def thermal_tail(r: float, cutoff: int) -> float:
    """Probability that a two-mode squeezed vacuum holds more than ``cutoff`` pairs."""
    return math.tanh(r) ** (2 * (cutoff + 1))


def build_experiment_state(config: ExperimentConfig, cutoff: int = 4) -> FockState:
    registry = ModeRegistry(EXPERIMENT_MODES, cutoff)
    for p in config.site_params:
        r = p.squeeze_parameter
        if 3.0 * math.sinh(r) ** 2 > cutoff:
            warnings.warn(
                f"cutoff {cutoff} is small for r = {r:.3g}; "
                f"truncated tail per source ~ {thermal_tail(r, cutoff):.3g}",
                TruncationWarning,
                stacklevel=2,
            )
    return experiment_circuit(config).apply(vacuum(registry))


def experiment_click_distribution(config: ExperimentConfig, cutoff: int = 4) -> ClickDistribution:
    return click_probabilities(build_experiment_state(config, cutoff), EXPERIMENT_DETECTORS)
