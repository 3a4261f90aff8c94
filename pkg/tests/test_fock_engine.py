import math
import warnings

import numpy as np
import pytest
from scipy.linalg import expm

from memhom.fock_engine import (
    EXPERIMENT_DETECTORS,
    Beamsplitter,
    FockEngineError,
    Loss,
    ModeRegistry,
    OpticalCircuit,
    PolarizationRotation,
    TruncationWarning,
    TwoModeSqueezer,
    apply_beamsplitter,
    apply_loss,
    apply_polarization_rotation,
    apply_two_mode_squeezer,
    basis_state,
    beamsplitter_matrix,
    build_experiment_state,
    click_probabilities,
    dump_state,
    experiment_circuit,
    experiment_click_distribution,
    state_from_amplitudes,
    squeezer_matrix,
    thermal_tail,
    vacuum,
)
from memhom.params import symmetric_config


def ladder(d):
    return np.diag(np.sqrt(np.arange(1, d)), 1)


def expm_squeezer(r, cutoff, pad=60):
    """Matrix exponential of r (a^dag b^dag - a b) in a much larger space, projected to the cutoff.

    The generator conserves n_a - n_b, so each difference sector is exponentiated separately.
    """
    d = cutoff + 1
    out = np.zeros((d * d, d * d))
    for k in range(-cutoff, cutoff + 1):
        base = (max(k, 0), max(-k, 0))
        size = d + pad
        gen = np.zeros((size, size))
        for j in range(size - 1):
            na, nb = base[0] + j, base[1] + j
            gen[j + 1, j] = math.sqrt((na + 1) * (nb + 1))
        U = expm(r * (gen - gen.T))
        for i in range(size):
            for j in range(size):
                a_out, b_out = base[0] + i, base[1] + i
                a_in, b_in = base[0] + j, base[1] + j
                if max(a_out, b_out, a_in, b_in) <= cutoff:
                    out[a_out * d + b_out, a_in * d + b_in] = U[i, j]
    return out


def two_mode(cutoff=4):
    return ModeRegistry(("a", "b"), cutoff)


# --- basics ---------------------------------------------------------------------------

def test_registry_validation():
    with pytest.raises(FockEngineError):
        ModeRegistry(("a", "a"))
    with pytest.raises(FockEngineError):
        ModeRegistry(("a",), cutoff=1)
    with pytest.raises(FockEngineError):
        ModeRegistry(("a",)).index("b")


def test_vacuum():
    reg = ModeRegistry(("a", "b", "c"), 3)
    v = vacuum(reg)
    assert v.norm == 1.0
    assert all(v.mean_photon_number(m) == 0 for m in reg.labels)
    assert np.array_equal(OpticalCircuit(()).apply(v).amplitudes, v.amplitudes)
    dist = click_probabilities(v, {"x": ("a",), "y": ("b", "c")})
    assert dist.probs[0] == 1.0


@pytest.mark.parametrize("r", [0.05, 0.2, 0.5, 0.9])
@pytest.mark.parametrize("cutoff", [2, 4, 8])
def test_squeezer_matrix_matches_expm(r, cutoff):
    assert np.max(np.abs(squeezer_matrix(r, cutoff) - expm_squeezer(r, cutoff))) < 1e-12


@pytest.mark.parametrize("r", [0.1, 0.3, 0.5])
def test_tmsv_statistics(r):
    s = apply_two_mode_squeezer(vacuum(two_mode(8)), "a", "b", r)
    p = s.probabilities[...]
    for n in range(9):
        for m in range(9):
            expect = math.tanh(r) ** (2 * n) / math.cosh(r) ** 2 if n == m else 0.0
            assert abs(p[n, m] - expect) < 1e-14
    assert s.norm_deficit == pytest.approx(thermal_tail(r, 8), rel=1e-9)
    # marginal mean photon number within truncation
    marg = s.marginal(["a"])
    assert np.dot(np.arange(9), marg) == pytest.approx(math.sinh(r) ** 2, abs=2e-5)


def test_mean_photon_number_expm_oracle_cutoff_8():
    r = 0.3
    s = apply_two_mode_squeezer(vacuum(two_mode(8)), "a", "b", r)
    psi = expm_squeezer(r, 8)[:, 0]
    occ = np.repeat(np.arange(9), 9)
    assert s.mean_photon_number("a") == pytest.approx(np.sum(occ * np.abs(psi) ** 2), abs=1e-13)


def test_squeezer_zero_and_errors():
    v = vacuum(two_mode())
    assert apply_two_mode_squeezer(v, "a", "b", 0.0) is v
    with pytest.raises(FockEngineError):
        apply_two_mode_squeezer(v, "a", "a", 0.1)


def test_squeezer_pairwise_emission():
    reg = ModeRegistry(("a", "b", "c"), 5)
    s = apply_two_mode_squeezer(vacuum(reg), "a", "c", 0.4)
    p = s.probabilities
    n = np.arange(6)
    mismatch = (n[:, None, None] != n[None, None, :]) | (n[None, :, None] > 0)
    assert np.all(p[mismatch] == 0)


def test_leakage_shrinks_with_cutoff():
    r = 0.4
    def deficit(c):
        return apply_two_mode_squeezer(vacuum(two_mode(c)), "a", "b", r).norm_deficit
    for c in (3, 4, 5):
        d1, d2 = deficit(c), deficit(2 * c)
        predicted = thermal_tail(r, 2 * c) / thermal_tail(r, c)
        assert d2 <= d1 * predicted * (1 + 1e-6)


# --- beamsplitter ---------------------------------------------------------------------

def test_hom_dip():
    s = apply_beamsplitter(basis_state(two_mode(), {"a": 1, "b": 1}), "a", "b", 0.5)
    assert s.probabilities[1, 1] < 1e-30
    assert s.probabilities[2, 0] == pytest.approx(0.5, abs=1e-15)
    assert s.probabilities[0, 2] == pytest.approx(0.5, abs=1e-15)


def test_single_photon_split():
    s = apply_beamsplitter(basis_state(two_mode(), {"a": 1}), "a", "b", 0.5)
    assert s.probabilities[1, 0] == pytest.approx(0.5, abs=1e-15)
    assert s.probabilities[0, 1] == pytest.approx(0.5, abs=1e-15)
    s = apply_beamsplitter(basis_state(two_mode(), {"a": 1}), "a", "b", 0.3)
    assert s.probabilities[0, 1] == pytest.approx(0.3, abs=1e-15)


def test_beamsplitter_identity_and_errors():
    st = basis_state(two_mode(), {"a": 2, "b": 1})
    out = apply_beamsplitter(st, "a", "b", 0.0)
    assert np.allclose(np.abs(out.amplitudes), np.abs(st.amplitudes), atol=1e-15)
    with pytest.raises(FockEngineError):
        apply_beamsplitter(st, "a", "b", 1.2)
    with pytest.raises(FockEngineError):
        apply_beamsplitter(st, "a", "a", 0.5)


def test_beamsplitter_matrix_against_expm():
    # [[sqrt T, sqrt R], [sqrt R, -sqrt T]] = reflection; build from generator and a parity flip
    R = 0.3
    theta = math.asin(math.sqrt(R))
    D = 12
    a = ladder(D)
    A, B = np.kron(a, np.eye(D)), np.kron(np.eye(D), a)
    rot = expm(theta * (B.T @ A - A.T @ B))
    parity_b = np.kron(np.eye(D), np.diag((-1.0) ** np.arange(D)))
    U = rot @ parity_b
    d = 5
    keep = [i * D + j for i in range(d) for j in range(d)]
    M = beamsplitter_matrix(R, 4)
    # compare on number-conserving blocks that stay inside the cutoff
    for n1 in range(d):
        for n2 in range(d):
            if n1 + n2 > 4:
                continue
            col_e = U[np.ix_(keep, [n1 * D + n2])].ravel()
            col_m = M[:, n1 * d + n2]
            assert np.max(np.abs(col_e - col_m)) < 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_passive_elements_conserve_photon_number(seed):
    rng = np.random.default_rng(seed)
    reg = two_mode(4)
    amps = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    n_tot = np.add.outer(np.arange(5), np.arange(5))
    amps[n_tot > 4] = 0
    amps /= np.linalg.norm(amps)
    st = state_from_amplitudes(reg, amps)
    for op in (lambda s: apply_beamsplitter(s, "a", "b", rng.uniform()),
               lambda s: apply_polarization_rotation(s, "a", "b", rng.uniform(0, 2 * math.pi))):
        out = op(st)
        assert out.norm == pytest.approx(1.0, abs=1e-13)
        for N in range(5):
            assert np.sum(out.probabilities[n_tot == N]) == pytest.approx(np.sum(st.probabilities[n_tot == N]),
                                                                          abs=1e-13)


def test_half_wave_rotation_maps_h_to_v():
    reg = ModeRegistry(("H", "V"), 3)
    out = apply_polarization_rotation(basis_state(reg, {"H": 2}), "H", "V", math.pi / 2)
    assert out.probabilities[0, 2] == pytest.approx(1.0, abs=1e-15)


# --- loss -----------------------------------------------------------------------------

@pytest.mark.parametrize("t", [0.0, 0.13, 0.5, 0.87, 1.0])
def test_single_photon_thinning(t):
    reg = ModeRegistry(("a",), 3)
    for method in ("deferred", "kraus", "purify"):
        st = apply_loss(basis_state(reg, {"a": 1}), "a", t, method)
        p = click_probabilities(st, {"D": ("a",)}).probs
        assert abs(p[1] - t) < 1e-12
        assert abs(p[0] - (1 - t)) < 1e-12


def test_loss_errors():
    st = vacuum(ModeRegistry(("a",), 2))
    with pytest.raises(FockEngineError):
        apply_loss(st, "a", 1.5)
    with pytest.raises(FockEngineError):
        apply_loss(st, "a", 0.5, method="magic")


def _random_state(rng, cutoff=6):
    d = cutoff + 1
    amps = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return state_from_amplitudes(two_mode(cutoff), amps / np.linalg.norm(amps))


@pytest.mark.parametrize("seed", range(6))
def test_loss_then_detection_is_binomial_thinning(seed):
    rng = np.random.default_rng(seed)
    st = _random_state(rng)
    ta, tb = rng.uniform(size=2)
    P = st.probabilities
    n = np.arange(7)
    # direct thinning of the exact photon statistics
    no_a = (1 - ta) ** n
    no_b = (1 - tb) ** n
    expect = np.array([
        no_a @ P @ no_b,
        (1 - no_a) @ P @ no_b,
        no_a @ P @ (1 - no_b),
        (1 - no_a) @ P @ (1 - no_b),
    ])
    for method in ("deferred", "kraus", "purify"):
        s = apply_loss(apply_loss(st, "a", ta, method), "b", tb, method)
        got = click_probabilities(s, {"A": ("a",), "B": ("b",)}).probs
        assert np.max(np.abs(got - expect)) < 1e-12


def test_total_loss_is_vacuum_for_detection():
    st = apply_two_mode_squeezer(vacuum(two_mode()), "a", "b", 0.5)
    st = apply_loss(st, "a", 0.0)
    dist = click_probabilities(st, {"A": ("a",), "B": ("b",)})
    assert dist.all_click("A") == 0.0


def test_loss_methods_agree_through_circuit():
    """Pair source, loss on the signal, signal split against vacuum: three loss models."""
    reg = ModeRegistry(("s", "i", "v"), 5)
    results = []
    for method in ("deferred", "kraus", "purify"):
        st = apply_two_mode_squeezer(vacuum(reg), "s", "i", 0.35)
        st = apply_loss(st, "s", 0.7, method)
        st = apply_loss(st, "i", 0.4, method)
        st = apply_beamsplitter(st, "s", "v", 0.5)
        dist = click_probabilities(st, {"D1": ("s",), "D2": ("v",), "D3": ("i",)})
        results.append(dist.probs)
    for p in results[1:]:
        assert np.max(np.abs(p - results[0])) < 1e-10
    assert results[0][3] > 0


def test_unequal_deferred_loss_before_beamsplitter_is_materialized():
    reg = two_mode(4)
    st = basis_state(reg, {"a": 1, "b": 1})
    a = apply_beamsplitter(apply_loss(apply_loss(st, "a", 0.3), "b", 0.8), "a", "b", 0.5)
    b = apply_beamsplitter(apply_loss(apply_loss(st, "a", 0.3, "kraus"), "b", 0.8, "kraus"), "a", "b", 0.5)
    det = {"x": ("a",), "y": ("b",)}
    assert np.max(np.abs(click_probabilities(a, det).probs - click_probabilities(b, det).probs)) < 1e-14


# --- detection ------------------------------------------------------------------------

def test_detector_sums_modes_and_rejects_overlap():
    reg = ModeRegistry(("h", "v", "x"), 2)
    st = basis_state(reg, {"v": 1})
    assert click_probabilities(st, {"D": ("h", "v")}).pattern(["D"]) == 1.0
    with pytest.raises(FockEngineError):
        click_probabilities(st, {"D": ("h", "v"), "E": ("v",)})


def test_pattern_bits_follow_detector_order():
    reg = ModeRegistry(("a", "b", "c"), 2)
    st = basis_state(reg, {"b": 1})
    dist = click_probabilities(st, {"X": ("a",), "Y": ("b",), "Z": ("c",)})
    assert dist.probs[0b010] == 1.0
    assert dist.pattern(["Y"]) == 1.0


def test_leakage_reported():
    st = apply_two_mode_squeezer(vacuum(two_mode(3)), "a", "b", 0.6)
    dist = click_probabilities(st, {"A": ("a",)})
    assert dist.leakage == pytest.approx(thermal_tail(0.6, 3), rel=1e-9)
    assert dist.probs.sum() == pytest.approx(1 - dist.leakage, abs=1e-14)


# --- experiment -----------------------------------------------------------------------

def test_circuits_differ_only_by_half_wave_plate():
    cfg = symmetric_config(0.05)
    par = experiment_circuit(cfg).elements
    perp = experiment_circuit(cfg.with_polarization("perpendicular")).elements
    extra = [e for e in perp if e not in par]
    assert extra == [PolarizationRotation(math.pi / 2, "B.signal.H", "B.signal.V")]
    assert [e for e in perp if e in par] == list(par)


def test_blocked_sources_give_no_clicks():
    cfg = symmetric_config(0.05).blocked("A").blocked("B")
    dist = experiment_click_distribution(cfg)
    assert dist.probs[0] == 1.0
    assert np.all(dist.probs[1:] == 0)


def test_two_fold_ratio_tends_to_two_thirds():
    devs = []
    for s2 in (0.04, 0.01, 0.0025):
        cfg = symmetric_config(s2)
        par = experiment_click_distribution(cfg).all_click("D1", "D2")
        perp = experiment_click_distribution(cfg.with_polarization("perpendicular")).all_click("D1", "D2")
        devs.append(abs(par / perp - 2 / 3))
    assert devs[0] > devs[1] > devs[2]
    assert devs[2] < 1e-4


def test_single_source_two_fold_is_multiphoton_term():
    """B blocked: D1 & D2 coincidences come from A's pair emission only."""
    for R in (0.3, 0.5):
        cfg = symmetric_config(0.01, reflectance=R, epsilon=0.02).blocked("B")
        p = experiment_click_distribution(cfg, cutoff=6).all_click("D1", "D2")
        a = cfg.site_a
        w = a.epsilon * a.s2
        assert p == pytest.approx(2 * R * (1 - R) * w * w, rel=3 * a.s2 + 0.05)


def test_build_warns_for_small_cutoff():
    cfg = symmetric_config(1.0)
    with pytest.warns(TruncationWarning):
        build_experiment_state(cfg, cutoff=2)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        build_experiment_state(symmetric_config(0.05), cutoff=4)


def test_experiment_detectors_and_norm():
    st = build_experiment_state(symmetric_config(0.05), cutoff=4)
    assert set(EXPERIMENT_DETECTORS) == {"D1", "D2", "D3", "D4"}
    assert st.norm <= 1 + 1e-12
    assert st.norm_deficit >= -1e-12


def test_dump_format_golden():
    reg = ModeRegistry(("a", "b"), 2)
    st = apply_beamsplitter(basis_state(reg, {"a": 1}), "a", "b", 0.5)
    text = dump_state(apply_loss(st, "b", 0.5), threshold=1e-15)
    h = f"{math.sqrt(0.5):.12e}"
    assert text == (
        "# modes: a b\n"
        "# cutoff: 2\n"
        "# transmission: 1 0.5\n"
        "branch 0\n"
        f"(0,1) {h} {0.0:.12e}\n"
        f"(1,0) {h} {0.0:.12e}\n"
    )


def test_circuit_elements_compose():
    reg = ModeRegistry(("a", "b"), 10)
    circ = OpticalCircuit([TwoModeSqueezer(0.2, "a", "b"), Loss(0.5, "a"), Beamsplitter(0.0, "a", "b")])
    st = circ.apply(vacuum(reg))
    assert st.mean_photon_number("a") == pytest.approx(0.5 * math.sinh(0.2) ** 2, rel=1e-12)
