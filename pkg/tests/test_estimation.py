import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heraldsim.estimation import (
    CalibrationRecord,
    DegenerateVarianceError,
    EmptyTrialError,
    count_coincidences,
    count_triples,
    estimate_transmission,
    fano_factor_conditional,
    g2_heralded,
    klyshko,
    measure_heralding_fidelity,
    precision_report,
    probe_photon_count,
    window_mask,
)
from heraldsim.experiment import measure
from heraldsim.model import CoincidenceConfig, DetectorConfig, TrialCounts, desk_config
from heraldsim.montecarlo import run_experiment

from oracles import is_unambiguous, max_matching, random_instance

NS = 1e-9
W30 = CoincidenceConfig(window_s=30 * NS, nominal_offset_s=0.0)
tags = st.lists(st.floats(0, 2e-6, allow_nan=False, allow_subnormal=False), max_size=40, unique=True).map(sorted)


def test_coincidence_examples():
    assert count_coincidences([100 * NS], [110 * NS], W30) == 1
    assert count_coincidences([100 * NS], [130 * NS], W30) == 0
    assert count_coincidences([], [110 * NS], W30) == 0


def test_unsorted_rejected():
    with pytest.raises(ValueError):
        count_coincidences([2.0, 1.0], [1.0], W30)


@settings(max_examples=300, deadline=None)
@given(a=tags, b=tags, off=st.floats(-40 * NS, 40 * NS))
def test_swap_symmetry_and_bound(a, b, off):
    fwd = CoincidenceConfig(30 * NS, off)
    rev = CoincidenceConfig(30 * NS, -off)
    n = count_coincidences(a, b, fwd)
    assert n <= min(len(a), len(b))
    # boundary ties differ between the swapped half-open windows; none occur for generic floats
    d = np.subtract.outer(np.array(b), np.array(a)).ravel() - off if a and b else np.array([])
    if not np.any(np.isclose(np.abs(d), 15 * NS, rtol=0, atol=1e-18)):
        assert n == count_coincidences(b, a, rev)


@settings(max_examples=200, deadline=None)
@given(a=tags, b=tags, shift=st.floats(0, 1e-3))
def test_shift_invariance(a, b, shift):
    n = count_coincidences(a, b, W30)
    # shifting can move a difference across a window edge by one rounding step; skip those
    d = np.subtract.outer(np.array(b), np.array(a)).ravel() if a and b else np.array([])
    if np.all(np.abs(np.abs(d) - 15 * NS) > 1e-15):
        assert count_coincidences(np.array(a) + shift, np.array(b) + shift, W30) == n


def test_greedy_equals_bruteforce_on_random_instances():
    rng = np.random.default_rng(2024)
    seen = {"unambiguous": 0, "ambiguous": 0}
    while min(seen.values()) < 300:
        a, b = random_instance(rng)
        n = count_coincidences(a, b, W30)
        best = max_matching(a, b, 0.0, 30 * NS)
        if is_unambiguous(a, b, 0.0, 30 * NS):
            assert n == best
            seen["unambiguous"] += 1
        else:
            assert n <= best
            seen["ambiguous"] += 1


def test_window_mask_allows_sharing():
    # one B tag inside two heralds' windows: both windows see it
    assert window_mask([0.0, 5 * NS], [10 * NS], W30).tolist() == [True, True]
    assert window_mask([0.0], [20 * NS], W30).tolist() == [False]
    assert count_triples([0.0, 1e-6], [5 * NS], [1 * NS, 1e-6 + 2 * NS], W30) == (1, 2, 1)


@pytest.mark.parametrize("args, expected", [((44, 100), 0.44), ((0, 100), 0.0), ((90, 100), 0.90)])
def test_klyshko(args, expected):
    assert klyshko(*args) == pytest.approx(expected)


def test_klyshko_empty():
    with pytest.raises(EmptyTrialError):
        klyshko(0, 0)


@pytest.mark.parametrize("k, expected", [(0.19, 0.5), (0.38, 1.0), (0.3686, 0.97)])
def test_estimate_transmission(k, expected):
    cal = CalibrationRecord(0.38, 100, 0.001)
    assert estimate_transmission(k, cal) == pytest.approx(expected, rel=1e-12)


def test_estimate_transmission_not_clamped():
    assert estimate_transmission(0.40, CalibrationRecord(0.38, 10, 0.0)) > 1.0
    with pytest.raises(EmptyTrialError):
        estimate_transmission(0.1, CalibrationRecord(0.0, 10, 0.0))


@settings(max_examples=100)
@given(nc=st.integers(0, 1000), ns=st.integers(1, 1000), k=st.integers(1, 50))
def test_estimate_scale_invariance(nc, ns, k):
    cal = CalibrationRecord(0.38, 10, 0.0)
    a = estimate_transmission(klyshko(nc, ns), cal)
    b = estimate_transmission(klyshko(nc * k, ns * k), cal)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-15)


def test_probe_photon_count():
    # 1000 / (0.65 * 1.0 * 0.9) = 1709.4017...
    assert probe_photon_count(1000, 0.65, 1.0, 0.9, 0) == pytest.approx(1709.4017094, rel=1e-9)
    assert probe_photon_count(100, 1, 1, 1, 0) == 100
    assert probe_photon_count(1000, 0.65, 1.0, 0.9, 100) == pytest.approx(1609.4017094, rel=1e-9)
    with pytest.raises(ValueError):
        probe_photon_count(100, 0.0, 1, 1)


@pytest.mark.parametrize("args, expected", [((1000, 100, 100, 10), 1.0), ((1000, 100, 100, 0), 0.0)])
def test_g2_heralded(args, expected):
    assert g2_heralded(*args) == expected


def test_g2_zero_denominator():
    with pytest.raises(EmptyTrialError):
        g2_heralded(1000, 0, 100, 0)


def _binomial_trials(rng, n, p, mean_s=600):
    out = []
    for _ in range(n):
        ns = int(rng.poisson(mean_s))
        nc = int(rng.binomial(ns, p))
        out.append(TrialCounts(ns, nc, 0, nc, 0, 0, 0))
    return out


def test_precision_report_requires_two_trials_and_variance():
    cal = CalibrationRecord(1.0, 10, 0.0)
    det = DetectorConfig(1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        precision_report([TrialCounts(10, 5, 0, 5, 0, 0, 0)], cal, det, 1.0)
    flat = [TrialCounts(10, 5, 0, 5, 0, 0, 0)] * 4
    with pytest.raises(DegenerateVarianceError):
        precision_report(flat, cal, det, 1.0)


def test_precision_report_ideal_binomial_input():
    # perfect heralding at eta=0.5: advantage should approach 1/(1-eta) = 2
    rng = np.random.default_rng(8)
    trials = _binomial_trials(rng, 3000, 0.5)
    rep = precision_report(trials, CalibrationRecord(1.0, 1, 0.0), DetectorConfig(1.0, 0.0, 0.0), 1.0)
    assert rep.advantage == pytest.approx(2.0, abs=3 * rep.advantage_stderr)
    assert rep.eta_hat == pytest.approx(0.5, abs=0.005)
    assert rep.advantage_stderr > 0


def test_perfect_system_simulation_reaches_ideal_curve():
    cfg = desk_config(repetitions=3000).with_transmission(0.5)
    dark0 = DetectorConfig(1.0, 0.0, 0.0)
    cfg = replace(cfg, herald_detector=dark0, idler_detector=dark0,
                  source=replace(cfg.source, pair_rate=2e4, signal_channel_efficiency=1.0),
                  idler_channel=replace(cfg.idler_channel, setup_efficiency=1.0),
                  switch=replace(cfg.switch, off_state_leakage=0.0))
    m = measure(cfg)
    assert m.r_analytic == pytest.approx(2.0, abs=1e-3)
    assert m.report.advantage == pytest.approx(2.0, abs=3 * m.report.advantage_stderr)


def test_uncorrelated_light_has_no_advantage():
    cfg = desk_config(repetitions=400)
    cfg = replace(cfg, source=replace(cfg.source, signal_channel_efficiency=0.0, pair_rate=2e6),
                  herald_detector=replace(cfg.herald_detector, dark_rate=2e5),
                  switch=replace(cfg.switch, enabled=False)).with_transmission(0.7)
    m = measure(cfg)
    assert m.report.advantage <= 1.0 + 3 * m.report.advantage_stderr
    assert m.report.eta_s < 0.1


def test_fano_factor_of_binomial_counts():
    rng = np.random.default_rng(12)
    trials = _binomial_trials(rng, 4000, 0.37)
    f = fano_factor_conditional([t.n_herald for t in trials], [t.n_coincidence for t in trials])
    assert f == pytest.approx(0.63, rel=0.05)


def test_fano_factor_of_poisson_counts_is_one():
    rng = np.random.default_rng(13)
    n_s = rng.poisson(600, 4000)
    n_c = rng.poisson(0.37 * n_s)
    assert fano_factor_conditional(n_s, n_c) == pytest.approx(1.0, rel=0.05)


def test_measured_fidelity_subtracts_darks():
    trials = [TrialCounts(100, 50, 0, 45, 0, 0, 0)] * 3
    assert measure_heralding_fidelity(trials, 0.0) == pytest.approx(0.9)
    assert measure_heralding_fidelity(trials, 5.0) == pytest.approx(1.0)
    with pytest.raises(EmptyTrialError):
        measure_heralding_fidelity(trials, 50.0)
