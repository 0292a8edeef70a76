import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from heraldsim.analytic import (
    FIGURE_CURVES,
    MixtureState,
    SingularityError,
    advantage_ratio,
    binomial_pmf,
    degraded_precision,
    fock_precision,
    jakeman_condition,
    lossy_fock_state,
    shot_noise_precision,
    sweep_advantage_curve,
)

open_unit = st.floats(1e-6, 1 - 1e-6)


@pytest.mark.parametrize("args, expected", [((0.5, 1, 1), 2.0), ((1.0, 1, 1), 1.0), ((0.25, 2, 3), 24.0)])
def test_shot_noise(args, expected):
    assert shot_noise_precision(*args).value == pytest.approx(expected, rel=1e-15)


def test_shot_noise_singular():
    with pytest.raises(SingularityError):
        shot_noise_precision(0.0)


def test_fock_precision():
    assert fock_precision(0.5, 1, 1).value == 4.0
    assert fock_precision(1.0, 1, 1).divergent
    with pytest.raises(SingularityError):
        fock_precision(0.0)
    ratio = fock_precision(0.5).value / shot_noise_precision(0.5).value
    assert ratio == pytest.approx(1 / (1 - 0.5))


@pytest.mark.parametrize("args, expected", [((1, 1, 0.3), 0.3), ((2, 2, 1.0), 1.0), ((0, 2, 0.5), 0.25)])
def test_binomial_pmf_examples(args, expected):
    assert binomial_pmf(*args) == pytest.approx(expected, abs=1e-15)


def test_binomial_domain():
    with pytest.raises(ValueError):
        binomial_pmf(3, 2, 0.5)


def test_binomial_large_n_is_finite():
    # peak of Binomial(1e6, 0.38) is about 1/sqrt(2 pi n p q)
    n, p = 10**6, 0.38
    k = int(n * p)
    expected = 1 / math.sqrt(2 * math.pi * n * p * (1 - p))
    assert binomial_pmf(k, n, p) == pytest.approx(expected, rel=1e-3)


@pytest.mark.parametrize("n", [1, 10, 100, 1000])
def test_binomial_moments(n):
    eta = 0.37
    probs = [binomial_pmf(k, n, eta) for k in range(n + 1)]
    assert math.fsum(probs) == pytest.approx(1.0, abs=1e-12)
    assert math.fsum(k * p for k, p in enumerate(probs)) == pytest.approx(eta * n, abs=1e-12 * max(n, 1) * 10)


def test_lossy_fock_state():
    assert lossy_fock_state(1.0) == MixtureState(0.0, 1.0)
    assert lossy_fock_state(0.0) == MixtureState(1.0, 0.0)
    st38 = lossy_fock_state(0.38)
    assert st38.p0 == pytest.approx(0.62) and st38.p1 == 0.38
    with pytest.raises(ValueError):
        lossy_fock_state(1.2)


@given(st.floats(0, 1))
def test_mixture_sums_to_one(x):
    m = lossy_fock_state(x)
    assert m.p0 + m.p1 == 1.0


def test_degraded_precision_examples():
    assert degraded_precision(1.0, 0.0, 1.0).value == 1.0
    # 0.90 / (0.97 * (1 - 0.97 * 0.38)) by hand: 0.90 / 0.612458
    assert degraded_precision(0.97, 0.38, 0.90).value == pytest.approx(1.4695, abs=5e-5)
    assert degraded_precision(0.5, 1.0, 1.0).value == pytest.approx(fock_precision(0.5).value)
    with pytest.raises(SingularityError):
        degraded_precision(0.0, 0.5, 0.5)


def test_advantage_ratio_examples():
    assert advantage_ratio(0.97, 0.38, 0.90) == pytest.approx(1.4254, abs=5e-5)
    assert advantage_ratio(1.0, 0.40, 0.60) == 1.0
    assert advantage_ratio(1.0, 0.38, 0.38) == pytest.approx(0.6129, abs=5e-5)
    with pytest.raises(SingularityError):
        advantage_ratio(1.0, 1.0, 1.0)


def test_jakeman_examples():
    assert jakeman_condition(0.44, 0.41) is False
    assert jakeman_condition(0.38 * 0.97, 0.90) is True
    assert jakeman_condition(0.5, 0.5) is False


def test_sweep_examples():
    assert sweep_advantage_curve([0.5], 1.0, 1.0)[0].r_analytic == pytest.approx(2.0)
    assert sweep_advantage_curve([1.0], 0.6, 1.0)[0].r_analytic == pytest.approx(2.5)
    assert sweep_advantage_curve([0.0], 0.3, 0.77)[0].r_analytic == 0.77


def test_figure_curves_dashed_endpoints():
    dashed = [c for c in FIGURE_CURVES if c[2] < 1]
    assert len(dashed) == 2
    for _, s, f in dashed:
        assert advantage_ratio(1.0, s, f) == pytest.approx(1.0, abs=1e-12)


@given(open_unit)
def test_fock_beats_shot_noise(eta):
    assert fock_precision(eta).value > shot_noise_precision(eta).value


@given(open_unit, open_unit, open_unit, st.floats(1e-4, 1e-2))
def test_advantage_monotone(eta, s, f, step):
    base = advantage_ratio(eta, s, f)
    if eta + step < 1:
        assert advantage_ratio(eta + step, s, f) > base
    if s + step < 1:
        assert advantage_ratio(eta, s + step, f) > base
    if f + step < 1:
        assert advantage_ratio(eta, s, f + step) > base


@given(open_unit, open_unit, open_unit)
def test_advantage_equals_degraded_times_eta(eta, s, f):
    assert advantage_ratio(eta, s, f) == pytest.approx(degraded_precision(eta, s, f).value * eta, rel=1e-12)


@given(open_unit)
def test_degraded_reduces_to_fock(eta):
    assert degraded_precision(eta, 1.0, 1.0).value == pytest.approx(fock_precision(eta).value, rel=1e-12)
