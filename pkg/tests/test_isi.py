import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isirate.errors import InsufficientData, RejectedInput
from isirate.generators import gen_poisson
from isirate.isi import (CountingView, IsiSequence, SpikeTrain, count_at, count_rate,
                         from_spike_times, instantaneous_mean_rate, mean_rate)

positive_isis = st.lists(st.floats(min_value=1e-3, max_value=50.0), min_size=1, max_size=60)


def test_from_spike_times_differences():
    seq = from_spike_times([1.0, 2.5, 3.0], horizon=4)
    np.testing.assert_array_equal(seq.isis, [1.0, 1.5, 0.5])


def test_single_spike():
    seq = from_spike_times([0.5], horizon=1)
    np.testing.assert_array_equal(seq.isis, [0.5])


def test_duplicate_epoch_rejected_with_index():
    with pytest.raises(RejectedInput) as err:
        from_spike_times([1.0, 1.0, 2.0])
    assert err.value.index == 1


def test_non_monotone_rejected_with_index():
    with pytest.raises(RejectedInput) as err:
        from_spike_times([1.0, 3.0, 2.0, 4.0])
    assert err.value.index == 2


def test_epoch_beyond_horizon_rejected():
    with pytest.raises(RejectedInput):
        SpikeTrain([1.0, 5.0], horizon=4.0)


def test_types_are_immutable():
    train = SpikeTrain([1.0, 2.0])
    with pytest.raises(ValueError):
        train.epochs[0] = 0.5


@given(st.lists(st.floats(min_value=1e-6, max_value=1e6), min_size=1, max_size=50, unique=True))
def test_round_trip_is_bit_exact(values):
    epochs = np.sort(np.asarray(values))
    seq = from_spike_times(epochs)
    np.testing.assert_array_equal(seq.epochs, epochs)
    np.testing.assert_array_equal(seq.spike_train().epochs, epochs)


@given(positive_isis)
def test_round_trip_from_isis(isis):
    seq = IsiSequence(isis)
    np.testing.assert_array_equal(seq.epochs, np.cumsum(isis))


@pytest.mark.parametrize("t, expected", [(2.5, 2), (0.0, 0), (0.99, 0), (3.0, 3), (4.0, 3)])
def test_count_at(t, expected):
    view = CountingView(SpikeTrain([1, 2.5, 3], horizon=4))
    assert count_at(view, t) == expected
    assert view(t) == expected


def test_count_outside_window_rejected():
    view = CountingView(SpikeTrain([1, 2.5, 3], horizon=4))
    with pytest.raises(RejectedInput):
        count_at(view, 4.5)
    with pytest.raises(RejectedInput):
        count_at(view, -0.1)


def _check_counting_identity(epochs, horizon):
    view = CountingView(SpikeTrain(epochs, horizon=horizon))
    isis = np.diff(epochs, prepend=0.0)
    partial = np.cumsum(isis)
    grid = np.unique(np.concatenate([np.linspace(0, horizon, 97), epochs]))
    for t in grid:
        count = count_at(view, t)
        for n in range(1, len(epochs) + 1):
            assert (count < n) == (partial[n - 1] > t)


def test_counting_identity_worked_example():
    view = CountingView(SpikeTrain([1, 2.5, 3], horizon=4))
    assert count_at(view, 2.9) == 2 and 1 + 1.5 + 0.5 > 2.9
    _check_counting_identity(np.array([1, 2.5, 3.0]), 4.0)


@settings(max_examples=50, deadline=None)
@given(positive_isis, st.floats(min_value=0.0, max_value=10.0))
def test_counting_identity_exhaustive(isis, extra):
    # integer-valued ISIs would coincide with grid points; exercise both
    epochs = IsiSequence(isis).epochs
    _check_counting_identity(epochs, float(epochs[-1] + extra))


@given(positive_isis)
def test_counting_process_monotone(isis):
    train = IsiSequence(isis).spike_train()
    grid = np.linspace(0, train.horizon, 50)
    counts = [count_at(CountingView(train), t) for t in grid]
    assert counts[0] == 0
    assert np.all(np.diff(counts) >= 0)


@pytest.mark.parametrize("isis, expected", [([1, 1, 1], 1.0), ([0.5, 1.5], 1.0)])
def test_mean_rate(isis, expected):
    assert mean_rate(IsiSequence(isis)) == pytest.approx(expected)


@pytest.mark.parametrize("isis, expected", [([1, 1], 1.0), ([0.5, 2.0], 1.25)])
def test_instantaneous_mean_rate(isis, expected):
    assert instantaneous_mean_rate(IsiSequence(isis)) == pytest.approx(expected)


def test_empty_sample_is_insufficient():
    with pytest.raises(InsufficientData):
        mean_rate(IsiSequence([]))
    with pytest.raises(InsufficientData):
        instantaneous_mean_rate(IsiSequence([]))


@given(positive_isis)
def test_jensen(isis):
    seq = IsiSequence(isis)
    assert instantaneous_mean_rate(seq) >= mean_rate(seq) * (1 - 1e-12)


def test_refractory_exp_rates_from_sample(fgm_independent_1e5):
    x = fgm_independent_1e5.isis
    n = x.size
    # delta method SE of n / sum(T) with mean 1.5, sd 1
    assert abs(mean_rate(fgm_independent_1e5) - 2 / 3) < 3 * 1.0 / (1.5**2 * np.sqrt(n))
    # e^0.5 Gamma(0, 0.5) by adaptive quadrature; sd(1/T) likewise
    se = 0.47468445515393615 / np.sqrt(n)
    assert abs(instantaneous_mean_rate(fgm_independent_1e5) - 0.9229106324837093) < 3 * se


def test_count_rate():
    view = CountingView(SpikeTrain([1, 2, 3, 4]))
    assert count_rate(view, 4) == 1.0
    with pytest.raises(RejectedInput):
        count_rate(view, 0)


def test_count_rate_poisson():
    train = gen_poisson(12000, rate=1.0, seed=3).spike_train(horizon=None)
    assert abs(count_rate(CountingView(train), 1e4) - 1.0) < 0.05


def test_count_rate_refractory_exp(fgm_independent_1e5):
    train = fgm_independent_1e5.spike_train()
    t = 1.4e5
    assert abs(count_rate(CountingView(train), t) - 2 / 3) < 0.01
