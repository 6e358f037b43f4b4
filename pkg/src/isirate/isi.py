"""Spike trains, interspike intervals and the classical rate estimators.

A spike train is the ordered set of firing epochs ``l_1 < l_2 < ...`` on an
observation window ``[0, L]``. The interspike intervals (ISIs) are the
differences ``T_i = l_i - l_{i-1}`` with ``l_0`` the origin (0 by default).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientData, RejectedInput

__all__ = [
    "SpikeTrain",
    "IsiSequence",
    "CountingView",
    "from_spike_times",
    "count_at",
    "mean_rate",
    "instantaneous_mean_rate",
    "count_rate",
]


def _frozen_array(values):
    arr = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    arr.flags.writeable = False
    return arr


def _check_increasing(epochs):
    if epochs.size and not np.all(np.isfinite(epochs)):
        bad = int(np.flatnonzero(~np.isfinite(epochs))[0])
        raise RejectedInput(f"non-finite epoch at index {bad}", index=bad)
    steps = np.diff(epochs)
    bad = np.flatnonzero(steps <= 0)
    if bad.size:
        i = int(bad[0]) + 1
        kind = "duplicate epoch" if steps[i - 1] == 0 else "epochs not increasing"
        raise RejectedInput(f"{kind} at index {i}", index=i)


@dataclass(frozen=True)
class SpikeTrain:
    """Ordered spike epochs on ``(0, horizon]``.

    Parameters
    ----------
    epochs : array_like
        Strictly increasing, positive firing times.
    horizon : float, optional
        End of the observation window. Defaults to the last epoch.
    unit : str
        Time unit label. Metadata only.
    """

    epochs: np.ndarray
    horizon: float = None
    unit: str = "model"

    def __post_init__(self):
        epochs = _frozen_array(self.epochs)
        _check_increasing(epochs)
        if epochs.size and epochs[0] <= 0:
            raise RejectedInput("epochs must be positive", index=0)
        horizon = self.horizon
        if horizon is None:
            if not epochs.size:
                raise RejectedInput("empty train needs an explicit horizon")
            horizon = float(epochs[-1])
        horizon = float(horizon)
        if not horizon > 0:
            raise RejectedInput(f"horizon must be positive, got {horizon}")
        if epochs.size and epochs[-1] > horizon:
            raise RejectedInput(
                f"epoch {epochs[-1]} beyond horizon {horizon}",
                index=epochs.size - 1)
        object.__setattr__(self, "epochs", epochs)
        object.__setattr__(self, "horizon", horizon)

    def __len__(self):
        return self.epochs.size

    def isis(self):
        """Return the train's :class:`IsiSequence` (origin 0)."""
        return IsiSequence.from_epochs(self.epochs)


@dataclass(frozen=True)
class IsiSequence:
    """Interspike intervals ``T_i`` measured from ``origin``.

    When built from spike times the original epochs are kept, so that
    :attr:`epochs` reproduces them bit for bit.
    """

    isis: np.ndarray
    origin: float = 0.0
    _epochs: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        isis = _frozen_array(self.isis)
        bad = np.flatnonzero(~(isis > 0))
        if bad.size:
            i = int(bad[0])
            raise RejectedInput(f"ISI at index {i} is not positive", index=i)
        object.__setattr__(self, "isis", isis)
        object.__setattr__(self, "origin", float(self.origin))
        if self._epochs is None:
            epochs = _frozen_array(self.origin + np.cumsum(isis))
            object.__setattr__(self, "_epochs", epochs)

    @classmethod
    def from_epochs(cls, epochs, origin=0.0):
        epochs = _frozen_array(epochs)
        _check_increasing(epochs)
        if epochs.size and epochs[0] <= origin:
            raise RejectedInput("first epoch must follow the origin", index=0)
        isis = np.diff(epochs, prepend=origin)
        return cls(isis, origin=origin, _epochs=epochs)

    @property
    def epochs(self):
        return self._epochs

    def __len__(self):
        return self.isis.size

    def spike_train(self, horizon=None, unit="model"):
        return SpikeTrain(self.epochs, horizon=horizon, unit=unit)


@dataclass(frozen=True)
class CountingView:
    """Counting-process view ``N(t)`` of a spike train."""

    train: SpikeTrain

    def __call__(self, t):
        return count_at(self, t)


def from_spike_times(epochs, horizon=None):
    """Build an :class:`IsiSequence` from ordered spike epochs.

    Raises
    ------
    RejectedInput
        If the epochs are not strictly increasing and positive, or exceed
        ``horizon``. ``index`` holds the first offending position.
    """
    train = SpikeTrain(epochs, horizon=horizon)
    return train.isis()


def count_at(view, t):
    """Number of spikes in ``(0, t]`` (a spike exactly at ``t`` counts)."""
    train = view.train if isinstance(view, CountingView) else view
    if not 0 <= t <= train.horizon:
        raise RejectedInput(f"t={t} outside [0, {train.horizon}]")
    return int(np.searchsorted(train.epochs, t, side="right"))


def _nonempty(isi):
    values = isi.isis if isinstance(isi, IsiSequence) else np.asarray(isi, float)
    if values.size == 0:
        raise InsufficientData("empty ISI sample")
    return values


def mean_rate(isi):
    """Inverse of the average ISI, ``n / sum(T_i)``."""
    values = _nonempty(isi)
    return values.size / values.sum()


def instantaneous_mean_rate(isi):
    """Average inverse ISI, ``mean(1 / T_i)``.

    Never smaller than :func:`mean_rate` on the same sample.
    """
    values = _nonempty(isi)
    return float(np.mean(1.0 / values))


def count_rate(view, t):
    """``N(t) / t``."""
    if not t > 0:
        raise RejectedInput(f"t must be positive, got {t}")
    return count_at(view, t) / t
