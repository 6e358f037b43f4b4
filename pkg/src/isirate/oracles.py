"""Closed-form ground truth for exponential ISIs with a refractory period.

ISIs follow the shifted exponential ``F(t) = 1 - exp(-rate (t - delta))``
on ``t >= delta``. Adjacent ISIs are coupled through the
Farlie-Gumbel-Morgenstern copula ``C(u, v) = uv (1 + alpha (1-u)(1-v))``,
which makes the ISI sequence a stationary Markov chain whose conditional
hazard depends on the previous ISI only.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergentQuantity, RejectedInput
from .isi import IsiSequence, SpikeTrain

__all__ = [
    "ExpRefractoryModel",
    "exp1",
    "unconditional_rate",
    "fgm_conditional_density",
    "fgm_conditional_survival",
    "fgm_conditional_hazard",
    "printed_conditional_intensity",
    "conditional_intensity",
    "refractory_exp_rates",
]


@dataclass(frozen=True)
class ExpRefractoryModel:
    rate: float = 1.0
    refractory: float = 0.5
    alpha: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise RejectedInput(f"rate must be positive, got {self.rate}")
        if not self.refractory >= 0:
            raise RejectedInput(
                f"refractory must be non-negative, got {self.refractory}")
        if not abs(self.alpha) <= 1:
            raise RejectedInput(f"alpha must lie in [-1, 1], got {self.alpha}")

    def cdf(self, t):
        x = np.maximum(np.asarray(t, dtype=float) - self.refractory, 0.0)
        return -np.expm1(-self.rate * x)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        x = t - self.refractory
        return np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0)), 0.0)

    def survival(self, t):
        x = np.maximum(np.asarray(t, dtype=float) - self.refractory, 0.0)
        return np.exp(-self.rate * x)


def exp1(x, scaled=False):
    """Exponential integral ``E1(x) = Gamma(0, x)`` for ``x > 0``.

    Power series below 1, Lentz continued fraction above. With ``scaled``
    the result is ``exp(x) E1(x)``, which stays finite for large ``x``.
    """
    if x <= 0:
        raise DivergentQuantity(f"E1 diverges at x={x}")
    if x < 1.0:
        total = 0.0
        term = 1.0
        k = 1
        while True:
            term *= -x / k
            contrib = -term / k
            total += contrib
            if abs(contrib) < 1e-17 * abs(total):
                break
            k += 1
        e1 = -0.5772156649015329 - math.log(x) + total
        return e1 * math.exp(x) if scaled else e1
    # modified Lentz on E1(x) = e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h if scaled else h * math.exp(-x)


def unconditional_rate(model, t):
    """Hazard of the marginal ISI law: 0 before the refractory period, then ``rate``."""
    t = np.asarray(t, dtype=float)
    out = np.where(t >= model.refractory, model.rate, 0.0)
    return out if out.ndim else float(out)


def fgm_conditional_density(model, t, tau):
    """Density of the next ISI ``t`` given the previous ISI ``tau``.

    ``f(t|tau) = f(t) [1 + alpha (1 - 2F(tau)) (1 - 2F(t))]``; zero when
    either argument is at or below the refractory period.
    """
    t = np.asarray(t, dtype=float)
    tau = np.asarray(tau, dtype=float)
    u = model.cdf(tau)
    v = model.cdf(t)
    dens = model.pdf(t) * (1.0 + model.alpha * (1 - 2 * u) * (1 - 2 * v))
    out = np.where((t > model.refractory) & (tau > model.refractory), dens, 0.0)
    return out if out.ndim else float(out)


def fgm_conditional_survival(model, t, tau):
    """``P(T_next > t | T_prev = tau) = (1 - v)(1 - alpha (1 - 2u) v)``."""
    u = model.cdf(tau)
    v = model.cdf(t)
    out = (1 - v) * (1 - model.alpha * (1 - 2 * u) * v)
    return out if np.ndim(out) else float(out)


def fgm_conditional_hazard(model, t, tau):
    """Conditional hazard ``f(t|tau) / S(t|tau)`` for general ``(rate, alpha)``.

    Written with the survival factor ``1 - v = exp(-rate x)`` cancelled so
    the ratio stays finite for large ``t``.
    """
    t = np.asarray(t, dtype=float)
    tau = np.asarray(tau, dtype=float)
    u = model.cdf(tau)
    # s = 1 - v without cancellation in the tail
    s = np.exp(-model.rate * np.clip(t - model.refractory, 0.0, None))
    a = model.alpha * (1 - 2 * u)
    h = model.rate * (1 - a + 2 * a * s) / (1 - a + a * s)
    out = np.where(t > model.refractory, h, 0.0)
    return out if out.ndim else float(out)


def printed_conditional_intensity(x, y):
    """Closed form for ``rate = alpha = 1`` in terms of ``x = t - l_prev - delta``
    and ``y = T_prev - delta`` (both positive)."""
    ex = np.exp(-np.asarray(x, dtype=float))
    ey = np.exp(-np.asarray(y, dtype=float))
    num = 1 + (1 - 2 * ex) * (1 - 2 * ey)
    den = 2 - ex - 2 * ey + 2 * ex * ey
    return num / den


def conditional_intensity(model, t, spikes, isis=None):
    """Conditional intensity ``lambda*(t)`` of the FGM chain along a train.

    On the first ISI this is the unconditional hazard; afterwards it is the
    conditional hazard at the time since the last spike, given the ISI
    that ended at that spike.
    """
    if not isinstance(spikes, SpikeTrain):
        spikes = SpikeTrain(spikes)
    if isis is None:
        isis = spikes.isis()
    elif not isinstance(isis, IsiSequence):
        isis = IsiSequence(isis)
    if not 0 < t <= spikes.horizon:
        raise RejectedInput(f"t={t} outside (0, {spikes.horizon}]")
    epochs = spikes.epochs
    # index of the ISI containing t: l_{i-1} < t <= l_i
    i = int(np.searchsorted(epochs, t, side="left"))
    if i == 0:
        return unconditional_rate(model, t)
    since = t - epochs[i - 1]
    return fgm_conditional_hazard(model, since, isis.isis[i - 1])


def refractory_exp_rates(model):
    """Firing rate ``1/E(T)`` and instantaneous mean rate ``E(1/T)``.

    ``E(1/T) = rate * exp(rate delta) * E1(rate delta)``, which reduces to
    ``e^delta Gamma(0, delta)`` for unit rate.
    """
    lam, delta = model.rate, model.refractory
    firing = 1.0 / (delta + 1.0 / lam)
    if delta < 0:
        raise RejectedInput(f"refractory must be non-negative, got {delta}")
    if delta == 0:
        raise DivergentQuantity("E(1/T) is infinite without a refractory period")
    inst = lam * exp1(lam * delta, scaled=True)
    return firing, inst


def oracle_intensity_path(model, train, grid_step=0.01, include_first=True):
    """Exact conditional intensity of the FGM chain sampled along ``train``.

    The jump at the end of each refractory period is stored as two points
    at the same time, so trapezoidal integration does not smear it.
    """
    from .estimators import IntensityPath, regular_grid

    if not isinstance(train, SpikeTrain):
        train = SpikeTrain(train)
    epochs = train.epochs
    isis = np.diff(epochs, prepend=0.0)
    delta = model.refractory
    times, values, segment = [], [], []
    for i in range(0 if include_first else 1, epochs.size):
        start = epochs[i - 1] if i else 0.0
        local = regular_grid(isis[i], grid_step)
        if 0 < delta < isis[i]:
            k = np.searchsorted(local, delta, side="right")
            local = np.concatenate([local[:k], [delta, delta], local[k:]])
        if i == 0:
            lam = np.where(local >= delta, model.rate, 0.0)
        else:
            lam = fgm_conditional_hazard(model, local, isis[i - 1])
        if 0 < delta < isis[i]:
            # left limit 0, right limit the post-refractory hazard
            j = np.flatnonzero(local == delta)
            lam[j[:-1]] = 0.0
            right = (model.rate if i == 0 else
                     fgm_conditional_hazard(model, np.nextafter(delta, np.inf), isis[i - 1]))
            lam[j[-1]] = right
        times.append(start + local)
        values.append(lam)
        segment.append(np.full(local.size, i, dtype=np.int64))
    return IntensityPath(times=np.concatenate(times), values=np.concatenate(values),
                         segment=np.concatenate(segment), epochs=epochs,
                         horizon=train.horizon)
