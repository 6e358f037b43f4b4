"""Kernel estimators of ISI densities, survivals and hazards.

The ISIs are treated as a stationary Markov chain, so the conditional
intensity of the spike train at time ``t`` in the ISI that started at
``l_{i-1}`` is the conditional hazard of the next ISI given the previous
one, evaluated at ``t - l_{i-1}``. The hazard is estimated as a ratio of a
kernel conditional density and its integrated survival function.

Kernels are Gaussian with standard deviation ``kernel_scale``; the
bandwidth is ``c_n = n ** -bandwidth_exponent``, so the effective
smoothing scale is ``kernel_scale * c_n``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientData, RejectedInput
from .isi import IsiSequence, SpikeTrain

__all__ = [
    "EstimatorConfig",
    "FittedEstimator",
    "IntensityPath",
    "fit",
    "gaussian_kernel",
    "regular_grid",
    "cumulative_trapezoid",
    "conditional_intensity_path",
]

_SQRT2PI = math.sqrt(2 * math.pi)
# log-weights this far below the maximum are below double precision
_LOG_WEIGHT_CUTOFF = 40.0


def gaussian_kernel(x, scale=1.0):
    """Gaussian density with mean 0 and standard deviation ``scale``."""
    z = np.asarray(x, dtype=float) / scale
    return np.exp(-0.5 * z * z) / (scale * _SQRT2PI)


def regular_grid(t, step):
    """Grid ``0, step, 2 step, ...`` up to and including ``t``.

    The last interval is shortened when ``t`` is not a multiple of ``step``.
    """
    if t < 0:
        raise RejectedInput(f"grid end must be non-negative, got {t}")
    k = int(math.floor(t / step * (1 + 1e-12)))
    grid = np.arange(k + 1) * step
    if t - grid[-1] > 1e-12 * max(step, t):
        grid = np.append(grid, t)
    else:
        grid[-1] = t
    return grid


def cumulative_trapezoid(y, x, axis=-1):
    """Running trapezoidal integral starting at 0 (same length as ``x``)."""
    y = np.asarray(y, dtype=float)
    dx = np.diff(x)
    y0 = np.take(y, np.arange(y.shape[axis] - 1), axis=axis)
    y1 = np.take(y, np.arange(1, y.shape[axis]), axis=axis)
    shape = [1] * y.ndim
    shape[axis] = -1
    pieces = np.cumsum(0.5 * (y0 + y1) * dx.reshape(shape), axis=axis)
    zero = np.zeros_like(np.take(y, [0], axis=axis))
    return np.concatenate([zero, pieces], axis=axis)


@dataclass(frozen=True)
class EstimatorConfig:
    """Estimator settings.

    Parameters
    ----------
    kernel_scale : float
        Standard deviation ``s`` of the Gaussian kernels.
    bandwidth_exponent : float
        ``beta`` in ``c_n = n ** -beta``; must lie in ``(0, 0.25)``.
    survival_floor : float
        Lower clamp for estimated survivals, in ``(0, 1e-3]``.
    eval_step : float
        Step of the trapezoidal survival integrals.
    domain_cap : float or None
        Upper end ``M`` of the estimation window ``[0, M]``. ``None`` uses
        the 99th percentile of the fitted sample.
    """

    kernel_scale: float = 0.2
    bandwidth_exponent: float = 0.2
    survival_floor: float = 1e-6
    eval_step: float = 0.01
    domain_cap: float = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.kernel_scale > 0:
            raise RejectedInput(
                f"kernel_scale must be positive, got {self.kernel_scale}")
        if not 0 < self.bandwidth_exponent < 0.25:
            raise RejectedInput(
                f"bandwidth_exponent must lie in (0, 0.25) so that c_n -> 0 "
                f"and n c_n^4 / ln n -> inf; got {self.bandwidth_exponent}")
        if not 0 < self.survival_floor <= 1e-3:
            raise RejectedInput(
                f"survival_floor must lie in (0, 1e-3], got {self.survival_floor}")
        if not self.eval_step > 0:
            raise RejectedInput(f"eval_step must be positive, got {self.eval_step}")
        if self.domain_cap is not None and not self.domain_cap > 0:
            raise RejectedInput(f"domain_cap must be positive, got {self.domain_cap}")

    def to_dict(self):
        return {
            "kernel_scale": self.kernel_scale,
            "bandwidth_exponent": self.bandwidth_exponent,
            "survival_floor": self.survival_floor,
            "eval_step": self.eval_step,
            "domain_cap": self.domain_cap,
        }


@dataclass(frozen=True)
class IntensityPath:
    """Piecewise conditional intensity sampled on per-ISI grids.

    ``segment[k]`` is the index (into the ISI array) of the interval that
    contains ``times[k]``. Each segment starts at its left spike epoch (the
    right limit of the intensity there) and ends at the next epoch, so
    spike epochs appear twice with different values.
    """

    times: np.ndarray
    values: np.ndarray
    segment: np.ndarray
    epochs: np.ndarray
    horizon: float

    def segments(self):
        """Yield ``(index, times, values)`` for each segment in order."""
        if not self.segment.size:
            return
        cuts = np.flatnonzero(np.diff(self.segment)) + 1
        for idx in np.split(np.arange(self.segment.size), cuts):
            yield int(self.segment[idx[0]]), self.times[idx], self.values[idx]

    @property
    def covered(self):
        """Sorted indices of ISIs that have a segment."""
        return np.unique(self.segment)


@dataclass(frozen=True)
class FittedEstimator:
    """Kernel estimator fitted to one ISI sample."""

    sample: IsiSequence
    config: EstimatorConfig
    _sorted: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.sample)
        if n < 2:
            raise InsufficientData(f"need at least 2 ISIs to fit, got {n}")
        object.__setattr__(self, "_sorted", np.sort(self.sample.isis))

    @property
    def n(self):
        return len(self.sample)

    @property
    def bandwidth(self):
        """``c_n = n ** -beta``."""
        return self.n ** -self.config.bandwidth_exponent

    @property
    def smoothing(self):
        """Standard deviation of the scaled kernels, ``s * c_n``."""
        return self.config.kernel_scale * self.bandwidth

    @property
    def pairs(self):
        """The ``n - 1`` adjacent couples ``(T_i, T_{i+1})``."""
        x = self.sample.isis
        return np.column_stack([x[:-1], x[1:]])

    @property
    def domain_cap(self):
        cap = self.config.domain_cap
        if cap is None:
            cap = float(np.quantile(self.sample.isis, 0.99))
        return cap

    def _check_domain(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.domain_cap):
            raise RejectedInput(
                f"evaluation point outside [0, M] with M={self.domain_cap}")
        return t

    # -- densities ---------------------------------------------------------

    def marginal_density(self, t):
        """``f_n(t) = (1 / (n c_n)) sum_i K1((t - T_i) / c_n)``."""
        t = np.asarray(t, dtype=float)
        h = self.smoothing
        out = np.zeros(t.shape)
        flat = out.reshape(-1)
        for k, chunk in _chunks(t.reshape(-1), self.n):
            flat[k:k + chunk.size] = gaussian_kernel(
                chunk[:, None] - self.sample.isis[None, :], h).mean(axis=1)
        return out if out.ndim else float(out)

    def joint_density(self, tau, t):
        """Product-kernel density of adjacent pairs, averaged over ``n - 1`` pairs."""
        tau, t = np.broadcast_arrays(np.asarray(tau, float), np.asarray(t, float))
        h = self.smoothing
        prev, nxt = self.sample.isis[:-1], self.sample.isis[1:]
        out = np.zeros(t.shape)
        flat = out.reshape(-1)
        ft, fs = t.reshape(-1), tau.reshape(-1)
        for k, chunk in _chunks(ft, prev.size):
            sl = slice(k, k + chunk.size)
            out_k = (gaussian_kernel(fs[sl, None] - prev[None, :], h)
                     * gaussian_kernel(chunk[:, None] - nxt[None, :], h))
            flat[sl] = out_k.mean(axis=1)
        return out if out.ndim else float(out)

    def _conditioning_weights(self, tau):
        """Normalised pair weights and the ratio factor for conditioning on ``tau``.

        Returns ``(idx, w, scale)`` such that
        ``f_n(t | tau) = scale * sum_j w_j K2_h(t - T_{idx_j + 1})``.
        Computed in log space so distant ``tau`` cannot underflow.
        """
        h = self.smoothing
        x = self.sample.isis
        logw = -0.5 * ((tau - x) / h) ** 2
        top = logw.max()
        logw -= top
        w_all = np.exp(logw)
        keep = np.flatnonzero(logw[:-1] > -_LOG_WEIGHT_CUTOFF)
        n = self.n
        # joint normalises by n - 1 pairs, marginal by n points
        scale = n / ((n - 1) * w_all.sum())
        return keep, w_all[keep], scale

    def _conditional_density_matrix(self, tau, t):
        idx, w, scale = self._conditioning_weights(tau)
        nxt = self.sample.isis[idx + 1]
        h = self.smoothing
        t = np.asarray(t, dtype=float)
        if idx.size == 0:
            return np.zeros(t.shape)
        out = np.empty(t.size)
        for k, chunk in _chunks(t.reshape(-1), idx.size):
            out[k:k + chunk.size] = _kernel_matrix(chunk, nxt, h) @ w
        return (scale / (h * _SQRT2PI) * out).reshape(t.shape)

    def conditional_density(self, tau, t):
        """``f_n(t | tau) = f_n(tau, t) / f_n(tau)``."""
        tau_arr = np.asarray(tau, dtype=float)
        t_arr = np.asarray(t, dtype=float)
        if tau_arr.ndim == 0:
            out = self._conditional_density_matrix(float(tau_arr), t_arr)
            return out if out.ndim else float(out)
        tau_b, t_b = np.broadcast_arrays(tau_arr, t_arr)
        out = np.empty(t_b.shape)
        for value in np.unique(tau_b):
            mask = tau_b == value
            out[mask] = self._conditional_density_matrix(value, t_b[mask])
        return out

    # -- survivals and hazards --------------------------------------------

    def _survival_on(self, density, t_max):
        grid = regular_grid(t_max, self.config.eval_step)
        dens = density(grid)
        surv = 1.0 - cumulative_trapezoid(dens, grid)
        return grid, dens, np.maximum(surv, self.config.survival_floor)

    def survival_curve(self, t_max):
        """Grid, density and floored survival of the marginal ISI law on ``[0, t_max]``."""
        return self._survival_on(self.marginal_density, t_max)

    def conditional_survival_curve(self, tau, t_max):
        return self._survival_on(
            lambda g: self._conditional_density_matrix(tau, g), t_max)

    def hazard_curve(self, t_max):
        grid, dens, surv = self.survival_curve(t_max)
        return grid, dens / surv

    def conditional_hazard_curve(self, tau, t_max):
        """Grid and ``h_n(t | tau)`` on ``[0, t_max]`` (no domain check)."""
        grid, dens, surv = self.conditional_survival_curve(tau, t_max)
        return grid, dens / surv

    def _pointwise(self, curve_fn, t):
        t = self._check_domain(t)
        out = np.empty(t.shape)
        flat_t = t.reshape(-1)
        flat = out.reshape(-1)
        # evaluate each point on its own grid so values do not depend on
        # which other points were requested
        for k, value in enumerate(flat_t):
            flat[k] = curve_fn(value)[-1][-1]
        return out if out.ndim else float(out)

    def survival(self, t):
        """``S_n(t) = 1 - int_0^t f_n``, floored at ``survival_floor``."""
        return self._pointwise(self.survival_curve, t)

    def conditional_survival(self, tau, t):
        return self._pointwise(
            lambda v: self.conditional_survival_curve(tau, v), t)

    def hazard(self, t):
        """``h_n(t) = f_n(t) / S_n(t)``."""
        return self._pointwise(self.hazard_curve, t)

    def conditional_hazard(self, tau, t):
        """``h_n(t | tau) = f_n(t | tau) / S_n(t | tau)``."""
        if not np.all(np.asarray(tau) >= 0):
            raise RejectedInput("conditioning ISI must be non-negative")
        return self._pointwise(
            lambda v: self.conditional_hazard_curve(tau, v), t)

    def conditional_hazard_grid(self, taus, ts):
        """``h_n(t | tau)`` on the product grid ``taus x ts``.

        One survival integral per ``tau``; ``ts`` should be multiples of
        ``eval_step`` (other points are linearly interpolated).
        """
        ts = self._check_domain(ts)
        out = np.empty((len(taus), len(ts)))
        for r, tau in enumerate(taus):
            grid, h = self.conditional_hazard_curve(float(tau), float(np.max(ts)))
            out[r] = np.interp(ts, grid, h)
        return out


def _kernel_matrix(t, centers, h):
    """Unnormalised ``exp(-(t_k - c_j)^2 / (2 h^2))``, built in place."""
    d = np.subtract.outer(t, centers)
    d *= d
    d *= -0.5 / (h * h)
    return np.exp(d, out=d)


def _chunks(values, width, budget=1_000_000):
    """Split ``values`` so that ``len(chunk) * width`` stays under ``budget``."""
    size = max(1, budget // max(width, 1))
    for k in range(0, values.size, size):
        yield k, values[k:k + size]


def fit(sample, config=None):
    """Fit the kernel estimator to an ISI sample.

    Raises
    ------
    InsufficientData
        Fewer than two ISIs.
    RejectedInput
        Invalid configuration.
    """
    if config is None:
        config = EstimatorConfig()
    elif isinstance(config, dict):
        config = EstimatorConfig(**config)
    else:
        config.validate()
    if not isinstance(sample, IsiSequence):
        sample = IsiSequence(sample)
    return FittedEstimator(sample, config)


def conditional_intensity_path(fitted, train, grid_step=None, until=None):
    """Estimated conditional intensity along ``train``.

    On the ISI ending at ``l_i`` (``i >= 2``) the value at ``t`` is the
    estimated conditional hazard at ``t - l_{i-1}`` given ``T_{i-1}``. The
    first ISI is not covered. When ``until`` exceeds the last spike, a
    trailing open segment conditioned on the last ISI is added.

    ``train`` may be the fitted sample's own train (in-sample) or another
    train (held-out evaluation).
    """
    if not isinstance(train, SpikeTrain):
        train = SpikeTrain(train)
    step = fitted.config.eval_step if grid_step is None else grid_step
    if not step > 0:
        raise RejectedInput(f"grid_step must be positive, got {step}")
    if until is None:
        until = train.epochs[-1] if len(train) else train.horizon
    if until > train.horizon:
        raise RejectedInput(
            f"path end {until} extends beyond horizon {train.horizon}")
    epochs = train.epochs
    isis = np.diff(epochs, prepend=0.0)
    times, values, segment = [], [], []
    for i in range(1, len(epochs) + 1):
        start = epochs[i - 1]
        end = epochs[i] if i < len(epochs) else until
        if end <= start or start >= until:
            break
        end = min(end, until)
        grid, h = fitted.conditional_hazard_curve(isis[i - 1], end - start)
        if grid_step is not None and grid_step != fitted.config.eval_step:
            local = regular_grid(end - start, step)
            h = np.interp(local, grid, h)
            grid = local
        times.append(start + grid)
        values.append(h)
        segment.append(np.full(grid.size, i, dtype=np.int64))
    if times:
        times, values, segment = map(np.concatenate, (times, values, segment))
    else:
        times = values = np.empty(0)
        segment = np.empty(0, dtype=np.int64)
    return IntensityPath(times=times, values=values, segment=segment,
                         epochs=epochs, horizon=train.horizon)
