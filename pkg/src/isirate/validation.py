"""Time-rescaling validation of an estimated conditional intensity.

If the intensity is right, integrating it over each ISI gives i.i.d.
unit-mean exponentials, and ``Z = 1 - exp(-T~)`` gives i.i.d. uniforms.
The check runs three tests on the ``Z``: Kolmogorov-Smirnov uniformity,
Kendall's tau on adjacent pairs, and a Cramer-von Mises goodness-of-fit
test of the independence copula on adjacent pairs.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats

from .errors import InsufficientData, RejectedInput
from .estimators import IntensityPath, conditional_intensity_path
from .isi import SpikeTrain

__all__ = [
    "RescaledIsis",
    "UniformizedIsis",
    "ValidationConfig",
    "ValidationReport",
    "rescale",
    "uniformize",
    "kolmogorov_sf",
    "ks_statistic",
    "ks_uniformity_test",
    "kendall_tau_test",
    "pseudo_observations",
    "empirical_copula",
    "copula_cvm_statistic",
    "copula_gof_independence",
    "validate",
    "validate_path",
]


@dataclass(frozen=True)
class RescaledIsis:
    """Integrated intensity over each covered ISI.

    ``index[k]`` is the position of ``values[k]`` in the train's ISI array.
    """

    values: np.ndarray
    index: np.ndarray

    @property
    def count(self):
        return self.values.size


@dataclass(frozen=True)
class UniformizedIsis:
    values: np.ndarray

    @property
    def count(self):
        return self.values.size


def rescale(train, path, atol=1e-9):
    """Integrate ``path`` over every ISI it covers.

    Only complete ISIs ``(l_{i-1}, l_i]`` are returned; a trailing open
    segment after the last spike is ignored.

    Raises
    ------
    RejectedInput
        If a covered ISI is not spanned end to end, covered ISIs are not
        contiguous, or the path has negative values.
    """
    if not isinstance(train, SpikeTrain):
        train = SpikeTrain(train)
    epochs = np.concatenate([[0.0], train.epochs])
    n_isi = train.epochs.size
    if np.any(path.values < 0):
        raise RejectedInput("intensity path has negative values")
    values, index = [], []
    for i, t, lam in path.segments():
        if i >= n_isi:
            continue
        start, end = epochs[i], epochs[i + 1]
        tol = atol * max(1.0, abs(end))
        if abs(t[0] - start) > tol or abs(t[-1] - end) > tol:
            raise RejectedInput(
                f"gap in ISI {i}: path spans [{t[0]}, {t[-1]}], "
                f"ISI spans [{start}, {end}]")
        if np.any(np.diff(t) < 0):
            raise RejectedInput(f"path times decrease inside ISI {i}")
        values.append(np.trapezoid(lam, t))
        index.append(i)
    index = np.asarray(index, dtype=np.int64)
    if index.size and np.any(np.diff(index) != 1):
        missing = int(index[np.flatnonzero(np.diff(index) != 1)[0]]) + 1
        raise RejectedInput(f"gap in path: ISI {missing} not covered")
    return RescaledIsis(values=np.asarray(values, dtype=float), index=index)


def uniformize(rescaled):
    """``Z = 1 - exp(-T~)``, elementwise."""
    values = rescaled.values if isinstance(rescaled, RescaledIsis) else np.asarray(rescaled, float)
    return UniformizedIsis(-np.expm1(-values))


def _values(z):
    return z.values if isinstance(z, (UniformizedIsis, RescaledIsis)) else np.asarray(z, float)


# -- uniformity -----------------------------------------------------------

def kolmogorov_sf(x, tol=1e-12):
    """Survival function of the limiting Kolmogorov distribution.

    Uses the Jacobi theta form for small ``x`` and the alternating series
    otherwise; each stops once terms drop below ``tol``.
    """
    if x <= 0:
        return 1.0
    if x < 1.0:
        # P(K <= x) = sqrt(2 pi) / x sum_k exp(-(2k - 1)^2 pi^2 / (8 x^2))
        total = 0.0
        k = 1
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * math.pi ** 2 / (8 * x * x))
            total += term
            if term < tol:
                break
            k += 1
        return min(1.0, max(0.0, 1.0 - math.sqrt(2 * math.pi) / x * total))
    total = 0.0
    k = 1
    while True:
        term = math.exp(-2.0 * k * k * x * x)
        total += term if k % 2 else -term
        if term < tol:
            break
        k += 1
    return min(1.0, max(0.0, 2.0 * total))


def ks_statistic(z):
    """One-sample KS distance between the empirical CDF of ``z`` and Uniform[0, 1]."""
    z = np.sort(_values(z))
    n = z.size
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - z)
    d_minus = np.max(z - (i - 1) / n)
    return float(max(d_plus, d_minus))


def ks_uniformity_test(z):
    """KS test against Uniform[0, 1] with the asymptotic p-value.

    Returns
    -------
    statistic, p_value : float
    """
    z = _values(z)
    if z.size < 10:
        raise InsufficientData(f"uniformity test needs >= 10 values, got {z.size}")
    d = ks_statistic(z)
    return d, kolmogorov_sf(math.sqrt(z.size) * d)


# -- rank dependence ------------------------------------------------------

def _as_pairs(pairs):
    pairs = np.asarray(_values(pairs), dtype=float)
    if pairs.ndim == 1:
        pairs = np.column_stack([pairs[:-1], pairs[1:]])
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise RejectedInput("expected a sequence or an (m, 2) array of pairs")
    return pairs


def kendall_tau_test(pairs):
    """Kendall's tau of adjacent pairs with a two-sided normal-approximation p-value.

    ``pairs`` is either a sequence (adjacent couples are formed) or an
    ``(m, 2)`` array. Ties are handled by the tau-b correction.
    """
    pairs = _as_pairs(pairs)
    m = pairs.shape[0]
    if m < 10:
        raise InsufficientData(f"Kendall test needs >= 10 pairs, got {m}")
    tau = stats.kendalltau(pairs[:, 0], pairs[:, 1], variant="b").statistic
    if not np.isfinite(tau):
        # a constant coordinate carries no rank information
        return float("nan"), 1.0
    var = 2.0 * (2 * m + 5) / (9.0 * m * (m - 1))
    z = tau / math.sqrt(var)
    return float(tau), float(2 * stats.norm.sf(abs(z)))


# -- copula ---------------------------------------------------------------

def pseudo_observations(pairs):
    """Average ranks scaled by ``1 / (m + 1)``, column by column."""
    pairs = _as_pairs(pairs)
    ranks = stats.rankdata(pairs, axis=0)
    return ranks / (pairs.shape[0] + 1)


def empirical_copula(pairs, u, v):
    """Empirical copula of ``pairs`` at ``(u, v)``."""
    pairs = _as_pairs(pairs)
    if pairs.shape[0] == 0:
        raise InsufficientData("empirical copula of an empty sample")
    pobs = pseudo_observations(pairs)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    ub, vb = np.broadcast_arrays(u, v)
    below = ((pobs[:, 0] <= ub.reshape(-1, 1)) & (pobs[:, 1] <= vb.reshape(-1, 1)))
    out = below.mean(axis=1).reshape(ub.shape)
    return out if out.ndim else float(out)


def copula_cvm_statistic(pobs):
    """``sum_i (C_m(U_i, V_i) - U_i V_i)^2`` over the pseudo-observations."""
    u, v = pobs[:, 0], pobs[:, 1]
    m = u.size
    counts = np.empty(m)
    step = max(1, 4_000_000 // m)
    for k in range(0, m, step):
        sl = slice(k, k + step)
        counts[sl] = ((u[None, :] <= u[sl, None]) & (v[None, :] <= v[sl, None])).sum(axis=1)
    return float(np.sum((counts / m - u * v) ** 2))


def _replicate_rng(seed, index):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


@lru_cache(maxsize=32)
def _null_statistics(m, n_bootstrap, seed):
    """Copula CvM statistics of ``n_bootstrap`` independent-uniform samples of size ``m``.

    Replicate ``b`` draws from its own stream keyed on ``(seed, b)``, so the
    result does not depend on evaluation order.
    """
    out = np.empty(n_bootstrap)
    for b in range(n_bootstrap):
        sample = _replicate_rng(seed, b).random((m, 2))
        out[b] = copula_cvm_statistic(pseudo_observations(sample))
    out.flags.writeable = False
    return out


def copula_gof_independence(pairs, n_bootstrap=1000, seed=0):
    """Cramer-von Mises test of the independence copula, parametric bootstrap.

    Returns
    -------
    statistic, p_value : float
        ``p_value`` is the share of null replicates at least as large as
        the observed statistic.
    """
    pairs = _as_pairs(pairs)
    m = pairs.shape[0]
    if m < 30:
        raise InsufficientData(f"copula test needs >= 30 pairs, got {m}")
    if n_bootstrap < 100:
        raise InsufficientData(f"copula test needs >= 100 bootstrap replicates, got {n_bootstrap}")
    stat = copula_cvm_statistic(pseudo_observations(pairs))
    null = _null_statistics(m, int(n_bootstrap), int(seed))
    return stat, float(np.mean(null >= stat))


# -- pipeline -------------------------------------------------------------

@dataclass(frozen=True)
class ValidationConfig:
    level: float = 0.05
    n_bootstrap: int = 1000
    seed: int = 0
    grid_step: float = None

    def __post_init__(self):
        if not 0 < self.level < 1:
            raise RejectedInput(f"level must lie in (0, 1), got {self.level}")
        if self.n_bootstrap < 100:
            raise RejectedInput(f"n_bootstrap must be >= 100, got {self.n_bootstrap}")
        if self.grid_step is not None and not self.grid_step > 0:
            raise RejectedInput(f"grid_step must be positive, got {self.grid_step}")

    def to_dict(self):
        return {"level": self.level, "n_bootstrap": self.n_bootstrap,
                "seed": self.seed, "grid_step": self.grid_step}


@dataclass(frozen=True)
class ValidationReport:
    rescaled: RescaledIsis
    uniformized: UniformizedIsis
    ks_statistic: float
    ks_pvalue: float
    kendall_tau: float
    kendall_pvalue: float
    copula_statistic: float
    copula_pvalue: float
    config: ValidationConfig = field(default_factory=ValidationConfig)

    def verdict(self, p_value):
        return "pass" if p_value > self.config.level else "reject"

    @property
    def verdicts(self):
        return {
            "uniformity": self.verdict(self.ks_pvalue),
            "kendall": self.verdict(self.kendall_pvalue),
            "copula": self.verdict(self.copula_pvalue),
        }

    def to_dict(self):
        def num(x):
            return None if x is None or not np.isfinite(x) else float(x)

        return {
            "n_rescaled": int(self.rescaled.count),
            "uniformity": {"test": "kolmogorov-smirnov",
                           "statistic": num(self.ks_statistic),
                           "p_value": num(self.ks_pvalue)},
            "kendall": {"tau": num(self.kendall_tau),
                        "p_value": num(self.kendall_pvalue)},
            "copula": {"test": "cramer-von-mises independence copula",
                       "statistic": num(self.copula_statistic),
                       "p_value": num(self.copula_pvalue)},
            "verdicts": self.verdicts,
            "config": self.config.to_dict(),
        }


def validate_path(train, path, config=None):
    """Run rescale, uniformize and the three tests for a given intensity path."""
    config = config or ValidationConfig()
    rescaled = rescale(train, path)
    z = uniformize(rescaled)
    ks_d, ks_p = ks_uniformity_test(z)
    tau, tau_p = kendall_tau_test(z.values)
    cvm, cvm_p = copula_gof_independence(z.values, config.n_bootstrap, config.seed)
    return ValidationReport(rescaled, z, ks_d, ks_p, tau, tau_p, cvm, cvm_p, config)


def validate(train, fitted, config=None):
    """Estimate the intensity path along ``train`` with ``fitted`` and validate it."""
    config = config or ValidationConfig()
    if not isinstance(train, SpikeTrain):
        train = SpikeTrain(train)
    path = conditional_intensity_path(fitted, train, grid_step=config.grid_step)
    return validate_path(train, path, config)
