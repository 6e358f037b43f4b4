"""Seeded synthetic ISI generators.

All generators draw from :func:`numpy.random.default_rng` (PCG64, 128-bit
state), so identical parameters and seed give identical output.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonFiringRegime, RejectedInput
from .isi import IsiSequence

__all__ = [
    "FgmExpParams",
    "TwoCompartmentParams",
    "Trajectory",
    "make_rng",
    "gen_poisson",
    "gen_fgm_exponential",
    "fgm_conditional_quantile",
    "gen_two_compartment",
]

#: Bit generator behind every stream; part of the reproducibility contract.
BIT_GENERATOR = "PCG64"


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def _check_count(n, name="n"):
    if int(n) != n or n < 1:
        raise RejectedInput(f"{name} must be a positive integer, got {n}")
    return int(n)


@dataclass(frozen=True)
class FgmExpParams:
    rate: float = 1.0
    refractory: float = 0.5
    alpha: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.rate > 0:
            raise RejectedInput(f"rate must be positive, got {self.rate}")
        if not self.refractory >= 0:
            raise RejectedInput(
                f"refractory must be non-negative, got {self.refractory}")
        if not abs(self.alpha) <= 1:
            raise RejectedInput(f"alpha must lie in [-1, 1], got {self.alpha}")


@dataclass(frozen=True)
class TwoCompartmentParams:
    """Two-compartment leaky integrate-and-fire neuron.

    ``leak`` and ``coupling`` are the leakage and inter-compartment
    constants, ``drift`` and ``noise`` the mean and standard deviation of
    the dendritic input, ``threshold`` the somatic firing level.
    """

    leak: float = 0.05
    coupling: float = 0.5
    drift: float = 4.0
    noise: float = 1.0
    threshold: float = 10.0
    dt: float = 0.01
    burn_in: int = 100
    seed: int = 0
    max_steps: int = 10**8

    def __post_init__(self):
        for name in ("leak", "coupling", "noise", "threshold", "dt"):
            value = getattr(self, name)
            if not value > 0:
                raise RejectedInput(f"{name} must be positive, got {value}")
        if int(self.burn_in) != self.burn_in or self.burn_in < 0:
            raise RejectedInput(f"burn_in must be a non-negative integer, got {self.burn_in}")
        # explicit stepping of the deterministic part needs dt * rate << 1
        fastest = self.leak + 2 * self.coupling
        if self.dt * fastest > 0.1:
            raise RejectedInput(
                f"dt={self.dt} too coarse for decay rate {fastest} "
                f"(need dt * (leak + 2 coupling) <= 0.1)")
        if self.max_steps < 1:
            raise RejectedInput("max_steps must be positive")


@dataclass(frozen=True)
class Trajectory:
    """Recorded path of the two-compartment model on its time grid."""

    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    spikes: np.ndarray


def gen_poisson(n, rate=1.0, seed=0):
    """``n`` i.i.d. exponential ISIs with the given rate."""
    n = _check_count(n)
    if not rate > 0:
        raise RejectedInput(f"rate must be positive, got {rate}")
    rng = make_rng(seed)
    isis = rng.exponential(1.0 / rate, size=n)
    # exponential draws are positive with probability one; guard the 0 atom
    isis[isis == 0] = np.finfo(float).tiny
    return IsiSequence(isis)


def fgm_conditional_quantile(p, u, alpha):
    """Invert ``v + a v (1 - v) = p`` with ``a = alpha (1 - 2u)`` for ``v``."""
    p = np.asarray(p, dtype=float)
    a = alpha * (1.0 - 2.0 * np.asarray(u, dtype=float))
    small = np.abs(a) <= 1e-12
    a_safe = np.where(small, 1.0, a)
    disc = np.sqrt(np.maximum((1 + a_safe) ** 2 - 4 * a_safe * p, 0.0))
    # the "minus" root written in cancellation-free form
    v = 2 * p / ((1 + a_safe) + disc)
    return np.where(small, p, v)


def gen_fgm_exponential(n, params):
    """Markov chain of shifted-exponential ISIs with FGM-coupled neighbours.

    The first ISI comes from the marginal law; each later one from the
    exact conditional law given its predecessor.
    """
    n = _check_count(n)
    if not isinstance(params, FgmExpParams):
        params = FgmExpParams(**params)
    rng = make_rng(params.seed)
    p = rng.random(n)
    lam, delta, alpha = params.rate, params.refractory, params.alpha
    v = np.empty(n)
    prev = v[0] = p[0]
    # scalar recursion; same formula as fgm_conditional_quantile
    for i, pi in enumerate(p[1:].tolist(), start=1):
        a = alpha * (1.0 - 2.0 * prev)
        if abs(a) <= 1e-12:
            prev = pi
        else:
            disc = math.sqrt(max((1 + a) ** 2 - 4 * a * pi, 0.0))
            prev = 2 * pi / ((1 + a) + disc)
        v[i] = prev
    # 1 - v can underflow to 0 only if p hit 1, which random() excludes
    isis = delta - np.log1p(-v) / lam
    # v = 0 would put the ISI exactly on the refractory bound
    tiny = np.nextafter(delta, np.inf) if delta > 0 else np.finfo(float).tiny
    isis = np.maximum(isis, tiny)
    return IsiSequence(isis)


def gen_two_compartment(params, n_spikes, record_trajectory=False):
    """Simulate the stochastic two-compartment neuron.

    Euler-Maruyama stepping from ``X1 = X2 = 0``; the soma fires at the first
    grid time where ``X2 >= threshold`` and is reset to 0 while the
    dendrite keeps evolving. The first ``burn_in`` ISIs are discarded.

    Returns
    -------
    isis : IsiSequence
        Exactly ``n_spikes`` ISIs.
    trajectory : Trajectory or None
        Only when ``record_trajectory``; covers burn-in as well. States are
        recorded after the reset, so ``x2`` is 0 at spike times.

    Raises
    ------
    NonFiringRegime
        When ``max_steps`` steps pass without completing the train.
    """
    n_spikes = _check_count(n_spikes, "n_spikes")
    p = params
    total = n_spikes + int(p.burn_in)
    rng = make_rng(p.seed)
    dt = p.dt
    a, ar, mu, S = p.leak, p.coupling, p.drift, p.threshold
    sdt = p.noise * math.sqrt(dt)

    spike_steps = []
    rec_x1, rec_x2 = ([], []) if record_trajectory else (None, None)
    x1 = x2 = 0.0
    step = 0
    block = 65536
    while len(spike_steps) < total:
        noise = rng.standard_normal(block) * sdt
        for dw in noise.tolist():
            step += 1
            if step > p.max_steps:
                raise NonFiringRegime(
                    f"only {len(spike_steps)} of {total} spikes within "
                    f"{p.max_steps} steps", budget=p.max_steps)
            x1, x2 = (x1 + (-a * x1 + ar * (x2 - x1) + mu) * dt + dw,
                      x2 + (-a * x2 + ar * (x1 - x2)) * dt)
            if x2 >= S:
                spike_steps.append(step)
                x2 = 0.0
            if rec_x1 is not None:
                # post-reset state: the soma reads 0 at every spike time
                rec_x1.append(x1)
                rec_x2.append(x2)
            if len(spike_steps) == total:
                break

    steps = np.asarray(spike_steps, dtype=np.int64)
    intervals = np.diff(steps, prepend=0)[p.burn_in:] * dt
    isis = IsiSequence(intervals)
    if not record_trajectory:
        return isis, None
    t = np.arange(1, steps[-1] + 1) * dt
    traj = Trajectory(t=t, x1=np.asarray(rec_x1), x2=np.asarray(rec_x2),
                      spikes=steps * dt)
    return isis, traj
