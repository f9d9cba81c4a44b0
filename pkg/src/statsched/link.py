"""Exact per-realization RZF precoding, SINR, and Monte-Carlo ergodic rates.

This is the ground-truth link model: everything here works on channel
realizations, never on statistics. Rates are natural-log (nats/channel use).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .channel import ChannelRealization, CorrelationSet, sample_effective_channels


@dataclass
class ScheduleVars:
    """Relaxed activation tensor alpha in [0,1]^(I,N,L) and powers p >= 0."""

    alpha: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if self.alpha.shape != self.p.shape or self.alpha.ndim != 3:
            raise ValueError("alpha and p must share shape (I, N, L)")

    def validate(self, l_max: int, p_max: float, atol: float = 1e-9) -> None:
        if self.alpha.min() < -atol or self.alpha.max() > 1 + atol:
            raise ValueError("alpha outside [0, 1]")
        per_rbg = self.alpha.sum(axis=(0, 2))
        if per_rbg.max() > l_max + atol:
            raise ValueError("per-RBG stream cap violated")
        if self.p.min() < -atol:
            raise ValueError("negative power")
        if self.p.sum() > p_max + atol:
            raise ValueError("total power budget violated")

    @classmethod
    def uniform(cls, config) -> "ScheduleVars":
        """Feasible interior point: uniform alpha under the cap, uniform p."""
        shape = (config.n_users, config.n_rbgs, config.n_streams)
        a0 = min(1.0, config.l_max / (config.n_users * config.n_streams))
        p0 = config.p_max / np.prod(shape)
        return cls(np.full(shape, a0), np.full(shape, p0))


@dataclass
class PrecoderSet:
    """RZF precoders g[i][n][l] (n_t-vectors) with normalizations xi^2."""

    g: np.ndarray
    xi_sq: np.ndarray


@dataclass
class LinkMetrics:
    gamma: np.ndarray
    rate_per_user: np.ndarray
    sum_rate: float


def _regularized_gram_solve(h_flat: np.ndarray, a_flat: np.ndarray, delta: float):
    """Return W^{-1} applied to every channel, W = sum_a a_a h_a h_a^H + delta I.

    Uses a Hermitian positive-definite factorization; W is never inverted
    explicitly (delta ~ 1e-10 makes it badly conditioned).
    """
    n_t = h_flat.shape[1]
    w = np.einsum("a,ai,aj->ij", a_flat, h_flat, np.conj(h_flat))
    w += delta * np.eye(n_t)
    factor = cho_factor(w)
    return cho_solve(factor, h_flat.T)


def rzf_precoders(
    channels: ChannelRealization, alpha: np.ndarray, delta: float
) -> PrecoderSet:
    """Regularized zero-forcing precoders g = xi W^{-1} h per RBG.

    xi^2 = 1 / (h^H W^{-2} h) so every precoder has unit norm.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    i_, n_, l_, nt = channels.h.shape
    g = np.empty((i_, n_, l_, nt), dtype=complex)
    xi_sq = np.empty((i_, n_, l_))
    for n in range(n_):
        h_flat = channels.h[:, n, :, :].reshape(i_ * l_, nt)
        b = _regularized_gram_solve(h_flat, alpha[:, n, :].reshape(-1), delta)
        norms_sq = np.sum(np.abs(b) ** 2, axis=0)
        xi_sq[:, n, :] = (1.0 / norms_sq).reshape(i_, l_)
        g[:, n, :, :] = (b / np.sqrt(norms_sq)).T.reshape(i_, l_, nt)
    return PrecoderSet(g=g, xi_sq=xi_sq)


def instantaneous_sinr(
    channels: ChannelRealization,
    sched: ScheduleVars,
    delta: float,
    sigma_sq,
    mu: np.ndarray = None,
) -> LinkMetrics:
    """Per-stream SINR for one channel draw under RZF precoding.

    gamma numerator: alpha p xi^2 |h^H W^{-1} h|^2; denominator: the
    matching cross terms summed over co-scheduled streams plus noise.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    i_, n_, l_, nt = channels.h.shape
    sigma = np.broadcast_to(np.asarray(sigma_sq, dtype=float), (i_, n_))
    gamma = np.zeros((i_, n_, l_))
    for n in range(n_):
        a_flat = sched.alpha[:, n, :].reshape(-1)
        p_flat = sched.p[:, n, :].reshape(-1)
        h_flat = channels.h[:, n, :, :].reshape(i_ * l_, nt)
        b = _regularized_gram_solve(h_flat, a_flat, delta)
        xi_sq = 1.0 / np.sum(np.abs(b) ** 2, axis=0)
        cross = np.conj(h_flat) @ b  # cross[a, b] = h_a^H W^{-1} h_b
        coef = a_flat * p_flat * xi_sq
        power = np.abs(cross) ** 2 * coef[None, :]
        signal = np.diag(power).copy()
        interference = power.sum(axis=1) - signal
        noise = np.repeat(sigma[:, n], l_)
        g = signal / (interference + noise)
        g[a_flat == 0.0] = 0.0
        gamma[:, n, :] = g.reshape(i_, l_)
    rate_per_user = np.log1p(gamma).sum(axis=(1, 2))
    weights = np.ones(i_) if mu is None else np.asarray(mu, dtype=float)
    return LinkMetrics(
        gamma=gamma,
        rate_per_user=rate_per_user,
        sum_rate=float(weights @ rate_per_user),
    )


def ergodic_rate_mc(
    corr: CorrelationSet,
    sched: ScheduleVars,
    delta: float,
    sigma_sq,
    trials: int,
    seed,
):
    """Monte-Carlo estimate of per-user ergodic rates.

    Returns (rate_per_user, std_error), both length-I arrays. Trials are
    reduced in a fixed order so runs are bit-reproducible for a given seed.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n_rbgs = sched.alpha.shape[1]
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    child_seeds = seed.spawn(trials)
    rates = np.empty((trials, corr.n_users))
    for t in range(trials):
        real = sample_effective_channels(corr, n_rbgs, child_seeds[t])
        rates[t] = instantaneous_sinr(real, sched, delta, sigma_sq).rate_per_user
    mean = rates.mean(axis=0)
    if trials == 1:
        return mean, np.zeros_like(mean)
    stderr = rates.std(axis=0, ddof=1) / np.sqrt(trials)
    return mean, stderr
