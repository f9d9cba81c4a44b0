"""Deterministic equivalents of the RZF SINR from channel statistics.

Two solvers live here: the finite-regularization fixed point (with its
auxiliary derivative systems) and its zero-regularization limit, which is
the cheap form the scheduler optimizes. Index convention inside one RBG:
streams are flattened as a = i * L + l.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .channel import CorrelationSet

BAR_E_FLOOR = 1e-14


class FixedPointError(RuntimeError):
    """Fixed-point iteration failed to converge; carries the last residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass
class DeZfSolution:
    """Zero-regularization fixed-point values bar_e, shape (I, N, L)."""

    bar_e: np.ndarray
    iterations: int
    residual: float


@dataclass
class DeRzfSolution:
    """Finite-regularization solution: e, e', cross derivatives and SINR.

    ``e_prime_cross[n]`` is the per-RBG matrix with entry [jq, il] holding
    the derivative trace of stream (j, q) against target stream (i, l).
    """

    e: np.ndarray
    e_prime: np.ndarray
    e_prime_cross: list
    b: np.ndarray
    gamma_bar: np.ndarray
    iterations: int
    residual: float


def _flat_per_rbg(corr: CorrelationSet, alpha: np.ndarray, n: int):
    i_, l_ = corr.n_users, corr.n_streams
    r_flat = corr.r.reshape(i_ * l_, corr.n_t, corr.n_t)
    return r_flat, np.asarray(alpha, dtype=float)[:, n, :].reshape(-1)


def _solve_bar_e_rbg(r_flat, a_flat, n_t, tol, max_iter):
    traces = np.einsum("aii->a", r_flat).real
    e = np.ones(r_flat.shape[0])
    clamped = False
    residual = np.inf
    for it in range(1, max_iter + 1):
        m = np.eye(n_t) + np.tensordot(a_flat / (n_t * e), r_flat, axes=(0, 0))
        t_n = np.linalg.inv(m)
        e_new = np.einsum("aij,ji->a", r_flat, t_n).real / n_t
        if e_new.min() < BAR_E_FLOOR:
            e_new = np.maximum(e_new, BAR_E_FLOOR)
            clamped = True
        residual = float(np.abs(e_new - e).max())
        e = e_new
        if residual < tol:
            break
    else:
        raise FixedPointError(
            f"bar_e fixed point did not converge (residual {residual:.3e})",
            residual,
        )
    if clamped:
        warnings.warn(
            "bar_e iterate hit the positivity floor; the vanishing-"
            "regularization limit may not exist for this instance",
            RuntimeWarning,
        )
    if np.any((e <= BAR_E_FLOOR) & (traces > 0)):
        raise FixedPointError(
            "bar_e collapsed to the positivity floor for a stream with "
            "positive correlation trace",
            residual,
        )
    return e, it, residual


def solve_bar_e(
    corr: CorrelationSet,
    alpha: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 10000,
) -> DeZfSolution:
    """Solve the zero-regularization fixed point per RBG.

    Iterates bar_e <- (1/n_t) Tr(R_il (sum_jq a_jq R_jq / (n_t bar_e_jq)
    + I)^{-1}) from the all-ones start until the largest update falls
    below ``tol``.
    """
    alpha = np.asarray(alpha, dtype=float)
    i_, n_, l_ = alpha.shape
    bar_e = np.empty((i_, n_, l_))
    iterations = 0
    residual = 0.0
    for n in range(n_):
        r_flat, a_flat = _flat_per_rbg(corr, alpha, n)
        e, it, res = _solve_bar_e_rbg(r_flat, a_flat, corr.n_t, tol, max_iter)
        bar_e[:, n, :] = e.reshape(i_, l_)
        iterations = max(iterations, it)
        residual = max(residual, res)
    return DeZfSolution(bar_e=bar_e, iterations=iterations, residual=residual)


def de_sinr_zf(
    sol: DeZfSolution, sched, sigma_sq, n_t: int
) -> np.ndarray:
    """Zero-regularization DE SINR: n_t * alpha * p * bar_e / sigma^2."""
    i_, n_, l_ = sched.alpha.shape
    sigma = np.broadcast_to(np.asarray(sigma_sq, dtype=float), (i_, n_))
    return n_t * sched.alpha * sched.p * sol.bar_e / sigma[:, :, None]


def de_rate(gamma_bar: np.ndarray, mu: np.ndarray):
    """Per-user DE rates sum_nl log(1 + gamma_bar) and their weighted sum."""
    rate_per_user = np.log1p(gamma_bar).sum(axis=(1, 2))
    return rate_per_user, float(np.asarray(mu, dtype=float) @ rate_per_user)


def relative_error(real_sum: float, de_sum: float) -> float:
    """Signed relative error (real - de) / de of two sum rates."""
    if de_sum == 0:
        raise ValueError("de_sum must be nonzero")
    return (real_sum - de_sum) / de_sum


def _pairwise_traces(r_flat, t_n):
    """S[a, b] = Tr(R_a T R_b T), real symmetric for Hermitian inputs."""
    rt = r_flat @ t_n  # (A, n_t, n_t)
    n_streams = r_flat.shape[0]
    s = np.einsum("aij,bji->ab", rt, rt).real
    return 0.5 * (s + s.T) if n_streams > 1 else s


def solve_de_rzf(
    corr: CorrelationSet,
    sched,
    delta: float,
    sigma_sq,
    tol: float = 1e-12,
    max_iter: int = 10000,
) -> DeRzfSolution:
    """Finite-regularization DE: fixed point for e, linear systems for e'.

    e iterates from 1/delta per RBG with a relative-update stopping rule
    (its scale grows like 1/delta, so an absolute rule is meaningless).
    Both derivative systems are linear in the unknowns and share the same
    system matrix, so they are solved exactly with one factorization.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    alpha = np.asarray(sched.alpha, dtype=float)
    p = np.asarray(sched.p, dtype=float)
    i_, n_, l_ = alpha.shape
    n_t = corr.n_t
    sigma = np.broadcast_to(np.asarray(sigma_sq, dtype=float), (i_, n_))

    e_out = np.empty((i_, n_, l_))
    ep_out = np.empty((i_, n_, l_))
    b_out = np.empty((i_, n_, l_))
    gamma = np.empty((i_, n_, l_))
    cross_out = []
    iterations = 0
    residual = 0.0

    for n in range(n_):
        r_flat, a_flat = _flat_per_rbg(corr, alpha, n)
        p_flat = p[:, n, :].reshape(-1)
        n_flat = r_flat.shape[0]
        e = np.full(n_flat, 1.0 / delta)
        res = np.inf
        for it in range(1, max_iter + 1):
            m = delta * np.eye(n_t) + np.tensordot(
                a_flat / (n_t * (1.0 + e)), r_flat, axes=(0, 0)
            )
            t_n = np.linalg.inv(m)
            e_new = np.einsum("aij,ji->a", r_flat, t_n).real / n_t
            res = float(np.abs(e_new - e).max() / max(np.abs(e_new).max(), 1.0))
            e = e_new
            if res < tol:
                break
        else:
            raise FixedPointError(
                f"rzf DE fixed point did not converge (residual {res:.3e})", res
            )
        iterations = max(iterations, it)
        residual = max(residual, res)

        s = _pairwise_traces(r_flat, t_n)
        sys = np.eye(n_flat) - s * (a_flat / (n_t**2 * (1.0 + e) ** 2))[None, :]
        t_sq = np.einsum("aij,ji->a", r_flat, t_n @ t_n).real / n_t
        try:
            e_prime = np.linalg.solve(sys, t_sq)
            cross = np.linalg.solve(sys, s / n_t)  # cross[jq, il]
        except np.linalg.LinAlgError as exc:
            raise FixedPointError(
                "derivative system is singular; the fixed point is not "
                "locally unique for this instance",
                res,
            ) from exc

        ap = a_flat * p_flat
        ratio = cross / e_prime[:, None]  # [jq, il]
        b = ap @ ratio - ap * np.diag(ratio)
        num = n_t * ap * e**2 * (1.0 + e) ** 2
        noise = np.repeat(sigma[:, n], l_)
        den = e_prime * b + e_prime * noise * (1.0 + e) ** 2
        g = num / den
        g[a_flat == 0.0] = 0.0

        e_out[:, n, :] = e.reshape(i_, l_)
        ep_out[:, n, :] = e_prime.reshape(i_, l_)
        b_out[:, n, :] = b.reshape(i_, l_)
        gamma[:, n, :] = g.reshape(i_, l_)
        cross_out.append(cross)

    return DeRzfSolution(
        e=e_out,
        e_prime=ep_out,
        e_prime_cross=cross_out,
        b=b_out,
        gamma_bar=gamma,
        iterations=iterations,
        residual=residual,
    )
