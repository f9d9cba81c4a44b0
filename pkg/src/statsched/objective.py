"""Relaxed scheduling objective and its exact gradients.

The objective is F = F1 + F2 with F1 the weighted relaxed DE sum rate and
F2 a sigmoid bonus per user whose rate clears its minimum. The activation
gradient needs the derivative of the DE fixed point, obtained by implicit
differentiation: one dense linear solve per RBG.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .channel import CorrelationSet
from .config import ProblemConfig
from .det_equiv import DeZfSolution, solve_bar_e
from .link import ScheduleVars


@dataclass
class ObjectiveValue:
    f: float
    f1: float
    f2: float
    rate_hat: np.ndarray
    bar_e: DeZfSolution


@dataclass
class GradientBundle:
    df_dalpha: np.ndarray
    df_dp: np.ndarray
    de_dalpha: list


def relaxed_sinr(sched: ScheduleVars, bar_e: np.ndarray, config: ProblemConfig):
    sigma = np.broadcast_to(
        np.asarray(config.sigma_sq, dtype=float), (config.n_users, config.n_rbgs)
    )[:, :, None]
    return config.n_t * sched.alpha**config.r_exp * sched.p * bar_e / sigma


def rate_relaxed(
    sched: ScheduleVars, bar_e: np.ndarray, config: ProblemConfig
) -> np.ndarray:
    """Per-user relaxed DE rate with the activation raised to r_exp.

    Coincides with the plain DE rate at binary activations.
    """
    return np.log1p(relaxed_sinr(sched, bar_e, config)).sum(axis=(1, 2))


def sigmoid_bonus(rate_hat: np.ndarray, config: ProblemConfig):
    """Active-user bonus F2 and the per-user sigmoid slopes m_i.

    m_i = theta * sigmoid(s) * sigmoid(-s) with s = theta * (rate - r_min);
    the product form stays finite for any |s|.
    """
    s = config.theta * (np.asarray(rate_hat) - config.r_min)
    terms = expit(s)
    m = config.theta * terms * expit(-s)
    return config.w * float(terms.sum()), m


def objective(
    sched: ScheduleVars,
    corr: CorrelationSet,
    config: ProblemConfig,
    bar_e: DeZfSolution = None,
) -> ObjectiveValue:
    """Evaluate F at a (possibly fractional) schedule.

    Solves the DE fixed point at the given activations unless a solution
    is passed in.
    """
    if bar_e is None:
        bar_e = solve_bar_e(corr, sched.alpha)
    rate_hat = rate_relaxed(sched, bar_e.bar_e, config)
    f1 = float(config.mu @ rate_hat)
    f2, _ = sigmoid_bonus(rate_hat, config)
    return ObjectiveValue(f=f1 + f2, f1=f1, f2=f2, rate_hat=rate_hat, bar_e=bar_e)


def grad_e_wrt_alpha(
    corr: CorrelationSet,
    alpha: np.ndarray,
    bar_e: np.ndarray,
    config: ProblemConfig,
) -> list:
    """Implicit derivative of the DE fixed point per RBG.

    Returns one (I*L, I*L) matrix per RBG with entry [a, b] =
    d bar_e_a / d alpha_b, obtained from the fixed-point map Phi as
    (I - dPhi/de)^{-1} dPhi/dalpha. Raises if the system is singular,
    i.e. the fixed point is not locally unique.
    """
    alpha = np.asarray(alpha, dtype=float)
    i_, n_, l_ = alpha.shape
    n_t = config.n_t
    r_flat = corr.r.reshape(i_ * l_, n_t, n_t)
    out = []
    for n in range(n_):
        a_flat = alpha[:, n, :].reshape(-1)
        e_flat = bar_e[:, n, :].reshape(-1)
        m = np.eye(n_t) + np.tensordot(a_flat / (n_t * e_flat), r_flat, axes=(0, 0))
        t_n = np.linalg.inv(m)
        rt = r_flat @ t_n
        s = np.einsum("aij,bji->ab", rt, rt).real
        s = 0.5 * (s + s.T)
        dphi_da = -s / (n_t**2 * e_flat[None, :])
        dphi_de = s * (a_flat / (n_t**2 * e_flat**2))[None, :]
        try:
            g = np.linalg.solve(np.eye(len(e_flat)) - dphi_de, dphi_da)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                "implicit system (I - dPhi/de) is singular; fixed point "
                "not locally unique"
            ) from exc
        out.append(g)
    return out


def _rate_partials(sched: ScheduleVars, bar_e: np.ndarray, config: ProblemConfig):
    """Direct and fixed-point partials of the per-stream rate terms."""
    sigma = np.broadcast_to(
        np.asarray(config.sigma_sq, dtype=float), (config.n_users, config.n_rbgs)
    )[:, :, None]
    r = config.r_exp
    gamma_hat = relaxed_sinr(sched, bar_e, config)
    denom = (1.0 + gamma_hat) * sigma
    df_da_direct = r * config.n_t * sched.alpha ** (r - 1.0) * sched.p * bar_e / denom
    df_de = config.n_t * sched.alpha**r * sched.p / denom
    df_dp = config.n_t * sched.alpha**r * bar_e / denom
    return df_da_direct, df_de, df_dp


def _user_weights(rate_hat: np.ndarray, config: ProblemConfig) -> np.ndarray:
    """mu_i + w * m_i: how much each user's rate movement is worth."""
    _, m = sigmoid_bonus(rate_hat, config)
    return config.mu + config.w * m


def grad_alpha(
    sched: ScheduleVars,
    corr: CorrelationSet,
    config: ProblemConfig,
    bar_e: DeZfSolution = None,
    de_dalpha: list = None,
) -> np.ndarray:
    """dF/dalpha: direct rate terms plus the implicit chain through bar_e."""
    if bar_e is None:
        bar_e = solve_bar_e(corr, sched.alpha)
    if de_dalpha is None:
        de_dalpha = grad_e_wrt_alpha(corr, sched.alpha, bar_e.bar_e, config)
    i_, n_, l_ = sched.alpha.shape
    rate_hat = rate_relaxed(sched, bar_e.bar_e, config)
    weights = _user_weights(rate_hat, config)  # (I,)
    df_da_direct, df_de, _ = _rate_partials(sched, bar_e.bar_e, config)
    grad = weights[:, None, None] * df_da_direct
    for n in range(n_):
        chain_coef = (weights[:, None] * df_de[:, n, :]).reshape(-1)  # (I*L,)
        grad[:, n, :] += (chain_coef @ de_dalpha[n]).reshape(i_, l_)
    return grad


def grad_p(
    sched: ScheduleVars,
    corr: CorrelationSet,
    config: ProblemConfig,
    bar_e: DeZfSolution = None,
) -> np.ndarray:
    """dF/dp: no implicit term, bar_e does not depend on the powers."""
    if bar_e is None:
        bar_e = solve_bar_e(corr, sched.alpha)
    rate_hat = rate_relaxed(sched, bar_e.bar_e, config)
    weights = _user_weights(rate_hat, config)
    _, _, df_dp = _rate_partials(sched, bar_e.bar_e, config)
    return weights[:, None, None] * df_dp


def gradient_bundle(
    sched: ScheduleVars,
    corr: CorrelationSet,
    config: ProblemConfig,
    bar_e: DeZfSolution = None,
) -> GradientBundle:
    if bar_e is None:
        bar_e = solve_bar_e(corr, sched.alpha)
    de_dalpha = grad_e_wrt_alpha(corr, sched.alpha, bar_e.bar_e, config)
    return GradientBundle(
        df_dalpha=grad_alpha(sched, corr, config, bar_e, de_dalpha),
        df_dp=grad_p(sched, corr, config, bar_e),
        de_dalpha=de_dalpha,
    )
