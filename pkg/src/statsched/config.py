"""Problem configuration shared by all solver and simulation modules."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


@dataclass
class ProblemConfig:
    """Scalar hyperparameters of one scheduling instance.

    Shapes elsewhere follow (n_users, n_rbgs, n_streams) = (I, N, L); the
    per-RBG stream cap is ``l_max`` and the total power budget ``p_max``.
    """

    n_t: int = 16
    n_r: int = 4
    n_users: int = 4
    n_rbgs: int = 1
    n_streams: int = 1
    l_max: int = 4
    p_max: float = 10.0
    sigma_sq: float = 1.0
    delta: float = 1e-10
    mu: np.ndarray = None
    w: float = 20.0
    theta: float = 5.0
    r_exp: float = 2.0
    r_min: np.ndarray = None

    def __post_init__(self):
        if self.mu is None:
            self.mu = np.ones(self.n_users)
        else:
            self.mu = np.asarray(self.mu, dtype=float)
        if self.r_min is None:
            self.r_min = np.full(self.n_users, 5.0)
        else:
            self.r_min = np.broadcast_to(
                np.asarray(self.r_min, dtype=float), (self.n_users,)
            ).copy()
        for name in ("n_t", "n_r", "n_users", "n_rbgs", "n_streams", "l_max"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.l_max > self.n_users * self.n_streams:
            raise ValueError("l_max cannot exceed n_users * n_streams")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.mu.shape != (self.n_users,) or np.any(self.mu < 0):
            raise ValueError("mu must be a nonnegative vector of length n_users")
        if self.theta <= 0 or self.w < 0 or self.r_exp < 1:
            raise ValueError("require theta > 0, w >= 0, r_exp >= 1")

    @property
    def snr_db(self) -> float:
        return 10.0 * np.log10(self.p_max / self.sigma_sq)

    def with_snr_db(self, snr_db: float) -> "ProblemConfig":
        """Copy with sigma_sq set so that p_max / sigma_sq hits the given SNR."""
        return replace(self, sigma_sq=self.p_max / 10.0 ** (snr_db / 10.0))

    def to_dict(self) -> dict:
        return {
            "n_t": self.n_t,
            "n_r": self.n_r,
            "n_users": self.n_users,
            "n_rbgs": self.n_rbgs,
            "n_streams": self.n_streams,
            "l_max": self.l_max,
            "p_max": self.p_max,
            "sigma_sq": self.sigma_sq,
            "delta": self.delta,
            "mu": self.mu.tolist(),
            "w": self.w,
            "theta": self.theta,
            "r_exp": self.r_exp,
            "r_min": self.r_min.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemConfig":
        return cls(**d)
