"""Correlated channel synthesis, correlation estimation, and serialization.

Channels are "effective" per-stream vectors of length n_t obtained after
SVD combining at the receiver; their second-order statistics are the
per-user/per-stream Hermitian PSD correlation matrices held in a
:class:`CorrelationSet`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
PSD_TOL = -1e-10


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator so parallel batches can split seed ranges."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass
class CorrelationSet:
    """Per-user/per-stream correlation matrices, shape (I, L, n_t, n_t)."""

    r: np.ndarray

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=complex)
        if self.r.ndim != 4 or self.r.shape[2] != self.r.shape[3]:
            raise ValueError("correlation array must have shape (I, L, n_t, n_t)")
        herm_gap = np.abs(self.r - np.conj(np.swapaxes(self.r, 2, 3)))
        if herm_gap.max() > HERMITIAN_TOL:
            i, l = np.unravel_index(
                herm_gap.reshape(self.r.shape[0], self.r.shape[1], -1)
                .max(axis=2)
                .argmax(),
                self.r.shape[:2],
            )
            raise ValueError(f"correlation matrix ({i},{l}) is not Hermitian")
        eigs = np.linalg.eigvalsh(self.r)
        if eigs.min() < PSD_TOL:
            i, l = np.unravel_index(eigs.min(axis=2).argmin(), self.r.shape[:2])
            raise ValueError(f"correlation matrix ({i},{l}) is not PSD")
        self._sqrt = None

    @property
    def n_users(self) -> int:
        return self.r.shape[0]

    @property
    def n_streams(self) -> int:
        return self.r.shape[1]

    @property
    def n_t(self) -> int:
        return self.r.shape[2]

    @property
    def max_spectral_norm(self) -> float:
        return float(np.linalg.eigvalsh(self.r).max())

    def sqrt_factors(self) -> np.ndarray:
        """Hermitian PSD matrix square roots, negative eigenvalues clamped."""
        if self._sqrt is None:
            vals, vecs = np.linalg.eigh(self.r)
            vals = np.clip(vals, 0.0, None)
            self._sqrt = np.einsum(
                "ilab,ilb,ilcb->ilac", vecs, np.sqrt(vals), np.conj(vecs)
            )
        return self._sqrt

    @classmethod
    def identity(cls, n_users: int, n_streams: int, n_t: int) -> "CorrelationSet":
        """Rayleigh fading: identity correlation for every (user, stream)."""
        r = np.broadcast_to(np.eye(n_t), (n_users, n_streams, n_t, n_t)).copy()
        return cls(r.astype(complex))

    @classmethod
    def random_psd(
        cls,
        n_users: int,
        n_streams: int,
        n_t: int,
        seed,
        eigenvalue_spread: float = 4.0,
    ) -> "CorrelationSet":
        """Random correlation matrices with Tr(R) = n_t.

        Eigenvalues are drawn log-uniformly over ``eigenvalue_spread``
        decades-ish of relative scale, eigenvectors Haar-random.
        """
        rng = make_rng(seed)
        r = np.empty((n_users, n_streams, n_t, n_t), dtype=complex)
        for i in range(n_users):
            for l in range(n_streams):
                a = rng.standard_normal((n_t, n_t)) + 1j * rng.standard_normal(
                    (n_t, n_t)
                )
                q, _ = np.linalg.qr(a)
                lam = np.exp(rng.uniform(0.0, np.log(eigenvalue_spread), n_t))
                lam *= n_t / lam.sum()
                r[i, l] = (q * lam) @ np.conj(q.T)
                r[i, l] = 0.5 * (r[i, l] + np.conj(r[i, l].T))
        return cls(r)


@dataclass
class ChannelRealization:
    """One draw of effective channels, shape (I, N, L, n_t)."""

    h: np.ndarray
    seed: object = None

    @property
    def n_users(self) -> int:
        return self.h.shape[0]

    @property
    def n_rbgs(self) -> int:
        return self.h.shape[1]

    @property
    def n_streams(self) -> int:
        return self.h.shape[2]

    @property
    def n_t(self) -> int:
        return self.h.shape[3]


@dataclass
class RawChannelSample:
    """One raw channel sample H[i][n] of shape (I, N, n_r, n_t)."""

    h_mat: np.ndarray
    index: int = 0

    def __post_init__(self):
        self.h_mat = np.asarray(self.h_mat, dtype=complex)
        if self.h_mat.ndim != 4:
            raise ValueError("raw sample must have shape (I, N, n_r, n_t)")
        if not np.all(np.isfinite(self.h_mat)):
            raise ValueError("raw sample contains non-finite entries")


def sample_effective_channels(
    corr: CorrelationSet, num_rbgs: int, seed
) -> ChannelRealization:
    """Draw h = sqrt(n_t) R^(1/2) x with x ~ CN(0, I/n_t), i.i.d. per (i,n,l).

    The same R[i][l] is used on every RBG; only the Gaussian draw differs.
    """
    rng = make_rng(seed)
    i_, l_, nt = corr.n_users, corr.n_streams, corr.n_t
    x = rng.standard_normal((i_, num_rbgs, l_, nt)) + 1j * rng.standard_normal(
        (i_, num_rbgs, l_, nt)
    )
    x /= np.sqrt(2.0 * nt)
    roots = corr.sqrt_factors()
    h = np.sqrt(nt) * np.einsum("ilab,inlb->inla", roots, x)
    return ChannelRealization(h=h, seed=seed)


def svd_effective(h_mat: np.ndarray, n_streams: int):
    """Top-L singular values and right singular vectors of one channel matrix.

    Returns (s, v) with s the L largest singular values in descending order
    and v of shape (n_t, L). Each right vector's first entry above 1e-12 in
    magnitude is rotated to be real-positive, so outputs are deterministic.
    The l-th effective channel row is s[l] * v[:, l]^H.
    """
    h_mat = np.asarray(h_mat, dtype=complex)
    n_r, n_t = h_mat.shape
    if n_streams > min(n_r, n_t):
        raise ValueError("n_streams exceeds min(n_r, n_t)")
    _, s, vh = np.linalg.svd(h_mat)
    s = s[:n_streams]
    v = np.conj(vh[:n_streams]).T
    for l in range(n_streams):
        col = v[:, l]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size:
            phase = col[nz[0]] / np.abs(col[nz[0]])
            v[:, l] = col * np.conj(phase)
    return s, v


def estimate_correlation(
    samples: Sequence[RawChannelSample], n_streams: int
) -> CorrelationSet:
    """Sample correlation matrices from raw channel measurements.

    R_hat[i][l] = (1 / (N T)) sum_{n,t} lambda v v^H where lambda is the
    squared l-th singular value of H[i][n] at sample t and v the matching
    right singular vector. Hermitian PSD by construction.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("estimate_correlation needs at least one sample")
    i_, n_, _, nt = samples[0].h_mat.shape
    acc = np.zeros((i_, n_streams, nt, nt), dtype=complex)
    for samp in samples:
        if samp.h_mat.shape[0] != i_ or samp.h_mat.shape[3] != nt:
            raise ValueError("inconsistent raw sample dimensions")
        for i in range(i_):
            for n in range(samp.h_mat.shape[1]):
                s, v = svd_effective(samp.h_mat[i, n], n_streams)
                acc[i] += (s**2)[:, None, None] * np.einsum(
                    "al,bl->lab", v, np.conj(v)
                )
    acc /= n_ * len(samples)
    acc = 0.5 * (acc + np.conj(np.swapaxes(acc, 2, 3)))
    return CorrelationSet(acc)


def save_correlation_set(corr: CorrelationSet, path) -> None:
    """Write a correlation set: text header "I L n_t", then row-major
    float64 (real, imag) pairs, one matrix per record in (i, l) order."""
    with open(path, "wb") as f:
        f.write(f"{corr.n_users} {corr.n_streams} {corr.n_t}\n".encode())
        inter = np.empty(corr.r.shape + (2,), dtype="<f8")
        inter[..., 0] = corr.r.real
        inter[..., 1] = corr.r.imag
        f.write(inter.tobytes())


def load_correlation_set(path) -> CorrelationSet:
    with open(path, "rb") as f:
        header = f.readline().split()
        if len(header) != 3:
            raise ValueError("malformed correlation file header")
        i_, l_, nt = (int(x) for x in header)
        raw = np.frombuffer(f.read(), dtype="<f8")
    expected = i_ * l_ * nt * nt * 2
    if raw.size != expected:
        raise ValueError(f"expected {expected} floats, found {raw.size}")
    raw = raw.reshape(i_, l_, nt, nt, 2)
    return CorrelationSet(raw[..., 0] + 1j * raw[..., 1])


def export_eigenvalue_csv(corr: CorrelationSet, path) -> None:
    """Dump eigenvalue spectra for diagnostics, one row per eigenvalue."""
    eigs = np.linalg.eigvalsh(corr.r)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["user", "stream", "index", "eigenvalue"])
        for i in range(corr.n_users):
            for l in range(corr.n_streams):
                for k, val in enumerate(eigs[i, l][::-1]):
                    writer.writerow([i, l, k, repr(float(val))])
