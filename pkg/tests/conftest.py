import numpy as np
import pytest

from statsched import CorrelationSet, ProblemConfig


@pytest.fixture
def small_config():
    """4 single-stream users, one RBG, 16 antennas, SNR 10 dB."""
    return ProblemConfig(
        n_t=16, n_users=4, n_rbgs=1, n_streams=1, l_max=4
    ).with_snr_db(10.0)


@pytest.fixture
def small_corr(small_config):
    return CorrelationSet.identity(
        small_config.n_users, small_config.n_streams, small_config.n_t
    )


@pytest.fixture
def random_corr(small_config):
    return CorrelationSet.random_psd(
        small_config.n_users,
        small_config.n_streams,
        small_config.n_t,
        np.random.SeedSequence(2024),
    )
