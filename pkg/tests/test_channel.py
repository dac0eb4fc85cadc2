import numpy as np
import pytest
from numpy.testing import assert_allclose

from sscsim.channel import (ChannelConfigError, ChannelRealization, draw_channel, effective_matrix,
                            snr_to_noise_var, time_domain_matrix, transmit_frequency_domain,
                            transmit_time_domain)
from sscsim.codebook import build_codebook
from sscsim.codec import CodeParams
from sscsim.numerics import RandomStream


def random_block(M, seed):
    g = RandomStream(seed, 0).generator
    return g.standard_normal(M) + 1j * g.standard_normal(M)


def test_time_and_frequency_paths_agree():
    M, L_ch = 128, 4
    for trial in range(100):
        ch = draw_channel(L_ch, M, RandomStream(5, trial))
        x = random_block(M, trial)
        y_t = transmit_time_domain(x, ch, 0.1, RandomStream(6, trial)).y
        y_f = transmit_frequency_domain(x, ch, 0.1, RandomStream(6, trial)).y
        assert_allclose(y_t, y_f, atol=1e-10)


@pytest.mark.parametrize("M,L_ch", [(8, 1), (16, 4), (32, 7)])
def test_circulant_is_diagonalized_by_the_dft(M, L_ch):
    ch = draw_channel(L_ch, M, RandomStream(2, M))
    F = np.fft.fft(np.eye(M), norm="ortho")
    assert_allclose(F @ time_domain_matrix(ch) @ F.conj().T, np.diag(ch.eigenvalues), atol=1e-10)


def test_longer_prefix_is_harmless():
    ch = draw_channel(3, 32, RandomStream(1, 1), cp_len=8)
    x = random_block(32, 4)
    assert_allclose(transmit_time_domain(x, ch, 0.0, RandomStream(0, 0)).y, ch.eigenvalues * x, atol=1e-10)


def test_short_prefix_is_rejected():
    ch = ChannelRealization.from_taps(np.ones(4) / 2, 16, cp_len=2)
    with pytest.raises(ChannelConfigError):
        transmit_time_domain(np.ones(16), ch, 0.0, RandomStream(0, 0))


def test_channel_has_unit_average_power():
    powers = [np.sum(np.abs(draw_channel(4, 64, RandomStream(3, i)).taps) ** 2) for i in range(5000)]
    assert np.mean(powers) == pytest.approx(1.0, abs=0.05)


def test_channel_draws_are_reproducible():
    a = draw_channel(4, 64, RandomStream(3, 1))
    b = draw_channel(4, 64, RandomStream(3, 1))
    assert np.array_equal(a.taps, b.taps)
    assert a.seed == b.seed


def test_identity_channel():
    ch = ChannelRealization.identity(16)
    assert_allclose(ch.eigenvalues, np.ones(16))
    x = random_block(16, 2)
    assert_allclose(transmit_time_domain(x, ch, 0.0, RandomStream(0, 0)).y, x, atol=1e-12)


def test_block_length_must_match():
    ch = ChannelRealization.identity(16)
    with pytest.raises(ValueError):
        transmit_frequency_domain(np.ones(8), ch, 0.0, RandomStream(0, 0))
    with pytest.raises(ValueError):
        draw_channel(17, 16, RandomStream(0, 0))


def test_effective_matrix_scales_rows():
    params = CodeParams(N=40, K=2, M=16, R=0.5)
    codebook = build_codebook(params, 3)
    ch = draw_channel(4, 16, RandomStream(4, 4))
    phi = effective_matrix(ch, codebook)
    assert_allclose(phi.to_dense(), np.diag(ch.eigenvalues) @ codebook.to_dense(), atol=1e-14)
    assert np.array_equal(phi.rows, codebook.rows)


def test_noise_power_follows_snr():
    assert snr_to_noise_var(10.0) == pytest.approx(0.1)
    assert snr_to_noise_var(0.0) == 1.0
    M = 1 << 20
    y = transmit_frequency_domain(np.zeros(M), ChannelRealization.identity(M), snr_to_noise_var(3.0),
                                  RandomStream(1, 2)).y
    assert np.mean(np.abs(y) ** 2) == pytest.approx(10 ** -0.3, rel=0.02)
