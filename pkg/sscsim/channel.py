"""
Block-fading Rayleigh multipath channel with cyclic prefix.

The time-domain path runs the literal chain (IDFT, CP insertion, linear
convolution, CP removal, DFT). With the CP at least as long as the channel
memory this equals y = diag(lambda) x + w, the frequency-domain fast path,
where lambda is the M-point DFT of the zero-padded taps.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .codebook import ColumnSparseMatrix
from .numerics import RandomStream, dft, draw_gaussian


class ChannelConfigError(ValueError):
    """The cyclic prefix cannot absorb the channel memory."""


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    taps: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    cp_len: int = 0
    seed: tuple = (0, 0)

    @classmethod
    def from_taps(cls, taps, M, cp_len=None, seed=(0, 0)):
        taps = np.asarray(taps, dtype=np.complex128).reshape(-1)
        if not 1 <= taps.size <= M:
            raise ValueError(f"{taps.size} taps for a block of {M} samples")
        padded = np.zeros(M, dtype=np.complex128)
        padded[:taps.size] = taps
        # unnormalized DFT: lambda_m = sum_l h_l exp(-2j pi m l / M)
        eigenvalues = np.fft.fft(padded)
        cp_len = taps.size - 1 if cp_len is None else int(cp_len)
        return cls(taps, eigenvalues, cp_len, seed)

    @classmethod
    def identity(cls, M, cp_len=0):
        return cls.from_taps([1.0], M, cp_len)

    @property
    def M(self):
        return self.eigenvalues.size

    @property
    def L_ch(self):
        return self.taps.size


@dataclass(frozen=True, eq=False)
class ReceivedBlock:
    y: np.ndarray = field(repr=False)
    noise_var: float
    channel: ChannelRealization


def draw_channel(L_ch, M, stream: RandomStream, cp_len=None):
    """Taps i.i.d. CN(0, 1/L_ch): uniform power-delay profile, unit total power."""
    if not 1 <= L_ch <= M:
        raise ValueError(f"channel taps L_ch={L_ch} outside 1..{M}")
    taps = draw_gaussian(stream, L_ch, 1.0 / L_ch)
    return ChannelRealization.from_taps(taps, M, cp_len, (stream.master_seed, stream.stream_id))


def time_domain_matrix(ch: ChannelRealization):
    """The circulant H_T the CP turns the convolution into."""
    first_column = np.zeros(ch.M, dtype=np.complex128)
    first_column[:ch.L_ch] = ch.taps
    return linalg.circulant(first_column)


def _check_length(x, ch):
    x = np.asarray(x, dtype=np.complex128)
    if x.shape != (ch.M,):
        raise ValueError(f"block of length {x.size} on a channel of size {ch.M}")
    return x


def transmit_time_domain(x, ch: ChannelRealization, noise_var, stream: RandomStream):
    x = _check_length(x, ch)
    M, cp = ch.M, ch.cp_len
    if ch.L_ch - 1 > cp:
        raise ChannelConfigError(f"cyclic prefix {cp} shorter than channel memory {ch.L_ch - 1}")
    if cp > M:
        raise ChannelConfigError(f"cyclic prefix {cp} longer than the block {M}")
    x_t = dft(x, inverse=True)
    framed = np.concatenate((x_t[M - cp:], x_t))
    received = np.convolve(framed, ch.taps)[cp:cp + M]
    y = dft(received) + draw_gaussian(stream, M, noise_var)
    return ReceivedBlock(y, noise_var, ch)


def transmit_frequency_domain(x, ch: ChannelRealization, noise_var, stream: RandomStream):
    x = _check_length(x, ch)
    y = ch.eigenvalues * x + draw_gaussian(stream, ch.M, noise_var)
    return ReceivedBlock(y, noise_var, ch)


def effective_matrix(ch: ChannelRealization, codebook: ColumnSparseMatrix):
    """Phi = diag(lambda) A_bar, keeping the codebook's sparsity pattern."""
    if codebook.M != ch.M:
        raise ValueError(f"codebook has {codebook.M} rows, channel {ch.M}")
    return ColumnSparseMatrix(codebook.M, codebook.rows, ch.eigenvalues[codebook.rows] * codebook.values)


def snr_to_noise_var(snr_db, params=None):
    """
    sigma^2 = E_s / 10^(snr/10) with E_s = E||x||^2 / M = 1 for unit-power
    channels and unit-energy codewords, so sigma^2 = 10^(-snr/10).
    """
    return 10.0 ** (-snr_db / 10.0)
