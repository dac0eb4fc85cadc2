"""
Bit mapping of the sparse message.

A payload of b = b_I + b_S bits is split in two: the first b_I bits select the
support through the combinatorial number system (lexicographic order of the
K-subsets of range(N)), the remaining b_S bits become K Gray-labelled QAM
symbols placed on the support in ascending index order. Bits are read
big-endian: the first bit is the most significant.
"""
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

LLR_CLAMP = 50.0


class IllegalSupportError(ValueError):
    """A recovered support whose rank falls outside the 2**b_I mapped subsets."""


def _bits_per_symbol(M_mod):
    m = int(M_mod).bit_length() - 1
    if M_mod < 4 or 1 << m != M_mod or m % 2:
        raise ValueError(f"modulation order {M_mod} is not a power of 4")
    return m


def compute_bit_budget(N, K, M_mod):
    """Return (b_I, b_S, b) with b_I = floor(log2 C(N, K)) computed exactly."""
    if not 1 <= K <= N:
        raise ValueError(f"need 1 <= K <= N, got K={K}, N={N}")
    b_I = math.comb(N, K).bit_length() - 1
    b_S = K * _bits_per_symbol(M_mod)
    return b_I, b_S, b_I + b_S


@dataclass(frozen=True)
class CodeParams:
    N: int
    K: int
    M: int
    M_mod: int = 4
    R: float = 1.0
    L_ch: int = 4
    L_CP: int = -1

    def __post_init__(self):
        if not 1 <= self.K <= self.N:
            raise ValueError(f"need 1 <= K <= N, got K={self.K}, N={self.N}")
        if self.M < 1:
            raise ValueError(f"block length M={self.M} must be positive")
        if not 0 < self.R <= 1:
            raise ValueError(f"sparsity factor R={self.R} outside (0, 1]")
        _bits_per_symbol(self.M_mod)
        if not 1 <= self.L_ch <= self.M:
            raise ValueError(f"channel taps L_ch={self.L_ch} outside 1..M")
        if self.L_CP < 0:
            object.__setattr__(self, "L_CP", self.L_ch - 1)
        if self.L_CP < self.L_ch - 1:
            raise ValueError(f"cyclic prefix {self.L_CP} shorter than channel memory {self.L_ch - 1}")

    @property
    def D(self):
        # round half up, at least one row per column
        return min(self.M, max(1, math.floor(self.R * self.M + 0.5)))

    @property
    def effective_R(self):
        return self.D / self.M

    @property
    def b_I(self):
        return compute_bit_budget(self.N, self.K, self.M_mod)[0]

    @property
    def b_S(self):
        return compute_bit_budget(self.N, self.K, self.M_mod)[1]

    @property
    def b(self):
        return compute_bit_budget(self.N, self.K, self.M_mod)[2]

    @property
    def bits_per_symbol(self):
        return _bits_per_symbol(self.M_mod)


@dataclass(frozen=True)
class SupportSet:
    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"support {idx} is not strictly increasing")
        object.__setattr__(self, "indices", idx)

    def __iter__(self):
        return iter(self.indices)

    def __len__(self):
        return len(self.indices)

    def __getitem__(self, i):
        return self.indices[i]


@dataclass(frozen=True)
class SparseMessage:
    support: SupportSet
    values: np.ndarray = field(compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != (len(self.support),):
            raise ValueError(f"{values.size} values for a support of size {len(self.support)}")
        object.__setattr__(self, "values", values)

    def to_dense(self, N):
        s = np.zeros(N, dtype=np.complex128)
        s[list(self.support)] = self.values
        return s


def bits_to_int(bits):
    value = 0
    for bit in bits:
        value = (value << 1) | int(bit)
    return value


def int_to_bits(value, width):
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def rank_to_support(rank, N, K):
    """Unrank into the lexicographically rank-th K-subset of range(N)."""
    b_I = math.comb(N, K).bit_length() - 1
    if not 0 <= rank < 1 << b_I:
        raise ValueError(f"rank {rank} outside [0, 2**{b_I})")
    # colex complement: x = sum_i C(v_i, K - i) with v_i = N - 1 - s_i decreasing
    x = math.comb(N, K) - 1 - rank
    indices = []
    v = N - 1
    for i in range(K):
        while math.comb(v, K - i) > x:
            v -= 1
        indices.append(N - 1 - v)
        x -= math.comb(v, K - i)
        v -= 1
    return SupportSet(tuple(indices))


def support_to_rank(support, N, K):
    """Lexicographic rank of a K-subset; raises IllegalSupportError past 2**b_I."""
    if not isinstance(support, SupportSet):
        support = SupportSet(tuple(support))
    if len(support) != K:
        raise ValueError(f"support has {len(support)} indices, expected {K}")
    if support[0] < 0 or support[-1] >= N:
        raise ValueError(f"support {support.indices} outside range({N})")
    rank = math.comb(N, K) - 1 - sum(math.comb(N - 1 - s, K - i) for i, s in enumerate(support))
    b_I = math.comb(N, K).bit_length() - 1
    if rank >= 1 << b_I:
        raise IllegalSupportError(f"support {support.indices} has unmapped rank {rank}")
    return rank


def _axis_level(bits):
    # per-axis Gray PAM: a(u0, u1, ...) = (1 - 2 u0) * (2**(n-1) - a(u1, ...))
    # labels arrive as uint8, so lift to int before negating
    sign = 1 - 2 * int(bits[0])
    if len(bits) == 1:
        return sign
    return sign * ((1 << (len(bits) - 1)) - _axis_level(bits[1:]))


@lru_cache(maxsize=None)
def _constellation(M_mod):
    m = _bits_per_symbol(M_mod)
    scale = math.sqrt(3.0 / (2.0 * (M_mod - 1)))
    points = np.empty(M_mod, dtype=np.complex128)
    labels = np.empty((M_mod, m), dtype=np.uint8)
    for label in range(M_mod):
        bits = int_to_bits(label, m)
        # even bit positions drive I, odd positions drive Q
        points[label] = scale * complex(_axis_level(bits[0::2]), _axis_level(bits[1::2]))
        labels[label] = bits
    points.setflags(write=False)
    labels.setflags(write=False)
    return points, labels


def constellation(M_mod):
    """Alphabet indexed by big-endian bit label, unit average energy."""
    return _constellation(M_mod)[0]


def constellation_labels(M_mod):
    return _constellation(M_mod)[1]


def qam_modulate(bits, M_mod):
    bits = np.asarray(bits, dtype=np.uint8)
    m = _bits_per_symbol(M_mod)
    if bits.ndim != 1 or bits.size % m:
        raise ValueError(f"{bits.size} bits is not a multiple of {m} bits per symbol")
    weights = 1 << np.arange(m - 1, -1, -1)
    labels = bits.reshape(-1, m) @ weights
    return constellation(M_mod)[labels]


def llr_demodulate(est, noise_var, M_mod):
    """
    Exact per-symbol LLRs, log P(bit=1)/P(bit=0), clamped to +-50.

    Accepts one estimate (returns log2(M_mod) values) or an array of K
    estimates (returns a K x log2(M_mod) array).
    """
    if noise_var <= 0:
        raise ValueError(f"noise variance must be positive, got {noise_var}")
    points, labels = _constellation(M_mod)
    est = np.asarray(est, dtype=np.complex128)
    metric = -np.abs(est[..., None] - points) ** 2 / noise_var
    ones = labels.T.astype(bool)
    llrs = np.stack([
        logsumexp(metric[..., bit], axis=-1) - logsumexp(metric[..., ~bit], axis=-1)
        for bit in ones
    ], axis=-1)
    return np.clip(llrs, -LLR_CLAMP, LLR_CLAMP)


def hard_decide(llrs):
    return (np.asarray(llrs) >= 0).astype(np.uint8)


def encode_message(payload, params, support_only=False):
    """
    Map a payload to its sparse message.

    With support_only the payload carries b_I bits and every non-zero value
    is 1 (the SVC-like baseline).
    """
    payload = np.asarray(payload, dtype=np.uint8)
    b_I, _, b = compute_bit_budget(params.N, params.K, params.M_mod)
    expected = b_I if support_only else b
    if payload.shape != (expected,):
        raise ValueError(f"payload has {payload.size} bits, expected {expected}")
    support = rank_to_support(bits_to_int(payload[:b_I]), params.N, params.K)
    if support_only:
        values = np.ones(params.K, dtype=np.complex128)
    else:
        values = qam_modulate(payload[b_I:], params.M_mod)
    return SparseMessage(support, values)


def decode_message(support, values, noise_var, params, support_only=False):
    """Recover the payload bits from a decoded support and value estimates."""
    rank = support_to_rank(support, params.N, params.K)
    index_bits = int_to_bits(rank, params.b_I)
    if support_only:
        return index_bits
    llrs = llr_demodulate(np.asarray(values), noise_var, params.M_mod)
    return np.concatenate([index_bits, hard_decide(llrs).reshape(-1)])


def recovery_length_guideline(N, K):
    """K log2(N / K), the order of block length compressed sensing asks for."""
    return K * math.log2(N / K)
