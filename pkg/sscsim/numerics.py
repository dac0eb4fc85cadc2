"""
Numerical substrate shared by the transmitter, channel and receiver: the
unitary DFT, small Hermitian solves for the least-squares step, seeded random
streams and the multiply-accumulate counter used for complexity accounting.
"""
from enum import IntEnum

import numpy as np
from scipy import linalg

RNG_NAME = "numpy.random.Philox (4x64-10) keyed by SeedSequence(master_seed, spawn_key=(stream_id,))"
MAX_SOLVE_DIM = 16
CONDITION_LIMIT = 1e12


class DegenerateSupportError(ArithmeticError):
    """The Gram matrix of a candidate support is singular or ill-conditioned."""


class Purpose(IntEnum):
    PAYLOAD = 1
    CHANNEL = 2
    NOISE = 3
    CODEBOOK = 4
    SAMPLING = 5


class RandomStream:
    """
    A reproducible draw sequence identified by (master_seed, stream_id).

    Philox is counter based, so every stream is independent of the others and
    of the order in which they are consumed.
    """

    def __init__(self, master_seed: int, stream_id: int):
        self.master_seed = int(master_seed) & 0xFFFFFFFFFFFFFFFF
        self.stream_id = int(stream_id) & 0xFFFFFFFFFFFFFFFF
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.Philox(seq))

    @classmethod
    def derive(cls, master_seed: int, purpose: Purpose, index: int = 0) -> "RandomStream":
        # top byte holds the purpose, the rest the trial or point index
        return cls(master_seed, (int(purpose) << 56) | (int(index) & ((1 << 56) - 1)))

    def bits(self, n: int) -> np.ndarray:
        return self.generator.integers(0, 2, size=n, dtype=np.uint8)

    def __repr__(self):
        return f"RandomStream(master_seed={self.master_seed}, stream_id={self.stream_id:#x})"


class MacCounter:
    """Running multiply-accumulate tally."""

    def __init__(self):
        self.total = 0

    def add(self, n):
        self.total += int(n)

    def reset(self):
        self.total = 0


def count(counter, n):
    if counter is not None:
        counter.add(n)


def check_finite(v: np.ndarray, what: str = "vector") -> np.ndarray:
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{what} contains NaN or Inf entries")
    return v


def dft(v, inverse: bool = False) -> np.ndarray:
    """Unitary DFT of any length (1/sqrt(M) normalization both ways)."""
    v = np.asarray(v, dtype=np.complex128)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("dft needs a non-empty one-dimensional vector")
    out = np.fft.ifft(v, norm="ortho") if inverse else np.fft.fft(v, norm="ortho")
    return check_finite(out, "dft output")


def hermitian_solve(U, c) -> np.ndarray:
    """Solve U z = c for Hermitian positive definite U of dimension <= 16."""
    U = np.asarray(U, dtype=np.complex128)
    c = np.asarray(c, dtype=np.complex128)
    k = U.shape[0]
    if U.shape != (k, k) or c.shape != (k,):
        raise ValueError(f"shape mismatch: U {U.shape}, c {c.shape}")
    if k == 0 or k > MAX_SOLVE_DIM:
        raise ValueError(f"dimension {k} outside 1..{MAX_SOLVE_DIM}")
    if not np.all(np.isfinite(U)) or np.linalg.cond(U) > CONDITION_LIMIT:
        raise DegenerateSupportError(f"Gram matrix of size {k} is ill-conditioned")
    try:
        factor = linalg.cho_factor(U, lower=True, check_finite=False)
    except linalg.LinAlgError as e:
        raise DegenerateSupportError(str(e)) from e
    return check_finite(linalg.cho_solve(factor, c, check_finite=False), "solution")


def draw_gaussian(stream: RandomStream, n: int, variance: float) -> np.ndarray:
    """n i.i.d. circularly-symmetric complex Gaussians with E|w|^2 = variance."""
    if variance < 0:
        raise ValueError(f"negative variance {variance}")
    if variance == 0:
        return np.zeros(n, dtype=np.complex128)
    parts = stream.generator.standard_normal((2, n))
    return np.sqrt(variance / 2.0) * (parts[0] + 1j * parts[1])
