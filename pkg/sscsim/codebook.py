"""
Dense Bernoulli and column-sparse codebooks, spreading, and the codebook
file format.

File format (version 1): a UTF-8 JSON object

    {"magic": "SSC-CODEBOOK", "version": 1, "kind": "dense" | "sparse",
     "M": .., "N": .., "K": .., "D": .., "R": .., "seed": ..,
     "generator": RNG_NAME,
     "signs": base64(numpy.packbits(entry < 0)),       # column-major, M*N or N*D bits
     "rows": base64(uint16 little-endian row indices),  # sparse only, N*D values
     "sha256": hex digest of the canonical JSON of every other field}

Values are not stored: they are +-sqrt(1/K) (dense) or +-sqrt(1/(K R)) (sparse)
and are rebuilt from the signs, so a reload is bit-exact.
"""
import base64
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .getconfig import logger
from .numerics import RNG_NAME, Purpose, RandomStream, count

FORMAT_MAGIC = "SSC-CODEBOOK"
FORMAT_VERSION = 1


class CodebookFormatError(ValueError):
    """A codebook file is truncated, corrupted or of an unknown version."""


@dataclass(frozen=True, eq=False)
class ColumnSparseMatrix:
    """M x N matrix storing D (row index, value) pairs per column, rows sorted."""
    M: int
    rows: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.rows.shape != self.values.shape or self.rows.ndim != 2:
            raise ValueError(f"rows {self.rows.shape} and values {self.values.shape} disagree")
        if self.rows.size and (self.rows.min() < 0 or self.rows.max() >= self.M):
            raise ValueError(f"row index outside range({self.M})")

    @property
    def N(self):
        return self.rows.shape[0]

    @property
    def D(self):
        return self.rows.shape[1]

    @property
    def nnz(self):
        return self.rows.size

    def column(self, k):
        return self.rows[k], self.values[k]

    def to_dense(self):
        dense = np.zeros((self.M, self.N), dtype=self.values.dtype)
        dense[self.rows, np.arange(self.N)[:, None]] = self.values
        return dense


@dataclass(frozen=True, eq=False)
class DenseCodebook:
    K: int
    entries: np.ndarray = field(repr=False)
    seed: int = 0
    generator: str = RNG_NAME

    @property
    def M(self):
        return self.entries.shape[0]

    @property
    def N(self):
        return self.entries.shape[1]

    @property
    def storage_cells(self):
        return self.entries.size

    def to_dense(self):
        return self.entries


@dataclass(frozen=True, eq=False)
class SparseCodebook(ColumnSparseMatrix):
    K: int = 1
    R: float = 1.0
    seed: int = 0
    generator: str = RNG_NAME

    @property
    def storage_cells(self):
        return self.nnz


def generate_dense(params, stream: RandomStream):
    """Equiprobable +-sqrt(1/K) entries."""
    signs = stream.generator.integers(0, 2, size=(params.M, params.N), dtype=np.int8)
    entries = (1 - 2 * signs) * math.sqrt(1.0 / params.K)
    return DenseCodebook(params.K, entries, seed=stream.master_seed)


def generate_sampling_matrix(M, N, D, stream: RandomStream):
    """Sorted row-index sets, D distinct rows per column drawn uniformly."""
    if not 1 <= D <= M:
        raise ValueError(f"column weight D={D} outside 1..{M}")
    if D == M:
        return np.tile(np.arange(M), (N, 1))
    keys = stream.generator.random((N, M))
    return np.sort(np.argsort(keys, axis=1)[:, :D], axis=1)


def sparsify(dense: DenseCodebook, sampling, R):
    """Keep the sampled entries of each column and rescale them by sqrt(1/R)."""
    sampling = np.asarray(sampling)
    if sampling.ndim != 2 or sampling.shape[0] != dense.N:
        raise ValueError(f"sampling sets {sampling.shape} do not match {dense.N} columns")
    D = sampling.shape[1]
    if abs(R - D / dense.M) > 1e-9:
        raise ValueError(f"R={R} differs from D/M={D}/{dense.M}")
    # magnitude sqrt(1/(K R)) as a single factor, the same one a reload rebuilds
    signs = np.sign(dense.entries[sampling, np.arange(dense.N)[:, None]])
    values = signs * math.sqrt(1.0 / (dense.K * R))
    return SparseCodebook(dense.M, sampling, values, K=dense.K, R=R,
                          seed=dense.seed, generator=dense.generator)


def build_codebook(params, seed):
    """
    The codebook transmitter and receiver share through the common seed.

    The dense base depends only on the seed and dimensions, so every R drawn
    from one seed sparsifies the same A.
    """
    dense = generate_dense(params, RandomStream.derive(seed, Purpose.CODEBOOK, params.M))
    D = params.D
    if abs(params.R * params.M - D) > 1e-9:
        logger.warning("R*M = %.3f is not integral; using D=%d (R=%.4f)",
                       params.R * params.M, D, D / params.M)
    sampling = generate_sampling_matrix(
        params.M, params.N, D, RandomStream.derive(seed, Purpose.SAMPLING, (params.M << 20) | D))
    return sparsify(dense, sampling, D / params.M)


def spread(codebook, msg, counter=None):
    """x = sum_k column(B[k]) * value_k, touching only the stored entries."""
    support = np.asarray(msg.support.indices, dtype=np.intp)
    if support.size and (support.min() < 0 or support.max() >= codebook.N):
        raise ValueError(f"support {msg.support.indices} outside range({codebook.N})")
    if isinstance(codebook, DenseCodebook):
        count(counter, support.size * codebook.M)
        return codebook.entries[:, support] @ msg.values
    x = np.zeros(codebook.M, dtype=np.complex128)
    np.add.at(x, codebook.rows[support], codebook.values[support] * msg.values[:, None])
    count(counter, support.size * codebook.D)
    return x


def _encode_array(array):
    return base64.b64encode(np.ascontiguousarray(array).tobytes()).decode("ascii")


def _checksum(fields):
    canonical = json.dumps(fields, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def to_dict(codebook):
    if isinstance(codebook, DenseCodebook):
        res = {"kind": "dense", "D": codebook.M, "R": 1.0}
        signs = codebook.entries.T < 0
    else:
        res = {"kind": "sparse", "D": codebook.D, "R": codebook.R,
               "rows": _encode_array(codebook.rows.astype("<u2"))}
        signs = codebook.values < 0
    res.update({
        "magic": FORMAT_MAGIC,
        "version": FORMAT_VERSION,
        "M": codebook.M,
        "N": codebook.N,
        "K": codebook.K,
        "seed": codebook.seed,
        "generator": codebook.generator,
        "signs": _encode_array(np.packbits(signs.reshape(-1))),
    })
    res["sha256"] = _checksum(res)
    return res


def from_dict(d):
    try:
        d = dict(d)
        digest = d.pop("sha256")
        if d.get("magic") != FORMAT_MAGIC:
            raise CodebookFormatError("not a codebook file")
        if d["version"] != FORMAT_VERSION:
            raise CodebookFormatError(f"unsupported codebook version {d['version']}")
        if _checksum(d) != digest:
            raise CodebookFormatError("checksum mismatch")
        M, N, K, D = int(d["M"]), int(d["N"]), int(d["K"]), int(d["D"])
        raw = np.frombuffer(base64.b64decode(d["signs"], validate=True), dtype=np.uint8)
        signs = np.unpackbits(raw)[:N * D]
        if signs.size != N * D:
            raise CodebookFormatError(f"expected {N * D} signs, found {signs.size}")
        magnitude = 1 - 2 * signs.astype(np.float64)
        if d["kind"] not in ("dense", "sparse"):
            raise CodebookFormatError(f"unknown codebook kind {d['kind']!r}")
        if d["kind"] == "dense":
            entries = magnitude.reshape(N, M).T * math.sqrt(1.0 / K)
            return DenseCodebook(K, np.ascontiguousarray(entries), d["seed"], d["generator"])
        rows = np.frombuffer(base64.b64decode(d["rows"], validate=True), dtype="<u2")
        if rows.size != N * D:
            raise CodebookFormatError(f"expected {N * D} row indices, found {rows.size}")
        rows = rows.reshape(N, D).astype(np.intp)
        # the Gram kernel intersects row sets assuming each is sorted and unique
        if not np.all(np.diff(rows, axis=1) > 0):
            raise CodebookFormatError("row indices must strictly increase within each column")
        R = float(d["R"])
        values = magnitude.reshape(N, D) * math.sqrt(1.0 / (K * R))
        return SparseCodebook(M, rows, values,
                              K=K, R=R, seed=d["seed"], generator=d["generator"])
    except CodebookFormatError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise CodebookFormatError(f"malformed codebook: {e}") from e


def serialize_codebook(codebook) -> bytes:
    return json.dumps(to_dict(codebook), sort_keys=True).encode("utf-8")


def deserialize_codebook(data: bytes):
    try:
        d = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CodebookFormatError(f"unreadable codebook: {e}") from e
    if not isinstance(d, dict):
        raise CodebookFormatError("codebook payload is not an object")
    return from_dict(d)


def save_codebook(path, codebook):
    Path(path).write_bytes(serialize_codebook(codebook))
    logger.info("Saved %s codebook %dx%d to %s",
                "dense" if isinstance(codebook, DenseCodebook) else "sparse",
                codebook.M, codebook.N, path)


def load_codebook(path):
    return deserialize_codebook(Path(path).read_bytes())
