"""
Support recovery over a column-sparse measurement matrix.

Every kernel touches only the stored entries of Phi: correlations cost N*D,
Gram entries are summed over index-set intersections, and the residual update
scatters K*D products. Multiply-accumulates are tallied on an optional
MacCounter.
"""
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .codec import SupportSet
from .getconfig import logger
from .numerics import DegenerateSupportError, MacCounter, count, hermitian_solve

MAX_EXHAUSTIVE = 10 ** 6


class DecodeFailure(RuntimeError):
    """Every candidate path was pruned as degenerate."""


@dataclass(frozen=True)
class MmpConfig:
    K: int
    L: int = 2
    beam: int = 4

    def __post_init__(self):
        if self.K < 1 or self.L < 1 or self.beam < 1:
            raise ValueError(f"invalid MMP config K={self.K}, L={self.L}, beam={self.beam}")


@dataclass
class PathStats:
    expanded: int = 0
    merged: int = 0
    pruned: int = 0
    dropped: int = 0


@dataclass(eq=False)
class PathNode:
    support: tuple
    residual: np.ndarray = field(repr=False)
    residual_norm: float
    estimate: np.ndarray = field(repr=False)

    def sort_key(self):
        return self.residual_norm, self.support


@dataclass(eq=False)
class DecodeResult:
    support: SupportSet
    values: np.ndarray
    residual_norm: float
    path_stats: PathStats = field(default_factory=PathStats)
    mac_count: int = 0


def correlate(phi, r, counter=None):
    """|Phi^H r| over the stored entries of each column."""
    count(counter, phi.nnz)
    return np.abs(np.einsum("kd,kd->k", phi.values.conj(), r[phi.rows]))


def sparse_gram(phi, B, counter=None):
    """Phi_B^H Phi_B with each entry summed over S_k intersect S_l."""
    B = tuple(B)
    U = np.zeros((len(B), len(B)), dtype=np.complex128)
    for a, k in enumerate(B):
        rows_k, vals_k = phi.column(k)
        U[a, a] = np.vdot(vals_k, vals_k).real
        count(counter, vals_k.size)
        for b in range(a + 1, len(B)):
            rows_l, vals_l = phi.column(B[b])
            _, ik, il = np.intersect1d(rows_k, rows_l, assume_unique=True, return_indices=True)
            U[a, b] = np.vdot(vals_k[ik], vals_l[il])
            U[b, a] = U[a, b].conjugate()
            count(counter, ik.size)
    return U


def column_correlation(phi, B, y, counter=None):
    """[Phi_B^H y]_k summed over S_k."""
    idx = list(B)
    count(counter, len(idx) * phi.D)
    return np.einsum("kd,kd->k", phi.values[idx].conj(), y[phi.rows[idx]])


def ls_estimate(phi, B, y, counter=None):
    """Least-squares values on support B; raises DegenerateSupportError."""
    U = sparse_gram(phi, B, counter)
    c = column_correlation(phi, B, y, counter)
    count(counter, len(B) ** 3)
    return hermitian_solve(U, c)


def residual_update(y, phi, B, s_hat, counter=None):
    """r = y - Phi_B s_hat."""
    idx = list(B)
    r = np.array(y, dtype=np.complex128)
    np.subtract.at(r, phi.rows[idx], phi.values[idx] * np.asarray(s_hat)[:, None])
    count(counter, len(idx) * phi.D)
    return r


def _node(phi, y, support, counter):
    estimate = ls_estimate(phi, support, y, counter)
    residual = residual_update(y, phi, support, estimate, counter)
    return PathNode(support, residual, float(np.linalg.norm(residual)), estimate)


def _result(node, stats, counter, start):
    return DecodeResult(SupportSet(node.support), node.estimate, node.residual_norm,
                        stats, counter.total - start)


def mmp_decode(y, phi, cfg: MmpConfig, counter=None):
    """
    Breadth-first multipath matching pursuit.

    Each surviving path spawns its L best new indices by correlation with its
    residual; children reaching the same support merge; the `beam` children
    with the smallest residual (then lexicographic support) survive each
    depth. Ties in correlation go to the lowest index.
    """
    y = np.asarray(y, dtype=np.complex128)
    counter = counter if counter is not None else MacCounter()
    start = counter.total
    stats = PathStats()
    paths = [PathNode((), y, float(np.linalg.norm(y)), np.zeros(0, dtype=np.complex128))]
    for depth in range(cfg.K):
        children = {}
        for parent in paths:
            corr = correlate(phi, parent.residual, counter)
            corr[list(parent.support)] = -1.0
            width = min(cfg.L, phi.N - len(parent.support))
            for idx in np.argsort(-corr, kind="stable")[:width]:
                support = tuple(sorted(parent.support + (int(idx),)))
                if support in children:
                    stats.merged += 1
                    continue
                stats.expanded += 1
                try:
                    children[support] = _node(phi, y, support, counter)
                except DegenerateSupportError:
                    stats.pruned += 1
                    children[support] = None
        survivors = sorted((c for c in children.values() if c is not None), key=PathNode.sort_key)
        stats.dropped += max(0, len(survivors) - cfg.beam)
        paths = survivors[:cfg.beam]
        if not paths:
            logger.debug("MMP lost every path at depth %d: %s", depth + 1, stats)
            raise DecodeFailure(f"all paths degenerate at depth {depth + 1}")
    return _result(paths[0], stats, counter, start)


def omp_decode(y, phi, K, counter=None):
    """Orthogonal matching pursuit: one greedy index per iteration."""
    y = np.asarray(y, dtype=np.complex128)
    counter = counter if counter is not None else MacCounter()
    start = counter.total
    stats = PathStats()
    support = ()
    residual = y
    node = None
    for _ in range(K):
        corr = correlate(phi, residual, counter)
        corr[list(support)] = -1.0
        support = tuple(sorted(support + (int(np.argmax(corr)),)))
        stats.expanded += 1
        try:
            node = _node(phi, y, support, counter)
        except DegenerateSupportError as e:
            raise DecodeFailure(f"degenerate support {support}") from e
        residual = node.residual
    return _result(node, stats, counter, start)


def ml_decode_exhaustive(y, phi, K, counter=None):
    """Exact minimizer of ||y - Phi_B s_B|| over every K-subset (test scale)."""
    total = math.comb(phi.N, K)
    if total > MAX_EXHAUSTIVE:
        raise ValueError(f"C({phi.N}, {K}) = {total} supports exceeds {MAX_EXHAUSTIVE}")
    y = np.asarray(y, dtype=np.complex128)
    counter = counter if counter is not None else MacCounter()
    start = counter.total
    stats = PathStats()
    best = None
    for support in itertools.combinations(range(phi.N), K):
        stats.expanded += 1
        try:
            node = _node(phi, y, support, counter)
        except DegenerateSupportError:
            stats.pruned += 1
            continue
        if best is None or node.sort_key() < best.sort_key():
            best = node
    if best is None:
        raise DecodeFailure("every support is degenerate")
    return _result(best, stats, counter, start)


def energy_detect_decode(y, phi, K, counter=None):
    """The K columns most correlated with y, then least-squares values."""
    y = np.asarray(y, dtype=np.complex128)
    counter = counter if counter is not None else MacCounter()
    start = counter.total
    corr = correlate(phi, y, counter)
    support = tuple(sorted(int(i) for i in np.argsort(-corr, kind="stable")[:K]))
    try:
        node = _node(phi, y, support, counter)
    except DegenerateSupportError as e:
        raise DecodeFailure(f"degenerate support {support}") from e
    return _result(node, PathStats(expanded=1), counter, start)
