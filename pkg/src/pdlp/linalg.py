"""Sharded kernels for the handful of heavy operations PDHG needs.

Every kernel splits its output (or reduction) index range into the
contiguous shards of a :class:`ShardPlan` and runs the shards under
``numba.prange``. Matrix products are sharded by output component: rows of
the CSR layout for ``A x`` and columns of the CSC layout for ``A' y``, so no
two shards write the same entry. Reductions write one partial per shard and
the partials are summed in ascending shard order, which makes the result
independent of how shards were scheduled onto threads.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numba
import numpy as np
import scipy.sparse as sp

SHARDS_PER_THREAD = 4

# numba falls back to its own pool when the system TBB is too old; that is fine
warnings.filterwarnings("ignore", message="The TBB threading layer")


@dataclass(frozen=True, eq=False)
class ShardPlan:
    num_shards: int
    boundaries: np.ndarray  # int64, length num_shards + 1

    @property
    def dim(self) -> int:
        return int(self.boundaries[-1])

    def sizes(self) -> np.ndarray:
        return np.diff(self.boundaries)


def make_shard_plan(dim: int, threads: int = 1, shards_per_thread: int = SHARDS_PER_THREAD) -> ShardPlan:
    """Split ``range(dim)`` into ``threads * shards_per_thread`` near-equal pieces.

    Earlier shards are larger by at most one.
    """
    if dim < 0:
        raise ValueError("dim must be nonnegative")
    if threads < 1 or shards_per_thread < 1:
        raise ValueError("threads and shards_per_thread must be positive")
    k = threads * shards_per_thread
    base, extra = divmod(dim, k)
    sizes = np.full(k, base, dtype=np.int64)
    sizes[:extra] += 1
    boundaries = np.zeros(k + 1, dtype=np.int64)
    np.cumsum(sizes, out=boundaries[1:])
    return ShardPlan(k, boundaries)


def set_threads(threads: int) -> int:
    """Size numba's pool for the coming kernel calls; returns the count in effect.

    The pool itself is created once by numba and reused; this only limits how
    many of its workers participate.
    """
    n = max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


# --- kernels ---------------------------------------------------------------

@numba.njit(parallel=True, cache=True)
def _compressed_matvec(indptr, indices, data, v, bounds, out):
    for s in numba.prange(bounds.size - 1):
        for i in range(bounds[s], bounds[s + 1]):
            acc = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                acc += data[p] * v[indices[p]]
            out[i] = acc


@numba.njit(parallel=True, cache=True)
def _dot_partials(a, b, bounds, partial):
    for s in numba.prange(bounds.size - 1):
        acc = 0.0
        for i in range(bounds[s], bounds[s + 1]):
            acc += a[i] * b[i]
        partial[s] = acc


@numba.njit(parallel=True, cache=True)
def _sumsq_partials(a, bounds, partial):
    for s in numba.prange(bounds.size - 1):
        acc = 0.0
        for i in range(bounds[s], bounds[s + 1]):
            acc += a[i] * a[i]
        partial[s] = acc


@numba.njit(parallel=True, cache=True)
def _maxabs_partials(a, bounds, partial):
    for s in numba.prange(bounds.size - 1):
        acc = 0.0
        for i in range(bounds[s], bounds[s + 1]):
            v = abs(a[i])
            if v > acc or v != v:
                acc = v
        partial[s] = acc


@numba.njit(parallel=True, cache=True)
def _clip(v, lower, upper, bounds, out):
    for s in numba.prange(bounds.size - 1):
        for i in range(bounds[s], bounds[s + 1]):
            t = v[i]
            if t < lower[i]:
                t = lower[i]
            if t > upper[i]:
                t = upper[i]
            out[i] = t


@numba.njit(cache=True)
def _ordered_sum(partial):
    acc = 0.0
    for s in range(partial.size):
        acc += partial[s]
    return acc


@numba.njit(cache=True)
def _ordered_max(partial):
    acc = 0.0
    for s in range(partial.size):
        if partial[s] > acc or partial[s] != partial[s]:
            acc = partial[s]
    return acc


# --- public wrappers -------------------------------------------------------

def _plan_for(dim: int, plan: ShardPlan | None) -> ShardPlan:
    if plan is None:
        return make_shard_plan(dim, 1, 1)
    if plan.dim != dim:
        raise ValueError(f"shard plan covers {plan.dim} entries, vector has {dim}")
    return plan


def _f64(v) -> np.ndarray:
    return np.ascontiguousarray(v, dtype=np.float64)


def spmv(A: sp.csr_matrix, x, plan: ShardPlan | None = None, out=None) -> np.ndarray:
    """``A @ x`` with rows owned by shards; each row sums in storage order."""
    A = sp.csr_matrix(A)
    plan = _plan_for(A.shape[0], plan)
    if out is None:
        out = np.empty(A.shape[0])
    _compressed_matvec(
        A.indptr.astype(np.int64, copy=False), A.indices.astype(np.int64, copy=False),
        _f64(A.data), _f64(x), plan.boundaries, out,
    )
    return out


def spmv_transpose(A: sp.csc_matrix, y, plan: ShardPlan | None = None, out=None) -> np.ndarray:
    """``A.T @ y`` computed from the column-major layout, columns owned by shards."""
    A = sp.csc_matrix(A)
    plan = _plan_for(A.shape[1], plan)
    if out is None:
        out = np.empty(A.shape[1])
    _compressed_matvec(
        A.indptr.astype(np.int64, copy=False), A.indices.astype(np.int64, copy=False),
        _f64(A.data), _f64(y), plan.boundaries, out,
    )
    return out


def dot(a, b, plan: ShardPlan | None = None) -> float:
    a, b = _f64(a), _f64(b)
    if a.shape != b.shape:
        raise ValueError("length mismatch")
    plan = _plan_for(a.size, plan)
    partial = np.empty(plan.num_shards)
    _dot_partials(a, b, plan.boundaries, partial)
    return float(_ordered_sum(partial))


def norm_sq(a, plan: ShardPlan | None = None) -> float:
    a = _f64(a)
    plan = _plan_for(a.size, plan)
    partial = np.empty(plan.num_shards)
    _sumsq_partials(a, plan.boundaries, partial)
    return float(_ordered_sum(partial))


def norm2(a, plan: ShardPlan | None = None) -> float:
    return math.sqrt(norm_sq(a, plan))


def norm_inf(a, plan: ShardPlan | None = None) -> float:
    a = _f64(a)
    plan = _plan_for(a.size, plan)
    partial = np.empty(plan.num_shards)
    _maxabs_partials(a, plan.boundaries, partial)
    return float(_ordered_max(partial))


def project_box(v, lower, upper, plan: ShardPlan | None = None, out=None) -> np.ndarray:
    """Componentwise clamp to ``[lower, upper]`` (the Euclidean projection onto a box)."""
    v = _f64(v)
    plan = _plan_for(v.size, plan)
    if out is None:
        out = np.empty_like(v)
    _clip(v, _f64(lower), _f64(upper), plan.boundaries, out)
    return out


def weighted_norm(x, y, omega: float, x_plan: ShardPlan | None = None,
                  y_plan: ShardPlan | None = None) -> float:
    """``sqrt(omega * |x|^2 + |y|^2 / omega)``."""
    if not omega > 0:
        raise ValueError("omega must be positive")
    return math.sqrt(omega * norm_sq(x, x_plan) + norm_sq(y, y_plan) / omega)


class ShardedMatrix:
    """A constraint matrix bundled with both layouts and their shard plans.

    This is what the solver loop holds; it avoids re-validating scipy objects
    on every product.
    """

    def __init__(self, csr: sp.csr_matrix, csc: sp.csc_matrix | None = None,
                 threads: int = 1, shards_per_thread: int = SHARDS_PER_THREAD):
        csr = sp.csr_matrix(csr)
        csc = csr.tocsc() if csc is None else sp.csc_matrix(csc)
        csc.sort_indices()
        self.shape = csr.shape
        self._rp = csr.indptr.astype(np.int64)
        self._ri = csr.indices.astype(np.int64)
        self._rd = _f64(csr.data)
        self._cp = csc.indptr.astype(np.int64)
        self._ci = csc.indices.astype(np.int64)
        self._cd = _f64(csc.data)
        m, n = self.shape
        self.row_plan = make_shard_plan(m, threads, shards_per_thread)
        self.col_plan = make_shard_plan(n, threads, shards_per_thread)

    @property
    def nnz(self) -> int:
        return self._rd.size

    def matvec(self, x, out=None) -> np.ndarray:
        if out is None:
            out = np.empty(self.shape[0])
        _compressed_matvec(self._rp, self._ri, self._rd, x, self.row_plan.boundaries, out)
        return out

    def rmatvec(self, y, out=None) -> np.ndarray:
        if out is None:
            out = np.empty(self.shape[1])
        _compressed_matvec(self._cp, self._ci, self._cd, y, self.col_plan.boundaries, out)
        return out

    def max_abs(self) -> float:
        return float(np.max(np.abs(self._rd))) if self._rd.size else 0.0
