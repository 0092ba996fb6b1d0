"""Matrix permanents and determinants.

``permanent_naive`` sums over all ``n!`` permutations and serves as the
oracle. ``permanent_ryser`` walks the ``2**n - 1`` non-empty column subsets
in Gray-code order, so each step changes the row sums by a single column
(``O(2**n * n)`` overall). The walk can be cut into contiguous index ranges,
each seeded directly from its starting subset, and the partial sums are
combined in range order; for a fixed chunk count the result does not depend
on how many threads run the chunks.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numba
import numpy as np

from .core import InvalidInputError, ResourceLimitError, as_array

# The bundled TBB is often too old; prefer OpenMP, then the built-in pool.
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

NAIVE_MAX_N = 10
RYSER_MAX_N = 30
# Below this size the walk always runs as one chunk.
PARALLEL_MIN_N = 20
DEFAULT_CHUNKS = 64


@dataclass(frozen=True)
class PermanentResult:
    value: complex
    terms_evaluated: int
    method: str


def _square(a) -> np.ndarray:
    arr = as_array(a)
    if arr.shape[0] != arr.shape[1]:
        raise InvalidInputError(f"matrix must be square, got {arr.shape[0]}x{arr.shape[1]}")
    return arr


def _naive(arr: np.ndarray) -> tuple[complex, int]:
    n = arr.shape[0]
    if n > NAIVE_MAX_N:
        raise ResourceLimitError(f"naive permanent limited to n <= {NAIVE_MAX_N}, got {n}")
    if n == 0:
        return 1 + 0j, 1
    rows = np.arange(n)
    perms = itertools.permutations(range(n))
    re_terms: list[float] = []
    im_terms: list[float] = []
    count = 0
    # Lexicographic permutations in blocks; products vectorized per block.
    block = 40320
    while True:
        chunk = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(perms, block)), dtype=np.intp
        )
        if chunk.size == 0:
            break
        sigma = chunk.reshape(-1, n)
        prods = arr[rows, sigma].prod(axis=1)
        re_terms.extend(prods.real.tolist())
        im_terms.extend(prods.imag.tolist())
        count += sigma.shape[0]
    return complex(math.fsum(re_terms), math.fsum(im_terms)), count


def permanent_naive(a) -> complex:
    """Sum over every permutation of the product ``a[i, sigma(i)]``.

    Exact summation (``math.fsum``) of the real and imaginary parts keeps
    the oracle free of ordering-dependent rounding.
    """
    return _naive(_square(a))[0]


@numba.njit(cache=True)
def _ryser_range(a, start, stop):
    """Gray-code Ryser walk over subset indices ``start+1 .. stop-1``.

    Index ``k`` denotes the subset ``k ^ (k >> 1)``. The partial sum over
    the subset at ``start`` itself is included when ``start > 0``.
    Returns the signed sum of row-sum products (without the trailing
    ``(-1)**n``) and the number of subsets visited.
    """
    n = a.shape[0]
    rs = np.zeros(n, np.complex128)
    g = start ^ (start >> 1)
    size = 0
    for j in range(n):
        if (g >> j) & 1:
            size += 1
            for i in range(n):
                rs[i] += a[i, j]
    total = 0j
    comp = 0j
    steps = 0
    if start > 0:
        p = rs[0]
        for i in range(1, n):
            p *= rs[i]
        total = -p if size & 1 else p
        steps = 1
    for k in range(start + 1, stop):
        j = 0
        t = k
        while (t & 1) == 0:
            t >>= 1
            j += 1
        g ^= 1 << j
        if (g >> j) & 1:
            size += 1
            for i in range(n):
                rs[i] += a[i, j]
        else:
            size -= 1
            for i in range(n):
                rs[i] -= a[i, j]
        p = rs[0]
        for i in range(1, n):
            p *= rs[i]
        if size & 1:
            p = -p
        # Kahan-compensated accumulation
        y = p - comp
        s = total + y
        comp = (s - total) - y
        total = s
        steps += 1
    return total, steps


@numba.njit(parallel=True, cache=True)
def _ryser_chunked(a, bounds):
    nchunks = bounds.shape[0] - 1
    partial = np.zeros(nchunks, np.complex128)
    counts = np.zeros(nchunks, np.int64)
    for c in numba.prange(nchunks):
        v, s = _ryser_range(a, bounds[c], bounds[c + 1])
        partial[c] = v
        counts[c] = s
    total = 0j
    comp = 0j
    for c in range(nchunks):
        y = partial[c] - comp
        s = total + y
        comp = (s - total) - y
        total = s
    return total, counts.sum()


@numba.njit(cache=True)
def _ryser_batch(mats):
    """Permanents of a stack of small matrices, one serial walk each."""
    out = np.empty(mats.shape[0], np.complex128)
    n = mats.shape[1]
    sign = -1.0 if n & 1 else 1.0
    for b in range(mats.shape[0]):
        v, _ = _ryser_range(mats[b], 0, 1 << n)
        out[b] = sign * v
    return out


def _ryser(arr: np.ndarray, chunks: int | None) -> tuple[complex, int]:
    n = arr.shape[0]
    if n > RYSER_MAX_N:
        raise ResourceLimitError(f"Ryser permanent limited to n <= {RYSER_MAX_N}, got {n}")
    if n == 0:
        return 1 + 0j, 0
    arr = np.ascontiguousarray(arr, dtype=np.complex128)
    stop = 1 << n
    if chunks is None:
        chunks = DEFAULT_CHUNKS if n >= PARALLEL_MIN_N else 1
    chunks = max(1, min(int(chunks), stop - 1))
    if chunks == 1:
        total, steps = _ryser_range(arr, 0, stop)
    else:
        bounds = np.linspace(0, stop, chunks + 1).astype(np.int64)
        bounds[-1] = stop
        total, steps = _ryser_chunked(arr, bounds)
    sign = -1 if n & 1 else 1
    return complex(sign * total), int(steps)


def permanent_ryser(a, chunks: int | None = None) -> complex:
    """Permanent by Ryser's inclusion-exclusion formula.

    ``chunks`` fixes how the subset walk is partitioned; ``None`` picks one
    chunk below ``PARALLEL_MIN_N`` and ``DEFAULT_CHUNKS`` above.
    """
    return _ryser(_square(a), chunks)[0]


def permanent(a, method: str = "ryser", chunks: int | None = None) -> PermanentResult:
    arr = _square(a)
    if method == "naive":
        value, terms = _naive(arr)
    elif method == "ryser":
        value, terms = _ryser(arr, chunks)
    else:
        raise InvalidInputError(f"unknown permanent method {method!r}")
    return PermanentResult(value, terms, method)


def permanents_batch(mats: np.ndarray) -> np.ndarray:
    """Permanents of an array of shape ``(batch, n, n)``."""
    mats = np.ascontiguousarray(mats, dtype=np.complex128)
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise InvalidInputError(f"expected (batch, n, n), got {mats.shape}")
    if mats.shape[1] > RYSER_MAX_N:
        raise ResourceLimitError(f"Ryser permanent limited to n <= {RYSER_MAX_N}")
    if mats.shape[1] == 0:
        return np.ones(mats.shape[0], np.complex128)
    return _ryser_batch(mats)


def determinant(a) -> complex:
    """Determinant by Gaussian elimination with partial pivoting."""
    work = np.array(_square(a), dtype=np.complex128)
    n = work.shape[0]
    det = 1 + 0j
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(work[col:, col])))
        if work[pivot, col] == 0:
            return 0j
        if pivot != col:
            work[[col, pivot]] = work[[pivot, col]]
            det = -det
        det *= work[col, col]
        factors = work[col + 1 :, col] / work[col, col]
        work[col + 1 :, col:] -= np.outer(factors, work[col, col:])
    return complex(det)


def set_threads(count: int | None) -> None:
    """Cap the number of threads used by parallel kernels."""
    if count is not None:
        numba.set_num_threads(max(1, min(int(count), numba.config.NUMBA_NUM_THREADS)))


@dataclass
class BenchResult:
    n: int
    times: list[float] = field(default_factory=list)
    values: list[complex] = field(default_factory=list)
    terms: int = 0

    @property
    def median(self) -> float:
        return float(np.median(self.times))

    @property
    def terms_per_second(self) -> float:
        return self.terms / self.median if self.median > 0 else float("inf")


def benchmark(
    n: int, repetitions: int = 1, seed: int = 0, chunks: int | None = 1
) -> BenchResult:
    """Time ``repetitions`` Ryser evaluations of one random complex n x n matrix.

    The kernel is compiled before timing starts.
    """
    if n < 1 or n > RYSER_MAX_N:
        raise ResourceLimitError(f"benchmark size must be in 1..{RYSER_MAX_N}, got {n}")
    if repetitions < 1:
        raise InvalidInputError("repetitions must be >= 1")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    _ryser(np.eye(2, dtype=np.complex128), chunks)
    result = BenchResult(n)
    for _ in range(repetitions):
        t0 = time.perf_counter()
        value, terms = _ryser(a, chunks)
        result.times.append(time.perf_counter() - t0)
        result.values.append(value)
        result.terms = terms
    return result


def log2_time_slope(ns, times) -> float:
    """Least-squares slope of ``log2(time)`` against ``n``."""
    ns = np.asarray(ns, dtype=float)
    logs = np.log2(np.asarray(times, dtype=float))
    slope, _ = np.polyfit(ns, logs, 1)
    return float(slope)
