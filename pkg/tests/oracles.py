"""Independent reference computations used only by the tests.

None of these touch the permanent or determinant kernels under test.
"""

from __future__ import annotations

import functools
import math
from collections import defaultdict

import numpy as np


def fock_evolution(u: np.ndarray, input_occ) -> dict[tuple[int, ...], complex]:
    """Output amplitudes by expanding ``prod_i (sum_j u[i, j] a_j^dag)``.

    Each input creation operator is replaced by its image under the network
    and the product is multiplied out term by term. The coefficient of
    ``prod_j (a_j^dag)^{s_j}`` is converted to a normalized Fock amplitude.
    """
    m = u.shape[0]
    poly: dict[tuple[int, ...], complex] = {(): 1 + 0j}
    for i, k in enumerate(input_occ):
        for _ in range(k):
            nxt: dict[tuple[int, ...], complex] = defaultdict(complex)
            for key, c in poly.items():
                for j in range(m):
                    nxt[tuple(sorted(key + (j,)))] += c * u[i, j]
            poly = nxt
    in_norm = math.sqrt(math.prod(math.factorial(k) for k in input_occ))
    out = {}
    for modes, c in poly.items():
        occ = [0] * m
        for j in modes:
            occ[j] += 1
        out_norm = math.sqrt(math.prod(math.factorial(k) for k in occ))
        out[tuple(occ)] = c * out_norm / in_norm
    return out


def fock_probabilities(u: np.ndarray, input_occ) -> dict[tuple[int, ...], float]:
    return {k: abs(v) ** 2 for k, v in fock_evolution(u, input_occ).items()}


def cofactor_determinant(a: np.ndarray) -> complex:
    """Laplace expansion along rows, memoized on the set of used columns."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]

    @functools.lru_cache(maxsize=None)
    def minor(row: int, used: int) -> complex:
        if row == n:
            return 1 + 0j
        total = 0j
        sign = 1
        for j in range(n):
            if used >> j & 1:
                continue
            total += sign * a[row, j] * minor(row + 1, used | (1 << j))
            sign = -sign
        return total

    return minor(0, 0)


def uniform_brute_compositions(n: int, m: int) -> set[tuple[int, ...]]:
    """Every occupation vector reachable by dropping ``n`` photons into ``m`` modes."""
    import itertools

    out = set()
    for modes in itertools.product(range(m), repeat=n):
        occ = [0] * m
        for j in modes:
            occ[j] += 1
        out.add(tuple(occ))
    return out


def bose_einstein_collision_free(n: int, m: int) -> float:
    """Haar-averaged collision-free probability: boson outputs are uniform
    over multisets on average, so the fraction is C(m, n) / C(m+n-1, n)."""
    return math.comb(m, n) / math.comb(m + n - 1, n)


def sigma_binomial(p: float, trials: int) -> float:
    return math.sqrt(p * (1 - p) / trials)
