"""Value types shared by every module: Fock configurations, complex and
unitary matrices, and output distributions over configurations."""

from __future__ import annotations

import csv
import functools
import hashlib
import io
import json
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

UNITARY_TOL = 1e-10
NORM_TOL = 1e-9
ENUMERATION_CAP = 10**7


class InvalidInputError(ValueError):
    """Arguments violate an operation's preconditions."""


class ResourceLimitError(RuntimeError):
    """The requested computation exceeds a configured size cap."""


@functools.total_ordering
@dataclass(frozen=True)
class FockConfiguration:
    """Occupation numbers of ``m`` optical modes.

    Configurations sort in canonical order: descending lexicographic on the
    occupation tuple, which is the same as ascending lexicographic on the
    sorted list of modes holding each photon. For one photon in three modes
    this gives ``(1,0,0) < (0,1,0) < (0,0,1)``.
    """

    occupations: tuple[int, ...]

    def __init__(self, occupations: Iterable[int]):
        occ = tuple(int(k) for k in occupations)
        if any(k < 0 for k in occ):
            raise InvalidInputError(f"negative occupation in {occ}")
        object.__setattr__(self, "occupations", occ)

    @classmethod
    def from_modes(cls, modes: Iterable[int], m: int) -> FockConfiguration:
        occ = [0] * m
        for j in modes:
            if not 0 <= j < m:
                raise InvalidInputError(f"mode {j} out of range for m={m}")
            occ[j] += 1
        return cls(occ)

    def total(self) -> int:
        return sum(self.occupations)

    @property
    def modes(self) -> int:
        return len(self.occupations)

    def photon_modes(self) -> list[int]:
        """Mode index of each photon, ascending, repeated by multiplicity."""
        return [j for j, k in enumerate(self.occupations) for _ in range(k)]

    def is_collision_free(self) -> bool:
        return all(k <= 1 for k in self.occupations)

    def factorial_product(self) -> int:
        return math.prod(math.factorial(k) for k in self.occupations)

    def sort_key(self) -> tuple[int, ...]:
        return tuple(-k for k in self.occupations)

    def __lt__(self, other: FockConfiguration) -> bool:
        if not isinstance(other, FockConfiguration):
            return NotImplemented
        return self.sort_key() < other.sort_key()

    def __len__(self) -> int:
        return len(self.occupations)

    def __iter__(self) -> Iterator[int]:
        return iter(self.occupations)

    def __getitem__(self, i: int) -> int:
        return self.occupations[i]

    def __str__(self) -> str:
        return "|" + ",".join(map(str, self.occupations)) + ">"


def standard_input(n: int, m: int) -> FockConfiguration:
    """``n`` single photons in the first ``n`` of ``m`` modes."""
    if n < 0 or m < 0 or n > m:
        raise InvalidInputError(f"need 0 <= n <= m, got n={n}, m={m}")
    return FockConfiguration([1] * n + [0] * (m - n))


def configuration_count(n: int, m: int) -> int:
    return math.comb(n + m - 1, n)


def _compositions(n: int, m: int) -> Iterator[tuple[int, ...]]:
    if m == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, m - 1):
            yield (first,) + rest


def enumerate_configurations(
    n: int, m: int, cap: int | None = None
) -> list[FockConfiguration]:
    """All ways of placing ``n`` photons in ``m`` modes, in canonical order."""
    if n < 0 or m < 1:
        raise InvalidInputError(f"need n >= 0 and m >= 1, got n={n}, m={m}")
    cap = ENUMERATION_CAP if cap is None else cap
    count = configuration_count(n, m)
    if count > cap:
        raise ResourceLimitError(
            f"C({n}+{m}-1, {n}) = {count} configurations exceeds cap {cap}"
        )
    return [FockConfiguration(c) for c in _compositions(n, m)]


def as_array(a) -> np.ndarray:
    """Complex ndarray view of a ComplexMatrix or any 2-D array-like."""
    if isinstance(a, ComplexMatrix):
        return a.array
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a 2-D matrix, got shape {arr.shape}")
    return arr


class ComplexMatrix:
    """Immutable dense complex matrix."""

    __slots__ = ("_data",)

    def __init__(self, data):
        arr = np.array(data, dtype=np.complex128)
        if arr.ndim != 2:
            raise InvalidInputError(f"expected a 2-D matrix, got shape {arr.shape}")
        arr.setflags(write=False)
        self._data = arr

    @classmethod
    def from_entries(cls, rows: int, cols: int, entries: Sequence[complex]):
        if len(entries) != rows * cols:
            raise InvalidInputError(
                f"{len(entries)} entries for a {rows}x{cols} matrix"
            )
        return cls(np.asarray(entries, dtype=np.complex128).reshape(rows, cols))

    @property
    def array(self) -> np.ndarray:
        return self._data

    @property
    def rows(self) -> int:
        return self._data.shape[0]

    @property
    def cols(self) -> int:
        return self._data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    @property
    def entries(self) -> tuple[complex, ...]:
        return tuple(complex(z) for z in self._data.ravel())

    def __getitem__(self, index: tuple[int, int]) -> complex:
        i, j = index
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"entry ({i}, {j}) outside {self.rows}x{self.cols}")
        return complex(self._data[i, j])

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._data
        return self._data.astype(dtype)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ComplexMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.all(self._data == other._data))

    def __hash__(self) -> int:
        return hash((self.shape, self._data.tobytes()))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self._data!r})"


def unitarity_error(a) -> float:
    arr = as_array(a)
    return float(np.max(np.abs(arr.conj().T @ arr - np.eye(arr.shape[0]))))


class UnitaryMatrix(ComplexMatrix):
    """Square matrix with ``max|U^H U - I| <= tol``, checked on construction."""

    __slots__ = ()

    def __init__(self, data, tol: float | None = None):
        super().__init__(data)
        rows, cols = self.shape
        if rows != cols or rows == 0:
            raise InvalidInputError(f"unitary must be square and non-empty, got {rows}x{cols}")
        tol = UNITARY_TOL if tol is None else tol
        err = unitarity_error(self._data)
        if not err <= tol:
            raise InvalidInputError(f"matrix is not unitary: max|U^H U - I| = {err:.3e}")

    @classmethod
    def identity(cls, m: int) -> UnitaryMatrix:
        return cls(np.eye(m))

    @property
    def m(self) -> int:
        return self.rows

    def to_json_obj(self) -> dict:
        return {
            "m": self.m,
            "re": self._data.real.tolist(),
            "im": self._data.imag.tolist(),
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping, tol: float | None = None) -> UnitaryMatrix:
        try:
            re = np.asarray(obj["re"], dtype=float)
            im = np.asarray(obj["im"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed unitary object: {exc}") from exc
        if re.shape != im.shape:
            raise InvalidInputError("'re' and 'im' shapes differ")
        u = cls(re + 1j * im, tol=tol)
        if "m" in obj and int(obj["m"]) != u.m:
            raise InvalidInputError(f"declared m={obj['m']} but matrix is {u.m}x{u.m}")
        return u

    def digest(self) -> str:
        """Stable hex digest of the canonical JSON serialization."""
        text = json.dumps(self.to_json_obj(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


class OutputDistribution:
    """Probabilities over configurations of ``total_photons`` in ``modes``.

    Keys are held in canonical order; missing configurations have
    probability zero.
    """

    __slots__ = ("_weights", "total_photons", "modes")

    def __init__(
        self,
        weights: Mapping[FockConfiguration, float],
        total_photons: int,
        modes: int,
        complete: bool = True,
        tol: float | None = None,
    ):
        tol = NORM_TOL if tol is None else tol
        items = []
        for cfg, p in weights.items():
            if not isinstance(cfg, FockConfiguration):
                cfg = FockConfiguration(cfg)
            if cfg.modes != modes or cfg.total() != total_photons:
                raise InvalidInputError(
                    f"{cfg} does not hold {total_photons} photons in {modes} modes"
                )
            p = float(p)
            if not p >= 0.0:
                raise InvalidInputError(f"negative probability {p} for {cfg}")
            items.append((cfg, p))
        items.sort(key=lambda kv: kv[0].sort_key())
        if complete:
            total = math.fsum(p for _, p in items)
            if abs(total - 1.0) > tol:
                raise InvalidInputError(f"probabilities sum to {total!r}, not 1")
        self._weights = MappingProxyType(dict(items))
        self.total_photons = total_photons
        self.modes = modes

    @classmethod
    def point_mass(cls, cfg: FockConfiguration) -> OutputDistribution:
        return cls({cfg: 1.0}, cfg.total(), cfg.modes)

    @classmethod
    def from_samples(
        cls, samples: Iterable[FockConfiguration], total_photons: int, modes: int
    ) -> OutputDistribution:
        counts: dict[FockConfiguration, int] = {}
        for s in samples:
            counts[s] = counts.get(s, 0) + 1
        shots = sum(counts.values())
        if shots == 0:
            raise InvalidInputError("no samples")
        return cls({c: k / shots for c, k in counts.items()}, total_photons, modes)

    @property
    def weights(self) -> Mapping[FockConfiguration, float]:
        return self._weights

    def probability(self, cfg) -> float:
        if not isinstance(cfg, FockConfiguration):
            cfg = FockConfiguration(cfg)
        return self._weights.get(cfg, 0.0)

    def __getitem__(self, cfg) -> float:
        return self.probability(cfg)

    def configurations(self) -> list[FockConfiguration]:
        return list(self._weights)

    def probabilities(self) -> np.ndarray:
        return np.fromiter(self._weights.values(), dtype=float, count=len(self._weights))

    def items(self):
        return self._weights.items()

    def __len__(self) -> int:
        return len(self._weights)

    def __iter__(self) -> Iterator[FockConfiguration]:
        return iter(self._weights)

    def total(self) -> float:
        return math.fsum(self._weights.values())

    def to_json_obj(self) -> list[dict]:
        return [{"config": list(c.occupations), "p": p} for c, p in self._weights.items()]

    @classmethod
    def from_json_obj(cls, obj: Sequence[Mapping]) -> OutputDistribution:
        if not obj:
            raise InvalidInputError("empty distribution")
        weights = {FockConfiguration(row["config"]): float(row["p"]) for row in obj}
        first = next(iter(weights))
        return cls(weights, first.total(), first.modes)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["config", "p"])
        for c, p in self._weights.items():
            writer.writerow(["-".join(map(str, c.occupations)), repr(p)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> OutputDistribution:
        rows = list(csv.DictReader(io.StringIO(text)))
        weights = {
            FockConfiguration(int(x) for x in row["config"].split("-")): float(row["p"])
            for row in rows
        }
        if not weights:
            raise InvalidInputError("empty distribution")
        first = next(iter(weights))
        return cls(weights, first.total(), first.modes)

    def __repr__(self) -> str:
        return (
            f"OutputDistribution(n={self.total_photons}, m={self.modes}, "
            f"support={len(self)})"
        )


def total_variation_distance(p: OutputDistribution, q: OutputDistribution) -> float:
    """Half the L1 distance between two distributions over the same (n, m)."""
    if (p.total_photons, p.modes) != (q.total_photons, q.modes):
        raise InvalidInputError(
            f"distributions over (n={p.total_photons}, m={p.modes}) and "
            f"(n={q.total_photons}, m={q.modes})"
        )
    keys = set(p.weights) | set(q.weights)
    return 0.5 * math.fsum(abs(p.probability(k) - q.probability(k)) for k in keys)
