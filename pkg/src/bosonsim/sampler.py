"""Permanent-based amplitudes, exact output distributions and sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core import (
    FockConfiguration,
    InvalidInputError,
    NORM_TOL,
    OutputDistribution,
    UnitaryMatrix,
    as_array,
    enumerate_configurations,
)
from .permanent import determinant, permanent_ryser, permanents_batch


@dataclass(frozen=True)
class SamplingRun:
    unitary: UnitaryMatrix
    input: FockConfiguration
    shots: int
    seed: int = 0

    def __post_init__(self):
        if self.input.modes != self.unitary.m:
            raise InvalidInputError(
                f"input has {self.input.modes} modes, unitary is {self.unitary.m}x{self.unitary.m}"
            )
        if self.shots < 1:
            raise InvalidInputError(f"shots must be >= 1, got {self.shots}")


@dataclass(frozen=True)
class ClickPattern:
    """On/off detector record: ``clicks[i]`` is true when mode ``i`` fired."""

    clicks: tuple[bool, ...]

    @classmethod
    def from_configuration(cls, cfg: FockConfiguration) -> ClickPattern:
        return cls(tuple(k > 0 for k in cfg.occupations))

    def __str__(self) -> str:
        return "".join("1" if c else "0" for c in self.clicks)


def _check_photons(u: np.ndarray, inp: FockConfiguration, out: FockConfiguration) -> None:
    m = u.shape[0]
    if inp.modes != m or out.modes != m:
        raise InvalidInputError(f"configurations must have {m} modes")
    if inp.total() != out.total():
        raise InvalidInputError(f"photon number mismatch: {inp.total()} in, {out.total()} out")


def scattering_submatrix(u, input: FockConfiguration, output: FockConfiguration) -> np.ndarray:
    """``n x n`` matrix whose permanent gives the input->output amplitude.

    Row ``r`` is the ``r``-th output photon's mode and column ``c`` the
    ``c``-th input photon's mode (both ascending, repeated by occupation);
    the entry is ``u[input_mode_c, output_mode_r]``.
    """
    arr = as_array(u)
    _check_photons(arr, input, output)
    if input.total() < 1:
        raise InvalidInputError("need at least one photon")
    return arr[np.ix_(input.photon_modes(), output.photon_modes())].T.copy()


def amplitude(u, input: FockConfiguration, output: FockConfiguration) -> complex:
    sub = scattering_submatrix(u, input, output)
    norm = math.sqrt(input.factorial_product() * output.factorial_product())
    return permanent_ryser(sub) / norm


def _amplitudes(arr: np.ndarray, inp: FockConfiguration, configs) -> np.ndarray:
    in_modes = np.array(inp.photon_modes(), dtype=np.intp)
    out_modes = np.array([c.photon_modes() for c in configs], dtype=np.intp)
    # (n_in, K, n_out) -> (K, n_out, n_in)
    mats = arr[in_modes][:, out_modes].transpose(1, 2, 0)
    perms = permanents_batch(mats)
    norms = np.sqrt(
        np.array([c.factorial_product() for c in configs], dtype=float) * inp.factorial_product()
    )
    return perms / norms


def _finish(configs, probs: np.ndarray, n: int, m: int, tol: float) -> OutputDistribution:
    total = math.fsum(probs.tolist())
    if abs(total - 1.0) > tol:
        raise InvalidInputError(f"distribution sums to {total!r} before renormalization")
    probs = probs / total
    return OutputDistribution(dict(zip(configs, probs.tolist())), n, m, tol=tol)


def output_distribution(
    u, input: FockConfiguration, cap: int | None = None, tol: float | None = None
) -> OutputDistribution:
    """Exact ``P(S) = |amplitude|**2`` over every output configuration."""
    arr = as_array(u)
    m = arr.shape[0]
    n = input.total()
    if input.modes != m:
        raise InvalidInputError(f"input has {input.modes} modes, unitary has {m}")
    if n < 1:
        raise InvalidInputError("need at least one photon")
    configs = enumerate_configurations(n, m, cap)
    probs = np.abs(_amplitudes(arr, input, configs)) ** 2
    return _finish(configs, probs, n, m, NORM_TOL if tol is None else tol)


def sample_from(dist: OutputDistribution, shots: int, rng: np.random.Generator) -> list[FockConfiguration]:
    """Inverse-CDF draws over the distribution's canonical key order."""
    configs = dist.configurations()
    cdf = np.cumsum(dist.probabilities())
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(shots), side="right")
    np.minimum(idx, len(configs) - 1, out=idx)
    return [configs[i] for i in idx]


def sample_outputs(run: SamplingRun, dist: OutputDistribution | None = None) -> list[FockConfiguration]:
    if dist is None:
        dist = output_distribution(run.unitary, run.input)
    return sample_from(dist, run.shots, np.random.default_rng(run.seed))


def fermion_distribution(u, input: FockConfiguration, cap: int | None = None) -> OutputDistribution:
    """Output statistics for fermions: ``|det(U_S)|**2``, zero on bunched outcomes."""
    arr = as_array(u)
    m = arr.shape[0]
    n = input.total()
    if input.modes != m:
        raise InvalidInputError(f"input has {input.modes} modes, unitary has {m}")
    if not input.is_collision_free():
        raise InvalidInputError(f"fermionic input must be collision-free, got {input}")
    if n < 1:
        raise InvalidInputError("need at least one particle")
    configs = enumerate_configurations(n, m, cap)
    probs = np.zeros(len(configs))
    for k, cfg in enumerate(configs):
        if cfg.is_collision_free():
            probs[k] = abs(determinant(scattering_submatrix(arr, input, cfg))) ** 2
    probs /= math.fsum(probs.tolist())
    return OutputDistribution(dict(zip(configs, probs.tolist())), n, m)


def bucket_projection(d: OutputDistribution) -> dict[ClickPattern, float]:
    """Probability of each on/off detector pattern."""
    out: dict[ClickPattern, list[float]] = {}
    for cfg, p in d.items():
        out.setdefault(ClickPattern.from_configuration(cfg), []).append(p)
    return {k: math.fsum(v) for k, v in out.items()}


def collision_free_fraction(d: OutputDistribution) -> float:
    return math.fsum(p for cfg, p in d.items() if cfg.is_collision_free())


def permuted_distribution(d: OutputDistribution, perm) -> OutputDistribution:
    """Relabel output modes: mode ``j`` of ``d`` becomes mode ``perm[j]``."""
    weights: Mapping[FockConfiguration, float] = {}
    for cfg, p in d.items():
        occ = [0] * d.modes
        for j, k in enumerate(cfg.occupations):
            occ[perm[j]] = k
        weights[FockConfiguration(occ)] = p
    return OutputDistribution(weights, d.total_photons, d.modes)
