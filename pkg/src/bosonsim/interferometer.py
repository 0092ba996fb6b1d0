"""Linear-optical elements, netlists and the unitaries they realize."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .core import InvalidInputError, UnitaryMatrix

_ANGLE_SLACK = 1e-12


def _cos_sin(theta: float) -> tuple[float, float]:
    # On [pi/4, pi/2] sine is taken as cos(pi/2 - theta) so that a balanced
    # splitter has cos == sin bit for bit and interferes to exactly zero.
    if math.pi / 4 <= theta <= math.pi / 2:
        return math.cos(theta), math.cos(math.pi / 2 - theta)
    return math.cos(theta), math.sin(theta)


def _check_pair(mode_a: int, mode_b: int) -> None:
    if not 0 <= mode_a < mode_b:
        raise InvalidInputError(f"need 0 <= mode_a < mode_b, got ({mode_a}, {mode_b})")


@dataclass(frozen=True)
class BeamSplitter:
    """``[[cos t, -e^{i phi} sin t], [e^{-i phi} sin t, cos t]]`` on two modes."""

    mode_a: int
    mode_b: int
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        _check_pair(self.mode_a, self.mode_b)

    @property
    def modes(self) -> tuple[int, ...]:
        return (self.mode_a, self.mode_b)

    def block(self) -> np.ndarray:
        c, s = _cos_sin(self.theta)
        e = complex(math.cos(self.phi), math.sin(self.phi))
        return np.array([[c, -e * s], [e.conjugate() * s, c]], dtype=np.complex128)


@dataclass(frozen=True)
class PhaseShifter:
    mode: int
    phi: float

    def __post_init__(self):
        if self.mode < 0:
            raise InvalidInputError(f"negative mode index {self.mode}")

    @property
    def modes(self) -> tuple[int, ...]:
        return (self.mode,)

    def block(self) -> np.ndarray:
        return np.array([[complex(math.cos(self.phi), math.sin(self.phi))]])


@dataclass(frozen=True)
class FourPhaseBS:
    """General two-mode element with an overall phase ``alpha``, two
    differential phases ``beta`` and ``gamma`` and a mixing angle ``delta``."""

    mode_a: int
    mode_b: int
    alpha: float
    beta: float
    gamma: float
    delta: float

    def __post_init__(self):
        _check_pair(self.mode_a, self.mode_b)
        if not -_ANGLE_SLACK <= self.alpha <= 2 * math.pi + _ANGLE_SLACK:
            raise InvalidInputError(f"alpha={self.alpha} outside [0, 2pi]")
        for name in ("beta", "gamma", "delta"):
            v = getattr(self, name)
            if not -_ANGLE_SLACK <= v <= math.pi + _ANGLE_SLACK:
                raise InvalidInputError(f"{name}={v} outside [0, pi]")

    @property
    def modes(self) -> tuple[int, ...]:
        return (self.mode_a, self.mode_b)

    def block(self) -> np.ndarray:
        a, b, g, d = self.alpha, self.beta, self.gamma, self.delta
        c, s = _cos_sin(d / 2)

        def ph(x: float) -> complex:
            return complex(math.cos(x), math.sin(x))

        return np.array(
            [
                [ph(a - b / 2 - g / 2) * c, -ph(a - b / 2 + g / 2) * s],
                [ph(a + b / 2 - g / 2) * s, ph(a + b / 2 + g / 2) * c],
            ],
            dtype=np.complex128,
        )


OpticalElement = Union[BeamSplitter, PhaseShifter, FourPhaseBS]


def _embed(e: OpticalElement, m: int) -> np.ndarray:
    modes = e.modes
    if max(modes) >= m:
        raise InvalidInputError(f"element on modes {modes} does not fit in m={m}")
    full = np.eye(m, dtype=np.complex128)
    full[np.ix_(modes, modes)] = e.block()
    return full


def element_unitary(e: OpticalElement, m: int) -> UnitaryMatrix:
    """``m x m`` identity with the element's block on its modes."""
    return UnitaryMatrix(_embed(e, m))


@dataclass(frozen=True)
class OpticalNetlist:
    """Elements on ``modes`` optical modes, applied in list order."""

    modes: int
    elements: tuple[OpticalElement, ...] = ()

    def __post_init__(self):
        if self.modes < 1:
            raise InvalidInputError(f"netlist needs m >= 1, got {self.modes}")
        object.__setattr__(self, "elements", tuple(self.elements))
        for e in self.elements:
            if max(e.modes) >= self.modes:
                raise InvalidInputError(
                    f"element on modes {e.modes} does not fit in m={self.modes}"
                )

    def count(self, kind: type) -> int:
        return sum(isinstance(e, kind) for e in self.elements)

    def to_json_obj(self) -> dict:
        rows = []
        for e in self.elements:
            if isinstance(e, BeamSplitter):
                rows.append({"type": "bs", "modes": [e.mode_a, e.mode_b], "params": [e.theta, e.phi]})
            elif isinstance(e, PhaseShifter):
                rows.append({"type": "ps", "modes": [e.mode], "params": [e.phi]})
            else:
                rows.append(
                    {
                        "type": "bs4",
                        "modes": [e.mode_a, e.mode_b],
                        "params": [e.alpha, e.beta, e.gamma, e.delta],
                    }
                )
        return {"m": self.modes, "elements": rows}

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> OpticalNetlist:
        try:
            m = int(obj["m"])
            elements: list[OpticalElement] = []
            for row in obj["elements"]:
                kind, modes, params = row["type"], list(row["modes"]), [float(x) for x in row["params"]]
                if kind == "bs" and len(modes) == 2 and len(params) == 2:
                    elements.append(BeamSplitter(modes[0], modes[1], *params))
                elif kind == "ps" and len(modes) == 1 and len(params) == 1:
                    elements.append(PhaseShifter(modes[0], params[0]))
                elif kind == "bs4" and len(modes) == 2 and len(params) == 4:
                    elements.append(FourPhaseBS(modes[0], modes[1], *params))
                else:
                    raise InvalidInputError(f"malformed netlist element {row!r}")
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidInputError):
                raise
            raise InvalidInputError(f"malformed netlist: {exc}") from exc
        return cls(m, tuple(elements))


def netlist_unitary(nl: OpticalNetlist) -> UnitaryMatrix:
    """Ordered product of the element unitaries; later elements act on the left."""
    u = np.eye(nl.modes, dtype=np.complex128)
    for e in nl.elements:
        modes = list(e.modes)
        u[modes, :] = e.block() @ u[modes, :]
    return UnitaryMatrix(u)


def haar_unitary(m: int, seed: int) -> UnitaryMatrix:
    """Haar-random ``m x m`` unitary, fully determined by ``seed``."""
    if m < 1:
        raise InvalidInputError(f"need m >= 1, got {m}")
    if seed < 0 or seed >= 2**64:
        raise InvalidInputError(f"seed must be a 64-bit unsigned integer, got {seed}")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return UnitaryMatrix(q * (d / np.abs(d)))


def reck_decompose(u) -> OpticalNetlist:
    """Triangular decomposition into beamsplitters and a phase layer.

    Column by column (left to right), entries below the diagonal are nulled
    from the bottom up by a rotation on rows ``(i-1, i)``. What remains is a
    diagonal of unit-modulus phases. The netlist applies those phases first,
    then the inverse rotations in reverse order, and reproduces ``u``
    including its global phase.
    """
    if not isinstance(u, UnitaryMatrix):
        u = UnitaryMatrix(u)
    m = u.m
    work = np.array(u.array)
    rotations: list[BeamSplitter] = []
    for col in range(m - 1):
        for row in range(m - 1, col, -1):
            xa, xb = work[row - 1, col], work[row, col]
            theta = math.atan2(abs(xb), abs(xa))
            phi = float(np.angle(xa) - np.angle(xb) - math.pi)
            bs = BeamSplitter(row - 1, row, theta, phi)
            rows = [row - 1, row]
            work[rows, :] = bs.block() @ work[rows, :]
            work[row, col] = 0.0
            rotations.append(bs)
    phases = np.angle(np.diag(work))
    elements: list[OpticalElement] = [PhaseShifter(j, float(phases[j])) for j in range(m)]
    # B(theta, phi)^-1 == B(-theta, phi)
    elements += [BeamSplitter(b.mode_a, b.mode_b, -b.theta, b.phi) for b in reversed(rotations)]
    return OpticalNetlist(m, tuple(elements))


def timebin_netlist(
    m: int, passes: int, thetas: Sequence[float], phis: Sequence[float]
) -> OpticalNetlist:
    """Spatial equivalent of the fiber-loop time-bin architecture.

    Each pass through the inner loop couples neighbouring bins
    ``(0,1), (1,2), ..., (m-2, m-1)`` in turn; pass ``p`` uses schedule
    entries ``p*(m-1) ... p*(m-1) + m-2``. Switches are ideal.
    """
    if m < 2 or passes < 1:
        raise InvalidInputError(f"need m >= 2 and passes >= 1, got m={m}, passes={passes}")
    expected = passes * (m - 1)
    if len(thetas) != expected or len(phis) != expected:
        raise InvalidInputError(
            f"schedule needs {expected} thetas and phis, got {len(thetas)} and {len(phis)}"
        )
    elements = tuple(
        BeamSplitter(i, i + 1, float(thetas[p * (m - 1) + i]), float(phis[p * (m - 1) + i]))
        for p in range(passes)
        for i in range(m - 1)
    )
    return OpticalNetlist(m, elements)
