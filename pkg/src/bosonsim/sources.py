"""Photon sources, input noise and detector models.

Covers SPDC pair statistics and heralding, multiplexed and scattershot
source arrangements, the independent per-mode input error model, and
under-counting in multiplexed photodetection.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import FockConfiguration, InvalidInputError, OutputDistribution, ResourceLimitError, as_array
from .sampler import output_distribution, sample_from

SPDC_TAIL_TOL = 1e-12
# Auto cutoffs aim well below the tolerance so renormalized conditionals
# stay accurate to ~1e-12 as well.
_SPDC_TAIL_TARGET = 1e-16
SCATTERSHOT_MAX_RETRIES = 10**6


class DetectorKind(str, enum.Enum):
    BUCKET = "bucket"
    PNR = "pnr"

    @classmethod
    def parse(cls, value) -> DetectorKind:
        if isinstance(value, cls):
            return value
        aliases = {"bucket": cls.BUCKET, "pnr": cls.PNR, "number-resolving": cls.PNR}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise InvalidInputError(f"unknown detector kind {value!r}") from None


class ErrorKind(str, enum.Enum):
    VACUUM = "vacuum"
    TWO_PHOTON = "two_photon"

    @classmethod
    def parse(cls, value) -> ErrorKind:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower().replace("-", "_"))
        except ValueError:
            raise InvalidInputError(f"unknown error kind {value!r}") from None

    @property
    def occupation(self) -> int:
        return 0 if self is ErrorKind.VACUUM else 2


def _spdc_cutoff(chi: float, target: float) -> int:
    if chi == 0.0:
        return 0
    # tail beyond K is chi**(2(K+1))
    k = max(math.ceil(math.log(target) / (2 * math.log(chi))) - 1, 0)
    while chi ** (2 * (k + 1)) > target:
        k += 1
    return k


@dataclass(frozen=True)
class SpdcSource:
    """Two-mode squeezed vacuum truncated at ``cutoff`` pairs.

    With ``cutoff=None`` the cutoff is chosen so the discarded tail
    ``chi**(2*(cutoff+1))`` is below 1e-16; an explicit cutoff only has to
    keep it within ``SPDC_TAIL_TOL``.
    """

    chi: float
    cutoff: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.chi < 1.0:
            raise InvalidInputError(f"squeezing chi must lie in [0, 1), got {self.chi}")
        if self.cutoff is None:
            object.__setattr__(self, "cutoff", _spdc_cutoff(self.chi, _SPDC_TAIL_TARGET))
        elif self.tail_mass() > SPDC_TAIL_TOL:
            need = _spdc_cutoff(self.chi, SPDC_TAIL_TOL)
            raise InvalidInputError(
                f"cutoff {self.cutoff} leaves tail mass above {SPDC_TAIL_TOL}; need >= {need}"
            )

    def tail_mass(self) -> float:
        return self.chi ** (2 * (self.cutoff + 1))


@dataclass(frozen=True)
class HeraldDetector:
    efficiency: float
    kind: DetectorKind = DetectorKind.PNR

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise InvalidInputError(f"efficiency must lie in [0, 1], got {self.efficiency}")
        object.__setattr__(self, "kind", DetectorKind.parse(self.kind))


@dataclass(frozen=True)
class NoiseModel:
    """Each input photon survives intact with probability ``p``.

    Otherwise the mode holds ``error_kind.occupation`` photons. A
    ``temporal_mismatch`` probability is folded into the failure rate as
    an independent Bernoulli factor.
    """

    p: float
    error_kind: ErrorKind = ErrorKind.VACUUM
    epsilon: float = 0.0
    temporal_mismatch: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise InvalidInputError(f"p must lie in [0, 1], got {self.p}")
        if not 0.0 <= self.temporal_mismatch <= 1.0:
            raise InvalidInputError("temporal_mismatch must lie in [0, 1]")
        object.__setattr__(self, "error_kind", ErrorKind.parse(self.error_kind))

    @property
    def effective_p(self) -> float:
        return self.p * (1.0 - self.temporal_mismatch)


@dataclass(frozen=True)
class SourceConfig:
    """Contents of a noise/source configuration file."""

    noise: NoiseModel
    source: SpdcSource | None = None
    herald: HeraldDetector | None = None

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> SourceConfig:
        try:
            noise = NoiseModel(
                float(obj.get("p", 1.0)),
                obj.get("error_kind", "vacuum"),
                float(obj.get("epsilon", 0.0)),
            )
            source = SpdcSource(float(obj["chi"])) if "chi" in obj else None
            herald = None
            if "herald" in obj:
                h = obj["herald"]
                herald = HeraldDetector(float(h.get("eta", 1.0)), h.get("kind", "pnr"))
        except (TypeError, ValueError, AttributeError) as exc:
            if isinstance(exc, InvalidInputError):
                raise
            raise InvalidInputError(f"malformed noise config: {exc}") from exc
        return cls(noise, source, herald)

    def to_json_obj(self) -> dict:
        obj: dict = {
            "p": self.noise.p,
            "error_kind": self.noise.error_kind.value,
            "epsilon": self.noise.epsilon,
        }
        if self.source is not None:
            obj["chi"] = self.source.chi
        if self.herald is not None:
            obj["herald"] = {"kind": self.herald.kind.value, "eta": self.herald.efficiency}
        return obj


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _pair_probs(src: SpdcSource) -> np.ndarray:
    k = np.arange(src.cutoff + 1)
    probs = (1.0 - src.chi**2) * src.chi ** (2 * k)
    return probs / math.fsum(probs.tolist())


def spdc_pair_distribution(src: SpdcSource) -> dict[int, float]:
    """``P(k) = (1 - chi**2) chi**(2k)``, renormalized over ``k <= cutoff``."""
    return dict(enumerate(_pair_probs(src).tolist()))


def herald_probabilities(det: HeraldDetector, kmax: int) -> np.ndarray:
    """Probability that the herald fires given ``k = 0..kmax`` signal photons."""
    k = np.arange(kmax + 1)
    eta = det.efficiency
    if det.kind is DetectorKind.BUCKET:
        return 1.0 - (1.0 - eta) ** k
    # exactly one of k photons detected
    return k * eta * (1.0 - eta) ** np.maximum(k - 1, 0) * (k > 0)


def heralded_idler_distribution(src: SpdcSource, det: HeraldDetector) -> dict[int, float]:
    """Idler photon number conditioned on a herald event.

    At zero efficiency both detector kinds reduce to the small-efficiency
    limit, in which the herald probability is proportional to ``k``.
    """
    pk = _pair_probs(src)
    k = np.arange(len(pk))
    if det.efficiency == 0.0:
        weights = pk * k
    else:
        weights = pk * herald_probabilities(det, len(pk) - 1)
    total = math.fsum(weights.tolist())
    if total == 0.0:
        raise InvalidInputError(f"herald can never fire for chi={src.chi}")
    return {int(i): float(w / total) for i, w in zip(k, weights) if w > 0.0}


@dataclass(frozen=True)
class MultiplexResult:
    success: bool
    heralded: tuple[int, ...]
    routed: tuple[int, ...]


def multiplex_sources(count: int, needed: int, q: float, seed) -> MultiplexResult:
    """``count`` sources herald independently with probability ``q``; the
    lowest-indexed ``needed`` heralded sources are routed to modes
    ``0..needed-1`` when enough heralded."""
    if needed < 1 or count < needed:
        raise InvalidInputError(f"need count >= needed >= 1, got {count}, {needed}")
    if not 0.0 <= q <= 1.0:
        raise InvalidInputError(f"herald probability must lie in [0, 1], got {q}")
    fired = _rng(seed).random(count) < q
    heralded = tuple(int(i) for i in np.flatnonzero(fired))
    success = len(heralded) >= needed
    return MultiplexResult(success, heralded, heralded[:needed] if success else ())


def _pair_cdf(sources: Sequence[SpdcSource]) -> list[np.ndarray]:
    return [np.cumsum(_pair_probs(s)) for s in sources]


@dataclass
class ScattershotBatch:
    """Post-selected scattershot events: heralded input modes and outputs."""

    heralded: list[tuple[int, ...]] = field(default_factory=list)
    outputs: list[FockConfiguration] = field(default_factory=list)
    attempts: int = 0


def scattershot_sample(
    u,
    sources: Sequence[SpdcSource],
    det: HeraldDetector,
    shots: int,
    seed,
    n: int | None = None,
    max_retries: int = SCATTERSHOT_MAX_RETRIES,
    batch: int = 4096,
) -> ScattershotBatch:
    """Run scattershot boson sampling until ``shots`` events are accepted.

    Every mode has its own SPDC source feeding the idler into the network.
    A run is kept when each herald reads 0 or 1 photons, at least one reads
    1 (exactly ``n`` if given), and the idlers hold exactly the heralded
    photons, i.e. the output carries ``|T|`` photons. The output is then
    drawn from the boson-sampling distribution for the indicator input of T.
    ``max_retries`` bounds the rejected runs per accepted event.
    """
    arr = as_array(u)
    m = arr.shape[0]
    if len(sources) != m:
        raise InvalidInputError(f"need one source per mode ({m}), got {len(sources)}")
    if det.kind is not DetectorKind.PNR:
        raise InvalidInputError("scattershot post-selection needs number-resolving heralds")
    if n is not None and not 1 <= n <= m:
        raise InvalidInputError(f"required herald count must be in 1..{m}, got {n}")
    rng = _rng(seed)
    cdfs = _pair_cdf(sources)
    eta = det.efficiency
    out = ScattershotBatch()
    dists: dict[tuple[int, ...], OutputDistribution] = {}
    pending: list[tuple[int, ...]] = []
    rejected = 0
    while len(pending) < shots:
        draws = rng.random((batch, m))
        pairs = np.empty((batch, m), dtype=np.int64)
        for j in range(m):
            pairs[:, j] = np.minimum(np.searchsorted(cdfs[j], draws[:, j], side="right"), len(cdfs[j]) - 1)
        clicks = rng.binomial(pairs, eta)
        ok = np.all(clicks <= 1, axis=1) & np.all(clicks == pairs, axis=1)
        nclicks = clicks.sum(axis=1)
        ok &= nclicks >= 1 if n is None else nclicks == n
        for row in range(batch):
            out.attempts += 1
            if ok[row]:
                pending.append(tuple(int(j) for j in np.flatnonzero(clicks[row])))
                rejected = 0
                if len(pending) == shots:
                    break
            else:
                rejected += 1
                if rejected > max_retries:
                    raise ResourceLimitError(
                        f"no accepted scattershot event after {max_retries} attempts"
                    )
    groups: dict[tuple[int, ...], list[int]] = {}
    for i, t in enumerate(pending):
        groups.setdefault(t, []).append(i)
    outputs: list[FockConfiguration | None] = [None] * shots
    for t in sorted(groups, key=lambda t: (len(t), t)):
        if t not in dists:
            dists[t] = output_distribution(arr, FockConfiguration.from_modes(t, m))
        draws = sample_from(dists[t], len(groups[t]), rng)
        for i, s in zip(groups[t], draws):
            outputs[i] = s
    out.heralded = pending
    out.outputs = outputs  # type: ignore[assignment]
    return out


def scattershot_run(u, sources: Sequence[SpdcSource], det: HeraldDetector, seed, n: int | None = None):
    """One post-selected scattershot event as ``(T, S)``."""
    res = scattershot_sample(u, sources, det, 1, seed, n=n)
    return res.heralded[0], res.outputs[0]


def herald_acceptance_probability(src: SpdcSource, det: HeraldDetector) -> tuple[float, float]:
    """Per-mode probabilities of the two admissible scattershot outcomes:
    (no pairs and no click, one pair and one click)."""
    pk = _pair_probs(src)
    p1 = pk[1] * det.efficiency if len(pk) > 1 else 0.0
    return float(pk[0]), float(p1)


def simulate_input_noise(
    model: NoiseModel, input: FockConfiguration, trials: int, seed
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized noise draws: ``(trials, m)`` realized occupations and the
    per-trial ideal flags."""
    if not input.is_collision_free():
        raise InvalidInputError(f"noisy input must be collision-free, got {input}")
    occ = np.array(input.occupations, dtype=np.int64)
    occupied = occ > 0
    rng = _rng(seed)
    fail = (rng.random((trials, input.modes)) >= model.effective_p) & occupied
    realized = np.where(fail, model.error_kind.occupation, occ[None, :])
    return realized, ~fail.any(axis=1)


def apply_input_noise(model: NoiseModel, input: FockConfiguration, seed) -> tuple[FockConfiguration, bool]:
    realized, ideal = simulate_input_noise(model, input, 1, seed)
    return FockConfiguration(realized[0]), bool(ideal[0])


def hardness_threshold_check(p: float, n: int, c: float, d: float) -> bool:
    """Whether ``p**n > 1 / (c * n**d)``, compared in log space.

    For any ``p < 1`` this eventually fails as ``n`` grows.
    """
    if not 0.0 <= p <= 1.0 or n < 1 or c <= 0 or d < 0:
        raise InvalidInputError("need p in [0,1], n >= 1, c > 0, d >= 0")
    if p == 0.0:
        return False
    return n * math.log(p) > -(math.log(c) + d * math.log(n))


def undercount_bound(k: int, N: int) -> float:
    return k * (k - 1) / (2 * N)


def undercount_simulation(k: int, N: int, trials: int, seed) -> float:
    """Fraction of trials in which ``k`` photons spread uniformly over ``N``
    detectors put two or more on the same detector."""
    if k < 1 or N < 1 or trials < 1:
        raise InvalidInputError("need k >= 1, N >= 1, trials >= 1")
    if k == 1:
        return 0.0
    hits = np.sort(_rng(seed).integers(0, N, size=(trials, k)), axis=1)
    collided = np.any(hits[:, 1:] == hits[:, :-1], axis=1)
    return float(collided.mean())
