"""Detector probabilities, seeded shot sampling and joint detector calibration.

Every shot ends in exactly one outcome: one detector clicks, or nothing
does (photon lost to an unwatched channel or missed by an inefficient
detector). Sampling is therefore a single multinomial draw per block.

Reproducibility: shots are cut into fixed blocks of ``BLOCK_SHOTS``. Block
``k`` draws from a Philox generator keyed by ``SeedSequence(seed,
spawn_key=(*stream, k))``. Shards only decide which worker handles which
blocks, so the merged record does not depend on the shard count.
"""
from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import CannotCalibrate, ChannelNotInRegistry, InvalidParameter, NotAState
from .state import NORM_TOL, ChannelRegistry, StateVector

NO_CLICK = "no_click"
BLOCK_SHOTS = 1 << 16
RNG_ALGORITHM = f"numpy.Philox(SeedSequence(seed, spawn_key=(*stream, block)))+multinomial/block={BLOCK_SHOTS}"


@dataclass(frozen=True)
class DetectorConfig:
    """Which detector watches which channel, and how efficiently.

    `assignments` maps channel name -> detector name; several channels may
    feed one detector. Detectors missing from `efficiency` are ideal.
    """

    assignments: Mapping[str, str]
    efficiency: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "assignments", dict(self.assignments))
        eff = dict(self.efficiency)
        for det in self.detectors:
            eff.setdefault(det, 1.0)
        for det, e in eff.items():
            if det not in self.detectors:
                raise InvalidParameter(f"efficiency given for unknown detector {det!r}")
            if not 0.0 < e <= 1.0:
                raise InvalidParameter(f"efficiency of {det!r} must lie in (0, 1], got {e}")
        if NO_CLICK in self.detectors:
            raise InvalidParameter(f"{NO_CLICK!r} is reserved")
        object.__setattr__(self, "efficiency", eff)

    @property
    def detectors(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(self.assignments.values()))

    @classmethod
    def ideal(cls, registry: ChannelRegistry, efficiency: float = 1.0) -> "DetectorConfig":
        """One detector ``D_<channel>`` per channel, all with the same efficiency."""
        assignments = {name: f"D_{name}" for name in registry.names}
        return cls(assignments, {d: efficiency for d in assignments.values()})

    def validate(self, registry: ChannelRegistry):
        for channel in self.assignments:
            if channel not in registry:
                raise ChannelNotInRegistry(f"detector channel {channel!r} is not in the registry")


@dataclass(frozen=True)
class DetectionProbabilities:
    detectors: dict[str, float]
    no_click: float

    def outcomes(self) -> tuple[list[str], np.ndarray]:
        names = [*self.detectors, NO_CLICK]
        p = np.array([*self.detectors.values(), self.no_click], dtype=float)
        return names, p

    def __getitem__(self, name: str) -> float:
        return self.no_click if name == NO_CLICK else self.detectors[name]


def probabilities(state: StateVector, config: DetectorConfig) -> DetectionProbabilities:
    if not state.normalized or abs(state.norm_squared() - 1.0) > NORM_TOL:
        raise NotAState("detection probabilities need a unit-norm state")
    config.validate(state.registry)
    per_channel = state.probabilities()
    probs = dict.fromkeys(config.detectors, 0.0)
    for channel, det in config.assignments.items():
        probs[det] += config.efficiency[det] * float(per_channel[state.registry.index(channel)])
    # residual covers inefficiency and unwatched channels
    no_click = max(0.0, 1.0 - math.fsum(probs.values()))
    return DetectionProbabilities(probs, no_click)


@dataclass(frozen=True)
class CountRecord:
    shots: int
    counts: dict[str, int]
    no_click: int
    seed: int | None = None
    rng_algorithm: str | None = None
    efficiency: dict[str, float] | None = None

    def __post_init__(self):
        if self.shots < 1:
            raise InvalidParameter("a count record needs at least one shot")
        if self.no_click < 0 or any(c < 0 for c in self.counts.values()):
            raise InvalidParameter("counts must be non-negative")
        if sum(self.counts.values()) + self.no_click != self.shots:
            raise InvalidParameter(
                f"counts {sum(self.counts.values())} + no_click {self.no_click} != shots {self.shots}"
            )

    def frequency(self, detector: str) -> float:
        if detector == NO_CLICK:
            return self.no_click / self.shots
        if detector not in self.counts:
            raise KeyError(f"no detector {detector!r} in record")
        return self.counts[detector] / self.shots

    def to_dict(self) -> dict:
        d = {
            "shots": self.shots,
            "counts": dict(self.counts),
            "no_click": self.no_click,
            "seed": self.seed,
            "rng_algorithm": self.rng_algorithm,
        }
        if self.efficiency is not None:
            d["efficiency"] = dict(self.efficiency)
        return d

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: Mapping) -> "CountRecord":
        try:
            return cls(
                shots=int(d["shots"]),
                counts={str(k): int(v) for k, v in d["counts"].items()},
                no_click=int(d["no_click"]),
                seed=d.get("seed"),
                rng_algorithm=d.get("rng_algorithm"),
                efficiency=d.get("efficiency"),
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise InvalidParameter(f"malformed count record: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "CountRecord":
        return cls.from_dict(json.loads(text))


def _block_counts(p: np.ndarray, n: int, seed: int, key: tuple[int, ...]) -> np.ndarray:
    ss = np.random.SeedSequence(seed, spawn_key=key)
    rng = np.random.Generator(np.random.Philox(ss))
    return rng.multinomial(n, p)


def sample(
    state: StateVector,
    config: DetectorConfig,
    shots: int,
    seed: int,
    *,
    shards: int = 1,
    stream: tuple[int, ...] = (),
) -> CountRecord:
    """Draw `shots` single-photon detection events.

    `stream` extends the seed key so that callers (e.g. a parameter sweep)
    can derive independent streams from one user seed.
    """
    if int(shots) != shots or shots < 1:
        raise InvalidParameter(f"shots must be a positive integer, got {shots}")
    if shards < 1:
        raise InvalidParameter(f"shards must be >= 1, got {shards}")
    if seed < 0:
        raise InvalidParameter("seed must be non-negative")
    shots = int(shots)
    names, p = probabilities(state, config).outcomes()
    p = np.clip(p, 0.0, None)
    p = p / p.sum()

    n_blocks = -(-shots // BLOCK_SHOTS)
    sizes = [BLOCK_SHOTS] * (n_blocks - 1) + [shots - BLOCK_SHOTS * (n_blocks - 1)]
    stream = tuple(int(s) for s in stream)

    def run(block_ids):
        total = np.zeros(len(p), dtype=np.int64)
        for k in block_ids:
            total += _block_counts(p, sizes[k], seed, (*stream, k))
        return total

    groups = [range(i, n_blocks, shards) for i in range(min(shards, n_blocks))]
    if len(groups) == 1:
        totals = [run(groups[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(groups)) as pool:
            totals = list(pool.map(run, groups))
    merged = np.sum(totals, axis=0)

    counts = {name: int(c) for name, c in zip(names[:-1], merged[:-1])}
    return CountRecord(
        shots=shots,
        counts=counts,
        no_click=int(merged[-1]),
        seed=int(seed),
        rng_algorithm=RNG_ALGORITHM,
        efficiency=dict(config.efficiency),
    )


@dataclass(frozen=True)
class Calibration:
    """Calibrated detection probabilities of the dark (P1) and bright (P2) ports.

    `scale` is the reference-run bright-port frequency, shared by both
    detectors. `unequal_efficiency` is set when the records say the two
    detectors differ, which the common-scale method cannot correct.
    """

    P1: float
    P2: float
    scale: float
    reference_dark_frequency: float
    unequal_efficiency: bool = False


def calibrate(
    reference_counts: CountRecord,
    object_counts: CountRecord,
    dark: str = "D_a",
    bright: str = "D_b",
) -> Calibration:
    for rec, what in ((reference_counts, "reference"), (object_counts, "object")):
        for det in (dark, bright):
            if det not in rec.counts:
                raise CannotCalibrate(f"{what} record has no detector {det!r}")
    if set(reference_counts.counts) != set(object_counts.counts):
        raise CannotCalibrate("reference and object records use different detector sets")
    scale = reference_counts.frequency(bright)
    if scale == 0:
        raise CannotCalibrate(f"reference run recorded no counts on {bright!r}")

    unequal = False
    for rec in (reference_counts, object_counts):
        eff = rec.efficiency or {}
        if dark in eff and bright in eff and not math.isclose(eff[dark], eff[bright], rel_tol=1e-12):
            unequal = True
    if unequal:
        warnings.warn(
            "dark and bright detectors have different efficiencies; a common "
            "calibration scale will bias P1 and P2",
            stacklevel=2,
        )
    return Calibration(
        P1=object_counts.frequency(dark) / scale,
        P2=object_counts.frequency(bright) / scale,
        scale=scale,
        reference_dark_frequency=reference_counts.frequency(dark),
        unequal_efficiency=unequal,
    )
