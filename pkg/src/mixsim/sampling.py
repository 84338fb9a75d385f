"""Deterministic, platform-independent random streams.

All randomness in the generator flows through :class:`RandomStream`, a
counter-based generator built on the splitmix64 output function (Steele,
Lea & Flood 2014; reference C implementation by Sebastiano Vigna).  The
``i``-th raw draw from a stream with seed ``s`` is::

    raw(s, i) = mix64((s + (i + 1) * GOLDEN_GAMMA) mod 2**64)

which is a pure function of ``(s, i)``.  Draws are therefore identical
across platforms, Python versions and processes, which is what makes
seed-based dynamic mixing and stage-independent re-generation possible.
The first raw values for seed 0 are the published splitmix64 sequence
0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F, ...

Stream seeds are derived from (root seed, dataset label, example index,
stage label) by hashing a canonical byte encoding with SHA-256 and taking
the first 8 bytes, so distinct inputs collide only with negligible
probability.  Each simulation stage owns its own stream; draws on one
stream never affect another.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MULT1 = 0xBF58476D1CE4E5B9
_MULT2 = 0x94D049BB133111EB

#: Fixed registry of simulation stages.  Every random decision in the
#: pipeline is drawn from the stream of exactly one of these stages.
STAGES = (
    "utterance",  # speaker-group and utterance selection
    "turn",       # speaker-turn choice in meetings
    "gap",        # silence/overlap decisions and classical offsets
    "scaling",    # per-utterance gains
    "rir",        # room and position assignment
    "noise",      # SNR and noise seed
    "sro",        # sampling-rate offsets
)


class UnknownStageError(ValueError):
    """Raised when a stage label is not in the fixed registry."""


def mix64(value: int) -> int:
    """splitmix64 finalizer: bijective 64-bit mixing function."""
    z = value & MASK64
    z = ((z ^ (z >> 30)) * _MULT1) & MASK64
    z = ((z ^ (z >> 27)) * _MULT2) & MASK64
    return z ^ (z >> 31)


def derive_stream_seed(
    root_seed: int, dataset_label: str, example_index: int, stage_label: str
) -> int:
    """Derive the 64-bit seed of one stage's stream.

    Deterministic in its inputs; distinct inputs give distinct seeds with
    overwhelming probability (SHA-256 truncated to 64 bits).
    """
    if stage_label not in STAGES:
        raise UnknownStageError(
            f"unknown stage label {stage_label!r}; expected one of {STAGES}"
        )
    payload = f"{root_seed & MASK64}|{dataset_label}|{example_index}|{stage_label}"
    digest = hashlib.sha256(payload.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def substream_seed(seed: int, index: int) -> int:
    """Seed of the ``index``-th child stream (e.g. per-channel noise)."""
    return mix64((seed ^ mix64((index + 1) & MASK64)) & MASK64)


def stage_streams(
    root_seed: int, dataset_label: str, example_index: int
) -> dict[str, "RandomStream"]:
    """One independent stream per registered stage."""
    return {
        stage: RandomStream(
            derive_stream_seed(root_seed, dataset_label, example_index, stage)
        )
        for stage in STAGES
    }


@dataclass
class RandomStream:
    """Counter-based random stream; value-like, no shared state.

    Draw-count contract (how far the counter advances per call):

    * ``next_raw`` / ``uniform`` / ``uniform_int`` / ``weighted_choice``: 1
    * ``permutation(n)``: n - 1
    * ``raw_block(n)`` / ``uniform_block(n)``: n
    * ``normal_block(n)``: 2 * ceil(n / 2)
    """

    seed: int
    counter: int = 0

    def next_raw(self) -> int:
        self.counter += 1
        return mix64((self.seed + self.counter * GOLDEN_GAMMA) & MASK64)

    def raw_block(self, count: int) -> np.ndarray:
        """Vectorized raw draws; identical values to ``next_raw`` repeated."""
        if count < 0:
            raise ValueError("count must be >= 0")
        idx = np.arange(self.counter + 1, self.counter + count + 1, dtype=np.uint64)
        self.counter += count
        with np.errstate(over="ignore"):
            z = np.uint64(self.seed & MASK64) + idx * np.uint64(GOLDEN_GAMMA)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MULT1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MULT2)
            return z ^ (z >> np.uint64(31))

    def uniform(self, low: float, high: float) -> float:
        """Uniform float in [low, high); returns low when low == high."""
        if not low <= high:
            raise ValueError(f"invalid interval [{low}, {high}]")
        u = (self.next_raw() >> 11) * 2.0**-53
        return low + (high - low) * u

    def uniform_int(self, low: int, high: int) -> int:
        """Uniform integer in the inclusive range [low, high].

        Single-draw multiply-shift bounding; bias below (high-low+1)/2**64.
        """
        if low > high:
            raise ValueError(f"invalid integer range [{low}, {high}]")
        span = high - low + 1
        return low + ((self.next_raw() * span) >> 64)

    def weighted_choice(self, weights: Sequence[float]) -> int:
        """Index drawn proportionally to ``weights``; zero weights never win."""
        if len(weights) == 0:
            raise ValueError("weights must be non-empty")
        total = 0.0
        for w in weights:
            if w < 0 or math.isnan(w):
                raise ValueError(f"negative or NaN weight {w}")
            total += w
        if total <= 0.0:
            raise ValueError("weights must not be all zero")
        r = self.uniform(0.0, total)
        acc = 0.0
        for i, w in enumerate(weights):
            acc += w
            if r < acc:
                return i
        # float round-off in the final accumulation: last positive weight
        for i in range(len(weights) - 1, -1, -1):
            if weights[i] > 0:
                return i
        raise AssertionError("unreachable")

    def permutation(self, count: int) -> list[int]:
        """Fisher-Yates permutation of range(count)."""
        if count < 0:
            raise ValueError("count must be >= 0")
        items = list(range(count))
        for i in range(count - 1, 0, -1):
            j = self.uniform_int(0, i)
            items[i], items[j] = items[j], items[i]
        return items

    def uniform_block(self, count: int) -> np.ndarray:
        """Vectorized uniforms in [0, 1)."""
        return (self.raw_block(count) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal_block(self, count: int) -> np.ndarray:
        """Vectorized standard-normal draws (Box-Muller on raw pairs)."""
        if count < 0:
            raise ValueError("count must be >= 0")
        pairs = (count + 1) // 2
        raw = self.raw_block(2 * pairs)
        # u1 in (0, 1] so log never sees zero; u2 in [0, 1)
        u1 = ((raw[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
        u2 = (raw[1::2] >> np.uint64(11)).astype(np.float64) * 2.0**-53
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:count]
