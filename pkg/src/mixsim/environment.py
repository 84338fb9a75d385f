"""Environment parameter sampling and mixture descriptors.

Turns a timeline into a complete, audio-free recipe for one mixture:
per-utterance gains, room/position assignments, noise parameters and
optional per-channel sampling-rate offsets.  A descriptor plus the corpus
audio and the RIR inventory is everything the renderer needs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from .corpus import CorpusManifest
from .patterns import Timeline, TimelineEntry
from .sampling import RandomStream


class DescriptorError(ValueError):
    pass


@dataclass(frozen=True)
class EnvironmentConfig:
    """Acoustic environment of one dataset.

    ``reverb`` is "none" or "simulated"; simulated reverb draws one room
    per mixture from a RIR inventory.  ``snr_range_db`` of ``None``
    disables additive noise.  Gains are drawn uniformly in dB.
    """

    reverb: str = "none"
    gain_range_db: tuple[float, float] = (-5.0, 5.0)
    snr_range_db: tuple[float, float] | None = (20.0, 30.0)
    noise_kind: str = "white"
    sro_ppm_range: tuple[float, float] | None = None
    positions_per_room: int = 8
    resample_position_per_utterance: bool = False

    def __post_init__(self) -> None:
        if self.reverb not in ("none", "simulated"):
            raise DescriptorError(f"unknown reverb mode {self.reverb!r}")
        if self.gain_range_db[0] > self.gain_range_db[1]:
            raise DescriptorError(f"invalid gain_range_db {self.gain_range_db}")
        if self.snr_range_db is not None and self.snr_range_db[0] > self.snr_range_db[1]:
            raise DescriptorError(f"invalid snr_range_db {self.snr_range_db}")
        if self.sro_ppm_range is not None and self.sro_ppm_range[0] > self.sro_ppm_range[1]:
            raise DescriptorError(f"invalid sro_ppm_range {self.sro_ppm_range}")
        if self.positions_per_room < 1:
            raise DescriptorError("positions_per_room must be >= 1")


@dataclass(frozen=True)
class RirRef:
    room_id: str
    position: int


@dataclass(frozen=True)
class NoiseParams:
    kind: str
    snr_db: float
    seed: int


@dataclass(frozen=True)
class DescriptorEntry:
    """Timeline entry plus its environment parameters."""

    speaker_id: str
    utterance_id: str
    offset: int
    duration: int
    gain: float
    rir: RirRef | None = None
    gap: int | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def end(self) -> int:
        return self.offset + self.duration


@dataclass
class MixtureDescriptor:
    """Complete audio-free recipe for one mixture."""

    dataset_label: str
    example_index: int
    root_seed: int
    sample_rate: int
    num_channels: int
    num_speakers: int
    entries: list[DescriptorEntry]
    noise: NoiseParams | None
    sro_ppm: list[float] | None
    total_samples: int
    truncation: int | None = None

    @property
    def mixture_id(self) -> str:
        return f"{self.dataset_label}_{self.example_index:04d}"

    def timeline(self) -> Timeline:
        """Reconstruct the bare timeline (for analysis)."""
        return Timeline(
            entries=[
                TimelineEntry(e.speaker_id, e.utterance_id, e.offset, e.duration, e.gap)
                for e in self.entries
            ],
            sample_rate=self.sample_rate,
            num_speakers=self.num_speakers,
            truncation=self.truncation,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "dataset_label": self.dataset_label,
            "example_index": self.example_index,
            "root_seed": self.root_seed,
            "sample_rate": self.sample_rate,
            "num_channels": self.num_channels,
            "num_speakers": self.num_speakers,
            "entries": [
                {
                    "speaker_id": e.speaker_id,
                    "utterance_id": e.utterance_id,
                    "offset": e.offset,
                    "duration": e.duration,
                    "gain": e.gain,
                    "rir": (
                        {"room": e.rir.room_id, "position": e.rir.position}
                        if e.rir is not None
                        else None
                    ),
                    "gap": e.gap,
                    "extra": e.extra,
                }
                for e in self.entries
            ],
            "noise": (
                {
                    "kind": self.noise.kind,
                    "snr_db": self.noise.snr_db,
                    "seed": self.noise.seed,
                }
                if self.noise is not None
                else None
            ),
            "sro_ppm": self.sro_ppm,
            "total_samples": self.total_samples,
            "truncation": self.truncation,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "MixtureDescriptor":
        entries = [
            DescriptorEntry(
                speaker_id=raw["speaker_id"],
                utterance_id=raw["utterance_id"],
                offset=int(raw["offset"]),
                duration=int(raw["duration"]),
                gain=float(raw["gain"]),
                rir=(
                    RirRef(raw["rir"]["room"], int(raw["rir"]["position"]))
                    if raw.get("rir") is not None
                    else None
                ),
                gap=raw.get("gap"),
                extra=dict(raw.get("extra", {})),
            )
            for raw in data["entries"]
        ]
        noise_raw = data.get("noise")
        noise = (
            NoiseParams(noise_raw["kind"], float(noise_raw["snr_db"]),
                        int(noise_raw["seed"]))
            if noise_raw is not None
            else None
        )
        descriptor = cls(
            dataset_label=data["dataset_label"],
            example_index=int(data["example_index"]),
            root_seed=int(data["root_seed"]),
            sample_rate=int(data["sample_rate"]),
            num_channels=int(data["num_channels"]),
            num_speakers=int(data["num_speakers"]),
            entries=entries,
            noise=noise,
            sro_ppm=list(data["sro_ppm"]) if data.get("sro_ppm") is not None else None,
            total_samples=int(data["total_samples"]),
            truncation=data.get("truncation"),
        )
        descriptor.validate()
        return descriptor

    def validate(self) -> None:
        expected = max((e.end for e in self.entries), default=0)
        if self.total_samples != expected:
            raise DescriptorError(
                f"descriptor {self.mixture_id}: total_samples {self.total_samples}"
                f" != max entry end {expected}"
            )
        if self.sro_ppm is not None and len(self.sro_ppm) != self.num_channels:
            raise DescriptorError(
                f"descriptor {self.mixture_id}: sro_ppm length != num_channels"
            )


def sample_noise_params(
    config: EnvironmentConfig, stream: RandomStream
) -> NoiseParams | None:
    """Draw SNR uniformly and derive a dedicated noise seed."""
    if config.snr_range_db is None:
        return None
    snr_db = stream.uniform(*config.snr_range_db)
    return NoiseParams(kind=config.noise_kind, snr_db=snr_db, seed=stream.next_raw())


def sample_sro(
    config: EnvironmentConfig, stream: RandomStream, num_channels: int
) -> list[float] | None:
    """Per-channel clock offsets in ppm; channel 0 is the reference (0)."""
    if config.sro_ppm_range is None:
        return None
    lo, hi = config.sro_ppm_range
    return [0.0] + [stream.uniform(lo, hi) for _ in range(num_channels - 1)]


def assign_environment(
    timeline: Timeline,
    config: EnvironmentConfig,
    rooms: "RoomInventory | None",
    streams: Mapping[str, RandomStream],
    *,
    dataset_label: str,
    example_index: int,
    root_seed: int,
    manifest: CorpusManifest | None = None,
) -> MixtureDescriptor:
    """Assemble the descriptor for one timeline.

    With simulated reverb, one room is drawn for the whole mixture and each
    speaker receives a disjoint set of position ids (a round-robin split of
    a position permutation); per-utterance position resampling draws from
    the speaker's own set, modelling movement.
    """
    rir_stream = streams["rir"]
    scaling_stream = streams["scaling"]

    speaker_order = timeline.speakers_in_order()
    rir_by_entry: list[RirRef | None] = [None] * len(timeline.entries)
    num_channels = 1
    if config.reverb == "simulated":
        if rooms is None or not rooms.rooms:
            raise DescriptorError(
                "simulated reverb requires a non-empty room inventory"
            )
        room = rooms.rooms[rir_stream.uniform_int(0, len(rooms.rooms) - 1)]
        positions = room.num_positions
        if len(speaker_order) > positions:
            raise DescriptorError(
                f"{len(speaker_order)} speakers but only {positions} positions "
                f"in room {room.room_id}"
            )
        num_channels = room.num_mics
        perm = rir_stream.permutation(positions)
        allotted = {
            spk: [perm[i] for i in range(k, positions, len(speaker_order))]
            for k, spk in enumerate(speaker_order)
        }
        for i, entry in enumerate(timeline.entries):
            own = allotted[entry.speaker_id]
            if config.resample_position_per_utterance and len(own) > 1:
                position = own[rir_stream.uniform_int(0, len(own) - 1)]
            else:
                position = own[0]
            rir_by_entry[i] = RirRef(room.room_id, position)

    entries: list[DescriptorEntry] = []
    for i, entry in enumerate(timeline.entries):
        gain_db = scaling_stream.uniform(*config.gain_range_db)
        extra: dict[str, Any] = {}
        if manifest is not None:
            extra = dict(manifest.record(entry.utterance_id).extra)
        entries.append(
            DescriptorEntry(
                speaker_id=entry.speaker_id,
                utterance_id=entry.utterance_id,
                offset=entry.offset,
                duration=entry.duration,
                gain=10.0 ** (gain_db / 20.0),
                rir=rir_by_entry[i],
                gap=entry.gap,
                extra=extra,
            )
        )

    noise = sample_noise_params(config, streams["noise"])
    sro = sample_sro(config, streams["sro"], num_channels)
    descriptor = MixtureDescriptor(
        dataset_label=dataset_label,
        example_index=example_index,
        root_seed=root_seed,
        sample_rate=timeline.sample_rate,
        num_channels=num_channels,
        num_speakers=timeline.num_speakers,
        entries=entries,
        noise=noise,
        sro_ppm=sro,
        total_samples=timeline.total_samples,
        truncation=timeline.truncation,
    )
    descriptor.validate()
    return descriptor


def write_descriptors(
    descriptors: Sequence[MixtureDescriptor], path: str | Path
) -> None:
    """Write a dataset as a JSON array of descriptors (round-trip stable)."""
    path = Path(path)
    payload = [d.to_dict() for d in descriptors]
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def read_descriptors(path: str | Path) -> list[MixtureDescriptor]:
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise DescriptorError(f"descriptor file {path} must hold a JSON array")
    return [MixtureDescriptor.from_dict(item) for item in data]
