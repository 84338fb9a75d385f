"""Image-method room impulse responses for shoebox rooms.

Mirror-source lattice per axis: image coordinate (1 - 2q) * src + 2 n L
with q in {0, 1} and integer n; the wall at coordinate 0 contributes
|n - q| reflections and the wall at L contributes |n|.  Each image adds a
fractional-delay pulse A * w(t - d/c) where A is the product of wall
reflection coefficients over 4 pi d and w is a Hann-windowed sinc of
half-width 16 samples.  No air absorption and no high-pass post filter;
these are deliberate simplifications.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import audio
from .sampling import RandomStream

KERNEL_HALF_WIDTH = 16
DEFAULT_SOUND_SPEED = 343.0
_IMAGE_CHUNK = 200_000


class RoomError(ValueError):
    pass


@dataclass(frozen=True)
class RoomSetup:
    """Geometry and acoustics for one room.

    ``reflection_coefficients`` holds six wall values in the order
    (x=0, x=Lx, y=0, y=Ly, z=0, z=Lz).
    """

    dimensions: tuple[float, float, float]
    source_positions: tuple[tuple[float, float, float], ...]
    mic_positions: tuple[tuple[float, float, float], ...]
    reflection_coefficients: tuple[float, float, float, float, float, float]
    sample_rate: int
    rir_length: int
    sound_speed: float = DEFAULT_SOUND_SPEED

    def __post_init__(self) -> None:
        if any(d <= 0 for d in self.dimensions):
            raise RoomError(f"non-positive room dimensions {self.dimensions}")
        for name, positions in (
            ("source", self.source_positions),
            ("mic", self.mic_positions),
        ):
            for pos in positions:
                if not all(0 < p < d for p, d in zip(pos, self.dimensions)):
                    raise RoomError(
                        f"{name} position {pos} not strictly inside room "
                        f"{self.dimensions}"
                    )
        if any(not 0 <= b < 1 for b in self.reflection_coefficients):
            raise RoomError(
                f"reflection coefficients {self.reflection_coefficients} "
                "must lie in [0, 1)"
            )
        if self.rir_length <= 0:
            raise RoomError("rir_length must be > 0")
        for src in self.source_positions:
            for mic in self.mic_positions:
                delay = (
                    math.dist(src, mic) / self.sound_speed * self.sample_rate
                )
                if delay >= self.rir_length:
                    raise RoomError(
                        f"rir_length {self.rir_length} shorter than direct-path "
                        f"delay {delay:.1f} samples for {src} -> {mic}"
                    )


def reflection_from_t60(
    dimensions: tuple[float, float, float], t60: float
) -> float:
    """Uniform wall reflection coefficient from Eyring's formula.

    beta = sqrt(1 - alpha) with alpha = 1 - exp(-0.163 V / (S t60)).
    This is the textbook diffuse-field inversion; the image lattice of a
    shoebox room decays measurably slower than it predicts (directions
    with few wall crossings dominate the late field), so inventories use
    :func:`calibrated_reflection` for rooms whose realized decay must
    match their T60 label.
    """
    if t60 <= 0:
        raise RoomError("t60 must be > 0")
    lx, ly, lz = dimensions
    if lx <= 0 or ly <= 0 or lz <= 0:
        raise RoomError(f"non-positive room dimensions {dimensions}")
    volume = lx * ly * lz
    surface = 2.0 * (lx * ly + lx * lz + ly * lz)
    alpha = 1.0 - math.exp(-0.163 * volume / (surface * t60))
    if alpha >= 1.0:
        raise RoomError(f"t60 {t60} too small for room {dimensions} (alpha >= 1)")
    return math.sqrt(1.0 - alpha)


def calibrated_reflection(
    dimensions: tuple[float, float, float],
    t60: float,
    sound_speed: float = DEFAULT_SOUND_SPEED,
) -> float:
    """Uniform reflection coefficient whose realized decay matches ``t60``.

    Enumerates the room's image lattice once and bisects beta until the
    lattice's backward-integrated energy decay crosses -60 dB at ``t60``.
    Unlike the Eyring inversion this accounts for the direction-dependent
    reflection counts of the shoebox lattice, so generated RIRs reach
    -60 dB at the labeled T60 instead of well after it.
    """
    if t60 <= 0:
        raise RoomError("t60 must be > 0")
    if any(d <= 0 for d in dimensions):
        raise RoomError(f"non-positive room dimensions {dimensions}")
    horizon = 1.6 * t60 * sound_speed + 2.0 * max(dimensions)
    src = tuple(0.45 * d for d in dimensions)
    mic = np.asarray([0.55 * d for d in dimensions])

    per_axis = [
        _axis_images(src[d], dimensions[d], 1.0, 1.0, horizon) for d in range(3)
    ]
    coords = [a[0] for a in per_axis]
    counts = [a[2].astype(np.float64) for a in per_axis]
    dist = np.sqrt(
        (coords[0] - mic[0])[:, None, None] ** 2
        + (coords[1] - mic[1])[None, :, None] ** 2
        + (coords[2] - mic[2])[None, None, :] ** 2
    ).ravel()
    order = (
        counts[0][:, None, None]
        + counts[1][None, :, None]
        + counts[2][None, None, :]
    ).ravel()
    keep = (dist > 0.0) & (dist <= horizon)
    dist, order = dist[keep], order[keep]
    sort = np.argsort(dist, kind="stable")
    dist, order = dist[sort], order[sort]
    geometric = 1.0 / dist**2  # energy, constant factors cancel

    def crossing_time(beta: float) -> float:
        energy = geometric * beta ** (2.0 * order)
        tail = np.cumsum(energy[::-1])[::-1]
        below = np.flatnonzero(tail <= 1e-6 * tail[0])
        if below.size == 0:
            return math.inf
        return float(dist[below[0]]) / sound_speed

    low, high = 0.02, 0.999999
    if crossing_time(low) > t60:
        raise RoomError(f"t60 {t60} too small for room {dimensions}")
    for _ in range(60):
        mid = 0.5 * (low + high)
        if crossing_time(mid) <= t60:
            low = mid
        else:
            high = mid
    return low


def _axis_images(
    source: float, length: float, beta_low: float, beta_high: float, max_radius: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-axis image coordinates, amplitudes and reflection counts."""
    n_max = int(math.ceil(max_radius / (2.0 * length))) + 1
    n = np.arange(-n_max, n_max + 1, dtype=np.int64)
    coords = []
    amps = []
    counts = []
    for q in (0, 1):
        coords.append((1 - 2 * q) * source + 2.0 * n * length)
        low_exp = np.abs(n - q)
        high_exp = np.abs(n)
        amps.append(beta_low ** low_exp * beta_high ** high_exp)
        counts.append(low_exp + high_exp)
    return (
        np.concatenate(coords),
        np.concatenate(amps),
        np.concatenate(counts),
    )


def generate_rir(
    setup: RoomSetup,
    source_index: int,
    mic_index: int,
    max_order: int | None = None,
) -> np.ndarray:
    """Impulse response for one source-microphone pair.

    ``max_order`` caps the total reflection count; ``None`` keeps every
    image whose pulse can reach the RIR window (auto order).
    """
    src = setup.source_positions[source_index]
    mic = np.asarray(setup.mic_positions[mic_index], dtype=np.float64)
    fs = setup.sample_rate
    c = setup.sound_speed
    length = setup.rir_length
    betas = setup.reflection_coefficients
    # images beyond this distance cannot place any tap inside the window
    max_dist = (length + KERNEL_HALF_WIDTH) / fs * c

    axes = [
        _axis_images(src[d], setup.dimensions[d], betas[2 * d], betas[2 * d + 1],
                     max_dist)
        for d in range(3)
    ]
    coords = [a[0] for a in axes]
    amps = [a[1] for a in axes]
    counts = [a[2] for a in axes]

    # pad so out-of-window taps can be sliced away instead of branch-checked
    pad = KERNEL_HALF_WIDTH + 2
    h = np.zeros(length + 2 * pad, dtype=np.float64)
    taps = np.arange(2 * KERNEL_HALF_WIDTH + 1)

    nx, ny, nz = (len(c_) for c_ in coords)
    dx2 = (coords[0] - mic[0]) ** 2
    dy2 = (coords[1] - mic[1]) ** 2
    dz2 = (coords[2] - mic[2]) ** 2

    flat_total = nx * ny * nz
    for chunk_start in range(0, flat_total, _IMAGE_CHUNK):
        chunk_end = min(chunk_start + _IMAGE_CHUNK, flat_total)
        idx = np.arange(chunk_start, chunk_end)
        ix = idx // (ny * nz)
        iy = (idx // nz) % ny
        iz = idx % nz

        amp = amps[0][ix] * amps[1][iy] * amps[2][iz]
        if max_order is not None:
            order = counts[0][ix] + counts[1][iy] + counts[2][iz]
            keep = order <= max_order
            ix, iy, iz, amp = ix[keep], iy[keep], iz[keep], amp[keep]
        dist = np.sqrt(dx2[ix] + dy2[iy] + dz2[iz])
        keep = (dist <= max_dist) & (amp > 0.0) & (dist > 0.0)
        dist, amp = dist[keep], amp[keep]
        if dist.size == 0:
            continue

        delay = dist / c * fs
        gain = amp / (4.0 * math.pi * dist)
        start = np.ceil(delay - KERNEL_HALF_WIDTH).astype(np.int64)
        t = start[:, None] + taps[None, :] - delay[:, None]
        window = 0.5 * (1.0 + np.cos(np.pi * t / KERNEL_HALF_WIDTH))
        window[np.abs(t) > KERNEL_HALF_WIDTH] = 0.0
        values = gain[:, None] * window * np.sinc(t)
        flat_idx = (start[:, None] + taps[None, :] + pad).ravel()
        np.clip(flat_idx, 0, h.size - 1, out=flat_idx)
        h += np.bincount(flat_idx, weights=values.ravel(), minlength=h.size)

    return h[pad : pad + length]


# --- inventories ------------------------------------------------------------


@dataclass
class RoomRirs:
    """One room's setup plus its generated RIR tensor."""

    room_id: str
    setup: RoomSetup
    rirs: np.ndarray  # (positions, mics, rir_length)
    t60: float | None = None

    @property
    def num_positions(self) -> int:
        return self.rirs.shape[0]

    @property
    def num_mics(self) -> int:
        return self.rirs.shape[1]


@dataclass
class RoomInventory:
    """Generated rooms plus provenance (generator config and seed)."""

    rooms: list[RoomRirs]
    provenance: dict[str, Any] = field(default_factory=dict)

    @property
    def sample_rate(self) -> int:
        return self.rooms[0].setup.sample_rate

    @property
    def rir_length(self) -> int:
        return self.rooms[0].setup.rir_length

    @property
    def positions_per_room(self) -> int:
        return self.rooms[0].num_positions

    @property
    def num_mics(self) -> int:
        return self.rooms[0].num_mics

    def room(self, room_id: str) -> RoomRirs:
        for room in self.rooms:
            if room.room_id == room_id:
                return room
        raise RoomError(f"unknown room id {room_id!r}")

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        index: dict[str, Any] = {
            "format": "mixsim-rir-inventory-v1",
            "sample_rate": self.sample_rate,
            "rir_length": self.rir_length,
            "positions_per_room": self.positions_per_room,
            "num_mics": self.num_mics,
            "provenance": self.provenance,
            "rooms": [],
        }
        for room in self.rooms:
            files = {}
            for pos in range(room.num_positions):
                name = f"{room.room_id}_pos{pos}.wav"
                audio.write_audio(
                    directory / name,
                    room.rirs[pos],
                    room.setup.sample_rate,
                    encoding="float32",
                )
                files[str(pos)] = name
            index["rooms"].append(
                {
                    "room_id": room.room_id,
                    "dimensions": list(room.setup.dimensions),
                    "source_positions": [list(p) for p in room.setup.source_positions],
                    "mic_positions": [list(p) for p in room.setup.mic_positions],
                    "reflection_coefficients": list(
                        room.setup.reflection_coefficients
                    ),
                    "sound_speed": room.setup.sound_speed,
                    "t60": room.t60,
                    "files": files,
                }
            )
        (directory / "index.json").write_text(
            json.dumps(index, indent=2) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, directory: str | Path) -> "RoomInventory":
        directory = Path(directory)
        index_path = directory / "index.json"
        if not index_path.is_file():
            raise RoomError(f"no inventory index at {index_path}")
        index = json.loads(index_path.read_text(encoding="utf-8"))
        rooms: list[RoomRirs] = []
        for raw in index["rooms"]:
            setup = RoomSetup(
                dimensions=tuple(raw["dimensions"]),
                source_positions=tuple(tuple(p) for p in raw["source_positions"]),
                mic_positions=tuple(tuple(p) for p in raw["mic_positions"]),
                reflection_coefficients=tuple(raw["reflection_coefficients"]),
                sample_rate=index["sample_rate"],
                rir_length=index["rir_length"],
                sound_speed=raw.get("sound_speed", DEFAULT_SOUND_SPEED),
            )
            tensors = []
            for pos in range(len(raw["files"])):
                waveform, rate = audio.read_audio(directory / raw["files"][str(pos)])
                if rate != index["sample_rate"]:
                    raise RoomError(
                        f"RIR file rate {rate} != inventory rate "
                        f"{index['sample_rate']}"
                    )
                if waveform.ndim == 1:
                    waveform = waveform[None, :]
                tensors.append(np.asarray(waveform, dtype=np.float64))
            rooms.append(
                RoomRirs(
                    room_id=raw["room_id"],
                    setup=setup,
                    rirs=np.stack(tensors),
                    t60=raw.get("t60"),
                )
            )
        return cls(rooms=rooms, provenance=index.get("provenance", {}))


@dataclass(frozen=True)
class RirGeneratorConfig:
    """Ranges for random room generation (SMS-WSJ-style defaults live in
    :mod:`mixsim.presets`)."""

    num_rooms: int = 4
    positions_per_room: int = 8
    num_mics: int = 6
    sample_rate: int = 8000
    rir_length_seconds: float = 1.0
    room_x_range: tuple[float, float] = (7.0, 9.0)
    room_y_range: tuple[float, float] = (5.5, 6.5)
    room_z_range: tuple[float, float] = (2.8, 3.2)
    t60_range: tuple[float, float] = (0.2, 0.5)
    array_radius: float = 0.1
    array_center_jitter: float = 0.2
    array_height_range: tuple[float, float] = (1.0, 1.5)
    source_distance_range: tuple[float, float] = (1.0, 2.0)
    source_height_range: tuple[float, float] = (1.4, 1.6)
    wall_margin: float = 0.2
    max_retries: int = 100

    def to_dict(self) -> dict[str, Any]:
        return {
            "num_rooms": self.num_rooms,
            "positions_per_room": self.positions_per_room,
            "num_mics": self.num_mics,
            "sample_rate": self.sample_rate,
            "rir_length_seconds": self.rir_length_seconds,
            "room_x_range": list(self.room_x_range),
            "room_y_range": list(self.room_y_range),
            "room_z_range": list(self.room_z_range),
            "t60_range": list(self.t60_range),
            "array_radius": self.array_radius,
            "array_center_jitter": self.array_center_jitter,
            "array_height_range": list(self.array_height_range),
            "source_distance_range": list(self.source_distance_range),
            "source_height_range": list(self.source_height_range),
            "wall_margin": self.wall_margin,
            "max_retries": self.max_retries,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RirGeneratorConfig":
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            if key.endswith("_range"):
                kwargs[key] = tuple(value)
            else:
                kwargs[key] = value
        return cls(**kwargs)


def _sample_point_inside(
    config: RirGeneratorConfig,
    dims: tuple[float, float, float],
    center: tuple[float, float],
    stream: RandomStream,
    height_range: tuple[float, float],
) -> tuple[float, float, float]:
    margin = config.wall_margin
    for _ in range(config.max_retries):
        angle = stream.uniform(0.0, 2.0 * math.pi)
        dist = stream.uniform(*config.source_distance_range)
        x = center[0] + dist * math.cos(angle)
        y = center[1] + dist * math.sin(angle)
        z = stream.uniform(*height_range)
        if (
            margin < x < dims[0] - margin
            and margin < y < dims[1] - margin
            and margin < z < dims[2] - margin
        ):
            return (x, y, z)
    raise RoomError(
        f"could not place a source inside room {dims} after "
        f"{config.max_retries} retries"
    )


def build_inventory(
    config: RirGeneratorConfig, stream: RandomStream
) -> RoomInventory:
    """Draw rooms from the configured ranges and generate all RIRs."""
    rir_length = int(round(config.rir_length_seconds * config.sample_rate))
    rooms: list[RoomRirs] = []
    for room_index in range(config.num_rooms):
        dims = (
            stream.uniform(*config.room_x_range),
            stream.uniform(*config.room_y_range),
            stream.uniform(*config.room_z_range),
        )
        t60 = stream.uniform(*config.t60_range)
        beta = reflection_from_t60(dims, t60)
        center_x = dims[0] / 2 + stream.uniform(
            -config.array_center_jitter, config.array_center_jitter
        )
        center_y = dims[1] / 2 + stream.uniform(
            -config.array_center_jitter, config.array_center_jitter
        )
        array_height = stream.uniform(*config.array_height_range)
        phase = stream.uniform(0.0, 2.0 * math.pi)
        mics = tuple(
            (
                center_x + config.array_radius
                * math.cos(phase + 2.0 * math.pi * m / config.num_mics),
                center_y + config.array_radius
                * math.sin(phase + 2.0 * math.pi * m / config.num_mics),
                array_height,
            )
            for m in range(config.num_mics)
        )
        sources = tuple(
            _sample_point_inside(
                config, dims, (center_x, center_y), stream,
                config.source_height_range,
            )
            for _ in range(config.positions_per_room)
        )
        setup = RoomSetup(
            dimensions=dims,
            source_positions=sources,
            mic_positions=mics,
            reflection_coefficients=(beta,) * 6,
            sample_rate=config.sample_rate,
            rir_length=rir_length,
        )
        tensor = np.zeros(
            (config.positions_per_room, config.num_mics, rir_length),
            dtype=np.float64,
        )
        for pos in range(config.positions_per_room):
            for mic in range(config.num_mics):
                tensor[pos, mic] = generate_rir(setup, pos, mic)
        rooms.append(
            RoomRirs(
                room_id=f"room{room_index:03d}",
                setup=setup,
                rirs=tensor,
                t60=t60,
            )
        )
    return RoomInventory(
        rooms=rooms,
        provenance={"config": config.to_dict(), "seed": stream.seed},
    )
