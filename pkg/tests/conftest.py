"""Shared fixtures: deterministic synthetic corpora and RIR inventories."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from mixsim import audio
from mixsim.corpus import CorpusManifest, UtteranceRecord, load_manifest, write_manifest
from mixsim.rir import RirGeneratorConfig, RoomInventory, RoomRirs, RoomSetup, build_inventory
from mixsim.sampling import RandomStream, mix64


def build_corpus(
    directory: Path,
    num_speakers: int,
    utts_per_speaker: int,
    sample_rate: int = 8000,
    duration_range: tuple[float, float] = (4.0, 12.0),
    border_range: tuple[float, float] = (0.2, 0.7),
    seed: int = 777,
    write_audio: bool = True,
    name: str = "synth",
) -> CorpusManifest:
    """Synthetic corpus: noise-burst utterances with silent borders.

    The borders are digital silence and are recorded as vad_bounds, so
    VAD-based measurements are exact.
    """
    stream = RandomStream(seed)
    audio_dir = directory / "audio"
    if write_audio:
        audio_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for s in range(num_speakers):
        for u in range(utts_per_speaker):
            duration = stream.uniform(*duration_range)
            num_samples = int(round(duration * sample_rate))
            lead = int(round(stream.uniform(*border_range) * sample_rate))
            tail = int(round(stream.uniform(*border_range) * sample_rate))
            vad = (lead, num_samples - tail)
            uid = f"spk{s:02d}_utt{u:02d}"
            rel_path = f"audio/{uid}.wav"
            if write_audio:
                noise = RandomStream(mix64(seed + 1000003 * s + u))
                signal = np.zeros(num_samples)
                signal[vad[0] : vad[1]] = 0.2 * noise.normal_block(vad[1] - vad[0])
                audio.write_audio(
                    directory / rel_path, signal, sample_rate, encoding="pcm16"
                )
            records.append(
                UtteranceRecord(
                    utterance_id=uid,
                    speaker_id=f"spk{s:02d}",
                    audio_path=rel_path,
                    num_samples=num_samples,
                    sample_rate=sample_rate,
                    vad_bounds=vad,
                    extra={"transcription": f"synthetic {uid}"},
                )
            )
    manifest = CorpusManifest(name, sample_rate, tuple(records), base_dir=directory)
    write_manifest(manifest, directory / "manifest.json")
    return load_manifest(directory / "manifest.json")


def make_impulse_inventory(
    num_rooms: int = 1,
    positions: int = 8,
    mics: int = 1,
    sample_rate: int = 8000,
    rir_length: int = 128,
) -> RoomInventory:
    """Inventory whose RIRs are unit impulses at sample 0 (for identity
    tests: reverberant rendering must equal anechoic rendering)."""
    rooms = []
    for r in range(num_rooms):
        sources = tuple(
            (1.0 + 0.5 * (p % 4), 1.0 + 0.5 * (p // 4), 1.5) for p in range(positions)
        )
        mics_pos = tuple((4.0 + 0.1 * m, 3.0, 1.5) for m in range(mics))
        setup = RoomSetup(
            dimensions=(8.0, 6.0, 3.0),
            source_positions=sources,
            mic_positions=mics_pos,
            reflection_coefficients=(0.0,) * 6,
            sample_rate=sample_rate,
            rir_length=rir_length,
        )
        rirs = np.zeros((positions, mics, rir_length))
        rirs[:, :, 0] = 1.0
        rooms.append(RoomRirs(room_id=f"room{r:03d}", setup=setup, rirs=rirs))
    return RoomInventory(rooms=rooms, provenance={"kind": "unit-impulse"})


@pytest.fixture(scope="session")
def big_corpus(tmp_path_factory) -> CorpusManifest:
    """20 speakers x 12 utterances of 4-12 s with audio (8 kHz)."""
    directory = tmp_path_factory.mktemp("big_corpus")
    return build_corpus(directory, num_speakers=20, utts_per_speaker=12)


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory) -> CorpusManifest:
    """4 speakers x 3 short utterances with audio, for render/CLI tests."""
    directory = tmp_path_factory.mktemp("tiny_corpus")
    return build_corpus(
        directory,
        num_speakers=4,
        utts_per_speaker=3,
        duration_range=(1.0, 2.0),
        border_range=(0.1, 0.2),
        seed=31337,
        name="tiny",
    )


@pytest.fixture(scope="session")
def small_inventory_dir(tmp_path_factory) -> Path:
    """Persisted 2-room inventory (8 positions x 2 mics, 0.25 s RIRs)."""
    directory = tmp_path_factory.mktemp("inventory")
    config = RirGeneratorConfig(
        num_rooms=2,
        positions_per_room=8,
        num_mics=2,
        sample_rate=8000,
        rir_length_seconds=0.25,
        t60_range=(0.15, 0.2),
    )
    inventory = build_inventory(config, RandomStream(99))
    inventory.save(directory)
    return directory


@pytest.fixture(scope="session")
def small_inventory(small_inventory_dir) -> RoomInventory:
    return RoomInventory.load(small_inventory_dir)
