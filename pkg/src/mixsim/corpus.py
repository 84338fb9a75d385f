"""Source-corpus manifests: loading, validation and speaker grouping.

A manifest is an explicit sidecar JSON file freezing the utterance list of
a single-speaker corpus::

    {
      "name": "my_corpus",
      "sample_rate": 8000,
      "utterances": [
        {
          "utterance_id": "spk0_utt0",
          "speaker_id": "spk0",
          "audio_path": "audio/spk0_utt0.wav",
          "num_samples": 64000,
          "vad_bounds": [1600, 62000],      // optional
          "scenario_id": "session1",        // optional
          "extra": {"transcription": "..."} // optional, passed through
        },
        ...
      ]
    }

Audio paths are resolved relative to the manifest location.  ``extra`` is
never interpreted, only copied into output descriptors.  No audio is
decoded here; the renderer owns decoding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, NamedTuple


class ManifestError(ValueError):
    """Invalid manifest content; message names the offending record."""


@dataclass(frozen=True)
class UtteranceRecord:
    """One clean source utterance and its metadata."""

    utterance_id: str
    speaker_id: str
    audio_path: str
    num_samples: int
    sample_rate: int
    vad_bounds: tuple[int, int] | None = None
    scenario_id: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def validate(self) -> None:
        if self.num_samples <= 0:
            raise ManifestError(
                f"record {self.utterance_id!r}: num_samples must be > 0"
            )
        if self.sample_rate <= 0:
            raise ManifestError(
                f"record {self.utterance_id!r}: sample_rate must be > 0"
            )
        if self.vad_bounds is not None:
            start, end = self.vad_bounds
            if start >= end:
                raise ManifestError(
                    f"record {self.utterance_id!r}: vad start >= end "
                    f"({start} >= {end})"
                )
            if start < 0 or end > self.num_samples:
                raise ManifestError(
                    f"record {self.utterance_id!r}: vad_bounds ({start}, {end}) "
                    f"outside [0, {self.num_samples}]"
                )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "utterance_id": self.utterance_id,
            "speaker_id": self.speaker_id,
            "audio_path": self.audio_path,
            "num_samples": self.num_samples,
        }
        if self.vad_bounds is not None:
            out["vad_bounds"] = list(self.vad_bounds)
        if self.scenario_id is not None:
            out["scenario_id"] = self.scenario_id
        if self.extra:
            out["extra"] = self.extra
        return out


@dataclass(frozen=True)
class CorpusManifest:
    """A frozen utterance list sharing one sample rate."""

    name: str
    sample_rate: int
    utterances: tuple[UtteranceRecord, ...]
    base_dir: Path | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for record in self.utterances:
            record.validate()
            if record.utterance_id in seen:
                raise ManifestError(
                    f"duplicate utterance_id {record.utterance_id!r}"
                )
            seen.add(record.utterance_id)
            if record.sample_rate != self.sample_rate:
                raise ManifestError(
                    f"record {record.utterance_id!r}: sample_rate "
                    f"{record.sample_rate} != manifest rate {self.sample_rate}"
                )

    @property
    def speakers(self) -> list[str]:
        """Speaker ids in order of first appearance."""
        out: list[str] = []
        seen: set[str] = set()
        for record in self.utterances:
            if record.speaker_id not in seen:
                seen.add(record.speaker_id)
                out.append(record.speaker_id)
        return out

    def record(self, utterance_id: str) -> UtteranceRecord:
        try:
            return self._by_id[utterance_id]
        except KeyError:
            raise ManifestError(f"unknown utterance_id {utterance_id!r}") from None

    @property
    def _by_id(self) -> dict[str, UtteranceRecord]:
        cached = getattr(self, "_by_id_cache", None)
        if cached is None:
            cached = {r.utterance_id: r for r in self.utterances}
            object.__setattr__(self, "_by_id_cache", cached)
        return cached

    def resolve_audio_path(self, record: UtteranceRecord) -> Path:
        path = Path(record.audio_path)
        if path.is_absolute() or self.base_dir is None:
            return path
        return self.base_dir / path


class GroupKey(NamedTuple):
    speaker_id: str
    scenario_id: str | None = None


@dataclass(frozen=True)
class SpeakerGroups:
    """Partition of the manifest's utterances for without-replacement draws.

    Groups keep manifest record order, so downstream shuffles are the only
    randomness in utterance selection.
    """

    key_mode: str  # "by-speaker" | "by-speaker-and-scenario"
    groups: dict[GroupKey, tuple[str, ...]]

    def keys_in_order(self) -> list[GroupKey]:
        return list(self.groups.keys())


def load_manifest(path: str | Path) -> CorpusManifest:
    """Load and validate a manifest file.

    Raises :class:`ManifestError` on parse failures, duplicate ids,
    out-of-range vad_bounds or mixed sample rates, naming the offending
    record where applicable.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot parse manifest {path}: {exc}") from exc
    for key in ("name", "sample_rate", "utterances"):
        if key not in data:
            raise ManifestError(f"manifest {path} missing field {key!r}")
    sample_rate = int(data["sample_rate"])
    records = []
    for raw in data["utterances"]:
        try:
            vad = raw.get("vad_bounds")
            records.append(
                UtteranceRecord(
                    utterance_id=str(raw["utterance_id"]),
                    speaker_id=str(raw["speaker_id"]),
                    audio_path=str(raw["audio_path"]),
                    num_samples=int(raw["num_samples"]),
                    sample_rate=int(raw.get("sample_rate", sample_rate)),
                    vad_bounds=(int(vad[0]), int(vad[1])) if vad is not None else None,
                    scenario_id=raw.get("scenario_id"),
                    extra=dict(raw.get("extra", {})),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            ident = raw.get("utterance_id", "<missing id>")
            raise ManifestError(f"record {ident!r}: {exc}") from exc
    manifest = CorpusManifest(
        name=str(data["name"]),
        sample_rate=sample_rate,
        utterances=tuple(records),
        base_dir=path.parent,
    )
    if not manifest.utterances:
        raise ManifestError(f"manifest {path} contains no utterances")
    return manifest


def write_manifest(manifest: CorpusManifest, path: str | Path) -> None:
    """Write a manifest such that ``load_manifest`` round-trips it."""
    path = Path(path)
    data = {
        "name": manifest.name,
        "sample_rate": manifest.sample_rate,
        "utterances": [r.to_dict() for r in manifest.utterances],
    }
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def group_utterances(
    manifest: CorpusManifest, key_mode: str = "by-speaker"
) -> SpeakerGroups:
    """Group utterances by speaker, optionally also by scenario."""
    if key_mode not in ("by-speaker", "by-speaker-and-scenario"):
        raise ValueError(f"unknown key_mode {key_mode!r}")
    groups: dict[GroupKey, list[str]] = {}
    for record in manifest.utterances:
        if key_mode == "by-speaker":
            key = GroupKey(record.speaker_id)
        else:
            key = GroupKey(record.speaker_id, record.scenario_id)
        groups.setdefault(key, []).append(record.utterance_id)
    return SpeakerGroups(
        key_mode=key_mode,
        groups={k: tuple(v) for k, v in groups.items()},
    )


def validate_audio_files(manifest: CorpusManifest) -> list[str]:
    """Check that referenced audio exists and matches ``num_samples``.

    Returns a list of human-readable problems (empty when the corpus is
    consistent).  Decodes headers only through the audio module.
    """
    from . import audio

    problems: list[str] = []
    for record in manifest.utterances:
        path = manifest.resolve_audio_path(record)
        if not path.is_file():
            problems.append(f"{record.utterance_id}: missing file {path}")
            continue
        try:
            waveform, rate = audio.read_audio(path)
        except audio.AudioFileError as exc:
            problems.append(f"{record.utterance_id}: {exc}")
            continue
        num = waveform.shape[-1]
        if rate != manifest.sample_rate:
            problems.append(
                f"{record.utterance_id}: sample rate {rate} != "
                f"{manifest.sample_rate} ({path})"
            )
        if num != record.num_samples:
            problems.append(
                f"{record.utterance_id}: file has {num} samples, manifest "
                f"says {record.num_samples} ({path})"
            )
    return problems


def iter_records(manifest: CorpusManifest) -> Iterable[UtteranceRecord]:
    return iter(manifest.utterances)
