"""Activity, overlap and silence measurement; RTTM export.

Overlap can be measured on utterance (recording) boundaries or on VAD
boundaries; source recordings usually start and end with some silence, so
the VAD-based overlap of a meeting is smaller.  Meeting length for
normalization defaults to the end of the last recording-mode activity so
both modes share a denominator and the inequality holds per meeting.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import CorpusManifest
from .environment import MixtureDescriptor

BOUNDARY_MODES = ("recording", "vad")


class AnalysisError(ValueError):
    pass


@dataclass
class ActivitySegments:
    """Per-speaker active intervals of one meeting (half-open, samples)."""

    segments: dict[str, list[tuple[int, int]]]
    total_length: int
    boundary_mode: str
    num_utterances: int | None = None


@dataclass
class MeetingStats:
    """Overlap/silence fractions and per-speaker shares of one meeting."""

    ov_rel: float
    sil_rel: float
    single_rel: float
    speaker_shares: dict[str, float]
    max_concurrency: int
    num_utterances: int | None
    total_length: int


def _merge(intervals: list[tuple[int, int]]) -> list[tuple[int, int]]:
    out: list[tuple[int, int]] = []
    for start, end in sorted(intervals):
        if end <= start:
            continue
        if out and start <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], end))
        else:
            out.append((start, end))
    return out


def activity_from_descriptor(
    descriptor: MixtureDescriptor,
    manifest: CorpusManifest | None = None,
    boundary_mode: str = "recording",
    *,
    energy_fallback: bool = False,
) -> ActivitySegments:
    """Per-speaker activity intervals of one descriptor.

    ``vad`` mode shrinks each entry to its record's vad_bounds and needs a
    manifest.  Records without bounds raise an error naming them, unless
    ``energy_fallback`` lets :func:`energy_vad` estimate bounds from audio.
    """
    if boundary_mode not in BOUNDARY_MODES:
        raise AnalysisError(f"unknown boundary mode {boundary_mode!r}")
    total_length = descriptor.total_samples

    per_speaker: dict[str, list[tuple[int, int]]] = {}
    missing: list[str] = []
    for entry in descriptor.entries:
        start, end = entry.offset, entry.end
        if boundary_mode == "vad":
            if manifest is None:
                raise AnalysisError("vad boundary mode requires a manifest")
            record = manifest.record(entry.utterance_id)
            bounds = record.vad_bounds
            if bounds is None and energy_fallback:
                from . import audio

                waveform, _ = audio.read_audio(manifest.resolve_audio_path(record))
                bounds = energy_vad(np.asarray(waveform, dtype=np.float64),
                                    manifest.sample_rate)
            if bounds is None:
                missing.append(entry.utterance_id)
                continue
            start, end = entry.offset + bounds[0], entry.offset + bounds[1]
        per_speaker.setdefault(entry.speaker_id, []).append(
            (start, min(end, total_length))
        )
    if missing:
        raise AnalysisError(
            "vad boundary mode needs vad_bounds (or energy_fallback) for: "
            + ", ".join(sorted(set(missing)))
        )
    return ActivitySegments(
        segments={spk: _merge(iv) for spk, iv in per_speaker.items()},
        total_length=total_length,
        boundary_mode=boundary_mode,
        num_utterances=len(descriptor.entries),
    )


def meeting_stats(
    segments: ActivitySegments, total_length: int | None = None
) -> MeetingStats:
    """Exact overlap/silence durations via a boundary-event sweep."""
    if not segments.segments:
        raise AnalysisError("no activity segments")
    length = total_length if total_length is not None else segments.total_length
    events: list[tuple[int, int]] = []
    speech_per_speaker: dict[str, int] = {}
    for speaker, intervals in segments.segments.items():
        speech_per_speaker[speaker] = sum(e - s for s, e in intervals)
        for start, end in intervals:
            events.append((start, 1))
            events.append((end, -1))
    events.sort()

    dur_silent = dur_single = dur_overlap = 0
    count = 0
    max_concurrency = 0
    previous = 0
    for time, delta in events:
        time = min(time, length)
        span = max(time - previous, 0)
        if count == 0:
            dur_silent += span
        elif count == 1:
            dur_single += span
        else:
            dur_overlap += span
        count += delta
        max_concurrency = max(max_concurrency, count)
        previous = max(previous, time)
    dur_silent += max(length - previous, 0)

    total_speech = sum(speech_per_speaker.values())
    shares = {
        spk: (dur / total_speech if total_speech else 0.0)
        for spk, dur in speech_per_speaker.items()
    }
    return MeetingStats(
        ov_rel=dur_overlap / length if length else 0.0,
        sil_rel=dur_silent / length if length else 0.0,
        single_rel=dur_single / length if length else 0.0,
        speaker_shares=shares,
        max_concurrency=max_concurrency,
        num_utterances=segments.num_utterances,
        total_length=length,
    )


def energy_vad(
    signal: np.ndarray,
    sample_rate: int,
    threshold_db_below_peak: float = 40.0,
    window_ms: float = 25.0,
) -> tuple[int, int]:
    """Speech bounds from framewise RMS energy.

    Returns (start_sample, end_sample) covering the first through last
    window whose RMS is within ``threshold_db_below_peak`` of the peak
    window RMS.  Raises on all-zero input.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if signal.size == 0 or not np.any(signal):
        raise AnalysisError("no activity in signal")
    window = max(int(round(window_ms * 1e-3 * sample_rate)), 1)
    num_frames = (len(signal) + window - 1) // window
    padded = np.zeros(num_frames * window, dtype=np.float64)
    padded[: len(signal)] = signal
    frames = padded.reshape(num_frames, window)
    rms = np.sqrt(np.mean(frames**2, axis=1))
    peak = rms.max()
    threshold = peak * 10.0 ** (-threshold_db_below_peak / 20.0)
    active = np.flatnonzero(rms >= threshold)
    start = int(active[0]) * window
    end = min((int(active[-1]) + 1) * window, len(signal))
    return start, end


def export_rttm(
    segments: ActivitySegments, sample_rate: int, recording_id: str
) -> str:
    """Standard RTTM SPEAKER lines, one per interval, seconds to 3 decimals."""
    lines = []
    rows: list[tuple[float, float, str]] = []
    for speaker, intervals in segments.segments.items():
        for start, end in intervals:
            rows.append((start / sample_rate, (end - start) / sample_rate, speaker))
    rows.sort()
    for onset, duration, speaker in rows:
        lines.append(
            f"SPEAKER {recording_id} 1 {onset:.3f} {duration:.3f} "
            f"<NA> <NA> {speaker} <NA> <NA>"
        )
    return "\n".join(lines) + ("\n" if lines else "")


def parse_rttm(text: str) -> dict[str, dict[str, list[tuple[float, float]]]]:
    """Parse RTTM SPEAKER lines into {recording: {speaker: [(onset, end)]}}."""
    out: dict[str, dict[str, list[tuple[float, float]]]] = {}
    for line in text.splitlines():
        parts = line.split()
        if not parts or parts[0] != "SPEAKER":
            continue
        recording, onset, duration, speaker = (
            parts[1], float(parts[3]), float(parts[4]), parts[7],
        )
        out.setdefault(recording, {}).setdefault(speaker, []).append(
            (onset, onset + duration)
        )
    return out


def write_rttm_files(
    descriptors: list[MixtureDescriptor],
    manifest: CorpusManifest | None,
    boundary_mode: str,
    directory: str | Path,
) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for descriptor in descriptors:
        segments = activity_from_descriptor(descriptor, manifest, boundary_mode)
        path = directory / f"{descriptor.mixture_id}.rttm"
        path.write_text(
            export_rttm(segments, descriptor.sample_rate, descriptor.mixture_id),
            encoding="utf-8",
        )
        written.append(path)
    return written
