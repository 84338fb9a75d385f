"""Speaking-pattern sampling.

Classical single-utterance mixtures (full overlap, padded shift, partial
overlap) and meeting timelines.  Meetings are generated sequentially:
pick the next speaker by normalized inverse activity (or by deficit to a
desired activity), pick that speaker's next utterance without replacement,
then place it after a sampled silence or with a sampled overlap, never
exceeding the configured number of concurrent speakers and never letting
a speaker overlap themselves.

All durations are integer sample counts; configured second-valued ranges
are converted at the corpus sample rate.  Every random decision comes from
an explicit stage stream, so utterance order is invariant under changes to
overlap parameters and vice versa.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .corpus import CorpusManifest, GroupKey, SpeakerGroups, UtteranceRecord
from .sampling import RandomStream

MODES = ("full_overlap", "padded_shift", "partial_overlap", "meeting")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of one speaking-pattern scenario.

    Ranges are in seconds; ``overlap_range`` and ``silence_range`` bound the
    absolute gap between two consecutive utterances (negative gap =
    overlap).  ``activity_targets``, when given, are desired per-speaker
    activity shares in speaker-selection order and must sum to 1.
    """

    mode: str
    num_speakers: int | tuple[int, int] = 2
    target_length: float | None = None
    overlap_range: tuple[float, float] = (0.0, 0.0)
    silence_range: tuple[float, float] = (0.0, 0.0)
    silence_probability: float = 0.0
    minimal_overlap: float = 0.0
    max_concurrent: int = 2
    activity_targets: tuple[float, ...] | None = None
    partial_overlap_ratio: tuple[float, float] = (0.25, 0.75)
    truncate_to_min: bool = False

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ScenarioError(f"unknown mode {self.mode!r}; expected {MODES}")
        ov_lo, ov_hi = self.overlap_range
        sil_lo, sil_hi = self.silence_range
        if not 0 <= ov_lo <= ov_hi:
            raise ScenarioError(f"invalid overlap_range {self.overlap_range}")
        if not 0 <= sil_lo <= sil_hi:
            raise ScenarioError(f"invalid silence_range {self.silence_range}")
        if self.minimal_overlap > ov_hi:
            raise ScenarioError(
                f"minimal_overlap {self.minimal_overlap} exceeds overlap max {ov_hi}"
            )
        if not 0.0 <= self.silence_probability <= 1.0:
            raise ScenarioError(
                f"silence_probability {self.silence_probability} outside [0, 1]"
            )
        if self.max_concurrent < 1:
            raise ScenarioError("max_concurrent must be >= 1")
        if isinstance(self.num_speakers, tuple):
            lo, hi = self.num_speakers
            if not 1 <= lo <= hi:
                raise ScenarioError(f"invalid num_speakers range {self.num_speakers}")
        elif self.num_speakers < 1:
            raise ScenarioError("num_speakers must be >= 1")
        if self.mode == "meeting" and (
            self.target_length is None or self.target_length <= 0
        ):
            raise ScenarioError("meeting mode requires a positive target_length")
        if self.activity_targets is not None:
            if any(t < 0 for t in self.activity_targets):
                raise ScenarioError("activity_targets must be >= 0")
            if abs(sum(self.activity_targets) - 1.0) > 1e-6:
                raise ScenarioError("activity_targets must sum to 1")
        r_lo, r_hi = self.partial_overlap_ratio
        if not 0.0 <= r_lo <= r_hi <= 1.0:
            raise ScenarioError(
                f"invalid partial_overlap_ratio {self.partial_overlap_ratio}"
            )

    def resolve_num_speakers(self, stream: RandomStream) -> int:
        """Resolve a speaker-count range to a concrete count (uniform)."""
        if isinstance(self.num_speakers, tuple):
            lo, hi = self.num_speakers
            return stream.uniform_int(lo, hi)
        return self.num_speakers


@dataclass(frozen=True)
class TimelineEntry:
    """One placed utterance.

    ``gap`` is the gap drawn at placement time in samples relative to the
    end of the previously placed utterance (negative = overlap); ``None``
    for the first entry and for classical modes.
    """

    speaker_id: str
    utterance_id: str
    offset: int
    duration: int
    gap: int | None = None

    @property
    def end(self) -> int:
        return self.offset + self.duration


@dataclass
class Timeline:
    """Ordered utterance placements of one mixture."""

    entries: list[TimelineEntry]
    sample_rate: int
    num_speakers: int
    truncation: int | None = None  # full-overlap "min"-style crop length

    @property
    def total_samples(self) -> int:
        return max((e.end for e in self.entries), default=0)

    def speakers_in_order(self) -> list[str]:
        out: list[str] = []
        seen: set[str] = set()
        for entry in self.entries:
            if entry.speaker_id not in seen:
                seen.add(entry.speaker_id)
                out.append(entry.speaker_id)
        return out


@dataclass
class SpeakerState:
    """Mutable per-speaker bookkeeping during meeting generation."""

    speaker_id: str
    accumulated_activity: int = 0
    remaining_shuffle: list[str] = field(default_factory=list)
    last_end: int = 0


def turn_probabilities(
    shares: Sequence[float], targets: Sequence[float] | None = None
) -> list[float]:
    """Next-speaker probabilities from current activity shares.

    Without targets the weight of a speaker is the inverse of its activity
    share; speakers with zero share take the limit and split the whole mass
    uniformly among themselves.  With targets the weight is the clipped
    deficit max(target - share, 0); if every deficit is zero the inverse
    -activity rule is used as fallback.
    """
    if any(s < 0 for s in shares):
        raise ValueError("activity shares must be >= 0")
    n = len(shares)
    if n == 0:
        raise ValueError("shares must be non-empty")
    if targets is not None:
        if len(targets) != n:
            raise ValueError("targets length must match shares")
        if abs(sum(targets) - 1.0) > 1e-6:
            raise ValueError("targets must sum to 1")
        deficits = [max(t - s, 0.0) for t, s in zip(targets, shares)]
        total = sum(deficits)
        if total > 0.0:
            return [d / total for d in deficits]
        # every speaker is at or above its target: fall back to
        # inverse-activity weighting
    zeros = [i for i, s in enumerate(shares) if s == 0.0]
    if zeros:
        p = [0.0] * n
        for i in zeros:
            p[i] = 1.0 / len(zeros)
        return p
    weights = [1.0 / s for s in shares]
    total = sum(weights)
    return [w / total for w in weights]


def next_utterance(
    state: SpeakerState, group: Sequence[str], stream: RandomStream
) -> str:
    """Next utterance id, reusing ids only after the group is exhausted."""
    if not group:
        raise ValueError(f"empty utterance group for {state.speaker_id!r}")
    if not state.remaining_shuffle:
        order = stream.permutation(len(group))
        state.remaining_shuffle = [group[i] for i in order]
    return state.remaining_shuffle.pop(0)


# --- gap sampling -----------------------------------------------------------


@dataclass(frozen=True)
class GapDraw:
    offset: int
    gap: int | None  # drawn gap in samples; negative = overlap
    pushed: bool  # placement moved off the drawn position for feasibility


def _merge_intervals(intervals: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Merge overlapping or adjacent half-open integer intervals."""
    out: list[tuple[int, int]] = []
    for start, end in sorted(intervals):
        if end <= start:
            continue
        if out and start <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], end))
        else:
            out.append((start, end))
    return out


def _blocked_regions(
    entries: Sequence[TimelineEntry], speaker_id: str, max_concurrent: int
) -> list[tuple[int, int]]:
    """Time regions a new utterance of ``speaker_id`` must not touch.

    Union of (a) regions where the existing concurrency already equals
    max_concurrent and (b) the speaker's own utterances.
    """
    blocked = [(e.offset, e.end) for e in entries if e.speaker_id == speaker_id]
    events: list[tuple[int, int]] = []
    for e in entries:
        events.append((e.offset, 1))
        events.append((e.end, -1))
    events.sort()
    count = 0
    open_start: int | None = None
    for time, delta in events:
        count += delta
        if count >= max_concurrent and open_start is None:
            open_start = time
        elif count < max_concurrent and open_start is not None:
            blocked.append((open_start, time))
            open_start = None
    return _merge_intervals(blocked)


def _blocked_starts(
    blocked: list[tuple[int, int]], duration: int
) -> list[tuple[int, int]]:
    """Start positions whose window [s, s+duration) would touch a block."""
    return _merge_intervals(
        [(b0 - duration + 1, b1) for b0, b1 in blocked]
    )


def _first_feasible(blocked_starts: list[tuple[int, int]], start: int) -> int:
    """Smallest feasible start >= ``start``."""
    for b0, b1 in blocked_starts:
        if start < b0:
            break
        if start < b1:
            start = b1
    return start


def _max_feasible_overlap(
    blocked_starts: list[tuple[int, int]], prev_end: int, overlap_cap: int
) -> int:
    """Largest L <= overlap_cap with every overlap in [0, L] feasible.

    Returns -1 when even overlap 0 (start at prev_end) is infeasible.
    Taking the feasible prefix, rather than the largest individually
    feasible overlap, keeps the subsequent uniform draw inside the
    feasible set even when feasibility is not monotone in the overlap.
    """
    nearest_block = None
    for b0, b1 in blocked_starts:
        if b0 > prev_end:
            break
        candidate = min(b1 - 1, prev_end)
        if candidate >= prev_end - overlap_cap:
            nearest_block = candidate if nearest_block is None else max(
                nearest_block, candidate
            )
    if nearest_block is None:
        return overlap_cap
    if nearest_block >= prev_end:
        return -1
    return prev_end - nearest_block - 1


def _seconds_to_samples(value: float, sample_rate: int) -> int:
    return int(round(value * sample_rate))


def sample_gap(
    config: ScenarioConfig,
    sample_rate: int,
    timeline: Timeline,
    speaker_id: str,
    next_duration: int,
    stream: RandomStream,
) -> GapDraw:
    """Sample the start offset of the next utterance.

    With probability ``silence_probability`` a silence in
    ``silence_range`` is placed after the end of the most recently placed
    utterance; otherwise an overlap is drawn uniformly between
    max(overlap min, minimal_overlap) and the largest feasible overlap.
    Feasibility accounts for the concurrency cap, the no-self-overlap rule
    and placement order (offsets never decrease).  An infeasible overlap
    falls back to a silence draw; a drawn position that is itself
    infeasible (possible for silences landing inside a still-active
    region of the same speaker or a fully occupied region) is pushed to
    the next feasible start.
    """
    if not timeline.entries:
        return GapDraw(offset=0, gap=None, pushed=False)
    prev = timeline.entries[-1]
    prev_end = prev.end
    blocked = _blocked_regions(timeline.entries, speaker_id, config.max_concurrent)
    starts_blocked = _blocked_starts(blocked, next_duration)

    sil_lo = _seconds_to_samples(config.silence_range[0], sample_rate)
    sil_hi = _seconds_to_samples(config.silence_range[1], sample_rate)
    ov_hi = _seconds_to_samples(config.overlap_range[1], sample_rate)
    ov_lo = _seconds_to_samples(
        max(config.overlap_range[0], config.minimal_overlap), sample_rate
    )

    gap: int
    if stream.uniform(0.0, 1.0) < config.silence_probability:
        gap = int(round(stream.uniform(float(sil_lo), float(sil_hi))))
    else:
        # placement order caps the overlap at the previous entry's duration
        overlap_cap = min(ov_hi, prev_end - prev.offset)
        feasible_max = _max_feasible_overlap(starts_blocked, prev_end, overlap_cap)
        if feasible_max < ov_lo:
            gap = int(round(stream.uniform(float(sil_lo), float(sil_hi))))
        else:
            overlap = int(round(stream.uniform(float(ov_lo), float(feasible_max))))
            gap = -overlap
    drawn_offset = max(prev_end + gap, 0)
    offset = _first_feasible(starts_blocked, drawn_offset)
    return GapDraw(offset=offset, gap=gap, pushed=offset != drawn_offset)


# --- classical mixtures -----------------------------------------------------


def sample_classical(
    config: ScenarioConfig,
    selected: Sequence[UtteranceRecord],
    stream: RandomStream,
) -> Timeline:
    """Place one pre-selected utterance per speaker.

    full_overlap: all offsets 0.  padded_shift: each utterance shifted
    uniformly inside the span of the longest one.  partial_overlap:
    sequential placement where consecutive utterances overlap by a sampled
    fraction of the shorter one.
    """
    if config.mode == "meeting":
        raise ScenarioError("sample_classical cannot handle meeting mode")
    if not selected:
        raise ScenarioError("no utterances selected")
    sample_rate = selected[0].sample_rate
    durations = [r.num_samples for r in selected]
    entries: list[TimelineEntry] = []

    if config.mode == "full_overlap":
        for record in selected:
            entries.append(
                TimelineEntry(record.speaker_id, record.utterance_id, 0,
                              record.num_samples)
            )
        truncation = min(durations) if config.truncate_to_min else None
        return Timeline(entries, sample_rate, len(selected), truncation)

    if config.mode == "padded_shift":
        longest = max(durations)
        for record in selected:
            offset = stream.uniform_int(0, longest - record.num_samples)
            entries.append(
                TimelineEntry(record.speaker_id, record.utterance_id, offset,
                              record.num_samples)
            )
        return Timeline(entries, sample_rate, len(selected))

    # partial_overlap: each consecutive pair overlaps by r * min(durations)
    offset = 0
    for i, record in enumerate(selected):
        if i > 0:
            prev = selected[i - 1]
            ratio = stream.uniform(*config.partial_overlap_ratio)
            overlap = int(round(ratio * min(prev.num_samples, record.num_samples)))
            offset = entries[-1].offset + prev.num_samples - overlap
        entries.append(
            TimelineEntry(record.speaker_id, record.utterance_id, offset,
                          record.num_samples)
        )
    return Timeline(entries, sample_rate, len(selected))


# --- meetings ---------------------------------------------------------------


def select_speaker_groups(
    groups: SpeakerGroups, num_speakers: int, stream: RandomStream
) -> list[GroupKey]:
    """Draw groups for ``num_speakers`` distinct speakers, uniformly."""
    keys = groups.keys_in_order()
    order = stream.permutation(len(keys))
    chosen: list[GroupKey] = []
    seen_speakers: set[str] = set()
    for index in order:
        key = keys[index]
        if key.speaker_id in seen_speakers:
            continue
        seen_speakers.add(key.speaker_id)
        chosen.append(key)
        if len(chosen) == num_speakers:
            return chosen
    raise ScenarioError(
        f"requested {num_speakers} speakers but only {len(chosen)} "
        "distinct speakers available"
    )


def sample_meeting(
    config: ScenarioConfig,
    manifest: CorpusManifest,
    groups: SpeakerGroups,
    streams: Mapping[str, RandomStream],
    num_speakers: int | None = None,
) -> Timeline:
    """Generate a meeting timeline sequentially until ``target_length``.

    ``streams`` must provide the "utterance", "turn" and "gap" stage
    streams.  ``num_speakers`` overrides the config (used when a dataset
    enumerates meetings per speaker count); otherwise ranges are resolved
    with a uniform draw on the utterance stream.
    """
    if config.mode != "meeting":
        raise ScenarioError("sample_meeting requires meeting mode")
    sample_rate = manifest.sample_rate
    target = _seconds_to_samples(float(config.target_length), sample_rate)
    utt_stream = streams["utterance"]
    turn_stream = streams["turn"]
    gap_stream = streams["gap"]

    if num_speakers is None:
        num_speakers = config.resolve_num_speakers(utt_stream)
    chosen = select_speaker_groups(groups, num_speakers, utt_stream)
    states = [SpeakerState(key.speaker_id) for key in chosen]
    group_lists = [groups.groups[key] for key in chosen]

    timeline = Timeline([], sample_rate, num_speakers)
    total_activity = 0
    while True:
        shares = [
            s.accumulated_activity / total_activity if total_activity else 0.0
            for s in states
        ]
        probs = turn_probabilities(shares, config.activity_targets)
        turn = turn_stream.weighted_choice(probs)
        state = states[turn]
        utterance_id = next_utterance(state, group_lists[turn], utt_stream)
        duration = manifest.record(utterance_id).num_samples
        draw = sample_gap(
            config, sample_rate, timeline, state.speaker_id, duration, gap_stream
        )
        timeline.entries.append(
            TimelineEntry(
                speaker_id=state.speaker_id,
                utterance_id=utterance_id,
                offset=draw.offset,
                duration=duration,
                gap=draw.gap,
            )
        )
        state.accumulated_activity += duration
        state.last_end = max(state.last_end, draw.offset + duration)
        total_activity += duration
        if draw.offset + duration >= target:
            return timeline
