"""Figure rendering for the stats report path.

Per-meeting speaker-activity timelines and a dataset-level overlap
histogram, written as PNG files next to the JSON/CSV report output.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .analysis import ActivitySegments


def save_activity_figure(
    segments: ActivitySegments,
    sample_rate: int,
    path: str | Path,
    title: str = "",
) -> Path:
    """Broken-bar activity plot, one lane per speaker."""
    path = Path(path)
    speakers = sorted(segments.segments)
    fig, ax = plt.subplots(figsize=(10, 0.5 * max(len(speakers), 2) + 1))
    for lane, speaker in enumerate(speakers):
        spans = [
            (start / sample_rate, (end - start) / sample_rate)
            for start, end in segments.segments[speaker]
        ]
        ax.broken_barh(spans, (lane + 0.6, 0.8))
    ax.set_yticks([lane + 1 for lane in range(len(speakers))])
    ax.set_yticklabels(speakers)
    ax.set_xlabel("time [s]")
    ax.set_xlim(0, segments.total_length / sample_rate)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_overlap_histogram(
    ov_rel_values: Sequence[float],
    path: str | Path,
    label: str = "overlap",
) -> Path:
    """Histogram of per-meeting overlap fractions."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist([100.0 * v for v in ov_rel_values], bins=20)
    ax.set_xlabel(f"{label} per meeting [%]")
    ax.set_ylabel("meetings")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
