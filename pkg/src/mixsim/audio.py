"""WAV (RIFF) reading and writing.

Supported encodings: PCM 16-bit and IEEE float 32-bit, mono or
multi-channel.  PCM16 samples map to floats in [-1, 1) by dividing by
32768; writing PCM16 is the inverse with round-half-away-from-zero and
clipping.  Float32 data round-trips losslessly.

Multi-channel arrays use (channels, samples) orientation in memory and the
interleaved WAV layout on disk.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.io import wavfile

PCM16_SCALE = 32768.0


class AudioFileError(ValueError):
    """Unreadable or unsupported audio file; message names the path."""


def read_audio(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a WAV file.

    Returns ``(waveform, sample_rate)`` with waveform shaped ``(samples,)``
    for mono or ``(channels, samples)`` otherwise.  PCM16 content is scaled
    to float64 in [-1, 1); float32 content is returned as float32.
    """
    path = Path(path)
    try:
        rate, data = wavfile.read(str(path))
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise AudioFileError(f"cannot read WAV file {path}: {exc}") from exc
    if data.dtype == np.int16:
        waveform = data.astype(np.float64) / PCM16_SCALE
    elif data.dtype == np.float32:
        waveform = data
    else:
        raise AudioFileError(
            f"unsupported WAV encoding {data.dtype} in {path}; "
            "expected PCM16 or float32"
        )
    if waveform.ndim == 2:
        waveform = waveform.T
    return waveform, int(rate)


def write_audio(
    path: str | Path,
    waveform: np.ndarray,
    sample_rate: int,
    encoding: str = "float32",
) -> None:
    """Write a WAV file in the given encoding ("float32" or "pcm16").

    ``waveform`` is ``(samples,)`` or ``(channels, samples)``.
    """
    path = Path(path)
    data = np.asarray(waveform)
    if data.ndim == 2:
        data = data.T
    elif data.ndim != 1:
        raise ValueError(f"waveform must be 1-D or 2-D, got shape {data.shape}")
    if encoding == "float32":
        out = data.astype(np.float32)
    elif encoding == "pcm16":
        scaled = np.asarray(data, dtype=np.float64) * PCM16_SCALE
        # round half away from zero, then clip to the int16 range
        rounded = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
        out = np.clip(rounded, -32768, 32767).astype(np.int16)
    else:
        raise ValueError(f"unsupported encoding {encoding!r}")
    wavfile.write(str(path), int(sample_rate), out)
