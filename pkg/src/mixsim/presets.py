"""Shipped dataset presets and SMS-WSJ-style defaults.

One JSON file per preset under ``presets_data/``; load with
:func:`generator_preset`.  The meeting presets (``no_ov``, ``medium_ov``,
``high_ov``) emit 16 meetings of 120 s per speaker count 5 to 8.  The
classical presets (``wsj0_2mix_style``, ``sms_wsj_style``,
``partial_ov``) cover the common single-utterance scenarios.

Numeric environment and room defaults (gain +-5 dB, SNR 20-30 dB white
noise, rooms around 8 x 6 x 3 m with T60 0.2-0.5 s and a 6-mic circular
array of 10 cm radius, 8 speaker positions per room) are SMS-WSJ-style
conventions, centralized here so they can be corrected in one place.

The meeting presets ship anechoic; passing a RIR inventory at sampling
time switches them to simulated reverberation (room and position ids must
be drawn from a concrete inventory).
"""

from __future__ import annotations

import json
from importlib import resources
from typing import Any

from .rir import RirGeneratorConfig

GENERATOR_PRESETS = (
    "no_ov",
    "medium_ov",
    "high_ov",
    "wsj0_2mix_style",
    "sms_wsj_style",
    "partial_ov",
)

#: aliases for the WSJ-meeting test scenarios
PRESET_ALIASES = {
    "wsj_meetings_no_ov": "no_ov",
    "wsj_meetings_medium": "medium_ov",
    "wsj_meetings_high": "high_ov",
}

RIR_PRESETS = ("sms_wsj_rooms",)


def _load_json(name: str) -> dict[str, Any]:
    path = resources.files("mixsim").joinpath(f"presets_data/{name}.json")
    return json.loads(path.read_text(encoding="utf-8"))


def generator_preset_dict(name: str) -> dict[str, Any]:
    """Raw preset dictionary (GeneratorConfig shape, no paths)."""
    name = PRESET_ALIASES.get(name, name)
    if name not in GENERATOR_PRESETS:
        raise KeyError(
            f"unknown preset {name!r}; available: "
            f"{GENERATOR_PRESETS + tuple(PRESET_ALIASES)}"
        )
    return _load_json(name)


def generator_preset(name: str) -> "GeneratorConfig":
    from .pipeline import GeneratorConfig

    return GeneratorConfig.from_dict(generator_preset_dict(name))


def rir_preset(name: str = "sms_wsj_rooms") -> RirGeneratorConfig:
    if name not in RIR_PRESETS:
        raise KeyError(f"unknown RIR preset {name!r}; available: {RIR_PRESETS}")
    return RirGeneratorConfig.from_dict(_load_json(name))
