"""Dataset-level orchestration: config -> descriptors.

Parameter sampling never touches audio, so descriptor generation is cheap
and reproducible; rendering happens separately.  The same functions back
the CLI and the programmatic on-the-fly mode:
:func:`sample_descriptor` builds the descriptor of any single
``(dataset_label, example_index)`` pair, which is what a training loop
needs for dynamic mixing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .corpus import CorpusManifest, SpeakerGroups, group_utterances
from .environment import (
    EnvironmentConfig,
    MixtureDescriptor,
    assign_environment,
)
from .patterns import (
    ScenarioConfig,
    sample_classical,
    sample_meeting,
    select_speaker_groups,
)
from .rir import RoomInventory
from .sampling import stage_streams


class ConfigError(ValueError):
    pass


@dataclass
class GeneratorConfig:
    """Everything needed to sample one dataset's descriptors."""

    dataset_label: str
    root_seed: int
    scenario: ScenarioConfig
    environment: EnvironmentConfig = field(default_factory=EnvironmentConfig)
    counts: int = 1
    key_mode: str = "by-speaker"
    manifest: str | None = None
    rir_inventory: str | None = None
    output: str | None = None

    def __post_init__(self) -> None:
        if self.counts < 1:
            raise ConfigError("counts must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        scenario: dict[str, Any] = {
            "mode": self.scenario.mode,
            "num_speakers": (
                list(self.scenario.num_speakers)
                if isinstance(self.scenario.num_speakers, tuple)
                else self.scenario.num_speakers
            ),
            "target_length": self.scenario.target_length,
            "overlap_range": list(self.scenario.overlap_range),
            "silence_range": list(self.scenario.silence_range),
            "silence_probability": self.scenario.silence_probability,
            "minimal_overlap": self.scenario.minimal_overlap,
            "max_concurrent": self.scenario.max_concurrent,
            "activity_targets": (
                list(self.scenario.activity_targets)
                if self.scenario.activity_targets is not None
                else None
            ),
            "partial_overlap_ratio": list(self.scenario.partial_overlap_ratio),
            "truncate_to_min": self.scenario.truncate_to_min,
        }
        environment: dict[str, Any] = {
            "reverb": self.environment.reverb,
            "gain_range_db": list(self.environment.gain_range_db),
            "snr_range_db": (
                list(self.environment.snr_range_db)
                if self.environment.snr_range_db is not None
                else None
            ),
            "noise_kind": self.environment.noise_kind,
            "sro_ppm_range": (
                list(self.environment.sro_ppm_range)
                if self.environment.sro_ppm_range is not None
                else None
            ),
            "positions_per_room": self.environment.positions_per_room,
            "resample_position_per_utterance":
                self.environment.resample_position_per_utterance,
        }
        return {
            "dataset_label": self.dataset_label,
            "root_seed": self.root_seed,
            "counts": self.counts,
            "key_mode": self.key_mode,
            "scenario": scenario,
            "environment": environment,
            "manifest": self.manifest,
            "rir_inventory": self.rir_inventory,
            "output": self.output,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GeneratorConfig":
        try:
            raw_scenario = dict(data["scenario"])
        except KeyError:
            raise ConfigError("config missing field 'scenario'") from None
        if isinstance(raw_scenario.get("num_speakers"), list):
            raw_scenario["num_speakers"] = tuple(raw_scenario["num_speakers"])
        for key in ("overlap_range", "silence_range", "partial_overlap_ratio",
                    "activity_targets"):
            if isinstance(raw_scenario.get(key), list):
                raw_scenario[key] = tuple(raw_scenario[key])
        raw_scenario = {k: v for k, v in raw_scenario.items() if v is not None}
        try:
            scenario = ScenarioConfig(**raw_scenario)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"scenario: {exc}") from exc

        raw_env = dict(data.get("environment", {}))
        for key in ("gain_range_db", "snr_range_db", "sro_ppm_range"):
            if isinstance(raw_env.get(key), list):
                raw_env[key] = tuple(raw_env[key])
        try:
            environment = EnvironmentConfig(**raw_env)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"environment: {exc}") from exc

        for key in ("dataset_label", "root_seed"):
            if key not in data:
                raise ConfigError(f"config missing field {key!r}")
        return cls(
            dataset_label=str(data["dataset_label"]),
            root_seed=int(data["root_seed"]),
            scenario=scenario,
            environment=environment,
            counts=int(data.get("counts", 1)),
            key_mode=data.get("key_mode", "by-speaker"),
            manifest=data.get("manifest"),
            rir_inventory=data.get("rir_inventory"),
            output=data.get("output"),
        )


def load_config(path: str | Path) -> GeneratorConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return GeneratorConfig.from_dict(data)


def example_plan(config: GeneratorConfig) -> list[tuple[int, int | None]]:
    """(example_index, pinned speaker count) pairs for one dataset.

    For meeting mode with a speaker-count range, ``counts`` meetings are
    enumerated per value of the range (the count is pinned per example);
    otherwise ``counts`` is the total number of examples.
    """
    if config.scenario.mode == "meeting" and isinstance(
        config.scenario.num_speakers, tuple
    ):
        lo, hi = config.scenario.num_speakers
        plan = []
        index = 0
        for speakers in range(lo, hi + 1):
            for _ in range(config.counts):
                plan.append((index, speakers))
                index += 1
        return plan
    return [(index, None) for index in range(config.counts)]


def sample_descriptor(
    config: GeneratorConfig,
    manifest: CorpusManifest,
    example_index: int,
    groups: SpeakerGroups | None = None,
    inventory: RoomInventory | None = None,
    num_speakers: int | None = None,
) -> MixtureDescriptor:
    """Sample the descriptor of one example, audio-free.

    Deterministic in (root_seed, dataset_label, example_index) and the
    configs; suitable for on-the-fly generation inside a training loop.
    """
    if groups is None:
        groups = group_utterances(manifest, config.key_mode)
    streams = stage_streams(config.root_seed, config.dataset_label, example_index)
    scenario = config.scenario

    if scenario.mode == "meeting":
        timeline = sample_meeting(
            scenario, manifest, groups, streams, num_speakers=num_speakers
        )
    else:
        utt_stream = streams["utterance"]
        if num_speakers is None:
            num_speakers = scenario.resolve_num_speakers(utt_stream)
        chosen = select_speaker_groups(groups, num_speakers, utt_stream)
        selected = []
        for key in chosen:
            ids = groups.groups[key]
            selected.append(
                manifest.record(ids[utt_stream.uniform_int(0, len(ids) - 1)])
            )
        timeline = sample_classical(scenario, selected, streams["gap"])

    return assign_environment(
        timeline,
        config.environment,
        inventory,
        streams,
        dataset_label=config.dataset_label,
        example_index=example_index,
        root_seed=config.root_seed,
        manifest=manifest,
    )


def generate_descriptors(
    config: GeneratorConfig,
    manifest: CorpusManifest,
    inventory: RoomInventory | None = None,
) -> list[MixtureDescriptor]:
    """Sample the full dataset described by ``config``."""
    groups = group_utterances(manifest, config.key_mode)
    return [
        sample_descriptor(
            config, manifest, index,
            groups=groups, inventory=inventory, num_speakers=speakers,
        )
        for index, speakers in example_plan(config)
    ]
