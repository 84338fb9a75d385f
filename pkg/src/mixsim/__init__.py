"""mixsim: deterministic multi-speaker speech mixture and meeting simulation.

Sampling (audio-free descriptors) and rendering (descriptors to
waveforms) are strictly separated; every random decision is drawn from a
seeded, stage-specific counter-based stream, so datasets are reproducible
bit for bit and individual simulation stages can be varied independently.
"""

from .analysis import (
    ActivitySegments,
    MeetingStats,
    activity_from_descriptor,
    energy_vad,
    export_rttm,
    meeting_stats,
    parse_rttm,
)
from .corpus import (
    CorpusManifest,
    ManifestError,
    SpeakerGroups,
    UtteranceRecord,
    group_utterances,
    load_manifest,
    write_manifest,
)
from .environment import (
    DescriptorError,
    EnvironmentConfig,
    MixtureDescriptor,
    NoiseParams,
    RirRef,
    assign_environment,
    read_descriptors,
    sample_noise_params,
    sample_sro,
    write_descriptors,
)
from .patterns import (
    ScenarioConfig,
    SpeakerState,
    Timeline,
    TimelineEntry,
    next_utterance,
    sample_classical,
    sample_gap,
    sample_meeting,
    turn_probabilities,
)
from .pipeline import (
    GeneratorConfig,
    generate_descriptors,
    load_config,
    sample_descriptor,
)
from .render import (
    RenderedMixture,
    apply_sro,
    render_dataset,
    render_mixture,
    synthesize_noise,
)
from .rir import (
    RirGeneratorConfig,
    RoomInventory,
    RoomSetup,
    build_inventory,
    generate_rir,
    reflection_from_t60,
)
from .sampling import RandomStream, derive_stream_seed, stage_streams

__version__ = "0.1.0"

__all__ = [
    "ActivitySegments",
    "CorpusManifest",
    "DescriptorError",
    "EnvironmentConfig",
    "GeneratorConfig",
    "ManifestError",
    "MeetingStats",
    "MixtureDescriptor",
    "NoiseParams",
    "RandomStream",
    "RenderedMixture",
    "RirGeneratorConfig",
    "RirRef",
    "RoomInventory",
    "RoomSetup",
    "ScenarioConfig",
    "SpeakerGroups",
    "SpeakerState",
    "Timeline",
    "TimelineEntry",
    "UtteranceRecord",
    "activity_from_descriptor",
    "apply_sro",
    "assign_environment",
    "build_inventory",
    "derive_stream_seed",
    "energy_vad",
    "export_rttm",
    "generate_descriptors",
    "generate_rir",
    "group_utterances",
    "load_config",
    "load_manifest",
    "meeting_stats",
    "next_utterance",
    "parse_rttm",
    "read_descriptors",
    "reflection_from_t60",
    "render_dataset",
    "render_mixture",
    "sample_classical",
    "sample_descriptor",
    "sample_gap",
    "sample_meeting",
    "sample_noise_params",
    "sample_sro",
    "stage_streams",
    "synthesize_noise",
    "turn_probabilities",
    "write_descriptors",
    "write_manifest",
]
