"""Environment sampling and descriptor assembly/serialization."""

import pytest

from conftest import make_impulse_inventory
from mixsim.environment import (
    DescriptorError,
    EnvironmentConfig,
    MixtureDescriptor,
    sample_noise_params,
    sample_sro,
    assign_environment,
    read_descriptors,
    write_descriptors,
)
from mixsim.patterns import Timeline, TimelineEntry
from mixsim.sampling import RandomStream, stage_streams

FS = 8000


def timeline_for(num_speakers=2, entries_per_speaker=2):
    entries = []
    offset = 0
    for i in range(entries_per_speaker):
        for k in range(num_speakers):
            entries.append(
                TimelineEntry(f"spk{k}", f"spk{k}_u{i}", offset, 4000,
                              gap=None if offset == 0 else 0)
            )
            offset += 4000
    return Timeline(entries, FS, num_speakers)


def build(timeline, config, inventory=None, index=0, seed=17):
    return assign_environment(
        timeline,
        config,
        inventory,
        stage_streams(seed, "env-test", index),
        dataset_label="env-test",
        example_index=index,
        root_seed=seed,
    )


def test_anechoic_degenerate_gains():
    config = EnvironmentConfig(reverb="none", gain_range_db=(0.0, 0.0),
                               snr_range_db=None)
    descriptor = build(timeline_for(), config)
    assert all(e.gain == 1.0 for e in descriptor.entries)
    assert all(e.rir is None for e in descriptor.entries)
    assert descriptor.noise is None
    assert descriptor.num_channels == 1


def test_gain_range_db_conversion_bounds():
    config = EnvironmentConfig(gain_range_db=(-5.0, 5.0), snr_range_db=None)
    lo, hi = 10 ** (-0.25), 10 ** (0.25)
    for index in range(50):
        descriptor = build(timeline_for(), config, index=index)
        for entry in descriptor.entries:
            assert lo <= entry.gain <= hi


def test_positions_distinct_per_speaker():
    inventory = make_impulse_inventory(positions=8, mics=2)
    config = EnvironmentConfig(reverb="simulated", snr_range_db=None)
    timeline = timeline_for(num_speakers=8, entries_per_speaker=1)
    descriptor = build(timeline, config, inventory)
    positions = [e.rir.position for e in descriptor.entries]
    assert sorted(positions) == list(range(8))
    assert descriptor.num_channels == 2
    assert all(e.rir.room_id == "room000" for e in descriptor.entries)


def test_position_fixed_per_speaker_without_resampling():
    inventory = make_impulse_inventory(positions=8)
    config = EnvironmentConfig(reverb="simulated", snr_range_db=None)
    timeline = timeline_for(num_speakers=2, entries_per_speaker=4)
    descriptor = build(timeline, config, inventory)
    per_speaker = {}
    for entry in descriptor.entries:
        per_speaker.setdefault(entry.speaker_id, set()).add(entry.rir.position)
    assert all(len(v) == 1 for v in per_speaker.values())


def test_position_resampling_stays_in_allotted_set():
    inventory = make_impulse_inventory(positions=8)
    config = EnvironmentConfig(reverb="simulated", snr_range_db=None,
                               resample_position_per_utterance=True)
    timeline = timeline_for(num_speakers=2, entries_per_speaker=10)
    descriptor = build(timeline, config, inventory)
    per_speaker = {}
    for entry in descriptor.entries:
        per_speaker.setdefault(entry.speaker_id, set()).add(entry.rir.position)
    sets = list(per_speaker.values())
    assert not (sets[0] & sets[1])  # allotted sets are disjoint
    assert len(sets[0] | sets[1]) <= 8


def test_too_many_speakers_for_positions():
    inventory = make_impulse_inventory(positions=2)
    config = EnvironmentConfig(reverb="simulated", snr_range_db=None)
    timeline = timeline_for(num_speakers=3, entries_per_speaker=1)
    with pytest.raises(DescriptorError, match="positions"):
        build(timeline, config, inventory)


def test_reverb_without_inventory_errors():
    config = EnvironmentConfig(reverb="simulated")
    with pytest.raises(DescriptorError, match="inventory"):
        build(timeline_for(), config, None)


def test_noise_params_degenerate_and_range():
    config = EnvironmentConfig(snr_range_db=(25.0, 25.0))
    params = sample_noise_params(config, RandomStream(1))
    assert params.snr_db == 25.0
    assert params.kind == "white"
    config = EnvironmentConfig(snr_range_db=(20.0, 30.0))
    for seed in range(30):
        params = sample_noise_params(config, RandomStream(seed))
        assert 20.0 <= params.snr_db <= 30.0


def test_noise_seed_changes_with_example_index():
    config = EnvironmentConfig(snr_range_db=(20.0, 30.0))
    d0 = build(timeline_for(), config, index=0)
    d1 = build(timeline_for(), config, index=1)
    assert d0.noise.seed != d1.noise.seed


def test_sro_contract():
    config = EnvironmentConfig(sro_ppm_range=None)
    assert sample_sro(config, RandomStream(0), 4) is None
    config = EnvironmentConfig(sro_ppm_range=(0.0, 0.0))
    assert sample_sro(config, RandomStream(0), 3) == [0.0, 0.0, 0.0]
    config = EnvironmentConfig(sro_ppm_range=(-100.0, 100.0))
    values = sample_sro(config, RandomStream(5), 4)
    assert values[0] == 0.0
    assert all(-100.0 <= v <= 100.0 for v in values[1:])
    assert sample_sro(config, RandomStream(5), 4) == values


def test_descriptor_round_trip(tmp_path):
    inventory = make_impulse_inventory(positions=8, mics=3)
    config = EnvironmentConfig(reverb="simulated", snr_range_db=(20.0, 30.0),
                               sro_ppm_range=(-50.0, 50.0))
    descriptors = [
        build(timeline_for(num_speakers=2), config, inventory, index=i)
        for i in range(3)
    ]
    path = tmp_path / "descriptors.json"
    write_descriptors(descriptors, path)
    loaded = read_descriptors(path)
    assert [d.to_dict() for d in loaded] == [d.to_dict() for d in descriptors]
    # byte-identical on re-write
    text = path.read_text()
    write_descriptors(loaded, path)
    assert path.read_text() == text


def test_descriptor_total_samples_validation():
    descriptor = build(timeline_for(), EnvironmentConfig(snr_range_db=None))
    data = descriptor.to_dict()
    data["total_samples"] += 1
    with pytest.raises(DescriptorError, match="total_samples"):
        MixtureDescriptor.from_dict(data)


def test_extra_passthrough(tiny_corpus):
    from mixsim.patterns import ScenarioConfig, sample_classical

    selected = [tiny_corpus.utterances[0], tiny_corpus.utterances[3]]
    timeline = sample_classical(
        ScenarioConfig(mode="full_overlap", num_speakers=2), selected,
        RandomStream(0),
    )
    descriptor = assign_environment(
        timeline,
        EnvironmentConfig(snr_range_db=None),
        None,
        stage_streams(1, "extra", 0),
        dataset_label="extra",
        example_index=0,
        root_seed=1,
        manifest=tiny_corpus,
    )
    assert descriptor.entries[0].extra["transcription"].startswith("synthetic")


def test_environment_config_validation():
    with pytest.raises(DescriptorError):
        EnvironmentConfig(reverb="bogus")
    with pytest.raises(DescriptorError):
        EnvironmentConfig(gain_range_db=(5.0, -5.0))
    with pytest.raises(DescriptorError):
        EnvironmentConfig(snr_range_db=(30.0, 20.0))
