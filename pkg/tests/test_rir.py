"""Image-method RIR generation."""

import itertools
import math

import numpy as np
import pytest
from scipy.signal import resample

from mixsim.rir import (
    RirGeneratorConfig,
    RoomError,
    RoomInventory,
    RoomSetup,
    build_inventory,
    generate_rir,
    reflection_from_t60,
)
from mixsim.sampling import RandomStream


def simple_setup(src, mic, beta=0.0, fs=8000, rir_length=2000, dims=(8.0, 6.0, 3.0)):
    return RoomSetup(
        dimensions=dims,
        source_positions=(src,),
        mic_positions=(mic,),
        reflection_coefficients=(beta,) * 6,
        sample_rate=fs,
        rir_length=rir_length,
    )


def brute_force_images(src, dims, max_order):
    """Independent mirror-image enumeration: (position, reflection count)."""
    images = []
    bound = max_order + 1
    for nx, ny, nz in itertools.product(range(-bound, bound + 1), repeat=3):
        for qx, qy, qz in itertools.product((0, 1), repeat=3):
            order = (
                abs(nx - qx) + abs(nx) + abs(ny - qy) + abs(ny)
                + abs(nz - qz) + abs(nz)
            )
            if order > max_order:
                continue
            pos = (
                (1 - 2 * qx) * src[0] + 2 * nx * dims[0],
                (1 - 2 * qy) * src[1] + 2 * ny * dims[1],
                (1 - 2 * qz) * src[2] + 2 * nz * dims[2],
            )
            images.append((pos, order))
    return images


def upsampled_peak(h, factor=32):
    dense = resample(h, len(h) * factor)
    peak_index = int(np.argmax(np.abs(dense)))
    return peak_index / factor, float(dense[peak_index])


# --- Eyring inversion --------------------------------------------------------


def test_reflection_from_t60_matches_independent_formula():
    dims = (8.0, 6.0, 3.0)
    t60 = 0.3
    volume = 8.0 * 6.0 * 3.0
    surface = 2 * (8 * 6 + 8 * 3 + 6 * 3)
    alpha = 1.0 - math.exp(-0.163 * volume / (surface * t60))
    expected = math.sqrt(1.0 - alpha)
    assert abs(reflection_from_t60(dims, t60) - expected) < 1e-9


def test_reflection_limit_large_t60():
    assert reflection_from_t60((8.0, 6.0, 3.0), 1e9) == pytest.approx(1.0, abs=1e-6)
    assert reflection_from_t60((8.0, 6.0, 3.0), 1e9) < 1.0


def test_reflection_absurd_t60_errors():
    with pytest.raises(RoomError):
        reflection_from_t60((8.0, 6.0, 3.0), 1e-6)


def test_reflection_monotone_in_t60():
    dims = (5.0, 4.0, 3.0)
    values = [reflection_from_t60(dims, t) for t in (0.1, 0.2, 0.4, 0.8)]
    assert values == sorted(values)


# --- free field --------------------------------------------------------------


def test_free_field_integer_delay_single_pulse():
    # distance 3.43 m at fs 8000, c 343 -> exactly 80 samples delay;
    # the windowed sinc collapses to a single tap of height 1/(4 pi d)
    setup = simple_setup((1.0, 1.0, 1.0), (4.43, 1.0, 1.0))
    h = generate_rir(setup, 0, 0)
    expected = 1.0 / (4.0 * math.pi * 3.43)
    assert h[80] == pytest.approx(expected, rel=1e-12)
    others = np.delete(h, 80)
    assert np.max(np.abs(others)) < expected * 1e-9


def test_free_field_delay_and_peak_random_geometries():
    stream = RandomStream(7)
    for _ in range(20):
        dims = (8.0, 6.0, 3.0)
        src = tuple(stream.uniform(0.5, d - 0.5) for d in dims)
        mic = tuple(stream.uniform(0.5, d - 0.5) for d in dims)
        dist = math.dist(src, mic)
        if dist < 0.3:
            continue
        setup = simple_setup(src, mic, rir_length=1024)
        h = generate_rir(setup, 0, 0)
        delay, peak = upsampled_peak(h)
        assert abs(delay - dist / 343.0 * 8000) < 0.5
        assert abs(peak - 1.0 / (4 * math.pi * dist)) < 0.01 / (4 * math.pi * dist)


def test_max_order_zero_equals_anechoic():
    src, mic = (2.0, 3.0, 1.5), (5.0, 2.0, 1.2)
    reverberant = simple_setup(src, mic, beta=0.8)
    anechoic = simple_setup(src, mic, beta=0.0)
    h_order0 = generate_rir(reverberant, 0, 0, max_order=0)
    h_free = generate_rir(anechoic, 0, 0)
    assert np.allclose(h_order0, h_free, atol=1e-15)


def test_max_order_one_exactly_seven_pulses():
    src, mic = (2.0, 3.0, 1.5), (5.0, 2.0, 1.2)
    dims = (8.0, 6.0, 3.0)
    beta = 0.7
    setup = simple_setup(src, mic, beta=beta, rir_length=4000)
    h = generate_rir(setup, 0, 0, max_order=1)

    images = brute_force_images(src, dims, max_order=1)
    assert len(images) == 7  # direct + 6 first-order images
    residual = h.copy()
    for pos, order in images:
        dist = math.dist(pos, mic)
        delay = dist / 343.0 * 8000
        gain = beta**order / (4 * math.pi * dist)
        taps = np.arange(math.ceil(delay - 16), math.floor(delay + 16) + 1)
        t = taps - delay
        pulse = gain * 0.5 * (1 + np.cos(np.pi * t / 16)) * np.sinc(t)
        residual[taps] -= pulse
    assert np.max(np.abs(residual)) < 1e-12


def test_reciprocity_uniform_beta():
    a, b = (2.0, 3.0, 1.5), (5.5, 2.2, 1.1)
    h_ab = generate_rir(simple_setup(a, b, beta=0.6), 0, 0)
    h_ba = generate_rir(simple_setup(b, a, beta=0.6), 0, 0)
    assert np.allclose(h_ab, h_ba, atol=1e-12)


def test_doubling_distance_halves_amplitude():
    src = (1.0, 3.0, 1.5)
    near = simple_setup(src, (2.5, 3.0, 1.5))  # 1.5 m
    far = simple_setup(src, (4.0, 3.0, 1.5))  # 3.0 m
    _, peak_near = upsampled_peak(generate_rir(near, 0, 0))
    _, peak_far = upsampled_peak(generate_rir(far, 0, 0))
    assert peak_near / peak_far == pytest.approx(2.0, rel=0.01)


def test_schroeder_decay_reaches_t60():
    stream = RandomStream(13)
    for _ in range(2):
        dims = (
            stream.uniform(7.0, 9.0),
            stream.uniform(5.5, 6.5),
            stream.uniform(2.8, 3.2),
        )
        t60 = stream.uniform(0.2, 0.4)
        beta = reflection_from_t60(dims, t60)
        setup = RoomSetup(
            dimensions=dims,
            source_positions=((2.0, 2.0, 1.5),),
            mic_positions=((dims[0] - 2.0, dims[1] - 2.0, 1.4),),
            reflection_coefficients=(beta,) * 6,
            sample_rate=8000,
            rir_length=8000,
        )
        h = generate_rir(setup, 0, 0)
        energy = h**2
        edc = np.cumsum(energy[::-1])[::-1]
        edc_db = 10 * np.log10(edc / edc[0] + 1e-300)
        crossing = int(np.argmax(edc_db <= -60.0))
        assert crossing > 0
        measured_t60 = crossing / 8000
        assert abs(measured_t60 - t60) < 0.2 * t60


# --- setup validation --------------------------------------------------------


def test_setup_validation_errors():
    with pytest.raises(RoomError, match="inside"):
        simple_setup((9.0, 1.0, 1.0), (1.0, 1.0, 1.0))
    with pytest.raises(RoomError, match="reflection"):
        simple_setup((1.0, 1.0, 1.0), (2.0, 1.0, 1.0), beta=1.0)
    with pytest.raises(RoomError, match="direct-path"):
        simple_setup((0.1, 1.0, 1.0), (7.9, 5.0, 2.9), rir_length=10)


# --- inventories -------------------------------------------------------------


def small_config(**kwargs):
    defaults = dict(
        num_rooms=1,
        positions_per_room=1,
        num_mics=1,
        sample_rate=8000,
        rir_length_seconds=0.1,
        t60_range=(0.15, 0.18),
    )
    defaults.update(kwargs)
    return RirGeneratorConfig(**defaults)


def test_inventory_shapes():
    inventory = build_inventory(small_config(), RandomStream(1))
    assert inventory.rooms[0].rirs.shape == (1, 1, 800)
    inventory = build_inventory(
        small_config(positions_per_room=8, num_mics=6), RandomStream(2)
    )
    assert inventory.rooms[0].rirs.shape == (8, 6, 800)


def test_inventory_deterministic():
    a = build_inventory(small_config(positions_per_room=2), RandomStream(5))
    b = build_inventory(small_config(positions_per_room=2), RandomStream(5))
    assert np.array_equal(a.rooms[0].rirs, b.rooms[0].rirs)
    assert a.rooms[0].setup == b.rooms[0].setup


def test_inventory_save_load_round_trip(tmp_path):
    inventory = build_inventory(
        small_config(num_rooms=2, positions_per_room=2, num_mics=2),
        RandomStream(9),
    )
    inventory.save(tmp_path)
    loaded = RoomInventory.load(tmp_path)
    assert len(loaded.rooms) == 2
    assert loaded.positions_per_room == 2
    assert loaded.num_mics == 2
    # float32 storage quantization only
    assert np.allclose(
        loaded.rooms[0].rirs, inventory.rooms[0].rirs, atol=1e-7
    )
    assert loaded.rooms[0].setup.dimensions == pytest.approx(
        inventory.rooms[0].setup.dimensions
    )
    assert loaded.provenance["config"]["num_rooms"] == 2

    # saving the loaded inventory again is byte-stable
    second = tmp_path / "again"
    loaded.save(second)
    reloaded = RoomInventory.load(second)
    assert np.array_equal(reloaded.rooms[0].rirs, loaded.rooms[0].rirs)
