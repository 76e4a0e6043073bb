import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twrhar.echo import (
    EchoMatrix,
    MotionProfile,
    MotionSegment,
    NoiseModel,
    RadarParams,
    WallModel,
    clean_echo,
    measure_snr_db,
    nominal_snr_db,
    scatterer_ranges,
    signal_power,
    synthesize_echo,
    wall_delay,
)

C = 299_792_458.0
NO_WALL = WallModel(wall_rcs=0.0)


def lone(r0, sigma=1.0, speed=0.0):
    return MotionProfile(torso_speed_m_s=speed, initial_range_m=r0, arm_amplitude_m=0.0,
                         leg_amplitude_m=0.0, rcs=(0, sigma, 0, 0, 0, 0))


def test_wall_delay_hand_value():
    # 2 * 0.12 * (sqrt(6) - 1) / c
    tau = wall_delay(WallModel(0.12, 6.0), RadarParams())
    assert tau == pytest.approx(1.160e-9, rel=1e-3)
    assert tau == pytest.approx(2 * 0.12 * (6 ** 0.5 - 1) / C, rel=1e-12)


def test_wall_delay_free_space_is_zero():
    assert wall_delay(WallModel(0.3, 1.0)) == 0.0


def test_radar_params_derived():
    p = RadarParams(bandwidth_hz=2e9, pulse_width_s=1e-3)
    assert p.chirp_slope == 2e12
    assert p.range_cell_m == pytest.approx(C * p.fast_sample_interval_s / 2)
    assert p.range_axis()[5] == pytest.approx(5 * p.range_cell_m)
    assert p.slow_time_axis()[-1] == pytest.approx((p.slow_samples - 1) * p.pri_s)


@pytest.mark.parametrize("kwargs", [
    {"bandwidth_hz": 0}, {"pulse_width_s": -1}, {"fast_samples": 1}, {"slow_samples": 1},
    {"fast_sample_interval_s": 0},
])
def test_radar_params_rejects(kwargs):
    with pytest.raises(ValueError):
        RadarParams(**kwargs)


@pytest.mark.parametrize("kwargs", [
    {"rel_permittivity": 0.5}, {"amplitude_attenuation": 0}, {"amplitude_attenuation": 1.2},
    {"wall_rcs": -1},
])
def test_wall_rejects(kwargs):
    with pytest.raises(ValueError):
        WallModel(**kwargs)


def test_noise_rejects_negative_variance():
    with pytest.raises(ValueError):
        NoiseModel(variance=-1e-9)


def test_walking_ranges_examples():
    prof = MotionProfile(initial_range_m=2.0, torso_speed_m_s=1.0, arm_amplitude_m=0.3,
                         offsets_m=(0.0, 0.2, 0.05), gait_freq_hz=1.0)
    r = scatterer_ranges(prof, 0.0)
    assert r[2] == pytest.approx(2.2)
    assert r[3] == pytest.approx(2.2)
    t = 1 / (4 * prof.gait_freq_hz)
    r = scatterer_ranges(prof, t)
    assert r[2] - (2.0 + t + 0.2) == pytest.approx(0.3)
    assert r[1] == pytest.approx(2.0 + t)
    assert r[0] == pytest.approx(2.0 + t)


def test_ranges_outside_duration():
    with pytest.raises(ValueError):
        scatterer_ranges(MotionProfile(duration_s=4.0), 4.5)
    with pytest.raises(ValueError):
        scatterer_ranges(MotionProfile(), -0.1)


def test_schedule_integrates_speed():
    prof = MotionProfile(torso_speed_m_s=0.5, initial_range_m=1.0, duration_s=4.0,
                         segments=(MotionSegment(0.5, speed=1.0), MotionSegment(0.5, speed=-1.0)))
    r = scatterer_ranges(prof, np.array([0.0, 1.0, 2.0, 3.0, 4.0]))[1]
    np.testing.assert_allclose(r, [1.0, 1.5, 2.0, 1.5, 1.0])


def test_segments_must_cover_duration():
    with pytest.raises(ValueError):
        MotionProfile(segments=(MotionSegment(0.5),))


def test_single_static_scatterer_peak_bin():
    p = RadarParams()
    for r in (0.9, 1.37, 2.51):
        y = clean_echo(p, NO_WALL, lone(r))
        tau = 2 * r / C + wall_delay(NO_WALL, p)
        expect = int(np.argmin(np.abs(np.arange(p.fast_samples) * p.fast_sample_interval_s - tau)))
        assert np.all(np.argmax(np.abs(y), axis=0) == expect)


def test_all_zero_scene():
    p = RadarParams()
    y = synthesize_echo(p, NO_WALL, lone(1.0, sigma=0.0), NoiseModel(0.0))
    assert np.count_nonzero(y.data) == 0


def test_wall_only_is_static():
    y = clean_echo(RadarParams(), WallModel(), None)
    assert np.array_equal(y, np.repeat(y[:, :1], y.shape[1], axis=1))
    assert np.abs(y).max() > 0


def test_static_scene_columns_identical():
    y = clean_echo(RadarParams(), WallModel(), lone(1.8))
    assert np.array_equal(y, np.repeat(y[:, :1], y.shape[1], axis=1))


def test_sinc_zero_is_one():
    # a scatterer exactly on a sample: that sample's modulus is sigma * alpha * T_p
    p = RadarParams()
    wall = WallModel(thickness_m=0.0, wall_rcs=0.0)
    r = 40 * p.range_cell_m
    y = clean_echo(p, wall, lone(r))
    assert np.abs(y[40, 0]) == pytest.approx(1.0 * wall.amplitude_attenuation * p.pulse_width_s, rel=1e-9)


@given(st.floats(0.1, 5.0))
def test_echo_linearity(a):
    p = RadarParams(slow_samples=8)
    prof = MotionProfile(duration_s=p.duration_s, initial_range_m=1.5)
    scaled = MotionProfile(duration_s=p.duration_s, initial_range_m=1.5,
                           rcs=tuple(a * s for s in prof.rcs))
    y1 = clean_echo(p, NO_WALL, prof)
    y2 = clean_echo(p, NO_WALL, scaled)
    np.testing.assert_allclose(y2, a * y1, rtol=1e-12, atol=1e-18)


def test_noise_determinism():
    p = RadarParams()
    a = synthesize_echo(p, WallModel(), MotionProfile(), NoiseModel(1e-8, 5))
    b = synthesize_echo(p, WallModel(), MotionProfile(), NoiseModel(1e-8, 5))
    c = synthesize_echo(p, WallModel(), MotionProfile(), NoiseModel(1e-8, 6))
    assert a.data.tobytes() == b.data.tobytes()
    assert a.data.tobytes() != c.data.tobytes()


def test_noise_statistics():
    p = RadarParams()
    clean = clean_echo(p, WallModel(), None)
    y = synthesize_echo(p, WallModel(), None, NoiseModel(4e-6, 1))
    w = y.data - clean
    assert np.mean(np.abs(w) ** 2) == pytest.approx(4e-6, rel=0.03)
    assert abs(np.mean(w)) < 5e-5


def test_snr_helpers():
    p = RadarParams()
    clean = clean_echo(p, NO_WALL, MotionProfile())
    var = signal_power(clean) / 100.0
    assert nominal_snr_db(clean, var) == pytest.approx(20.0)
    noisy = synthesize_echo(p, NO_WALL, MotionProfile(), NoiseModel(var, 3))
    assert measure_snr_db(clean, noisy) == pytest.approx(20.0, abs=0.2)


def test_out_of_window_scatterer_rejected():
    p = RadarParams()
    with pytest.raises(ValueError, match="observable window"):
        clean_echo(p, NO_WALL, lone(p.fast_samples * p.range_cell_m + 1.0))


def test_echo_matrix_shape_checked():
    with pytest.raises(ValueError):
        EchoMatrix(np.zeros((3, 3), complex), RadarParams())
    bad = np.zeros((128, 256), complex)
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        EchoMatrix(bad, RadarParams())
