import math

import numpy as np
import pytest

from fronthaul_mimo.channel import (
    ArrayGeometry,
    ChannelModel,
    UserDrop,
    average_distance,
    free_space_pathloss,
    los_channel,
    normalized_los_channel,
    rayleigh_channel,
    sample_drop,
    steering_matrix,
)


def _drop(distance, azimuth, wavelength=0.01, d_avg=None):
    d = np.asarray(distance, dtype=float)
    d_avg = d.mean() if d_avg is None else d_avg
    return UserDrop(d, np.asarray(azimuth, dtype=float), free_space_pathloss(d, wavelength), (d_avg / d) ** 2)


def test_sample_drop_bounds(rng):
    drop = sample_drop(rng, 8, 50, 150, 30, 150)
    assert drop.num_users == 8
    assert np.all((drop.distance >= 50) & (drop.distance <= 150))
    assert np.all((drop.azimuth > 30) & (drop.azimuth <= 150))
    np.testing.assert_allclose(drop.pathloss, (0.01 / (4 * np.pi * drop.distance)) ** 2)


def test_sample_drop_degenerate_ring(rng):
    drop = sample_drop(rng, 5, 100, 100, 30, 150)
    np.testing.assert_array_equal(drop.distance, 100.0)
    np.testing.assert_allclose(drop.snr_scale, 1.0)


def test_sample_drop_uniform_in_area(rng):
    drop = sample_drop(rng, 100_000, 50, 150, 30, 150)
    assert np.mean(drop.distance ** 2) == pytest.approx(12500, rel=0.01)
    assert np.mean(drop.distance) == pytest.approx(average_distance(50, 150), rel=0.005)
    assert np.mean(drop.azimuth) == pytest.approx(90, rel=0.01)


@pytest.mark.parametrize("args", [(50, 40, 0, 1), (0, 10, 0, 1), (50, 150, 90, 90)])
def test_sample_drop_rejects_bad_geometry(rng, args):
    with pytest.raises(ValueError):
        sample_drop(rng, 4, *args)


def test_average_distance():
    assert average_distance(50, 150) == pytest.approx(108.33333333333333, rel=1e-14)
    assert average_distance(1, 2) == pytest.approx(14 / 9, rel=1e-14)
    assert average_distance(10, 10 + 1e-9) == pytest.approx(10, rel=1e-9)
    assert average_distance(10, 10) == 10


def test_free_space_pathloss():
    lam = 0.01
    assert free_space_pathloss(lam / (4 * math.pi), lam) == pytest.approx(1.0, rel=1e-14)
    assert free_space_pathloss(20.0, lam) == pytest.approx(free_space_pathloss(10.0, lam) / 4, rel=1e-14)
    assert free_space_pathloss(108.333, lam) == pytest.approx(5.40e-11, rel=0.005)


def test_fixed_aperture_law():
    for B in (32, 51, 64, 85, 128, 256):
        g = ArrayGeometry(B, 1.28, 0.01)
        assert g.spacing_wavelengths * B == pytest.approx(128, rel=1e-15)


def test_geometry_validation():
    with pytest.raises(ValueError):
        ArrayGeometry(0, 1.28, 0.01)
    with pytest.raises(ValueError):
        ArrayGeometry(4, 0.0, 0.01)


def test_broadside_column_is_constant():
    drop = _drop([100.0], [90.0])
    H = los_channel(ArrayGeometry(16, 1.28, 0.01), drop).H
    np.testing.assert_allclose(H[:, 0], math.sqrt(drop.pathloss[0]), rtol=1e-12)


def test_steering_phase_difference():
    a = steering_matrix(2, 0.5, [60.0])
    assert np.angle(a[1, 0] / a[0, 0]) == pytest.approx(math.pi / 2, rel=1e-12)
    assert a[0, 0] == 1


def test_same_azimuth_gives_parallel_columns():
    drop = _drop([60.0, 140.0], [47.0, 47.0])
    H = los_channel(ArrayGeometry(32, 1.28, 0.01), drop).H
    assert np.linalg.matrix_rank(H, tol=1e-9 * np.abs(H).max()) == 1


def test_los_column_norms(rng):
    drop = sample_drop(rng, 6, 50, 150, 30, 150)
    geom = ArrayGeometry(64, 1.28, 0.01)
    real = los_channel(geom, drop)
    assert real.model is ChannelModel.LOS_ULA
    np.testing.assert_allclose(np.sum(np.abs(real.H) ** 2, axis=0), 64 * drop.pathloss, rtol=1e-12)
    # constant magnitude along each column
    np.testing.assert_allclose(np.abs(real.H), np.sqrt(drop.pathloss)[None, :] * np.ones((64, 1)), rtol=1e-12)
    norm = normalized_los_channel(geom, drop).H
    np.testing.assert_allclose(np.sum(np.abs(norm) ** 2, axis=0), 64 * drop.snr_scale, rtol=1e-12)


def test_snr_scale_unity_at_average_distance():
    d_avg = average_distance(50, 150)
    drop = _drop([d_avg, 50.0], [90.0, 90.0], d_avg=d_avg)
    assert drop.snr_scale[0] == pytest.approx(1.0, rel=1e-15)
    assert drop.snr_scale[1] == pytest.approx((d_avg / 50) ** 2)


def test_rayleigh_statistics(rng):
    real = rayleigh_channel(rng, 1000, 1000)
    H = real.H
    assert real.model is ChannelModel.IID_RAYLEIGH
    assert abs(H.real.mean()) < 0.005 and abs(H.imag.mean()) < 0.005
    assert np.mean(np.abs(H) ** 2) == pytest.approx(1.0, rel=0.01)
    assert np.mean(np.sum(np.abs(H) ** 2, axis=0)) == pytest.approx(1000, rel=0.01)
    with pytest.raises(ValueError):
        rayleigh_channel(rng, 0, 2)
