import numpy as np
import pytest

from bitalloc.beamspace import dft_matrix, inverse_project
from bitalloc.channel import (
    ArrayGeometry,
    ChannelParams,
    channel_from_paths,
    generate_channel,
    spatial_frequency,
    steering_vector,
)


@pytest.fixture
def geom():
    return ArrayGeometry.from_carrier(64)


def test_steering_zero_frequency():
    np.testing.assert_allclose(steering_vector(4, 0.0), np.full(4, 0.5))


def test_steering_half_frequency():
    np.testing.assert_allclose(steering_vector(2, 0.5), np.array([1, -1]) / np.sqrt(2), atol=1e-15)


@pytest.mark.parametrize("n,freq", [(1, 0.3), (8, -2.7), (256, 0.123456), (33, 17.5)])
def test_steering_unit_norm(n, freq):
    assert np.linalg.norm(steering_vector(n, freq)) == pytest.approx(1.0, abs=1e-12)


def test_steering_periodic_in_frequency():
    np.testing.assert_allclose(steering_vector(16, 0.2), steering_vector(16, 1.2), atol=1e-12)


def test_geometry_defaults():
    g = ArrayGeometry.from_carrier(256)
    assert g.spacing_ratio == pytest.approx(0.25)
    assert g.wavelength == pytest.approx(299_792_458.0 / 73e9)
    assert spatial_frequency(g, np.pi / 2) == pytest.approx(0.25)


@pytest.mark.parametrize("kwargs", [dict(n_antennas=0, wavelength=1, spacing=1), dict(n_antennas=4, wavelength=0, spacing=1), dict(n_antennas=4, wavelength=1, spacing=-1)])
def test_geometry_validation(kwargs):
    with pytest.raises(ValueError):
        ArrayGeometry(**kwargs)


def test_params_validation():
    with pytest.raises(ValueError):
        ChannelParams(n_users=0)
    with pytest.raises(ValueError):
        ChannelParams(n_subpaths=2, subpath_power_profile=(0.7, 0.4))
    ChannelParams(n_subpaths=2, subpath_power_profile=(0.25, 0.75))


def test_on_grid_single_path_is_one_bin():
    n, k = 64, 9
    ch = channel_from_paths(n, [[k / n]], [[1.0]])
    col = np.abs(ch.beamspace_matrix[:, 0])
    assert np.argmax(col) == k
    others = np.delete(col, k)
    assert np.all(others <= 1e-10 * col[k])


def test_generate_on_grid_zero_spread(geom):
    params = ChannelParams(n_users=3, n_subpaths=1, cluster_angle_spread=0.0)
    rng = np.random.default_rng(3)
    ch = generate_channel(geom, params, rng)
    # snap each user's centre onto the grid and rebuild with the same gains
    n = geom.n_antennas
    bins = [int(round(a[0] * n)) % n for a in ch.path_angles]
    gains = [[1.0]] * 3
    snapped = channel_from_paths(geom, [[b / n] for b in bins], gains)
    for u, b in enumerate(bins):
        col = np.abs(snapped.beamspace_matrix[:, u])
        assert np.argmax(col) == b
        assert np.all(np.delete(col, b) <= 1e-10 * col[b])


def test_beamspace_is_projection(geom, rng):
    ch = generate_channel(geom, ChannelParams(n_users=5), rng)
    a = dft_matrix(geom.n_antennas)
    h = ch.h_matrix
    assert np.linalg.norm(ch.beamspace_matrix - a.H @ h) <= 1e-10 * np.linalg.norm(h)
    assert np.linalg.norm(inverse_project(a, ch.beamspace_matrix) - h) <= 1e-10 * np.linalg.norm(h)


def test_energy_normalisation(geom):
    rng = np.random.default_rng(11)
    params = ChannelParams(n_users=1)
    energy = [np.sum(np.abs(generate_channel(geom, params, rng).h_matrix) ** 2) for _ in range(1000)]
    assert geom.n_antennas * 0.95 <= np.mean(energy) <= geom.n_antennas * 1.05


def test_energy_normalisation_unequal_profile(geom):
    rng = np.random.default_rng(12)
    params = ChannelParams(n_users=2, n_subpaths=3, subpath_power_profile=(0.6, 0.3, 0.1))
    energy = [np.sum(np.abs(generate_channel(geom, params, rng).h_matrix) ** 2, axis=0) for _ in range(1000)]
    assert np.all(np.abs(np.mean(energy, axis=0) / geom.n_antennas - 1) <= 0.05)


def test_determinism(geom):
    params = ChannelParams(n_users=4)
    a = generate_channel(geom, params, np.random.default_rng(99))
    b = generate_channel(geom, params, np.random.default_rng(99))
    assert a.h_matrix.tobytes() == b.h_matrix.tobytes()
    assert a.beamspace_matrix.tobytes() == b.beamspace_matrix.tobytes()
    for x, y in zip(a.path_angles, b.path_angles):
        assert x.tobytes() == y.tobytes()


def test_realization_is_immutable(geom, rng):
    ch = generate_channel(geom, ChannelParams(n_users=2), rng)
    with pytest.raises(ValueError):
        ch.h_matrix[0, 0] = 0


@pytest.mark.parametrize("p", [2, 3, 4])
def test_sparsity_zero_spread(p):
    # zero spread collapses the cluster onto one (off-grid) frequency: the two
    # strongest bins of a Dirichlet kernel hold >= 81% of its energy
    n = 128
    geom = ArrayGeometry.from_carrier(n)
    rng = np.random.default_rng(p)
    params = ChannelParams(n_users=1, n_subpaths=p, cluster_angle_spread=0.0)
    for _ in range(100):
        col = np.abs(generate_channel(geom, params, rng).beamspace_matrix[:, 0]) ** 2
        top = np.sort(col)[::-1][:p]
        assert top.sum() >= 0.8 * col.sum()


@pytest.mark.parametrize("p", [1, 2, 4])
def test_sparsity_separated_grid_paths(p):
    n = 128
    rng = np.random.default_rng(100 + p)
    for _ in range(100):
        bins = rng.choice(np.arange(0, n, 2), size=p, replace=False)  # >= 2/N apart
        gains = np.exp(2j * np.pi * rng.uniform(size=p))
        col = np.abs(channel_from_paths(n, [bins / n], [gains]).beamspace_matrix[:, 0]) ** 2
        assert np.sort(col)[::-1][:p].sum() >= 0.8 * col.sum()
