"""Narrowband geometric cluster channel over a uniform linear array.

Each user sees one cluster of ``p`` subpaths. The cluster centre is drawn
uniformly on the spatial-frequency circle [0, 1); subpath offsets are i.i.d.
zero-mean Laplacian with standard deviation ``cluster_angle_spread``. Path
gains have fixed magnitudes set by the power profile and uniform phases, and
the channel is normalised so that E||h_u||^2 = N.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .beamspace import project

__all__ = [
    "ArrayGeometry",
    "ChannelParams",
    "ChannelRealization",
    "steering_vector",
    "spatial_frequency",
    "channel_from_paths",
    "generate_channel",
]

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class ArrayGeometry:
    n_antennas: int
    wavelength: float
    spacing: float

    def __post_init__(self):
        if self.n_antennas < 1:
            raise ValueError("n_antennas must be >= 1")
        if not (self.wavelength > 0 and self.spacing > 0):
            raise ValueError("wavelength and spacing must be positive")
        if not np.isfinite(self.spacing / self.wavelength):
            raise ValueError("spacing / wavelength must be finite")

    @property
    def spacing_ratio(self) -> float:
        return self.spacing / self.wavelength

    @classmethod
    def from_carrier(cls, n_antennas: int, carrier_hz: float = 73e9, spacing_ratio: float = 0.25):
        """ULA at ``carrier_hz`` with element spacing ``spacing_ratio`` wavelengths."""
        wavelength = SPEED_OF_LIGHT / carrier_hz
        return cls(n_antennas, wavelength, spacing_ratio * wavelength)


@dataclass(frozen=True)
class ChannelParams:
    n_users: int = 8
    n_subpaths: int = 4
    cluster_angle_spread: float = 0.02
    subpath_power_profile: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.n_users < 1 or self.n_subpaths < 1:
            raise ValueError("n_users and n_subpaths must be >= 1")
        if self.cluster_angle_spread < 0:
            raise ValueError("cluster_angle_spread must be non-negative")
        if self.subpath_power_profile is not None:
            prof = np.asarray(self.subpath_power_profile, dtype=float)
            if prof.shape != (self.n_subpaths,):
                raise ValueError("subpath_power_profile needs one entry per subpath")
            if np.any(prof < 0) or abs(prof.sum() - 1.0) > 1e-12:
                raise ValueError("subpath powers must be non-negative and sum to 1")

    @property
    def powers(self) -> np.ndarray:
        if self.subpath_power_profile is None:
            return np.full(self.n_subpaths, 1.0 / self.n_subpaths)
        return np.asarray(self.subpath_power_profile, dtype=float)


@dataclass(frozen=True)
class ChannelRealization:
    h_matrix: np.ndarray
    beamspace_matrix: np.ndarray
    path_angles: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        self.h_matrix.setflags(write=False)
        self.beamspace_matrix.setflags(write=False)
        for a in self.path_angles:
            a.setflags(write=False)

    @property
    def n_antennas(self) -> int:
        return self.h_matrix.shape[0]

    @property
    def n_users(self) -> int:
        return self.h_matrix.shape[1]


def spatial_frequency(geometry: ArrayGeometry, theta: float) -> float:
    """Spatial frequency (d / lambda) sin(theta) of a physical arrival angle."""
    return geometry.spacing_ratio * np.sin(theta)


def steering_vector(geometry: ArrayGeometry | int, spatial_freq) -> np.ndarray:
    """Unit-norm ULA response; element k is exp(-j 2 pi freq k) / sqrt(N).

    ``spatial_freq`` may be an array, in which case one column per frequency
    is returned.
    """
    n = geometry.n_antennas if isinstance(geometry, ArrayGeometry) else int(geometry)
    k = np.arange(n)
    freq = np.mod(np.asarray(spatial_freq, dtype=float), 1.0)
    return np.exp(-2j * np.pi * np.multiply.outer(k, freq)) / np.sqrt(n)


def channel_from_paths(geometry: ArrayGeometry | int, path_freqs, path_gains) -> ChannelRealization:
    """Assemble H from explicit per-user path frequencies and complex gains.

    ``h_u = sqrt(N/p) * sum_l gain_l * a(freq_l)``.
    """
    n = geometry.n_antennas if isinstance(geometry, ArrayGeometry) else int(geometry)
    cols = []
    angles = []
    for freqs, gains in zip(path_freqs, path_gains):
        freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
        gains = np.atleast_1d(np.asarray(gains, dtype=complex))
        if freqs.shape != gains.shape:
            raise ValueError("each user needs one gain per path frequency")
        cols.append(np.sqrt(n / freqs.size) * (steering_vector(n, freqs) @ gains))
        angles.append(np.mod(freqs, 1.0))
    h = np.stack(cols, axis=1)
    return ChannelRealization(h_matrix=h, beamspace_matrix=project(n, h), path_angles=tuple(angles))


def generate_channel(
    geometry: ArrayGeometry, params: ChannelParams, rng: np.random.Generator
) -> ChannelRealization:
    m, p = params.n_users, params.n_subpaths
    centers = rng.uniform(0.0, 1.0, size=m)
    # Laplace(scale=b) has std b*sqrt(2)
    offsets = rng.laplace(0.0, params.cluster_angle_spread / np.sqrt(2.0), size=(m, p))
    phases = rng.uniform(0.0, 2 * np.pi, size=(m, p))
    # mean per-path power 1 so that E||h||^2 = (N/p) * p = N
    amps = np.sqrt(p * params.powers)
    gains = amps * np.exp(1j * phases)
    freqs = centers[:, None] + offsets
    return channel_from_paths(geometry, freqs, gains)
