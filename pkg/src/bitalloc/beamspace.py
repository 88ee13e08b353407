"""DFT beamspace projection and per-branch SNR statistics.

Branch ``i`` of the beamspace always corresponds to the spatial-frequency grid
point ``i / N``; no fftshift-style reordering is applied anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["DftMatrix", "RfSnrProfile", "dft_matrix", "project", "inverse_project", "rf_snr_profile"]


@dataclass(frozen=True)
class DftMatrix:
    """Unitary N x N DFT steering matrix ``A``; column i is a(i/N)."""

    n: int
    columns: np.ndarray

    def __post_init__(self):
        if self.columns.shape != (self.n, self.n):
            raise ValueError(f"columns must be {self.n}x{self.n}, got {self.columns.shape}")
        self.columns.setflags(write=False)

    @property
    def H(self) -> np.ndarray:
        return self.columns.conj().T


@dataclass(frozen=True)
class RfSnrProfile:
    """Beamspace branch statistics feeding the bit allocator.

    Attributes
    ----------
    sigma_sq : np.ndarray
        Per-branch received power ``||G[i,:]||^2 + N0``.
    snr_rf : np.ndarray
        Per-branch RF SNR ``||G[i,:]||^2 / N0``.
    noise_power : float
        Noise power ``N0`` per complex sample.
    """

    sigma_sq: np.ndarray
    snr_rf: np.ndarray
    noise_power: float

    def __post_init__(self):
        if not self.noise_power > 0:
            raise ValueError("noise_power must be positive")
        if self.sigma_sq.shape != self.snr_rf.shape or self.sigma_sq.ndim != 1:
            raise ValueError("sigma_sq and snr_rf must be 1-D arrays of equal length")

    @property
    def n(self) -> int:
        return self.sigma_sq.size

    @classmethod
    def from_snr(cls, snr_rf, noise_power: float = 1.0) -> "RfSnrProfile":
        """Build a profile directly from RF SNRs (handy for optimizer tests)."""
        snr = np.asarray(snr_rf, dtype=float)
        return cls(sigma_sq=noise_power * (1.0 + snr), snr_rf=snr, noise_power=float(noise_power))


def dft_matrix(n: int) -> DftMatrix:
    """Return A with entry (k, i) = exp(-j 2 pi (i/N) k) / sqrt(N)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    k = np.arange(n)
    cols = np.exp(-2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)
    return DftMatrix(n=n, columns=cols)


def _check_rows(a: DftMatrix | int, x: np.ndarray) -> int:
    n = a.n if isinstance(a, DftMatrix) else int(a)
    if x.ndim not in (1, 2) or x.shape[0] != n:
        raise ValueError(f"input leading dimension {x.shape} does not match N={n}")
    return n


def project(a: DftMatrix | int, y: np.ndarray) -> np.ndarray:
    """Project an antenna-domain vector or N x M matrix onto the beamspace.

    Computes ``A^H y`` through the FFT: ``(A^H y)_i = sqrt(N) * ifft(y)_i``.
    ``a`` may be a :class:`DftMatrix` or just the array size.
    """
    y = np.asarray(y)
    n = _check_rows(a, y)
    return np.fft.ifft(y, axis=0) * np.sqrt(n)


def inverse_project(a: DftMatrix | int, g: np.ndarray) -> np.ndarray:
    """Map beamspace back to the antenna domain, ``A g``."""
    g = np.asarray(g)
    n = _check_rows(a, g)
    return np.fft.fft(g, axis=0) / np.sqrt(n)


def rf_snr_profile(g: np.ndarray, noise_power: float) -> RfSnrProfile:
    if not noise_power > 0:
        raise ValueError("noise_power must be positive")
    g = np.asarray(g)
    if g.ndim == 1:
        g = g[:, None]
    row_energy = np.sum(np.abs(g) ** 2, axis=1)
    return RfSnrProfile(
        sigma_sq=row_energy + noise_power,
        snr_rf=row_energy / noise_power,
        noise_power=float(noise_power),
    )
