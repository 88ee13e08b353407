"""Single uplink trial: QPSK -> channel -> beamspace ADCs -> ZF -> EVM."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .allocation import BitAllocation, PowerModel, allocate_bits, uniform_allocation
from .beamspace import rf_snr_profile
from .channel import ChannelRealization
from .quantization import AqnmParams, quantize_aqnm, quantize_codebook

__all__ = [
    "Scheme",
    "LinkConfig",
    "SymbolFrame",
    "TrialResult",
    "InfeasibleEqualizationError",
    "QPSK",
    "draw_symbols",
    "draw_noise",
    "zf_equalize",
    "evm",
    "run_trial",
]

QPSK = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2.0)
QUANTIZER_MODES = ("codebook", "aqnm")


class InfeasibleEqualizationError(ValueError):
    """Fewer usable beamspace branches than users."""


@dataclass(frozen=True, order=True)
class Scheme:
    """A receiver configuration: ``full``, ``uniform`` or ``ba`` at ``b_bar`` bits."""

    kind: str
    b_bar: int = 0

    def __post_init__(self):
        if self.kind not in ("full", "uniform", "ba"):
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if self.kind == "full" and self.b_bar != 0:
            object.__setattr__(self, "b_bar", 0)
        if self.kind != "full" and self.b_bar < 1:
            raise ValueError("uniform and BA schemes need b_bar >= 1")

    @property
    def label(self) -> str:
        return {"full": "FullResolution", "uniform": f"Uniform{self.b_bar}", "ba": f"BA{self.b_bar}"}[self.kind]

    @property
    def name(self) -> str:
        return {"full": "FullResolution", "uniform": "Uniform", "ba": "BA"}[self.kind]


@dataclass(frozen=True)
class LinkConfig:
    snr_db: float
    quantizer_mode: str = "codebook"
    power: PowerModel = field(default_factory=PowerModel)

    def __post_init__(self):
        if self.quantizer_mode not in QUANTIZER_MODES:
            raise ValueError(f"quantizer_mode must be one of {QUANTIZER_MODES}")

    @property
    def noise_power(self) -> float:
        # unit-energy symbols, so SNR = 1 / N0
        return 10.0 ** (-self.snr_db / 10.0)


@dataclass(frozen=True)
class SymbolFrame:
    symbols: np.ndarray
    decoded: np.ndarray


@dataclass(frozen=True)
class TrialResult:
    """Outcome of one trial; ``evm_pct`` is NaN when ``feasible`` is False."""

    scheme: Scheme
    evm_pct: float
    n_active: int
    total_power: float
    feasible: bool


def draw_symbols(m: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. unit-energy QPSK symbols."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return QPSK[rng.integers(0, 4, size=m)]


def draw_noise(n: int, noise_power: float, rng: np.random.Generator) -> np.ndarray:
    """CN(0, N0 I) samples, drawn directly in beamspace (A is unitary)."""
    return np.sqrt(noise_power / 2.0) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def zf_equalize(g: np.ndarray, bits, aqnm: AqnmParams, y_q: np.ndarray, rcond: float = 1e-10) -> np.ndarray:
    """Zero-forcing estimate of x from the quantized beamspace vector.

    Only active branches (b_i >= 1) are used; the effective channel on those
    rows is ``diag(alpha) G`` and the estimate is its pseudo-inverse applied to
    the active part of ``y_q``.
    """
    bits = np.asarray(getattr(bits, "bits", bits))
    g = np.asarray(g)
    m = g.shape[1]
    active = bits >= 1
    if np.count_nonzero(active) < m:
        raise InfeasibleEqualizationError(f"{np.count_nonzero(active)} active branches for {m} users")
    h_eff = aqnm.alpha[active, None] * g[active]
    x_hat, _, rank, _ = np.linalg.lstsq(h_eff, y_q[active], rcond=rcond)
    if rank < m:
        raise InfeasibleEqualizationError(f"effective channel has rank {rank} < {m}")
    return x_hat


def evm(x: np.ndarray, x_hat: np.ndarray) -> float:
    """Error vector magnitude in percent."""
    x = np.asarray(x)
    x_hat = np.asarray(x_hat)
    if x.shape != x_hat.shape:
        raise ValueError("x and x_hat shapes differ")
    ref = np.linalg.norm(x)
    if ref == 0:
        raise ValueError("reference vector has zero norm")
    return float(100.0 * np.linalg.norm(x - x_hat) / ref)


def scheme_bits(scheme: Scheme, channel: ChannelRealization, config: LinkConfig) -> BitAllocation | None:
    """Bits for a scheme on a given channel; None for full resolution."""
    n = channel.n_antennas
    if scheme.kind == "full":
        return None
    if scheme.kind == "uniform":
        return uniform_allocation(n, config.power, scheme.b_bar)
    profile = rf_snr_profile(channel.beamspace_matrix, config.noise_power)
    return allocate_bits(profile, config.power, scheme.b_bar)


def run_trial(
    config: LinkConfig,
    channel: ChannelRealization,
    scheme: Scheme,
    rng: np.random.Generator,
    bits: BitAllocation | None = None,
) -> TrialResult:
    """Simulate one transmission and return its EVM and ADC statistics.

    Symbols and beamspace noise are the first draws from ``rng`` so that two
    schemes run with identically seeded generators see the same x and noise.
    ``bits`` may be passed to reuse an allocation across repeated calls.
    """
    g = channel.beamspace_matrix
    n, m = g.shape
    n0 = config.noise_power
    x = draw_symbols(m, rng)
    y_tilde = g @ x + draw_noise(n, n0, rng)

    if scheme.kind == "full":
        x_hat = zf_equalize(g, np.ones(n, dtype=int), AqnmParams(np.zeros(n), np.ones(n)), y_tilde)
        return TrialResult(scheme, evm(x, x_hat), n, float("nan"), True)

    if bits is None:
        bits = scheme_bits(scheme, channel, config)
    profile = rf_snr_profile(g, n0)
    if config.quantizer_mode == "codebook":
        y_q = quantize_codebook(y_tilde, bits, profile.sigma_sq)
        aqnm = AqnmParams.from_codebooks(bits)
    else:
        y_q = quantize_aqnm(y_tilde, bits, profile, rng)
        aqnm = AqnmParams.from_bits(bits)
    try:
        x_hat = zf_equalize(g, bits, aqnm, y_q)
    except InfeasibleEqualizationError:
        return TrialResult(scheme, float("nan"), bits.n_active, bits.total_power, False)
    return TrialResult(scheme, evm(x, x_hat), bits.n_active, bits.total_power, True)
