"""Power-constrained ADC bit allocation for beamspace mmWave massive-MIMO uplinks."""

from .allocation import (
    BitAllocation,
    PowerModel,
    RelaxedAllocation,
    adc_power,
    allocate_bits,
    brute_force_allocation,
    kkt_verify,
    power_budget,
    solve_relaxed,
    solve_relaxed_numerical,
    total_msqe,
    tradeoff_rel,
)
from .beamspace import RfSnrProfile, dft_matrix, project, rf_snr_profile
from .channel import ArrayGeometry, ChannelParams, ChannelRealization, generate_channel, steering_vector
from .harness import ExperimentConfig, ResultTable, emit_csv, parse_cli, run_sweep
from .link_sim import LinkConfig, Scheme, evm, run_trial, zf_equalize
from .quantization import AqnmParams, beta, get_codebook, lloyd_max_codebook, msqe, quantize_aqnm, quantize_codebook

__version__ = "0.1.0"
