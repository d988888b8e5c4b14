"""Adaptive compressive channel estimation for mmWave MIMO links.

Random-beam measurements, Bernoulli-Gaussian GAMP recovery of the virtual
(beam-domain) channel, a support-stability stopping rule, fixed-budget and
exhaustive baselines, and a seeded Monte Carlo harness.
"""
from .codebook import Codebook, Side, build_codebook, grid_angles, quantized_phase_set
from .controller import (
    EstimationOutcome,
    MeasurementSession,
    Scheme,
    StoppingConfig,
    StopReason,
    binarize,
    binarize_at,
    deep_fade_threshold,
    has_converged,
    regenerate_bs_sequence,
    run_exhaustive,
    run_fnrb,
    run_swift,
)
from .errors import ConfigurationError, EstimatorError, ProtocolError, SwiftError
from .evaluation import BeamAssignment, RateReport, achievable_rate, effective_rate, feedback_bits, rate_report, select_comm_beams
from .gamp import BgPrior, GampConfig, VirtualChannelEstimate, denoise_input, exact_mmse_oracle, gamp, gamp_estimate
from .geometry import (
    ChannelRealization,
    PathParameters,
    SystemDims,
    assemble_channel,
    draw_channel,
    steering_vector,
    unvec,
    vec,
    virtual_channel,
)
from .harness import (
    ExperimentConfig,
    SchemeSpec,
    TrialResult,
    aggregate,
    emit_csv,
    format_csv,
    load_config,
    run_sweep,
    run_trial,
)
from .measurement import MeasurementLedger, MeasurementRecord, TrialSeeds, observe, sensing_block

__version__ = "0.1.0"
