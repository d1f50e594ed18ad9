"""Uplink data detection toolkit for massive MIMO with 1-bit ADCs.

Simulates the quantized uplink (pilot and data phases), estimates
channels with the Bussgang LMMSE estimator, evaluates the closed-form
expectation of MRC soft-estimated symbols under correlated Rayleigh
fading, and runs minimum-distance detection strategies against seeded
Monte-Carlo oracles.
"""

from ._kernels import backend
from .airlink import (
    PilotBlock,
    ReceivedBlock,
    mrc_soft_symbols,
    quantize,
    uplink_data_block,
    uplink_pilot_block,
)
from .blmmse import (
    EstimatorState,
    build_estimator,
    crp_closed_form,
    cyp_diag,
    estimate,
    state_key,
)
from .channel import (
    ChannelRealization,
    CovarianceSet,
    export_covariances_csv,
    one_ring_covariance,
    sample_channel_batch,
    sample_channels,
    scenario_covariances,
)
from .config import SystemConfig
from .constellation import Constellation, by_name, make_qam16, make_qpsk, nearest
from .detectors import (
    DetectionResult,
    detect_exhaustive,
    detect_genie,
    detect_heuristic,
)
from .errors import ConfigError, ConsistencyError
from .harness import (
    ExperimentConfig,
    ScatterResult,
    SerResult,
    ValidationReport,
    derive_rng,
    run_scatter,
    run_ser,
    validate,
)
from .pilots import PilotMatrix, dft_pilot_matrix, expand, pilot_matrix, zadoff_chu
from .theorem1 import (
    ExpectationTable,
    ScalarKernels,
    Theorem1Context,
    alpha_vector,
    beta_vector,
    build_expectation_table,
    crrp_closed_form,
    decode_digits,
    encode_digits,
    eta,
    expected_soft_symbol,
    make_context,
    omega,
    scalar_kernels,
    zeta,
)

__version__ = "0.1.0"
