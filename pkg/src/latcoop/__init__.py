"""Lattice-coded cooperative diversity simulations.

NAF relay, modified dynamic decode-and-forward relay and two-user CMA-NAF
protocols over quasi-static Rayleigh fading, decoded with an
MMSE-DFE-preprocessed Fano tree search, plus closed-form
diversity-multiplexing analysis and a reproducible Monte Carlo harness.
"""

from .channels import (
    ChannelParams,
    CmaRealization,
    RelayRealization,
    sample_cma_realization,
    sample_relay_realization,
    snr_to_variances,
    trial_rng,
)
from .decoder import DecodeResult, DecoderConfig, fano_decode, ml_decode
from .lattice_codec import (
    ConvCode,
    LatticeCode,
    build_construction_a,
    crc_append,
    crc_check,
    enumerate_codebook,
    identity_code,
    map_to_amplitudes,
)
from .mathkit import (
    NotPositiveDefiniteError,
    PreprocessedSystem,
    embed_complex,
    embed_vector,
    inverse_sqrt,
    mmse_dfe_preprocess,
)
from .records import TrialRecord

__version__ = "0.1.0"
