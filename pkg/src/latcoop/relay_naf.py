"""Non-orthogonal amplify-and-forward relay with Golden-constellation coding.

The source transmits every interval; the relay repeats its noisy first-slot
observation once per two-interval cooperation frame.  After whitening the
second slot, the destination sees an effective 2x2 MIMO channel and decodes
the Golden constellation (optionally concatenated with an outer systematic
CC lattice) with the MMSE-DFE Fano decoder.
"""

import math
from dataclasses import dataclass

import numpy as np

from .channels import ChannelParams, RelayRealization, complex_noise
from .decoder import DecoderConfig, fano_decode
from .lattice_codec import (
    RATE_HALF_TAPS,
    ConvCode,
    LatticeCode,
    amplitude_scale,
    build_construction_a,
    identity_code,
    map_to_amplitudes,
    pack_complex,
)
from .mathkit import embed_complex, embed_vector, mmse_dfe_preprocess
from .records import TrialRecord, symbol_bit_errors
from .spacetime import golden_generator_real

MODE_GOLDEN = "gc"
MODE_GOLDEN_CC = "gc+cc"

#: QAM sizes per real dimension for the Golden-only rates of interest
PAM_PER_RATE = {2: 2, 4: 4, 6: 8}
#: primes matching those rates for the concatenated lattice code
PRIME_PER_RATE = {2: 5, 4: 17, 6: 67}


@dataclass(frozen=True)
class NafConfig:
    """Coding mode and codeword geometry of the NAF relay link."""

    rate_bpcu: int = 2
    mode: str = MODE_GOLDEN
    frames: int = 32
    taps: tuple = RATE_HALF_TAPS

    def __post_init__(self):
        if self.mode not in (MODE_GOLDEN, MODE_GOLDEN_CC):
            raise ValueError(f"unknown coding mode {self.mode!r}")
        if self.rate_bpcu not in PAM_PER_RATE:
            raise ValueError("supported rate classes: 2, 4, 6 BPCU")
        if self.frames % 2:
            raise ValueError("Golden codewords span two cooperation frames")

    @property
    def channel_uses(self) -> int:
        return 2 * self.frames

    @property
    def real_dims(self) -> int:
        return 4 * self.frames

    @property
    def q(self) -> int:
        return PAM_PER_RATE[self.rate_bpcu] if self.mode == MODE_GOLDEN \
            else PRIME_PER_RATE[self.rate_bpcu]

    def build_code(self) -> LatticeCode:
        if self.mode == MODE_GOLDEN:
            return identity_code(self.q, self.real_dims)
        cc = ConvCode(q=self.q, taps=self.taps)
        return build_construction_a(cc, self.real_dims, interleave="step")

    @property
    def payload_symbols(self) -> int:
        code = self.build_code()
        return code.info_dim

    @property
    def achieved_rate_bpcu(self) -> float:
        return self.payload_symbols * math.log2(self.q) / self.channel_uses


def max_power_repetition_gain(h: complex, sigma_w2: float, energy: float = 1.0) -> float:
    """Repetition gain using the full relay power budget:
    ``b = sqrt(E / (|h|^2 E + sigma_w^2))``."""
    return math.sqrt(energy / (abs(h) ** 2 * energy + sigma_w2))


def build_effective_channel(g1: complex, g2: complex, h: complex, b: float, c: float) -> np.ndarray:
    """Whitened 2x2 MIMO channel of one cooperation frame.

    Row scaling ``sqrt(c / (|g2 b|^2 + c))`` restores the second-slot noise
    (relay-amplified plus destination) to the destination variance.
    """
    if c <= 0:
        raise ValueError("noise ratio c must be positive")
    s = math.sqrt(c / (abs(g2 * b) ** 2 + c))
    return np.array([[g1, 0.0], [s * g2 * b * h, s * g1]], dtype=complex)


def composite_system(cfg: NafConfig, h_eff: np.ndarray, code: LatticeCode, sigma_v2: float):
    """Normalized real channel-code matrix and the observation offset.

    Returns ``(matrix, offset, nts)`` so that a whitened, stacked real
    observation y satisfies ``y * sqrt(2)/sigma_v + offset = matrix @ u + noise``
    with unit-variance real noise.
    """
    kappa = amplitude_scale(code.q)
    sigma = math.sqrt(sigma_v2) if sigma_v2 > 0 else 1.0
    nts = kappa * kappa if sigma_v2 > 0 else kappa * kappa * 1e-6
    front = np.kron(np.eye(cfg.frames), embed_complex(h_eff)) @ \
        np.kron(np.eye(cfg.frames // 2), golden_generator_real())
    matrix = (kappa / sigma) * (front @ code.generator)
    offset = (kappa / sigma) * ((code.q - 1) / 2.0) * (front @ np.ones(cfg.real_dims))
    return matrix, offset, nts


def transmit_symbols(cfg: NafConfig, code: LatticeCode, payload) -> np.ndarray:
    """Source symbols per interval: Golden blocks over the coded amplitudes."""
    _, x_sym = code.encode_info(np.asarray(payload, dtype=np.int64))
    qam = pack_complex(map_to_amplitudes(x_sym, code.q))
    gr = golden_generator_real()
    out = np.empty(cfg.channel_uses, dtype=complex)
    for blk in range(cfg.frames // 2):
        block_real = gr @ embed_vector(qam[4 * blk:4 * blk + 4])
        out[4 * blk:4 * blk + 4] = block_real[0::2] + 1j * block_real[1::2]
    return out


def simulate_naf_trial(cfg: NafConfig, params: ChannelParams, realization: RelayRealization,
                       payload, rng: np.random.Generator,
                       decoder: DecoderConfig = DecoderConfig()) -> TrialRecord:
    """One NAF codeword, generated frame by frame from the scalar equations."""
    code = cfg.build_code()
    payload = np.asarray(payload, dtype=np.int64)
    x = transmit_symbols(cfg, code, payload)
    g1, g2, h = realization.g1, realization.g2, realization.h
    b = max_power_repetition_gain(h, params.sigma_w2, params.energy)

    # scalar per-frame equations: slot 1 direct, slot 2 direct + relayed echo
    x1 = x[0::2]
    x2 = x[1::2]
    v = complex_noise((2, cfg.frames), params.sigma_v2, rng)
    w = complex_noise(cfg.frames, params.sigma_w2, rng)
    y1 = g1 * x1 + v[0]
    y2 = g1 * x2 + g2 * b * (h * x1 + w) + v[1]

    # destination whitens the second slot and stacks the frame observations
    s = math.sqrt(params.c / (abs(g2 * b) ** 2 + params.c))
    y = np.empty(cfg.channel_uses, dtype=complex)
    y[0::2] = y1
    y[1::2] = s * y2

    h_eff = build_effective_channel(g1, g2, h, b, params.c)
    matrix, offset, nts = composite_system(cfg, h_eff, code, params.sigma_v2)
    sigma = math.sqrt(params.sigma_v2) if params.sigma_v2 > 0 else 1.0
    y_n = embed_vector(y) * (math.sqrt(2.0) / sigma) + offset
    system = mmse_dfe_preprocess(matrix, nts, y_n, prior_mean=code.coordinate_means)
    result = fano_decode(system, decoder, code)

    decoded = code.info_part(result.u)
    frame_error = not np.array_equal(decoded, payload)
    bit_errors, total_bits = symbol_bit_errors(decoded, payload, code.q)
    return TrialRecord(
        frame_error=frame_error,
        bit_errors=bit_errors,
        total_bits=total_bits,
        decoder_nodes=result.nodes,
        out_of_set=not code.in_codebook(result.u),
        decoder_exhausted=not result.converged,
    )
