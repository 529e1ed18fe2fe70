"""Modified dynamic decode-and-forward relay.

The relay listens until the quantized waiting rule allows it to decode the
prefix (validated by CRC), then retransmits conjugate Alamouti pairs of the
source's remaining symbols.  The destination combines the paired segment
into a time-selective SISO channel and runs the Fano decoder over the
diagonal-channel lattice.
"""

import math
from dataclasses import dataclass

import numpy as np

from .channels import ChannelParams, RelayRealization, complex_noise
from .decoder import DecoderConfig, fano_decode
from .lattice_codec import (
    RATE_QUARTER_TAPS,
    ConvCode,
    LatticeCode,
    amplitude_scale,
    build_construction_a,
    crc_append,
    crc_check,
    crc_symbol_count,
    map_to_amplitudes,
    pack_complex,
    split_frame,
)
from .mathkit import embed_vector, mmse_dfe_preprocess
from .records import TrialRecord, symbol_bit_errors

DEFAULT_FRACTIONS = (0.5, 2.0 / 3.0)


@dataclass(frozen=True)
class DdfConfig:
    """Codeword geometry and coding parameters of the DDF relay."""

    subblocks: int = 12
    symbols_per_subblock: int = 8
    q: int = 17
    fractions: tuple = DEFAULT_FRACTIONS
    taps: tuple = RATE_QUARTER_TAPS

    def __post_init__(self):
        fr = np.asarray(self.fractions, dtype=float)
        if np.any(fr <= 0) or np.any(fr >= 1) or np.any(np.diff(fr) <= 0) or fr[0] < 0.5:
            raise ValueError("fractions must be increasing in [1/2, 1)")
        for f in fr:
            if abs(f * self.subblocks - round(f * self.subblocks)) > 1e-9:
                raise ValueError("fraction boundaries must land on sub-block boundaries")
        if (self.channel_uses * 2) % (1 + len(self.taps)):
            raise ValueError("codeword length must fit the code rate")
        for f in fr:
            if ((self.subblocks - round(f * self.subblocks)) * self.symbols_per_subblock) % 2:
                raise ValueError("relay segments must contain whole Alamouti pairs")

    @property
    def channel_uses(self) -> int:
        return self.subblocks * self.symbols_per_subblock

    @property
    def real_dims(self) -> int:
        return 2 * self.channel_uses

    @property
    def trellis_steps(self) -> int:
        return self.real_dims // (1 + len(self.taps))

    def build_code(self) -> LatticeCode:
        cc = ConvCode(q=self.q, taps=self.taps)
        return build_construction_a(cc, self.real_dims, interleave="stream")

    @property
    def info_symbols(self) -> int:
        cc_memory = len(self.taps[0]) - 1
        return self.trellis_steps - cc_memory

    @property
    def payload_symbols(self) -> int:
        return self.info_symbols - crc_symbol_count(self.q)

    @property
    def rate_bpcu(self) -> float:
        """Rate carried by the decoded stream (payload + CRC symbols)."""
        return self.info_symbols * math.log2(self.q) / self.channel_uses

    @property
    def payload_rate_bpcu(self) -> float:
        return self.payload_symbols * math.log2(self.q) / self.channel_uses

    @property
    def allowed_waits(self) -> tuple:
        waits = [round(f * self.subblocks) for f in self.fractions]
        return tuple(waits) + (self.subblocks,)


def required_wait(rate: float, h2: float, c: float, rho: float, subblocks: int) -> float:
    """Sub-blocks the relay must listen: ``min{M, max{M/2, ceil(MR/log2(1+|h|^2 c rho))}}``."""
    gain = h2 * c * rho
    if gain <= 0:
        return float(subblocks)
    denom = math.log2(1.0 + gain)
    need = math.ceil(subblocks * rate / denom)
    return float(min(subblocks, max(subblocks / 2.0, need)))


def quantize_wait(req: float, fractions, subblocks: int) -> int:
    """Smallest allowed boundary ``f_j * M >= req``, else M (relay stays silent)."""
    for f in fractions:
        boundary = round(f * subblocks)
        if boundary >= req - 1e-9:
            return int(boundary)
    return int(subblocks)


def _siso_preprocess(gains, y_rot, code: LatticeCode, sigma2: float):
    """Normalized search system for a per-symbol real-gain diagonal channel.

    ``gains`` holds one nonnegative real gain per observed complex symbol
    (observations already phase-derotated); rows of the code generator are
    scaled accordingly and everything is normalized to unit real noise.
    """
    gains = np.asarray(gains, dtype=float)
    kappa = amplitude_scale(code.q)
    # zero-noise runs skip normalization and keep a vestigial regularizer
    sigma = math.sqrt(sigma2) if sigma2 > 0 else 1.0
    nts = kappa * kappa if sigma2 > 0 else kappa * kappa * 1e-6
    rows = 2 * gains.size
    d = np.repeat(gains, 2) * (kappa / sigma)
    channel = d[:, None] * code.generator[:rows, :]
    y_n = embed_vector(y_rot) * (math.sqrt(2.0) / sigma)
    adjusted = y_n + d * ((code.q - 1) / 2.0)
    return mmse_dfe_preprocess(channel, nts, adjusted, prior_mean=code.coordinate_means)


def _derotate(y, gain):
    mag = abs(gain)
    if mag == 0:
        return np.zeros_like(np.asarray(y, dtype=complex)), 0.0
    return np.asarray(y, dtype=complex) * (np.conj(gain) / mag), mag


def relay_decode_attempt(y_prefix, h, code: LatticeCode, sigma_w2: float,
                         decoder: DecoderConfig):
    """Fano decode of a codeword prefix at the relay, validated by CRC.

    Returns ``(frame_or_None, nodes)``; ``None`` means CRC reject.
    """
    y_rot, mag = _derotate(y_prefix, h)
    gains = np.full(len(y_rot), mag)
    system = _siso_preprocess(gains, y_rot, code, sigma_w2)
    result = fano_decode(system, decoder, code)
    info = code.info_part(result.u)
    frame = split_frame(info, code.q)
    if np.all(info >= 0) and np.all(info < code.q) and crc_check(frame, code.q):
        return frame, result.nodes
    return None, result.nodes


def destination_decode(y, g1, g2, wait_subblocks: int, cfg: DdfConfig, code: LatticeCode,
                       sigma_v2: float, decoder: DecoderConfig):
    """Combine the Alamouti segment and decode the time-selective SISO channel.

    The destination is told ``wait_subblocks`` (overhead bits in the paper,
    a genie side channel here).
    """
    from .spacetime import alamouti_combine

    uses = cfg.channel_uses
    split = wait_subblocks * cfg.symbols_per_subblock
    y = np.asarray(y, dtype=complex)
    head_rot, mag1 = _derotate(y[:split], g1)
    if split < uses:
        comb_k, comb_k1 = alamouti_combine(y[split::2], y[split + 1::2], g1, g2)
        tail = np.empty(uses - split, dtype=complex)
        tail[0::2] = comb_k
        tail[1::2] = comb_k1
        tail_gain = math.sqrt(abs(g1) ** 2 + abs(g2) ** 2)
    else:
        tail = np.empty(0, dtype=complex)
        tail_gain = 0.0
    gains = np.concatenate([np.full(split, mag1), np.full(uses - split, tail_gain)])
    y_eff = np.concatenate([head_rot, tail])
    system = _siso_preprocess(gains, y_eff, code, sigma_v2)
    return fano_decode(system, decoder, code)


def simulate_ddf_trial(cfg: DdfConfig, params: ChannelParams, realization: RelayRealization,
                       payload, rng: np.random.Generator,
                       decoder: DecoderConfig = DecoderConfig()) -> TrialRecord:
    """One DDF codeword: source encode, relay wait/decode loop, Alamouti phase,
    destination combine + decode."""
    code = cfg.build_code()
    payload = np.asarray(payload, dtype=np.int64)
    if payload.size != cfg.payload_symbols:
        raise ValueError(f"payload must have {cfg.payload_symbols} symbols")
    frame = crc_append(payload, cfg.q)
    _, x_sym = code.encode_info(frame.symbols)
    x = pack_complex(map_to_amplitudes(x_sym, cfg.q))

    uses = cfg.channel_uses
    g1, g2, h = realization.g1, realization.g2, realization.h

    # relay listen/decode loop over the allowed instants
    req = required_wait(cfg.rate_bpcu, abs(h) ** 2, params.c, params.rho, cfg.subblocks)
    first = quantize_wait(req, cfg.fractions, cfg.subblocks)
    w = complex_noise(uses, params.sigma_w2, rng)
    relay_frame = None
    wait = cfg.subblocks
    nodes = 0
    for boundary in cfg.allowed_waits:
        if boundary < first:
            continue
        if boundary >= cfg.subblocks:
            break
        prefix = boundary * cfg.symbols_per_subblock
        y_relay = h * x[:prefix] + w[:prefix]
        decoded, used = relay_decode_attempt(y_relay, h, code, params.sigma_w2, decoder)
        nodes += used
        if decoded is not None:
            relay_frame = decoded
            wait = boundary
            break

    # destination observations
    v = complex_noise(uses, params.sigma_v2, rng)
    y = g1 * x + v
    if relay_frame is not None:
        _, relay_sym = code.encode_info(relay_frame.symbols)
        x_relay = pack_complex(map_to_amplitudes(relay_sym, cfg.q))
        start = wait * cfg.symbols_per_subblock
        y[start::2] += g2 * np.conj(x_relay[start + 1::2])
        y[start + 1::2] += g2 * (-np.conj(x_relay[start::2]))

    result = destination_decode(y, g1, g2, wait, cfg, code, params.sigma_v2, decoder)
    nodes += result.nodes
    decoded_info = code.info_part(result.u)
    decoded_payload = decoded_info[:cfg.payload_symbols]
    frame_error = not np.array_equal(decoded_payload, payload)
    bit_errors, total_bits = symbol_bit_errors(decoded_payload, payload, cfg.q)
    return TrialRecord(
        frame_error=frame_error,
        bit_errors=bit_errors,
        total_bits=total_bits,
        decoder_nodes=nodes,
        wait_fraction=wait / cfg.subblocks,
        out_of_set=not code.in_codebook(result.u),
        decoder_exhausted=not result.converged,
    )
