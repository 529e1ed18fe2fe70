"""Two-user cooperative multiple access with non-orthogonal AF relaying.

Each source alternates transmissions of ``a * own symbol + b * (noisy
partner echo)``; the destination sees an upper-triangular effective channel
with geometrically-weighted echoes and colored noise, which is whitened
before the joint two-user lattice is searched by the Fano decoder.
"""

import math
from dataclasses import dataclass

import numpy as np

from .channels import ChannelParams, CmaRealization, complex_noise
from .decoder import DecoderConfig, fano_decode
from .lattice_codec import (
    LatticeCode,
    amplitude_scale,
    map_to_amplitudes,
    pack_complex,
)
from .mathkit import embed_complex, embed_vector, inverse_sqrt, mmse_dfe_preprocess
from .records import TrialRecord, symbol_bit_errors


@dataclass(frozen=True)
class CmaGains:
    """Broadcast gain ``a`` and repetition gain ``b`` shared by both sources."""

    a: float
    b: float

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValueError("gains must be nonnegative")


@dataclass(frozen=True)
class CmaSystem:
    """Effective destination-order system: ``y = H1 x1 + B w + v``."""

    h1: np.ndarray
    b_mat: np.ndarray
    sigma: np.ndarray
    d_g: np.ndarray


def generate_signals(gains: CmaGains, realization: CmaRealization, x1, x2,
                     params: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    """Run the startup/echo recursion and return the destination observations.

    ``x1``/``x2`` are the per-source symbol streams in time order (one per
    cooperation frame).  The returned vector is in destination order
    (latest transmission first, source 2 before source 1 inside a frame),
    matching :func:`build_cma_system`.
    """
    x1 = np.asarray(x1, dtype=complex)
    x2 = np.asarray(x2, dtype=complex)
    if x1.size != x2.size:
        raise ValueError("user streams must have equal length")
    frames = x1.size
    n = 2 * frames
    a, b = gains.a, gains.b
    g = (realization.g1, realization.g2)
    h = realization.h
    w = complex_noise(n, params.sigma_w2, rng)
    v = complex_noise(n, params.sigma_v2, rng)
    y_time = np.empty(n, dtype=complex)
    t_prev = 0.0 + 0.0j
    for s in range(n):
        own = x1[s // 2] if s % 2 == 0 else x2[s // 2]
        if s == 0:
            t = a * own
        else:
            t = a * own + b * (h * t_prev + w[s])
        y_time[s] = g[s % 2] * t + v[s]
        t_prev = t
    return y_time[::-1].copy()


def mux_time_to_dest(x1, x2) -> np.ndarray:
    """Interleave per-source streams into the destination symbol order."""
    x1 = np.asarray(x1)
    x2 = np.asarray(x2)
    n = x1.size + x2.size
    out = np.empty(n, dtype=x1.dtype)
    out[1::2] = x1[::-1]
    out[0::2] = x2[::-1]
    return out


def build_cma_system(gains: CmaGains, realization: CmaRealization, n_uses: int,
                     params: ChannelParams) -> CmaSystem:
    """Effective upper-triangular channel, noise mixing matrix and covariance."""
    if n_uses % 2:
        raise ValueError("codeword must contain whole cooperation frames")
    a, b = gains.a, gains.b
    bh = b * realization.h
    d_g = np.empty(n_uses, dtype=complex)
    d_g[0::2] = realization.g2
    d_g[1::2] = realization.g1
    idx = np.arange(n_uses)
    expo = idx[None, :] - idx[:, None]
    toep = np.where(expo >= 0, bh ** np.maximum(expo, 0), 0.0)
    h1 = a * d_g[:, None] * toep
    b_mat = b * d_g[:, None] * toep[:, 1:]
    b_mat[-1, :] = 0.0
    sigma = params.sigma_w2 * (b_mat @ b_mat.conj().T) + params.sigma_v2 * np.eye(n_uses)
    return CmaSystem(h1=h1, b_mat=b_mat, sigma=sigma, d_g=d_g)


def whiten(system: CmaSystem, y):
    """Whitened observation and channel: residual noise covariance is I."""
    w = inverse_sqrt(system.sigma)
    return w @ system.h1, w @ np.asarray(y, dtype=complex)


def joint_generator(code1: LatticeCode, code2: LatticeCode, n_uses: int) -> np.ndarray:
    """Real generator of both users' lattices in destination row order.

    Rows follow the destination symbol order (real pairs per complex
    symbol); columns stay per-user (user 1 coordinates first), so decoded
    points demultiplex by splitting.
    """
    m_u = n_uses  # real dims per user
    if code1.dim != m_u or code2.dim != m_u:
        raise ValueError(f"user codes must span {m_u} real symbols each")
    block = np.zeros((2 * m_u, 2 * m_u))
    block[:m_u, :m_u] = code1.generator
    block[m_u:, m_u:] = code2.generator
    frames = n_uses // 2
    row_map = np.empty(2 * n_uses, dtype=np.int64)
    for p in range(n_uses):
        user2 = p % 2 == 0
        f = frames - 1 - p // 2
        src = (m_u if user2 else 0) + 2 * f
        row_map[2 * p] = src
        row_map[2 * p + 1] = src + 1
    return block[row_map, :]


def demux_joint(u_joint, n_uses: int):
    u_joint = np.asarray(u_joint)
    return u_joint[:n_uses], u_joint[n_uses:]


def _joint_search_system(gains, realization, n_uses, params, g_joint, q):
    """Whitened, real-embedded, normalized search matrix and offset."""
    kappa = amplitude_scale(q)
    nts = kappa * kappa
    if params.sigma_v2 <= 0:
        # zero-noise runs: any whitener preserves the noiseless relation,
        # and the regularizer becomes vestigial
        from dataclasses import replace
        params = replace(params, sigma_v2=1.0)
        nts *= 1e-6
    system = build_cma_system(gains, realization, n_uses, params)
    w = inverse_sqrt(system.sigma)
    front = embed_complex(w @ system.h1)
    matrix = kappa * (front @ g_joint)
    offset = kappa * ((q - 1) / 2.0) * (front @ np.ones(2 * n_uses))
    return w, matrix, offset, nts


def simulate_cma_trial(gains: CmaGains, params: ChannelParams, realization: CmaRealization,
                       code1: LatticeCode, code2: LatticeCode, payload1, payload2,
                       rng: np.random.Generator,
                       decoder: DecoderConfig = DecoderConfig()) -> TrialRecord:
    """One joint codeword: encode both users, run the echo recursion, whiten,
    search the joint lattice and demultiplex."""
    if code1.q != code2.q:
        raise ValueError("user codes must share one symbol alphabet")
    n_uses = code1.dim
    _, sym1 = code1.encode_info(np.asarray(payload1, dtype=np.int64))
    _, sym2 = code2.encode_info(np.asarray(payload2, dtype=np.int64))
    x1 = pack_complex(map_to_amplitudes(sym1, code1.q))
    x2 = pack_complex(map_to_amplitudes(sym2, code2.q))
    y = generate_signals(gains, realization, x1, x2, params, rng)

    g_joint = joint_generator(code1, code2, n_uses)
    w, matrix, offset, nts = _joint_search_system(
        gains, realization, n_uses, params, g_joint, code1.q)
    y_n = math.sqrt(2.0) * embed_vector(w @ y) + offset
    prior = np.concatenate([code1.coordinate_means, code2.coordinate_means])
    system = mmse_dfe_preprocess(matrix, nts, y_n, prior_mean=prior)
    result = fano_decode(system, decoder)

    u1, u2 = demux_joint(result.u, n_uses)
    dec1 = code1.generator @ u1
    dec2 = code2.generator @ u2
    frame_error = not (np.array_equal(dec1, sym1) and np.array_equal(dec2, sym2))
    be1, tb1 = symbol_bit_errors(code1.info_part(u1), np.asarray(payload1), code1.q)
    be2, tb2 = symbol_bit_errors(code2.info_part(u2), np.asarray(payload2), code2.q)
    return TrialRecord(
        frame_error=frame_error,
        bit_errors=be1 + be2,
        total_bits=tb1 + tb2,
        decoder_nodes=result.nodes,
        out_of_set=not (code1.in_codebook(u1) and code2.in_codebook(u2)),
        decoder_exhausted=not result.converged,
    )


# ---------------------------------------------------------------------------
# gain selection
# ---------------------------------------------------------------------------

def measure_power(gains: CmaGains, params: ChannelParams, n_uses: int, draws: int,
                  rng: np.random.Generator) -> float:
    """Monte Carlo steady-state transmit power per source.

    Runs the echo recursion with unit-energy Gaussian symbols and fresh
    channel/noise draws, averaging ``|t|^2`` over the second half of the
    codeword (startup excluded).
    """
    a, b = gains.a, gains.b
    h = (rng.standard_normal(draws) + 1j * rng.standard_normal(draws)) / math.sqrt(2.0)
    w = complex_noise((draws, n_uses), params.sigma_w2, rng)
    x = (rng.standard_normal((draws, n_uses)) +
         1j * rng.standard_normal((draws, n_uses))) / math.sqrt(2.0)
    t = a * x[:, 0]
    total = 0.0
    count = 0
    for s in range(1, n_uses):
        t = a * x[:, s] + b * (h * t + w[:, s])
        if s >= n_uses // 2:
            total += float(np.sum(np.abs(t) ** 2))
            count += draws
    return total / count


def _batched_outage(a: float, b: float, g1, g2, h, params: ChannelParams,
                    n_uses: int, rate: float) -> float:
    """Outage of the whitened linear system: log-det mutual information
    against ``n_uses * rate`` bits."""
    draws = g1.size
    idx = np.arange(n_uses)
    expo = idx[None, :] - idx[:, None]
    mask = expo >= 0
    bh = b * h
    toep = np.where(mask[None], bh[:, None, None] ** np.maximum(expo, 0)[None], 0.0)
    d_g = np.empty((draws, n_uses), dtype=complex)
    d_g[:, 0::2] = g2[:, None]
    d_g[:, 1::2] = g1[:, None]
    h1 = a * d_g[:, :, None] * toep
    b_mat = b * d_g[:, :, None] * toep[:, :, 1:]
    b_mat[:, -1, :] = 0.0
    eye = np.eye(n_uses)
    sigma = params.sigma_w2 * (b_mat @ np.conj(np.swapaxes(b_mat, 1, 2))) + params.sigma_v2 * eye
    gram = sigma + h1 @ np.conj(np.swapaxes(h1, 1, 2))
    _, logdet_num = np.linalg.slogdet(gram)
    _, logdet_den = np.linalg.slogdet(sigma)
    info = (logdet_num - logdet_den) / math.log(2.0)
    return float(np.mean(info < n_uses * rate))


def optimize_gains(params: ChannelParams, n_uses: int, rate: float, trials: int,
                   rng: np.random.Generator, power_draws: int = 1000,
                   coarse_step: float = 0.05, energy_tolerance: float = 0.01):
    """Grid search for the outage-minimizing power-feasible (a, b) pair.

    Coarse grid in steps of ``coarse_step`` over the power-feasible set,
    refined once around the argmin.  Returns ``(CmaGains, outage)``.
    """
    g1 = (rng.standard_normal(trials) + 1j * rng.standard_normal(trials)) / math.sqrt(2.0)
    g2 = (rng.standard_normal(trials) + 1j * rng.standard_normal(trials)) / math.sqrt(2.0)
    h = (rng.standard_normal(trials) + 1j * rng.standard_normal(trials)) / math.sqrt(2.0)
    budget = params.energy * (1.0 + energy_tolerance)
    power_rng = np.random.default_rng(rng.integers(2 ** 63))

    def feasible(a, b):
        if a == 0 and b == 0:
            return True
        gains = CmaGains(a, b)
        return measure_power(gains, params, n_uses, power_draws, power_rng) <= budget

    def search(a_vals, b_vals):
        best = None
        for a in a_vals:
            for b in b_vals:
                if not feasible(a, b):
                    continue
                out = _batched_outage(a, b, g1, g2, h, params, n_uses, rate)
                if best is None or out < best[2]:
                    best = (a, b, out)
        return best

    a_grid = np.round(np.arange(coarse_step, 1.0 + 1e-9, coarse_step), 10)
    b_grid = np.round(np.arange(0.0, 1.0 + 1e-9, coarse_step), 10)
    best = search(a_grid, b_grid)
    if best is None:
        raise RuntimeError("no power-feasible gain pair on the grid")
    fine = coarse_step / 4.0
    a_fine = np.round(np.arange(max(fine, best[0] - coarse_step), best[0] + coarse_step + 1e-9, fine), 10)
    b_fine = np.round(np.arange(max(0.0, best[1] - coarse_step), best[1] + coarse_step + 1e-9, fine), 10)
    refined = search(a_fine, b_fine)
    if refined is not None and refined[2] <= best[2]:
        best = refined
    return CmaGains(best[0], best[1]), best[2]
