"""Golden constellation and Alamouti pairing/combining.

The Golden generator follows the cyclic-division-algebra construction with
theta the golden ratio; one codeword occupies a 2x2 grid (codeword row =
symbol interval inside a cooperation frame, column = frame).
"""

import math
from typing import NamedTuple

import numpy as np

from .mathkit import embed_complex

THETA = (1.0 + math.sqrt(5.0)) / 2.0
THETA_BAR = 1.0 - THETA
ALPHA = 1.0 + 1j * THETA_BAR
ALPHA_BAR = 1.0 + 1j * THETA


class ZeroChannelError(ValueError):
    """Both combining branches are dead (g1 = g2 = 0)."""


def golden_generator() -> np.ndarray:
    """4x4 complex Golden generator, columns scaled by 1/sqrt(5).

    ``golden_generator() @ u`` for four QAM symbols ``u`` yields the
    codeword entries in column-major (frame-major) order:
    ``(x11, x21, x12, x22)`` with ``x_sf`` sent in interval ``s`` of
    frame ``f``.
    """
    s5 = 1.0 / math.sqrt(5.0)
    return s5 * np.array(
        [
            [ALPHA, ALPHA * THETA, 0, 0],
            [0, 0, 1j * ALPHA_BAR, 1j * ALPHA_BAR * THETA_BAR],
            [0, 0, ALPHA, ALPHA * THETA],
            [ALPHA_BAR, ALPHA_BAR * THETA_BAR, 0, 0],
        ],
        dtype=complex,
    )


def golden_generator_real() -> np.ndarray:
    """8x8 real representation of the Golden generator."""
    return embed_complex(golden_generator())


def golden_encode(u) -> np.ndarray:
    """Map four QAM symbols to the 2x2 dispersion layout.

    Returns the codeword matrix ``X`` with ``X[s, f]`` the symbol of
    interval ``s`` in frame ``f``.
    """
    u = np.asarray(u, dtype=complex).ravel()
    if u.size != 4:
        raise ValueError("Golden codeword consumes exactly 4 symbols")
    x = golden_generator() @ u
    return x.reshape(2, 2, order="F")


def golden_min_det(pam_size: int) -> float:
    """Exhaustive minimum |det| over nonzero codeword differences.

    Scans every integer QAM difference vector with real and imaginary parts
    in ``[-(pam_size-1), pam_size-1]`` (4-QAM -> pam_size 2, 16-QAM -> 4).
    A strictly positive result certifies the non-vanishing-determinant
    property at that constellation size.

    The generator couples (u1, u2) into codeword entries (x11, x22) and
    (u3, u4) into (x21, x12), so ``det = x11*x22 - x12*x21`` splits into an
    outer difference of two independent scans.
    """
    gen = golden_generator()
    rng = np.arange(-(pam_size - 1), pam_size)
    re, im = np.meshgrid(rng, rng, indexing="ij")
    sym = (re + 1j * im).ravel()
    pair = np.stack(np.meshgrid(sym, sym, indexing="ij"), axis=0).reshape(2, -1)
    x = gen @ np.vstack([pair, np.zeros_like(pair)])  # (u1, u2) half
    diag = x[0] * x[3]
    x = gen @ np.vstack([np.zeros_like(pair), pair])  # (u3, u4) half
    anti = x[1] * x[2]
    dets = np.abs(diag[:, None] - anti[None, :])
    zero = np.flatnonzero((pair[0] == 0) & (pair[1] == 0))[0]
    dets[zero, zero] = np.inf  # exclude the all-zero difference
    return float(dets.min())


def concat_generator(golden_real: np.ndarray, code_generator: np.ndarray, frames: int) -> np.ndarray:
    """Composite real generator of the Golden inner code with an outer lattice code.

    ``I_{frames/2} (x) G_golden_real`` times the outer generator; the outer
    code must produce ``4 * frames`` real symbols.
    """
    if frames % 2:
        raise ValueError("a Golden codeword spans two cooperation frames; need even frame count")
    m = 4 * frames
    code_generator = np.asarray(code_generator, dtype=float)
    if code_generator.shape[0] != m:
        raise ValueError(f"outer code must span {m} real symbols, got {code_generator.shape[0]}")
    inner = np.kron(np.eye(frames // 2), golden_real)
    return inner @ code_generator


class AlamoutiPair(NamedTuple):
    """Relay amplitudes for two consecutive intervals: ``(x*_{k+1}, -x*_k)``."""

    t_odd: complex
    t_even: complex


def alamouti_retransmit(x_k, x_k1) -> AlamoutiPair:
    """Conjugate pairing of the source's anticipated future symbols."""
    return AlamoutiPair(np.conj(x_k1), -np.conj(x_k))


def alamouti_combine(y_k, y_k1, g1, g2):
    """Orthogonal combining of one Alamouti pair.

    Noiseless output is ``sqrt(|g1|^2+|g2|^2) * (x_k, x_{k+1})``; the
    normalization keeps the output noise variance equal to the input noise
    variance (white across the pair).  Accepts arrays of pairs.
    """
    g1 = complex(g1)
    g2 = complex(g2)
    norm2 = abs(g1) ** 2 + abs(g2) ** 2
    if norm2 == 0:
        raise ZeroChannelError("g1 and g2 cannot both be zero")
    y_k = np.asarray(y_k, dtype=complex)
    y_k1 = np.asarray(y_k1, dtype=complex)
    scale = 1.0 / math.sqrt(norm2)
    out_k = (np.conj(g1) * y_k - g2 * np.conj(y_k1)) * scale
    out_k1 = np.conj(np.conj(g2) * y_k + g1 * np.conj(y_k1)) * scale
    return out_k, out_k1
