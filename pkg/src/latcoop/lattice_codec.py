"""Construction-A lattice codes from systematic convolutional codes over Z_Q.

Hypercubic shaping, CRC-16 framing and the symbol-to-amplitude map used by
every transmitter in the package.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np


class OutOfShapingRegionError(ValueError):
    """Information vector lies outside the hypercubic information set."""


class CodebookTooLargeError(ValueError):
    """Enumeration request exceeds the stated size budget."""


# ---------------------------------------------------------------------------
# systematic convolutional codes over Z_Q
# ---------------------------------------------------------------------------

#: default parity taps, memory 2 (short memory keeps the search tree shallow)
RATE_HALF_TAPS = ((1, 2, 1),)
RATE_QUARTER_TAPS = ((1, 2, 1), (1, 1, 2), (2, 1, 1))


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, int(math.isqrt(n)) + 1))


@dataclass(frozen=True)
class ConvCode:
    """Systematic convolutional code over Z_Q, zero-terminated.

    ``taps`` holds one coefficient tuple per parity stream; stream ``l``
    outputs ``sum_d taps[l][d] * u[t-d] mod Q``.  The systematic stream is
    implicit, so the rate is ``1/(1+len(taps))``.
    """

    q: int
    taps: tuple = RATE_HALF_TAPS

    def __post_init__(self):
        object.__setattr__(self, "taps", tuple(tuple(int(c) % self.q for c in t) for t in self.taps))
        lens = {len(t) for t in self.taps}
        if len(lens) != 1:
            raise ValueError("all parity tap sets must share one memory length")

    @property
    def streams(self) -> int:
        return 1 + len(self.taps)

    @property
    def memory(self) -> int:
        return len(self.taps[0]) - 1

    def encode(self, info) -> np.ndarray:
        """Encode ``info`` (plus the zero tail) into ``streams x steps`` symbols."""
        info = np.asarray(info, dtype=np.int64)
        if np.any(info < 0) or np.any(info >= self.q):
            raise ValueError("information symbols must lie in [0, Q)")
        steps = info.size + self.memory
        padded = np.zeros(steps + self.memory, dtype=np.int64)
        padded[self.memory:self.memory + info.size] = info
        out = np.zeros((self.streams, steps), dtype=np.int64)
        out[0] = padded[self.memory:]
        for l, tap in enumerate(self.taps, start=1):
            acc = np.zeros(steps, dtype=np.int64)
            for d, coeff in enumerate(tap):
                acc += coeff * padded[self.memory - d:self.memory - d + steps]
            out[l] = acc % self.q
        return out


# ---------------------------------------------------------------------------
# construction-A lattice codes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LatticeCode:
    """Integer lattice generator plus hypercubic information-set bounds.

    The codebook is ``{G u + eta : u in info set}``; for construction-A
    codes ``G`` reduces mod Q to (a row permutation of) the systematic code
    generator and ``det G = +-Q**(m-k)``.
    """

    generator: np.ndarray
    translate: np.ndarray
    q: int
    info_lower: np.ndarray
    info_upper: np.ndarray
    info_dim: int
    info_positions: np.ndarray = field(default=None)

    @property
    def dim(self) -> int:
        return self.generator.shape[0]

    @property
    def coordinate_means(self) -> np.ndarray:
        """Midpoints of the per-coordinate information intervals."""
        return (self.info_lower + self.info_upper) / 2.0

    def fold(self, info) -> np.ndarray:
        """Complete information symbols to the canonical lattice coordinates.

        The trailing ``m - k`` fold coordinates are the unique integers that
        reduce every symbol of ``G u`` into ``[0, Q)``.
        """
        info = np.asarray(info, dtype=np.int64)
        if info.size != self.info_dim:
            raise ValueError(f"expected {self.info_dim} information symbols")
        if np.any(info < self.info_lower[:self.info_dim]) or np.any(info > self.info_upper[:self.info_dim]):
            raise OutOfShapingRegionError("information symbols outside hypercube")
        partial = self.generator[:, :self.info_dim] @ info
        u = np.concatenate([info, np.zeros(self.dim - self.info_dim, dtype=np.int64)])
        if self.dim > self.info_dim:
            fold_rows = self._fold_rows()
            u[self.info_dim:] = -(partial[fold_rows] // self.q)
        return u

    def _fold_rows(self) -> np.ndarray:
        # row touched by each fold column (entry Q)
        cols = self.generator[:, self.info_dim:]
        return np.argmax(cols != 0, axis=0)

    def encode(self, u) -> np.ndarray:
        """Codeword ``G u + eta`` for ``u`` inside the information set."""
        u = np.asarray(u, dtype=np.int64)
        if u.size != self.dim:
            raise ValueError(f"expected {self.dim} coordinates")
        if np.any(u < self.info_lower) or np.any(u > self.info_upper):
            raise OutOfShapingRegionError("coordinates outside the information set")
        return self.generator @ u + self.translate

    def encode_info(self, info):
        """Canonical ``(u, x)`` pair for a block of information symbols."""
        u = self.fold(info)
        return u, self.generator @ u + self.translate

    def in_codebook(self, u) -> bool:
        """True when ``G u`` lands inside the shaping hypercube ``[0, Q)^m``."""
        x = self.generator @ np.asarray(u, dtype=np.int64)
        return bool(np.all(x >= 0) and np.all(x <= self.q - 1))

    def info_part(self, u) -> np.ndarray:
        return np.asarray(u, dtype=np.int64)[:self.info_dim]


def identity_code(q: int, dim: int) -> LatticeCode:
    """Uncoded hypercubic lattice: ``G = I``, symbols in ``[0, q)``."""
    return LatticeCode(
        generator=np.eye(dim, dtype=np.int64),
        translate=np.zeros(dim),
        q=q,
        info_lower=np.zeros(dim, dtype=np.int64),
        info_upper=np.full(dim, q - 1, dtype=np.int64),
        info_dim=dim,
        info_positions=np.arange(dim),
    )


def build_construction_a(cc: ConvCode, length: int, interleave: str = "step") -> LatticeCode:
    """Construction-A lattice of a zero-terminated systematic CC.

    ``length`` is the total number of coded symbols ``m = streams * steps``.
    ``interleave`` fixes the transmission order of the output symbols:

    * ``"step"``   -- all streams of trellis step t are adjacent;
    * ``"stream"`` -- stream-major, so any prefix of the codeword carries a
      balanced share of every trellis step (needed for prefix decoding).

    The returned generator satisfies ``{G u mod Q} = CC codebook`` on the
    information columns, with fold columns ``Q * e_p`` elsewhere.
    """
    if not _is_prime(cc.q):
        raise ValueError(f"Q must be prime, got {cc.q}")
    n = cc.streams
    if length % n:
        raise ValueError(f"length {length} not a multiple of {n} output streams")
    steps = length // n
    k = steps - cc.memory
    if k <= 0:
        raise ValueError("length too short for the code memory and termination")

    if interleave == "step":
        def pos(stream, t):
            return t * n + stream
    elif interleave == "stream":
        def pos(stream, t):
            return stream * steps + t
    else:
        raise ValueError(f"unknown interleave mode {interleave!r}")

    g = np.zeros((length, length), dtype=np.int64)
    info_positions = np.array([pos(0, t) for t in range(k)], dtype=np.int64)
    for t in range(k):
        g[pos(0, t), t] = 1
        for l, tap in enumerate(cc.taps, start=1):
            for d, coeff in enumerate(tap):
                if t + d < steps:
                    g[pos(l, t + d), t] = coeff % cc.q

    fold_positions = sorted(set(range(length)) - set(info_positions.tolist()))
    for j, p in enumerate(fold_positions):
        g[p, k + j] = cc.q

    lower = np.zeros(length, dtype=np.int64)
    upper = np.zeros(length, dtype=np.int64)
    upper[:k] = cc.q - 1
    for j, p in enumerate(fold_positions):
        row_max = int(np.sum(g[p, :k]) * (cc.q - 1))
        lower[k + j] = -(row_max // cc.q)
        upper[k + j] = 0

    return LatticeCode(
        generator=g,
        translate=np.zeros(length),
        q=cc.q,
        info_lower=lower,
        info_upper=upper,
        info_dim=k,
        info_positions=info_positions,
    )


def enumerate_codebook(code: LatticeCode, max_size: int):
    """Full ``(U, X)`` enumeration of the codebook for brute-force ML.

    Rows of ``U`` run in lexicographic order of the information symbols.
    """
    spans = (code.info_upper[:code.info_dim] - code.info_lower[:code.info_dim] + 1).astype(object)
    size = int(np.prod(spans)) if code.info_dim else 1
    if size > max_size:
        raise CodebookTooLargeError(f"codebook size {size} exceeds budget {max_size}")
    us = np.empty((size, code.dim), dtype=np.int64)
    xs = np.empty((size, code.dim))
    ranges = [range(int(code.info_lower[i]), int(code.info_upper[i]) + 1) for i in range(code.info_dim)]
    for row, info in enumerate(itertools.product(*ranges)):
        u = code.fold(np.array(info, dtype=np.int64)) if code.dim > code.info_dim \
            else np.array(info, dtype=np.int64)
        us[row] = u
        xs[row] = code.generator @ u + code.translate
    return us, xs


# ---------------------------------------------------------------------------
# symbol/amplitude mapping
# ---------------------------------------------------------------------------

def amplitude_scale(q: int) -> float:
    """Scale giving centered Z_q symbols unit average energy per real symbol."""
    return math.sqrt(12.0 / (q * q - 1.0))


def map_to_amplitudes(symbols, q: int) -> np.ndarray:
    """Affine map ``s -> (s - (q-1)/2) * kappa_q`` with unit average energy."""
    symbols = np.asarray(symbols, dtype=float)
    return (symbols - (q - 1) / 2.0) * amplitude_scale(q)


def pack_complex(amplitudes) -> np.ndarray:
    """Pairs of unit-energy reals -> unit-energy complex channel symbols."""
    amplitudes = np.asarray(amplitudes, dtype=float)
    if amplitudes.size % 2:
        raise ValueError("need an even number of real amplitudes")
    return (amplitudes[0::2] + 1j * amplitudes[1::2]) / math.sqrt(2.0)


def unpack_complex(symbols) -> np.ndarray:
    symbols = np.asarray(symbols, dtype=complex)
    out = np.empty(2 * symbols.size)
    out[0::2] = symbols.real * math.sqrt(2.0)
    out[1::2] = symbols.imag * math.sqrt(2.0)
    return out


# ---------------------------------------------------------------------------
# CRC-16 framing
# ---------------------------------------------------------------------------

_CRC_POLY = 0x1021
_CRC_INIT = 0xFFFF


def _crc16(data: bytes) -> int:
    """CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection)."""
    crc = _CRC_INIT
    for byte in data:
        crc ^= byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ _CRC_POLY) if crc & 0x8000 else (crc << 1)
            crc &= 0xFFFF
    return crc


def crc_symbol_count(q: int) -> int:
    return math.ceil(16 / int(math.log2(q)))


@dataclass(frozen=True)
class InfoFrame:
    """Payload symbols plus their packed 16-bit checksum."""

    payload: np.ndarray
    crc: np.ndarray

    @property
    def symbols(self) -> np.ndarray:
        return np.concatenate([self.payload, self.crc])


def _pack_crc(value: int, q: int) -> np.ndarray:
    width = int(math.log2(q))
    count = crc_symbol_count(q)
    shifts = [(count - 1 - i) * width for i in range(count)]
    # leading chunk may be narrower than `width` when 16 % width != 0
    lead = 16 - (count - 1) * width
    out = np.empty(count, dtype=np.int64)
    out[0] = (value >> shifts[0]) & ((1 << lead) - 1)
    for i in range(1, count):
        out[i] = (value >> shifts[i]) & ((1 << width) - 1)
    return out


def crc_append(payload, q: int) -> InfoFrame:
    """Append the big-endian CRC-16 of the payload bytes, packed into Z_q symbols."""
    payload = np.asarray(payload, dtype=np.int64)
    if q > 256:
        raise ValueError("symbol-per-byte serialization assumes Q <= 256")
    value = _crc16(bytes(int(s) for s in payload))
    return InfoFrame(payload=payload, crc=_pack_crc(value, q))


def crc_check(frame: InfoFrame, q: int) -> bool:
    value = _crc16(bytes(int(s) % 256 for s in frame.payload))
    expect = _pack_crc(value, q)
    return frame.crc.size == expect.size and bool(np.all(frame.crc == expect))


def split_frame(symbols, q: int) -> InfoFrame:
    """Reinterpret a decoded symbol block as payload + trailing CRC symbols."""
    symbols = np.asarray(symbols, dtype=np.int64)
    n = crc_symbol_count(q)
    return InfoFrame(payload=symbols[:-n], crc=symbols[-n:])
