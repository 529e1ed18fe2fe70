"""Quasi-static flat Rayleigh fading, complex AWGN, and SNR bookkeeping.

Symbol energy is normalized to 1; SNR changes move the noise variances.
Every trial derives its own RNG stream from the master seed and a counter
key, so results never depend on execution order.
"""

from dataclasses import dataclass

import numpy as np

#: destination-to-relay noise variance ratio for a 3 dB better inter-user link
DEFAULT_NOISE_RATIO = 2.0


@dataclass(frozen=True)
class ChannelParams:
    """Link SNR and the noise variances derived from it (E = 1)."""

    rho: float
    sigma_v2: float
    sigma_w2: float
    c: float
    energy: float = 1.0


@dataclass(frozen=True)
class RelayRealization:
    """Source->destination (g1), relay->destination (g2), source->relay (h)."""

    g1: complex
    g2: complex
    h: complex


@dataclass(frozen=True)
class CmaRealization:
    """Source-j->destination gains and the inter-source gain h."""

    g1: complex
    g2: complex
    h: complex


def snr_to_variances(snr_db: float, c: float = DEFAULT_NOISE_RATIO) -> ChannelParams:
    """Noise variances for a destination SNR in dB with noise ratio ``c``."""
    if c <= 0:
        raise ValueError("noise ratio c must be positive")
    sigma_v2 = 10.0 ** (-snr_db / 10.0)
    return ChannelParams(rho=1.0 / sigma_v2, sigma_v2=sigma_v2, sigma_w2=sigma_v2 / c, c=c)


def noise_ratio_from_db(c_db: float) -> float:
    return 10.0 ** (c_db / 10.0)


def _unit_gain(rng: np.random.Generator) -> complex:
    re, im = rng.standard_normal(2)
    return complex(re, im) / np.sqrt(2.0)


def sample_relay_realization(rng: np.random.Generator) -> RelayRealization:
    """Unit-variance circularly-symmetric gains, fixed for one codeword."""
    return RelayRealization(g1=_unit_gain(rng), g2=_unit_gain(rng), h=_unit_gain(rng))


def sample_cma_realization(rng: np.random.Generator) -> CmaRealization:
    return CmaRealization(g1=_unit_gain(rng), g2=_unit_gain(rng), h=_unit_gain(rng))


def add_noise(signal, variance: float, rng: np.random.Generator):
    """Add i.i.d. circularly-symmetric complex Gaussian noise."""
    if variance < 0:
        raise ValueError("noise variance must be nonnegative")
    signal = np.asarray(signal, dtype=complex)
    if variance == 0:
        return signal.copy()
    scale = np.sqrt(variance / 2.0)
    return signal + scale * (rng.standard_normal(signal.shape) + 1j * rng.standard_normal(signal.shape))


def complex_noise(shape, variance: float, rng: np.random.Generator) -> np.ndarray:
    if variance == 0:
        return np.zeros(shape, dtype=complex)
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def trial_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Counter-derived RNG stream: reproducible independently of run order."""
    return np.random.default_rng(np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(key)))
