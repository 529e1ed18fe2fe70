"""Complex/real embeddings, matrix square-root whitening, MMSE-DFE preprocessing.

Shared linear-algebra layer for every receiver in the package.  All
operations are pure functions of their inputs and safe to call from
concurrent trials.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class NotPositiveDefiniteError(ValueError):
    """Raised when a matrix expected to be Hermitian positive definite is not."""


@dataclass(frozen=True)
class PreprocessedSystem:
    """Forward-filtered, upper-triangular search problem for the tree search.

    Attributes
    ----------
    filtered_obs : ndarray, shape (m,)
        Observation after the implicit feedforward filter.
    generator : ndarray, shape (m, m)
        Upper-triangular composite generator with strictly positive diagonal.
        The tree-search metric is ``|filtered_obs - generator @ u|**2``.
    noise_scale : float
        Square root of the regularization level used to build the system.
    """

    filtered_obs: np.ndarray
    generator: np.ndarray
    noise_scale: float

    @property
    def dim(self) -> int:
        return self.generator.shape[0]


def embed_complex(mat) -> np.ndarray:
    """Real representation of a complex matrix, interleaved-pairs convention.

    Each complex entry ``a + ib`` becomes the 2x2 rotation block
    ``[[a, -b], [b, a]]``, so that ``embed_complex(A) @ embed_complex(B)
    == embed_complex(A @ B)`` for conformable matrices and
    ``embed_complex(M) @ embed_vector(v) == embed_vector(M @ v)``.

    Parameters
    ----------
    mat : array_like, shape (r, c)
        Complex matrix (a real matrix embeds with zero rotation parts).

    Returns
    -------
    ndarray, shape (2r, 2c)
    """
    mat = np.atleast_2d(np.asarray(mat, dtype=complex))
    if not np.all(np.isfinite(mat)):
        raise ValueError("matrix entries must be finite")
    r, c = mat.shape
    out = np.empty((2 * r, 2 * c))
    out[0::2, 0::2] = mat.real
    out[0::2, 1::2] = -mat.imag
    out[1::2, 0::2] = mat.imag
    out[1::2, 1::2] = mat.real
    return out


def embed_vector(vec) -> np.ndarray:
    """Complex vector -> real vector of interleaved (re, im) pairs."""
    vec = np.asarray(vec, dtype=complex).ravel()
    out = np.empty(2 * vec.size)
    out[0::2] = vec.real
    out[1::2] = vec.imag
    return out


def unembed_vector(vec) -> np.ndarray:
    """Inverse of :func:`embed_vector`."""
    vec = np.asarray(vec, dtype=float).ravel()
    if vec.size % 2:
        raise ValueError("real embedding must have even length")
    return vec[0::2] + 1j * vec[1::2]


def inverse_sqrt(sigma) -> np.ndarray:
    """Whitening factor ``W`` of a Hermitian positive definite matrix.

    Returns ``W`` with ``W @ sigma @ W.conj().T == I``.  Computed as the
    inverse of the lower Cholesky factor, the cheapest of the standard
    options (SVD, Cholesky, QR).

    Raises
    ------
    NotPositiveDefiniteError
        If ``sigma`` is not Hermitian positive definite.
    """
    sigma = np.atleast_2d(np.asarray(sigma))
    if sigma.shape[0] != sigma.shape[1]:
        raise NotPositiveDefiniteError("matrix must be square")
    if not np.allclose(sigma, sigma.conj().T, rtol=1e-10, atol=1e-12):
        raise NotPositiveDefiniteError("matrix must be Hermitian")
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("matrix is not positive definite") from exc
    w = scipy.linalg.solve_triangular(chol, np.eye(sigma.shape[0], dtype=chol.dtype), lower=True)
    return w


def mmse_dfe_preprocess(channel, noise_to_signal, obs, prior_mean=0.0) -> PreprocessedSystem:
    """MMSE-DFE preprocessing via the augmented orthogonal-triangular factorization.

    Factors the augmented matrix ``[H; sqrt(nts) * I]`` as ``Q R`` and
    returns ``R`` together with the filtered observation (the transpose of
    ``Q`` applied to the augmented observation ``[y; sqrt(nts) * mu]``).
    The resulting search metric ``|filtered - R u|**2`` equals
    ``|y - H u|**2 + nts * |u - mu|**2`` up to a constant independent of
    ``u``, which is the MMSE-DFE metric of the relaxed closest-point
    search.  ``mu = 0`` (the default) gives the plain regularized metric;
    shaping regions with a nonzero coordinate mean pass it as
    ``prior_mean`` so the regularizer does not drag the search off-center.

    Parameters
    ----------
    channel : array_like, shape (n, m)
        Real composite channel-code matrix.
    noise_to_signal : float
        Regularization level (noise variance over per-coordinate signal
        variance, in the units of ``channel``).  Must be positive.
    obs : array_like, shape (n,)
        Real observation vector.
    prior_mean : float or array_like, shape (m,)
        Mean of the search coordinates.
    """
    channel = np.atleast_2d(np.asarray(channel, dtype=float))
    obs = np.asarray(obs, dtype=float).ravel()
    n, m = channel.shape
    if obs.size != n:
        raise ValueError(f"observation length {obs.size} does not match channel rows {n}")
    if noise_to_signal <= 0:
        raise ValueError("noise_to_signal must be positive")
    root = np.sqrt(noise_to_signal)
    aug = np.vstack([channel, root * np.eye(m)])
    q, r = np.linalg.qr(aug, mode="reduced")
    # canonical factorization: strictly positive diagonal
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    r = signs[:, None] * r
    q = q * signs[None, :]
    filtered = q[:n].T @ obs
    mean = np.asarray(prior_mean, dtype=float)
    if mean.ndim == 0:
        if mean != 0.0:
            filtered = filtered + q[n:].T @ np.full(m, root * float(mean))
    else:
        filtered = filtered + q[n:].T @ (root * mean)
    return PreprocessedSystem(filtered, np.ascontiguousarray(r), float(root))
