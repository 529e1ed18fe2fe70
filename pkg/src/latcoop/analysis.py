"""Diversity-multiplexing tradeoff curves, Pareto waiting fractions, outage.

Closed-form d(r) for the NAF relay, the DDF relay (dense and finite
waiting-fraction variants) and two-user CMA-NAF, plus the optimal MIMO
tradeoff, dominance checks on point sets, and the Monte Carlo outage
estimator for the segmented DDF protocol.
"""

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .channels import DEFAULT_NOISE_RATIO
from .relay_ddf import quantize_wait, required_wait


def _pos(x):
    return np.maximum(x, 0.0)


def dmt_naf(r):
    """NAF relay tradeoff ``1 - r + (1 - 2r)^+`` on [0, 1]."""
    r = np.asarray(r, dtype=float)
    return (1.0 - r) + _pos(1.0 - 2.0 * r)


def dmt_ddf(r):
    """DDF tradeoff: ``2(1-r)`` below r=1/2, ``(1-r)/r`` above."""
    r = np.asarray(r, dtype=float)
    low = 2.0 * (1.0 - r)
    with np.errstate(divide="ignore"):
        high = np.where(r > 0, (1.0 - r) / np.where(r > 0, r, 1.0), np.inf)
    return np.where(r <= 0.5, low, high)


def dmt_cma(r):
    """Two-user CMA-NAF achieves the optimal ``2(1-r)``."""
    r = np.asarray(r, dtype=float)
    return 2.0 * (1.0 - r)


def dmt_ddf_finite(r, fractions):
    """Segmented-DDF tradeoff: min over allowed fractions f_j >= r of
    ``(1-r)/f_j + (1 - r/f_{j-1})^+`` with f_0 = 0 (no second term at j=1)
    and f_{N+1} = 1."""
    r = np.asarray(r, dtype=float)
    fr = _validated_fractions(fractions)
    fs = np.concatenate([fr, [1.0]])
    prev = np.concatenate([[0.0], fr])
    scalar = r.ndim == 0
    rr = np.atleast_1d(r)
    out = np.empty_like(rr)
    for i, rv in enumerate(rr):
        terms = []
        for j, fj in enumerate(fs):
            if fj < rv:
                continue
            d = (1.0 - rv) / fj
            if prev[j] > 0:
                d += max(1.0 - rv / prev[j], 0.0)
            terms.append(d)
        out[i] = min(terms) if terms else 0.0
    return out[0] if scalar else out


def dmt_ddf_pareto(r, fractions):
    """Closed form achieved by a Pareto fraction set: ``1-r+(1-r/f_N)^+``."""
    r = np.asarray(r, dtype=float)
    f_last = _validated_fractions(fractions)[-1]
    return (1.0 - r) + _pos(1.0 - r / f_last)


def dmt_mimo_optimal(m: int, n: int, r):
    """Optimal MIMO tradeoff: piecewise linear through ``(k, (M-k)(N-k))``."""
    r = np.asarray(r, dtype=float)
    ks = np.arange(min(m, n) + 1)
    ds = (m - ks) * (n - ks)
    return np.interp(r, ks, ds)


def _validated_fractions(fractions) -> np.ndarray:
    fr = np.asarray(fractions, dtype=float)
    if fr.ndim != 1 or fr.size == 0:
        raise ValueError("need at least one waiting fraction")
    if np.any(fr <= 0) or np.any(fr >= 1) or np.any(np.diff(fr) <= 0):
        raise ValueError("fractions must be strictly increasing inside (0, 1)")
    return fr


@dataclass(frozen=True)
class FractionSet:
    """Ordered waiting fractions f_1..f_N in (0, 1)."""

    fractions: tuple

    def __post_init__(self):
        _validated_fractions(self.fractions)

    @property
    def n(self) -> int:
        return len(self.fractions)


def _propagate_fractions(n: int, f_last: float) -> np.ndarray:
    """Forward recursion f_j = (1-f_{j-1}) / (2 - (1 + 1/f_N) f_{j-1})."""
    fs = np.empty(n)
    fs[0] = 0.5
    coef = 1.0 + 1.0 / f_last
    for j in range(1, n):
        denom = 2.0 - coef * fs[j - 1]
        if denom <= 0:
            return fs[: j]  # diverged: candidate f_N too small
        fs[j] = (1.0 - fs[j - 1]) / denom
        if fs[j] >= 1.0 or fs[j] <= fs[j - 1]:
            return fs[: j + 1] if fs[j] >= 1.0 else fs[: j]
    return fs


def pareto_fractions(n: int) -> FractionSet:
    """Pareto-optimal waiting fractions for ``n`` relay start instants.

    The defining recursion is implicit (the last fraction appears in every
    term), so it is solved as a one-dimensional root problem in f_N by
    bisection; the forward recursion either diverges past 1 (candidate too
    small) or undershoots (candidate too large).
    """
    if n < 1:
        raise ValueError("need at least one fraction")
    if n == 1:
        return FractionSet((0.5,))

    def residual(z: float) -> float:
        fs = _propagate_fractions(n, z)
        if fs.size < n:
            return 1.0  # diverged: propagated values left (f_{j-1}, 1)
        return fs[-1] - z

    lo, hi = 0.5 + 1e-12, 1.0 - 1e-12
    r_lo, r_hi = residual(lo), residual(hi)
    if not (r_lo > 0 > r_hi):
        raise RuntimeError("bisection bracket failed for Pareto fractions")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if residual(mid) > 0:
            lo = mid
        else:
            hi = mid
    z = 0.5 * (lo + hi)
    fs = _propagate_fractions(n, z)
    if fs.size != n or np.any(np.diff(fs) <= 0):
        raise RuntimeError("Pareto fraction recursion did not converge")
    return FractionSet(tuple(fs))


def pareto_residual(fractions) -> float:
    """Max back-substitution error of the defining recursion (f_1 = 1/2)."""
    fr = _validated_fractions(fractions)
    coef = 1.0 + 1.0 / fr[-1]
    err = abs(fr[0] - 0.5)
    for j in range(1, fr.size):
        err = max(err, abs(fr[j] - (1.0 - fr[j - 1]) / (2.0 - coef * fr[j - 1])))
    return err


# ---------------------------------------------------------------------------
# tradeoff curves and dominance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DmtCurve:
    """Piecewise (r, d) tradeoff with an exact evaluator."""

    label: str
    evaluate: Callable
    r_max: float = 1.0
    breakpoints: tuple = ()

    def __call__(self, r):
        return self.evaluate(r)


def naf_curve() -> DmtCurve:
    return DmtCurve("naf", dmt_naf, 1.0, ((0.0, 2.0), (0.5, 0.5), (1.0, 0.0)))


def ddf_curve() -> DmtCurve:
    return DmtCurve("ddf", dmt_ddf, 1.0, ((0.0, 2.0), (0.5, 1.0), (1.0, 0.0)))


def cma_curve() -> DmtCurve:
    return DmtCurve("cma", dmt_cma, 1.0, ((0.0, 2.0), (1.0, 0.0)))


def ddf_finite_curve(fractions) -> DmtCurve:
    fr = tuple(float(f) for f in fractions)
    pts = tuple((f, float(dmt_ddf_finite(f, fr))) for f in (0.0,) + fr + (1.0,))
    return DmtCurve("ddf-finite", lambda r: dmt_ddf_finite(r, fr), 1.0, pts)


def mimo_curve(m: int, n: int) -> DmtCurve:
    pts = tuple((float(k), float((m - k) * (n - k))) for k in range(min(m, n) + 1))
    return DmtCurve(f"mimo{m}x{n}", lambda r: dmt_mimo_optimal(m, n, r), float(min(m, n)), pts)


def _eval_grid(a: DmtCurve, b: DmtCurve, points: int) -> np.ndarray:
    r_max = min(a.r_max, b.r_max)
    grid = np.linspace(0.0, r_max, points)
    extra = [p for p, _ in a.breakpoints + b.breakpoints if 0.0 <= p <= r_max]
    return np.unique(np.concatenate([grid, np.asarray(extra, dtype=float)]))


def uniformly_dominates(a: DmtCurve, b: DmtCurve, points: int = 1000, tol: float = 1e-12) -> bool:
    """True when ``d_A(r) >= d_B(r)`` for every r on the evaluation grid."""
    grid = _eval_grid(a, b, points)
    return bool(np.all(np.asarray(a(grid)) >= np.asarray(b(grid)) - tol))


def pareto_dominates(a: DmtCurve, b: DmtCurve, points: int = 1000, tol: float = 1e-12) -> bool:
    """True when A beats B somewhere and is never beaten."""
    grid = _eval_grid(a, b, points)
    da = np.asarray(a(grid))
    db = np.asarray(b(grid))
    return bool(np.any(da > db + tol) and not np.any(da < db - tol))


# ---------------------------------------------------------------------------
# DDF outage
# ---------------------------------------------------------------------------

def outage_ddf(snr_db: float, rate: float, fractions, subblocks: int, draws: int,
               rng: np.random.Generator, c: float = DEFAULT_NOISE_RATIO) -> float:
    """Monte Carlo outage of the segmented DDF relay protocol.

    Per channel draw the relay wait is quantized to the allowed fractions
    and the mutual information of the combined time-selective SISO channel
    is compared with the target rate.
    """
    fr = _validated_fractions(fractions)
    rho = 10.0 ** (snr_db / 10.0)
    g1 = rng.standard_normal(draws) ** 2 + rng.standard_normal(draws) ** 2
    g2 = rng.standard_normal(draws) ** 2 + rng.standard_normal(draws) ** 2
    h2 = (rng.standard_normal(draws) ** 2 + rng.standard_normal(draws) ** 2) / 2.0
    g1 *= 0.5
    g2 *= 0.5
    waits = np.empty(draws)
    for i in range(draws):
        req = required_wait(rate, h2[i], c, rho, subblocks)
        waits[i] = quantize_wait(req, fr, subblocks)
    f_act = waits / subblocks
    info = f_act * np.log2(1.0 + g1 * rho) + (1.0 - f_act) * np.log2(1.0 + (g1 + g2) * rho)
    return float(np.mean(info < rate))


def outage_snr_at(target: float, snr_grid_db: Sequence[float], outages: Sequence[float]) -> float:
    """SNR (dB) where the outage curve crosses ``target``, log-interpolated."""
    snr = np.asarray(snr_grid_db, dtype=float)
    out = np.asarray(outages, dtype=float)
    if np.all(out > target) or np.all(out < target):
        raise ValueError("target outage not bracketed by the sweep")
    logs = np.log10(np.maximum(out, 1e-300))
    for i in range(len(snr) - 1):
        if (out[i] - target) * (out[i + 1] - target) <= 0 and out[i] != out[i + 1]:
            t = (np.log10(target) - logs[i]) / (logs[i + 1] - logs[i])
            return float(snr[i] + t * (snr[i + 1] - snr[i]))
    raise ValueError("no crossing found")
