"""Monte Carlo experiment engine, result persistence, and configuration.

Trials are independent work items keyed by (SNR index, trial index); each
derives its own RNG stream from the master seed, so aggregated results are
byte-identical no matter how many workers run them.  Stop policy: every SNR
point accumulates at least ``min_frame_errors`` or hits ``max_trials``,
checked on whole chunks to keep the schedule parallelism-independent.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import cma_naf, relay_ddf, relay_naf
from .channels import (
    DEFAULT_NOISE_RATIO,
    sample_cma_realization,
    sample_relay_realization,
    snr_to_variances,
    trial_rng,
)
from .decoder import DecoderConfig
from .records import TrialRecord

PROTOCOLS = ("naf", "ddf", "cma")


class ConfigError(ValueError):
    """Invalid experiment configuration (reported before any trial runs)."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One FER experiment: protocol, rate point, SNR sweep and trial policy."""

    protocol: str
    snr_db: tuple
    master_seed: int = 1
    min_frame_errors: int = 100
    max_trials: int = 100_000
    chunk_size: int = 250
    workers: int = 1
    noise_ratio: float = DEFAULT_NOISE_RATIO
    decoder: DecoderConfig = field(default_factory=DecoderConfig)
    noise_off: bool = False
    naf: relay_naf.NafConfig = None
    ddf: relay_ddf.DdfConfig = None
    cma_frame: int = 64
    cma_mode: str = "uncoded"
    cma_q: int = 5
    cma_gains: cma_naf.CmaGains = None

    def validate(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}")
        if not self.snr_db:
            raise ConfigError("SNR sweep must be non-empty")
        if self.min_frame_errors < 1:
            raise ConfigError("min_frame_errors must be at least 1")
        if self.max_trials < 1:
            raise ConfigError("max_trials must be at least 1")
        if self.chunk_size < 1 or self.workers < 1:
            raise ConfigError("chunk_size and workers must be positive")
        if self.protocol == "naf" and self.naf is None:
            raise ConfigError("naf protocol needs a NafConfig")
        if self.protocol == "ddf" and self.ddf is None:
            raise ConfigError("ddf protocol needs a DdfConfig")
        if self.protocol == "cma":
            if self.cma_mode not in ("uncoded", "cc"):
                raise ConfigError("cma mode must be 'uncoded' or 'cc'")
            if self.cma_frame % 2:
                raise ConfigError("cma frame length must be even")


@dataclass(frozen=True)
class ResultRow:
    """Aggregated outcome of one SNR point."""

    snr_db: float
    trials: int
    frame_errors: int
    fer: float
    ber: float
    mean_nodes: float
    mean_wait_fraction: float
    ci_half_width: float
    stop_reason: str

    @staticmethod
    def csv_header() -> str:
        return ("snr_db,trials,frame_errors,fer,ber,mean_nodes,"
                "mean_wait_fraction,ci_half_width,stop_reason")

    def csv_line(self) -> str:
        wait = "" if self.mean_wait_fraction is None else f"{self.mean_wait_fraction:.10g}"
        return (f"{self.snr_db:.10g},{self.trials},{self.frame_errors},"
                f"{self.fer:.10g},{self.ber:.10g},{self.mean_nodes:.10g},"
                f"{wait},{self.ci_half_width:.10g},{self.stop_reason}")


def wilson_half_width(errors: int, trials: int, z: float = 1.959963984540054) -> float:
    """Half-width of the 95% Wilson score interval for a binomial rate."""
    if trials == 0:
        return 0.0
    p = errors / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    half = (z / denom) * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials))
    return half


def _run_one_trial(cfg: ExperimentConfig, snr_idx: int, trial_idx: int) -> TrialRecord:
    rng = trial_rng(cfg.master_seed, snr_idx, trial_idx)
    snr = cfg.snr_db[snr_idx]
    params = snr_to_variances(snr, cfg.noise_ratio)
    if cfg.noise_off:
        params = replace(params, sigma_v2=0.0, sigma_w2=0.0)
    if cfg.protocol == "naf":
        code = cfg.naf.build_code()
        payload = rng.integers(0, code.q, size=code.info_dim)
        realization = sample_relay_realization(rng)
        return relay_naf.simulate_naf_trial(cfg.naf, params, realization, payload, rng, cfg.decoder)
    if cfg.protocol == "ddf":
        payload = rng.integers(0, cfg.ddf.q, size=cfg.ddf.payload_symbols)
        realization = sample_relay_realization(rng)
        return relay_ddf.simulate_ddf_trial(cfg.ddf, params, realization, payload, rng, cfg.decoder)
    # cma
    code1, code2 = _cma_codes(cfg)
    p1 = rng.integers(0, code1.q, size=code1.info_dim)
    p2 = rng.integers(0, code2.q, size=code2.info_dim)
    realization = sample_cma_realization(rng)
    gains = cfg.cma_gains if cfg.cma_gains is not None else cma_naf.CmaGains(1.0, 0.4)
    return cma_naf.simulate_cma_trial(gains, params, realization, code1, code2, p1, p2,
                                      rng, cfg.decoder)


def _cma_codes(cfg: ExperimentConfig):
    from .lattice_codec import RATE_HALF_TAPS, ConvCode, build_construction_a, identity_code

    n = cfg.cma_frame
    if cfg.cma_mode == "uncoded":
        code = identity_code(cfg.cma_q, n)
    else:
        code = build_construction_a(ConvCode(q=cfg.cma_q, taps=RATE_HALF_TAPS), n,
                                    interleave="step")
    return code, code


def _run_chunk(args):
    cfg, snr_idx, start, size = args
    return [_run_one_trial(cfg, snr_idx, start + i) for i in range(size)]


def run_fer_experiment(cfg: ExperimentConfig) -> list:
    """Sweep the SNR list, accumulating trials per point until the stop policy."""
    cfg.validate()
    rows = []
    pool = ProcessPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None
    try:
        for snr_idx, snr in enumerate(cfg.snr_db):
            records = []
            errors = 0
            trials = 0
            stop_reason = "max_trials"
            stopped = False
            while trials < cfg.max_trials and not stopped:
                jobs = []
                offset = trials
                for _ in range(max(1, cfg.workers)):
                    if offset >= cfg.max_trials:
                        break
                    this = min(cfg.chunk_size, cfg.max_trials - offset)
                    jobs.append((cfg, snr_idx, offset, this))
                    offset += this
                if pool:
                    chunk_lists = list(pool.map(_run_chunk, jobs))
                else:
                    chunk_lists = [_run_chunk(j) for j in jobs]
                # include whole chunks in index order; once the error target is
                # met, later chunks are discarded so the aggregate never depends
                # on how many were precomputed in parallel
                for chunk in chunk_lists:
                    records.extend(chunk)
                    trials += len(chunk)
                    errors += sum(r.frame_error for r in chunk)
                    if errors >= cfg.min_frame_errors:
                        stop_reason = "min_errors"
                        stopped = True
                        break
            rows.append(_aggregate(snr, records, stop_reason))
    finally:
        if pool:
            pool.shutdown()
    return rows


def _aggregate(snr: float, records, stop_reason: str) -> ResultRow:
    trials = len(records)
    errors = sum(r.frame_error for r in records)
    bit_errors = sum(r.bit_errors for r in records)
    total_bits = sum(r.total_bits for r in records)
    waits = [r.wait_fraction for r in records if r.wait_fraction is not None]
    return ResultRow(
        snr_db=snr,
        trials=trials,
        frame_errors=errors,
        fer=errors / trials if trials else 0.0,
        ber=bit_errors / total_bits if total_bits else 0.0,
        mean_nodes=float(np.mean([r.decoder_nodes for r in records])) if records else 0.0,
        mean_wait_fraction=float(np.mean(waits)) if waits else None,
        ci_half_width=wilson_half_width(errors, trials),
        stop_reason=stop_reason,
    )


def run_bias_sweep(cfg: ExperimentConfig, biases) -> list:
    """FER and node counts per Fano bias on the configured pipeline."""
    out = []
    for bias in biases:
        sub = replace(cfg, decoder=replace(cfg.decoder, bias=float(bias)))
        rows = run_fer_experiment(sub)
        for row in rows:
            out.append((float(bias), row))
    return out


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def emit_csv(rows, path) -> None:
    """Fixed-header CSV; deterministic formatting."""
    lines = [ResultRow.csv_header()]
    lines += [row.csv_line() for row in rows]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_csv(path) -> list:
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != ResultRow.csv_header():
            raise ValueError("unexpected CSV header")
        for line in fh:
            parts = line.strip().split(",")
            rows.append(ResultRow(
                snr_db=float(parts[0]), trials=int(parts[1]), frame_errors=int(parts[2]),
                fer=float(parts[3]), ber=float(parts[4]), mean_nodes=float(parts[5]),
                mean_wait_fraction=float(parts[6]) if parts[6] else None,
                ci_half_width=float(parts[7]), stop_reason=parts[8]))
    return rows


def emit_svg(series, path, width: int = 640, height: int = 480,
             floor: float = 1e-7) -> None:
    """Minimal log-y FER-vs-SNR line plot: one polyline per series.

    ``series`` maps a label to a list of (snr_db, fer) pairs.
    """
    xs = [p[0] for pts in series.values() for p in pts]
    ys = [max(p[1], floor) for pts in series.values() for p in pts]
    if not xs:
        raise ValueError("nothing to plot")
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = math.log10(min(ys)), math.log10(max(ys))
    x_hi = x_hi if x_hi > x_lo else x_lo + 1.0
    y_hi = y_hi if y_hi > y_lo else y_lo + 1.0
    pad = 40

    def sx(x):
        return pad + (x - x_lo) / (x_hi - x_lo) * (width - 2 * pad)

    def sy(y):
        ly = math.log10(max(y, floor))
        return height - pad - (ly - y_lo) / (y_hi - y_lo) * (height - 2 * pad)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    for i, (label, pts) in enumerate(series.items()):
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        color = colors[i % len(colors)]
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{pad + 4}" y="{pad + 14 * (i + 1)}" fill="{color}" '
                     f'font-size="12">{label}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")


# ---------------------------------------------------------------------------
# line-oriented key = value configuration
# ---------------------------------------------------------------------------

def parse_config_text(text: str) -> dict:
    """Parse ``dotted.key = value`` lines into a flat dict.

    Values become int, float, bool or str; comma-separated values become
    lists.  Lines starting with ``#`` and blank lines are ignored.
    """
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if "," in value:
            out[key] = [_parse_scalar(v.strip()) for v in value.split(",") if v.strip()]
        else:
            out[key] = _parse_scalar(value)
    return out


def _parse_scalar(token: str):
    low = token.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        pass
    if "/" in token:
        try:
            num, den = token.split("/")
            return float(num) / float(den)
        except ValueError:
            pass
    return token


def load_config_file(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())
