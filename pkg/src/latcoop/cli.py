"""Command-line front end.

Subcommands: sim-naf, sim-ddf, sim-cma, outage-ddf, dmt, pareto,
optimize-cma-gains, bias-sweep.  Exit codes: 0 success, 2 configuration
error, 3 runtime budget exceeded.
"""

import argparse
import sys
import time

import numpy as np

from . import analysis, cma_naf, harness, relay_ddf, relay_naf
from .channels import noise_ratio_from_db
from .decoder import DecoderConfig
from .harness import ConfigError, ExperimentConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3


class BudgetExceeded(RuntimeError):
    pass


def _parse_snr(spec: str):
    """SNR sweep: 'a:b:step' range (inclusive) or comma-separated list."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError("snr range must be a:b:step")
        a, b, step = (float(p) for p in parts)
        if step <= 0 or b < a:
            raise ConfigError("need a <= b and positive step")
        count = int(round((b - a) / step)) + 1
        return tuple(round(a + i * step, 10) for i in range(count))
    return tuple(float(p) for p in spec.split(",") if p.strip())


def _parse_fractions(spec: str):
    out = []
    for tok in spec.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "/" in tok:
            num, den = tok.split("/")
            out.append(float(num) / float(den))
        else:
            out.append(float(tok))
    return tuple(out)


def _add_common(p):
    p.add_argument("--snr-db", required=True, help="sweep a:b:step or comma list")
    p.add_argument("--trials", type=int, default=100000, help="max trials per point")
    p.add_argument("--min-errors", type=int, default=100)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default=None, help="CSV output path")
    p.add_argument("--svg", default=None, help="optional SVG plot path")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--chunk", type=int, default=250)
    p.add_argument("--c-db", type=float, default=None,
                   help="inter-user SNR advantage in dB (default 3 dB => c = 2)")
    p.add_argument("--bias", type=float, default=1.2)
    p.add_argument("--step", type=float, default=5.0)
    p.add_argument("--max-nodes", type=int, default=1_000_000)
    p.add_argument("--boundary", choices=["relaxed", "clamp"], default="relaxed")
    p.add_argument("--noise-off", action="store_true", help="debug: disable all noise")
    p.add_argument("--time-budget-s", type=float, default=None)
    p.add_argument("--config", default=None, help="key = value config file")


def _apply_config_file(args):
    if not args.config:
        return
    values = harness.load_config_file(args.config)
    mapping = {
        "channel.c_db": "c_db",
        "decoder.bias": "bias",
        "decoder.step": "step",
        "decoder.max_nodes": "max_nodes",
        "decoder.boundary": "boundary",
        "harness.min_frame_errors": "min_errors",
        "harness.max_trials": "trials",
        "harness.seed": "seed",
        "harness.workers": "workers",
        "harness.chunk": "chunk",
    }
    for key, attr in mapping.items():
        if key in values and getattr(args, attr, None) == _DEFAULTS.get(attr):
            setattr(args, attr, values[key])


_DEFAULTS = {
    "c_db": None, "bias": 1.2, "step": 5.0, "max_nodes": 1_000_000,
    "boundary": "relaxed", "min_errors": 100, "trials": 100000,
    "seed": 1, "workers": 1, "chunk": 250,
}


def _experiment(args, protocol, **extra) -> ExperimentConfig:
    _apply_config_file(args)
    c = noise_ratio_from_db(args.c_db) if args.c_db is not None else 2.0
    decoder = DecoderConfig(bias=args.bias, step=args.step,
                            max_nodes=args.max_nodes, boundary=args.boundary)
    return ExperimentConfig(
        protocol=protocol,
        snr_db=_parse_snr(args.snr_db),
        master_seed=args.seed,
        min_frame_errors=args.min_errors,
        max_trials=args.trials,
        chunk_size=args.chunk,
        workers=args.workers,
        noise_ratio=c,
        decoder=decoder,
        noise_off=args.noise_off,
        **extra,
    )


def _run_and_emit(cfg, args, label):
    start = time.monotonic()
    rows = harness.run_fer_experiment(cfg)
    if args.time_budget_s is not None and time.monotonic() - start > args.time_budget_s:
        _emit(rows, args, label)
        raise BudgetExceeded(f"experiment exceeded {args.time_budget_s} s")
    _emit(rows, args, label)
    return rows


def _emit(rows, args, label):
    if args.out:
        harness.emit_csv(rows, args.out)
    else:
        print(harness.ResultRow.csv_header())
        for row in rows:
            print(row.csv_line())
    if args.svg:
        harness.emit_svg({label: [(r.snr_db, max(r.fer, 1e-7)) for r in rows]}, args.svg)


def cmd_sim_naf(args):
    naf = relay_naf.NafConfig(rate_bpcu=args.rate, mode=args.mode, frames=args.frame // 2)
    cfg = _experiment(args, "naf", naf=naf)
    _run_and_emit(cfg, args, f"naf-{args.mode}-r{args.rate}")


def cmd_sim_ddf(args):
    ddf = relay_ddf.DdfConfig(subblocks=args.subblocks,
                              symbols_per_subblock=args.symbols_per_subblock,
                              q=args.q, fractions=_parse_fractions(args.fractions))
    cfg = _experiment(args, "ddf", ddf=ddf)
    _run_and_emit(cfg, args, f"ddf-q{args.q}")


def cmd_sim_cma(args):
    gains = None
    if args.gains:
        a, b = (float(t) for t in args.gains.split(","))
        gains = cma_naf.CmaGains(a, b)
    q = args.q
    if q is None:
        q = {"uncoded": {2: 2, 4: 4}, "cc": {2: 5, 4: 17}}[args.mode][args.rate]
    cfg = _experiment(args, "cma", cma_frame=args.frame, cma_mode=args.mode,
                      cma_q=q, cma_gains=gains)
    _run_and_emit(cfg, args, f"cma-{args.mode}")


def cmd_outage_ddf(args):
    snrs = _parse_snr(args.snr_db)
    fractions = _parse_fractions(args.fractions)
    rng = np.random.default_rng(args.seed)
    lines = ["snr_db,outage"]
    for snr in snrs:
        out = analysis.outage_ddf(snr, args.rate, fractions, args.subblocks,
                                  args.draws, rng)
        lines.append(f"{snr:.10g},{out:.10g}")
    _write_lines(lines, args.out)


def cmd_dmt(args):
    grid = np.linspace(0.0, 1.0, args.points)
    if args.protocol == "naf":
        d = analysis.dmt_naf(grid)
    elif args.protocol == "ddf":
        d = analysis.dmt_ddf(grid)
    elif args.protocol == "cma":
        d = analysis.dmt_cma(grid)
    elif args.protocol == "ddf-finite":
        if not args.fractions:
            raise ConfigError("ddf-finite needs --fractions")
        d = analysis.dmt_ddf_finite(grid, _parse_fractions(args.fractions))
    elif args.protocol == "mimo":
        m, n = (int(t) for t in args.mimo.split(","))
        grid = np.linspace(0.0, float(min(m, n)), args.points)
        d = analysis.dmt_mimo_optimal(m, n, grid)
    else:
        raise ConfigError(f"unknown protocol {args.protocol}")
    lines = ["r,d"] + [f"{r:.10g},{dv:.10g}" for r, dv in zip(grid, d)]
    _write_lines(lines, args.out)


def cmd_pareto(args):
    fs = analysis.pareto_fractions(args.segments)
    lines = ["j,fraction"] + [f"{j + 1},{f:.12g}" for j, f in enumerate(fs.fractions)]
    _write_lines(lines, args.out)


def cmd_optimize_cma_gains(args):
    snrs = _parse_snr(args.snr_db)
    rng = np.random.default_rng(args.seed)
    lines = ["snr_db,a,b,outage"]
    for snr in snrs:
        from .channels import snr_to_variances
        params = snr_to_variances(snr)
        gains, outage = cma_naf.optimize_gains(params, args.frame, args.rate,
                                               args.draws, rng)
        lines.append(f"{snr:.10g},{gains.a:.10g},{gains.b:.10g},{outage:.10g}")
    _write_lines(lines, args.out)


def cmd_bias_sweep(args):
    biases = [float(b) for b in args.biases.split(",")]
    cfg = _experiment(args, "cma", cma_frame=args.frame, cma_mode=args.mode, cma_q=args.q)
    rows = harness.run_bias_sweep(cfg, biases)
    lines = ["bias," + harness.ResultRow.csv_header()]
    lines += [f"{b:.10g}," + row.csv_line() for b, row in rows]
    _write_lines(lines, args.out)


def _write_lines(lines, out):
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latcoop",
                                     description="lattice-coded cooperative diversity simulations")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sim-naf", help="NAF relay FER sweep")
    p.add_argument("--rate", type=int, choices=[2, 4, 6], default=2)
    p.add_argument("--mode", choices=["gc", "gc+cc"], default="gc")
    p.add_argument("--frame", type=int, default=128, help="channel uses per codeword")
    _add_common(p)
    p.set_defaults(func=cmd_sim_naf)

    p = sub.add_parser("sim-ddf", help="modified DDF relay FER sweep")
    p.add_argument("--rate", type=float, default=2.0, help="informational; rate follows Q")
    p.add_argument("--subblocks", type=int, default=12)
    p.add_argument("--symbols-per-subblock", type=int, default=8)
    p.add_argument("--q", type=int, default=17)
    p.add_argument("--fractions", default="1/2,2/3")
    _add_common(p)
    p.set_defaults(func=cmd_sim_ddf)

    p = sub.add_parser("sim-cma", help="two-user CMA-NAF FER sweep")
    p.add_argument("--rate", type=int, choices=[2, 4], default=2)
    p.add_argument("--frame", type=int, default=128, help="symbol intervals per codeword")
    p.add_argument("--mode", choices=["uncoded", "cc"], default="uncoded")
    p.add_argument("--q", type=int, default=None, help="symbol alphabet (default by rate/mode)")
    p.add_argument("--gains", default=None, help="a,b (default 1.0,0.4)")
    _add_common(p)
    p.set_defaults(func=cmd_sim_cma)

    p = sub.add_parser("outage-ddf", help="Monte Carlo DDF outage")
    p.add_argument("--snr-db", required=True)
    p.add_argument("--rate", type=float, default=2.0)
    p.add_argument("--subblocks", type=int, default=12)
    p.add_argument("--fractions", default="1/2,2/3")
    p.add_argument("--draws", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_outage_ddf)

    p = sub.add_parser("dmt", help="closed-form tradeoff curves")
    p.add_argument("--protocol", choices=["naf", "ddf", "ddf-finite", "cma", "mimo"],
                   required=True)
    p.add_argument("--fractions", default=None)
    p.add_argument("--mimo", default="2,2", help="M,N antennas")
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_dmt)

    p = sub.add_parser("pareto", help="Pareto-optimal waiting fractions")
    p.add_argument("--segments", type=int, required=True,
                   help="number of relay start instants N")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser("optimize-cma-gains", help="grid search for (a, b)")
    p.add_argument("--snr-db", required=True)
    p.add_argument("--rate", type=float, default=2.0)
    p.add_argument("--frame", type=int, default=16)
    p.add_argument("--draws", type=int, default=2000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_optimize_cma_gains)

    p = sub.add_parser("bias-sweep", help="Fano bias vs FER and complexity (CMA pipeline)")
    p.add_argument("--biases", default="0.8,1.2,2.0")
    p.add_argument("--frame", type=int, default=64)
    p.add_argument("--mode", choices=["uncoded", "cc"], default="cc")
    p.add_argument("--q", type=int, default=5)
    _add_common(p)
    p.set_defaults(func=cmd_bias_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
