#!/usr/bin/env python3
# sscsim/__main__.py

import argparse
import sys
from dataclasses import replace
from pathlib import Path

# Add the project directory to the path
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np

from sscsim.codebook import CodebookFormatError, build_codebook, deserialize_codebook, serialize_codebook
from sscsim.getconfig import get_workers, logger
from sscsim.harness import (ConfigurationError, build_config, complexity_report, emit_csv,
                            read_experiment_file, run_sweep, sweep_metadata)
from sscsim.interface import instructions
from sscsim.utils import output, output_table

DEFAULT_R_GRID = "1,0.5,0.25,0.125"
ROUNDTRIP_DEFAULTS = {"N": "257", "K": "2", "M": "128", "R": "0.5"}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sscsim", description="Sparse superimposed coding link-level simulator")
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", metavar="FILE", help="Experiment file with an [experiment] section")
        p.add_argument("--N", type=int, help="Codebook columns")
        p.add_argument("--K", type=int, help="Non-zero entries per message")
        p.add_argument("--M", type=int, help="Block length (channel uses)")
        p.add_argument("--R", type=float, help="Sparsity factor D/M")
        p.add_argument("--r", dest="r_grid", help="Comma-separated sparsity factors")
        p.add_argument("--seed", type=int, help="Master seed")
        p.add_argument("--L", type=int, help="MMP child expansions per node")
        p.add_argument("--beam", type=int, help="MMP surviving paths per depth")

    sweep = subparsers.add_parser("sweep", help="BLER sweep over SNR, R and block length")
    add_common(sweep)
    sweep.add_argument("--snr", help="SNR grid in dB, lo:step:hi or a comma list")
    sweep.add_argument("--m", dest="m_grid", help="Comma-separated block lengths")
    sweep.add_argument("--trials", type=int, help="Packets per point (fixed count unless --min-errors)")
    sweep.add_argument("--min-errors", dest="min_errors", type=int, help="Early stop after this many block errors")
    sweep.add_argument("--max-trials", dest="max_trials", type=int, help="Upper bound on packets per point")
    sweep.add_argument("--scheme", choices=["ssc-sparse", "ssc-dense", "svc"])
    sweep.add_argument("--workers", type=int, help="Parallel worker processes")
    sweep.add_argument("--out", metavar="CSV", help="Output CSV path")

    complexity = subparsers.add_parser("complexity", help="MAC counts and storage against the dense codebook")
    add_common(complexity)
    complexity.add_argument("--snr", type=float, help="SNR in dB for the instrumented decodes")
    complexity.add_argument("--packets", type=int, help="Packets averaged per row")

    check = subparsers.add_parser("roundtrip-check", help="Noiseless end-to-end and codebook file checks")
    add_common(check)
    check.add_argument("--trials", type=int, default=1000, help="Noiseless packets to run")
    check.add_argument("--workers", type=int, help="Parallel worker processes")

    subparsers.add_parser("settings", help="Describe the config.ini settings")
    return parser


def _load(args, defaults=None, **extra):
    file_values = dict(defaults or {})
    if args.config:
        file_values.update(read_experiment_file(args.config))
    overrides = {key: getattr(args, key, None)
                 for key in ("N", "K", "M", "R", "r_grid", "seed", "L", "beam", "snr", "m_grid",
                             "trials", "min_errors", "max_trials", "scheme", "out")}
    if isinstance(overrides["snr"], float):
        overrides["snr"] = None
    overrides.update(extra)
    return build_config(file_values, overrides)


def _workers(args):
    return args.workers if args.workers else get_workers()


def cmd_sweep(args):
    config = _load(args)
    points = run_sweep(config, _workers(args))
    output_table(
        ("scheme", "M", "R", "D", "SNR", "trials", "errors", "BLER", "CI lo", "CI hi", "enc MACs", "dec MACs"),
        [(p.scheme, p.M, p.R, p.D, p.snr_db, p.trials, p.block_errors, p.bler, p.ci_lo, p.ci_hi,
          p.encode_macs, p.decode_macs) for p in points])
    if config.out:
        emit_csv(points, config.out, sweep_metadata(config))
        output(f"Wrote {len(points)} points to {config.out}", "message")
    return 0


def cmd_complexity(args):
    config = _load(args, {"r_grid": DEFAULT_R_GRID})
    report = complexity_report(config.params, list(config.r_values), config.mmp, config.seed,
                               packets=args.packets, snr_db=args.snr)
    output(f"Per-packet MACs, N={config.params.N} K={config.params.K} M={config.params.M}", "subtitle")
    output_table(("R", "D", "enc MACs", "dec MACs", "enc ratio", "dec ratio", "storage"),
                 [(r.R, r.D, r.encode_macs, r.decode_macs, r.encode_ratio, r.decode_ratio,
                   r.storage_cells) for r in report.rows])
    output("")
    output(f"Encoding MACs and storage versus b_I, K={config.params.K}", "subtitle")
    output_table(("N", "b_I", "R", "dense enc", "sparse enc", "dense cells", "sparse cells"),
                 [(c.N, c.b_I, c.R, c.dense_encode_macs, c.sparse_encode_macs, c.dense_storage,
                   c.sparse_storage) for c in report.curve])
    return 0


def cmd_roundtrip_check(args):
    config = _load(args, ROUNDTRIP_DEFAULTS, channel="identity", noiseless="on", min_errors=0)
    failures = 0

    points = run_sweep(config, _workers(args))
    for p in points:
        ok = p.block_errors == 0
        failures += not ok
        output(f"{'ok  ' if ok else 'FAIL'} M={p.M} R={p.R:.4f}: {p.block_errors} block errors "
               f"in {p.trials} noiseless packets", "message" if ok else "error")

    for M in config.m_values:
        for R in config.r_values:
            params = replace(config.params, M=M, R=R)
            codebook = build_codebook(params, config.seed)
            try:
                reloaded = deserialize_codebook(serialize_codebook(codebook))
                ok = (np.array_equal(reloaded.rows, codebook.rows)
                      and np.array_equal(reloaded.values, codebook.values))
            except CodebookFormatError as e:
                logger.error("Codebook reload failed: %s", e)
                ok = False
            failures += not ok
            output(f"{'ok  ' if ok else 'FAIL'} M={M} R={params.effective_R:.4f}: codebook file round trip",
                   "message" if ok else "error")

    if failures:
        output(f"{failures} check(s) failed", "error")
        return 1
    output("All round-trip checks passed", "message")
    return 0


COMMANDS = {
    "sweep": cmd_sweep,
    "complexity": cmd_complexity,
    "roundtrip-check": cmd_roundtrip_check,
}


def main(argv=None):
    """Main entry point for the SSC simulator."""
    args = build_parser().parse_args(argv)
    if args.command == "settings":
        instructions()
        return 0

    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, ValueError) as e:
        logger.error(f"Configuration error: {e}")
        output(f"Configuration error: {e}", "error", wrap=True)
        return 2
    except OSError as e:
        logger.error(f"I/O error: {e}")
        output(f"I/O error: {e}", "error", wrap=True)
        return 1
    except KeyboardInterrupt:
        output("\nInterrupted.", "message")
        return 1


if __name__ == "__main__":
    sys.exit(main())
