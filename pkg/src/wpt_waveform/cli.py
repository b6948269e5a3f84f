"""Command-line sweep runner.

Precedence: config file > command-line flags > built-in defaults.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

from .experiment import (
    ConfigError,
    ExperimentConfig,
    _coerce,
    _FIELD_TYPES,
    emit_csv,
    format_summary,
    load_config,
    run_sweep,
    summarize,
)

log = logging.getLogger("wpt_waveform")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="wpt-sweep",
        description="Monte-Carlo comparison of multisine waveforms for wireless power transfer.",
    )
    p.add_argument("--config", help="YAML experiment file; its fields override flags")
    p.add_argument("--n", help="comma-separated tone counts, e.g. 1,2,4,8,16")
    p.add_argument("--m", help="comma-separated antenna counts, e.g. 1,2,4")
    p.add_argument("--waveforms", help="comma-separated subset of uniform,mf,opt,strongest")
    p.add_argument("--trials", type=int, help="channel realizations per cell")
    p.add_argument("--seed", type=int, help="seed of realization 0; realization r uses seed+r")
    p.add_argument("--power-dbm", type=float, dest="power_dbm", help="transmit power budget (dBm)")
    p.add_argument("--bandwidth-hz", type=float, dest="bandwidth_hz")
    p.add_argument("--center-hz", type=float, dest="center_hz")
    p.add_argument("--pdp", help="power delay profile file (delays_ns, powers_db, rx_power_dbm)")
    p.add_argument("--circuit-sim", action="store_true", default=None, dest="circuit_sim",
                   help="also simulate the rectifier circuit (slow)")
    p.add_argument("--full-rf", action="store_true", default=None, dest="full_rf",
                   help="simulate the circuit at the true carrier instead of 100 MHz")
    p.add_argument("--starts", type=int, help="optimizer starts per channel")
    p.add_argument("--init", choices=["mf", "uniform"], help="deterministic optimizer start (default mf)")
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--tol", type=float)
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--out", help="per-trial CSV output (stdout if omitted)")
    p.add_argument("--summary", help="also write per-cell means to this CSV")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values = {}
    for key, kind in _FIELD_TYPES.items():
        raw = getattr(args, key, None)
        if raw is None:
            continue
        try:
            values[key] = _coerce(kind, raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"--{key.replace('_', '-')}: {exc}") from exc
    if args.config:
        values.update(load_config(args.config))
    return ExperimentConfig(**values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
        start = time.perf_counter()
        results = run_sweep(config)
        log.info("%d trials in %.1f s", len(results), time.perf_counter() - start)
        text = emit_csv(results, config.out)
        if config.out is None:
            sys.stdout.write(text)
        if args.summary:
            with open(args.summary, "w") as fh:
                fh.write(format_summary(summarize(results)))
    except ConfigError as exc:
        print(f"configuration error:\n{exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
