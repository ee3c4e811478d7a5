"""Command-line front end: ``sweep``, ``mse-curve`` and ``validate``."""
import argparse
import os
import sys

from . import __version__, engine, output
from .config import ConfigError, parse_config

__all__ = ["build_parser", "main"]


def build_parser():
    p = argparse.ArgumentParser(
        prog="fronthaul-mimo",
        description="Massive MIMO with low-resolution converters under a fronthaul budget.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file with SystemConfig keys (defaults if omitted)")
        sp.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        sp.add_argument("--quiet", action="store_true", help="no progress output on stderr")

    sw = sub.add_parser("sweep", help="outage rates over the (Q, B) fronthaul trade-off")
    common(sw)
    sw.add_argument("--trials", type=int, help="user drops per (Q, CSI mode)")
    sw.add_argument("--csi", choices=("perfect", "estimated", "both"))
    sw.add_argument("--workers", type=int, help="worker processes")
    sw.add_argument("--out", required=True, help="output CSV path")

    mc = sub.add_parser("mse-curve", help="channel-estimation MSE versus pilot length")
    common(mc)
    mc.add_argument("--out", required=True, help="output CSV path")

    va = sub.add_parser("validate", help="run the built-in acceptance checks")
    va.add_argument("--seed", type=int, default=1)
    va.add_argument("--only", type=int, nargs="+", metavar="ID", help="run only these check ids")
    return p


def _progress(quiet, fmt):
    if quiet:
        return None
    return lambda row: print(fmt(row), file=sys.stderr, flush=True)


def _check_writable(path):
    d = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(d) or not os.access(d, os.W_OK) or os.path.isdir(path):
        raise OSError(f"cannot write to {path}")


def _run_output(args, command, config, compute, to_csv):
    _check_writable(args.out)
    manifest = output.RunManifest(command, config.to_dict(), config.digest(), config.seed, __version__,
                                  outputs=[args.out])
    rows = compute()
    output.write_text(args.out, to_csv(rows))
    manifest.finish()
    manifest.write(args.out)
    return 0


def _cmd_sweep(args):
    config = parse_config(args.config, seed=args.seed, trials=args.trials, csi=args.csi,
                          workers=args.workers)
    progress = _progress(args.quiet, lambda r: (
        f"Q={r.q} B={r.b} {r.csi_mode}: UL {r.ul_rate:.4f} DL {r.dl_rate:.4f} bidir {r.bidir_rate:.4f}"))
    return _run_output(args, "sweep", config,
                       lambda: engine.fronthaul_sweep(config, progress=progress), output.sweep_csv)


def _cmd_mse_curve(args):
    config = parse_config(args.config, seed=args.seed)
    progress = _progress(args.quiet, lambda r: (
        f"{r.mode} Q={r.q} n_p={r.n_p} rho={r.rho_db} dB: MSE {r.mse_empirical:.5f}"))
    return _run_output(args, "mse-curve", config,
                       lambda: engine.mse_curve(config, progress=progress), output.mse_csv)


def _cmd_validate(args):
    from .validation import run_checks

    results = run_checks(seed=args.seed, only=args.only, stream=sys.stdout)
    failed = [r.id for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {"sweep": _cmd_sweep, "mse-curve": _cmd_mse_curve, "validate": _cmd_validate}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
