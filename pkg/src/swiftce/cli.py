"""Command line entry point: ``swiftce {sweep,trial,selftest}``."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace

import numpy as np

from . import harness
from .errors import SwiftError
from .geometry import vec, virtual_channel
from .codebook import Side, build_codebook
from .harness import ExperimentConfig

log = logging.getLogger("swiftce")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--out", default="-", help="output CSV path, '-' for stdout")
    p.add_argument("--trials", type=int, help="Monte Carlo trials per SNR point")
    p.add_argument("--snr", help="comma-separated SNR list in dB")
    p.add_argument("--tc", help="comma-separated coherence times in symbols")
    p.add_argument("--schemes", help="e.g. swift,fnrb32,fnrb64,exhaustive")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swiftce", description="Adaptive mmWave channel estimation simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("sweep", help="run the full Monte Carlo sweep and write aggregate CSV"))
    tp = sub.add_parser("trial", help="run one seeded trial and print a trace")
    _common(tp)
    tp.add_argument("--index", type=int, default=0, help="trial index within the sweep")
    sp = sub.add_parser("selftest", help="run the oracle suites")
    _common(sp)
    sp.add_argument("--full", action="store_true", help="full-size suites instead of the quick ones")
    return parser


def config_from_args(args) -> ExperimentConfig:
    cfg = harness.load_config(args.config) if args.config else ExperimentConfig()
    raw = {}
    if args.seed is not None:
        raw["master_seed"] = str(args.seed)
    if args.trials is not None:
        raw["n_trials"] = str(args.trials)
    if args.snr is not None:
        raw["snr_db_list"] = args.snr
    if args.tc is not None:
        raw["t_c_list"] = args.tc
    if args.schemes is not None:
        raw["schemes"] = args.schemes
    return replace(cfg, **harness.parse_overrides(raw))


def _write(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def cmd_sweep(args) -> int:
    cfg = config_from_args(args)
    if args.out != "-":
        open(args.out, "w").close()  # fail on an unwritable path before the long run
    total = len(cfg.snr_db_list) * cfg.n_trials
    done = [0]
    t0 = time.perf_counter()

    def progress():
        done[0] += 1
        if done[0] % max(1, total // 20) == 0:
            log.info("%d/%d cells, %.0fs", done[0], total, time.perf_counter() - t0)

    results = harness.run_sweep(cfg, workers=max(1, args.workers), progress=progress)
    _write(harness.format_csv(harness.aggregate(results, cfg.schemes)), args.out)
    return 0


def cmd_trial(args) -> int:
    cfg = config_from_args(args)
    if not 0 <= args.index:
        raise SwiftError("--index must be non-negative")
    dims = cfg.dims
    cbs = (build_codebook(dims.n_bs, Side.BS), build_codebook(dims.n_ue, Side.UE))
    seeds = harness.trial_seeds(cfg, args.index)
    channels = harness.trial_channels(cfg, args.index)
    err = sys.stderr if args.out == "-" else sys.stdout
    rows = ["scheme,snr_db,t_c,user_id,t_e,r_opt,r_eff,stop_reason,support_correct"]
    for ch in channels:
        v = vec(virtual_channel(ch, *cbs))
        top = int(np.argmax(np.abs(v)))
        print(f"user {ch.user_id}: {len(ch.paths)} path(s), strongest virtual entry {top} "
              f"(bs beam {top // dims.n_ue}, ue beam {top % dims.n_ue}), |v| = {abs(v[top]):.4g}", file=err)
        for p in ch.paths:
            print(f"  alpha={p.alpha:.4g} aod={p.aod:.4f} aoa={p.aoa:.4f}", file=err)
    for snr in cfg.snr_db_list:
        nv = harness.noise_var_for(snr)
        for ch in channels:
            session = harness.MeasurementSession(ch, dims, seeds, 1.0, nv, cfg.prior)
            for scheme in cfg.schemes:
                out = harness.run_scheme(cfg, scheme, ch, seeds, nv, session)
                r_opt, ok = harness.score(cfg, ch, out, nv)
                trace = " ".join(f"{c.timeslot}:{'x' if c.failed else c.n_active}" for c in out.checkpoints)
                print(f"snr {snr:g} dB user {ch.user_id} {scheme.label}: t_e={out.t_e} "
                      f"stop={out.stop_reason.value} r_opt={r_opt:.4f} support_ok={ok}"
                      + (f" checkpoints[{trace}]" if trace else ""), file=err)
                for t_c in cfg.t_c_list:
                    r_eff = harness.effective_rate(r_opt, out.t_e, t_c)
                    rows.append(",".join([
                        scheme.label, harness._fmt(snr), str(t_c), str(ch.user_id), str(out.t_e),
                        harness._fmt(r_opt), harness._fmt(r_eff), out.stop_reason.value, str(ok),
                    ]))
    _write("\n".join(rows) + "\n", args.out)
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    seed = args.seed if args.seed is not None else 0
    results = run_selftest(quick=not args.full, seed=seed)
    lines = [r.line() for r in results]
    failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    _write("\n".join(lines) + "\n", args.out)
    return 1 if failed else 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    handlers = {"sweep": cmd_sweep, "trial": cmd_trial, "selftest": cmd_selftest}
    try:
        return handlers[args.command](args)
    except SwiftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
