"""Command line entry point: ``dotsaa {synth,run,sweep,report}``.

Every command reads an optional ``key = value`` config file (``--config``) and
accepts ``--set key=value`` overrides. Outputs go under ``--out`` or, when that
is omitted, under ``$DOTSAA_OUTPUT`` (default ``./dotsaa_output``).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness as H

logger = logging.getLogger("dotsaa")


def _config(args):
    cfg = H.ExperimentConfig.load(args.config) if args.config else H.ExperimentConfig()
    if args.set:
        text = cfg.to_text() + "\n".join(args.set)
        cfg = H.ExperimentConfig.from_text(text)
    return cfg


def _outdir(args, name):
    return Path(args.out) if args.out else H.output_root() / name


def cmd_synth(args):
    cfg = _config(args)
    out = _outdir(args, "synth")
    out.mkdir(parents=True, exist_ok=True)
    problem = H.setup_problem(cfg)
    data = H.make_data(cfg, problem)
    shape = (cfg.ny, cfg.nx)
    np.savetxt(out / "mu_true.csv", data.mu_true.reshape(shape), delimiter=",", fmt="%.17g")
    H.write_pgm(out / "mu_true.pgm", data.mu_true.reshape(shape))
    np.savetxt(out / "D_clean.csv", data.D_clean, delimiter=",", fmt="%.17g")
    np.savetxt(out / "D_meas.csv", data.D_meas, delimiter=",", fmt="%.17g")
    cfg.save(out / "config.txt")
    noise_rel = float(np.linalg.norm(data.noise) / np.linalg.norm(data.D_clean))
    H.write_summary(out / "summary.txt", {
        "phantom": cfg.phantom, "noise_rel": noise_rel,
        "rho_truth": float(np.sum(data.noise**2) / np.sum(data.D_meas**2)),
        "anomaly_fraction": float(np.mean(data.mask)),
    })
    print(f"wrote phantom and data to {out}")
    return 0


def cmd_run(args):
    cfg = _config(args)
    seed = cfg.seed if args.seed is None else args.seed
    out = _outdir(args, f"run_{cfg.mode}_seed{seed}")
    rep = H.run_trial(cfg, seed)
    H.emit_outputs(rep, out)
    cfg.save(out / "config.txt")
    flag = "converged" if rep.converged else "not converged"
    print(f"{cfg.mode}: {flag} after {rep.iterations} iterations, "
          f"rho={rep.final_rho:.4g}, solves={rep.total_solves} -> {out}")
    return 0


def cmd_sweep(args):
    cfg = _config(args)
    out = _outdir(args, "sweep")
    modes = args.modes.split(",")
    s_values = [int(v) for v in args.s.split(",")]
    trials = args.trials or cfg.trials
    data = H.make_data(cfg)
    summaries = []
    for mode in modes:
        for s in (s_values if mode == "saa_replace" else [cfg.s]):
            run_cfg = cfg.replace(mode=mode, s=s, trials=trials)
            name = f"{mode}_s{s}" if mode == "saa_replace" else mode

            def progress(i, rep, name=name):
                logger.info("%s trial %d: %s iter=%d rho=%.4g solves=%d", name, i,
                            rep.status, rep.iterations, rep.final_rho, rep.total_solves)

            ex = H.run_experiment(run_cfg, data=data, progress=progress)
            H.emit_outputs(ex, out / name)
            summaries.append(ex.summary)
    table = H.format_table(summaries)
    (out / "table.txt").write_text(table + "\n")
    print(table)
    return 0


def _num(v):
    try:
        return float(v)
    except ValueError:
        return v


def cmd_report(args):
    root = Path(args.dir) if args.dir else H.output_root() / "sweep"
    summaries = []
    for path in sorted(root.glob("*/summary.txt")):
        if (path.parent / "config.txt").exists() and any(path.parent.glob("trial_*")):
            sm = {k: _num(v) for k, v in H.read_summary(path).items()}
            sm["s"] = int(sm["s"])
            sm["trials"] = int(sm["trials"])
            summaries.append(sm)
    if not summaries:
        print(f"no experiment summaries under {root}", file=sys.stderr)
        return 1
    print(H.format_table(summaries))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="dotsaa", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config entry (repeatable)")
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("synth", help="phantom and noisy data")
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="one reconstruction")
    common(p)
    p.add_argument("--seed", type=int, help="sketch seed (default: config seed)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="modes x replacement counts x trials")
    common(p)
    p.add_argument("--modes", default="full,saa,saa_replace")
    p.add_argument("--s", default="1,2,3", help="replacement counts for saa_replace")
    p.add_argument("--trials", type=int, help="trials per setting (default: config)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="aggregate table of a sweep directory")
    p.add_argument("--dir", help="sweep directory (default: $DOTSAA_OUTPUT/sweep)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
