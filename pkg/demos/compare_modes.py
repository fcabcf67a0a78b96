"""Reconstructions with full data, a fixed sketch, and sketch replacement.

The desk experiment on its default 101 x 101 grid, cut down to 3 sketch
seeds so it finishes in about a minute. For each mode it prints whether
the audited misfit reached delta^2, the non-audit PDE solves, and the
underestimation count m/n. Images are written under $DOTSAA_OUTPUT/demo.

Run: python3 demos/compare_modes.py
"""
from dotsaa.harness import (ExperimentConfig, emit_outputs, format_table, make_data,
                            output_root, run_experiment, setup_problem)

cfg = ExperimentConfig(trials=3)
data = make_data(cfg, setup_problem(cfg))
summaries = []
for mode in ("full", "saa", "saa_replace"):
    ex = run_experiment(cfg.replace(mode=mode, trials=1 if mode == "full" else cfg.trials),
                        data=data)
    for rep in ex.trials:
        print(f"{mode:<12} seed {rep.seed}: {rep.status:<9} rho/delta^2 = "
              f"{rep.final_rho / cfg.delta**2:7.3f}  solves = {rep.total_solves}")
    emit_outputs(ex, output_root() / "demo" / mode)
    summaries.append(ex.summary)
print()
print(format_table(summaries))
