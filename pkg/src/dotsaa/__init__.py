"""Sketched and optimized simultaneous sources/detectors for PaLS-based DOT."""
from .directions import (add_detectors, add_sources, circled_star, complement_basis,
                         remove_detectors, remove_sources, star, two_phase_replace)
from .fdm import (Grid2D, SolverError, SourceDetectorLayout, SparseSystem, assemble_system,
                  build_grid, place_sources_detectors, solve_adjoint, solve_forward)
from .harness import (ExperimentConfig, RunReport, emit_outputs, gen_data, initial_guess,
                      run_experiment, run_trial, synth_phantom)
from .ledger import SolveLedger, ledger_cost
from .objective import DOTProblem
from .pals import (PalsModel, csrbf, csrbf_deriv, delta, dmu_dp, heaviside, mu_from_pals,
                   pals_eval)
from .sketching import SketchPair, draw_sketch, frob_estimate
from .tregs import TrOptions, TrState, gn_step, tr_loop

__version__ = "0.1.0"

__all__ = [
    "Grid2D", "SparseSystem", "SourceDetectorLayout", "SolverError", "build_grid",
    "assemble_system", "place_sources_detectors", "solve_forward", "solve_adjoint",
    "PalsModel", "csrbf", "csrbf_deriv", "heaviside", "delta", "pals_eval", "mu_from_pals",
    "dmu_dp", "DOTProblem", "SolveLedger", "ledger_cost", "SketchPair", "draw_sketch",
    "frob_estimate", "star", "circled_star", "complement_basis", "remove_detectors",
    "remove_sources", "add_detectors", "add_sources", "two_phase_replace", "gn_step",
    "tr_loop", "TrState", "TrOptions", "ExperimentConfig", "RunReport", "synth_phantom",
    "gen_data", "initial_guess", "run_trial", "run_experiment", "emit_outputs",
]
