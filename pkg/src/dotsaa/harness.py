"""Experiment driver: phantoms, synthetic data, reconstruction runs and reports.

A run reconstructs a PaLS absorption image from noisy boundary data in one of
four modes:

``full``
    all physical sources and detectors (identity sketch);
``saa``
    one fixed pair of Rademacher sketches for the whole run;
``saa_replace``
    ``saa`` up to the intermediate tolerance, then ``s`` source and ``s``
    detector directions are replaced by optimized ones and the run continues;
``sa``
    fresh sketches at every iteration.

Misfits are normalized by ``||D||_F^2``. Sketched runs also evaluate the true
misfit on the side; that work is charged to the ledger's audit phase and left
out of the reported cost.
"""
from __future__ import annotations

import csv
import dataclasses
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .directions import two_phase_replace
from .fdm import build_grid, place_sources_detectors
from .ledger import SolveLedger, ledger_cost
from .objective import DOTProblem
from .pals import PalsModel, pack
from .sketching import SketchPair, draw_sketch
from .tregs import TrOptions, TrState, tr_loop

logger = logging.getLogger(__name__)

OUTPUT_ENV = "DOTSAA_OUTPUT"
MODES = ("full", "saa", "saa_replace", "sa")
PHANTOMS = ("cup", "multi_blob", "amoeba")
HISTORY_FIELDS = ("iter", "rho_hat", "rho_true", "solves", "delta", "step_norm",
                  "accepted", "k", "phase")


def output_root(default="dotsaa_output"):
    """Output directory from ``$DOTSAA_OUTPUT`` (``./dotsaa_output`` if unset)."""
    return Path(os.environ.get(OUTPUT_ENV) or default)


# -- configuration ------------------------------------------------------------

@dataclass
class ExperimentConfig:
    """All knobs of an experiment; serialized as ``key = value`` lines."""

    nx: int = 101
    ny: int = 101
    a: float = 1.0
    c: float = 1.0
    n_s: int = 32
    n_d: int = 32
    l_s: int = 10
    l_d: int = 10
    s: int = 2
    delta: float = 1e-3            # tolerances are delta (intermediate) and delta^2
    noise_floor: float = 0.1       # expected misfit of the truth, in units of delta^2
    het_std: float = 0.01          # heterogeneity, relative to each region's value
    mu_in: float = 0.2
    mu_out: float = 0.01
    D0: float = 0.01
    nu: float = 1.0                # speed of light, unused at zero frequency
    phantom: str = "cup"
    m0: int = 25
    gamma: float = 1e-2
    eps: float = 0.1
    tau: float = 0.15
    heaviside: str = "sine"
    alpha0: float = 0.75
    beta0: float = 4.0
    mode: str = "saa_replace"
    max_iter: int = 100
    trials: int = 10
    seed: int = 0                  # sketch seed of trial 0; trial i uses seed + i
    data_seed: int = 12345
    delta0: float = 1.0            # initial trust radius
    audit: bool = True
    saa_stop: str = "estimate"     # "estimate": stop on rho_hat; "true": on audited rho
    sketch: str = "rademacher"     # "identity" runs sketched modes on all sources/detectors
    solver: str = "direct"
    lin_tol: float = 1e-8

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.noise_floor < 0:
            raise ValueError("noise_floor must be non-negative")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.phantom not in PHANTOMS:
            raise ValueError(f"phantom must be one of {PHANTOMS}, got {self.phantom!r}")
        if self.saa_stop not in ("estimate", "true"):
            raise ValueError("saa_stop must be 'estimate' or 'true'")
        if self.sketch not in ("rademacher", "identity"):
            raise ValueError("sketch must be 'rademacher' or 'identity'")
        if self.mode != "full" and not (1 <= self.l_s <= self.n_s and 1 <= self.l_d <= self.n_d):
            raise ValueError("sketch sizes must satisfy 1 <= l <= n")
        if self.mode == "saa_replace" and not 0 <= self.s < min(self.l_s, self.l_d):
            raise ValueError("replacement count s must satisfy 0 <= s < min(l_s, l_d)")
        if self.trials < 1 or self.max_iter < 0:
            raise ValueError("trials must be >= 1 and max_iter >= 0")

    @property
    def noise(self):
        """Relative noise norm ``||e||_F / ||D_clean||_F``."""
        return self.delta * np.sqrt(self.noise_floor)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_text(self):
        lines = []
        for f in dataclasses.fields(self):
            lines.append(f"{f.name} = {getattr(self, f.name)!r}".replace("'", ""))
        return "\n".join(lines) + "\n"

    def save(self, path):
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text):
        """Parse ``key = value`` lines; ``#`` starts a comment."""
        kinds = {f.name: type(f.default) for f in dataclasses.fields(cls)}
        values = {}
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {n}: expected key = value, got {raw!r}")
            key, val = (t.strip() for t in line.split("=", 1))
            if key not in kinds:
                raise ValueError(f"line {n}: unknown key {key!r}")
            values[key] = _convert(kinds[key], val, key)
        return cls(**values)

    @classmethod
    def load(cls, path):
        return cls.from_text(Path(path).read_text())


def _convert(kind, val, key):
    if kind is bool:
        low = val.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: expected a boolean, got {val!r}")
    try:
        return kind(val)
    except ValueError as exc:
        raise ValueError(f"{key}: cannot parse {val!r} as {kind.__name__}") from exc


# -- problem setup -------------------------------------------------------------

def setup_problem(config, ledger=None):
    """Grid, layout, PaLS model and :class:`DOTProblem` for ``config``."""
    grid = build_grid(config.nx, config.ny, config.a, config.c)
    layout = place_sources_detectors(grid, config.n_s, config.n_d)
    model = PalsModel(config.m0, gamma=config.gamma, eps=config.eps, tau=config.tau,
                      mu_in=config.mu_in, mu_out=config.mu_out,
                      heaviside_kind=config.heaviside)
    return DOTProblem(grid, layout, model, config.D0, ledger=ledger,
                      solver=config.solver, lin_tol=config.lin_tol)


def phantom_mask(kind, grid):
    """Boolean anomaly mask on the grid nodes.

    Shapes are given in coordinates normalized to ``[-1, 1] x [0, 1]``:
    a disk with a notch open towards the top edge (``cup``), a triangle next to
    a circle (``multi_blob``) and a star-shaped blob with a wavy rim
    (``amoeba``).
    """
    pts = grid.points()
    u, v = pts[:, 0] / grid.a, pts[:, 1] / grid.c
    if kind == "cup":
        disk = np.hypot(u, v - 0.5) < 0.22
        notch = (np.abs(u) < 0.07) & (v < 0.5)
        return disk & ~notch
    if kind == "multi_blob":
        tri = np.array([[-0.6, 0.32], [-0.18, 0.32], [-0.39, 0.68]])
        inside = np.ones(u.shape, dtype=bool)
        for k in range(3):
            (x1, y1), (x2, y2) = tri[k], tri[(k + 1) % 3]
            x3, y3 = tri[(k + 2) % 3]
            side = lambda x, y: (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)  # noqa: E731
            inside &= side(u, v) * side(x3, y3) >= 0
        circ = np.hypot(u - 0.4, v - 0.55) < 0.15
        return inside | circ
    if kind == "amoeba":
        du, dv = u - 0.05, v - 0.5
        theta = np.arctan2(dv, du)
        radius = 0.24 * (1 + 0.25 * np.sin(3 * theta) + 0.12 * np.cos(5 * theta + 0.4))
        return np.hypot(du, dv) < radius
    raise ValueError(f"unknown phantom kind {kind!r}; choose from {PHANTOMS}")


def synth_phantom(kind, grid, mu_in=0.2, mu_out=0.01, het_std=0.01, seed=0):
    """Pixel-basis truth absorption with multiplicative Gaussian heterogeneity.

    Returns ``(mu, mask)``. ``het_std`` is relative to each region's value, so
    the background standard deviation is ``het_std * mu_out``. Values are
    clipped at zero.
    """
    mask = phantom_mask(kind, grid)
    base = np.where(mask, mu_in, mu_out).astype(float)
    if het_std < 0:
        raise ValueError("het_std must be non-negative")
    if het_std > 0:
        rng = np.random.default_rng(seed)
        base = base * (1.0 + het_std * rng.standard_normal(base.shape))
    return np.clip(base, 0.0, None), mask


@dataclass
class DataSet:
    """Synthetic measurements ``D_meas = D_clean + noise`` (``n_d x n_s``)."""

    D_meas: np.ndarray
    D_clean: np.ndarray
    noise: np.ndarray
    delta: float
    seed: int
    rho_floor: float
    mu_true: np.ndarray = None
    mask: np.ndarray = None


def gen_data(problem, mu_true, delta, seed):
    """Noisy data for a pixel-basis truth with ``||e||_F = delta ||D_clean||_F``."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    D_clean = problem.measure_mu(mu_true)
    noise = np.zeros_like(D_clean)
    if delta > 0:
        rng = np.random.default_rng(seed)
        e = rng.standard_normal(D_clean.shape)
        noise = e * (delta * np.linalg.norm(D_clean) / np.linalg.norm(e))
    return DataSet(D_clean + noise, D_clean, noise, delta, seed, delta**2, mu_true)


def make_data(config, problem=None):
    """Phantom plus data for ``config`` (seeded by ``config.data_seed``)."""
    problem = problem or setup_problem(config)
    mu, mask = synth_phantom(config.phantom, problem.grid, config.mu_in, config.mu_out,
                             config.het_std, seed=config.data_seed)
    data = gen_data(problem, mu, config.noise, config.data_seed + 1)
    data.mask = mask
    return data


def initial_guess(model, a=1.0, c=1.0, alpha0=0.5, beta0=4.0):
    """25 bases on a 5 x 5 lattice with checkerboard signs (12 positive).

    Centers span ``[-0.6 a, 0.6 a] x [0.2 c, 0.8 c]``; all dilations equal
    ``beta0``.
    """
    if model.m0 != 25:
        raise ValueError("the lattice initial guess needs m0 = 25")
    cx = np.linspace(-0.6 * a, 0.6 * a, 5)
    cy = np.linspace(0.2 * c, 0.8 * c, 5)
    CX, CY = np.meshgrid(cx, cy)
    ij = np.add.outer(np.arange(5), np.arange(5))
    alpha = np.where(ij % 2 == 0, -alpha0, alpha0).ravel()
    beta = np.full(25, float(beta0))
    return pack(alpha, beta, np.column_stack([CX.ravel(), CY.ravel()]))


# -- single run ----------------------------------------------------------------

@dataclass
class RunReport:
    """Outcome of one reconstruction run.

    ``history`` has one row per iteration plus the starting point. ``rho_true``
    is the audited misfit of the current iterate (equal to ``rho_hat`` in full
    mode). ``under_m`` counts iterations with ``rho_hat < rho_true`` among the
    ``under_n`` iterations considered (post-replacement ones for
    ``saa_replace``).
    """

    mode: str
    seed: int
    s: int
    history: list
    p: np.ndarray
    mu: np.ndarray
    shape: tuple
    status: str
    converged: bool           # audited misfit reached delta^2
    converged_estimate: bool  # optimized misfit reached its final tolerance
    iterations: int
    ledger: dict
    cost_check: int
    under_m: int
    under_n: int
    replaced_at: int | None = None
    sketch: SketchPair | None = None
    replace_log: list = field(default_factory=list)
    final_rho: float = np.nan
    final_rho_hat: float = np.nan
    elapsed: float = 0.0
    l_s: int = 0
    l_d: int = 0

    @property
    def total_solves(self):
        return self.ledger["total_solves"]

    @property
    def under_ratio(self):
        return self.under_m / self.under_n if self.under_n else np.nan


class _Objective:
    """Normalized (sketched) residual and Jacobian for the optimizer."""

    def __init__(self, problem, data, sketch):
        self.problem = problem
        self.D = data.D_meas
        self.dn = float(np.sum(self.D**2))
        self.sketch = sketch

    def _factor(self):
        return np.sqrt(self.sketch.scale() / self.dn)

    def residual(self, p):
        Rs = self.problem.sketched_residual(p, self.sketch, self.D)
        return Rs.ravel(order="F") * self._factor()

    def jacobian(self, p):
        return self.problem.jacobian_sketched(p, self.sketch) * self._factor()


def run_trial(config, trial_seed=None, data=None, problem=None):
    """Run one reconstruction in ``config.mode`` and return a :class:`RunReport`."""
    seed = config.seed if trial_seed is None else int(trial_seed)
    t0 = time.perf_counter()
    ledger = SolveLedger()
    problem = setup_problem(config, ledger) if problem is None else problem
    problem.ledger = ledger
    data = make_data(config, problem) if data is None else data
    p0 = initial_guess(problem.model, config.a, config.c, config.alpha0, config.beta0)
    mode = config.mode
    tol_final = config.delta**2

    identity = mode == "full" or config.sketch == "identity"
    if identity:
        sketch = SketchPair.identity(config.n_s, config.n_d)
    else:
        sketch = draw_sketch(config.n_s, config.l_s, config.n_d, config.l_d, seed)
    obj = _Objective(problem, data, sketch)
    audited = config.audit and mode != "full"
    stop_on_true = mode == "saa_replace" or (mode in ("saa", "sa") and config.saa_stop == "true")
    phase = {"name": "pre"}

    def audit(p):
        with problem.audit():
            return problem.normalized_misfit(p, data.D_meas)

    def callback(state, row):
        row["phase"] = phase["name"]
        row["solves"] = ledger.total_solves
        row["rho_hat"] = row["misfit"]
        if mode == "full":
            row["rho_true"] = row["misfit"]
        elif audited:
            row["rho_true"] = audit(state.p)
        else:
            row["rho_true"] = np.nan
        return phase["stop_true"] and row["rho_true"] <= tol_final

    refresh = None
    if mode == "sa" and not identity:
        rng = np.random.default_rng(seed)

        def refresh():
            obj.sketch = draw_sketch(config.n_s, config.l_s, config.n_d, config.l_d,
                                     int(rng.integers(2**63 - 1)))

    state = TrState(p0, delta=config.delta0)
    replaced_at = None
    replace_log = []
    if mode == "saa_replace":
        phase["stop_true"] = False
        opts = TrOptions(tol=config.delta, max_iter=config.max_iter)
        tr_loop(state, obj.residual, obj.jacobian, opts, callback)
        post_start = len(state.history)
        if state.status == "converged":
            replaced_at = state.iteration
            ledger.set_phase("post")
            phase["name"] = "post"
            phase["stop_true"] = True
            J = problem.full_jacobian_event(state.p)
            new, log = two_phase_replace(obj.sketch, J, config.s)
            obj.sketch = new
            replace_log = log.steps
            opts = TrOptions(tol=tol_final, max_iter=config.max_iter - state.iteration)
            pre_rows = state.history
            state.history = []
            tr_loop(state, obj.residual, obj.jacobian, opts, callback)
            # drop the restart row: same iterate, only the sketch changed
            state.history = pre_rows + state.history[1:]
    else:
        phase["stop_true"] = stop_on_true
        tol = 0.0 if (mode != "full" and config.saa_stop == "true") else tol_final
        opts = TrOptions(tol=tol, max_iter=config.max_iter)
        tr_loop(state, obj.residual, obj.jacobian, opts, callback, refresh=refresh)
        post_start = 0

    history = _fill_history(state.history)
    if mode == "saa_replace":
        under_rows = history[post_start:] if replaced_at is not None else []
    else:
        under_rows = history[1:]
    if audited:
        under_m = int(sum(r["rho_hat"] < r["rho_true"] for r in under_rows))
        under_n = len(under_rows)
    else:
        under_m = under_n = 0

    last = history[-1]
    rho_true_seen = [r["rho_true"] for r in history if np.isfinite(r["rho_true"])]
    converged = bool(rho_true_seen) and min(rho_true_seen) <= tol_final
    if mode == "saa_replace":
        conv_est = replaced_at is not None and (state.status == "converged"
                                                or last["rho_hat"] <= tol_final)
    else:
        conv_est = last["rho_hat"] <= tol_final
    totals = ledger.as_dict()
    cost = ledger_cost(totals["function_evals"], totals["jacobian_evals"],
                       sketch.l_s, sketch.l_d, totals["full_jacobian_events"],
                       config.n_s, config.n_d)
    return RunReport(
        mode=mode, seed=seed, s=config.s if mode == "saa_replace" else 0,
        history=history, p=state.p, mu=problem.mu(state.p),
        shape=(config.ny, config.nx), status=state.status, converged=converged,
        converged_estimate=bool(conv_est), iterations=state.iteration, ledger=totals,
        cost_check=cost, under_m=under_m, under_n=under_n, replaced_at=replaced_at,
        sketch=obj.sketch, replace_log=replace_log, final_rho=last["rho_true"],
        final_rho_hat=last["rho_hat"], elapsed=time.perf_counter() - t0,
        l_s=sketch.l_s, l_d=sketch.l_d)


def _fill_history(rows):
    """Normalize optimizer rows; rejected steps repeat the current iterate's values."""
    out = []
    prev = None
    for row in rows:
        r = {k: row.get(k) for k in HISTORY_FIELDS}
        if row.get("rho_hat") is None:       # rejected step: no callback ran
            r["rho_hat"] = row["misfit"]
            r["rho_true"] = prev["rho_true"]
            r["solves"] = prev["solves"]
            r["phase"] = prev["phase"]
        r["accepted"] = bool(row["accepted"])
        r["k"] = int(row.get("k") or 0)
        out.append(r)
        prev = r
    return out


# -- experiments ---------------------------------------------------------------

@dataclass
class ExperimentReport:
    """Per-trial reports plus the averages printed by ``report``."""

    config: ExperimentConfig
    trials: list
    summary: dict


def aggregate(reports):
    """Means over trials of iteration, evaluation and solve counts."""
    def mean(key):
        return float(np.mean([key(r) for r in reports]))

    out = {
        "mode": reports[0].mode,
        "s": reports[0].s,
        "trials": len(reports),
        "iterations": mean(lambda r: r.iterations),
        "function_evals": mean(lambda r: r.ledger["function_evals"]),
        "jacobian_evals": mean(lambda r: r.ledger["jacobian_evals"]),
        "full_jacobian_events": mean(lambda r: r.ledger["full_jacobian_events"]),
        "total_solves": mean(lambda r: r.total_solves),
        "audit_solves": mean(lambda r: r.ledger["audit_solves"]),
        "converged_rate": mean(lambda r: float(r.converged)),
        "converged_estimate_rate": mean(lambda r: float(r.converged_estimate)),
        "under_m": mean(lambda r: r.under_m),
        "under_n": mean(lambda r: r.under_n),
        "final_rho": mean(lambda r: r.final_rho),
        "final_rho_hat": mean(lambda r: r.final_rho_hat),
    }
    ratios = [r.under_ratio for r in reports if r.under_n]
    out["under_ratio"] = float(np.mean(ratios)) if ratios else float("nan")
    return out


def run_experiment(config, data=None, progress=None):
    """Run ``config.trials`` trials (sketch seeds ``seed, seed+1, ...``)."""
    problem = setup_problem(config)
    data = make_data(config, problem) if data is None else data
    reports = []
    for i in range(config.trials):
        rep = run_trial(config, config.seed + i, data=data, problem=problem)
        reports.append(rep)
        if progress is not None:
            progress(i, rep)
    return ExperimentReport(config, reports, aggregate(reports))


# -- output --------------------------------------------------------------------

def write_pgm(path, image, lo=None, hi=None):
    """Plain (P2) graymap, linearly scaled from ``[lo, hi]`` to ``0..255``."""
    image = np.asarray(image, dtype=float)
    lo = float(image.min()) if lo is None else lo
    hi = float(image.max()) if hi is None else hi
    span = hi - lo if hi > lo else 1.0
    g = np.clip(np.rint(255 * (image - lo) / span), 0, 255).astype(int)
    rows, cols = g.shape
    with open(path, "w") as fh:
        fh.write(f"P2\n{cols} {rows}\n255\n")
        for line in g:
            fh.write(" ".join(map(str, line)) + "\n")


def read_pgm(path):
    tokens = []
    with open(path) as fh:
        for line in fh:
            tokens.extend(line.split("#", 1)[0].split())
    if tokens[0] != "P2":
        raise ValueError("only plain graymaps are supported")
    cols, rows, _ = map(int, tokens[1:4])
    return np.array(tokens[4:], dtype=int).reshape(rows, cols)


def write_history(path, history):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HISTORY_FIELDS)
        for row in history:
            w.writerow([_fmt(row[k]) for k in HISTORY_FIELDS])


def read_history(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_summary(path, values):
    with open(path, "w") as fh:
        for key, val in values.items():
            fh.write(f"{key} = {_fmt(val)}\n")


def read_summary(path):
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = (t.strip() for t in line.split("=", 1))
            out[k] = v
    return out


def trial_summary(rep):
    vals = {
        "mode": rep.mode, "seed": rep.seed, "s": rep.s, "status": rep.status,
        "iterations": rep.iterations, "converged": rep.converged,
        "converged_estimate": rep.converged_estimate,
        "final_rho": rep.final_rho, "final_rho_hat": rep.final_rho_hat,
        "under_m": rep.under_m, "under_n": rep.under_n,
        "replaced_at": "" if rep.replaced_at is None else rep.replaced_at,
        "l_s": rep.l_s, "l_d": rep.l_d,
    }
    vals.update(rep.ledger)
    vals["ledger_cost"] = rep.cost_check
    vals["elapsed_s"] = round(rep.elapsed, 3)
    return vals


def emit_outputs(report, directory):
    """Write a run or experiment report under ``directory``.

    A :class:`RunReport` produces ``history.csv``, ``mu.pgm``, ``mu.csv``,
    ``summary.txt`` and ``W.csv``/``V.csv``. An :class:`ExperimentReport` writes
    ``config.txt``, ``summary.txt`` and one ``trial_XXX`` directory per trial.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if not os.access(directory, os.W_OK):
        raise PermissionError(f"cannot write to {directory}")
    if isinstance(report, ExperimentReport):
        report.config.save(directory / "config.txt")
        write_summary(directory / "summary.txt", report.summary)
        for i, rep in enumerate(report.trials):
            emit_outputs(rep, directory / f"trial_{i:03d}")
        return directory
    write_history(directory / "history.csv", report.history)
    image = report.mu.reshape(report.shape)
    np.savetxt(directory / "mu.csv", image, delimiter=",", fmt="%.17g")
    write_pgm(directory / "mu.pgm", image)
    write_summary(directory / "summary.txt", trial_summary(report))
    if report.sketch is not None:
        report.sketch.to_csv(directory / "W.csv", directory / "V.csv")
    return directory


def format_table(summaries):
    """Text table of aggregate summaries; unconverged counts are parenthesized."""
    head = f"{'mode':<12}{'s':>3}{'trials':>7}{'iter':>9}{'F':>8}{'J':>8}{'solves':>10}" \
           f"{'conv':>7}{'m/n':>12}"
    lines = [head, "-" * len(head)]
    for sm in summaries:
        it = f"{sm['iterations']:.1f}"
        if sm["converged_rate"] < 1.0:
            it = f"({it})"
        mn = "" if not np.isfinite(sm["under_ratio"]) else \
            f"{sm['under_m']:.1f}/{sm['under_n']:.1f}"
        lines.append(f"{sm['mode']:<12}{sm['s']:>3}{sm['trials']:>7}{it:>9}"
                     f"{sm['function_evals']:>8.1f}{sm['jacobian_evals']:>8.1f}"
                     f"{sm['total_solves']:>10.1f}{sm['converged_rate']:>7.2f}{mn:>12}")
    return "\n".join(lines)
