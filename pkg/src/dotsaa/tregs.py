"""Trust-region Gauss-Newton with truncated-SVD model steps.

Each step solves the Gauss-Newton model ``J d ~ -r`` by truncated SVD. The
truncation level is chosen by generalized cross validation and then lowered
until the step fits inside the trust region, so steps favour the dominant
singular directions. Evaluators supply ``r`` and ``J`` already scaled so that
the objective is ``||r||^2``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)


@dataclass
class GNStep:
    step: np.ndarray
    predicted: float        # predicted decrease of ||r||^2
    k: int                  # truncation level used
    k_gcv: int              # truncation level chosen by GCV
    tr_active: bool         # the trust region limited the step
    null: bool = False      # zero Jacobian, no step possible


def gcv_scores(s, beta, rnorm2, m):
    """GCV score ``m ||r - U_k U_k^T r||^2 / (m - k)^2`` for ``k = 1..len(s)``.

    ``beta = U^T r``. A level with ``k >= m`` fits the data exactly and is
    scored 0.
    """
    k = np.arange(1, len(s) + 1)
    res = np.maximum(rnorm2 - np.cumsum(beta**2), 0.0)
    res[res <= 1e-14 * rnorm2] = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(k < m, m * res / np.maximum(m - k, 1) ** 2, 0.0)
    return scores


def gn_step(J, r, delta, rank_rtol=None):
    """Truncated-SVD Gauss-Newton step restricted to radius ``delta``.

    Returns a :class:`GNStep`. Ties in the GCV score go to the smallest
    truncation level.
    """
    J = np.atleast_2d(np.asarray(J, dtype=float))
    r = np.asarray(r, dtype=float).ravel()
    m, n = J.shape
    if r.size != m:
        raise ValueError(f"residual length {r.size} does not match Jacobian rows {m}")
    U, s, Yt = np.linalg.svd(J, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return GNStep(np.zeros(n), 0.0, 0, 0, False, null=True)
    rtol = max(m, n) * np.finfo(float).eps if rank_rtol is None else rank_rtol
    rank = int(np.sum(s > rtol * s[0]))
    s, U, Yt = s[:rank], U[:, :rank], Yt[:rank]
    beta = U.T @ r
    rnorm2 = float(r @ r)
    scores = gcv_scores(s, beta, rnorm2, m)
    best = scores.min()
    k_gcv = int(np.flatnonzero(scores <= best + 1e-12 * max(best, 1e-300))[0]) + 1

    coef = -beta / s                                   # step coordinates in Y
    norms2 = np.cumsum(coef**2)
    if norms2[k_gcv - 1] <= delta**2:
        k, tr_active = k_gcv, False
        c = coef[:k]
    else:
        # largest level that fits, plus the part of the next direction
        # that reaches the boundary
        k = int(np.sum(norms2[:k_gcv] <= delta**2))
        fit = norms2[k - 1] if k else 0.0
        t = np.sqrt(max(delta**2 - fit, 0.0)) / abs(coef[k])
        c = np.append(coef[:k], t * coef[k])
        k, tr_active = k + 1, True
    step = Yt[:k].T @ c
    Js = J @ step
    predicted = -(2.0 * float(r @ Js) + float(Js @ Js))
    return GNStep(step, predicted, k, k_gcv, tr_active)


@dataclass
class TrState:
    """Mutable optimizer state; ``history`` holds one row per iteration."""

    p: np.ndarray
    delta: float = 1.0
    iteration: int = 0
    misfit: float = np.inf
    history: list = field(default_factory=list)
    status: str = "running"


@dataclass
class TrOptions:
    tol: float = 1e-6
    max_iter: int = 100
    eta_accept: float = 1e-4
    eta_good: float = 0.75
    eta_bad: float = 0.25
    delta_min: float = 1e-14
    delta_max: float = 1e6
    # predicted decreases below this fraction of the misfit are rounding noise
    pred_rtol: float = 1e-12


def tr_loop(state, residual, jacobian, options=None, callback=None, refresh=None):
    """Minimize ``||residual(p)||^2`` from ``state.p``.

    Parameters
    ----------
    state : TrState
        Updated in place and returned.
    residual : callable
        ``residual(p) -> r`` (scaled so the objective is ``r @ r``).
    jacobian : callable
        ``jacobian(p) -> J`` at a point where ``residual`` was just evaluated.
    options : TrOptions
    callback : callable, optional
        ``callback(state, row) -> bool`` after iteration 0 and every accepted
        step; may add fields to ``row``; returning True stops the loop.
    refresh : callable, optional
        Called at the start of every iteration (used to redraw sketches);
        the objective and Jacobian at the current point are then recomputed.

    Stops when the misfit reaches ``options.tol``, after ``max_iter``
    iterations, when the radius drops below ``delta_min``, or when the model
    predicts no decrease above rounding level (``status == "stalled"``).
    Every trial step, accepted or not, counts as one iteration.
    """
    opt = options or TrOptions()
    p = np.asarray(state.p, dtype=float).copy()
    r = residual(p)
    f = float(r @ r)
    state.misfit = f
    row = {"iter": state.iteration, "misfit": f, "delta": state.delta,
           "step_norm": 0.0, "accepted": True, "k": 0}
    state.history.append(row)
    if callback is not None and callback(state, row):
        state.status = "callback"
        return state
    if f <= opt.tol:
        state.status = "converged"
        return state
    J = jacobian(p)
    n_iter = 0
    while True:
        if n_iter >= opt.max_iter:
            state.status = "max_iter"
            break
        if state.delta < opt.delta_min:
            state.status = "small_radius"
            break
        if refresh is not None and n_iter > 0:
            refresh()
            r = residual(p)
            f = float(r @ r)
            J = jacobian(p)
        n_iter += 1
        gs = gn_step(J, r, state.delta)
        if gs.null:
            state.status = "null_step"
            break
        if gs.predicted <= opt.pred_rtol * f:
            state.status = "stalled"
            break
        p_trial = p + gs.step
        try:
            r_trial = residual(p_trial)
            f_trial = float(r_trial @ r_trial)
        except (ArithmeticError, RuntimeError, ValueError) as exc:
            logger.debug("trial evaluation failed: %s", exc)
            f_trial = np.inf
        step_norm = float(np.linalg.norm(gs.step))
        if not np.isfinite(f_trial):
            ratio = -np.inf
        elif gs.predicted > 0:
            ratio = (f - f_trial) / gs.predicted
        else:
            ratio = -np.inf
        accepted = ratio > opt.eta_accept
        if ratio < opt.eta_bad:
            state.delta = min(state.delta, step_norm) / 4.0
        elif ratio > opt.eta_good and gs.tr_active:
            state.delta = min(2.0 * state.delta, opt.delta_max)
        state.iteration += 1
        row = {"iter": state.iteration, "misfit": f_trial if accepted else f,
               "delta": state.delta, "step_norm": step_norm, "accepted": accepted,
               "k": gs.k, "ratio": ratio}
        state.history.append(row)
        if accepted:
            p, r, f = p_trial, r_trial, f_trial
            state.p = p
            state.misfit = f
            if callback is not None and callback(state, row):
                state.status = "callback"
                break
            if f <= opt.tol:
                state.status = "converged"
                break
            J = jacobian(p)
    state.p = p
    return state
