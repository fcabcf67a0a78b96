"""Frobenius-optimal replacement of simultaneous source/detector directions.

Given the full Jacobian ``J`` (rows ordered source-outer, detector-inner) and
sketches ``W``/``V`` with orthonormal columns, the sketched Jacobian norm
``||kron(W.T, V.T) J||_F^2`` can be written as ``||V.T [w_1*J ... w_ls*J]||_F^2``
or ``||W.T [v_1(*)J ... v_ld(*)J]||_F^2``. Each remove/add step then reduces to
picking leading left singular vectors of a small matrix.

The primitives (:func:`remove_detectors`, :func:`add_sources`, ...) assume
orthonormal columns. :func:`two_phase_replace` accepts Rademacher sketches,
orthonormalizes them first and rescales its output to column norms
``sqrt(n_s)`` and ``sqrt(n_d)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .sketching import OPTIMIZED, RETAINED, SketchPair

logger = logging.getLogger(__name__)


def _blocks(J, n_s, n_d):
    J = np.asarray(J, dtype=float)
    if J.ndim != 2 or J.shape[0] != n_s * n_d:
        raise ValueError(f"Jacobian must have {n_s * n_d} rows, got {J.shape}")
    return J.reshape(n_s, n_d, J.shape[1])


def star(w, J, n_d):
    """``w * J``: sum of per-source Jacobian blocks weighted by ``w`` (n_d x n_p)."""
    w = np.asarray(w, dtype=float)
    return np.einsum("j,jdk->dk", w, _blocks(J, w.size, n_d))


def circled_star(v, J, n_s):
    """``v (*) J``: entry ``(j, k)`` is ``v^T J_{j,k}`` (n_s x n_p)."""
    v = np.asarray(v, dtype=float)
    return np.einsum("d,jdk->jk", v, _blocks(J, n_s, v.size))


def source_contracted(W, J, n_d):
    """``[w_1*J  w_2*J ... ]``, shape ``(n_d, l_s * n_p)``."""
    W = np.asarray(W, dtype=float)
    Jb = _blocks(J, W.shape[0], n_d)
    blocks = np.einsum("ji,jdk->idk", W, Jb)            # (l_s, n_d, n_p)
    return np.concatenate(list(blocks), axis=1) if len(blocks) else np.zeros((n_d, 0))


def detector_contracted(V, J, n_s):
    """``[v_1(*)J  v_2(*)J ... ]``, shape ``(n_s, l_d * n_p)``."""
    V = np.asarray(V, dtype=float)
    Jb = _blocks(J, n_s, V.shape[0])
    blocks = np.einsum("dq,jdk->qjk", V, Jb)            # (l_d, n_s, n_p)
    return np.concatenate(list(blocks), axis=1) if len(blocks) else np.zeros((n_s, 0))


def sketched_jacobian_norm2(W, V, J):
    """``||kron(W.T, V.T) J||_F^2`` via the contracted blocks."""
    W = np.asarray(W, dtype=float)
    V = np.asarray(V, dtype=float)
    return float(np.sum((V.T @ source_contracted(W, J, V.shape[0])) ** 2))


def complement_basis(M):
    """Orthonormal basis of the orthogonal complement of ``range(M)``."""
    M = np.asarray(M, dtype=float)
    n, l = M.shape
    if l == 0:
        return np.eye(n)
    Q, _ = sla.qr(M, mode="full")
    return Q[:, l:]


@dataclass
class StepResult:
    """Outcome of one remove/add step.

    ``basis`` is the new sketch (orthonormal columns), ``gamma`` the
    coefficient matrix from the SVD, ``singular_values`` the spectrum of the
    matrix that was decomposed, ``attained`` the norm contribution achieved
    and ``svd_shape`` the size of that matrix.
    """

    basis: np.ndarray
    gamma: np.ndarray
    singular_values: np.ndarray
    attained: float
    svd_shape: tuple

    def __iter__(self):
        yield self.basis
        yield self.gamma


def _left_singular(X, k):
    # a wide X already yields a square U from the thin SVD
    U, s, _ = np.linalg.svd(X, full_matrices=X.shape[0] > X.shape[1])
    return U[:, :k], s


def _remove(Q, X, s, what):
    l = Q.shape[1]
    if not 0 <= s < l:
        raise ValueError(f"can remove between 0 and {l - 1} {what}, got {s}")
    G, sv = _left_singular(Q.T @ X, l - s)
    new = Q @ G
    attained = float(np.sum(sv[: l - s] ** 2))
    return StepResult(new, G, sv, attained, (l, X.shape[1]))


def _add(Q, X, s, what):
    n, l = Q.shape
    if not 0 <= s <= n - l:
        raise ValueError(f"can add between 0 and {n - l} {what}, got {s}")
    Qc = complement_basis(Q)
    Y = Qc.T @ X
    G, sv = _left_singular(Y, s)
    new = np.hstack([Q, Qc @ G])
    attained = float(np.sum(sv[:s] ** 2))
    return StepResult(new, G, sv, attained, Y.shape)


def remove_detectors(W, V, J, s):
    """Keep the ``l_d - s`` detector directions in ``range(V)`` maximizing the norm.

    Decomposes ``V^T [w_1*J ... w_ls*J]`` (size ``l_d x l_s n_p``).
    """
    V = np.asarray(V, dtype=float)
    return _remove(V, source_contracted(W, J, V.shape[0]), s, "detectors")


def remove_sources(W, V, J, s):
    """Keep the ``l_s - s`` source directions in ``range(W)`` maximizing the norm."""
    W = np.asarray(W, dtype=float)
    return _remove(W, detector_contracted(V, J, W.shape[0]), s, "sources")


def add_detectors(W, V, J, s):
    """Append ``s`` detector directions orthogonal to ``V`` maximizing the norm.

    Decomposes ``V_c^T [w_1*J ... w_ls*J]`` where ``[V V_c]`` is orthogonal.
    """
    V = np.asarray(V, dtype=float)
    return _add(V, source_contracted(W, J, V.shape[0]), s, "detectors")


def add_sources(W, V, J, s):
    """Append ``s`` source directions orthogonal to ``W`` maximizing the norm."""
    W = np.asarray(W, dtype=float)
    return _add(W, detector_contracted(V, J, W.shape[0]), s, "sources")


def orthonormalize(M):
    """Orthonormal basis of ``range(M)`` from a thin QR, columns in order."""
    Q, R = np.linalg.qr(np.asarray(M, dtype=float))
    # fix signs so the basis follows the original columns
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


@dataclass
class ReplaceLog:
    steps: list = field(default_factory=list)

    def add(self, kind, result, norm2):
        self.steps.append({"step": kind, "svd_shape": result.svd_shape,
                           "attained": result.attained, "objective": norm2})


def two_phase_replace(sketch, J, s):
    """Replace ``s`` simultaneous sources and ``s`` detectors by optimized ones.

    Phase one alternately removes one source direction and one detector
    direction (``s`` times each); phase two alternately adds one optimized
    source and one optimized detector. Contractions are recomputed after every
    step.

    Parameters
    ----------
    sketch : SketchPair
        Current simultaneous sources/detectors.
    J : array, shape (n_s*n_d, n_p)
        Full Jacobian at the current iterate.
    s : int
        Number of directions replaced on each side.

    Returns
    -------
    new_sketch : SketchPair
        Same sizes as ``sketch``; columns scaled to norms ``sqrt(n_s)`` and
        ``sqrt(n_d)``; the last ``s`` columns of each matrix are tagged
        ``"optimized"``, the others ``"retained"``.
    log : ReplaceLog
        Per-step SVD sizes and objective values (orthonormal scaling).
    """
    l_s, l_d = sketch.l_s, sketch.l_d
    if not 0 <= s < min(l_s, l_d):
        raise ValueError(f"s must satisfy 0 <= s < min(l_s, l_d) = {min(l_s, l_d)}")
    n_s, n_d = sketch.n_s, sketch.n_d
    Wq = orthonormalize(sketch.W / np.sqrt(n_s))
    Vq = orthonormalize(sketch.V / np.sqrt(n_d))
    log = ReplaceLog()
    for _ in range(s):
        r = remove_sources(Wq, Vq, J, 1)
        Wq = r.basis
        log.add("remove_source", r, sketched_jacobian_norm2(Wq, Vq, J))
        r = remove_detectors(Wq, Vq, J, 1)
        Vq = r.basis
        log.add("remove_detector", r, sketched_jacobian_norm2(Wq, Vq, J))
    for _ in range(s):
        r = add_sources(Wq, Vq, J, 1)
        Wq = r.basis
        log.add("add_source", r, sketched_jacobian_norm2(Wq, Vq, J))
        r = add_detectors(Wq, Vq, J, 1)
        Vq = r.basis
        log.add("add_detector", r, sketched_jacobian_norm2(Wq, Vq, J))
    w_tags = [RETAINED] * (l_s - s) + [OPTIMIZED] * s
    v_tags = [RETAINED] * (l_d - s) + [OPTIMIZED] * s
    new = SketchPair(np.sqrt(n_s) * Wq, np.sqrt(n_d) * Vq, sketch.seed, w_tags, v_tags)
    for step in log.steps:
        logger.debug("%s svd=%s objective=%.6e", step["step"], step["svd_shape"], step["objective"])
    return new, log
