"""Measurements, residuals and co-state Jacobians for the PaLS/DOT problem.

Residual matrices are ``n_d x n_s`` (detectors by sources). Their vectorized
form stacks columns, so source ``j`` owns rows ``j*n_d : (j+1)*n_d`` of the
full Jacobian; sketched Jacobians use the same layout with simultaneous
sources outer and simultaneous detectors inner, i.e. they equal
``kron(W.T, V.T) @ J``.
"""
from __future__ import annotations

import logging
from contextlib import contextmanager

import numpy as np

from .fdm import assemble_system
from .ledger import SolveLedger
from .pals import dmu_dp, mu_from_pals
from .sketching import SketchPair

logger = logging.getLogger(__name__)


class DOTProblem:
    """Forward map ``p -> C^T A(p)^{-1} B`` with cached factorizations.

    Parameters
    ----------
    grid : Grid2D
    layout : SourceDetectorLayout
    model : PalsModel
    D : float or array
        Diffusion coefficient (known).
    ledger : SolveLedger, optional
    solver : {"direct", "cg"}
    lin_tol : float
    """

    def __init__(self, grid, layout, model, D, ledger=None, solver="direct", lin_tol=1e-8):
        self.grid = grid
        self.layout = layout
        self.model = model
        self.D = D
        self.ledger = ledger if ledger is not None else SolveLedger()
        self.solver = solver
        self.lin_tol = lin_tol
        self.points = grid.points()
        self.weights = grid.cell_weights()
        self._Bd = layout.B.toarray()
        self._Cd = layout.C.toarray()
        self._sys_key = None
        self._sys = None
        self._fwd = {}

    @property
    def n_s(self):
        return self.layout.n_s

    @property
    def n_d(self):
        return self.layout.n_d

    @property
    def n_p(self):
        return self.model.n_p

    # -- assembly ---------------------------------------------------------

    def mu(self, p):
        return mu_from_pals(self.model, p, self.points)

    def system_for_mu(self, mu):
        return assemble_system(self.grid, self.D, mu, method=self.solver, lin_tol=self.lin_tol)

    def system(self, p):
        key = np.asarray(p, dtype=float).tobytes()
        if key != self._sys_key:
            self._sys = self.system_for_mu(self.mu(p))
            self._sys_key = key
            self._fwd.clear()
        return self._sys

    def dA_diag(self, p):
        """Diagonals of ``dA/dp_k`` as columns, shape ``(n, n_p)``."""
        return self.weights[:, None] * dmu_dp(self.model, p, self.points)

    # -- forward / adjoint solves -----------------------------------------

    def forward(self, p, W=None):
        """``A(p)^{-1} B W`` (``W=None`` means all sources).

        Every batch of forward solves counts as one function evaluation;
        repeated calls with the same ``(p, W)`` reuse the cached solutions.
        """
        system = self.system(p)
        key = None if W is None else np.asarray(W).tobytes()
        if key in self._fwd:
            return self._fwd[key]
        rhs = self._Bd if W is None else self._Bd @ W
        Z = system.solve(rhs)
        self.ledger.charge(forward_solves=rhs.shape[1], function_evals=1)
        self._fwd[key] = Z
        return Z

    def adjoint(self, p, V=None):
        system = self.system(p)
        rhs = self._Cd if V is None else self._Cd @ V
        Y = system.solve_adjoint(rhs)
        self.ledger.charge(adjoint_solves=rhs.shape[1])
        return Y

    @contextmanager
    def audit(self):
        """Charge enclosed work to the audit phase (excluded from totals)."""
        prev = self.ledger.phase
        self.ledger.set_phase("audit")
        try:
            yield
        finally:
            self.ledger.set_phase(prev)

    # -- measurements and residuals ----------------------------------------

    def measure_full(self, p):
        """Computed data ``C^T A(p)^{-1} B``, shape ``(n_d, n_s)``."""
        return self.layout.C.T @ self.forward(p)

    def measure_mu(self, mu):
        """Data for an arbitrary nodal absorption field (no caching, no charge)."""
        system = self.system_for_mu(mu)
        return self.layout.C.T @ system.solve(self._Bd)

    def _check_data(self, D_meas):
        D_meas = np.asarray(D_meas, dtype=float)
        if D_meas.shape != (self.n_d, self.n_s):
            raise ValueError(f"data must be {(self.n_d, self.n_s)}, got {D_meas.shape}")
        return D_meas

    def residual_full(self, p, D_meas):
        D_meas = self._check_data(D_meas)
        return self.measure_full(p) - D_meas

    def misfit_full(self, p, D_meas):
        return float(np.sum(self.residual_full(p, D_meas) ** 2))

    def normalized_misfit(self, p, D_meas):
        """``||R||_F^2 / ||D||_F^2``."""
        D_meas = self._check_data(D_meas)
        dn = float(np.sum(D_meas**2))
        if dn == 0.0:
            raise ValueError("normalized misfit undefined for all-zero data")
        return self.misfit_full(p, D_meas) / dn

    def sketched_residual(self, p, sketch, D_meas):
        """``V^T (C^T A^{-1} B W - D W)``, shape ``(l_d, l_s)``."""
        D_meas = self._check_data(D_meas)
        W, V = _wv(sketch)
        if W.shape[0] != self.n_s or V.shape[0] != self.n_d:
            raise ValueError("sketch does not conform with the layout")
        Z = self.forward(p, W)
        return V.T @ (self.layout.C.T @ Z - D_meas @ W)

    def estimated_misfit(self, p, sketch, D_meas):
        """Sketched estimate of ``||R||_F^2``."""
        Rs = self.sketched_residual(p, sketch, D_meas)
        scale = sketch.scale() if isinstance(sketch, SketchPair) else 1.0 / Rs.size
        return scale * float(np.sum(Rs**2))

    # -- Jacobians --------------------------------------------------------

    def _contract(self, p, Z, Y):
        """Rows ``(i, q)`` (i outer) of ``-y_q^T dA/dp_k z_i``."""
        M = self.dA_diag(p)
        support = np.flatnonzero(np.any(M != 0.0, axis=1))
        out = np.zeros((Z.shape[1] * Y.shape[1], M.shape[1]))
        if support.size:
            Zs, Ys = Z[support], Y[support]
            P = (Zs[:, :, None] * Ys[:, None, :]).reshape(support.size, -1)
            out = -(P.T @ M[support])
        return out

    def jacobian_full(self, p):
        """Full Jacobian of the vectorized residual, shape ``(n_s*n_d, n_p)``."""
        self.ledger.charge(jacobian_evals=1)
        Z = self.forward(p)
        Y = self.adjoint(p)
        return self._contract(p, Z, Y)

    def jacobian_sketched(self, p, sketch):
        """``kron(W.T, V.T) @ J`` using ``l_s`` forward and ``l_d`` adjoint solves."""
        W, V = _wv(sketch)
        self.ledger.charge(jacobian_evals=1)
        Z = self.forward(p, W)
        Y = self.adjoint(p, V)
        return self._contract(p, Z, Y)

    def full_jacobian_event(self, p):
        """Full Jacobian computed from scratch for direction replacement.

        Costs ``n_s + n_d`` solves, charged as one full-Jacobian event rather
        than as function/Jacobian evaluations.
        """
        system = self.system(p)
        Z = system.solve(self._Bd)
        Y = system.solve_adjoint(self._Cd)
        self.ledger.charge(forward_solves=self.n_s, adjoint_solves=self.n_d,
                           full_jacobian_events=1)
        return self._contract(p, Z, Y)


def _wv(sketch):
    if isinstance(sketch, SketchPair):
        return sketch.W, sketch.V
    W, V = sketch
    return np.asarray(W, dtype=float), np.asarray(V, dtype=float)
