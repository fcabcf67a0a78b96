"""Finite-difference forward model for 2D steady-state diffuse optical tomography.

The slab occupies ``-a <= x <= a`` (lateral) and ``0 <= y <= c`` (depth).
Lateral sides carry a homogeneous Dirichlet condition; the top (``y = 0``) and
bottom (``y = c``) faces carry the Robin condition

    0.25 phi + (D / 2) d phi / d n = g_R

with ``n`` the outward normal. The operator ``-div(D grad phi) + mu phi`` is
discretized with a vertex-centred 5-point stencil. Rows are written in
finite-volume form divided by the full cell area ``hx * hy``; Robin rows use a
half cell, which is what makes the assembled matrix symmetric. The per-row
cell fraction is exposed as :attr:`Grid2D.cell_weights` (1 interior, 1/2 on
Robin faces, 0 on Dirichlet nodes) and is the factor multiplying ``mu`` on the
diagonal.

Node ``(i, j)`` (``i`` along x, ``j`` along depth) has flat index ``j * nx + i``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg, splu

logger = logging.getLogger(__name__)

INTERIOR = 0
DIRICHLET_SIDE = 1
ROBIN_TOP = 2
ROBIN_BOTTOM = 3

TAG_NAMES = {
    INTERIOR: "interior",
    DIRICHLET_SIDE: "dirichlet_side",
    ROBIN_TOP: "robin_top",
    ROBIN_BOTTOM: "robin_bottom",
}


class SolverError(RuntimeError):
    """Raised when a sparse solve fails (singular factor, CG breakdown)."""

    def __init__(self, message, info=None):
        super().__init__(message)
        self.info = info or {}


@dataclass(frozen=True)
class Grid2D:
    """Tensor grid on ``[-a, a] x [0, c]``.

    Corner nodes are tagged ``dirichlet_side``.
    """

    nx: int
    ny: int
    a: float
    c: float

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ValueError(f"need nx, ny >= 3, got ({self.nx}, {self.ny})")
        if not (self.a > 0 and self.c > 0):
            raise ValueError(f"extents must be positive, got a={self.a}, c={self.c}")

    @property
    def hx(self):
        return 2.0 * self.a / (self.nx - 1)

    @property
    def hy(self):
        return self.c / (self.ny - 1)

    @property
    def n(self):
        return self.nx * self.ny

    @property
    def x(self):
        return np.linspace(-self.a, self.a, self.nx)

    @property
    def y(self):
        return np.linspace(0.0, self.c, self.ny)

    def index(self, i, j):
        return np.asarray(j) * self.nx + np.asarray(i)

    def ij(self, k):
        k = np.asarray(k)
        return k % self.nx, k // self.nx

    def points(self):
        """Node coordinates, shape ``(n, 2)`` in flat-index order."""
        X, Y = np.meshgrid(self.x, self.y)
        return np.column_stack([X.ravel(), Y.ravel()])

    def tags(self):
        i, j = self.ij(np.arange(self.n))
        t = np.full(self.n, INTERIOR, dtype=np.int8)
        t[j == 0] = ROBIN_TOP
        t[j == self.ny - 1] = ROBIN_BOTTOM
        t[(i == 0) | (i == self.nx - 1)] = DIRICHLET_SIDE
        return t

    def cell_weights(self):
        t = self.tags()
        w = np.ones(self.n)
        w[(t == ROBIN_TOP) | (t == ROBIN_BOTTOM)] = 0.5
        w[t == DIRICHLET_SIDE] = 0.0
        return w


def build_grid(nx, ny, a=1.0, c=1.0):
    """Create a :class:`Grid2D`; ``hx = 2a/(nx-1)``, ``hy = c/(ny-1)``."""
    return Grid2D(int(nx), int(ny), float(a), float(c))


class SparseSystem:
    """Assembled operator ``A`` plus a lazily built solver.

    Parameters
    ----------
    A : sparse matrix
        Square system matrix; stored as CSR.
    method : {"direct", "cg"}
        ``"direct"`` factorizes once with SuperLU and reuses the factor for
        every right-hand side. ``"cg"`` runs conjugate gradients per column
        and therefore requires a symmetric positive definite ``A``.
    lin_tol : float
        Relative residual target for ``"cg"``; also the threshold used by
        :meth:`check_residual`.
    """

    def __init__(self, A, method="direct", lin_tol=1e-8, maxiter=None):
        A = sp.csr_matrix(A, dtype=float)
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"system matrix must be square, got {A.shape}")
        if method not in ("direct", "cg"):
            raise ValueError(f"unknown solver method {method!r}")
        self.A = A
        self.method = method
        self.lin_tol = lin_tol
        self.maxiter = maxiter
        self._lu = None

    @property
    def n(self):
        return self.A.shape[0]

    def factorize(self):
        if self._lu is None:
            try:
                self._lu = splu(self.A.tocsc())
            except RuntimeError as exc:
                raise SolverError(f"sparse factorization failed: {exc}",
                                  {"n": self.n, "nnz": self.A.nnz}) from exc
        return self._lu

    def _solve(self, rhs, transpose):
        rhs = np.asarray(rhs, dtype=float)
        squeeze = rhs.ndim == 1
        B = rhs.reshape(self.n, -1)
        if self.method == "direct":
            out = self.factorize().solve(np.ascontiguousarray(B),
                                         trans="T" if transpose else "N")
            if not np.all(np.isfinite(out)):
                raise SolverError("direct solve produced non-finite values")
        else:
            Aop = self.A.T.tocsr() if transpose else self.A
            out = np.zeros_like(B)
            for col in range(B.shape[1]):
                b = B[:, col]
                if not np.any(b):
                    continue
                z, info = cg(Aop, b, rtol=self.lin_tol, atol=0.0,
                             maxiter=self.maxiter)
                if info != 0:
                    res = np.linalg.norm(Aop @ z - b) / np.linalg.norm(b)
                    raise SolverError(
                        f"CG did not converge on column {col} (info={info})",
                        {"column": col, "info": info, "rel_residual": res})
                out[:, col] = z
        return out[:, 0] if squeeze else out

    def solve(self, rhs):
        """Solve ``A z = rhs`` for one or many columns."""
        return self._solve(rhs, transpose=False)

    def solve_adjoint(self, rhs):
        """Solve ``A^T y = rhs`` for one or many columns."""
        return self._solve(rhs, transpose=True)

    def relative_residual(self, z, rhs, transpose=False):
        Aop = self.A.T if transpose else self.A
        rhs = np.asarray(rhs, dtype=float).reshape(self.n, -1)
        z = np.asarray(z, dtype=float).reshape(self.n, -1)
        num = np.linalg.norm(Aop @ z - rhs, axis=0)
        den = np.linalg.norm(rhs, axis=0)
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), num)


def solve_forward(system, rhs):
    return system.solve(rhs)


def solve_adjoint(system, rhs):
    return system.solve_adjoint(rhs)


def _harmonic(d1, d2):
    return 2.0 * d1 * d2 / (d1 + d2)


def assemble_system(grid, D_field, mu_field, method="direct", lin_tol=1e-8):
    """Assemble ``A`` for per-node diffusion ``D_field`` and absorption ``mu_field``.

    Face diffusivities are harmonic means of the two node values. Couplings
    into Dirichlet nodes are dropped (their value is zero), so ``A`` stays
    symmetric with identity rows on the lateral sides.
    """
    n = grid.n
    D = np.broadcast_to(np.asarray(D_field, dtype=float), (n,)) if np.ndim(D_field) == 0 \
        else np.asarray(D_field, dtype=float)
    mu = np.broadcast_to(np.asarray(mu_field, dtype=float), (n,)) if np.ndim(mu_field) == 0 \
        else np.asarray(mu_field, dtype=float)
    if D.shape != (n,) or mu.shape != (n,):
        raise ValueError(f"fields must have length {n}, got D{D.shape}, mu{mu.shape}")
    if np.any(~np.isfinite(D)) or np.any(D <= 0):
        raise ValueError("diffusion coefficient must be positive everywhere")
    if np.any(~np.isfinite(mu)):
        raise ValueError("absorption must be finite")

    nx, ny, hx, hy = grid.nx, grid.ny, grid.hx, grid.hy
    tags = grid.tags()
    w = grid.cell_weights()
    active = tags != DIRICHLET_SIDE
    Dg = D.reshape(ny, nx)
    diag = w * mu
    rows, cols, vals = [], [], []

    # x-faces: between (i, j) and (i+1, j); Robin rows only own half the face
    De = _harmonic(Dg[:, :-1], Dg[:, 1:])
    fx = np.ones((ny, 1)) * np.ones((1, nx - 1))
    fx[0, :] = 0.5
    fx[-1, :] = 0.5
    cx = (fx * De / hx**2).ravel()
    left = grid.index(*np.meshgrid(np.arange(nx - 1), np.arange(ny))).ravel()
    right = left + 1
    # y-faces: between (i, j) and (i, j+1)
    Dn = _harmonic(Dg[:-1, :], Dg[1:, :])
    cy = (Dn / hy**2).ravel()
    up = grid.index(*np.meshgrid(np.arange(nx), np.arange(ny - 1))).ravel()
    down = up + nx

    for k1, k2, coef in ((left, right, cx), (up, down, cy)):
        np.add.at(diag, k1, np.where(active[k1], coef, 0.0))
        np.add.at(diag, k2, np.where(active[k2], coef, 0.0))
        both = active[k1] & active[k2]
        rows += [k1[both], k2[both]]
        cols += [k2[both], k1[both]]
        vals += [-coef[both], -coef[both]]

    # Robin boundary flux 0.5 * phi over a face of length hx, per cell area
    robin = (tags == ROBIN_TOP) | (tags == ROBIN_BOTTOM)
    diag[robin] += 0.5 / hy
    diag[~active] = 1.0

    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(diag)
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr()
    A.sum_duplicates()
    return SparseSystem(A, method=method, lin_tol=lin_tol)


def source_rhs(grid, f):
    """Right-hand side for a distributed source density ``f`` (per node)."""
    return grid.cell_weights() * np.asarray(f, dtype=float)


def robin_rhs(grid, g_top, g_bottom):
    """Right-hand side from inhomogeneous Robin data on the top/bottom faces.

    ``g_top``/``g_bottom`` are arrays of length ``nx`` (or scalars).
    """
    rhs = np.zeros(grid.n)
    tags = grid.tags()
    for tag, g, j in ((ROBIN_TOP, g_top, 0), (ROBIN_BOTTOM, g_bottom, grid.ny - 1)):
        idx = grid.index(np.arange(grid.nx), j)
        vals = np.broadcast_to(np.asarray(g, dtype=float), (grid.nx,))
        keep = tags[idx] == tag
        rhs[idx[keep]] += 2.0 * vals[keep] / grid.hy
    return rhs


@dataclass
class SourceDetectorLayout:
    """Point sources (columns of ``B``) and point detectors (columns of ``C``)."""

    B: sp.csc_matrix
    C: sp.csc_matrix
    source_nodes: np.ndarray
    detector_nodes: np.ndarray
    source_x: np.ndarray = field(default=None)
    detector_x: np.ndarray = field(default=None)

    @property
    def n_s(self):
        return self.B.shape[1]

    @property
    def n_d(self):
        return self.C.shape[1]


def _edge_positions(grid, count, what):
    interior = grid.nx - 2
    if count < 1:
        raise ValueError(f"need at least one {what}")
    if count > interior:
        raise ValueError(f"{count} {what}s requested but the edge has only "
                         f"{interior} non-Dirichlet nodes")
    # centres of `count` equal sub-intervals of [-a, a]
    xs = -grid.a + (np.arange(count) + 0.5) * (2 * grid.a / count)
    i = np.rint((xs + grid.a) / grid.hx).astype(int)
    i = np.clip(i, 1, grid.nx - 2)
    if np.unique(i).size != count:
        raise ValueError(f"{count} {what}s do not fit on {grid.nx} edge nodes")
    return i, grid.x[i]


def place_sources_detectors(grid, n_s, n_d, source_edge="top", detector_edge="bottom"):
    """Equispaced point sources and detectors on the Robin faces.

    Sources inject unit power, i.e. a right-hand side of ``1/(hx*hy)`` at the
    node; detectors sample the nodal photon flux.
    """
    edge_row = {"top": 0, "bottom": grid.ny - 1}
    if source_edge not in edge_row or detector_edge not in edge_row:
        raise ValueError("edges must be 'top' or 'bottom'")
    si, sx = _edge_positions(grid, int(n_s), "source")
    di, dx = _edge_positions(grid, int(n_d), "detector")
    snodes = grid.index(si, edge_row[source_edge])
    dnodes = grid.index(di, edge_row[detector_edge])
    amp = 1.0 / (grid.hx * grid.hy)
    B = sp.csc_matrix((np.full(n_s, amp), (snodes, np.arange(n_s))), shape=(grid.n, n_s))
    C = sp.csc_matrix((np.ones(n_d), (dnodes, np.arange(n_d))), shape=(grid.n, n_d))
    return SourceDetectorLayout(B, C, snodes, dnodes, sx, dx)
