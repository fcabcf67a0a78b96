"""Parametric level-set (PaLS) absorption model.

The level-set function is a sum of Wendland C2 compactly supported radial
basis functions evaluated on a regularized norm,

    phi(x) = sum_j alpha_j psi(sqrt(beta_j^2 |x - chi_j|^2 + gamma^2)),

and the absorption is a smoothed two-phase field

    mu(x) = mu_out + (mu_in - mu_out) * H_eps(phi(x) - tau).

Parameters are stored flat as ``[alpha_1, beta_1, chi_1x, chi_1y, alpha_2, ...]``
(four per basis).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PARAMS_PER_BASIS = 4


def csrbf(r):
    """Wendland C2 function ``(1 - r)_+^4 (4 r + 1)``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("csrbf is defined for r >= 0")
    t = np.clip(1.0 - r, 0.0, None)
    return t**4 * (4.0 * r + 1.0)


def csrbf_deriv(r):
    """Derivative ``-20 r (1 - r)_+^3`` of :func:`csrbf`."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("csrbf is defined for r >= 0")
    t = np.clip(1.0 - r, 0.0, None)
    return -20.0 * r * t**3


def heaviside(r, eps, kind="atan"):
    """Smoothed Heaviside step.

    ``kind="atan"`` is ``1/2 + atan(r/eps)/pi``. ``kind="sine"`` is the
    compactly transitioning step that is exactly 0 below ``-eps`` and exactly
    1 above ``eps``, with ``(1 + r/eps + sin(pi r/eps)/pi)/2`` in between.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    r = np.asarray(r, dtype=float)
    if kind == "atan":
        return 0.5 + np.arctan(r / eps) / np.pi
    if kind == "sine":
        s = np.clip(r / eps, -1.0, 1.0)
        out = 0.5 * (1.0 + s + np.sin(np.pi * s) / np.pi)
        # sin(pi) is not exactly zero in floating point
        return np.where(s <= -1.0, 0.0, np.where(s >= 1.0, 1.0, out))
    raise ValueError(f"unknown Heaviside kind {kind!r}")


def delta(r, eps, kind="atan"):
    """Derivative of :func:`heaviside` with respect to ``r``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    r = np.asarray(r, dtype=float)
    if kind == "atan":
        return eps / (np.pi * (r**2 + eps**2))
    if kind == "sine":
        inside = np.abs(r) < eps
        return np.where(inside, 0.5 / eps * (1.0 + np.cos(np.pi * r / eps)), 0.0)
    raise ValueError(f"unknown Heaviside kind {kind!r}")


@dataclass(frozen=True)
class PalsModel:
    """Constants of the PaLS absorption map.

    Attributes
    ----------
    m0 : int
        Number of basis functions; the parameter vector has ``4 * m0`` entries.
    gamma : float
        Regularization of the norm inside the CSRBF.
    eps : float
        Heaviside transition half-width.
    tau : float
        Level-set cut-off.
    mu_in, mu_out : float
        Absorption inside/outside the level set.
    heaviside_kind : str
        ``"atan"`` or ``"sine"``, see :func:`heaviside`.
    """

    m0: int
    gamma: float = 1e-2
    eps: float = 0.05
    tau: float = 0.15
    mu_in: float = 0.2
    mu_out: float = 0.01
    heaviside_kind: str = "atan"

    def __post_init__(self):
        if self.m0 < 1:
            raise ValueError("m0 must be positive")
        if not self.gamma > 0 or not self.eps > 0:
            raise ValueError("gamma and eps must be positive")
        if not self.mu_in > self.mu_out >= 0:
            raise ValueError("need mu_in > mu_out >= 0")
        if self.heaviside_kind not in ("atan", "sine"):
            raise ValueError(f"unknown Heaviside kind {self.heaviside_kind!r}")

    @property
    def n_p(self):
        return PARAMS_PER_BASIS * self.m0

    def split(self, p):
        """Return ``(alpha, beta, chi)`` views of a flat parameter vector."""
        p = np.asarray(p, dtype=float)
        if p.shape != (self.n_p,):
            raise ValueError(f"expected {self.n_p} parameters, got shape {p.shape}")
        q = p.reshape(self.m0, PARAMS_PER_BASIS)
        return q[:, 0], q[:, 1], q[:, 2:4]


def pack(alpha, beta, chi):
    """Flatten per-basis arrays into a parameter vector."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.broadcast_to(np.asarray(beta, dtype=float), alpha.shape)
    chi = np.asarray(chi, dtype=float).reshape(alpha.size, 2)
    return np.column_stack([alpha, beta, chi]).ravel()


def _geometry(model, p, pts):
    alpha, beta, chi = model.split(p)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    diff = pts[:, None, :] - chi[None, :, :]           # (npts, m0, 2)
    d2 = np.einsum("pjk,pjk->pj", diff, diff)
    rdag = np.sqrt(beta[None, :] ** 2 * d2 + model.gamma**2)
    return alpha, beta, diff, d2, rdag


def pals_eval(model, p, pts):
    """Level-set values at ``pts`` (shape ``(npts, 2)``)."""
    alpha, _, _, _, rdag = _geometry(model, p, pts)
    return csrbf(rdag) @ alpha


def mu_from_pals(model, p, pts):
    """Absorption values at ``pts``."""
    phi = pals_eval(model, p, pts)
    H = heaviside(phi - model.tau, model.eps, model.heaviside_kind)
    return model.mu_out + (model.mu_in - model.mu_out) * H


def dphi_dp(model, p, pts):
    """Sensitivity of the level set, shape ``(npts, 4*m0)``."""
    alpha, beta, diff, d2, rdag = _geometry(model, p, pts)
    psi = csrbf(rdag)
    dpsi = csrbf_deriv(rdag)                            # zero outside the support
    g = alpha[None, :] * dpsi / rdag                    # (npts, m0)
    out = np.empty((rdag.shape[0], model.m0, PARAMS_PER_BASIS))
    out[:, :, 0] = psi
    out[:, :, 1] = g * beta[None, :] * d2
    out[:, :, 2:4] = -(g * beta[None, :] ** 2)[:, :, None] * diff
    return out.reshape(rdag.shape[0], model.n_p)


def dmu_dp(model, p, pts):
    """Sensitivity of the absorption, shape ``(npts, 4*m0)``."""
    phi = pals_eval(model, p, pts)
    dH = delta(phi - model.tau, model.eps, model.heaviside_kind)
    return ((model.mu_in - model.mu_out) * dH)[:, None] * dphi_dp(model, p, pts)
