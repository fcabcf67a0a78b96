"""Shared oracles for the direction-optimization tests."""
import numpy as np

from dotsaa.directions import (add_detectors, add_sources, complement_basis, remove_detectors,
                               remove_sources)


def kron_norm2(W, V, J):
    """Direct ``||kron(W.T, V.T) J||_F^2``."""
    return float(np.sum((np.kron(W.T, V.T) @ J) ** 2))


def random_orthonormal(rng, n, k):
    Q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    return Q


def random_instance(rng, n_s=6, n_d=6, l=3, n_p=5):
    W = random_orthonormal(rng, n_s, l)
    V = random_orthonormal(rng, n_d, l)
    J = rng.standard_normal((n_s * n_d, n_p))
    return W, V, J


def check_operation(kind, W, V, J, s, rng, n_candidates=200):
    """Run one remove/add step and compare it with its SVD value and random candidates.

    Returns ``(certificate_error, worst_margin)``: the relative gap between
    the attained objective and the predicted singular-value sum, and the
    smallest ``attained - candidate`` over the random feasible candidates.
    """
    if kind == "remove_detectors":
        res = remove_detectors(W, V, J, s)
        achieved = kron_norm2(W, res.basis, J)
        l = V.shape[1]
        cands = [kron_norm2(W, V @ random_orthonormal(rng, l, l - s), J)
                 for _ in range(n_candidates)]
    elif kind == "remove_sources":
        res = remove_sources(W, V, J, s)
        achieved = kron_norm2(res.basis, V, J)
        l = W.shape[1]
        cands = [kron_norm2(W @ random_orthonormal(rng, l, l - s), V, J)
                 for _ in range(n_candidates)]
    elif kind == "add_detectors":
        res = add_detectors(W, V, J, s)
        Vc = complement_basis(V)
        # the V block is fixed; only the added term is optimized
        achieved = kron_norm2(W, res.basis[:, V.shape[1]:], J)
        cands = [kron_norm2(W, Vc @ random_orthonormal(rng, Vc.shape[1], s), J)
                 for _ in range(n_candidates)]
    elif kind == "add_sources":
        res = add_sources(W, V, J, s)
        Wc = complement_basis(W)
        achieved = kron_norm2(res.basis[:, W.shape[1]:], V, J)
        cands = [kron_norm2(Wc @ random_orthonormal(rng, Wc.shape[1], s), V, J)
                 for _ in range(n_candidates)]
    else:
        raise ValueError(kind)
    cert = abs(achieved - res.attained) / max(abs(res.attained), 1e-300)
    return cert, achieved - max(cands), res


OPERATIONS = ("remove_detectors", "remove_sources", "add_detectors", "add_sources")
