"""Simultaneous random sources/detectors and the sketched Frobenius estimator."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RANDOM = "random"
RETAINED = "retained"
OPTIMIZED = "optimized"
IDENTITY = "identity"


@dataclass
class SketchPair:
    """Source sketch ``W`` (n_s x l_s) and detector sketch ``V`` (n_d x l_d).

    ``w_tags``/``v_tags`` record the origin of every column: ``"random"``
    (Rademacher), ``"retained"`` (rotation of random columns kept when
    directions were removed), ``"optimized"`` (added from the Jacobian SVD) or
    ``"identity"`` (pass-through, i.e. all physical sources/detectors).
    """

    W: np.ndarray
    V: np.ndarray
    seed: int | None = None
    w_tags: list = field(default=None)
    v_tags: list = field(default=None)

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        self.V = np.asarray(self.V, dtype=float)
        if self.w_tags is None:
            self.w_tags = [RANDOM] * self.W.shape[1]
        if self.v_tags is None:
            self.v_tags = [RANDOM] * self.V.shape[1]
        if len(self.w_tags) != self.W.shape[1] or len(self.v_tags) != self.V.shape[1]:
            raise ValueError("one origin tag per sketch column is required")

    @property
    def n_s(self):
        return self.W.shape[0]

    @property
    def n_d(self):
        return self.V.shape[0]

    @property
    def l_s(self):
        return self.W.shape[1]

    @property
    def l_d(self):
        return self.V.shape[1]

    @property
    def passthrough(self):
        """True for the identity pair, whose estimate is the raw ``||R||_F^2``."""
        return all(t == IDENTITY for t in self.w_tags + self.v_tags)

    @classmethod
    def identity(cls, n_s, n_d):
        return cls(np.eye(n_s), np.eye(n_d), None, [IDENTITY] * n_s, [IDENTITY] * n_d)

    def scale(self):
        """Factor turning ``||V^T R W||_F^2`` into an estimate of ``||R||_F^2``."""
        return 1.0 if self.passthrough else 1.0 / (self.l_s * self.l_d)

    def to_csv(self, w_path, v_path):
        header_w = ",".join(self.w_tags)
        header_v = ",".join(self.v_tags)
        np.savetxt(w_path, self.W, delimiter=",", header=header_w, comments="")
        np.savetxt(v_path, self.V, delimiter=",", header=header_v, comments="")

    @classmethod
    def from_csv(cls, w_path, v_path, seed=None):
        def load(path):
            with open(path) as fh:
                tags = fh.readline().strip().split(",")
            return np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)), tags
        W, wt = load(w_path)
        V, vt = load(v_path)
        return cls(W, V, seed, wt, vt)


def rademacher(rng, shape):
    return rng.choice(np.array([-1.0, 1.0]), size=shape)


def draw_sketch(n_s, l_s, n_d, l_d, seed):
    """Draw Rademacher ``W`` and ``V`` from ``numpy.random.default_rng(seed)``."""
    if not (1 <= l_s <= n_s and 1 <= l_d <= n_d):
        raise ValueError(f"invalid sketch sizes: l_s={l_s}, n_s={n_s}, l_d={l_d}, n_d={n_d}")
    rng = np.random.default_rng(seed)
    W = rademacher(rng, (n_s, l_s))
    V = rademacher(rng, (n_d, l_d))
    return SketchPair(W, V, seed)


def frob_estimate(R_sketched, l_s=None, l_d=None):
    """``||V^T R W||_F^2 / (l_s l_d)`` for a sketched residual of shape (l_d, l_s)."""
    R_sketched = np.asarray(R_sketched, dtype=float)
    l_d = R_sketched.shape[0] if l_d is None else l_d
    l_s = R_sketched.shape[1] if l_s is None else l_s
    return float(np.sum(R_sketched**2)) / (l_s * l_d)
