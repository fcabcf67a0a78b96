"""Bookkeeping of PDE solves and evaluation counts."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

COUNTERS = ("forward_solves", "adjoint_solves", "function_evals",
            "jacobian_evals", "full_jacobian_events")

AUDIT = "audit"


def _zero():
    return dict.fromkeys(COUNTERS, 0)


@dataclass
class SolveLedger:
    """Counts solves and evaluations per phase.

    Work charged while ``phase == "audit"`` is tracked but left out of
    :attr:`totals` and :attr:`total_solves`.
    """

    phase: str = "pre"
    by_phase: dict = field(default_factory=lambda: defaultdict(_zero))

    def charge(self, **counts):
        bucket = self.by_phase[self.phase]
        for key, value in counts.items():
            if key not in COUNTERS:
                raise KeyError(key)
            bucket[key] += int(value)

    @property
    def totals(self):
        out = _zero()
        for phase, bucket in self.by_phase.items():
            if phase == AUDIT:
                continue
            for key in COUNTERS:
                out[key] += bucket[key]
        return out

    @property
    def audit_solves(self):
        b = self.by_phase.get(AUDIT)
        return 0 if b is None else b["forward_solves"] + b["adjoint_solves"]

    @property
    def total_solves(self):
        t = self.totals
        return t["forward_solves"] + t["adjoint_solves"]

    def __getattr__(self, name):
        if name in COUNTERS:
            return self.totals[name]
        raise AttributeError(name)

    def set_phase(self, phase):
        self.phase = phase

    def as_dict(self):
        out = dict(self.totals)
        out["total_solves"] = self.total_solves
        out["audit_solves"] = self.audit_solves
        for phase, bucket in sorted(self.by_phase.items()):
            for key in COUNTERS:
                out[f"{phase}.{key}"] = bucket[key]
        return out


def ledger_cost(nF, nJ, l_s, l_d, n_full_jac_events=0, n_s=0, n_d=0):
    """Total solves for ``nF`` function and ``nJ`` Jacobian evaluations.

    A function evaluation needs ``l_s`` forward solves, a Jacobian ``l_d``
    adjoint solves (forward solutions are reused), and each full Jacobian
    event ``n_s + n_d`` solves.
    """
    return int(nF) * int(l_s) + int(nJ) * int(l_d) + int(n_full_jac_events) * (int(n_s) + int(n_d))
