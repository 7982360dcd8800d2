"""Model descriptions for the queueing experiments and their report type."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..bandit import ModelError

GAP_TOL = 1e-9
STATE_SPACE_CAP = 10 ** 6


@dataclass(frozen=True)
class RoutingModel:
    """Poisson arrivals routed on arrival to one of K finite parallel queues.

    An arrival is rejected only when every buffer is full. The comparison
    objective is the long-run average number in system; the average sojourn
    time of admitted customers follows by Little's law and is reported
    alongside.
    """
    lam: float
    mus: tuple
    buffers: tuple
    objective: str = "jobs"

    def __post_init__(self):
        object.__setattr__(self, "mus", tuple(float(m) for m in self.mus))
        object.__setattr__(self, "buffers", tuple(int(b) for b in self.buffers))
        if not self.lam > 0:
            raise ModelError(f"lam must be positive, got {self.lam}")
        if len(self.mus) != len(self.buffers) or not self.mus:
            raise ModelError("mus and buffers must be equal-length and nonempty")
        if any(m <= 0 for m in self.mus):
            raise ModelError("service rates must be positive")
        if any(b < 1 for b in self.buffers):
            raise ModelError("buffers must be >= 1")
        if self.objective not in ("jobs", "sojourn"):
            raise ModelError(f"unknown objective {self.objective!r}")

    @property
    def dims(self) -> tuple:
        return tuple(b + 1 for b in self.buffers)


@dataclass(frozen=True)
class SchedulingModel:
    """K job classes with finite buffers sharing one preemptive server.

    Class k pays holding cost c_k per waiting job per unit time and loses
    reward r_k for each arrival blocked by a full buffer; the cost rate at a
    joint state is the sum of both terms.
    """
    lams: tuple
    mus: tuple
    cs: tuple
    rs: tuple
    ns: tuple

    def __post_init__(self):
        for name in ("lams", "mus", "cs", "rs"):
            object.__setattr__(self, name,
                               tuple(float(x) for x in getattr(self, name)))
        object.__setattr__(self, "ns", tuple(int(x) for x in self.ns))
        k = len(self.lams)
        if k == 0 or any(len(getattr(self, f)) != k
                         for f in ("mus", "cs", "rs", "ns")):
            raise ModelError("per-class parameter tuples must be equal-length")
        if any(x <= 0 for x in self.lams) or any(x <= 0 for x in self.mus):
            raise ModelError("arrival and service rates must be positive")
        if any(x < 0 for x in self.cs) or any(x < 0 for x in self.rs):
            raise ModelError("costs and rewards must be nonnegative")
        if any(n < 1 for n in self.ns):
            raise ModelError("buffers must be >= 1")

    @property
    def dims(self) -> tuple:
        return tuple(n + 1 for n in self.ns)


@dataclass(frozen=True)
class PolicyReport:
    """Per-policy average costs against the exact optimum.

    Gaps are relative: (cost - optimal) / optimal. Construction enforces
    that the optimum does not exceed any policy cost beyond tolerance.
    """
    costs: dict
    optimal: float
    gaps: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, cost in self.costs.items():
            if self.optimal > cost + GAP_TOL:
                raise RuntimeError(
                    f"optimal cost {self.optimal!r} exceeds policy {name} "
                    f"cost {cost!r}; evaluation is inconsistent")
        if not self.gaps:
            denom = self.optimal if self.optimal != 0 else 1.0
            object.__setattr__(self, "gaps", {
                name: (cost - self.optimal) / denom
                for name, cost in self.costs.items()})


def check_state_space(dims) -> None:
    if int(np.prod(dims)) > STATE_SPACE_CAP:
        from ..bandit import SizeGuardError
        raise SizeGuardError(
            f"state space of {int(np.prod(dims))} states exceeds the "
            f"{STATE_SPACE_CAP} cap")
