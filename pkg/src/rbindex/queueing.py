"""Closed-form indices for single-queue control problems.

Covers admission control of an M/M/1 queue, production control of a
make-to-stock queue with backorders, and scheduling of finite-buffer
classes, where the general machinery has known closed forms. These are
exact formulas, not numerical output; the heavy-tolerance work lives in
the tests that replay them against finite-sum evaluations.

Branch conventions: formulas with a removable singularity at rho = 1
switch to the limit expression when |rho - 1| <= 1e-9.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import accumulate

from .bandit import ModelError

CRITICAL_RHO_TOL = 1e-9
NEAR_CRITICAL_WINDOW = 1e-4
TAIL_TRUNCATION = 1e-12
TAIL_MAX_TERMS = 10 ** 6


@dataclass(frozen=True)
class Mm1Params:
    """Parameters of one M/M/1-type queue.

    ``rho`` is derived as lam/mu and may exceed 1 (overloaded queues are
    legitimate inputs for admission and scheduling indices). ``buffer`` is
    the queue capacity when finite.
    """
    lam: float
    mu: float
    c: float = 0.0
    r: float = 0.0
    b: float = 0.0
    h: float = 0.0
    buffer: int | None = None

    def __post_init__(self):
        if not self.mu > 0:
            raise ModelError(f"mu must be positive, got {self.mu}")
        if self.lam < 0:
            raise ModelError(f"lam must be nonnegative, got {self.lam}")
        for name in ("c", "r", "b", "h"):
            if getattr(self, name) < 0:
                raise ModelError(f"{name} must be nonnegative")
        if self.buffer is not None and (not isinstance(self.buffer, int)
                                        or self.buffer < 1):
            raise ModelError(f"buffer must be a positive int, got {self.buffer}")

    @property
    def rho(self) -> float:
        return self.lam / self.mu


def admission_index(p: Mm1Params, j: int) -> float:
    """Index of admitting an arrival when j jobs are already present.

    Higher values mean admission is blocked only at higher rejection
    charges. Exact for every utilization, including rho = 1 and overload.
    """
    if not isinstance(j, int) or j < 0:
        raise ModelError(f"queue length j must be a nonnegative int, got {j}")
    rho = p.rho
    if abs(rho - 1.0) <= CRITICAL_RHO_TOL:
        return (p.c / p.mu) * (j + 1) * (j + 2) / 2.0
    if abs(rho - 1.0) <= NEAR_CRITICAL_WINDOW:
        # the rational form loses ~ (1-rho)^-2 digits to cancellation here;
        # the expanded sum has positive terms only
        return (p.c / p.mu) * math.fsum(
            (j + 1 - k) * rho ** k for k in range(j + 1))
    num = (j + 1) - (j + 2) * rho + rho ** (j + 2)
    return (p.c / p.mu) * num / (1.0 - rho) ** 2


def mts_index_general(delta_h, tail, mu: float, i: int) -> float:
    """Index of producing at net backlog i, for an arbitrary cost shape.

    ``delta_h(j)`` gives the backlog-cost increment at level j and
    ``tail(k)`` the stationary demand-lead distribution P{X >= k}. The
    expectation of delta_h at the shifted level is summed until the tail
    mass drops below 1e-12. The tail must be a genuine survival function
    (start at 1, nonincreasing); anything else is rejected.
    """
    if not mu > 0:
        raise ModelError(f"mu must be positive, got {mu}")
    t = float(tail(0))
    if not abs(t - 1.0) <= 1e-9:
        raise ModelError(f"tail(0) must equal 1, got {t}")
    total = 0.0
    for k in range(TAIL_MAX_TERMS):
        t_next = float(tail(k + 1))
        if t_next > t + 1e-12 or t_next < -1e-12:
            raise ModelError(
                f"tail is not nonincreasing at k={k}: {t} -> {t_next}")
        total += (t - t_next) * float(delta_h(k + i))
        t = t_next
        if t <= TAIL_TRUNCATION:
            return mu * total
    raise ModelError(
        f"tail mass did not fall below {TAIL_TRUNCATION} within "
        f"{TAIL_MAX_TERMS} terms")


def mts_index_linear(b: float, h: float, mu: float, rho: float, i: int,
                     tail=None) -> float:
    """Index of producing at backlog i under linear backorder/holding costs.

    Cost rate is b per backordered unit and h per unit of surplus stock.
    With the default geometric lead distribution this is a closed form and
    requires rho < 1; pass ``tail`` to use another distribution.
    """
    if b < 0 or h < 0:
        raise ModelError("b and h must be nonnegative")
    if not mu > 0:
        raise ModelError(f"mu must be positive, got {mu}")
    if tail is not None:
        return mts_index_general(
            lambda j: b if j >= 1 else -h, tail, mu, i)
    if rho < 0 or rho >= 1:
        raise ModelError(
            f"geometric lead distribution needs 0 <= rho < 1, got {rho}")
    if i >= 1:
        return b * mu
    return ((b + h) * rho ** (1 - i) - h) * mu


def mts_index_myopic(b: float, h: float, mu: float, i: int) -> float:
    """One-step variant of the production index (lead demand ignored)."""
    if b < 0 or h < 0:
        raise ModelError("b and h must be nonnegative")
    if not mu > 0:
        raise ModelError(f"mu must be positive, got {mu}")
    return b * mu if i >= 1 else -h * mu


def second_order_mpi(r: float, rho: float, i: int) -> float:
    """Tie-breaking index for reward-only classes, at i empty spaces.

    First-order indices of classes with no holding cost collapse to a
    constant, so ranking falls to this second-order sensitivity. Smaller
    values take priority. Evaluated as an exact finite sum, which is
    stable through rho = 1 (the closed form has a removable singularity
    there).
    """
    if not isinstance(i, int) or i < 0:
        raise ModelError(f"empty-space count i must be a nonnegative int, got {i}")
    if r < 0:
        raise ModelError(f"r must be nonnegative, got {r}")
    if not rho > 0:
        raise ModelError(f"rho must be positive, got {rho}")
    return r * sum((k + 1) * rho ** (k - i - 1) for k in range(i + 1))


def bias_mpi(c: float, r: float, mu: float, rho: float, n: int, i: int) -> float:
    """Scheduling index at queue length i for one class with buffer n.

    Combines the holding-cost term with the blocking-reward rate r*mu.
    Higher values take priority. Valid for occupied states only
    (1 <= i <= n); the formula extends to rho > 1 but its optimality
    guarantee is established for stable queues.
    """
    if not isinstance(n, int) or n < 1:
        raise ModelError(f"buffer n must be a positive int, got {n}")
    if not isinstance(i, int) or not 1 <= i <= n:
        raise ModelError(f"queue length i must lie in [1, {n}], got {i}")
    if c < 0 or r < 0:
        raise ModelError("c and r must be nonnegative")
    if not mu > 0:
        raise ModelError(f"mu must be positive, got {mu}")
    if not rho > 0:
        raise ModelError(f"rho must be positive, got {rho}")
    if abs(rho - 1.0) <= CRITICAL_RHO_TOL:
        return c * (n - (i - 1) / 2.0) + r * mu
    if abs(rho - 1.0) <= NEAR_CRITICAL_WINDOW:
        # rho/(1-rho) and i*rho^i/(1-rho^i) blow up individually while their
        # difference stays O(n); cancel the (1-rho) factor algebraically
        powers = [rho ** k for k in range(i)]
        prefix = list(accumulate(powers))
        num = math.fsum(powers[k] * prefix[i - k - 1] for k in range(1, i))
        hold = (c / rho) * (n - num / prefix[i - 1])
        return hold + r * mu
    hold = (c / rho) * (n - rho / (1.0 - rho) + i * rho ** i / (1.0 - rho ** i))
    return hold + r * mu


def loss_sensitivity_class(c: float, r: float, discount: float) -> str:
    """Classify a queueing class as loss-driven or delay-driven.

    A class whose discounted blocking reward outweighs its holding charge
    behaves like a pure-loss system; otherwise delay costs dominate.
    """
    if c < 0 or r < 0:
        raise ModelError("c and r must be nonnegative")
    if not 0 < discount <= 1:
        raise ModelError(f"discount must lie in (0, 1], got {discount}")
    return "loss" if discount * r >= c else "delay"
