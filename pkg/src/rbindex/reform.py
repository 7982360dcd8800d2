"""Reformulations of classic discounted bandits as restless models.

A classic bandit freezes and earns nothing while passive, so it embeds
into the restless interface with identity passive dynamics; its index is
then the classic play-or-freeze index and comes out of the same adaptive
greedy machinery. Startup charges and finite play horizons are handled by
augmenting the state with the last action taken or the plays remaining,
together with the structured set-system families that make the augmented
problems indexable.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .bandit import ModelError, RestlessBandit
from .setsystems import SetSystem, adaptive_greedy, family_full

PROB_TOL = 1e-9


class ClassicBandit:
    """A discounted Markov chain with per-play rewards and optional startup cost.

    The chain only moves when played. ``startup_cost`` is charged on a play
    that follows a pause.
    """

    def __init__(self, reward, trans, beta, startup_cost=0.0):
        self.reward = np.ascontiguousarray(np.asarray(reward, dtype=float))
        self.trans = np.ascontiguousarray(np.asarray(trans, dtype=float))
        if self.reward.ndim != 1:
            raise ModelError("reward must be a vector")
        n = self.reward.shape[0]
        if n == 0:
            raise ModelError("bandit must have at least one state")
        if self.trans.shape != (n, n):
            raise ModelError(f"trans must be {n}x{n}, got {self.trans.shape}")
        if not np.all(np.isfinite(self.reward)) or not np.all(np.isfinite(self.trans)):
            raise ModelError("reward and trans must be finite")
        if np.any(self.trans < 0):
            raise ModelError("trans must be nonnegative")
        if np.any(np.abs(self.trans.sum(axis=1) - 1.0) > PROB_TOL):
            raise ModelError("trans rows must sum to 1")
        if not 0.0 < beta < 1.0:
            raise ModelError(f"beta must lie strictly in (0, 1), got {beta}")
        if startup_cost < 0:
            raise ModelError(f"startup_cost must be nonnegative, got {startup_cost}")
        self.beta = float(beta)
        self.startup_cost = float(startup_cost)
        self.reward.flags.writeable = False
        self.trans.flags.writeable = False

    @property
    def n_states(self) -> int:
        return self.reward.shape[0]


@dataclass(frozen=True)
class AugmentedState:
    """A state of an augmented model: (layer, base) packed as layer*n + base."""
    layer: int
    base: int


def pack_state(st: AugmentedState, n_base: int) -> int:
    if not 0 <= st.base < n_base or st.layer < 0:
        raise ModelError(f"cannot pack {st} with n_base={n_base}")
    return st.layer * n_base + st.base


def unpack_state(idx: int, n_base: int) -> AugmentedState:
    if idx < 0 or n_base < 1:
        raise ModelError(f"cannot unpack index {idx} with n_base={n_base}")
    return AugmentedState(layer=idx // n_base, base=idx % n_base)


def embed_classic(cb: ClassicBandit) -> RestlessBandit:
    """Restless form of a plain classic bandit (no startup cost allowed)."""
    if cb.startup_cost != 0.0:
        raise ModelError(
            "classic embedding requires zero startup cost; use "
            "embed_switching for charged restarts")
    n = cb.n_states
    return RestlessBandit(
        reward0=np.zeros(n), reward1=cb.reward,
        work0=np.zeros(n), work1=np.ones(n),
        trans0=np.eye(n), trans1=cb.trans, beta=cb.beta)


def gittins_indices(cb: ClassicBandit) -> dict:
    """Play-or-freeze index of every state, via the restless embedding."""
    b = embed_classic(cb)
    result = adaptive_greedy(b, family_full(range(cb.n_states)))
    return dict(result.mpi)


def embed_switching(cb: ClassicBandit, startup_cost=None) -> RestlessBandit:
    """Restless form of a classic bandit whose restarts are charged.

    States are (last action, base state) pairs packed as a*n + i. Playing
    from a paused layer pays the startup charge; pausing records the pause
    and freezes the base state.
    """
    c = cb.startup_cost if startup_cost is None else float(startup_cost)
    if c < 0:
        raise ModelError(f"startup_cost must be nonnegative, got {c}")
    n = cb.n_states
    m = 2 * n
    r1 = np.concatenate([cb.reward - c, cb.reward])
    r0 = np.zeros(m)
    p1 = np.zeros((m, m))
    p1[:n, n:] = cb.trans
    p1[n:, n:] = cb.trans
    p0 = np.zeros((m, m))
    p0[:n, :n] = np.eye(n)
    p0[n:, :n] = np.eye(n)
    return RestlessBandit(
        reward0=r0, reward1=r1, work0=np.zeros(m), work1=np.ones(m),
        trans0=p0, trans1=p1, beta=cb.beta)


def family_switching(n_base: int) -> SetSystem:
    """Feasible active sets for the switching augmentation.

    A member activates base-state sets (S0, S1) on the paused and playing
    layers with S0 contained in S1: a state worth restarting is always
    worth continuing. 3^n members.
    """
    if n_base < 1:
        raise ModelError(f"n_base must be positive, got {n_base}")
    ground = range(2 * n_base)

    def member(s):
        s0 = {i for i in s if i < n_base}
        s1 = {i - n_base for i in s if i >= n_base}
        return s0 <= s1

    def members():
        for mask1 in range(1 << n_base):
            sub = mask1
            while True:
                yield frozenset(
                    [i for i in range(n_base) if sub >> i & 1]
                    + [n_base + i for i in range(n_base) if mask1 >> i & 1])
                if sub == 0:
                    break
                sub = (sub - 1) & mask1

    return SetSystem(ground, member, iter_members=members,
                     member_count=3 ** n_base, certified=True, name="switching")


def embed_finite_horizon(cb: ClassicBandit, horizon: int) -> RestlessBandit:
    """Restless form of a classic bandit with a play budget.

    States are (plays remaining, base state) pairs packed as t*n + i.
    Playing consumes one unit of budget and moves the base chain; pausing
    freezes everything. The exhausted layer t=0 is absorbing and earns
    nothing, so it is uncontrollable by construction.
    """
    if not isinstance(horizon, int) or horizon < 1:
        raise ModelError(f"horizon must be a positive int, got {horizon}")
    if cb.startup_cost != 0.0:
        raise ModelError("finite-horizon embedding requires zero startup cost")
    n = cb.n_states
    m = (horizon + 1) * n
    r1 = np.concatenate([np.zeros(n)] + [cb.reward] * horizon)
    q1 = np.concatenate([np.zeros(n), np.ones(horizon * n)])
    p0 = np.eye(m)
    p1 = np.zeros((m, m))
    p1[:n, :n] = np.eye(n)
    for t in range(1, horizon + 1):
        p1[t * n:(t + 1) * n, (t - 1) * n:t * n] = cb.trans
    return RestlessBandit(
        reward0=np.zeros(m), reward1=r1, work0=np.zeros(m), work1=q1,
        trans0=p0, trans1=p1, beta=cb.beta)


def family_horizon(n_base: int, horizon: int) -> SetSystem:
    """Feasible active sets for the budgeted augmentation.

    A member assigns each base state a budget threshold: play it whenever
    at least that much budget remains. Equivalently the per-layer sets are
    nested upward in remaining budget. (horizon+1)^n members.
    """
    if n_base < 1:
        raise ModelError(f"n_base must be positive, got {n_base}")
    if not isinstance(horizon, int) or horizon < 1:
        raise ModelError(f"horizon must be a positive int, got {horizon}")
    ground = range(n_base, (horizon + 1) * n_base)

    def member(s):
        layers = [{i for i in range(n_base) if t * n_base + i in s}
                  for t in range(1, horizon + 1)]
        return all(a <= b for a, b in zip(layers, layers[1:]))

    def members():
        for thresholds in product(range(1, horizon + 2), repeat=n_base):
            yield frozenset(t * n_base + i
                            for i, tau in enumerate(thresholds)
                            for t in range(tau, horizon + 1))

    return SetSystem(ground, member, iter_members=members,
                     member_count=(horizon + 1) ** n_base, certified=True,
                     name="horizon")
