"""Model container and exact policy evaluation for two-action Markov projects.

A project occupies one of finitely many states. Each period it is either
engaged (action 1) or rested (action 0), earning a one-period reward and
consuming work according to the chosen action, then moving per that action's
transition row. Stationary deterministic policies are identified with their
active sets: the states where the policy engages. This module validates
models, separates controllable from uncontrollable states, and solves the
discounted reward/work evaluation systems exactly; index algorithms and
indexability tests build on these primitives.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

PROB_TOL = 1e-9          # row sums, distributions, controllability detection
WORK_ZERO_TOL = 1e-12    # |w| at or below this counts as zero marginal work
RESIDUAL_TOL = 1e-10     # relative linear-solver residual guard
DEFAULT_MAX_STATES = 20


class ModelError(ValueError):
    """Invalid model data, or an operation applied outside its domain."""


class SizeGuardError(RuntimeError):
    """Refused: the requested enumeration would be exponentially large."""


def resolve_max_states(override=None) -> int:
    """Enumeration guard width; RB_MPI_MAX_STATES overrides the default of 20."""
    if override is not None:
        return int(override)
    env = os.environ.get("RB_MPI_MAX_STATES", "").strip()
    return int(env) if env else DEFAULT_MAX_STATES


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


class RestlessBandit:
    """Two-action discounted project model.

    Parameters mirror the stored fields: per-state rewards ``reward0`` and
    ``reward1``, work consumptions ``work0`` and ``work1``, row-stochastic
    transition matrices ``trans0`` and ``trans1``, discount factor ``beta``
    in (0, 1), and a strictly positive initial-state distribution
    ``init_dist`` (uniform when omitted). Arrays are copied and frozen, so
    instances are immutable and safe to share across threads.
    """

    def __init__(self, reward0, reward1, work0, work1, trans0, trans1, beta,
                 init_dist=None):
        r0 = np.atleast_1d(np.asarray(reward0, dtype=float))
        if r0.ndim != 1 or r0.size == 0:
            raise ModelError("reward0 must be a nonempty vector")
        n = r0.size

        def vec(x, name):
            a = np.atleast_1d(np.asarray(x, dtype=float))
            if a.shape != (n,):
                raise ModelError(f"{name} must have shape ({n},), got {a.shape}")
            return a

        def mat(x, name):
            a = np.asarray(x, dtype=float)
            if a.shape != (n, n):
                raise ModelError(f"{name} must have shape ({n},{n}), got {a.shape}")
            if np.any(a < 0.0):
                i, j = np.argwhere(a < 0.0)[0]
                raise ModelError(f"{name} has a negative entry at row {i + 1}")
            bad = np.abs(a.sum(axis=1) - 1.0) > PROB_TOL
            if np.any(bad):
                i = int(np.argmax(bad))
                raise ModelError(
                    f"{name} row {i + 1} sums to {float(a[i].sum())!r}, not 1")
            return a

        self.reward0 = _frozen(r0)
        self.reward1 = _frozen(vec(reward1, "reward1"))
        self.work0 = _frozen(vec(work0, "work0"))
        self.work1 = _frozen(vec(work1, "work1"))
        if np.any(self.work0 < 0.0) or np.any(self.work1 < self.work0):
            raise ModelError("work rates must satisfy work1 >= work0 >= 0 per state")
        self.trans0 = _frozen(mat(trans0, "trans0"))
        self.trans1 = _frozen(mat(trans1, "trans1"))

        beta = float(beta)
        if not (0.0 < beta < 1.0):
            raise ModelError(f"beta must lie strictly in (0,1), got {beta}")
        self.beta = beta

        if init_dist is None:
            p = np.full(n, 1.0 / n)
        else:
            p = vec(init_dist, "init_dist")
            if np.any(p <= 0.0):
                raise ModelError("init_dist entries must be strictly positive")
            if abs(p.sum() - 1.0) > PROB_TOL:
                raise ModelError(f"init_dist sums to {float(p.sum())!r}, not 1")
        self.init_dist = _frozen(p)
        self._partition = None

    @property
    def n_states(self) -> int:
        return self.reward0.size

    def __repr__(self):
        return (f"RestlessBandit(n_states={self.n_states}, beta={self.beta}, "
                f"controllable={len(partition_states(self).controllable)})")


@dataclass(frozen=True)
class ControllabilityPartition:
    """Split of the state space by whether the two actions actually differ."""
    uncontrollable: frozenset
    controllable: tuple

    @property
    def n_controllable(self) -> int:
        return len(self.controllable)


@dataclass(frozen=True, eq=False)
class PolicyValue:
    """Discounted reward and work measures of one active-set policy."""
    f_per_state: np.ndarray
    g_per_state: np.ndarray
    f_agg: float
    g_agg: float
    active: frozenset


@dataclass(frozen=True, eq=False)
class MarginalMeasures:
    """Marginal work w, marginal reward r, and their ratio nu per state.

    Entries of ``nu`` are NaN where |w| <= 1e-12; uncontrollable states carry
    exact zeros in both w and r.
    """
    w: np.ndarray
    r: np.ndarray
    nu: np.ndarray
    active: frozenset


def partition_states(b: RestlessBandit) -> ControllabilityPartition:
    """Identify states where the two actions coincide (work and transitions).

    Those states are uncontrollable: the passive action is forced there and
    active sets may never include them. Comparison tolerance 1e-9 absolute.
    """
    if b._partition is not None:
        return b._partition
    same_work = np.abs(b.work1 - b.work0) <= PROB_TOL
    same_rows = np.all(np.abs(b.trans1 - b.trans0) <= PROB_TOL, axis=1)
    unc = same_work & same_rows
    part = ControllabilityPartition(
        uncontrollable=frozenset(np.flatnonzero(unc).tolist()),
        controllable=tuple(np.flatnonzero(~unc).tolist()),
    )
    b._partition = part
    return part


def _active_rows(b, active):
    sel = np.zeros(b.n_states, dtype=bool)
    if active:
        sel[list(active)] = True
    return sel


def check_active_set(b: RestlessBandit, s) -> frozenset:
    """Normalize an active set and verify it avoids uncontrollable states."""
    s = frozenset(int(i) for i in s)
    n = b.n_states
    for i in s:
        if not 0 <= i < n:
            raise ModelError(f"active set contains state {i + 1}, out of range")
    part = partition_states(b)
    bad = s & part.uncontrollable
    if bad:
        lbl = ", ".join(str(i + 1) for i in sorted(bad))
        raise ModelError(f"active set includes uncontrollable state(s) {lbl}")
    return s


def evaluate_policy(b: RestlessBandit, s) -> PolicyValue:
    """Solve the discounted evaluation systems for the S-active policy.

    Rows in ``s`` use the active reward/work/transition data, all others the
    passive data. Returns per-state reward and work values plus their
    aggregates under the initial distribution. Exact up to a relative solver
    residual of 1e-10 (guarded).
    """
    s = check_active_set(b, s)
    sel = _active_rows(b, s)
    p_pol = np.where(sel[:, None], b.trans1, b.trans0)
    a = np.eye(b.n_states) - b.beta * p_pol
    rhs = np.stack([np.where(sel, b.reward1, b.reward0),
                    np.where(sel, b.work1, b.work0)], axis=1)
    x = np.linalg.solve(a, rhs)
    err = np.abs(a @ x - rhs).max()
    if err > RESIDUAL_TOL * max(1.0, np.abs(rhs).max()):
        raise RuntimeError(f"policy evaluation residual {err:g} exceeds guard")
    f, g = x[:, 0], x[:, 1]
    return PolicyValue(
        f_per_state=_frozen(f), g_per_state=_frozen(g),
        f_agg=float(b.init_dist @ f), g_agg=float(b.init_dist @ g),
        active=s,
    )


def marginal_measures(b: RestlessBandit, s) -> MarginalMeasures:
    """Marginal work/reward of engaging one extra period before following S.

    w_i = work1_i - work0_i + beta * (trans1_i - trans0_i) . g^S, and r_i
    analogously with rewards and f^S. nu_i = r_i / w_i where |w_i| > 1e-12.
    """
    pv = evaluate_policy(b, s)
    dp = b.trans1 - b.trans0
    w = (b.work1 - b.work0) + b.beta * (dp @ pv.g_per_state)
    r = (b.reward1 - b.reward0) + b.beta * (dp @ pv.f_per_state)
    unc = list(partition_states(b).uncontrollable)
    if unc:
        w[unc] = 0.0
        r[unc] = 0.0
    nu = np.full(b.n_states, np.nan)
    ok = np.abs(w) > WORK_ZERO_TOL
    nu[ok] = r[ok] / w[ok]
    return MarginalMeasures(w=_frozen(w), r=_frozen(r), nu=_frozen(nu),
                            active=pv.active)
