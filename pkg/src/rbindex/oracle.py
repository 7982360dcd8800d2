"""Ground-truth indexability testing by exhaustive wage sweep.

The wage problem attaches a price nu to every unit of work; its optimal
policies trace the upper boundary of the achievable work-reward region as nu
varies. A project is indexable when the minimal optimal active set grows one
breakpoint at a time from the empty set to the full controllable set as the
wage falls, and the breakpoints are then the per-state index values. This
module enumerates all active sets, so it is exact but exponential: intended
for small instances and as the oracle that certifies the fast algorithms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bandit import (ModelError, RestlessBandit, SizeGuardError, WORK_ZERO_TOL,
                     _frozen, check_active_set, partition_states,
                     resolve_max_states)

HULL_TOL = 1e-10          # collinearity margin in the upper-boundary scan
ADV_TOL = 1e-9            # strict active-advantage rule (times value scale)
DEDUPE_RTOL = 1e-9        # breakpoint candidate deduplication
_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class WorkRewardRegion:
    """All (work, reward) aggregates plus the upper-boundary vertex chain.

    ``points[m]`` is (active_set, g_agg, f_agg) for the subset whose bitmask
    over the ascending controllable states is m. ``upper_chain`` lists the
    vertex active sets left to right; ``on_upper[m]`` flags membership.
    """
    points: tuple
    upper_chain: tuple
    on_upper: tuple


@dataclass(frozen=True, eq=False)
class WageSolution:
    """Optimal value of the wage problem at one wage.

    ``minimal_active_set`` keeps exactly the states whose active advantage
    exceeds 1e-9 times the value scale; ``borderline`` flags any controllable
    advantage within ten times that tolerance of zero (a diagnostic, not an
    error).
    """
    wage: float
    value_per_state: np.ndarray
    minimal_active_set: frozenset
    borderline: bool
    iterations: int


@dataclass(frozen=True, eq=False)
class WageIntervalWitness:
    """Two wages with minimal optimal active sets that break the nesting."""
    wage_high: float
    set_high: frozenset
    wage_low: float
    set_low: frozenset
    note: str


@dataclass(frozen=True, eq=False)
class IndexabilityVerdict:
    """Outcome of the exhaustive sweep.

    When indexable: ``mpi`` maps each controllable state to its index value,
    ``order`` is the insertion order (ties resolved by ascending label), and
    ``nested_family`` is the chain of active sets from empty to full with one
    insertion per step. When not: ``witness`` exhibits the violation.
    ``swept`` records (wage, minimal active set) for every evaluated wage.
    """
    indexable: bool
    mpi: dict | None
    order: tuple | None
    nested_family: tuple | None
    witness: WageIntervalWitness | None
    swept: tuple
    borderline: bool


def _guard(nc, max_controllable):
    limit = resolve_max_states(max_controllable)
    if nc > limit:
        raise SizeGuardError(
            f"{nc} controllable states need 2^{nc} subsets; guard is {limit} "
            f"(raise via RB_MPI_MAX_STATES or the max_controllable argument)")


def subset_tables(b: RestlessBandit, max_controllable=None):
    """Per-state reward and work values for every active subset.

    Returns (ctrl, F, G) with F and G shaped (2^nc, n); row m holds the
    values of the subset whose bit k selects ctrl[k]. Solved in chunks of
    stacked linear systems.
    """
    part = partition_states(b)
    ctrl = np.asarray(part.controllable, dtype=int)
    nc = ctrl.size
    _guard(nc, max_controllable)
    n = b.n_states
    total = 1 << nc
    F = np.empty((total, n))
    G = np.empty((total, n))
    eye = np.eye(n)
    for lo in range(0, total, _CHUNK):
        hi = min(lo + _CHUNK, total)
        masks = np.arange(lo, hi)
        sel = np.zeros((hi - lo, n), dtype=bool)
        if nc:
            sel[:, ctrl] = (masks[:, None] >> np.arange(nc)) & 1
        p_pol = np.where(sel[:, :, None], b.trans1, b.trans0)
        a = eye - b.beta * p_pol
        rhs = np.stack([np.where(sel, b.reward1, b.reward0),
                        np.where(sel, b.work1, b.work0)], axis=2)
        x = np.linalg.solve(a, rhs)
        err = np.abs(np.einsum("mij,mjk->mik", a, x) - rhs).max()
        if err > 1e-10 * max(1.0, np.abs(rhs).max()):
            raise RuntimeError(f"stacked policy solve residual {err:g}")
        F[lo:hi] = x[:, :, 0]
        G[lo:hi] = x[:, :, 1]
    return ctrl, F, G


def _mask_to_set(mask, ctrl):
    return frozenset(int(ctrl[k]) for k in range(len(ctrl)) if mask >> k & 1)


def region(b: RestlessBandit, max_controllable=None) -> WorkRewardRegion:
    """Enumerate the achievable work-reward region and its upper boundary.

    The upper boundary is found by a monotone-chain scan over the aggregate
    points sorted by (work asc, reward desc): a point stays a vertex only if
    it makes a strictly concave turn (cross-product margin 1e-10). Interior
    points of flat segments are dropped, so vertex work values strictly
    increase.
    """
    ctrl, F, G = subset_tables(b, max_controllable)
    p = b.init_dist
    fa = F @ p
    ga = G @ p
    total = fa.size
    order = np.lexsort((np.arange(total), -fa, ga))

    stack = []  # indices into the sorted sequence of kept candidates
    pts = []
    for m in order:
        g, f = ga[m], fa[m]
        if pts and g <= pts[-1][0]:
            continue  # duplicate work value: the first (max reward) wins
        while len(pts) >= 2:
            og, of = pts[-2]
            ag, af = pts[-1]
            cross = (ag - og) * (f - of) - (af - of) * (g - og)
            if cross >= -HULL_TOL:
                pts.pop()
                stack.pop()
            else:
                break
        pts.append((g, f))
        stack.append(int(m))

    on_upper = np.zeros(total, dtype=bool)
    on_upper[stack] = True
    points = tuple((_mask_to_set(m, ctrl), float(ga[m]), float(fa[m]))
                   for m in range(total))
    chain = tuple(_mask_to_set(m, ctrl) for m in stack)
    return WorkRewardRegion(points=points, upper_chain=chain,
                            on_upper=tuple(bool(x) for x in on_upper))


def solve_wage(b: RestlessBandit, nu: float) -> WageSolution:
    """Solve the wage problem at wage nu by policy iteration.

    Starts from the all-passive policy; a state switches action only on a
    strict advantage (beyond 1e-12 times the value scale), which rules out
    tie cycling and guarantees finite termination. The minimal optimal
    active set applies the strict rule: active advantage > 1e-9 * scale.
    """
    nu = float(nu)
    part = partition_states(b)
    n = b.n_states
    ctrl = np.asarray(part.controllable, dtype=int)
    eye = np.eye(n)
    rew1 = b.reward1 - nu * b.work1
    rew0 = b.reward0 - nu * b.work0
    active = np.zeros(n, dtype=bool)
    v = np.zeros(n)
    for it in range(1, 101):
        a = eye - b.beta * np.where(active[:, None], b.trans1, b.trans0)
        v = np.linalg.solve(a, np.where(active, rew1, rew0))
        adv = (rew1 + b.beta * (b.trans1 @ v)) - (rew0 + b.beta * (b.trans0 @ v))
        flip = 1e-12 * max(1.0, np.abs(v).max())
        new = np.where(adv > flip, True, np.where(adv < -flip, False, active))
        if ctrl.size < n:
            new[list(part.uncontrollable)] = False
        if np.array_equal(new, active):
            break
        active = new
    else:
        raise RuntimeError("policy iteration failed to settle within 100 rounds")

    scale = max(1.0, np.abs(v).max())
    strict = adv > ADV_TOL * scale
    if ctrl.size < n:
        strict[list(part.uncontrollable)] = False
    borderline = bool(ctrl.size and
                      np.any(np.abs(adv[ctrl]) <= 10.0 * ADV_TOL * scale))
    return WageSolution(wage=nu, value_per_state=_frozen(v),
                        minimal_active_set=frozenset(np.flatnonzero(strict).tolist()),
                        borderline=borderline, iterations=it)


def _candidate_wages(b, ctrl, F, G):
    """All marginal productivity ratios nu_i^S with nonzero marginal work."""
    dq = b.work1 - b.work0
    dr = b.reward1 - b.reward0
    dp = b.trans1 - b.trans0
    W = dq[None, :] + b.beta * np.einsum("ij,mj->mi", dp, G)
    R = dr[None, :] + b.beta * np.einsum("ij,mj->mi", dp, F)
    Wc = W[:, ctrl]
    Rc = R[:, ctrl]
    ok = np.abs(Wc) > WORK_ZERO_TOL
    return (Rc[ok] / Wc[ok]).ravel()


def _dedupe_desc(vals):
    """Sort descending and collapse near-equal runs (rel tol 1e-9) to means."""
    if vals.size == 0:
        return np.empty(0)
    v = np.sort(vals)[::-1]
    reps = []
    start = 0
    for k in range(1, v.size + 1):
        if k == v.size or (v[k - 1] - v[k]) > DEDUPE_RTOL * max(
                1.0, abs(v[k - 1]), abs(v[k])):
            reps.append(v[start:k].mean())
            start = k
    return np.asarray(reps)


def test_indexability(b: RestlessBandit, max_controllable=None) -> IndexabilityVerdict:
    """Exhaustive indexability verdict with index values when they exist.

    Candidate breakpoints are every marginal productivity ratio over every
    subset; the minimal optimal active set is computed above, below, and at
    each midpoint between consecutive distinct candidates. Indexable means
    those sets grow by inclusion from empty to the full controllable set as
    the wage decreases; each state's index is the candidate separating the
    wages where it appears.
    """
    part = partition_states(b)
    nc = part.n_controllable
    if nc == 0:
        return IndexabilityVerdict(indexable=True, mpi={}, order=(),
                                   nested_family=(frozenset(),), witness=None,
                                   swept=(), borderline=False)
    ctrl, F, G = subset_tables(b, max_controllable)
    cands = _dedupe_desc(_candidate_wages(b, ctrl, F, G))

    if cands.size:
        wages = [float(cands[0] + 1.0)]
        wages += [float(0.5 * (cands[k - 1] + cands[k])) for k in range(1, cands.size)]
        wages.append(float(cands[-1] - 1.0))
        seps = [float(c) for c in cands]
    else:
        wages = [1.0, -1.0]
        seps = [0.0]  # placeholder; only reached on nonindexable paths

    sols = [solve_wage(b, nu) for nu in wages]
    sets = [sol.minimal_active_set for sol in sols]
    swept = tuple((sol.wage, sol.minimal_active_set) for sol in sols)
    borderline = any(sol.borderline for sol in sols)
    full = frozenset(int(i) for i in ctrl)

    def reject(k_hi, k_lo, note):
        if k_hi is None:
            wit = WageIntervalWitness(math.inf, frozenset(), wages[k_lo],
                                      sets[k_lo], note)
        elif k_lo is None:
            wit = WageIntervalWitness(wages[k_hi], sets[k_hi], -math.inf,
                                      full, note)
        else:
            wit = WageIntervalWitness(wages[k_hi], sets[k_hi], wages[k_lo],
                                      sets[k_lo], note)
        return IndexabilityVerdict(indexable=False, mpi=None, order=None,
                                   nested_family=None, witness=wit,
                                   swept=swept, borderline=borderline)

    if sets[0]:
        return reject(None, 0, "minimal active set above all candidates is not empty")
    if sets[-1] != full:
        return reject(len(sets) - 1, None,
                      "minimal active set below all candidates is not the full set")
    for k in range(len(sets) - 1):
        if not sets[k] <= sets[k + 1]:
            return reject(k, k + 1, "minimal active sets are not nested")

    mpi = {}
    order = []
    family = [frozenset()]
    for k in range(len(sets) - 1):
        for i in sorted(sets[k + 1] - sets[k]):
            mpi[i] = seps[k]
            order.append(i)
            family.append(family[-1] | {i})
    return IndexabilityVerdict(indexable=True, mpi=mpi, order=tuple(order),
                               nested_family=tuple(family), witness=None,
                               swept=swept, borderline=borderline)


def optimal_value_check(b: RestlessBandit, verdict: IndexabilityVerdict,
                        nu: float, rtol=1e-8) -> bool:
    """Cross-check: the wage-problem value equals the best chain member.

    For an indexable project the optimal value at any wage must be attained
    by some member of the nested family, state by state. Compares the policy
    iteration value against that maximum within ``rtol`` relative.
    """
    if not verdict.indexable:
        raise ModelError("optimal_value_check requires an indexable verdict")
    from .bandit import evaluate_policy
    v = solve_wage(b, nu).value_per_state
    best = np.full(b.n_states, -np.inf)
    for s in verdict.nested_family:
        pv = evaluate_policy(b, check_active_set(b, s))
        np.maximum(best, pv.f_per_state - nu * pv.g_per_state, out=best)
    return bool(np.abs(v - best).max() <= rtol * max(1.0, np.abs(v).max()))
