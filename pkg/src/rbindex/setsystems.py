"""Set systems of feasible active sets, the adaptive-greedy index algorithm,
and the sufficient-condition checkers built on it.

The adaptive-greedy loop grows an active set one state at a time, always
adding the outer-boundary state of highest marginal productivity; its output
is the index sequence. Two checkable sufficient conditions certify that this
output is the true index: positive marginal work everywhere plus a monotone
index sequence ("PCL"), or the weaker boundary-positivity condition tied to
the wage-problem optimizers ("LP"). Both checkers report witnesses when they
fail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .bandit import (ModelError, RestlessBandit, SizeGuardError, WORK_ZERO_TOL,
                     marginal_measures, partition_states, resolve_max_states)
from .oracle import IndexabilityVerdict

MONOTONE_TIE_TOL = 1e-10   # equal index values within this are ties, not dips
IDENT_RTOL = 1e-8          # identity agreement tolerance (relative)
INEQ_SLACK = 1e-10         # slack for marginal-work inequality detection
MAX_ENUM_MEMBERS = 1 << 20


class ZeroMarginalWorkError(RuntimeError):
    """Adaptive greedy needed nu at a (state, set) pair with zero marginal work."""

    def __init__(self, state, active_set, w):
        self.state = state
        self.active_set = active_set
        self.w = w
        lbl = "{" + ",".join(str(i + 1) for i in sorted(active_set)) + "}"
        super().__init__(
            f"marginal work at state {state + 1} under active set {lbl} is "
            f"{w:.3e}; the marginal productivity ratio is undefined there")


class SetSystem:
    """A family of feasible active sets over the controllable ground set.

    Membership is a predicate on frozensets; boundary queries probe it one
    state at a time. ``certified`` marks structured families whose
    monotone-connectivity holds by construction, letting the enumeration
    check be skipped. ``member_count`` is the family size when known.
    """

    def __init__(self, ground, membership, iter_members=None, member_count=None,
                 certified=False, name=""):
        self.ground = tuple(sorted(int(i) for i in ground))
        self._membership = membership
        self._iter_members = iter_members
        self.member_count = member_count
        self.certified = bool(certified)
        self.name = name or "setsystem"

    def __contains__(self, s) -> bool:
        s = frozenset(s)
        if not s <= set(self.ground):
            return False
        return bool(self._membership(s))

    def outer_boundary(self, s) -> tuple:
        s = frozenset(s)
        return tuple(i for i in self.ground if i not in s and (s | {i}) in self)

    def inner_boundary(self, s) -> tuple:
        s = frozenset(s)
        return tuple(i for i in self.ground if i in s and (s - {i}) in self)

    def iter_members(self, max_members=None):
        """Yield every member; guarded against exponential blowups."""
        cap = MAX_ENUM_MEMBERS if max_members is None else int(max_members)
        if self.member_count is not None and self.member_count > cap:
            raise SizeGuardError(
                f"family {self.name} has {self.member_count} members; cap is {cap}")
        count = 0
        for s in (self._iter_members() if self._iter_members is not None
                  else self._iter_all()):
            count += 1
            if count > cap:
                raise SizeGuardError(
                    f"family {self.name} exceeded the {cap}-member enumeration cap")
            yield s

    def _iter_all(self):
        g = self.ground
        for mask in range(1 << len(g)):
            s = frozenset(g[k] for k in range(len(g)) if mask >> k & 1)
            if self._membership(s):
                yield s

    def __repr__(self):
        return f"SetSystem({self.name}, ground={self.ground})"


def family_full(partition_or_ground) -> SetSystem:
    """The power set of the controllable states."""
    ground = getattr(partition_or_ground, "controllable", partition_or_ground)
    ground = tuple(sorted(int(i) for i in ground))
    gset = set(ground)

    def members():
        for mask in range(1 << len(ground)):
            yield frozenset(ground[k] for k in range(len(ground)) if mask >> k & 1)

    return SetSystem(ground, lambda s: s <= gset, iter_members=members,
                     member_count=1 << len(ground), certified=True, name="full")


def family_nested(chain) -> SetSystem:
    """The family containing exactly the sets of one increasing chain.

    The chain must start empty, grow by a single state per step, and end at
    the ground set; anything else is malformed.
    """
    sets = [frozenset(int(i) for i in s) for s in chain]
    if not sets or sets[0]:
        raise ModelError("nested chain must start with the empty set")
    for a, b in zip(sets, sets[1:]):
        if not (a < b and len(b) == len(a) + 1):
            raise ModelError("nested chain must grow by exactly one state per step")
    ground = tuple(sorted(sets[-1]))
    if len(sets) != len(ground) + 1:
        raise ModelError("nested chain must end at the ground set")
    allowed = frozenset(sets)

    return SetSystem(ground, lambda s: s in allowed,
                     iter_members=lambda: iter(sets),
                     member_count=len(sets), certified=True, name="nested")


def check_monotone_connected(sys: SetSystem, force_enumerate=False,
                             max_members=2048) -> bool:
    """Verify the monotone-connectivity requirements by enumeration.

    Checks that the empty and ground sets are members, that any two nested
    members are linked through the family one state at a time from both
    ends, and that the family is closed under union and intersection.
    Certified structured families return True without enumerating unless
    ``force_enumerate`` is set.
    """
    if sys.certified and not force_enumerate:
        return True
    members = list(sys.iter_members(max_members=max_members))
    mset = set(members)
    ground = frozenset(sys.ground)
    if frozenset() not in mset or ground not in mset:
        return False
    for a, b in combinations(members, 2):
        if (a | b) not in mset or (a & b) not in mset:
            return False
        lo, hi = (a, b) if a < b else (b, a) if b < a else (None, None)
        if lo is None:
            continue
        if not any(lo | {j} <= hi for j in sys.outer_boundary(lo)):
            return False
        if not any(lo <= hi - {j} for j in sys.inner_boundary(hi)):
            return False
    return True


@dataclass(frozen=True, eq=False)
class MpiResult:
    """Adaptive-greedy output: insertion order, index values, diagnostics.

    ``family`` is the visited chain including both endpoints. ``monotone``
    allows ties within 1e-10. ``marginal_work_ok`` reports strict positivity
    of marginal work for every controllable state at every chain set, with
    the first failure in ``work_witness`` as (state, active_set, w).
    """
    order: tuple
    values: np.ndarray
    family: tuple
    monotone: bool
    marginal_work_ok: bool
    work_witness: tuple | None
    mpi: dict


def adaptive_greedy(b: RestlessBandit, sys: SetSystem) -> MpiResult:
    """Run the adaptive-greedy index algorithm over one set system.

    Starting from the empty set, each round evaluates the marginal
    productivity ratio of every outer-boundary state of the current set and
    adds the maximizer (ties broken by ascending state label), recording the
    ratio as that state's index value. Requires well-defined ratios on every
    boundary it touches.
    """
    part = partition_states(b)
    if tuple(sys.ground) != tuple(part.controllable):
        raise ModelError("set-system ground must equal the controllable states")
    nc = part.n_controllable
    current = frozenset()
    order = []
    values = []
    chain = [current]
    measures = []
    for _ in range(nc):
        out = sys.outer_boundary(current)
        if not out:
            raise ModelError(
                f"outer boundary of {sorted(current)} is empty; the family is "
                "not monotonically connected")
        mm = marginal_measures(b, current)
        measures.append(mm)
        for i in out:
            if abs(mm.w[i]) <= WORK_ZERO_TOL:
                raise ZeroMarginalWorkError(i, current, float(mm.w[i]))
        pick = max(out, key=lambda i: (mm.nu[i], -i))
        order.append(pick)
        values.append(float(mm.nu[pick]))
        current = current | {pick}
        chain.append(current)
    measures.append(marginal_measures(b, current))

    vals = np.asarray(values)
    monotone = bool(np.all(vals[1:] <= vals[:-1] + MONOTONE_TIE_TOL))
    work_ok = True
    witness = None
    for s, mm in zip(chain, measures):
        for i in part.controllable:
            if mm.w[i] <= WORK_ZERO_TOL:
                work_ok = False
                witness = (i, s, float(mm.w[i]))
                break
        if witness:
            break
    vals.flags.writeable = False
    return MpiResult(order=tuple(order), values=vals, family=tuple(chain),
                     monotone=monotone, marginal_work_ok=work_ok,
                     work_witness=witness, mpi=dict(zip(order, values)))


@dataclass(frozen=True, eq=False)
class PclVerdict:
    """Positive-marginal-work + monotone-index verdict.

    In exhaustive mode, ``positive_work`` quantifies over every family
    member and ``pcl_indexable`` is the conjunction with ``monotone``. In
    path mode only the adaptive-greedy chain is inspected, which is a
    necessary condition: ``pcl_indexable`` is None there, never a claim.
    """
    mode: str
    positive_work: bool
    work_witness: tuple | None
    monotone: bool | None
    pcl_indexable: bool | None
    ag: MpiResult | None
    members_checked: int


def check_pcl(b: RestlessBandit, sys: SetSystem, mode="exhaustive") -> PclVerdict:
    """Check the two-part sufficient condition for index correctness."""
    if mode not in ("exhaustive", "path"):
        raise ModelError(f"mode must be 'path' or 'exhaustive', got {mode!r}")
    part = partition_states(b)
    try:
        ag = adaptive_greedy(b, sys)
    except ZeroMarginalWorkError as e:
        # the needed ratio is undefined, so positivity already failed there
        return PclVerdict(mode=mode, positive_work=False,
                          work_witness=(e.state, e.active_set, e.w),
                          monotone=None,
                          pcl_indexable=False if mode == "exhaustive" else None,
                          ag=None, members_checked=0)

    if mode == "path":
        return PclVerdict(mode=mode, positive_work=ag.marginal_work_ok,
                          work_witness=ag.work_witness, monotone=ag.monotone,
                          pcl_indexable=None, ag=ag,
                          members_checked=len(ag.family))

    positive = True
    witness = None
    checked = 0
    for s in sys.iter_members():
        checked += 1
        mm = marginal_measures(b, s)
        for i in part.controllable:
            if mm.w[i] <= WORK_ZERO_TOL:
                positive = False
                witness = (i, s, float(mm.w[i]))
                break
        if not positive:
            break
    return PclVerdict(mode=mode, positive_work=positive, work_witness=witness,
                      monotone=ag.monotone,
                      pcl_indexable=positive and ag.monotone, ag=ag,
                      members_checked=checked)


@dataclass(frozen=True, eq=False)
class LpVerdict:
    """Boundary-positivity verdict relative to one family.

    ``r_lower`` / ``r_upper`` are the zero-marginal-work reward extremes at
    the empty and full sets (with -inf/+inf conventions when no state
    qualifies). ``cond_iii`` holds iff every minimal optimal active set
    found by the oracle's wage sweep belongs to the family.
    """
    cond_i: bool
    cond_ii: bool
    cond_iii: bool
    r_lower: float
    r_upper: float
    lp_indexable: bool
    witnesses: dict


def check_lp(b: RestlessBandit, sys: SetSystem,
             oracle_verdict: IndexabilityVerdict) -> LpVerdict:
    """Check the three-part boundary condition for index correctness."""
    part = partition_states(b)
    ctrl = list(part.controllable)
    empty = frozenset()
    full = frozenset(ctrl)
    witnesses = {}

    mm0 = marginal_measures(b, empty)
    mmf = marginal_measures(b, full)
    cond_i = True
    for tag, mm in (("empty", mm0), ("full", mmf)):
        for i in ctrl:
            if mm.w[i] < -WORK_ZERO_TOL:
                cond_i = False
                witnesses.setdefault("cond_i", (i, tag, float(mm.w[i])))
                break
    zero0 = [i for i in ctrl if abs(mm0.w[i]) <= WORK_ZERO_TOL]
    zerof = [i for i in ctrl if abs(mmf.w[i]) <= WORK_ZERO_TOL]
    r_lower = max((float(mm0.r[i]) for i in zero0), default=-math.inf)
    r_upper = min((float(mmf.r[i]) for i in zerof), default=math.inf)
    if r_lower > WORK_ZERO_TOL or r_upper < -WORK_ZERO_TOL:
        cond_i = False
        witnesses.setdefault("cond_i", ("reward extremes", r_lower, r_upper))

    cond_ii = True
    for s in sys.iter_members():
        boundary = set(sys.inner_boundary(s)) | set(sys.outer_boundary(s))
        if not boundary:
            continue
        mm = marginal_measures(b, s)
        for i in sorted(boundary):
            if mm.w[i] <= WORK_ZERO_TOL:
                cond_ii = False
                witnesses.setdefault("cond_ii", (i, s, float(mm.w[i])))
                break
        if not cond_ii:
            break

    cond_iii = True
    for wage, s in oracle_verdict.swept:
        if s not in sys:
            cond_iii = False
            witnesses.setdefault("cond_iii", (wage, s))
            break

    return LpVerdict(cond_i=cond_i, cond_ii=cond_ii, cond_iii=cond_iii,
                     r_lower=r_lower, r_upper=r_upper,
                     lp_indexable=cond_i and cond_ii and cond_iii,
                     witnesses=witnesses)


@dataclass(frozen=True, eq=False)
class RepresentationReport:
    """Pass/fail record for the index identities along one greedy chain."""
    chain_identity_ok: bool
    chain_identity_detail: tuple
    mc_lower: bool
    mc_upper: bool
    max_rep: bool | None
    min_rep: bool | None
    notes: tuple


def _close(x, y, rtol=IDENT_RTOL):
    return abs(x - y) <= rtol * max(1.0, abs(x), abs(y))


def representation_checks(b: RestlessBandit, mpi_result: MpiResult,
                          sys: SetSystem | None = None) -> RepresentationReport:
    """Evaluate the classic index identities on an adaptive-greedy run.

    Verifies, step by step, that the chosen ratio is simultaneously the max
    over states outside the previous set, the ratio at the new set, and the
    min over states inside the new set. Then detects whether marginal work
    is monotone in the active set (and wedge-shaped), and if so verifies the
    max/min representations of the index over the chain. Checks are skipped
    with a reason when their precondition fails.
    """
    part = partition_states(b)
    ctrl = list(part.controllable)
    family = sys if sys is not None else family_full(part)
    chain = mpi_result.family
    notes = []

    chain_mm = [marginal_measures(b, s) for s in chain]
    detail = []
    for k, pick in enumerate(mpi_result.order):
        prev, cur = chain[k], chain[k + 1]
        star = mpi_result.values[k]
        outside = [chain_mm[k].nu[j] for j in ctrl if j not in prev]
        inside = [chain_mm[k + 1].nu[j] for j in cur]
        entries = [np.nanmax(outside), star, chain_mm[k + 1].nu[pick],
                   np.nanmin(inside)]
        ok = (not any(np.isnan(entries))
              and all(_close(star, e) for e in entries))
        detail.append(bool(ok))
    chain_ok = all(detail) if detail else True

    members = list(family.iter_members(max_members=2048))
    mms = {s: marginal_measures(b, s) for s in members}
    mc_lower = True   # marginal work nondecreasing in the set, for members
    mc_upper = True   # and nonincreasing for outsiders (wedge shape)
    for a, bb in combinations(members, 2):
        lo, hi = (a, bb) if a <= bb else (bb, a) if bb <= a else (None, None)
        if lo is None or lo == hi:
            continue
        for i in ctrl:
            if i in lo and mms[lo].w[i] > mms[hi].w[i] + INEQ_SLACK:
                mc_lower = False
            if i not in hi and mms[lo].w[i] < mms[hi].w[i] - INEQ_SLACK:
                mc_upper = False
        if not (mc_lower or mc_upper):
            break

    max_rep = None
    min_rep = None
    if mc_lower:
        max_rep = True
        for i in ctrl:
            best = np.nanmax([chain_mm[k].nu[i] for k, s in enumerate(chain)
                              if i not in s])
            if not _close(mpi_result.mpi[i], best):
                max_rep = False
    else:
        notes.append("marginal work not monotone in the active set; "
                     "max representation skipped")
    if mc_lower and mc_upper:
        min_rep = True
        for i in ctrl:
            best = np.nanmin([chain_mm[k].nu[i] for k, s in enumerate(chain)
                              if i in s])
            if not _close(mpi_result.mpi[i], best):
                min_rep = False
    elif not mc_upper:
        notes.append("marginal work not wedge-shaped; min representation skipped")

    return RepresentationReport(chain_identity_ok=chain_ok,
                                chain_identity_detail=tuple(detail),
                                mc_lower=mc_lower, mc_upper=mc_upper,
                                max_rep=max_rep, min_rep=min_rep,
                                notes=tuple(notes))
