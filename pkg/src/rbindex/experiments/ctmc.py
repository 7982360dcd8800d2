"""Exact CTMC evaluation for the routing and scheduling models.

Everything runs on the uniformized jump chain with rate
Lambda = (total arrival rate) + (sum of service rates): fixed policies are
evaluated through the stationary distribution of their sparse jump chain
restricted to the states reachable from empty, and the optimum comes from
relative value iteration with a span-seminorm stop that brackets the
optimal average cost within 1e-9 on the rate scale.
"""
from __future__ import annotations

from collections import deque

import numpy as np
from scipy.sparse import csr_matrix, identity
from scipy.sparse.linalg import spsolve

from ..bandit import ModelError
from .models import RoutingModel, SchedulingModel, check_state_space

SPAN_STOP = 1e-9
STATIONARY_RESIDUAL = 1e-10
RVI_MAX_ITERS = 2_000_000


def _after_service(v, axis):
    """Post-jump values after one departure on ``axis`` (self-loop at 0)."""
    out = np.empty_like(v)
    dst = [slice(None)] * v.ndim
    src = [slice(None)] * v.ndim
    dst[axis] = slice(1, None)
    src[axis] = slice(None, -1)
    out[tuple(dst)] = v[tuple(src)]
    dst[axis] = slice(0, 1)
    out[tuple(dst)] = v[tuple(dst)]
    return out


def _after_arrival(v, axis, blocked):
    """Post-jump values after one arrival on ``axis``.

    At the buffer edge the arrival cannot enter: ``blocked`` supplies the
    edge values (the state's own value when a blocked job is simply lost,
    +inf when the move is an infeasible routing choice).
    """
    out = np.empty_like(v)
    dst = [slice(None)] * v.ndim
    src = [slice(None)] * v.ndim
    dst[axis] = slice(None, -1)
    src[axis] = slice(1, None)
    out[tuple(dst)] = v[tuple(src)]
    dst[axis] = slice(-1, None)
    out[tuple(dst)] = blocked if np.isscalar(blocked) else blocked[tuple(dst)]
    return out


def _routing_cost(model):
    return sum(np.indices(model.dims, dtype=float))


def _scheduling_cost(model):
    idx = np.indices(model.dims, dtype=float)
    cost = np.zeros(model.dims)
    for k, (lam, c, r, n) in enumerate(
            zip(model.lams, model.cs, model.rs, model.ns)):
        cost += c * idx[k]
        cost += r * lam * (idx[k] == n)
    return cost


def uniformization_rate(model) -> float:
    if isinstance(model, RoutingModel):
        return model.lam + sum(model.mus)
    if isinstance(model, SchedulingModel):
        return sum(model.lams) + sum(model.mus)
    raise ModelError(f"unsupported model type {type(model).__name__}")


def _bellman_step(model):
    rate = uniformization_rate(model)
    if isinstance(model, RoutingModel):
        cost = _routing_cost(model)
        mus = model.mus

        def step(v):
            routed = np.full_like(v, np.inf)
            for k in range(len(mus)):
                np.minimum(routed, _after_arrival(v, k, np.inf), out=routed)
            routed = np.where(np.isinf(routed), v, routed)
            total = cost + model.lam * routed
            for k, mu in enumerate(mus):
                total += mu * _after_service(v, k)
            return total / rate

        return step, rate

    cost = _scheduling_cost(model)
    mus = model.mus
    total_mu = sum(mus)
    grid = np.indices(model.dims)

    def step(v):
        total = cost + 0.0
        for k, lam in enumerate(model.lams):
            total += lam * _after_arrival(v, k, v)
        served = total_mu * v
        for a, mu in enumerate(mus):
            cand = mu * _after_service(v, a) + (total_mu - mu) * v
            served = np.where(grid[a] >= 1, np.minimum(served, cand), served)
        return (total + served) / rate

    return step, rate


def ctmc_optimal_cost(model) -> float:
    """Optimal long-run average cost rate, by relative value iteration."""
    check_state_space(model.dims)
    step, rate = _bellman_step(model)
    v = np.zeros(model.dims)
    for _ in range(RVI_MAX_ITERS):
        tv = step(v)
        delta = tv - v
        lo = float(delta.min())
        hi = float(delta.max())
        if rate * (hi - lo) <= SPAN_STOP:
            return rate * (hi + lo) / 2.0
        v = tv - tv.flat[0]
    raise RuntimeError(
        f"value iteration did not reach span {SPAN_STOP} within "
        f"{RVI_MAX_ITERS} iterations")


def _routing_transitions(model, policy, s):
    lam, mus = model.lam, model.mus
    moves = []
    choice = policy(s)
    if choice is None:
        moves.append((s, lam))
    else:
        picks = choice if isinstance(choice, tuple) else (choice,)
        for k in picks:
            if not 0 <= k < len(mus) or s[k] >= model.buffers[k]:
                raise ModelError(
                    f"policy routed state {s} to invalid queue {k}")
            t = list(s)
            t[k] += 1
            moves.append((tuple(t), lam / len(picks)))
    for k, mu in enumerate(mus):
        if s[k] >= 1:
            t = list(s)
            t[k] -= 1
            moves.append((tuple(t), mu))
    return moves


def _scheduling_transitions(model, policy, s):
    moves = []
    for k, lam in enumerate(model.lams):
        if s[k] < model.ns[k]:
            t = list(s)
            t[k] += 1
            moves.append((tuple(t), lam))
    served = policy(s)
    if served is not None:
        if not 0 <= served < len(model.mus) or s[served] < 1:
            raise ModelError(
                f"policy served invalid class {served} at state {s}")
        t = list(s)
        t[served] -= 1
        moves.append((tuple(t), model.mus[served]))
    return moves


def _policy_chain(model, policy):
    """Reachable-from-empty jump chain under a fixed policy.

    Returns (states, stationary distribution). Only the recurrent class
    through the empty state matters for long-run averages; BFS restriction
    guarantees it is included and keeps the solve small.
    """
    check_state_space(model.dims)
    transitions = (_routing_transitions if isinstance(model, RoutingModel)
                   else _scheduling_transitions)
    rate = uniformization_rate(model)
    empty = (0,) * len(model.dims)
    index = {empty: 0}
    states = [empty]
    queue = deque([empty])
    rows, cols, vals = [], [], []
    while queue:
        s = queue.popleft()
        i = index[s]
        mass = 0.0
        for t, r in transitions(model, policy, s):
            if t not in index:
                index[t] = len(states)
                states.append(t)
                queue.append(t)
            rows.append(i)
            cols.append(index[t])
            vals.append(r / rate)
            mass += r / rate
        rows.append(i)
        cols.append(i)
        vals.append(1.0 - mass)
    m = len(states)
    chain = csr_matrix((vals, (rows, cols)), shape=(m, m))
    lil = (chain.T - identity(m, format="csr")).tolil()
    lil[m - 1, :] = 1.0
    rhs = np.zeros(m)
    rhs[m - 1] = 1.0
    pi = spsolve(lil.tocsr(), rhs)
    resid = float(np.abs(pi @ chain - pi).max())
    if resid > STATIONARY_RESIDUAL:
        raise RuntimeError(
            f"stationary solve residual {resid:.2e} exceeds "
            f"{STATIONARY_RESIDUAL}")
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    return states, pi


def ctmc_average_cost(model, policy) -> float:
    """Long-run average cost rate of one stationary policy."""
    states, pi = _policy_chain(model, policy)
    if isinstance(model, RoutingModel):
        cost = np.array([float(sum(s)) for s in states])
    else:
        cost = np.array([
            sum(c * s[k] for k, c in enumerate(model.cs))
            + sum(r * lam * (s[k] == model.ns[k])
                  for k, (r, lam) in enumerate(zip(model.rs, model.lams)))
            for s in states])
    return float(pi @ cost)


def routing_flow_stats(model, policy) -> dict:
    """Average jobs, admitted throughput, and sojourn time for one policy."""
    states, pi = _policy_chain(model, policy)
    jobs = float(pi @ np.array([float(sum(s)) for s in states]))
    admitted = float(sum(p for s, p in zip(states, pi)
                         if policy(s) is not None)) * model.lam
    sojourn = jobs / admitted if admitted > 0 else float("inf")
    return {"jobs": jobs, "throughput": admitted, "sojourn": sojourn}
