"""Event-driven simulation of the queueing controls.

Deliberately independent of the uniformized-chain machinery: the clock
advances by competing exponential timers and costs are integrated along
the sample path, so agreement with the stationary solver is evidence for
both.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .models import RoutingModel, SchedulingModel


@dataclass(frozen=True)
class SimResult:
    mean: float
    half_width: float
    ci_low: float
    ci_high: float
    horizon: float
    replications: int
    per_rep: tuple


def _run_routing(model: RoutingModel, policy, horizon: float, rng) -> float:
    s = [0] * len(model.mus)
    t = 0.0
    area = 0.0
    while True:
        rates = [model.lam] + [model.mus[k] if s[k] >= 1 else 0.0
                               for k in range(len(s))]
        total = sum(rates)
        dt = rng.exponential(1.0 / total)
        area += sum(s) * min(dt, horizon - t)
        t += dt
        if t >= horizon:
            return area / horizon
        u = rng.random() * total
        acc = 0.0
        event = 0
        for idx, rate in enumerate(rates):
            acc += rate
            if u < acc:
                event = idx
                break
        if event == 0:
            k = policy(tuple(s))
            if isinstance(k, tuple):
                k = k[rng.integers(len(k))]
            if k is not None:
                s[k] += 1
        else:
            s[event - 1] -= 1


def _run_scheduling(model: SchedulingModel, policy, horizon: float,
                    rng) -> float:
    s = [0] * len(model.mus)
    t = 0.0
    area = 0.0
    lost = 0.0
    while True:
        served = policy(tuple(s))
        rates = list(model.lams)
        rates.append(model.mus[served] if served is not None else 0.0)
        total = sum(rates)
        if total <= 0.0:
            area += sum(c * x for c, x in zip(model.cs, s)) * (horizon - t)
            return (area + lost) / horizon
        dt = rng.exponential(1.0 / total)
        area += sum(c * x for c, x in zip(model.cs, s)) * min(dt, horizon - t)
        t += dt
        if t >= horizon:
            return (area + lost) / horizon
        u = rng.random() * total
        acc = 0.0
        event = len(rates) - 1
        for idx, rate in enumerate(rates):
            acc += rate
            if u < acc:
                event = idx
                break
        if event < len(model.lams):
            if s[event] == model.ns[event]:
                lost += model.rs[event]
            else:
                s[event] += 1
        elif served is not None:
            s[served] -= 1


def des_simulate(model, policy, horizon: float, seed: int,
                 replications: int = 10) -> SimResult:
    """Estimate a policy's average cost rate with a t-based 95% interval.

    Each replication gets an independent child stream of ``seed``, so the
    estimate for a fixed (seed, horizon, replications) triple is exactly
    reproducible and unaffected by how calls are batched.
    """
    if horizon <= 0.0:
        raise ValueError("horizon must be positive")
    if replications < 2:
        raise ValueError("need at least two replications for an interval")
    runner = _run_routing if isinstance(model, RoutingModel) else _run_scheduling
    per_rep = []
    for rep in range(replications):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep,)))
        per_rep.append(runner(model, policy, horizon, rng))
    arr = np.asarray(per_rep)
    mean = float(arr.mean())
    sem = float(arr.std(ddof=1) / np.sqrt(replications))
    half = float(stats.t.ppf(0.975, replications - 1) * sem)
    return SimResult(mean=mean, half_width=half, ci_low=mean - half,
                     ci_high=mean + half, horizon=horizon,
                     replications=replications, per_rep=tuple(per_rep))
