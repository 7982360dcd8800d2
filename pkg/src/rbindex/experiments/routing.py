"""Index policies for parallel-queue routing and the grid sweep harness."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from ..queueing import Mm1Params, admission_index
from .ctmc import ctmc_optimal_cost, routing_flow_stats
from .models import PolicyReport, RoutingModel

POLICY_NAMES = ("mpi", "jsq", "ior")


def routing_policies(model: RoutingModel) -> dict:
    """The three routing rules, each mapping a joint state to a decision.

    A decision is None when every buffer is full, a queue label, or a tuple
    of queue labels to be chosen among uniformly at random. MPI joins the
    nonfull queue whose admission index is smallest at its current
    occupancy (lower label on exact index ties); JSQ joins the shortest
    nonfull queue and, seeing queue lengths only and never the service
    rates, splits length ties uniformly; IOR joins the queue minimizing the
    arrival's own expected sojourn (lower label on ties).
    """
    k_range = range(len(model.mus))
    tables = [
        [admission_index(Mm1Params(lam=model.lam, mu=mu, c=1.0), j)
         for j in range(buf)]
        for mu, buf in zip(model.mus, model.buffers)]

    def feasible(s):
        return [k for k in k_range if s[k] < model.buffers[k]]

    def mpi(s):
        feas = feasible(s)
        if not feas:
            return None
        return min(feas, key=lambda k: (tables[k][s[k]], k))

    def jsq(s):
        feas = feasible(s)
        if not feas:
            return None
        short = min(s[k] for k in feas)
        picks = tuple(k for k in feas if s[k] == short)
        return picks[0] if len(picks) == 1 else picks

    def ior(s):
        feas = feasible(s)
        if not feas:
            return None
        return min(feas, key=lambda k: ((s[k] + 1) / model.mus[k], k))

    return {"mpi": mpi, "jsq": jsq, "ior": ior}


def routing_report(model: RoutingModel) -> PolicyReport:
    """Evaluate the three routing rules and the exact optimum on one model.

    Costs and gaps are on the average-jobs objective; per-policy sojourn
    times and admitted throughputs ride along in ``meta``.
    """
    policies = routing_policies(model)
    flows = {name: routing_flow_stats(model, pol)
             for name, pol in policies.items()}
    costs = {name: fl["jobs"] for name, fl in flows.items()}
    optimal = ctmc_optimal_cost(model)
    return PolicyReport(costs=costs, optimal=optimal,
                        meta={"flows": flows, "lam": model.lam,
                              "mus": model.mus, "buffers": model.buffers})


@dataclass(frozen=True)
class SweepRow:
    rhos: tuple
    mus: tuple
    report: PolicyReport


def _sweep_point(args):
    lam, buffers, mus = args
    rhos = tuple(lam / mu for mu in mus)
    report = routing_report(RoutingModel(lam=lam, mus=mus, buffers=buffers))
    return SweepRow(rhos=rhos, mus=mus, report=report)


def sweep_grid(rho_min=0.5, rho_max=1.0, width=0.05, lam=1.0) -> list:
    """Service-rate pairs on a lattice of the given spacing.

    Pairs (mu_1, mu_2) are positive multiples of ``width`` whose pooled
    utilization lam / (mu_1 + mu_2) lies strictly between ``rho_min`` and
    ``rho_max``. Per-queue utilizations lam / mu_k routinely exceed one
    here; only the pooled service capacity is constrained.
    """
    lo = lam / rho_max
    hi = lam / rho_min
    pairs = []
    k1 = 1
    while k1 * width < hi - width + 1e-12:
        k2 = 1
        while (s := round((k1 + k2) * width, 12)) < hi - 1e-12:
            if s > lo + 1e-12:
                pairs.append((round(k1 * width, 12), round(k2 * width, 12)))
            k2 += 1
        k1 += 1
    return pairs


def routing_sweep(lam=1.0, buffers=(30, 30), width=0.05, rho_min=0.5,
                  rho_max=1.0, jobs=1) -> list:
    """Evaluate all routing rules against the optimum over a rate grid.

    Returns one SweepRow per (mu_1, mu_2) pair of sweep_grid. Grid points
    are independent tasks, so ``jobs`` > 1 fans them out across processes;
    results are returned in grid order regardless.
    """
    points = [(lam, tuple(buffers), mus) for mus in
              sweep_grid(rho_min=rho_min, rho_max=rho_max, width=width,
                         lam=lam)]
    if jobs <= 1:
        return [_sweep_point(p) for p in points]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_point, points))
