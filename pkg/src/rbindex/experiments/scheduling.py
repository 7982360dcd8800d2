"""Index policies for multiclass loss-queue scheduling."""
from __future__ import annotations

from ..queueing import bias_mpi, second_order_mpi
from .ctmc import ctmc_average_cost, ctmc_optimal_cost
from .models import PolicyReport, SchedulingModel

POLICY_NAMES = ("mpi", "cmu", "src")


def scheduling_policies(model: SchedulingModel) -> dict:
    """The three service rules, each mapping a joint state to a class.

    All serve only nonempty classes and return None when the system is
    empty. MPI serves the class with the largest bias index, breaking
    exact ties first by the second-order refinement (pure-loss classes
    only), then by lower label. cmu serves the largest cost-rate-times-
    speed product; SRC serves the class with the smallest residual buffer
    space.
    """
    k_range = range(len(model.mus))
    primary = []
    secondary = []
    for k in k_range:
        lam, mu = model.lams[k], model.mus[k]
        c, r, n = model.cs[k], model.rs[k], model.ns[k]
        rho = lam / mu
        primary.append([None] + [bias_mpi(c, r, mu, rho, n, i)
                                 for i in range(1, n + 1)])
        if c == 0.0 and r > 0.0:
            secondary.append([None] + [-second_order_mpi(r, rho, n - i)
                                       for i in range(1, n + 1)])
        else:
            secondary.append([None] + [0.0] * n)

    def feasible(s):
        return [k for k in k_range if s[k] >= 1]

    def mpi(s):
        feas = feasible(s)
        if not feas:
            return None
        return max(feas, key=lambda k: (primary[k][s[k]], secondary[k][s[k]], -k))

    def cmu(s):
        feas = feasible(s)
        if not feas:
            return None
        return max(feas, key=lambda k: (model.cs[k] * model.mus[k], -k))

    def src(s):
        feas = feasible(s)
        if not feas:
            return None
        return min(feas, key=lambda k: (model.ns[k] - s[k], k))

    return {"mpi": mpi, "cmu": cmu, "src": src}


def scheduling_report(model: SchedulingModel) -> PolicyReport:
    """Evaluate the three service rules and the exact optimum on one model."""
    policies = scheduling_policies(model)
    costs = {name: ctmc_average_cost(model, pol)
             for name, pol in policies.items()}
    optimal = ctmc_optimal_cost(model)
    return PolicyReport(costs=costs, optimal=optimal,
                        meta={"lams": model.lams, "mus": model.mus,
                              "cs": model.cs, "rs": model.rs, "ns": model.ns})
