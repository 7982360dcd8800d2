"""Numerical studies built on the indexation core."""
from .census import CensusConfig, batch_verdicts, census, draw_instances, reference_verdicts
from .ctmc import ctmc_average_cost, ctmc_optimal_cost, routing_flow_stats
from .des import SimResult, des_simulate
from .models import PolicyReport, RoutingModel, SchedulingModel
from .routing import SweepRow, routing_policies, routing_report, routing_sweep, sweep_grid
from .scheduling import scheduling_policies, scheduling_report

__all__ = [
    "CensusConfig", "PolicyReport", "RoutingModel", "SchedulingModel",
    "SimResult", "SweepRow", "batch_verdicts", "census",
    "ctmc_average_cost", "ctmc_optimal_cost", "des_simulate",
    "draw_instances", "reference_verdicts", "routing_flow_stats",
    "routing_policies", "routing_report", "routing_sweep",
    "scheduling_policies", "scheduling_report", "sweep_grid",
]
