"""Command-line front end.

Exit codes: 0 success, 2 adaptive-greedy failure (zero marginal work),
3 validation or input error, 4 enumeration size guard. Output is plain
CSV with headers, no timestamps, so identical invocations are
byte-identical given identical seeds.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from contextlib import nullcontext

from .bandit import ModelError, SizeGuardError, partition_states
from .experiments import (CensusConfig, SchedulingModel, census,
                          routing_sweep, scheduling_report)
from .instanceio import load_instance, to_classic, to_restless
from .oracle import region, test_indexability
from .queueing import (Mm1Params, admission_index, bias_mpi,
                       mts_index_linear, second_order_mpi)
from .reform import (embed_finite_horizon, embed_switching, family_horizon,
                     family_switching)
from .setsystems import (ZeroMarginalWorkError, adaptive_greedy, check_pcl,
                         family_full, family_nested)

EXHAUSTIVE_PCL_CAP = 4096


def _fmt_set(s, label) -> str:
    return "{" + ";".join(label(i) for i in sorted(s)) + "}"


def _plain_label(i) -> str:
    return str(i + 1)


def _layer_label(n_base):
    return lambda idx: f"{idx // n_base}:{idx % n_base + 1}"


def _out_handle(path):
    if path in (None, "-"):
        return nullcontext(sys.stdout)
    return open(path, "w", newline="")


def _pcl_line(verdict, label) -> str:
    if verdict.work_witness is not None:
        state, active_set, w = verdict.work_witness
        rel = "< 0" if w < 0 else "~ 0"
        return (f"PCL: fail (w_{label(state)}^{_fmt_set(active_set, label)}"
                f" = {w:.6g} {rel})")
    if verdict.pcl_indexable is True:
        return "PCL: pass"
    if verdict.pcl_indexable is False:
        return "PCL: fail (index values not monotone along the chain)"
    if verdict.monotone:
        return ("PCL: chain check passed (exhaustive membership check "
                "skipped: family too large)")
    return "PCL: fail (index values not monotone along the chain)"


def _load_chain(path):
    """Chain file: a JSON array of 1-based labels in insertion order."""
    with open(path) as fh:
        try:
            labels = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(labels, list):
        raise ModelError(f"{path}: expected a JSON array of 1-based labels")
    chain = [frozenset()]
    acc = set()
    for lbl in labels:
        if not isinstance(lbl, int) or lbl < 1:
            raise ModelError(f"{path}: bad state label {lbl!r}")
        acc.add(lbl - 1)
        chain.append(frozenset(acc))
    return family_nested(chain)


def _resolve_family(args, inst):
    """Instance + family flag -> (bandit, set system, state labeler)."""
    spec = args.family
    if spec == "switching":
        classic = to_classic(inst)
        bandit = embed_switching(classic)
        return bandit, family_switching(classic.n_states), \
            _layer_label(classic.n_states)
    if spec == "horizon":
        classic = to_classic(inst)
        if inst.horizon is None:
            raise ModelError("the horizon family needs a horizon field "
                             "in the instance file")
        bandit = embed_finite_horizon(classic, inst.horizon)
        return bandit, family_horizon(classic.n_states, inst.horizon), \
            _layer_label(classic.n_states)
    bandit = to_restless(inst)
    if spec == "full":
        return bandit, family_full(partition_states(bandit)), _plain_label
    if spec.startswith("nested:"):
        return bandit, _load_chain(spec[len("nested:"):]), _plain_label
    raise ModelError(f"unknown family {spec!r}; use full, nested:<chain "
                     f"file>, switching or horizon")


def cmd_mpi(args) -> int:
    inst = load_instance(args.instance)
    bandit, system, label = _resolve_family(args, inst)
    result = adaptive_greedy(bandit, system)
    writer = csv.writer(sys.stdout)
    writer.writerow(["rank", "state", "index", "active_set"])
    for k, state in enumerate(result.order):
        writer.writerow([k + 1, label(state), repr(float(result.values[k])),
                         _fmt_set(result.family[k + 1], label)])
    count = system.member_count
    mode = "exhaustive" if count is not None and count <= EXHAUSTIVE_PCL_CAP \
        else "path"
    try:
        verdict = check_pcl(bandit, system, mode=mode)
        print(_pcl_line(verdict, label))
    except ZeroMarginalWorkError as exc:
        print(f"PCL: fail (w_{label(exc.state)}"
              f"^{_fmt_set(exc.active_set, label)} = {exc.w:.6g} ~ 0)")
    return 0


def cmd_test(args) -> int:
    bandit = to_restless(load_instance(args.instance))
    verdict = test_indexability(bandit)
    label = _plain_label
    if verdict.indexable:
        print("verdict: indexable")
        print("family: " + " ".join(_fmt_set(s, label)
                                    for s in verdict.nested_family))
        writer = csv.writer(sys.stdout)
        writer.writerow(["state", "mpi"])
        for state in sorted(verdict.mpi):
            writer.writerow([label(state), repr(float(verdict.mpi[state]))])
    else:
        print("verdict: nonindexable")
        wit = verdict.witness
        print(f"witness: minimal set {_fmt_set(wit.set_high, label)} at wage "
              f"{wit.wage_high:.6g} vs {_fmt_set(wit.set_low, label)} at "
              f"wage {wit.wage_low:.6g}: {wit.note}")
    family = family_full(partition_states(bandit))
    pcl = check_pcl(bandit, family, mode="exhaustive")
    print(_pcl_line(pcl, label))
    return 0


def cmd_region(args) -> int:
    bandit = to_restless(load_instance(args.instance))
    reg = region(bandit)
    with _out_handle(args.out) as fh:
        writer = csv.writer(fh)
        writer.writerow(["set", "g", "f", "on_upper_boundary"])
        for (active_set, g, f), flag in zip(reg.points, reg.on_upper):
            writer.writerow([_fmt_set(active_set, _plain_label),
                             repr(g), repr(f), int(flag)])
    return 0


def cmd_census(args) -> int:
    cfg = CensusConfig(n=args.n, betas=tuple(args.beta), samples=args.samples,
                       seed=args.seed, jobs=args.jobs, engine=args.engine,
                       chunk=args.chunk)
    rows = census(cfg)
    with _out_handle(args.out) as fh:
        writer = csv.writer(fh)
        header = ["beta", "n", "samples", "nonindexable",
                  "indexable_not_pcl", "nonindexable_rate",
                  "indexable_not_pcl_rate"]
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(row["beta"]), row["n"], row["samples"],
                             row["nonindexable"], row["indexable_not_pcl"],
                             repr(row["nonindexable_rate"]),
                             repr(row["indexable_not_pcl_rate"])])
    return 0


def _sweep_routing(cfg, args) -> int:
    rows = routing_sweep(
        lam=float(cfg.get("lam", 1.0)),
        buffers=tuple(cfg.get("buffers", (30, 30))),
        width=float(cfg.get("grid_width", 0.05)),
        rho_min=float(cfg.get("rho_min", 0.5)),
        rho_max=float(cfg.get("rho_max", 1.0)),
        jobs=args.jobs)
    if not rows:
        print("warning: the utilization grid is empty", file=sys.stderr)
    with _out_handle(args.out) as fh:
        writer = csv.writer(fh)
        names = ("mpi", "jsq", "ior")
        writer.writerow(["rho1", "rho2", "mu1", "mu2", "optimal"]
                        + [f"cost_{p}" for p in names]
                        + [f"gap_{p}" for p in names]
                        + [f"sojourn_{p}" for p in names])
        for row in rows:
            rep = row.report
            flows = rep.meta["flows"]
            writer.writerow(
                [repr(float(row.rhos[0])), repr(float(row.rhos[1])),
                 repr(float(row.mus[0])), repr(float(row.mus[1])),
                 repr(rep.optimal)]
                + [repr(rep.costs[p]) for p in names]
                + [repr(rep.gaps[p]) for p in names]
                + [repr(flows[p]["sojourn"]) for p in names])
    return 0


def _sweep_scheduling(cfg, args) -> int:
    instances = cfg.get("instances")
    if not isinstance(instances, list) or not instances:
        raise ModelError("scheduling sweep config needs a nonempty "
                         "'instances' array")
    with _out_handle(args.out) as fh:
        writer = csv.writer(fh)
        names = ("mpi", "cmu", "src")
        writer.writerow(["instance", "optimal"]
                        + [f"cost_{p}" for p in names]
                        + [f"gap_{p}" for p in names])
        for idx, spec in enumerate(instances):
            try:
                model = SchedulingModel(lams=spec["lam"], mus=spec["mu"],
                                        cs=spec["c"], rs=spec["r"],
                                        ns=spec["buffer"])
            except KeyError as exc:
                raise ModelError(f"instance {idx}: missing key {exc}") from exc
            rep = scheduling_report(model)
            writer.writerow([idx, repr(rep.optimal)]
                            + [repr(rep.costs[p]) for p in names]
                            + [repr(rep.gaps[p]) for p in names])
    return 0


def cmd_sweep(args) -> int:
    with open(args.config) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"{args.config}: not valid JSON ({exc})") from exc
    kind = cfg.get("kind")
    if kind == "routing":
        return _sweep_routing(cfg, args)
    if kind == "scheduling":
        return _sweep_scheduling(cfg, args)
    raise ModelError(f"sweep config kind must be 'routing' or 'scheduling', "
                     f"got {kind!r}")


def _parse_span(text: str):
    if ":" in text:
        lo_s, hi_s = text.split(":", 1)
        lo, hi = int(lo_s), int(hi_s)
        if hi < lo:
            raise ModelError(f"empty range {text!r}")
        return list(range(lo, hi + 1)), True
    return [int(text)], False


def cmd_qindex(args) -> int:
    which = args.which
    if which == "admission":
        span, ranged = _parse_span(args.j)
        params = Mm1Params(lam=args.rho * args.mu, mu=args.mu, c=args.c)
        rows = [(j, admission_index(params, j)) for j in span]
        head = "j"
    elif which == "mts":
        span, ranged = _parse_span(args.i)
        rows = [(i, mts_index_linear(args.b, args.h, args.mu, args.rho, i))
                for i in span]
        head = "i"
    elif which == "gamma":
        span, ranged = _parse_span(args.i)
        rows = [(i, second_order_mpi(args.r, args.rho, i)) for i in span]
        head = "i"
    else:
        span, ranged = _parse_span(args.i)
        rows = [(i, bias_mpi(args.c, args.r, args.mu, args.rho, args.n, i))
                for i in span]
        head = "i"
    if ranged:
        writer = csv.writer(sys.stdout)
        writer.writerow([head, "value"])
        for state, value in rows:
            writer.writerow([state, repr(float(value))])
    else:
        print(repr(float(rows[0][1])))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rbindex",
        description="Marginal productivity indices for restless bandits")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_mpi = sub.add_parser("mpi", help="adaptive-greedy index computation")
    p_mpi.add_argument("instance")
    p_mpi.add_argument("--family", default="full",
                       help="full | nested:<chain file> | switching | horizon")
    p_mpi.set_defaults(func=cmd_mpi)

    p_test = sub.add_parser("test", help="brute-force indexability test")
    p_test.add_argument("instance")
    p_test.set_defaults(func=cmd_test)

    p_region = sub.add_parser("region",
                              help="work-reward performance region table")
    p_region.add_argument("instance")
    p_region.add_argument("--out", default="-")
    p_region.set_defaults(func=cmd_region)

    p_census = sub.add_parser("census", help="random-instance census")
    p_census.add_argument("--n", type=int, required=True)
    p_census.add_argument("--beta", type=float, nargs="+", required=True)
    p_census.add_argument("--samples", type=int, required=True)
    p_census.add_argument("--seed", type=int, required=True)
    p_census.add_argument("--jobs", type=int, default=1)
    p_census.add_argument("--engine", choices=("batch", "reference"),
                          default="batch")
    p_census.add_argument("--chunk", type=int, default=4096)
    p_census.add_argument("--out", default="-")
    p_census.set_defaults(func=cmd_census)

    p_sweep = sub.add_parser("sweep", help="policy-vs-optimal cost sweep")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--out", default="-")
    p_sweep.set_defaults(func=cmd_sweep)

    p_q = sub.add_parser("qindex", help="closed-form queueing indices")
    p_q.add_argument("which", choices=("admission", "mts", "gamma", "bias"))
    p_q.add_argument("--c", type=float, default=0.0)
    p_q.add_argument("--r", type=float, default=0.0)
    p_q.add_argument("--b", type=float, default=0.0)
    p_q.add_argument("--h", type=float, default=0.0)
    p_q.add_argument("--mu", type=float, default=1.0)
    p_q.add_argument("--rho", type=float, required=True)
    p_q.add_argument("--n", type=int, default=1)
    p_q.add_argument("--i", default="0")
    p_q.add_argument("--j", default="0")
    p_q.set_defaults(func=cmd_qindex)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ZeroMarginalWorkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SizeGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (ModelError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
