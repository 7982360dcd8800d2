"""JSON load/save for problem instances.

Floats are written with Python's shortest-roundtrip repr, so a save/load
cycle reproduces every matrix bit for bit.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

import numpy as np

from .bandit import ModelError, RestlessBandit
from .reform import ClassicBandit

KINDS = ("restless", "classic")


@dataclass
class InstanceFile:
    type: str
    n: int
    beta: float
    R0: list = None
    R1: list = None
    Q0: list = None
    Q1: list = None
    P0: list = None
    P1: list = None
    p0: list = None
    R: list = None
    P: list = None
    startup_cost: float = None
    horizon: int = None

    def __post_init__(self):
        if self.type not in KINDS:
            raise ModelError(f"instance type must be one of {KINDS}, "
                             f"got {self.type!r}")
        if not isinstance(self.n, int) or self.n < 1:
            raise ModelError("n must be a positive integer")
        self.beta = float(self.beta)
        for name in ("R0", "R1", "Q0", "Q1", "P0", "P1", "p0", "R", "P"):
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, np.asarray(value, dtype=float).tolist())


def load_instance(path: str) -> InstanceFile:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ModelError(f"{path}: expected a JSON object")
    known = {f.name for f in fields(InstanceFile)}
    extra = set(raw) - known
    if extra:
        raise ModelError(f"{path}: unknown keys {sorted(extra)}")
    for req in ("type", "n", "beta"):
        if req not in raw:
            raise ModelError(f"{path}: missing required key {req!r}")
    try:
        return InstanceFile(**raw)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"{path}: {exc}") from exc


def save_instance(path: str, inst: InstanceFile) -> None:
    payload = {k: v for k, v in asdict(inst).items() if v is not None}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def to_restless(inst: InstanceFile) -> RestlessBandit:
    """Build the two-action model, filling conventional defaults.

    Omitted fields default to zero passive reward, unit active work, and
    zero passive work. ``p0`` seeds the evaluation distribution.
    """
    if inst.type != "restless":
        raise ModelError(f"expected a restless instance, got {inst.type!r}")
    if inst.R1 is None or inst.P0 is None or inst.P1 is None:
        raise ModelError("restless instance needs R1, P0 and P1")
    n = inst.n
    r0 = np.zeros(n) if inst.R0 is None else np.asarray(inst.R0, dtype=float)
    q1 = np.ones(n) if inst.Q1 is None else np.asarray(inst.Q1, dtype=float)
    q0 = np.zeros(n) if inst.Q0 is None else np.asarray(inst.Q0, dtype=float)
    init = None if inst.p0 is None else np.asarray(inst.p0, dtype=float)
    return RestlessBandit(r0, np.asarray(inst.R1, dtype=float), q0, q1,
                          np.asarray(inst.P0, dtype=float),
                          np.asarray(inst.P1, dtype=float),
                          inst.beta, init_dist=init)


def to_classic(inst: InstanceFile) -> ClassicBandit:
    if inst.type != "classic":
        raise ModelError(f"expected a classic instance, got {inst.type!r}")
    if inst.R is None or inst.P is None:
        raise ModelError("classic instance needs R and P")
    startup = 0.0 if inst.startup_cost is None else float(inst.startup_cost)
    return ClassicBandit(np.asarray(inst.R, dtype=float),
                         np.asarray(inst.P, dtype=float),
                         inst.beta, startup_cost=startup)
