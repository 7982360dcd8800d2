"""Large-scale random census of indexability and greedy-verifiability.

Two interchangeable engines produce verdicts per sampled instance: a
vectorized one that batches the per-subset linear solves across whole
chunks, and a reference one that walks each instance through the exact
single-instance pipeline. They share nothing beyond the sampler, so
cross-checking them on a common slice guards both.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..bandit import ModelError, RestlessBandit, partition_states
from ..oracle import test_indexability
from ..setsystems import check_pcl, family_full

ADV_TOL = 1e-9
WORK_ZERO_TOL = 1e-12
DEDUPE_RTOL = 1e-9
MONOTONE_TIE_TOL = 1e-10
MAX_CENSUS_STATES = 7


@dataclass(frozen=True)
class CensusConfig:
    n: int
    betas: tuple
    samples: int
    seed: int
    jobs: int = 1
    engine: str = "batch"
    chunk: int = 4096

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ModelError("state count must be a positive integer")
        if self.n > MAX_CENSUS_STATES:
            raise ModelError(
                f"census enumerates all 2^n subsets; n={self.n} exceeds "
                f"the cap of {MAX_CENSUS_STATES}")
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if not self.betas:
            raise ModelError("need at least one discount factor")
        for b in self.betas:
            if not 0.0 < b < 1.0:
                raise ModelError(f"discount factor {b} outside (0, 1)")
        if not isinstance(self.samples, int) or self.samples < 1:
            raise ModelError("samples must be a positive integer")
        if self.engine not in ("batch", "reference"):
            raise ModelError(f"unknown engine {self.engine!r}")
        if self.chunk < 1:
            raise ModelError("chunk must be positive")


def draw_instances(seed: int, start: int, stop: int, n: int):
    """Sample instances [start, stop) of the census stream.

    Instance k always gets the k-th child stream of ``seed``, so any
    contiguous slice of the census is reproducible in isolation and the
    totals do not depend on chunking or worker count. Rewards are uniform
    on [0, 1), both transition matrices are row-normalized uniform noise,
    passive rewards are zero, and the action charge is the unit of work.
    """
    m = stop - start
    r1 = np.empty((m, n))
    p1 = np.empty((m, n, n))
    p0 = np.empty((m, n, n))
    for k in range(m):
        rng = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(seed, spawn_key=(start + k,))))
        r1[k] = rng.random(n)
        a = rng.random((n, n))
        p1[k] = a / a.sum(axis=1, keepdims=True)
        a = rng.random((n, n))
        p0[k] = a / a.sum(axis=1, keepdims=True)
    return r1, p1, p0


def batch_verdicts(r1, p1, p0, beta: float, r0=None):
    """Indexability and greedy-verifiability flags for a chunk of instances.

    Vectorized mirror of the single-instance sweep: solve every subset
    policy for value and committed work, turn the marginal ratios into
    candidate wages, then confirm the minimal optimal sets grow monotonically
    from empty to full across test wages straddling every candidate.

    The second flag is the greedy certificate: marginal work stays strictly
    positive at every set the greedy run visits (for all states, the final
    full set included) and the emitted index values never increase. This is
    positivity over the greedy chain, not over all subsets, matching
    check_pcl's path mode on the single-instance side.
    """
    r1 = np.asarray(r1, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    m, n = r1.shape
    if r0 is None:
        r0 = np.zeros((m, n))
    else:
        r0 = np.asarray(r0, dtype=float)
    nsub = 1 << n
    eye = np.eye(n)
    bits = np.arange(n)

    f_tab = np.empty((m, nsub, n))
    g_tab = np.empty((m, nsub, n))
    for mask in range(nsub):
        act = ((mask >> bits) & 1).astype(bool)
        p_mix = np.where(act[None, :, None], p1, p0)
        a_mat = eye[None, :, :] - beta * p_mix
        rhs = np.stack([np.where(act[None, :], r1, r0),
                        np.broadcast_to(act.astype(float), (m, n))], axis=-1)
        sol = np.linalg.solve(a_mat, rhs)
        f_tab[:, mask, :] = sol[..., 0]
        g_tab[:, mask, :] = sol[..., 1]

    diff = p1 - p0
    w_tab = 1.0 + beta * np.einsum("mij,msj->msi", diff, g_tab)
    r_tab = (r1 - r0)[:, None, :] + beta * np.einsum("mij,msj->msi", diff, f_tab)

    with np.errstate(divide="ignore", invalid="ignore"):
        nu_tab = np.where(np.abs(w_tab) > WORK_ZERO_TOL, r_tab / w_tab, -np.inf)
    cand = np.where(np.isfinite(nu_tab), nu_tab, -np.inf).reshape(m, -1)
    cand = -np.sort(-cand, axis=1)
    any_fin = np.isfinite(cand[:, 0])
    hi = np.where(any_fin, cand[:, 0], 0.0)
    lo_fill = np.where(np.isfinite(cand), cand, np.inf).min(axis=1)
    lo = np.where(any_fin, lo_fill, 0.0)

    n_cand = cand.shape[1]
    wages = np.empty((m, n_cand + 1))
    wages[:, 0] = hi + 1.0
    prev = wages[:, 0].copy()
    for t in range(n_cand - 1):
        a = cand[:, t]
        b = cand[:, t + 1]
        ok = (np.isfinite(a) & np.isfinite(b)
              & (a - b > DEDUPE_RTOL * np.maximum(1.0, np.abs(a))))
        prev = np.where(ok, 0.5 * (a + b), prev)
        wages[:, t + 1] = prev
    wages[:, -1] = lo - 1.0

    masks = np.empty((m, wages.shape[1]), dtype=np.int64)
    ar = np.arange(m)
    for t in range(wages.shape[1]):
        nu = wages[:, t]
        val = (f_tab - nu[:, None, None] * g_tab).max(axis=1)
        adv = (r1 - r0) - nu[:, None] + beta * np.einsum("mij,mj->mi", diff, val)
        scale = np.maximum(1.0, np.abs(val).max(axis=1))
        active = adv > ADV_TOL * scale[:, None]
        masks[:, t] = (active.astype(np.int64) << bits).sum(axis=1)

    nested = np.ones(m, dtype=bool)
    for t in range(masks.shape[1] - 1):
        nested &= (masks[:, t] & masks[:, t + 1]) == masks[:, t]
    indexable = nested & (masks[:, 0] == 0) & (masks[:, -1] == nsub - 1)

    current = np.zeros(m, dtype=np.int64)
    mono = np.ones(m, dtype=bool)
    chain_work = np.ones(m, dtype=bool)
    prev_val = np.full(m, np.inf)
    for _ in range(n):
        w_cur = w_tab[ar, current, :]
        r_cur = r_tab[ar, current, :]
        chain_work &= (w_cur > WORK_ZERO_TOL).all(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            nu_cur = np.where(np.abs(w_cur) > WORK_ZERO_TOL,
                              r_cur / w_cur, -np.inf)
        member = ((current[:, None] >> bits) & 1).astype(bool)
        nu_cur = np.where(member, -np.inf, nu_cur)
        pick = np.argmax(nu_cur, axis=1)
        step_val = nu_cur[ar, pick]
        mono &= step_val <= prev_val + MONOTONE_TIE_TOL
        prev_val = step_val
        current = current | (np.int64(1) << pick)
    chain_work &= (w_tab[ar, current, :] > WORK_ZERO_TOL).all(axis=1)
    pcl = chain_work & mono

    return indexable, pcl


def reference_verdicts(r1, p1, p0, beta: float):
    """Same verdicts as batch_verdicts via the single-instance pipeline."""
    m, n = np.asarray(r1).shape
    zeros = np.zeros(n)
    ones = np.ones(n)
    indexable = np.empty(m, dtype=bool)
    pcl = np.empty(m, dtype=bool)
    for k in range(m):
        bandit = RestlessBandit(zeros, r1[k], zeros, ones, p0[k], p1[k], beta)
        verdict = test_indexability(bandit)
        family = family_full(partition_states(bandit))
        pv = check_pcl(bandit, family, mode="path")
        indexable[k] = verdict.indexable
        pcl[k] = bool(pv.positive_work and pv.monotone)
    return indexable, pcl


def _census_chunk(args):
    seed, start, stop, n, betas, engine = args
    r1, p1, p0 = draw_instances(seed, start, stop, n)
    run = batch_verdicts if engine == "batch" else reference_verdicts
    counts = np.zeros((len(betas), 2), dtype=np.int64)
    for bi, beta in enumerate(betas):
        indexable, pcl = run(r1, p1, p0, beta)
        counts[bi, 0] = int((~indexable).sum())
        counts[bi, 1] = int((indexable & ~pcl).sum())
    return counts


def census(cfg: CensusConfig) -> list:
    """Count nonindexable and indexable-but-unverifiable draws per discount.

    Returns one row dict per discount factor. The same instances are scored
    under every discount factor, and results are invariant to ``jobs`` and
    ``chunk`` because instance streams are keyed by global index.
    """
    spans = [(start, min(start + cfg.chunk, cfg.samples))
             for start in range(0, cfg.samples, cfg.chunk)]
    tasks = [(cfg.seed, start, stop, cfg.n, cfg.betas, cfg.engine)
             for start, stop in spans]
    totals = np.zeros((len(cfg.betas), 2), dtype=np.int64)
    if cfg.jobs <= 1:
        for task in tasks:
            totals += _census_chunk(task)
    else:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            for counts in pool.map(_census_chunk, tasks):
                totals += counts
    rows = []
    for bi, beta in enumerate(cfg.betas):
        non_idx = int(totals[bi, 0])
        not_pcl = int(totals[bi, 1])
        rows.append({
            "beta": beta,
            "n": cfg.n,
            "samples": cfg.samples,
            "nonindexable": non_idx,
            "indexable_not_pcl": not_pcl,
            "nonindexable_rate": non_idx / cfg.samples,
            "indexable_not_pcl_rate": not_pcl / cfg.samples,
        })
    return rows
