"""Reproducible parallel Monte Carlo for the reflected walk.

Sampling contract: every path owns a counter-based stream keyed by
(seed, path index) -- a Philox generator -- so the sampled paths are a pure
function of the plan and never depend on how work is split across workers.
Paths are processed in fixed blocks of ``BLOCK`` indices; per-block partial
sums are combined in block order with exact (fsum) accumulation, which makes
every aggregate bit-identical for any worker count.

All path arithmetic is integer lattice arithmetic; rescaling by
1/(sigma sqrt n) happens only when values are reported.  The modulus-of-
continuity check is therefore exact: for window widths that are whole
numbers of steps, the modulus of the linearly interpolated path equals the
max range over integer windows (interpolated values are convex combinations
of their endpoints), computed with O(n) sliding min/max filters.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d
from scipy.special import erf

from .errors import InvariantViolation
from .step_dist import StepDistribution, moments, validate

BLOCK = 4096  # paths per block; fixed so reductions are worker-independent


@dataclass(frozen=True)
class SimPlan:
    """Everything that determines a simulation, including its randomness."""

    dist: StepDistribution
    x0: int = 0
    n: int = 1024
    times: tuple[float, ...] = (1.0,)
    paths: int = 10_000
    seed: int = 0
    workers: int = 1
    modulus_deltas: tuple[float, ...] = ()

    def __post_init__(self):
        if self.x0 < 0:
            raise ValueError("x0 must be non-negative")
        if self.n < 1 or self.paths < 1 or self.workers < 1:
            raise ValueError("n, paths and workers must be >= 1")
        ts = tuple(float(t) for t in self.times)
        if any(not (0.0 < t <= 1.0) for t in ts):
            raise ValueError("times must lie in (0, 1]")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("times must be strictly increasing")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in 64 bits")
        rep = validate(self.dist)
        if not rep.passed:
            raise ValueError("step law fails validation:\n" + str(rep))

    @property
    def sigma(self) -> float:
        return moments(self.dist).sigma

    @property
    def scale(self) -> float:
        return self.sigma * math.sqrt(self.n)


@dataclass
class PathFunctionalSample:
    """Per-path record: rescaled values at the plan's time fractions."""

    values: np.ndarray
    reflections: int
    max_step: int
    modulus_pairs: dict[float, tuple[float, float]] | None = None


@dataclass
class BlockStats:
    """Aggregates for one fixed block of path indices."""

    count: int
    values: np.ndarray          # (count, n_times) rescaled values
    reflections: np.ndarray     # (count,)
    max_steps: np.ndarray       # (count,)
    moduli: dict[float, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)


def _sampling_table(d: StepDistribution) -> tuple[np.ndarray, np.ndarray]:
    support = d.offsets().astype(np.int16)
    cdf = np.cumsum(d.probs)
    cdf[-1] = 1.0  # exact right edge for searchsorted
    return support, cdf


def _path_steps(plan: SimPlan, support, cdf, first: int, count: int) -> np.ndarray:
    steps = np.empty((count, plan.n), dtype=np.int16)
    for i in range(count):
        key = (int(plan.seed) << 64) | (first + i)
        gen = np.random.Generator(np.random.Philox(key=key))
        u = gen.random(plan.n)
        steps[i] = support[np.searchsorted(cdf, u, side="right")]
    return steps


def _time_grid(plan: SimPlan) -> list[tuple[int, float]]:
    """(floor index, fraction) per requested time; linear interpolation."""
    grid = []
    for t in plan.times:
        u = plan.n * t
        i0 = int(math.floor(u + 1e-9))
        frac = u - i0
        if frac < 1e-9:
            frac = 0.0
        if i0 >= plan.n:
            i0, frac = plan.n, 0.0
        grid.append((i0, frac))
    return grid


def _walk_block(plan: SimPlan, steps: np.ndarray, need_matrix: bool):
    """Evolve the reflected recursion for one block.

    Returns (captured values dict index->vector, reflection counts, X matrix
    or None).  X(k) = |X(k-1) + xi_k| with X(0) = x0.
    """
    count = steps.shape[0]
    grid = _time_grid(plan)
    need = sorted({i for i0, frac in grid for i in ((i0, i0 + 1) if frac else (i0,))
                   if i <= plan.n})
    captured: dict[int, np.ndarray] = {}
    x = np.full(count, plan.x0, dtype=np.int32)
    if 0 in need:
        captured[0] = x.copy()
    refl = np.zeros(count, dtype=np.int64)
    xm = None
    if need_matrix:
        xm = np.empty((count, plan.n + 1), dtype=np.int32)
        xm[:, 0] = x
    for k in range(1, plan.n + 1):
        pre = x + steps[:, k - 1]
        refl += pre < 0
        x = np.abs(pre)
        if xm is not None:
            xm[:, k] = x
        if k in need:
            captured[k] = x.copy()
    return captured, refl, xm


def grid_modulus(paths: np.ndarray, window_steps: int) -> np.ndarray:
    """Exact modulus of continuity over windows of ``window_steps`` steps.

    ``paths`` is (n_paths, n+1) integer positions; the result is the max over
    all index pairs |i - j| <= window_steps of |f_i - f_j| per path, which for
    whole-step windows equals the modulus of the interpolated path.
    """
    if window_steps < 1:
        raise ValueError("window must cover at least one step")
    size = window_steps + 1
    hi = maximum_filter1d(paths, size=size, axis=1, mode="nearest")
    lo = minimum_filter1d(paths, size=size, axis=1, mode="nearest")
    return (hi - lo).max(axis=1)


def _apply(phi, arr: np.ndarray) -> np.ndarray:
    """Apply a scalar test function, vectorized when it supports arrays."""
    try:
        out = np.asarray(phi(arr), dtype=float)
        if out.shape == arr.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(phi(v)) for v in arr])


def _block_stats(plan: SimPlan, block_index: int, need_matrix: bool) -> BlockStats:
    need_matrix = need_matrix or bool(plan.modulus_deltas)
    support, cdf = _sampling_table(plan.dist)
    first = block_index * BLOCK
    count = min(BLOCK, plan.paths - first)
    steps = _path_steps(plan, support, cdf, first, count)
    captured, refl, xm = _walk_block(plan, steps, need_matrix)
    grid = _time_grid(plan)
    vals = np.empty((count, len(grid)))
    for j, (i0, frac) in enumerate(grid):
        v = captured[i0].astype(float)
        if frac:
            v = (1.0 - frac) * v + frac * captured[i0 + 1].astype(float)
        vals[:, j] = v / plan.scale
    stats = BlockStats(count=count, values=vals, reflections=refl,
                       max_steps=np.abs(steps).max(axis=1).astype(np.int64))
    if plan.modulus_deltas:
        sm = np.empty((count, plan.n + 1), dtype=np.int32)
        sm[:, 0] = 0
        np.cumsum(steps, axis=1, dtype=np.int32, out=sm[:, 1:])
        for delta in plan.modulus_deltas:
            m = int(round(delta * plan.n))
            if m < 1:
                raise ValueError(f"delta {delta} spans less than one step at n={plan.n}")
            stats.moduli[delta] = (grid_modulus(xm, m), grid_modulus(sm, m))
    return stats


def _iter_blocks(plan: SimPlan, need_matrix: bool) -> Iterator[BlockStats]:
    """Blocks in index order; computed concurrently when plan.workers > 1."""
    n_blocks = (plan.paths + BLOCK - 1) // BLOCK
    if plan.workers == 1:
        for b in range(n_blocks):
            yield _block_stats(plan, b, need_matrix)
        return
    with ThreadPoolExecutor(max_workers=plan.workers) as pool:
        futures = [pool.submit(_block_stats, plan, b, need_matrix)
                   for b in range(n_blocks)]
        for fut in futures:  # submission order == block order
            yield fut.result()


def simulate(plan: SimPlan) -> Iterator[PathFunctionalSample]:
    """Stream one PathFunctionalSample per path, in path-index order."""
    need_matrix = bool(plan.modulus_deltas)
    for stats in _iter_blocks(plan, need_matrix):
        for i in range(stats.count):
            pairs = None
            if stats.moduli:
                pairs = {d: (float(wx[i]) / plan.scale, float(ws[i]) / plan.scale)
                         for d, (wx, ws) in stats.moduli.items()}
            yield PathFunctionalSample(values=stats.values[i],
                                       reflections=int(stats.reflections[i]),
                                       max_step=int(stats.max_steps[i]),
                                       modulus_pairs=pairs)


def estimate_fdd(plan: SimPlan, phi_list, times: tuple[float, ...] | None = None
                 ) -> tuple[float, float]:
    """Monte Carlo mean and plug-in standard error of prod_i phi_i(X_n(t_i)).

    ``times`` defaults to the plan's times and must be a subset of them.
    """
    if times is None:
        cols = list(range(len(plan.times)))
    else:
        cols = [plan.times.index(t) for t in times]
    if len(phi_list) != len(cols):
        raise ValueError("one test function per time point required")
    total = []
    total_sq = []
    m = plan.paths
    for stats in _iter_blocks(plan, need_matrix=False):
        prod = np.ones(stats.count)
        for phi, j in zip(phi_list, cols):
            prod *= _apply(phi, stats.values[:, j])
        total.append(float(np.sum(prod)))
        total_sq.append(float(np.sum(prod * prod)))
    mean = math.fsum(total) / m
    if m == 1:
        return mean, 0.0
    var = max(0.0, (math.fsum(total_sq) - m * mean * mean) / (m - 1))
    return mean, math.sqrt(var / m)


def collect_values(plan: SimPlan) -> np.ndarray:
    """All rescaled path values, shape (paths, len(times)), in path order."""
    return np.vstack([stats.values for stats in _iter_blocks(plan, False)])


def half_normal_ks(sample: np.ndarray) -> float:
    """KS sup-distance of an empirical sample against the |N(0,1)| law."""
    sample = np.sort(np.asarray(sample, dtype=float))
    m = sample.size
    cdf = erf(sample / math.sqrt(2.0))
    upper = np.max(np.arange(1, m + 1) / m - cdf)
    lower = np.max(cdf - np.arange(0, m) / m)
    return float(max(upper, lower))


def ks_against_half_normal(plan: SimPlan, t: float) -> float:
    """KS sup-distance of the empirical law of X_n(t)/sqrt(t) vs |N(0,1)|."""
    j = plan.times.index(t)
    return half_normal_ks(collect_values(plan)[:, j] / math.sqrt(t))


@dataclass
class SllnTrace:
    """Dyadic-window maxima of X(m)/m: evidence that X(n)/n -> 0."""

    checkpoints: np.ndarray          # window right edges n_k
    window_max: np.ndarray           # (paths, len(checkpoints))
    q95: np.ndarray

    def quantile(self, q: float) -> np.ndarray:
        return np.quantile(self.window_max, q, axis=0)


def slln_trace(plan: SimPlan) -> SllnTrace:
    """Per-path max of X(m)/m over dyadic windows (n_{k-1}, n_k].

    The aggregate 0.95-quantile decreases along the grid like 1/sqrt(n_k).
    """
    ks = [2**j for j in range(3, plan.n.bit_length()) if 2**j <= plan.n]
    if not ks or ks[-1] != plan.n:
        ks.append(plan.n)
    checkpoints = np.array(ks)
    support, cdf = _sampling_table(plan.dist)
    rows = []
    n_blocks = (plan.paths + BLOCK - 1) // BLOCK
    for b in range(n_blocks):
        first = b * BLOCK
        count = min(BLOCK, plan.paths - first)
        steps = _path_steps(plan, support, cdf, first, count)
        x = np.full(count, plan.x0, dtype=np.int64)
        wmax = np.zeros(count)
        out = np.empty((count, len(ks)))
        nxt = 0
        for m in range(1, plan.n + 1):
            x = np.abs(x + steps[:, m - 1])
            np.maximum(wmax, x / m, out=wmax)
            if m == ks[nxt]:
                out[:, nxt] = wmax
                wmax[:] = 0.0
                nxt += 1
        rows.append(out)
    window_max = np.vstack(rows)
    return SllnTrace(checkpoints=checkpoints, window_max=window_max,
                     q95=np.quantile(window_max, 0.95, axis=0))


@dataclass
class ModulusDeltaStat:
    delta: float
    window_steps: int
    max_excess: float        # max of w_X - w_S in lattice units (can be positive)
    equal_fraction: float
    literal_violations: int  # paths with w_X > w_S
    bound_violations: int    # paths with w_X > w_S + C (provably impossible)


@dataclass
class ModulusReport:
    """Exact pathwise comparison of the reflected and free moduli."""

    paths: int
    overshoot_bound: int     # C, the largest down-jump
    entries: list[ModulusDeltaStat]

    @property
    def literal_violations(self) -> int:
        return sum(e.literal_violations for e in self.entries)

    @property
    def bound_violations(self) -> int:
        return sum(e.bound_violations for e in self.entries)


def modulus_check(plan: SimPlan, deltas, *, strict: bool = True) -> ModulusReport:
    """Pathwise comparison of w_X(delta) against w_S(delta), exactly.

    Two inequalities are tracked per path.  The provable one,
    w_X <= w_S + C with C the largest down-jump (each reflection lifts the
    reflected path by at most its overshoot), must never fail; a failure
    raises InvariantViolation because it can only come from a bug.  The
    sharper comparison w_X <= w_S fails with small probability (a reflection
    at the foot of the steepest climb beats the free range by up to C
    lattice units, an event of probability O(1/sqrt(n))); with ``strict``
    those literal violations also raise, otherwise they are only counted.
    """
    deltas = tuple(float(d) for d in deltas)
    if any(not (0.0 < d < 1.0) for d in deltas):
        raise ValueError("deltas must lie in (0, 1)")
    run = SimPlan(dist=plan.dist, x0=plan.x0, n=plan.n, times=plan.times,
                  paths=plan.paths, seed=plan.seed, workers=plan.workers,
                  modulus_deltas=deltas)
    c = plan.dist.max_down_jump
    agg = {d: [0, 0, -math.inf, 0] for d in deltas}  # literal, bound, excess, equal
    total = 0
    for stats in _iter_blocks(run, need_matrix=True):
        total += stats.count
        for d, (wx, ws) in stats.moduli.items():
            excess = wx.astype(np.int64) - ws.astype(np.int64)
            agg[d][0] += int((excess > 0).sum())
            agg[d][1] += int((excess > c).sum())
            agg[d][2] = max(agg[d][2], float(excess.max()))
            agg[d][3] += int((excess == 0).sum())
    entries = []
    for d in deltas:
        m = int(round(d * plan.n))
        entries.append(ModulusDeltaStat(
            delta=d, window_steps=m, max_excess=agg[d][2],
            equal_fraction=agg[d][3] / total,
            literal_violations=agg[d][0], bound_violations=agg[d][1]))
    report = ModulusReport(paths=total, overshoot_bound=c, entries=entries)
    if report.bound_violations:
        raise InvariantViolation(
            f"w_X > w_S + {c} on {report.bound_violations} path/delta pairs; "
            "the overshoot bound is a theorem, so this is an implementation bug")
    if strict and report.literal_violations:
        raise InvariantViolation(
            f"w_X > w_S on {report.literal_violations} of {total} sampled paths "
            f"(max excess {max(e.max_excess for e in entries):g} <= C={c}); "
            "rerun with strict=False to obtain the counts as a report")
    return report
