"""The sub-process of reflections: kernel, stationary measure, renewal operators.

The reflected walk X(n+1) = |X(n) + xi_{n+1}| visits a distinguished
sub-sequence of *reflection times* r_k (the instants the unreflected
increment would dip below zero).  The embedded chain X(r_k) has transition
kernel

    K(x, y) = sum_{w=0}^{x} U*(-w) mu*(w - x - y)   for y >= 1,   K(x, 0) = 0,

built from the ladder-height law mu* and its potential U*.  For a walk whose
largest down-jump is C, the reflected positions live in S_r = {1, ..., C},
so kernels and operator products are exact on that window; rows for other
starting points are carried alongside but are never re-entered by products.

The one-reflection operators R_n(x, y) = P_x[r_1 = n, X(n) = y] form a
renewal sequence whose sums T_n = sum_j R_j T_{n-j} (T_0 = I) have entries
Sigma_n(x, y) = sum_k P_x[r_k = n, X(n) = y].  The module also evaluates the
window statistics

    sighat_n(x, t, s)  = n   * sum_l P_x[r_l = [ns], r_{l+1} > [nt]]
    sigtil_n(x, t, s)  = n^2 * sum_l P_x[r_l = [ns], r_{l+1} = [nt]]

whose limits 1/(pi sqrt(s(t-s))) and 1/(2 pi sqrt(s (t-s)^3)) are the
bridge between the renewal structure and the reflected-Brownian-motion
finite-dimensional distributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (HorizonTooLarge, NoConvergence, TruncationTooSevere,
                     WindowMismatch)
from .lattice_dp import FluctuationTables, LatticePmf, confined_step, delta_pmf, floor_index
from .report import ConvergenceReport
from .step_dist import StepDistribution

DEFAULT_WORK_BUDGET = 5e9  # rough flop guard for long kernel recursions


@dataclass(frozen=True)
class TruncatedKernel:
    """Dense slice of a non-negative kernel on {0..x_max} x {0..y_max}.

    ``row_deficit[x]`` is the mass escaping past y_max in row x; for the
    reflection kernel with y_max >= C every deficit is at rounding level.
    ``sr`` is the (inclusive) recurrent column band {1..C}.
    """

    entries: np.ndarray
    row_deficit: np.ndarray
    sr: tuple[int, int]

    def __post_init__(self):
        self.entries.setflags(write=False)
        self.row_deficit.setflags(write=False)

    @property
    def x_max(self) -> int:
        return self.entries.shape[0] - 1

    @property
    def y_max(self) -> int:
        return self.entries.shape[1] - 1

    def sr_block(self) -> np.ndarray:
        lo, hi = self.sr
        return self.entries[lo:hi + 1, lo:hi + 1]


@dataclass(frozen=True)
class StationaryMeasure:
    """Probability vector nu on {0..y_max} with nu K = nu up to ``residual``."""

    weights: np.ndarray
    residual: float

    def __post_init__(self):
        self.weights.setflags(write=False)

    def of_function(self, values: np.ndarray) -> float:
        """nu(f) = sum_y nu(y) f(y) for f given on 0..y_max (or longer)."""
        v = np.asarray(values, dtype=float)
        if v.size < self.weights.size:
            raise ValueError("function values cover fewer sites than nu")
        return float(np.dot(self.weights, v[: self.weights.size]))


def build_R(tables: FluctuationTables, x_max: int, y_max: int,
            *, deficit_tol: float = 1e-6) -> TruncatedKernel:
    """Reflection kernel K(x, y) from the ladder tables.

    Column 0 is identically zero.  Raises TruncationTooSevere when a row
    deficit exceeds ``deficit_tol`` (raise y_max; y_max >= C makes it exact).
    """
    mu = tables.mu_star
    c = -mu.offset
    if tables.u_star.size <= x_max:
        raise WindowMismatch(f"U* table covers w <= {tables.u_star.size - 1} < x_max={x_max}")
    atom = np.zeros(c + 1)  # atom[v] = mu*(-v)
    for pos, w in zip(mu.positions(), mu.weights):
        atom[-pos] = w
    u = tables.u_star
    entries = np.zeros((x_max + 1, y_max + 1))
    for x in range(x_max + 1):
        for y in range(1, y_max + 1):
            # sum over w in [0, x] with 1 <= x + y - w <= C
            w_lo = max(0, x + y - c)
            w_hi = min(x, x + y - 1)
            if w_lo > w_hi:
                continue
            v = x + y - np.arange(w_lo, w_hi + 1)  # ladder drops, descending
            entries[x, y] = float(np.dot(u[w_lo:w_hi + 1], atom[v]))
    deficit = 1.0 - entries.sum(axis=1) - mu.deficit
    if np.max(deficit) > deficit_tol:
        raise TruncationTooSevere(
            f"row deficit {np.max(deficit):.3e} > {deficit_tol:g}; raise y_max "
            f"(y_max >= {c} is exact for this walk)")
    return TruncatedKernel(entries, deficit, (1, c))


def stationary_nu_eig(kernel: TruncatedKernel, *, tol: float = 1e-13,
                      max_iter: int = 100_000) -> StationaryMeasure:
    """Dominant left eigenvector by power iteration, restricted to S_r.

    Returns a probability measure supported on S_r (zero elsewhere) with
    stationarity residual ||nu K - nu||_1 at or below the requested level.
    """
    lo, hi = kernel.sr
    if kernel.x_max < hi:
        raise WindowMismatch(f"kernel rows stop at {kernel.x_max} < C={hi}")
    if float(np.max(kernel.row_deficit[lo:hi + 1])) > 1e-8:
        raise TruncationTooSevere("recurrent-band rows are not stochastic enough "
                                  "for a 1e-10 stationarity residual")
    p = kernel.entries[lo:hi + 1, lo:hi + 1]
    nu = np.full(hi - lo + 1, 1.0 / (hi - lo + 1))
    for _ in range(max_iter):
        nxt = nu @ p
        nxt /= nxt.sum()
        if float(np.abs(nxt - nu).sum()) <= tol:
            nu = nxt
            break
        nu = nxt
    else:
        raise NoConvergence(f"power iteration did not reach {tol:g} in {max_iter} steps "
                            "(near-degenerate spectral gap?)")
    full = np.zeros(kernel.y_max + 1)
    full[lo:hi + 1] = nu
    image = full[lo:hi + 1] @ kernel.entries[lo:hi + 1, :]
    residual = float(np.abs(image - full).sum())
    return StationaryMeasure(full, residual)


@dataclass(frozen=True)
class NuFormulaResult:
    """Literal closed-form stationary candidate plus comparison diagnostics."""

    raw: np.ndarray           # un-normalized formula values on 0..x_max
    normalized: np.ndarray
    mass_at_zero: float       # spurious weight the literal reading puts at 0
    sr_l1_discrepancy: float | None  # vs eigenvector after restricting to S_r
    full_l1_discrepancy: float | None


def stationary_nu_formula(mu_star: LatticePmf, x_max: int,
                          eig: StationaryMeasure | None = None) -> NuFormulaResult:
    """Evaluate the closed-form stationary candidate literally.

    The half-weight endpoint convention is applied exactly as written, with
    the strict open interval (-x-y, -x); degenerate walks expose an endpoint
    disagreement with the eigenvector route (mass at 0), which is reported
    rather than patched.
    """
    c = -mu_star.offset
    atom = np.zeros(2 * c + x_max + 3)  # atom[v] = mu*(-v), generous padding
    for pos, w in zip(mu_star.positions(), mu_star.weights):
        atom[-pos] = w
    raw = np.zeros(x_max + 1)
    for x in range(x_max + 1):
        total = 0.0
        for y in range(1, c + 1):
            wy = atom[y]
            if wy == 0.0:
                continue
            inner = 0.5 * atom[x] + 0.5 * atom[x + y]
            if y >= 2:
                inner += float(atom[x + 1: x + y].sum())  # strictly between
            total += inner * wy
        raw[x] = total
    norm = raw / raw.sum() if raw.sum() > 0 else raw.copy()
    sr_gap = full_gap = None
    if eig is not None:
        lo, hi = 1, c
        restricted = raw[lo:hi + 1]
        if restricted.sum() > 0:
            restricted = restricted / restricted.sum()
        ref = eig.weights[lo:hi + 1]
        sr_gap = float(np.abs(restricted - ref).sum())
        m = min(norm.size, eig.weights.size)
        full_gap = float(np.abs(norm[:m] - eig.weights[:m]).sum())
    return NuFormulaResult(raw=raw, normalized=norm, mass_at_zero=float(norm[0]),
                           sr_l1_discrepancy=sr_gap, full_l1_discrepancy=full_gap)


@dataclass(frozen=True)
class SpectralReport:
    lambda1: float
    lambda2_modulus: float
    simple: bool


def spectral_report(kernel: TruncatedKernel, nu: StationaryMeasure | None = None,
                    *, iters: int = 512) -> SpectralReport:
    """Dominant eigenvalue and deflated spectral radius of the S_r block.

    lambda2 is estimated by power iteration on Q = K - 1 (x) nu (the kernel
    with its rank-one eigenprojection removed), using the geometric mean of
    late growth factors so complex pairs do not spoil the estimate.
    """
    if nu is None:
        nu = stationary_nu_eig(kernel)
    lo, hi = kernel.sr
    p = kernel.entries[lo:hi + 1, lo:hi + 1]
    m = p.shape[0]
    nu_sr = nu.weights[lo:hi + 1]
    # lambda1 from the stationary direction itself
    image = nu_sr @ p
    lambda1 = float(image.sum() / nu_sr.sum())
    q = p - np.outer(np.ones(m), nu_sr)
    v = np.array([1.0 if i % 2 == 0 else -1.0 for i in range(m)])
    v -= nu_sr * v.sum()  # start outside the deflated direction
    norm = float(np.abs(v).sum())
    if norm == 0.0:
        v = np.ones(m)
        norm = float(m)
    v /= norm
    growth = []
    for _ in range(iters):
        v = q @ v
        g = float(np.abs(v).sum())
        if g < 1e-280:
            return SpectralReport(lambda1, 0.0, True)
        growth.append(g)
        v /= g
    tail = growth[iters // 2:]
    lam2 = float(math.exp(sum(math.log(g) for g in tail) / len(tail)))
    if lam2 > 1.0 + 1e-6:
        raise NoConvergence(f"deflated radius estimate {lam2:.6f} exceeds 1")
    return SpectralReport(lambda1, lam2, lam2 < 1.0 - 1e-6)


# ---------------------------------------------------------------------------
# renewal operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OperatorSequence:
    """R_n (and optionally T_n) slices on rows x in ``rows``, columns 0..C.

    ``r[n, i, y]`` = P_{rows[i]}[r_1 = n, X(n) = y].  Operator products only
    ever consume the rows sitting in S_r = {1..C}, which ``rows`` always
    contains, so the sequence is closed under the renewal recursion.
    ``t[0]`` is the identity restricted to the column window.
    """

    rows: tuple[int, ...]
    c: int
    r: np.ndarray
    t: np.ndarray | None = None

    def __post_init__(self):
        self.r.setflags(write=False)
        if self.t is not None:
            self.t.setflags(write=False)

    @property
    def n_max(self) -> int:
        return self.r.shape[0] - 1

    def row_index(self, x: int) -> int:
        try:
            return self.rows.index(x)
        except ValueError:
            raise WindowMismatch(f"start {x} not among computed rows {self.rows}") from None

    def r1_law(self, x: int) -> np.ndarray:
        """P_x[r_1 = n] for n = 0..n_max."""
        return self.r[:, self.row_index(x), :].sum(axis=1)

    def r1_tail(self, x: int) -> np.ndarray:
        """P_x[r_1 > n] for n = 0..n_max."""
        return 1.0 - np.cumsum(self.r1_law(x))


def reflection_time_kernels(d: StepDistribution, tables: FluctuationTables,
                            x_range, n_max: int, *,
                            work_budget: float = DEFAULT_WORK_BUDGET) -> OperatorSequence:
    """First-reflection operators R_n(x, y) for n = 1..n_max.

    R_n(x, y) = sum_z P[tau(x) >= n-1, x + S(n-1) = z] P[xi = -y - z]: the
    killed-by-site mass of the confined recursion, read off step by step.
    Rows cover ``x_range`` plus all of S_r (needed by operator products).
    """
    c = d.max_down_jump
    rows = tuple(sorted(set(int(x) for x in x_range) | set(range(1, c + 1))))
    if any(x < 0 for x in rows):
        raise ValueError("starting points must be non-negative")
    width = max(rows) + max(1, d.support_max) * n_max
    if n_max * width * len(rows) > work_budget:
        raise HorizonTooLarge(f"~{n_max * width * len(rows):.2e} lattice ops exceed "
                              f"budget {work_budget:.2e}")
    r = np.zeros((n_max + 1, len(rows), c + 1))
    for i, x in enumerate(rows):
        front = delta_pmf(x)
        for n in range(1, n_max + 1):
            front, killed = confined_step(front, d)
            for pos, w in zip(range(killed.offset, killed.offset + killed.weights.size),
                              killed.weights):
                r[n, i, -pos] = w
    return OperatorSequence(rows=rows, c=c, r=r)


def renewal_operators_T(seq: OperatorSequence, n_max: int | None = None) -> OperatorSequence:
    """Renewal sums T_0 = I, T_n = sum_{j=1}^{n} R_j T_{n-j}.

    Entries of T_n for n >= 1 are Sigma_n(x, y), the chance that *some*
    reflection happens exactly at time n with landing site y.
    """
    if n_max is None:
        n_max = seq.n_max
    if n_max > seq.n_max:
        raise WindowMismatch(f"T horizon {n_max} exceeds R horizon {seq.n_max}")
    c = seq.c
    sr_idx = np.array([seq.rows.index(y) for y in range(1, c + 1)])
    rc = seq.r[:, sr_idx, 1:]  # (n, C, C) core slices
    tc = np.zeros((n_max + 1, c, c))
    tc[0] = np.eye(c)
    for n in range(1, n_max + 1):
        tc[n] = np.einsum("jab,jbc->ac", rc[1:n + 1], tc[n - 1::-1])
    t = np.zeros((n_max + 1, len(seq.rows), c + 1))
    for i, x in enumerate(seq.rows):
        if x <= c:
            t[0, i, x] = 1.0  # identity restricted to the column window
    for n in range(1, n_max + 1):
        t[n, :, 1:] = np.einsum("jay,jyz->az", seq.r[1:n + 1, :, 1:], tc[n - 1::-1])
    return OperatorSequence(rows=seq.rows, c=c, r=seq.r, t=t)


def sigma_limit_check(seq: OperatorSequence, nu: StationaryMeasure, h: np.ndarray,
                      c1: float, x_list, n_list, *, tol: float = 0.05,
                      noise_factor: float = 1.5) -> ConvergenceReport:
    """sqrt(n) Sigma_n(x, y) against nu(y) / (pi c1 nu(h)) over scales.

    Verdict: at the largest scale every (x, y) gap is within ``tol`` and no
    gap grows by more than ``noise_factor`` between consecutive scales.
    """
    if seq.t is None:
        raise WindowMismatch("run renewal_operators_T first")
    n_list = sorted(int(n) for n in n_list)
    if n_list[-1] > seq.t.shape[0] - 1:
        raise WindowMismatch(f"scale {n_list[-1]} beyond computed T horizon")
    nu_h = nu.of_function(h)
    rep = ConvergenceReport(
        name="sigma_limit",
        columns=("x", "y", "n", "sqrt_n_sigma", "reference", "abs_gap", "rel_gap"),
    )
    passed = True
    for x in x_list:
        i = seq.row_index(x)
        for y in range(1, seq.c + 1):
            ref = nu.weights[y] / (math.pi * c1 * nu_h)
            gaps = []
            for n in n_list:
                val = math.sqrt(n) * float(seq.t[n, i, y])
                gap = abs(val - ref)
                rel = gap / ref if ref else math.inf
                rep.add_row(x, y, n, val, ref, gap, rel)
                gaps.append(rel)
            if gaps[-1] > tol:
                passed = False
            for a, b in zip(gaps, gaps[1:]):
                if b > noise_factor * a:
                    passed = False
    rep.passed = passed
    rep.note = f"tol={tol}, scales={n_list}"
    return rep


def _window_indices(n: int, s: float, t: float) -> tuple[int, int]:
    if not (0.0 < s < t < 1.0):
        raise ValueError("need 0 < s < t < 1")
    m1 = floor_index(n, s)
    m2 = floor_index(n, t)
    if m1 < 1:
        raise ValueError(f"[n s] = {m1} must be >= 1")
    return m1, m2


def sigma_hat(d: StepDistribution, tables: FluctuationTables, seq: OperatorSequence,
              x: int, s: float, t: float, n: int) -> float:
    """n * P_x[some reflection at [ns], next one after [nt]].

    Converges to 1/(pi sqrt(s (t-s))).
    """
    m1, m2 = _window_indices(n, s, t)
    if seq.t is None or m1 > seq.t.shape[0] - 1 or m2 - m1 > seq.n_max:
        raise WindowMismatch("operator horizons too short for requested (s, t, n)")
    i = seq.row_index(x)
    total = 0.0
    for y in range(1, seq.c + 1):
        tail = float(seq.r1_tail(y)[m2 - m1])
        total += float(seq.t[m1, i, y]) * tail
    return n * total


def sigma_tilde(d: StepDistribution, tables: FluctuationTables, seq: OperatorSequence,
                x: int, s: float, t: float, n: int) -> float:
    """n^2 * P_x[some reflection at [ns], next one exactly at [nt]].

    Converges to 1/(2 pi sqrt(s (t-s)^3)).
    """
    m1, m2 = _window_indices(n, s, t)
    if seq.t is None or m1 > seq.t.shape[0] - 1 or m2 - m1 > seq.n_max:
        raise WindowMismatch("operator horizons too short for requested (s, t, n)")
    i = seq.row_index(x)
    total = 0.0
    for y in range(1, seq.c + 1):
        point = float(seq.r1_law(y)[m2 - m1])
        total += float(seq.t[m1, i, y]) * point
    return float(n) ** 2 * total
