"""Exact lattice dynamic programming for random-walk fluctuation theory.

Everything here is exact arithmetic on sub-probability vectors: the law of
the walk killed below zero, first-passage (tau) distributions, strictly
descending ladder heights and their potential/renewal functions, the
ladder-epoch renewal sequence, and conditioned (meander / bridge)
expectations.  Conventions:

* S(n) is the unreflected walk started at 0; tau(x) is the first n >= 1
  with x + S(n) < 0.  "Confined" means every intermediate position stayed
  >= 0, so the killed mass at step n is exactly P[tau(x) = n].
* The ladder height law mu* lives on the negative integers; for a walk with
  largest down-jump C its support is contained in {-C, ..., -1}.  Its
  potential U*(-w) = sum of n-fold convolutions, and the renewal function
  h(x) = sum_{w<=x} U*(-w) with h(0) = 1.
* Sub-probability vectors carry an explicit ``deficit`` (mass already
  killed) instead of being renormalized: the deficits are the tau laws.

The ladder height law is computed exactly by Wiener-Hopf factorization of
the step polynomial: w^C (1 - E[w^xi]) has, for a centered strongly
aperiodic law, a double root at w = 1 and exactly C-1 further roots inside
the open unit disk; the monic polynomial built from the inside roots and a
single root at 1 is w^C - sum_y mu*(-y) w^{C-y}.  Plain truncation of the
first-descent sum converges only like 1/sqrt(horizon) and is kept as an
opt-in cross-check (``method="dp"``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import HorizonTooLarge, ImpossibleBridge, NoConvergence, SlowConvergence
from .step_dist import StepDistribution, mirrored, moments

DEFAULT_BUDGET_FLOATS = 1.6e8  # ~1.3 GB of float64, guard for stored-slice ops
DEFAULT_DP_HORIZON = 50_000    # cap for the truncation route of the ladder law


@dataclass(frozen=True)
class LatticePmf:
    """Non-negative vector on a contiguous integer range, with mass deficit.

    ``weights[i]`` is the mass at position ``offset + i``.  For vectors that
    track a (sub-)probability law, ``mass() + deficit == 1`` up to rounding.
    """

    offset: int
    weights: np.ndarray
    deficit: float = 0.0

    def __post_init__(self):
        self.weights.setflags(write=False)

    def mass(self) -> float:
        return float(self.weights.sum())

    def atom(self, position: int) -> float:
        i = position - self.offset
        if i < 0 or i >= self.weights.size:
            return 0.0
        return float(self.weights[i])

    def positions(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.weights.size)

    def as_dict(self) -> dict[int, float]:
        return {int(p): float(w) for p, w in zip(self.positions(), self.weights) if w != 0.0}


def delta_pmf(position: int) -> LatticePmf:
    return LatticePmf(position, np.array([1.0]))


def _kernel(d: StepDistribution) -> np.ndarray:
    return np.asarray(d.probs, dtype=float)


def confined_step(front: LatticePmf, d: StepDistribution) -> tuple[LatticePmf, LatticePmf]:
    """One step of the walk killed below zero.

    Returns (surviving front on z >= 0, killed mass by landing site z < 0).
    Mass is conserved: incoming = surviving + killed exactly up to rounding.
    """
    if front.offset < 0:
        raise ValueError("confined front must live on the non-negative integers")
    full = np.convolve(front.weights, _kernel(d))
    lo = front.offset + d.support_min  # position of full[0]
    n_neg = max(0, -lo)
    killed_w = full[:n_neg]
    killed_mass = float(killed_w.sum())
    surv = full[n_neg:]
    next_front = LatticePmf(max(0, lo), surv, front.deficit + killed_mass)
    killed = LatticePmf(lo if n_neg else -1, killed_w, 1.0 - killed_mass)
    return next_front, killed


def _check_budget(d: StepDistribution, x: int, n: int, budget: float, stored: bool):
    width = x + max(1, d.support_max) * n + 1
    est = width * (n + 1) / 2 if stored else width
    if est > budget:
        raise HorizonTooLarge(
            f"horizon {n} from x={x} needs ~{est:.2e} stored floats (budget {budget:.2e})")


def survival_law(d: StepDistribution, x: int, n: int, *,
                 budget: float = DEFAULT_BUDGET_FLOATS) -> list[LatticePmf]:
    """All confined slices p_k(x, .) for k = 0..n.

    Entry k has mass P[tau(x) > k]; entry 0 is the point mass at x.  Raises
    HorizonTooLarge when storing every slice would exceed the float budget
    (use ``tau_law`` for long horizons -- it streams).
    """
    if x < 0 or n < 1:
        raise ValueError("need x >= 0 and n >= 1")
    _check_budget(d, x, n, budget, stored=True)
    slices = [delta_pmf(x)]
    for _ in range(n):
        nxt, _ = confined_step(slices[-1], d)
        slices.append(nxt)
    return slices


def tau_law(d: StepDistribution, x: int, n_max: int, *,
            budget: float = DEFAULT_BUDGET_FLOATS) -> np.ndarray:
    """First-passage law P[tau(x) = n], n = 1..n_max (index 0 unused).

    Streams the confined recursion, keeping only the current front.
    """
    if x < 0 or n_max < 1:
        raise ValueError("need x >= 0 and n_max >= 1")
    _check_budget(d, x, n_max, budget, stored=False)
    front = delta_pmf(x)
    out = np.zeros(n_max + 1)
    for n in range(1, n_max + 1):
        front, killed = confined_step(front, d)
        out[n] = killed.mass()
    return out


def _confined_front(d: StepDistribution, x: int, n: int) -> LatticePmf:
    front = delta_pmf(x)
    for _ in range(n):
        front, _ = confined_step(front, d)
    return front


# ---------------------------------------------------------------------------
# ladder heights
# ---------------------------------------------------------------------------

def _divide_out_root_one(desc: np.ndarray, tol: float = 1e-7) -> np.ndarray:
    """Synthetic division of a polynomial (descending coeffs) by (w - 1)."""
    out = np.empty(desc.size - 1)
    acc = 0.0
    for i in range(desc.size - 1):
        acc = desc[i] + acc
        out[i] = acc
    rem = desc[-1] + acc
    if abs(rem) > tol:
        raise ValueError(f"polynomial has no root at 1 (remainder {rem:.3e}); "
                         "is the step law centered and normalized?")
    return out


def _ladder_exact(d: StepDistribution) -> LatticePmf:
    c = d.max_down_jump
    if c == 0:
        raise ValueError("step law has no negative atom; the walk never descends")
    m = moments(d)
    if abs(m.mean) > 1e-9:
        raise ValueError(f"ladder factorization needs a centered law (mean={m.mean:.3e})")
    b = d.support_max
    # descending coefficients of w^C (1 - E[w^xi]), degree C + b
    coef = np.zeros(c + b + 1)
    coef[b] = 1.0  # w^C term (descending index: degree (C+b) - k)
    for k, p in d.atoms():
        coef[b - k] -= p
    quo = _divide_out_root_one(coef)          # mass sums to 1
    quo = _divide_out_root_one(quo)           # mean is 0: double root at w=1
    inside = np.empty(0, dtype=complex)
    if quo.size > 1:
        roots = np.roots(quo)
        order = np.argsort(np.abs(roots))
        roots = roots[order]
        inside = roots[: c - 1]
        if inside.size and np.abs(inside[-1]) > 1.0 - 1e-8:
            raise NoConvergence(
                "unit-circle root cluster: cannot separate the descending factor "
                "(law may be periodic or barely centered)")
        if roots.size > c - 1 and np.abs(roots[c - 1]) < 1.0 + 1e-8:
            raise NoConvergence("ambiguous root separation at the unit circle")
    monic = np.poly(np.concatenate((inside, [1.0 + 0.0j])))
    if np.abs(monic.imag).max() > 1e-10:
        raise NoConvergence("descending factor came out non-real")
    monic = monic.real
    # monic[y] is the coefficient of w^{C-y}; atom at -y is its negation
    atoms = -monic[1:]
    atoms[np.abs(atoms) < 1e-14] = 0.0
    if atoms.min() < -1e-10:
        raise NoConvergence(f"negative ladder atom {atoms.min():.3e} from factorization")
    atoms = np.maximum(atoms, 0.0)
    weights = atoms[::-1].copy()  # index i <-> position -C + i
    return LatticePmf(-c, weights, 1.0 - float(weights.sum()))


def _ladder_dp(d: StepDistribution, mass_tol: float, max_horizon: int) -> LatticePmf:
    c = d.max_down_jump
    if c == 0:
        raise ValueError("step law has no negative atom; the walk never descends")
    acc = np.zeros(c)  # acc[i] <-> position -C + i
    front = delta_pmf(0)
    for _ in range(max_horizon):
        front, killed = confined_step(front, d)
        if killed.weights.size:
            i0 = killed.offset - (-c)
            acc[i0:i0 + killed.weights.size] += killed.weights
        deficit = 1.0 - acc.sum()
        if deficit <= mass_tol:
            return LatticePmf(-c, acc, deficit)
    raise SlowConvergence(
        f"ladder-height deficit {1.0 - acc.sum():.3e} > {mass_tol:g} after "
        f"{max_horizon} steps; the tail decays like 1/sqrt(horizon), so the "
        f"horizon must scale like mass_tol**-2")


def ladder_height_law(d: StepDistribution, mass_tol: float = 1e-8, *,
                      method: str = "exact",
                      max_horizon: int = DEFAULT_DP_HORIZON) -> LatticePmf:
    """Law mu* of the first strictly descending ladder height S(l_1).

    ``method="exact"`` (default) uses the Wiener-Hopf root factorization and
    returns a law with deficit at rounding level regardless of ``mass_tol``.
    ``method="dp"`` accumulates first-descent mass from the confined
    recursion until the deficit drops below ``mass_tol`` and raises
    SlowConvergence at the horizon cap; useful as an independent cross-check.
    """
    if mass_tol <= 0:
        raise ValueError("mass_tol must be positive")
    if method == "exact":
        return _ladder_exact(d)
    if method == "dp":
        return _ladder_dp(d, mass_tol, max_horizon)
    raise ValueError(f"unknown method {method!r}")


def _potential(mu_star: LatticePmf, w_max: int) -> np.ndarray:
    """U*(-w) for w = 0..w_max via the renewal recursion U = delta_0 + mu* * U."""
    c = -mu_star.offset
    atom = np.zeros(c + 1)  # atom[v] = mu*(-v)
    for pos, w in zip(mu_star.positions(), mu_star.weights):
        atom[-pos] = w
    u = np.zeros(w_max + 1)
    u[0] = 1.0
    for w in range(1, w_max + 1):
        v_hi = min(w, c)
        seg = u[w - v_hi:w][::-1]  # u[w-1], ..., u[w-v_hi]
        u[w] = float(np.dot(atom[1:v_hi + 1], seg))
    return u


def potential_and_renewal(d: StepDistribution, mu_star: LatticePmf,
                          x_max: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(U*, h, h~) on 0..x_max.

    h is the running sum of the descending-ladder potential, h(0) = 1.
    h~ is built the same way from the mirrored walk (-S), i.e. from the
    ascending ladder structure of the original walk.
    """
    u_star = _potential(mu_star, x_max)
    h = np.cumsum(u_star)
    mu_tilde = ladder_height_law(mirrored(d))
    h_tilde = np.cumsum(_potential(mu_tilde, x_max))
    return u_star, h, h_tilde


def c1(d: StepDistribution, mu_star: LatticePmf) -> float:
    """Tail-asymptotic scale: sqrt(n) * P[tau(x) > n] -> c1 * h(x).

    Equals sqrt(2/pi) * E[ladder height magnitude] / sigma.  (Cross-checked
    against the exact first-passage recursion and, for the +-1 walk, against
    the classical binomial identity for staying non-negative.)
    """
    mean_drop = float(np.dot(-mu_star.positions(), mu_star.weights))
    sigma = moments(d).sigma
    return math.sqrt(2.0 / math.pi) * mean_drop / sigma


def ladder_epoch_renewal(d: StepDistribution, n_max: int,
                         tau0_law: np.ndarray | None = None) -> np.ndarray:
    """Renewal sequence u_n = sum_l P[l_l = n] of the descending ladder epochs.

    u_0 = 1 and u_n = sum_k f_k u_{n-k} with f_k = P[tau(0) = k].
    sqrt(n) * u_n -> 1/(c1 * pi).
    """
    f = tau_law(d, 0, n_max) if tau0_law is None else np.asarray(tau0_law, dtype=float)
    if f.size < n_max + 1:
        raise ValueError("tau0_law shorter than requested horizon")
    u = np.zeros(n_max + 1)
    u[0] = 1.0
    for n in range(1, n_max + 1):
        u[n] = float(np.dot(f[1:n + 1], u[n - 1::-1]))
    return u


# ---------------------------------------------------------------------------
# conditioned expectations
# ---------------------------------------------------------------------------

def floor_index(n: int, frac: float) -> int:
    """[n * frac] with a guard against representation error just below ints."""
    return int(math.floor(n * frac + 1e-9))


def meander_expectation(d: StepDistribution, x: int, n: int, phi) -> float:
    """E[phi((x + S(n)) / (sigma sqrt n)) | tau(x) > n], exactly.

    Converges to the Rayleigh (Brownian-meander endpoint) expectation.
    """
    front = _confined_front(d, x, n)
    sigma = moments(d).sigma
    z = front.positions() / (sigma * math.sqrt(n))
    vals = np.array([phi(v) for v in z])
    denom = front.mass()
    return float(np.dot(front.weights, vals) / denom)


def bridge_expectation(d: StepDistribution, x: int, y: int, s: float, t: float,
                       n: int, phi) -> float:
    """E[phi((x+S([ns]))/(sigma sqrt n)) | tau(x) > [nt], x + S([nt]) = y].

    Exact: forward confined recursion to [ns], backward confined recursion
    from y over [nt]-[ns] steps with the time-reversed step law, glued by the
    Markov property.  Raises ImpossibleBridge when the conditioning event has
    probability zero.
    """
    if not (0.0 < s < t <= 1.0):
        raise ValueError("need 0 < s < t <= 1")
    if x < 0 or y < 0:
        raise ValueError("endpoints must be non-negative")
    m1 = floor_index(n, s)
    m2 = floor_index(n, t)
    fwd = _confined_front(d, x, m1)
    bwd = _confined_front(mirrored(d), y, m2 - m1)
    lo = max(fwd.offset, bwd.offset)
    hi = min(fwd.offset + fwd.weights.size, bwd.offset + bwd.weights.size)
    if hi <= lo:
        raise ImpossibleBridge(f"no lattice site is reachable both ways (x={x}, y={y})")
    fw = fwd.weights[lo - fwd.offset: hi - fwd.offset]
    bw = bwd.weights[lo - bwd.offset: hi - bwd.offset]
    joint = fw * bw
    denom = float(joint.sum())
    if denom <= 0.0:
        raise ImpossibleBridge(
            f"conditioning event tau({x}) > {m2}, endpoint {y} has zero probability")
    sigma = moments(d).sigma
    z = np.arange(lo, hi) / (sigma * math.sqrt(n))
    vals = np.array([phi(v) for v in z])
    return float(np.dot(joint, vals) / denom)


# ---------------------------------------------------------------------------
# bundled tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FluctuationTables:
    """Every fluctuation-theory quantity needed downstream, precomputed."""

    mu_star: LatticePmf      # descending ladder height law
    u_star: np.ndarray       # U*(-w), w = 0..x_max
    h: np.ndarray            # descending renewal function, 0..x_max
    h_tilde: np.ndarray      # ascending renewal function, 0..x_max
    c1: float                # tail constant: sqrt(n) P[tau(x)>n] -> c1 h(x)
    tau0_law: np.ndarray     # P[tau(0) = n], n = 0..n_max (index 0 unused)
    u: np.ndarray            # ladder-epoch renewal sequence, 0..n_max

    @property
    def x_max(self) -> int:
        return self.h.size - 1

    @property
    def n_max(self) -> int:
        return self.u.size - 1


def build_tables(d: StepDistribution, n_max: int, x_max: int) -> FluctuationTables:
    """Compute mu*, U*, h, h~, c1, the tau(0) law and the renewal sequence."""
    mu_star = ladder_height_law(d)
    u_star, h, h_tilde = potential_and_renewal(d, mu_star, x_max)
    f = tau_law(d, 0, n_max)
    u = ladder_epoch_renewal(d, n_max, tau0_law=f)
    return FluctuationTables(mu_star=mu_star, u_star=u_star, h=h, h_tilde=h_tilde,
                             c1=c1(d, mu_star), tau0_law=f, u=u)
