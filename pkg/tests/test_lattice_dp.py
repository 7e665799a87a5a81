from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

import oracles
from reflectedwalk.errors import (HorizonTooLarge, ImpossibleBridge, SlowConvergence)
from reflectedwalk.lattice_dp import (bridge_expectation, build_tables, c1,
                                      confined_step, delta_pmf, ladder_epoch_renewal,
                                      ladder_height_law, meander_expectation,
                                      potential_and_renewal, survival_law, tau_law)
from reflectedwalk.step_dist import from_table, moments


@pytest.fixture(scope="module")
def lazy_tables(lazy):
    return build_tables(lazy, 10_000, 8)


# ---------------------------------------------------------------------------
# confined recursion
# ---------------------------------------------------------------------------

def test_confined_step_lazy_from_origin(lazy):
    nxt, killed = confined_step(delta_pmf(0), lazy)
    assert nxt.as_dict() == {0: 0.5, 1: 0.25}
    assert killed.as_dict() == {-1: 0.25}
    assert nxt.deficit == 0.25


def test_confined_step_zero_front(lazy):
    front = type(delta_pmf(0))(0, np.zeros(3), 0.0)
    nxt, killed = confined_step(front, lazy)
    assert nxt.mass() == 0.0 and killed.mass() == 0.0


def test_confined_step_skew_from_one(skew):
    nxt, killed = confined_step(delta_pmf(1), skew)
    assert nxt.as_dict() == {1: 0.4, 2: 0.4}
    assert killed.as_dict() == {-1: 0.2}


def test_mass_conservation_many_steps(lazy, skew, wide):
    for d in (lazy, skew, wide):
        front = delta_pmf(2)
        killed_total = 0.0
        for k in range(1, 60):
            prev = front.mass()
            front, killed = confined_step(front, d)
            killed_total += killed.mass()
            assert abs(prev - front.mass() - killed.mass()) <= 1e-14
            assert abs(front.mass() + killed_total - 1.0) <= 1e-14 * k + 1e-15


def test_survival_law_lazy_masses(lazy):
    slices = survival_law(lazy, 0, 3)
    assert slices[0].as_dict() == {0: 1.0}
    assert slices[1].as_dict() == {0: 0.5, 1: 0.25}
    assert abs(slices[1].mass() - 0.75) <= 1e-15
    assert abs(slices[3].mass() - 35 / 64) <= 1e-15


def test_survival_mass_one_when_start_unreachable(skew):
    # from x = 2*n the walk (max down-jump 2) cannot go below zero in n steps
    n = 5
    slices = survival_law(skew, 2 * n, n)
    assert abs(slices[n].mass() - 1.0) <= 1e-14


def test_survival_budget_guard(lazy):
    with pytest.raises(HorizonTooLarge):
        survival_law(lazy, 0, 10_000, budget=1e4)


def test_survival_matches_enumeration(lazy, skew):
    for d, x in ((lazy, 0), (lazy, 2), (skew, 1)):
        slices = survival_law(d, x, 8)
        oracle = oracles.confined_slices(d, x, 8)
        for k in range(9):
            got = slices[k].as_dict()
            assert set(got) == set(oracle[k])
            for z, p in oracle[k].items():
                assert abs(got[z] - p) <= 1e-13


def test_tau_law_lazy_first_values(lazy):
    f = tau_law(lazy, 0, 10)
    assert abs(f[1] - 0.25) <= 1e-15
    assert abs(f[2] - 0.125) <= 1e-15
    assert abs(f[3] - 5 / 64) <= 1e-15
    assert np.all(np.diff(np.cumsum(f)) >= -1e-16) and f[1:].sum() <= 1.0


def test_tau_law_one_step_is_negative_mass(lazy, skew, wide):
    for d in (lazy, skew, wide):
        assert abs(tau_law(d, 0, 1)[1] - d.negative_mass()) <= 1e-15


def test_tau_law_matches_enumeration(skew):
    f = tau_law(skew, 1, 9)
    o = oracles.tau_pmf(skew, 1, 9)
    assert np.max(np.abs(f - o)) <= 1e-13


# ---------------------------------------------------------------------------
# ladder heights, potential, renewal functions
# ---------------------------------------------------------------------------

def test_ladder_lazy_is_point_mass(lazy):
    mu = ladder_height_law(lazy)
    assert mu.as_dict() == {-1: 1.0}
    assert abs(mu.deficit) <= 1e-12


def test_ladder_skew_exact_halves(skew):
    mu = ladder_height_law(skew)
    got = mu.as_dict()
    assert abs(got[-1] - 0.5) <= 1e-12 and abs(got[-2] - 0.5) <= 1e-12


def test_ladder_dp_route_agrees_with_exact(skew, wide):
    for d in (skew, wide):
        exact = ladder_height_law(d)
        approx = ladder_height_law(d, mass_tol=2e-2, method="dp", max_horizon=20_000)
        assert approx.deficit <= 2e-2
        for y, p in exact.as_dict().items():
            # truncation only loses mass, never adds it
            assert approx.atom(y) <= p + 1e-12
            assert p - approx.atom(y) <= approx.deficit + 1e-12


def test_ladder_dp_slow_convergence(lazy):
    with pytest.raises(SlowConvergence):
        ladder_height_law(lazy, mass_tol=1e-4, method="dp", max_horizon=200)


def test_ladder_exact_within_enumeration_bracket(skew, wide):
    for d in (skew, wide):
        partial, remaining = oracles.ladder_height_partial(d, 12)
        mu = ladder_height_law(d)
        for y, lower in partial.items():
            atom = mu.atom(-y)
            assert lower - 1e-12 <= atom <= lower + remaining + 1e-12


def test_ladder_mean_drops(lazy, skew):
    assert abs(-float(np.dot(ladder_height_law(lazy).positions(),
                             ladder_height_law(lazy).weights)) - 1.0) <= 1e-12
    assert abs(-float(np.dot(ladder_height_law(skew).positions(),
                             ladder_height_law(skew).weights)) - 1.5) <= 1e-12


def test_potential_and_renewal_lazy(lazy):
    mu = ladder_height_law(lazy)
    u, h, ht = potential_and_renewal(lazy, mu, 8)
    assert np.allclose(u, 1.0, atol=1e-14)
    assert np.allclose(h, np.arange(1, 10), atol=1e-13)
    assert np.allclose(ht, h, atol=1e-13)  # symmetric walk: same both ways


def test_potential_and_renewal_skew(skew):
    mu = ladder_height_law(skew)
    u, h, ht = potential_and_renewal(skew, mu, 6)
    assert np.allclose(u, [1.0, 0.5, 0.75, 0.625, 0.6875, 0.65625, 0.671875], atol=1e-12)
    assert abs(h[0] - 1.0) <= 1e-14 and abs(ht[0] - 1.0) <= 1e-14
    # mirrored skew is skip-free downward, so its renewal function is x + 1
    assert np.allclose(ht, np.arange(1, 8), atol=1e-12)
    assert np.all(np.diff(h) > 0) and np.all(np.diff(ht) > 0)


def test_renewal_function_is_harmonic(lazy, skew, wide):
    # E[h(x + xi); x + xi >= 0] = h(x) for the walk killed below zero
    for d in (lazy, skew, wide):
        mu = ladder_height_law(d)
        _, h, _ = potential_and_renewal(d, mu, 16)
        for x in range(0, 8):
            acc = 0.0
            for k, p in d.atoms():
                if x + k >= 0:
                    acc += p * h[x + k]
            assert abs(acc - h[x]) <= 1e-10


def test_c1_values(lazy, skew):
    mu = ladder_height_law(lazy)
    assert abs(c1(lazy, mu) - 2.0 / math.sqrt(math.pi)) <= 1e-12
    # symmetric walk with unit down-jumps: ladder height is exactly -1
    sym = from_table([(-1, 0.3), (0, 0.4), (1, 0.3)])
    mu_sym = ladder_height_law(sym)
    assert abs(c1(sym, mu_sym) - math.sqrt(2 / math.pi) / moments(sym).sigma) <= 1e-12
    mu_skew = ladder_height_law(skew)
    assert abs(c1(skew, mu_skew) - math.sqrt(2 / math.pi) * 1.5 / math.sqrt(1.2)) <= 1e-12


# ---------------------------------------------------------------------------
# ladder epoch renewal sequence
# ---------------------------------------------------------------------------

def test_renewal_sequence_first_terms(lazy):
    u = ladder_epoch_renewal(lazy, 6)
    assert u[0] == 1.0
    assert abs(u[1] - 0.25) <= 1e-15
    assert abs(u[2] - 3 / 16) <= 1e-15


def test_renewal_sequence_equals_convolution_powers(skew):
    n = 50
    f = tau_law(skew, 0, n)
    u = ladder_epoch_renewal(skew, n, tau0_law=f)
    direct = np.zeros(n + 1)
    direct[0] = 1.0
    power = np.array([1.0])  # f^{*0}
    for _ in range(1, n + 1):
        power = np.convolve(power, f[:n + 1])[:n + 1]
        direct += power
    # f has no mass at 0, so the l-fold sum is exact at every lag <= n
    assert np.max(np.abs(u - direct)) <= 1e-12


def test_renewal_sequence_monotone_diagnostic(lazy, lazy_tables):
    ref = 1.0 / (lazy_tables.c1 * math.pi)
    gaps = [abs(math.sqrt(n) * lazy_tables.u[n] - ref) for n in (100, 1000, 10_000)]
    assert gaps[1] <= 1.5 * gaps[0] and gaps[2] <= 1.5 * gaps[1]


def test_tau_tail_and_local_asymptotics(lazy, lazy_tables):
    # sqrt(n) P[tau > n] -> c1 h(0) and n^{3/2} P[tau = n] -> c1 h(0) / 2
    f = lazy_tables.tau0_law
    n = 10_000
    tail = 1.0 - f[1:n + 1].sum()
    assert abs(math.sqrt(n) * tail / lazy_tables.c1 - 1.0) <= 0.01
    assert abs(n**1.5 * f[n] / (lazy_tables.c1 / 2) - 1.0) <= 0.01


# ---------------------------------------------------------------------------
# conditioned expectations
# ---------------------------------------------------------------------------

def test_meander_constant_function(lazy):
    assert meander_expectation(lazy, 0, 7, lambda u: 1.0) == pytest.approx(1.0, abs=1e-14)


def test_meander_matches_enumeration(lazy, skew):
    for d, x, n in ((lazy, 0, 3), (lazy, 0, 11), (skew, 2, 9)):
        dp = meander_expectation(d, x, n, lambda u: u)
        brute = oracles.meander_mean(d, x, n, lambda u: u)
        assert abs(dp - brute) <= 1e-13


def test_bridge_constant_function(lazy):
    assert bridge_expectation(lazy, 0, 0, 0.5, 1.0, 8, lambda u: 1.0) == \
        pytest.approx(1.0, abs=1e-14)


def test_bridge_matches_enumeration(lazy, skew):
    val = bridge_expectation(lazy, 0, 0, 0.5, 1.0, 4, lambda u: u)
    brute = oracles.bridge_mean(lazy, 0, 0, 0.5, 1.0, 4, lambda u: u)
    assert abs(val - brute) <= 1e-13
    val = bridge_expectation(skew, 1, 2, 0.25, 0.75, 8, lambda u: min(u, 2.0))
    brute = oracles.bridge_mean(skew, 1, 2, 0.25, 0.75, 8, lambda u: min(u, 2.0))
    assert abs(val - brute) <= 1e-13


def test_bridge_denominator_is_survival_atom(lazy):
    # gluing forward and backward confined laws reproduces the two-point law
    n, m2, y = 8, 8, 2
    slices = survival_law(lazy, 0, m2)
    direct = slices[m2].atom(y)
    num = bridge_expectation(lazy, 0, y, 0.5, 1.0, n, lambda u: 1.0)
    assert num == pytest.approx(1.0, abs=1e-14)
    assert direct > 0


def test_impossible_bridge(lazy):
    with pytest.raises(ImpossibleBridge):
        bridge_expectation(lazy, 0, 3, 0.25, 0.5, 4, lambda u: u)  # 2 steps to reach 3


def test_bridge_preconditions(lazy):
    with pytest.raises(ValueError):
        bridge_expectation(lazy, 0, 0, 0.5, 0.5, 8, lambda u: u)
    with pytest.raises(ValueError):
        bridge_expectation(lazy, -1, 0, 0.25, 0.5, 8, lambda u: u)


def test_build_tables_invariants(lazy_tables):
    t = lazy_tables
    assert t.u[0] == 1.0
    assert t.h[0] == 1.0 and t.h_tilde[0] == 1.0
    assert np.all(np.diff(t.h) >= 0)
    assert np.all(t.u_star > 0) and np.all(t.u_star <= 1.0 + 1e-12)
    assert t.tau0_law[1:].sum() <= 1.0
