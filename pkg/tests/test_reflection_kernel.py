from __future__ import annotations

import math

import numpy as np
import pytest

import oracles
from reflectedwalk.errors import TruncationTooSevere, WindowMismatch
from reflectedwalk.lattice_dp import build_tables
from reflectedwalk.reflection_kernel import (OperatorSequence, StationaryMeasure,
                                             TruncatedKernel, build_R,
                                             reflection_time_kernels,
                                             renewal_operators_T, sigma_hat,
                                             sigma_limit_check, sigma_tilde,
                                             spectral_report, stationary_nu_eig,
                                             stationary_nu_formula)


@pytest.fixture(scope="module")
def lazy_tables(lazy):
    return build_tables(lazy, 64, 8)


@pytest.fixture(scope="module")
def skew_tables(skew):
    return build_tables(skew, 64, 8)


@pytest.fixture(scope="module")
def skew_kernel(skew_tables):
    return build_R(skew_tables, 8, 2)


# ---------------------------------------------------------------------------
# the kernel itself
# ---------------------------------------------------------------------------

def test_lazy_kernel_is_rank_one(lazy_tables):
    k = build_R(lazy_tables, 6, 1)
    assert np.allclose(k.entries[:, 1], 1.0, atol=1e-14)
    assert np.allclose(k.entries[:, 0], 0.0)
    assert np.max(np.abs(k.row_deficit)) <= 1e-12


def test_column_zero_is_empty(skew_kernel, lazy_tables):
    assert np.allclose(skew_kernel.entries[:, 0], 0.0)
    assert np.allclose(build_R(lazy_tables, 4, 1).entries[:, 0], 0.0)


def test_skew_kernel_hand_values(skew_kernel):
    # from U* = (1, 1/2, 3/4, ...) and mu* = (1/2, 1/2) on {-1, -2}
    expect = np.array([[0.0, 0.5, 0.5],
                       [0.0, 0.75, 0.25],
                       [0.0, 0.625, 0.375]])
    assert np.allclose(skew_kernel.entries[:3], expect, atol=1e-12)


def test_rows_stochastic_on_recurrent_band(skew_kernel):
    sums = skew_kernel.entries.sum(axis=1)
    assert np.max(np.abs(sums - 1.0)) <= 1e-12


def test_truncation_error_raised(skew_tables):
    with pytest.raises(TruncationTooSevere):
        build_R(skew_tables, 4, 1)  # y_max below the largest down-jump


def test_r_sums_converge_to_kernel(skew, skew_tables, skew_kernel):
    seq = reflection_time_kernels(skew, skew_tables, (0, 3), 1600)
    gaps = []
    for n in (100, 400, 1600):
        partial = seq.r[1:n + 1].sum(axis=0)
        tail = np.array([seq.r1_tail(x)[n] for x in seq.rows])
        for i, x in enumerate(seq.rows):
            if x <= skew_kernel.x_max:
                gap = np.abs(partial[i] - skew_kernel.entries[x, :3]).max()
                assert gap <= tail[i] + 1e-12
        gaps.append(np.abs(partial[seq.row_index(1)] - skew_kernel.entries[1, :3]).max())
    assert gaps[0] >= gaps[1] >= gaps[2]


# ---------------------------------------------------------------------------
# stationary measure
# ---------------------------------------------------------------------------

def test_lazy_stationary_is_point_mass(lazy_tables):
    nu = stationary_nu_eig(build_R(lazy_tables, 4, 1))
    assert np.allclose(nu.weights, [0.0, 1.0], atol=1e-14)
    assert nu.residual <= 1e-12


def test_skew_stationary_exact(skew_kernel):
    nu = stationary_nu_eig(skew_kernel)
    assert abs(nu.weights[1] - 5 / 7) <= 1e-12
    assert abs(nu.weights[2] - 2 / 7) <= 1e-12
    assert nu.residual <= 1e-10
    assert nu.weights[0] == 0.0


def test_degenerate_kernel_converges_immediately():
    entries = np.zeros((3, 3))
    entries[:, 1] = 1.0  # every row jumps to state 1
    k = TruncatedKernel(entries, np.zeros(3), (1, 2))
    nu = stationary_nu_eig(k)
    assert np.allclose(nu.weights, [0.0, 1.0, 0.0], atol=1e-14)


def test_formula_route_and_discrepancy(lazy_tables, skew_tables):
    # literal endpoint convention leaves spurious mass at 0; restricted to the
    # recurrent band it matches the eigenvector for both reference walks
    nu_l = stationary_nu_eig(build_R(lazy_tables, 4, 1))
    res_l = stationary_nu_formula(lazy_tables.mu_star, 4, eig=nu_l)
    assert np.allclose(res_l.raw[:2], [0.5, 0.5], atol=1e-14)
    assert res_l.mass_at_zero == pytest.approx(0.5, abs=1e-12)
    assert res_l.sr_l1_discrepancy <= 1e-12
    assert res_l.full_l1_discrepancy > 0.5  # the disagreement is reported, not hidden

    nu_s = stationary_nu_eig(build_R(skew_tables, 8, 2))
    res_s = stationary_nu_formula(skew_tables.mu_star, 8, eig=nu_s)
    assert np.allclose(res_s.raw[:3], [0.5, 0.625, 0.25], atol=1e-12)
    assert res_s.sr_l1_discrepancy <= 1e-12


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------

def test_lazy_spectrum_rank_one(lazy_tables):
    rep = spectral_report(build_R(lazy_tables, 4, 1))
    assert abs(rep.lambda1 - 1.0) <= 1e-12
    assert rep.lambda2_modulus <= 1e-12
    assert rep.simple


def test_skew_spectrum(skew_kernel):
    rep = spectral_report(skew_kernel)
    assert abs(rep.lambda1 - 1.0) <= 1e-12
    # cross-check the deflated radius against a dense eigensolve
    block = skew_kernel.sr_block()
    eigs = sorted(np.abs(np.linalg.eigvals(block)), reverse=True)
    assert abs(rep.lambda2_modulus - eigs[1]) <= 1e-9
    assert abs(rep.lambda2_modulus - 0.125) <= 1e-9
    assert rep.simple


def test_reducible_kernel_not_simple():
    entries = np.zeros((3, 3))
    entries[1, 1] = 1.0
    entries[2, 2] = 1.0  # two closed classes
    k = TruncatedKernel(entries, np.zeros(3), (1, 2))
    nu = StationaryMeasure(np.array([0.0, 0.5, 0.5]), 0.0)
    rep = spectral_report(k, nu)
    assert not rep.simple
    assert abs(rep.lambda2_modulus - 1.0) <= 1e-9


# ---------------------------------------------------------------------------
# renewal operators
# ---------------------------------------------------------------------------

def test_first_reflection_operators_lazy(lazy, lazy_tables):
    seq = reflection_time_kernels(lazy, lazy_tables, (0, 3), 16)
    i0 = seq.row_index(0)
    assert abs(seq.r[1, i0, 1] - 0.25) <= 1e-15
    assert abs(seq.r[2, i0, 1] - 0.125) <= 1e-15
    assert np.allclose(seq.r[:, :, 0], 0.0)


def test_one_step_reflection_mass(lazy, skew, lazy_tables, skew_tables):
    for d, tab in ((lazy, lazy_tables), (skew, skew_tables)):
        seq = reflection_time_kernels(d, tab, (0, 1, 2, 3), 4)
        for x in (0, 1, 2, 3):
            expect = sum(p for k, p in d.atoms() if x + k < 0)
            assert abs(seq.r[1, seq.row_index(x)].sum() - expect) <= 1e-15


def test_renewal_operators_identity_and_t2(lazy, lazy_tables):
    seq = renewal_operators_T(reflection_time_kernels(lazy, lazy_tables, (0,), 8))
    i0 = seq.row_index(0)
    assert seq.t[0, i0, 0] == 1.0
    assert seq.t[0, seq.row_index(1), 1] == 1.0
    assert abs(seq.t[2, i0, 1] - 0.125) <= 1e-15  # R_1(1,1) = 0 kills the product term


def test_operators_match_enumeration(lazy, skew, lazy_tables, skew_tables):
    for d, tab, starts in ((lazy, lazy_tables, (0, 1, 3)), (skew, skew_tables, (0, 1, 2))):
        seq = renewal_operators_T(reflection_time_kernels(d, tab, starts, 8))
        for x in starts:
            r_brute, t_brute = oracles.reflection_operators(d, x, 8)
            i = seq.row_index(x)
            assert np.max(np.abs(seq.r[:, i, :] - r_brute)) <= 1e-13
            assert np.max(np.abs(seq.t[1:, i, :] - t_brute[1:])) <= 1e-13


def test_window_mismatch_errors(lazy, lazy_tables):
    seq = reflection_time_kernels(lazy, lazy_tables, (0,), 8)
    with pytest.raises(WindowMismatch):
        renewal_operators_T(seq, 20)
    seq = renewal_operators_T(seq)
    with pytest.raises(WindowMismatch):
        seq.row_index(7)


def test_sigma_check_scale_invariance(lazy, lazy_tables):
    seq = renewal_operators_T(reflection_time_kernels(lazy, lazy_tables, (0,), 256))
    k = build_R(lazy_tables, 4, 1)
    nu = stationary_nu_eig(k)
    rep1 = sigma_limit_check(seq, nu, lazy_tables.h, lazy_tables.c1, (0,), (64, 256))
    scaled = StationaryMeasure(nu.weights * 3.0, nu.residual)
    rep2 = sigma_limit_check(seq, scaled, lazy_tables.h, lazy_tables.c1, (0,), (64, 256))
    # references use nu(y)/nu(h), invariant under rescaling nu
    for r1, r2 in zip(rep1.rows, rep2.rows):
        assert r1[4] == pytest.approx(r2[4], rel=1e-14)
    assert rep1.passed == rep2.passed


def test_sigma_window_preconditions(lazy, lazy_tables):
    seq = renewal_operators_T(reflection_time_kernels(lazy, lazy_tables, (0,), 64))
    with pytest.raises(ValueError):
        sigma_hat(lazy, lazy_tables, seq, 0, 0.8, 0.2, 64)
    with pytest.raises(ValueError):
        sigma_tilde(lazy, lazy_tables, seq, 0, 0.2, 0.2, 64)
    with pytest.raises(WindowMismatch):
        sigma_hat(lazy, lazy_tables, seq, 0, 0.2, 0.8, 1000)


def test_sigma_window_smoke_convergence(lazy, lazy_tables):
    seq = renewal_operators_T(reflection_time_kernels(lazy, lazy_tables, (0,), 512))
    ref_hat = 1.0 / (math.pi * math.sqrt(0.2 * 0.6))
    ref_til = 1.0 / (2 * math.pi * math.sqrt(0.2 * 0.6**3))
    vh = sigma_hat(lazy, lazy_tables, seq, 0, 0.2, 0.8, 500)
    vt = sigma_tilde(lazy, lazy_tables, seq, 0, 0.2, 0.8, 500)
    assert abs(vh / ref_hat - 1.0) <= 0.05
    assert abs(vt / ref_til - 1.0) <= 0.05
