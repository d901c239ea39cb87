import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinflip import cherry as ch


def _classical_cu(w, mu):
    # linearized flow of (p1^2 + q1^2)/2 - w (p2^2 + q2^2)/2 + mu p1 p2 in (q1, q2, p1, p2)
    A = np.array([
        [0.0, 0.0, 1.0, mu],
        [0.0, 0.0, mu, -w],
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, w, 0.0, 0.0],
    ])
    return np.max(np.abs(np.linalg.eigvals(A).real)) > 1e-7


def test_critical_mu_examples():
    assert ch.cherry_critical_mu(1.0) == 0.0
    assert ch.cherry_critical_mu(1.02) == pytest.approx(-0.02000, abs=1e-4)
    with pytest.raises(ValueError):
        ch.cherry_critical_mu(0.0)


@pytest.mark.parametrize("w", [0.5, 0.9, 1.02, 1.3])
def test_critical_mu_matches_linear_stability(w):
    crit = abs(ch.cherry_critical_mu(w))
    lo, hi = 0.0, 5.0
    assert not _classical_cu(w, lo) and _classical_cu(w, hi)
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if not _classical_cu(w, mid) else (lo, mid)
    assert abs(hi - crit) < 1e-6


def test_cherry_uncoupled_spectrum():
    M, w = 6, 1.3
    E = np.linalg.eigvalsh(ch.build_cherry_hamiltonian(ch.CherryParams(M, w)))
    expected = sorted(e for *_, e, _ in ch.cluster_labels(M, w))
    np.testing.assert_allclose(E, expected, atol=1e-13)


def test_cherry_is_hermitian_and_real():
    H = ch.build_cherry_hamiltonian(ch.CherryParams(8, 1.02, 0.03))
    assert H.dtype == float and np.max(np.abs(H - H.T)) < 1e-12


def test_cherry_coupling_element():
    # <1|p|0> = i/sqrt(2) on each oscillator, so <1,1|mu p1 p2|0,0> = -mu/2
    M = 3
    H = ch.build_cherry_hamiltonian(ch.CherryParams(M, 1.0, 0.4))
    assert H[1 * M + 1, 0] == pytest.approx(-0.2)


def test_params_validation():
    with pytest.raises(ValueError):
        ch.CherryParams(1, 1.0)
    with pytest.raises(ValueError):
        ch.CherryParams(3, 0.0)
    with pytest.raises(ValueError):
        ch.ClusterParams(3, -0.1)


def test_cluster_labels():
    M, w = 5, 1.02
    labels = ch.cluster_labels(M, w)
    assert len(labels) == M * M
    zero = sorted((lab for lab in labels if lab[3] == 0), key=lambda r: r[0])
    assert len(zero) == M
    np.testing.assert_allclose([r[2] for r in zero], -0.02 * np.arange(M) + (1 - w) / 2, atol=1e-14)
    degenerate = ch.cluster_labels(4, 1.0)
    assert len({round(e, 12) for *_, e, a in degenerate if a == 2}) == 1


def test_cluster_matrix_structure():
    H = ch.build_cluster_hamiltonian(ch.ClusterParams(2, 0.02, 0.01))
    np.testing.assert_array_equal(H, [[-0.02, 0.01], [0.01, -0.04]])
    H = ch.build_cluster_hamiltonian(ch.ClusterParams(5, 0.1, 0.2))
    np.testing.assert_allclose(np.diag(H), -0.1 * np.arange(1, 6))
    np.testing.assert_allclose(np.diag(H, 1), 0.1 * np.arange(2, 6))


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
@settings(max_examples=40, deadline=None)
def test_two_level_closed_form(Delta, mu):
    E, _ = ch.cluster_spectrum(ch.ClusterParams(2, Delta, mu))
    r = math.sqrt(Delta**2 / 4 + mu**2)
    np.testing.assert_allclose(E, [-1.5 * Delta - r, -1.5 * Delta + r], atol=1e-13)


@given(st.integers(2, 30), st.floats(0.0, 0.5), st.floats(0.0, 0.5))
@settings(max_examples=40, deadline=None)
def test_off_diagonal_sign_flip_invariance(M, Delta, mu):
    H = ch.build_cluster_hamiltonian(ch.ClusterParams(M, Delta, mu))
    flip = H.copy()
    flip[~np.eye(M, dtype=bool)] *= -1
    np.testing.assert_allclose(np.linalg.eigvalsh(H), np.linalg.eigvalsh(flip), atol=1e-12)


def test_cluster_uncoupled_spectrum():
    E, _ = ch.cluster_spectrum(ch.ClusterParams(6, 0.02))
    np.testing.assert_allclose(E, -0.02 * np.arange(6, 0, -1))


def test_cluster_vs_cherry_uncoupled():
    assert ch.cluster_vs_cherry_check(10, 1.02, 0.0).deviation < 1e-14


def test_cluster_vs_cherry_grows_with_mu():
    devs = [ch.cluster_vs_cherry_check(10, 1.02, mu).deviation for mu in np.linspace(0, 0.04, 9)]
    assert all(b > a for a, b in zip(devs, devs[1:]))
    assert devs[2] < 0.01


def test_cluster_vs_cherry_requires_descending_ladder():
    with pytest.raises(ValueError):
        ch.cluster_vs_cherry_check(10, 0.98, 0.01)


def test_gersgorin_uncoupled():
    rep = ch.gersgorin_bounds(ch.build_cluster_hamiltonian(ch.ClusterParams(10, 0.02)))
    assert all(b.radius == 0 for b in rep.bounds)
    assert rep.upper_envelope == pytest.approx(-0.02) and rep.lower_envelope == pytest.approx(-0.2)


@given(st.integers(3, 40), st.floats(0.001, 0.1), st.floats(0.0, 0.2))
@settings(max_examples=40, deadline=None)
def test_gersgorin_containment_and_rows(M, Delta, mu):
    p = ch.ClusterParams(M, Delta, mu)
    rep = ch.gersgorin_bounds(ch.build_cluster_hamiltonian(p))
    E, _ = ch.cluster_spectrum(p)
    assert all(rep.contains(e) for e in E)
    first, last = rep.bounds[0], rep.bounds[-1]
    assert first.center + first.radius == pytest.approx(-Delta + mu, abs=1e-14)
    assert last.center + last.radius == pytest.approx(-M * Delta + mu * M / 2, abs=1e-12)
    bc = ch.bound_crossing(M, Delta)
    assert bc.first_row_upper(mu) == pytest.approx(first.center + first.radius, abs=1e-14)


def test_bound_crossing():
    bc = ch.bound_crossing(10, 0.02)
    assert bc.mu_star == pytest.approx(0.02 * 9 / 4)
    assert bc.first_row_upper(bc.mu_star) == pytest.approx(bc.last_row_upper(bc.mu_star))
    assert bc.mu_claimed == 0.02
    ratios = [ch.bound_crossing(M, 1.0).mu_star for M in (10, 100, 1000, 10000)]
    assert abs(ratios[-1] - 2) < 1e-3 and all(r > 0 for r in ratios)
    with pytest.raises(ValueError):
        ch.bound_crossing(2, 0.02)


def test_bound_crossing_needs_m_above_two():
    assert ch.bound_crossing(3, 0.02).mu_star > 0


def test_participation_ratio():
    assert ch.participation_ratio(np.array([0, 1.0, 0])) == pytest.approx(1)
    assert ch.participation_ratio(np.ones(7)) == pytest.approx(7)


def test_localization_small_mu():
    fit = ch.ground_state_localization(ch.ClusterParams(200, 0.02, 1e-6))
    assert fit.length < 0.1


def test_localization_matches_closed_form():
    fit = ch.ground_state_localization(ch.ClusterParams(200, 0.02, 0.01))
    assert fit.length == pytest.approx(ch.analytic_localization_length(0.02, 0.01), rel=0.1)
    assert not fit.flagged


def test_participation_grows_toward_transition():
    prs = [ch.ground_state_localization(ch.ClusterParams(200, 0.02, r * 0.02)).participation for r in (0.2, 0.5, 0.8, 0.95)]
    assert all(b > a for a, b in zip(prs, prs[1:]))


def test_analytic_localization_length():
    assert ch.analytic_localization_length(2.0, 1.0) == pytest.approx(0.7593, abs=1e-4)
    with pytest.raises(ValueError):
        ch.analytic_localization_length(1.0, 1.0)
    with pytest.raises(ValueError):
        ch.analytic_localization_length(1.0, 0.0)
    ls = [ch.analytic_localization_length(1.0, mu) for mu in (0.1, 0.3, 0.6, 0.9)]
    assert all(b > a for a, b in zip(ls, ls[1:]))
