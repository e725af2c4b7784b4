import numpy as np
import pytest
from hypothesis import given, strategies as st

from jacobi_stolz.errors import DegenerateRefinement, NonEllipticError
from jacobi_stolz.jacobi_core import block_stack, det2
from jacobi_stolz.uniform_diag import (_cinv2, _diag, build_chain, principal_eigen,
                                       reconstruct_check, reconstruct_sweep, refine_step,
                                       sigma_symmetry_defect)


def test_principal_eigen_rotation():
    lam, C0 = principal_eigen(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    assert lam == pytest.approx(1j)
    assert np.allclose(C0, [[1, 1], [1j, -1j]])


@given(x=st.floats(-1.99, 1.99))
def test_principal_eigen_diagonalizes(x):
    X = np.array([[0.0, 1.0], [-1.0, x]])
    lam, C0 = principal_eigen(X)
    assert lam.imag > 0
    assert np.allclose(C0 @ _diag(lam) @ _cinv2(C0), X, atol=1e-12 / (lam.imag + 1e-3))


def test_principal_eigen_rejects_hyperbolic():
    with pytest.raises(NonEllipticError):
        principal_eigen(np.array([[0.0, 1.0], [-1.0, 3.0]]))
    with pytest.raises(NonEllipticError):
        principal_eigen(np.array([[0.0, 1.0], [-1.0, 2.0]]))


def test_refine_constant_is_fixed_point():
    lam, C = principal_eigen(np.array([[0.0, 1.0], [-1.0, 0.5]]))
    gamma, Y = refine_step(_diag(lam), C, C)
    assert gamma == pytest.approx(lam, abs=1e-15)
    assert np.allclose(Y, np.eye(2))


def test_refine_diagonal_example():
    D = _diag(1j)
    gamma, Y = refine_step(D, np.eye(2), np.eye(2))
    assert gamma == pytest.approx(1j)
    assert np.allclose(Y, np.eye(2))


def test_refine_guard():
    lam, C = principal_eigen(np.array([[0.0, 1.0], [-1.0, 0.5]]))
    with pytest.raises(DegenerateRefinement):
        refine_step(_diag(lam), C, C, delta=10.0)


def test_refinement_gap_shrinks(decaying):
    ch = build_chain(decaying, 1, 0, 2, 0.3, n_max=4000)
    gap = np.abs(ch.gamma - ch.lam)
    # the correction is first order in Delta b = O(1/n^2)
    assert gap[-1] < gap[0] / 100
    assert gap[-1] < 1e-5


def test_free_chain_is_constant(free):
    x = 0.7
    lam = x / 2 + 0.5j * np.sqrt(4 - x * x)
    for r in (1, 2, 3):
        ch = build_chain(free, 1, 0, r, x, n_max=500)
        assert np.allclose(ch.gamma, lam, atol=1e-13)
        assert ch.M == r


def test_depth_one_matches_principal_eigen(intro):
    ch = build_chain(intro, 1, 0, 1, 0.2, n_max=2000)
    X = block_stack(intro, 1, 0, ch.M, ch.k_max + 1, np.array([0.2]))[:, 0]
    lam, _ = principal_eigen(X)
    assert np.array_equal(ch.gamma, lam)


def test_intro_gamma_tends_to_limit(intro):
    ch = build_chain(intro, 1, 0, 3, 0.0, n_max=20_000)
    err = np.abs(ch.gamma - 1j)
    # b_n decays like 1/log n, so does the distance to the limit eigenvalue
    assert np.max(err[-2000:]) < np.max(err[:2000]) / 2
    assert np.max(err[-2000:]) < 0.6 / np.log(ch.k_max)


def test_reconstruct_empty_span(intro):
    ch = build_chain(intro, 1, 0, 2, 0.0, n_max=500)
    e = reconstruct_check(ch, intro, 50, 49)
    assert e.max_norm_deviation == 0.0 and e.relative_deviation == 0.0


def test_reconstruct_constant_model(free):
    ch = build_chain(free, 1, 0, 2, 1.1, n_max=500)
    e = reconstruct_check(ch, free, ch.M + 1, 400)
    assert e.relative_deviation < 1e-11


@pytest.mark.parametrize("r", [1, 2, 3])
def test_reconstruct_intro(intro, r):
    ch = build_chain(intro, 1, 0, r, 0.4, n_max=2000)
    m = max(20, ch.M + 1)
    assert reconstruct_check(ch, intro, m, 200).relative_deviation <= 1e-8


def test_reconstruct_out_of_range(intro):
    ch = build_chain(intro, 1, 0, 2, 0.0, n_max=500)
    with pytest.raises(IndexError):
        reconstruct_check(ch, intro, ch.M, 100)
    with pytest.raises(IndexError):
        reconstruct_sweep(ch, intro, ch.M + 1, ch.M + 1)


def test_reconstruct_sweep_matches_single_checks(two_periodic):
    ch = build_chain(two_periodic, 2, 1, 2, 1.5, n_max=600)
    m = ch.M + 1
    worst = reconstruct_sweep(ch, two_periodic, m, 120)
    single = max(reconstruct_check(ch, two_periodic, m, n).relative_deviation
                 for n in range(m, 120))
    assert worst == pytest.approx(single, rel=1e-6, abs=1e-15)


@given(x=st.floats(-1.4, 1.4), r=st.integers(1, 4))
def test_sigma_symmetry(intro, x, r):
    ch = build_chain(intro, 1, 0, r, x, n_max=1500)
    for C in ch.levels[1:]:
        assert sigma_symmetry_defect(C) <= 1e-12
    # C_0 swaps to its conjugate under column exchange, hence so does Q
    sigma = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.max(np.abs(ch.Q @ sigma - np.conj(ch.Q))) <= 1e-12 * np.max(np.abs(ch.Q))


@given(x=st.floats(-1.4, 1.4), r=st.integers(1, 3), span=st.integers(1, 200))
def test_determinant_identity(intro, x, r, span):
    ch = build_chain(intro, 1, 0, r, x, n_max=1500)
    m = ch.M + 1
    n = min(m + span, ch.k_max)
    X = block_stack(intro, 1, 0, m, n + 1, np.array([x]))[:, 0]
    pos = np.arange(m, n + 1) - ch.M
    lhs = np.sum(np.log(np.abs(det2(ch.D[pos]))))
    Qm, Qn = ch.Q_at(m - 1), ch.Q_at(n)
    Cm, Cn = ch.C[m - 1 - ch.M], ch.C[n - ch.M]
    rhs = (np.sum(np.log(np.abs(det2(X)))) + np.log(abs(det2(Qm) * det2(Cn)))
           - np.log(abs(det2(Qn) * det2(Cm))))
    assert lhs == pytest.approx(rhs, abs=1e-9)


def test_late_window_is_stable(decaying):
    ch = build_chain(decaying, 1, 0, 3, -0.5, n_max=5000)
    tail = ch.gamma[-64:]
    assert np.max(np.abs(tail / tail[-1] - 1)) < 1e-3


def test_large_guard_raises(free):
    with pytest.raises(DegenerateRefinement) as info:
        build_chain(free, 1, 0, 2, 0.0, n_max=300, delta=10.0)
    assert info.value.level == 1


def test_non_elliptic_point(free):
    with pytest.raises(NonEllipticError):
        build_chain(free, 1, 0, 2, 3.0, n_max=300)


def test_M_hint_is_lower_bound(intro):
    ch = build_chain(intro, 1, 0, 2, 0.0, M_hint=100, n_max=1000)
    assert ch.M == 101
    with pytest.raises(IndexError):
        ch.gamma_at(100)


def test_late_determinant_telescoping(decaying):
    # prod det D / prod det X over a late window tends to one
    x = 0.4
    ch = build_chain(decaying, 1, 0, 3, x, n_max=5000)
    m, n = ch.k_max - 500, ch.k_max
    X = block_stack(decaying, 1, 0, m, n + 1, np.array([x]))[:, 0]
    pos = np.arange(m, n + 1) - ch.M
    log_ratio = np.sum(np.log(np.abs(det2(ch.D[pos])))) - np.sum(np.log(np.abs(det2(X))))
    assert abs(np.expm1(log_ratio)) < 1e-3
