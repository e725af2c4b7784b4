import numpy as np
import pytest
from hypothesis import given, strategies as st

from jacobi_stolz.families import FamilySpec, limit_matrix, make_family
from jacobi_stolz.jacobi_core import block_stack, discriminant


def test_free_example(free):
    n = np.arange(10)
    assert np.array_equal(free.a_at(n), np.ones(10))
    assert np.array_equal(free.b_at(n), np.zeros(10))


def test_constant_two_periodic(two_periodic):
    assert list(two_periodic.a_at(np.arange(5))) == [2, 1, 2, 1, 2]


def test_asymptotically_periodic_example():
    spec = FamilySpec(kind="asymptotically_periodic", N=2, alpha=(1.0, 2.0), beta=(0.0, 1.0),
                      amp_a=0.5, amp_b=1.0, kappa=1.0, gamma=0.0)
    m = make_family(spec)
    assert m.a_at(0) == pytest.approx(1.5)
    assert m.b_at(3) == pytest.approx(1.0 + 1.0 / 4)
    assert m.period_N == 2


def test_intro_example(intro):
    assert intro.b_at(0) == pytest.approx(1 / np.log(2))
    assert intro.b_at(4) == pytest.approx(np.cos(2.0) / np.log(6))
    assert intro.a_at(7) == 1.0


def test_modulation_example():
    m = make_family(FamilySpec(kind="periodic_modulation", N=2, alpha=(1.0, 2.0),
                               beta=(0.5, 0.0), tau=0.5))
    assert m.a_at(3) == pytest.approx(2 * 2.0)
    assert m.b_at(8) == pytest.approx(0.5 * 3.0)


def test_custom_expression():
    m = make_family(FamilySpec(kind="custom", a_expr="(n + 1)**2", b_expr="(-1)**n"))
    assert list(m.a_at(np.arange(4))) == [1, 4, 9, 16]
    assert list(m.b_at(np.arange(3))) == [1, -1, 1]


def test_custom_has_no_builtins():
    m = make_family(FamilySpec(kind="custom", a_expr="__import__('os') and n"))
    with pytest.raises(NameError):
        m.a_at(np.arange(3))


def test_blend_enumeration():
    spec = FamilySpec(kind="blend", N=1, alpha=(3.0,), beta=(0.7,), tau=1.0)
    m = make_family(spec)
    n = np.arange(12)
    # period 3: (a~_0, c~_0, c~_1, a~_1, c~_2, c~_3, ...) with c~_k = k + 1
    assert list(m.a_at(n)) == [3, 1, 2, 3, 3, 4, 3, 5, 6, 3, 7, 8]
    assert list(m.b_at(n)) == [0.7, 0, 0] * 4
    assert spec.period == 3


def test_blend_two_slots():
    spec = FamilySpec(kind="blend", N=2, alpha=(1.0, 1.5), beta=(0.0, 0.3), tau=1.0)
    m = make_family(spec)
    assert list(m.a_at(np.arange(8))) == [1.0, 1.5, 1, 2, 1.0, 1.5, 3, 4]


def test_limit_constant_is_exact(two_periodic):
    spec = FamilySpec(kind="constant", N=2, alpha=(2.0, 1.0), beta=(0.0, 0.0))
    x = np.array([-1.5, 0.2, 2.0])
    for i in (0, 1):
        X = block_stack(two_periodic, 2, i, 5, 6, x)[0]
        assert np.allclose(X, limit_matrix(spec, i, x), atol=1e-15)


def test_limit_intro(intro_spec):
    assert np.array_equal(limit_matrix(intro_spec, 0, 0.5), [[0, 1], [-1, 0.5]])


@pytest.mark.parametrize("spec,i,rate", [
    (FamilySpec(kind="asymptotically_periodic", N=2, alpha=(1.0, 1.5), beta=(0.0, 0.3),
                amp_a=0.5, amp_b=0.2, gamma=0.0), 1, 1.0),
    (FamilySpec(kind="periodic_modulation", N=2, alpha=(1.0, 2.0), beta=(0.5, -0.3),
                tau=0.5), 1, 0.5),
    (FamilySpec(kind="blend", N=1, alpha=(1.0,), beta=(0.0,), tau=0.5), 1, 1.0),
])
def test_blocks_converge_to_limit(spec, i, rate):
    m = make_family(spec)
    x = np.array([0.3])
    P = spec.period
    errs = [np.max(np.abs(block_stack(m, P, i, k, k + 1, x)[0, 0] - limit_matrix(spec, i, x)[0]))
            for k in (100, 10_000)]
    assert errs[1] < errs[0]
    assert errs[1] / errs[0] == pytest.approx(100.0 ** -rate, rel=0.3)


@given(x=st.floats(-0.8, 0.8))
def test_blend_discriminant_independent_of_residue(x):
    spec = FamilySpec(kind="blend", N=1, alpha=(1.0,), beta=(0.0,), tau=0.5)
    m = make_family(spec)
    d = [discriminant(block_stack(m, 3, i, 10**5, 10**5 + 1, np.array([x])))[0, 0]
         for i in range(3)]
    target = discriminant(limit_matrix(spec, 1, x))
    assert np.allclose(d, target, atol=1e-4)


def test_modulation_ratio_tends_to_one():
    m = make_family(FamilySpec(kind="periodic_modulation", N=1, alpha=(1.0,), beta=(0.0,),
                               tau=0.7))
    n = np.array([10, 1000, 100_000])
    ratio = m.a_at(n - 1) / m.a_at(n)
    assert np.all(np.diff(np.abs(ratio - 1)) < 0) and abs(ratio[-1] - 1) < 1e-5


@pytest.mark.parametrize("kw", [
    dict(kind="nope"),
    dict(N=0),
    dict(N=2, alpha=(1.0,), beta=(0.0, 0.0)),
    dict(alpha=(-1.0,)),
    dict(kind="intro_oscillation", gamma=1.5),
    dict(kind="periodic_modulation", tau=0.0),
    dict(kind="blend", tau=2.0),
    dict(kind="asymptotically_periodic", kappa=0.0),
])
def test_invalid_parameters(kw):
    with pytest.raises(ValueError):
        make_family(FamilySpec(**kw))


def test_limit_matrix_errors():
    with pytest.raises(ValueError):
        limit_matrix(FamilySpec(kind="blend", N=1), 0, 0.0)
    with pytest.raises(ValueError):
        limit_matrix(FamilySpec(kind="custom"), 0, 0.0)
    with pytest.raises(ValueError):
        limit_matrix(FamilySpec(N=1), 1, 0.0)
