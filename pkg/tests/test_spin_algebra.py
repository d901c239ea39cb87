import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from spinflip.spin_algebra import (
    MINUS_X,
    PLUS_X,
    CoherentDirection,
    SpinJ,
    bit_states,
    build_spin_operators,
    coherent_state,
    expectation,
    swap_operator,
    tensor_product,
)

spins = st.integers(min_value=1, max_value=50).map(lambda n: n / 2)
angles = st.tuples(st.floats(0, np.pi), st.floats(0, 2 * np.pi, exclude_max=True))


def test_spin_half_is_half_pauli():
    ops = build_spin_operators(0.5)
    np.testing.assert_array_equal(ops.jz, np.diag([0.5, -0.5]))
    np.testing.assert_array_equal(ops.jx, [[0, 0.5], [0.5, 0]])
    np.testing.assert_allclose(ops.jy, [[0, -0.5j], [0.5j, 0]])


def test_spin_one_jz():
    np.testing.assert_array_equal(build_spin_operators(1).jz.real, np.diag([1.0, 0.0, -1.0]))


@pytest.mark.parametrize("j", [0, -1, 0.3, 1.25])
def test_rejects_non_half_integer(j):
    with pytest.raises(ValueError):
        SpinJ(j)


@given(spins)
@settings(max_examples=30, deadline=None)
def test_operator_identities(j):
    jx, jy, jz = build_spin_operators(j).as_tuple()
    for op in (jx, jy, jz):
        assert np.max(np.abs(op - op.conj().T)) <= 1e-12
    assert np.max(np.abs(jx @ jy - jy @ jx - 1j * jz)) < 1e-10
    assert np.max(np.abs(jy @ jz - jz @ jy - 1j * jx)) < 1e-10
    assert np.max(np.abs(jz @ jx - jx @ jz - 1j * jy)) < 1e-10
    casimir = jx @ jx + jy @ jy + jz @ jz
    assert np.max(np.abs(casimir - j * (j + 1) * np.eye(SpinJ(j).N))) < 1e-10


def test_pole_state_is_top_basis_vector():
    psi = coherent_state(3, CoherentDirection(0.0, 1.3))
    expected = np.zeros(7)
    expected[0] = 1
    np.testing.assert_allclose(psi, expected, atol=0)


@given(spins, angles)
@settings(max_examples=40, deadline=None)
def test_coherent_expectation_is_bloch_vector(j, ang):
    d = CoherentDirection(*ang)
    psi = coherent_state(j, d)
    assert abs(np.linalg.norm(psi) - 1) < 1e-12
    ops = build_spin_operators(j)
    vec = np.array([expectation(op, psi).real for op in ops.as_tuple()])
    np.testing.assert_allclose(vec, j * d.unit_vector, atol=1e-10)


@given(st.integers(1, 20).map(lambda n: n / 2), angles)
@settings(max_examples=25, deadline=None)
def test_coherent_state_matches_rotation_operator(j, ang):
    theta, phi = ang
    ops = build_spin_operators(j)
    top = np.zeros(SpinJ(j).N, complex)
    top[0] = 1
    rotated = scipy.linalg.expm(-1j * phi * ops.jz) @ scipy.linalg.expm(-1j * theta * ops.jy) @ top
    # equal up to a global phase
    assert abs(abs(np.vdot(rotated, coherent_state(j, CoherentDirection(theta, phi)))) - 1) < 1e-10


@pytest.mark.parametrize("j", [0.5, 2, 7.5, 25])
@pytest.mark.parametrize("gap", [0.0, np.pi / 2, np.pi])
def test_coherent_overlap_law(j, gap):
    a = coherent_state(j, CoherentDirection(0.4, 1.0))
    b = coherent_state(j, CoherentDirection(0.4 + gap, 1.0)) if gap < np.pi else coherent_state(
        j, CoherentDirection(np.pi - 0.4, 1.0 + np.pi)
    )
    assert abs(abs(np.vdot(a, b)) ** 2 - np.cos(gap / 2) ** (4 * j)) < 1e-12


def test_antipodal_states_orthogonal():
    for j in (0.5, 5, 25):
        assert abs(np.vdot(coherent_state(j, PLUS_X), coherent_state(j, MINUS_X))) < 1e-14


def test_tensor_product_basis_and_norm():
    e1 = np.array([1.0, 0, 0])
    np.testing.assert_array_equal(tensor_product(e1, e1), np.eye(9)[0])
    rng = np.random.default_rng(3)
    a, b = (v / np.linalg.norm(v) for v in rng.normal(size=(2, 4)) + 1j * rng.normal(size=(2, 4)))
    assert abs(np.linalg.norm(tensor_product(a, b)) - 1) < 1e-14


def test_tensor_product_index_convention():
    # component (m1, m2) at (j - m1) * N + (j - m2)
    j, N = 1, 3
    a, b = np.eye(N)[0], np.eye(N)[2]  # m1 = +1, m2 = -1
    assert np.argmax(tensor_product(a, b)) == (j - 1) * N + (j + 1)


def test_tensor_product_inner_products_factorize():
    rng = np.random.default_rng(7)
    vecs = [v / np.linalg.norm(v) for v in rng.normal(size=(4, 6)) + 1j * rng.normal(size=(4, 6))]
    a, b, c, d = vecs
    lhs = np.vdot(tensor_product(a, b), tensor_product(c, d))
    assert abs(lhs - np.vdot(a, c) * np.vdot(b, d)) < 1e-12


def test_tensor_product_dimension_mismatch():
    with pytest.raises(ValueError):
        tensor_product(np.ones(2), np.ones(3))


@pytest.mark.parametrize("j", [0.5, 3, 5])
def test_bit_states(j):
    a, b = bit_states(j)
    N = SpinJ(j).N
    assert abs(np.vdot(a, b)) < 1e-14
    jx = build_spin_operators(j).jx
    eye = np.eye(N)
    assert abs(expectation(np.kron(jx, eye), a) - j) < 1e-10
    assert abs(expectation(np.kron(eye, jx), a) + j) < 1e-10
    np.testing.assert_allclose(swap_operator(N) @ a, b, atol=1e-15)
