import numpy as np
import pytest

from carsep.car_algebra import FermionAlgebra, basis_stack, grade_split
from carsep.expr import ExpressionError, parse_operator
from carsep.named_states import (
    NamedStateSpec,
    hopping_operator,
    make_named,
    make_phi_lambda,
    make_psi_plus,
    make_rho_one,
    make_tracial,
    make_varrho,
    rho_one_tensor_decomposition,
)
from carsep.state_kit import StateError, tracial_state
from carsep.verify import lam1_error


@pytest.mark.parametrize("lam", np.linspace(-1, 1, 21))
def test_phi_lambda_is_even_state(lam):
    st = make_phi_lambda(lam)
    assert st.is_even
    assert abs(np.trace(st.density) - 1) < 1e-12
    assert np.linalg.eigvalsh(st.density)[0] >= -1e-12


def test_phi_zero_is_tracial():
    assert np.abs(make_phi_lambda(0).density - tracial_state(FermionAlgebra((1, 2))).density).max() == 0


@pytest.mark.parametrize("lam", [-1, -0.5, 0.25, 0.5, 1])
def test_hopping_correlators(lam):
    st = make_phi_lambda(lam)
    alg = st.algebra
    assert abs(st.expect(alg.adag(1) * alg.a(2)) - lam / 8) < 1e-12
    assert abs(st.expect(alg.a(1) * alg.adag(2)) + lam / 8) < 1e-12


@pytest.mark.parametrize("lam", [-1, -0.3, 0.7, 1])
def test_product_correlation_formula(lam, rng):
    assert lam1_error(lam, rng, pairs=100) < 1e-10


def test_sum_of_both_orderings(rng):
    st = make_phi_lambda(0.6)
    alg = st.algebra
    for _ in range(20):
        A1 = alg.element(np.tensordot(rng.normal(size=4), basis_stack(alg, (1,))[1], 1))
        A2 = alg.element(np.tensordot(rng.normal(size=4), basis_stack(alg, (2,))[1], 1))
        tau = lambda X: np.trace(X.matrix) / 4
        lhs = st.expect(A1 * A2) + st.expect(A2 * A1)
        assert abs(lhs - 2 * tau(grade_split(A1)[0]) * tau(grade_split(A2)[0])) < 1e-12


def test_hopping_operator_is_self_adjoint_contraction():
    alg = FermionAlgebra((1, 2))
    K = hopping_operator(alg.a(1), alg.a(2))
    assert K.allclose(K.dag) and K.norm() <= 1 + 1e-12


def test_phi_lambda_custom_K():
    st = make_phi_lambda(0.8, K1="(a1 + ad1)/2", K2="0.5j*a2 - 0.5j*ad2")
    assert st.is_even
    alg = st.algebra
    K = hopping_operator(parse_operator("(a1 + ad1)/2", alg), parse_operator("0.5j*a2 - 0.5j*ad2", alg))
    assert np.abs(st.density - (np.eye(4) + 0.8 * K.matrix) / 4).max() < 1e-15


@pytest.mark.parametrize(
    "kwargs",
    [
        {"lam": 1.5},
        {"lam": float("nan")},
        {"lam": 0.5, "K1": "n1"},
        {"lam": 0.5, "K1": "a2"},
        {"lam": 0.5, "K2": "2*a2"},
        {"lam": 0.5, "K1": "a1 + 1"},
    ],
)
def test_phi_lambda_rejects_bad_parameters(kwargs):
    with pytest.raises(StateError):
        make_phi_lambda(**kwargs)


def test_expression_parser():
    alg = FermionAlgebra((1, 2))
    assert parse_operator("ad1*a2", alg).allclose(alg.adag(1) * alg.a(2))
    assert parse_operator("a(1) - (2+1j)*ad(2)", alg).allclose(alg.a(1) - (2 + 1j) * alg.adag(2))
    assert parse_operator("-n2 + 3", alg).allclose(3 - alg.number(2))
    assert parse_operator("2", alg).allclose(2 * alg.identity())
    for bad in ("a3", "b1", "a1 ** 2", "a1 / a2", "import os", "a1 +"):
        with pytest.raises(ExpressionError):
            parse_operator(bad, alg)


def test_rho_one():
    rho = make_rho_one()
    assert rho.is_even
    assert np.allclose(np.sort(np.linalg.eigvalsh(rho.density)), [0, 0.25, 0.25, 0.5], atol=1e-12)
    alg = rho.algebra
    assert abs(rho.expect(alg.adag(1) * alg.a(2)) - 0.25) < 1e-12
    dec = rho_one_tensor_decomposition()
    assert len(dec) == 4 and np.allclose(dec.weights, 0.25)
    assert np.abs(dec.reassemble() - rho.density).max() < 1e-12
    assert not any(f.is_even for pair in dec.factors for f in pair)


def test_other_named_states():
    psi = make_psi_plus()
    assert psi.is_pure and psi.is_even
    v = make_varrho()
    assert v.is_pure and not v.is_even
    assert make_tracial().is_even


def test_named_spec():
    assert NamedStateSpec("varrho").name == "varrho_asym"
    st = make_named("phi_lambda", **{"lambda": 0.5})
    assert np.allclose(st.density, make_phi_lambda(0.5).density)
    with pytest.raises(StateError):
        NamedStateSpec("nope")
    with pytest.raises(StateError):
        make_named("rho_one", lam=1)
    with pytest.raises(StateError):
        make_named("phi_lambda")
    with pytest.raises(StateError):
        make_named("phi_lambda", **{"lambda": 0.1, "mu": 2})
