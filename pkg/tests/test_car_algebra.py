import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from carsep.car_algebra import (
    AlgebraError,
    FermionAlgebra,
    Partition,
    basis_indices,
    basis_stack,
    commutant_embed,
    expand,
    gauge,
    grade_split,
    in_subalgebra,
    monomial_matrix,
    parity_unitary,
    theta,
)


def random_element(alg, rng):
    return alg.element(rng.normal(size=(alg.dim, alg.dim)) + 1j * rng.normal(size=(alg.dim, alg.dim)))


@pytest.mark.parametrize("n", range(1, 7))
def test_anticommutation_relations(n):
    assert FermionAlgebra(range(n)).check_car() <= 1e-12


def test_occupation_convention():
    alg = FermionAlgebra(("x", "y"))
    # a^+_x on the vacuum gives |10>, the first mode is the leading bit
    vac = np.zeros(4)
    vac[0] = 1
    out = alg.adag("x").matrix @ vac
    assert np.allclose(out, [0, 0, 1, 0])
    # a^+_y a^+_x |00> = -a^+_x a^+_y |00>
    both = alg.adag("y").matrix @ out
    assert np.allclose(both, [0, 0, 0, -1])
    assert np.array_equal(alg.occupations, [[0, 0], [0, 1], [1, 0], [1, 1]])


def test_algebra_validation():
    with pytest.raises(AlgebraError):
        FermionAlgebra([])
    with pytest.raises(AlgebraError):
        FermionAlgebra([1, 1])
    with pytest.raises(AlgebraError):
        FermionAlgebra(range(11))
    FermionAlgebra(range(3), max_modes=3)
    with pytest.raises(AlgebraError):
        FermionAlgebra([1]).position(2)


def test_grades(alg3):
    assert alg3.a(1).grade == "odd"
    assert (alg3.adag(1) * alg3.a(3)).grade == "even"
    assert (alg3.a(1) + alg3.identity()).grade == "mixed"
    assert alg3.zero().grade == "even"


def test_operator_arithmetic(alg3):
    a, b = alg3.a(1), alg3.adag(2)
    assert np.allclose((a * b).matrix, a.matrix @ b.matrix)
    assert (2 * a - a).allclose(a)
    assert (a / 2 + a / 2).allclose(a)
    assert (1 + a - 1).allclose(a)
    assert (a.dag).allclose(alg3.adag(1))
    assert abs(a.norm() - 1) < 1e-12


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), angle=st.floats(0, 2 * np.pi))
def test_theta_and_gauge_are_star_automorphisms(seed, angle):
    rng = np.random.default_rng(seed)
    alg = FermionAlgebra((1, 2, 3))
    A, B = random_element(alg, rng), random_element(alg, rng)
    for f in (theta, lambda X: gauge(X, angle)):
        assert f(A * B).allclose(f(A) * f(B), atol=1e-10)
        assert f(A.dag).allclose(f(A).dag, atol=1e-10)
    assert theta(theta(A)).allclose(A)
    assert gauge(A, np.pi).allclose(theta(A), atol=1e-12)


def test_theta_flips_generators(alg3):
    for m in alg3.labels:
        assert theta(alg3.a(m)).allclose(-alg3.a(m))
    even, odd = grade_split(alg3.a(1) + alg3.number(2))
    assert even.allclose(alg3.number(2)) and odd.allclose(alg3.a(1))


def test_gauge_phases(alg3):
    assert gauge(alg3.adag(2), 0.3).allclose(np.exp(0.3j) * alg3.adag(2))
    assert gauge(alg3.a(2), 0.3).allclose(np.exp(-0.3j) * alg3.a(2))


def test_monomials_orthonormal():
    alg = FermionAlgebra((1, 2, 3))
    _, stack = basis_stack(alg, alg.labels)
    gram = np.einsum("aji,bji->ab", stack.conj(), stack) / alg.dim
    assert np.abs(gram - np.eye(64)).max() < 1e-12


def test_monomial_is_ordered_product(alg3):
    # raw (normal-ordered) factors multiply in mode order
    m = monomial_matrix(alg3, (0, 2), (1, 2), raw=True)
    assert np.allclose(m, (alg3.adag(1) * alg3.a(3)).matrix)
    m = monomial_matrix(alg3, (0, 1, 2), (2, 3, 1), raw=True)
    assert np.allclose(m, (alg3.a(1) * alg3.number(2) * alg3.adag(3)).matrix)


def test_basis_index_filters():
    assert len(basis_indices(2)) == 16
    assert len(basis_indices(2, "odd")) == 8
    assert len(basis_indices(2, "even")) == 8
    with pytest.raises(AlgebraError):
        basis_indices(1, "nope")


def test_subalgebra_membership(alg3):
    assert in_subalgebra(alg3.adag(1) * alg3.a(2), (1, 2))
    assert not in_subalgebra(alg3.a(3), (1, 2))
    # the sign string does not leave the subalgebra
    assert in_subalgebra(alg3.a(3), (3,))
    c = expand(alg3.a(2), (2,))
    assert np.count_nonzero(np.abs(c) > 1e-12) == 1


def test_parity_unitary(alg3):
    v = parity_unitary(alg3, (1, 2))
    for E in basis_stack(alg3, (1, 2))[1]:
        E = alg3.element(E)
        assert (v * E * v.dag).allclose(theta(E))
    for E in basis_stack(alg3, (3,), "even")[1]:
        E = alg3.element(E)
        assert (v * E * v.dag).allclose(E)
    # v_i = 2 n_i - 1
    assert parity_unitary(alg3, (2,)).allclose(2 * alg3.number(2) - 1)
    assert parity_unitary(alg3).allclose(alg3.identity())


def test_partition_parse():
    p = Partition.parse("1,2:3")
    assert p.I == (1, 2) and p.J == (3,) and p.dims == (4, 2)
    assert Partition.parse("1,2") == Partition((1,), (2,))
    with pytest.raises(AlgebraError):
        Partition.parse("1,2,3")
    with pytest.raises(AlgebraError):
        Partition((1,), (1,))
    with pytest.raises(AlgebraError):
        Partition((), (1,))


@pytest.mark.parametrize("text", ["1:2", "1,2:3", "1:2,3", "2:1", "3:1,2"])
def test_commutant_embedding(text):
    P = Partition.parse(text)
    alg = P.algebra
    _, BI = basis_stack(alg, P.I)
    _, BJ = basis_stack(alg, P.J)
    embedded = [commutant_embed(alg.element(B), P).matrix for B in BJ]
    for A in BI:
        for C in embedded:
            assert np.abs(A @ C - C @ A).max() < 1e-12
    prods = np.array([(A @ C).ravel() for A in BI for C in embedded])
    assert np.linalg.matrix_rank(prods) == 4**alg.n_modes
    assert len(P.commutant_basis) == len(BJ)


def test_commutant_embed_rejects_outside(p21):
    with pytest.raises(AlgebraError):
        commutant_embed(p21.algebra.a(1), p21)
