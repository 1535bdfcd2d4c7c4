"""Constructors for the standard two-mode example states."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .car_algebra import FermionAlgebra, OperatorElement, Partition, in_subalgebra
from .expr import parse_operator
from .state_kit import Decomposition, QuantumState, StateError, tracial_state, vector_state

NAMES = ("tracial", "rho_one", "phi_lambda", "varrho_asym", "psi_plus")
ALIASES = {"varrho": "varrho_asym", "rho1": "rho_one", "phi": "phi_lambda", "tau": "tracial"}
DEFAULT_PARTITION = Partition((1,), (2,))

NORM_TOL = 1e-12


def _two_modes() -> FermionAlgebra:
    return FermionAlgebra((1, 2))


def _ket(alg: FermionAlgebra, *occupations: str) -> np.ndarray:
    v = np.zeros(alg.dim, dtype=complex)
    for occ in occupations:
        v[int(occ, 2)] = 1.0
    return v


def make_tracial(partition: Partition = DEFAULT_PARTITION) -> QuantumState:
    return tracial_state(partition.algebra)


def psi_plus_vector() -> np.ndarray:
    return _ket(_two_modes(), "01", "10") / np.sqrt(2)


def make_psi_plus() -> QuantumState:
    return vector_state(_two_modes(), psi_plus_vector())


def make_rho_one() -> QuantumState:
    """``(|00><00| + |11><11|)/4 + |Psi+><Psi+|/2`` on modes (1, 2)."""
    alg = _two_modes()
    diag = np.diag(_ket(alg, "00") + _ket(alg, "11")).astype(complex) / 4
    psi = psi_plus_vector()
    return QuantumState(diag + 0.5 * np.outer(psi, psi.conj()), alg)


def rho_one_tensor_decomposition() -> Decomposition:
    """Four equal-weight product terms ``|a_k><a_k| (x) |b_k><b_k|`` giving rho_one.

    ``a_k = b_k`` runs over ``(|0> + s|1>)/sqrt 2`` with ``s = 1, -1, i, -i``.
    The factors live on the one-mode algebras of modes 1 and 2 and combine
    by plain Kronecker product.
    """
    alg = _two_modes()
    A, B = FermionAlgebra((1,)), FermionAlgebra((2,))
    comps, factors = [], []
    for s in (1, -1, 1j, -1j):
        v = np.array([1, s], dtype=complex) / np.sqrt(2)
        a, b = vector_state(A, v), vector_state(B, v)
        comps.append(QuantumState(np.kron(a.density, b.density), alg))
        factors.append((a, b))
    return Decomposition(np.full(4, 0.25), comps, factors, meta={"pairing": "tensor"})


def make_varrho() -> QuantumState:
    """Pure noneven state ``|+> (x) |+>``: pure on mode 1, tracial on mode 2."""
    alg = _two_modes()
    return vector_state(alg, np.full(4, 0.5, dtype=complex))


def _odd_element(spec, alg: FermionAlgebra, side: tuple, name: str) -> OperatorElement:
    K = parse_operator(spec, alg) if isinstance(spec, str) else spec
    if not isinstance(K, OperatorElement):
        raise StateError(f"{name} must be an operator expression")
    if K.algebra != alg:
        raise StateError(f"{name} lives on {K.algebra!r}, expected {alg!r}")
    if K.grade != "odd":
        raise StateError(f"{name} must be odd, got grade {K.grade!r}")
    if not in_subalgebra(K, side):
        raise StateError(f"{name} is not in the algebra of modes {list(side)}")
    if K.norm() > 1 + NORM_TOL:
        raise StateError(f"{name} has operator norm {K.norm():.6g} > 1")
    return K


def hopping_operator(K1: OperatorElement, K2: OperatorElement) -> OperatorElement:
    """``K = (K1^+ K2 - K1 K2^+)/2``."""
    return 0.5 * (K1.dag * K2 - K1 * K2.dag)


def make_phi_lambda(
    lam: float,
    K1="a1",
    K2="a2",
    partition: Partition = DEFAULT_PARTITION,
) -> QuantumState:
    """State with trace-normalized density ``(1 + lam K)/dim``.

    ``K1`` and ``K2`` are odd elements (or expressions, see
    :func:`carsep.expr.parse_operator`) of the I and J algebras with
    operator norm at most one, and ``|lam| <= 1``.
    """
    lam = float(lam)
    if not np.isfinite(lam) or abs(lam) > 1:
        raise StateError(f"lambda must satisfy |lambda| <= 1, got {lam}")
    alg = partition.algebra
    k1 = _odd_element(K1, alg, partition.I, "K1")
    k2 = _odd_element(K2, alg, partition.J, "K2")
    P = alg.identity() + lam * hopping_operator(k1, k2)
    return QuantumState(P.matrix / alg.dim, alg)


@dataclass(frozen=True)
class NamedStateSpec:
    name: str
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        name = ALIASES.get(self.name, self.name)
        if name not in NAMES:
            raise StateError(f"unknown named state {self.name!r}; choose from {', '.join(NAMES)}")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "parameters", dict(self.parameters))

    def build(self) -> QuantumState:
        p = dict(self.parameters)
        if self.name == "phi_lambda":
            lam = p.pop("lambda", p.pop("lam", None))
            if lam is None:
                raise StateError("phi_lambda needs a 'lambda' parameter")
            K1, K2 = p.pop("K1", "a1"), p.pop("K2", "a2")
            if p:
                raise StateError(f"unexpected parameters {sorted(p)}")
            return make_phi_lambda(lam, K1, K2)
        if p:
            raise StateError(f"{self.name} takes no parameters, got {sorted(p)}")
        return {
            "tracial": make_tracial,
            "rho_one": make_rho_one,
            "varrho_asym": make_varrho,
            "psi_plus": make_psi_plus,
        }[self.name]()


def make_named(name: str, **parameters) -> QuantumState:
    return NamedStateSpec(name, parameters).build()
