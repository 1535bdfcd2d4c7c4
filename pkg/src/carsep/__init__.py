"""Separability of states on finite lattice-fermion (CAR) systems.

The package compares two notions of product structure for a split of modes
into I and J: the CAR pair (A_I, A_J), where local algebras anticommute, and
the tensor pair (A_I, A_I'), where A_I' is the commutant of A_I.
"""

from .car_algebra import FermionAlgebra, OperatorElement, Partition, build_algebra
from .entanglement import RoofOptions, RoofResult, eof_tensor, roof_E_avr, roof_E_k, roof_E_T
from .named_states import NamedStateSpec, make_named, make_phi_lambda, make_rho_one, make_varrho
from .separability import car_separability, hopping_witness, ppt_check, verify_separable_decomposition
from .state_kit import (
    Decomposition,
    NoProductExtension,
    QuantumState,
    product_extension,
    restrict,
    tracial_state,
    vector_state,
    von_neumann_entropy,
)

__version__ = "0.1.0"
