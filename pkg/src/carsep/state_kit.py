"""States on finite CAR algebras: restriction, product extension, parity tools.

Densities are stored against the matrix trace ``Tr`` of the algebra's
representation, so the tracial state has density ``1/dim``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .car_algebra import (
    MAX_MODES,
    AlgebraError,
    FermionAlgebra,
    OperatorElement,
    Partition,
    basis_indices,
    basis_stack,
    is_odd_index,
    monomial_matrix,
)

PSD_TOL = 1e-10
TRACE_TOL = 1e-10
EVEN_TOL = 1e-10
PURE_TOL = 1e-9


class StateError(ValueError):
    """Raised when a matrix or vector does not describe a valid state."""


class NoProductExtension(StateError):
    """Both marginals are noneven, so no product state extension exists."""


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Density matrix of a state on ``algebra`` (unit matrix trace)."""

    density: np.ndarray
    algebra: FermionAlgebra

    def __post_init__(self):
        rho = np.asarray(self.density, dtype=complex)
        d = self.algebra.dim
        if rho.shape != (d, d):
            raise StateError(f"density shape {rho.shape} does not match dim {d}")
        if np.abs(rho - rho.conj().T).max() > PSD_TOL:
            raise StateError("density is not Hermitian")
        rho = (rho + rho.conj().T) / 2
        tr = np.trace(rho).real
        if abs(tr - 1) > TRACE_TOL:
            raise StateError(f"density has trace {tr!r}, expected 1")
        lo = np.linalg.eigvalsh(rho)[0]
        if lo < -PSD_TOL:
            raise StateError(f"density has negative eigenvalue {lo:.3e}")
        object.__setattr__(self, "density", rho)

    @property
    def labels(self) -> tuple:
        return self.algebra.labels

    def expect(self, A: OperatorElement | np.ndarray) -> complex:
        m = A.matrix if isinstance(A, OperatorElement) else A
        return complex(np.einsum("ij,ji->", self.density, m))

    @cached_property
    def is_even(self) -> bool:
        return _odd_part_norm(self.density, self.algebra) <= EVEN_TOL

    @cached_property
    def is_pure(self) -> bool:
        return abs(np.einsum("ij,ji->", self.density, self.density).real - 1) <= PURE_TOL

    def __repr__(self) -> str:
        return f"QuantumState(modes={list(self.labels)}, even={self.is_even}, pure={self.is_pure})"


def _odd_part_norm(rho: np.ndarray, alg: FermionAlgebra) -> float:
    n = alg.total_number
    odd = ((n[:, None] - n[None, :]) % 2).astype(bool)
    return float(np.abs(rho[odd]).max(initial=0.0))


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Convex decomposition ``sum_i weights[i] * components[i]``.

    ``factors`` optionally holds, per component, the pair of marginal states
    (on A_I and A_J, or on the two tensor factors) it was built from.
    """

    weights: np.ndarray
    components: tuple[QuantumState, ...]
    factors: tuple[tuple[QuantumState, QuantumState], ...] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", tuple(self.components))
        if self.factors is not None:
            object.__setattr__(self, "factors", tuple(tuple(f) for f in self.factors))
            if len(self.factors) != len(self.components):
                raise StateError("one factor pair per component is required")
        if len(w) != len(self.components):
            raise StateError("weights and components differ in length")
        if np.any(w < 0) or abs(w.sum() - 1) > 1e-9:
            raise StateError("weights must be nonnegative and sum to 1")

    @classmethod
    def from_vectors(cls, algebra: FermionAlgebra, vectors: np.ndarray, min_weight: float = 0.0):
        """Build from un-normalized columns ``psi_i`` with ``sum psi_i psi_i^+ = rho``."""
        vectors = np.asarray(vectors, dtype=complex)
        norms = np.einsum("ij,ij->j", vectors.conj(), vectors).real
        keep = norms > max(min_weight, 1e-300)
        weights, comps = [], []
        for j in np.flatnonzero(keep):
            psi = vectors[:, j] / np.sqrt(norms[j])
            comps.append(QuantumState(np.outer(psi, psi.conj()), algebra))
            weights.append(norms[j])
        weights = np.array(weights)
        return cls(weights / weights.sum(), comps)

    @property
    def all_even(self) -> bool:
        return all(c.is_even for c in self.components)

    @property
    def all_pure(self) -> bool:
        return all(c.is_pure for c in self.components)

    def reassemble(self) -> np.ndarray:
        return sum(w * c.density for w, c in zip(self.weights, self.components))

    def __len__(self) -> int:
        return len(self.components)


# -- constructors ------------------------------------------------------------


def tracial_state(algebra: FermionAlgebra) -> QuantumState:
    return QuantumState(np.eye(algebra.dim, dtype=complex) / algebra.dim, algebra)


def vector_state(algebra: FermionAlgebra, amplitudes, atol: float = 1e-10) -> QuantumState:
    """Pure state ``|psi><psi|``; the vector must already be normalized."""
    psi = np.asarray(amplitudes, dtype=complex).ravel()
    if psi.shape != (algebra.dim,):
        raise StateError(f"vector of length {psi.size} for an algebra of dim {algebra.dim}")
    if abs(np.vdot(psi, psi).real - 1) > atol:
        raise StateError("amplitude vector is not normalized")
    return QuantumState(np.outer(psi, psi.conj()), algebra)


def basis_vector(algebra: FermionAlgebra, occupation: Sequence[int]) -> np.ndarray:
    """Computational basis vector for an occupation pattern in algebra mode order."""
    if len(occupation) != algebra.n_modes:
        raise StateError("occupation pattern length differs from the number of modes")
    index = int("".join(str(int(b)) for b in occupation), 2)
    out = np.zeros(algebra.dim, dtype=complex)
    out[index] = 1
    return out


# -- restriction and transport -----------------------------------------------


def _sub_coefficients(state: QuantumState, modes: Sequence) -> tuple[list, np.ndarray]:
    alg = state.algebra
    idxs, stack = basis_stack(alg, modes)
    values = np.einsum("ij,aji->a", state.density, stack)
    return idxs, values


def _synthesize(alg: FermionAlgebra, idxs: list, values: np.ndarray) -> np.ndarray:
    """Density D with ``Tr(D E_a) = values[a]`` over the orthonormal basis of ``alg``."""
    pos = tuple(range(alg.n_modes))
    rho = np.zeros((alg.dim, alg.dim), dtype=complex)
    for idx, val in zip(idxs, values):
        if val != 0:
            rho += val * monomial_matrix(alg, pos, idx).conj().T
    rho /= alg.dim
    return (rho + rho.conj().T) / 2


def restrict(state: QuantumState, modes: Iterable) -> QuantumState:
    """Restriction of ``state`` to the subalgebra on ``modes``.

    The result lives on a fresh algebra over those labels (in the ambient
    order) and has the same expectation on every element of the subalgebra.
    """
    alg = state.algebra
    modes = list(modes)
    if not set(modes) <= set(alg.labels):
        raise AlgebraError(f"modes {modes} are not a subset of {list(alg.labels)}")
    sub = FermionAlgebra(alg.ordered(modes), max_modes=alg.n_modes)
    idxs, values = _sub_coefficients(state, sub.labels)
    return QuantumState(_synthesize(sub, idxs, values), sub)


def transport(state: QuantumState, target: FermionAlgebra) -> QuantumState:
    """Rewrite ``state`` in an algebra over the same labels with another mode order."""
    src = state.algebra
    if set(target.labels) != set(src.labels):
        raise AlgebraError("transport needs the same set of mode labels")
    if target.labels == src.labels:
        return state
    idxs, values = _sub_coefficients(state, src.labels)
    perm = [src.position(lab) for lab in target.labels]
    new_idxs, new_values = [], []
    for idx, val in zip(idxs, values):
        new_idx = tuple(idx[p] for p in perm)
        odd_src = [p for p in range(src.n_modes) if idx[p] in (1, 2)]
        # sign of reordering the odd factors from source to target order
        order = [target.position(src.labels[p]) for p in odd_src]
        inversions = sum(1 for a in range(len(order)) for b in range(a + 1, len(order)) if order[a] > order[b])
        new_idxs.append(new_idx)
        new_values.append(val * (-1) ** inversions)
    return QuantumState(_synthesize(target, new_idxs, np.array(new_values)), target)


def realize(state: QuantumState, partition: Partition) -> QuantumState:
    """Express ``state`` in the partition's "I first, then J" representation."""
    if set(state.labels) != set(partition.labels):
        raise AlgebraError(
            f"state modes {list(state.labels)} do not match partition {partition.I}|{partition.J}"
        )
    return transport(state, partition.algebra)


def restrict_commutant(state: QuantumState, partition: Partition, side: str = "I") -> QuantumState:
    """Restriction to the commutant of A_side, pulled back to the other side's algebra.

    A_I' is identified with A_J through ``B -> B_+ + v_I B_-`` (and A_J' with
    A_I through the mirrored map), so the returned state lives on the
    opposite subsystem's algebra. Entropies are unaffected by the identification.
    """
    state = realize(state, partition)
    own, other = (partition.I, partition.J) if side == "I" else (partition.J, partition.I)
    alg = state.algebra
    sub = FermionAlgebra(alg.ordered(other), max_modes=alg.n_modes)
    v = np.diag(np.prod(2 * alg.occupations[:, list(alg.positions(own))] - 1, axis=1)).astype(complex)
    idxs, stack = basis_stack(alg, sub.labels)
    values = []
    for idx, E in zip(idxs, stack):
        img = v @ E if is_odd_index(idx) else E
        values.append(np.einsum("ij,ji->", state.density, img))
    return QuantumState(_synthesize(sub, idxs, np.array(values)), sub)


def tensor_marginals(state: QuantumState, partition: Partition) -> tuple[np.ndarray, np.ndarray]:
    """Partial traces in the tensor factorization A_I x A_I': (rho on A_I, rho on A_I')."""
    state = realize(state, partition)
    dI, dJ = partition.dims
    r = state.density.reshape(dI, dJ, dI, dJ)
    return np.einsum("ijkj->ik", r), np.einsum("ijil->jl", r)


# -- product extension -------------------------------------------------------


def product_extension(omega1: QuantumState, omega2: QuantumState, max_modes: int | None = None) -> QuantumState:
    """The state with ``omega(A1 A2) = omega1(A1) omega2(A2)`` on the joint algebra.

    Raises
    ------
    NoProductExtension
        If neither marginal is even.
    """
    if set(omega1.labels) & set(omega2.labels):
        raise AlgebraError("marginal states must live on disjoint modes")
    if not (omega1.is_even or omega2.is_even):
        raise NoProductExtension("no product state extension exists for two noneven states")
    joint = FermionAlgebra(omega1.labels + omega2.labels, max_modes=max_modes or MAX_MODES)
    # with the omega1 modes leading, an odd element of the trailing modes carries
    # the parity string Z_1 of the leading ones, which the second term absorbs
    n2 = omega2.algebra.total_number
    odd2 = ((n2[:, None] - n2[None, :]) % 2).astype(bool)
    rho2 = omega2.density
    z1 = (-1.0) ** omega1.algebra.total_number
    rho = np.kron(omega1.density, np.where(odd2, 0, rho2))
    if omega1.is_even:
        rho += np.kron(z1[:, None] * omega1.density, np.where(odd2, rho2, 0))
    return QuantumState(rho, joint)


def _product_extension_by_coefficients(omega1: QuantumState, omega2: QuantumState) -> np.ndarray:
    """Reference construction: multiply monomial coefficients of the two marginals."""
    joint = FermionAlgebra(omega1.labels + omega2.labels, max_modes=MAX_MODES)
    idx1, val1 = _sub_coefficients(omega1, omega1.labels)
    idx2, val2 = _sub_coefficients(omega2, omega2.labels)
    idxs = [a + b for a in idx1 for b in idx2]
    return _synthesize(joint, idxs, np.outer(val1, val2).ravel())


# -- parity ------------------------------------------------------------------


def theta_average(state: QuantumState) -> QuantumState:
    """``(omega + omega o Theta) / 2``: removes the odd part of the density."""
    alg = state.algebra
    n = alg.total_number
    odd = ((n[:, None] - n[None, :]) % 2).astype(bool)
    return QuantumState(np.where(odd, 0, state.density), alg)


def parity_sectors(alg: FermionAlgebra) -> tuple[np.ndarray, np.ndarray]:
    """Basis indices with even and with odd total occupation."""
    parity = alg.total_number % 2
    return np.flatnonzero(parity == 0), np.flatnonzero(parity == 1)


def parity_blocks(state: QuantumState) -> tuple[float, QuantumState | None, float, QuantumState | None]:
    """Split an even state into its even- and odd-occupation blocks.

    Returns ``(w_even, block_even, w_odd, block_odd)`` with normalized blocks
    (``None`` when the weight vanishes) and ``w_even + w_odd = 1``.
    """
    if not state.is_even:
        raise StateError("parity_blocks needs an even state")
    out = []
    for sector in parity_sectors(state.algebra):
        mask = np.zeros(state.algebra.dim, dtype=bool)
        mask[sector] = True
        block = np.where(np.outer(mask, mask), state.density, 0)
        w = float(np.trace(block).real)
        out.append(w)
        out.append(QuantumState(block / w, state.algebra) if w > 1e-14 else None)
    return tuple(out)


# -- entropy -----------------------------------------------------------------


def entropy_of_spectrum(p: np.ndarray, clip: float = PSD_TOL) -> float:
    p = np.asarray(p, dtype=float)
    if p.size and p.min() < -clip:
        raise StateError(f"eigenvalue {p.min():.3e} is too negative for a density")
    p = p[p > 0]
    return float(-np.sum(p * np.log(p))) + 0.0  # no negative zero


def von_neumann_entropy(state: QuantumState | np.ndarray) -> float:
    """``-Tr(D log D)`` in nats."""
    rho = state.density if isinstance(state, QuantumState) else np.asarray(state)
    return entropy_of_spectrum(np.linalg.eigvalsh(rho))


# -- random states (seeded) --------------------------------------------------


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    g = rng.normal(size=(dim, rank or dim)) + 1j * rng.normal(size=(dim, rank or dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_even_density(alg: FermionAlgebra, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Parity-block-diagonal random density."""
    rho = np.zeros((alg.dim, alg.dim), dtype=complex)
    weights = rng.dirichlet([1.0, 1.0])
    for w, sector in zip(weights, parity_sectors(alg)):
        k = len(sector)
        block = random_density(k, rng, None if rank is None else min(rank, k))
        rho[np.ix_(sector, sector)] = w * block
    return rho


def random_pure_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_even_pure_vector(alg: FermionAlgebra, rng: np.random.Generator, parity: int | None = None) -> np.ndarray:
    sectors = parity_sectors(alg)
    s = sectors[rng.integers(2) if parity is None else parity]
    v = np.zeros(alg.dim, dtype=complex)
    v[s] = random_pure_vector(len(s), rng)
    return v
