"""Finite CAR algebras in the Jordan-Klein-Wigner matrix representation.

An n-mode algebra acts on ``(C^2)^{\\otimes n}`` with the first mode as the most
significant tensor factor. ``|0>`` is the empty mode, ``|1>`` the occupied one,
and the k-th annihilator is ``Z x ... x Z x sigma^- x 1 x ... x 1`` with the
sign string over modes preceding k.

Subsystem algebras are addressed by mode labels. Monomial bases use the
per-mode orthonormal factors ``{1, sqrt(2) a^+, sqrt(2) a, 2 a^+ a - 1}``
multiplied in mode order; these are orthonormal for ``<X, Y> = tau(X^+ Y)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, reduce
from numbers import Number
from typing import Iterable, Sequence

import numpy as np

ATOL = 1e-12
MAX_MODES = 10

_I2 = np.eye(2, dtype=complex)
_Z = np.diag([1.0, -1.0]).astype(complex)
_LOWER = np.array([[0, 1], [0, 0]], dtype=complex)
_RAISE = _LOWER.T.copy()
_SQRT2 = np.sqrt(2.0)

# orthonormal per-mode factors: identity, creator, annihilator, local parity v_i
_ONB_FACTORS = (_I2, _SQRT2 * _RAISE, _SQRT2 * _LOWER, np.diag([-1.0, 1.0]).astype(complex))
# raw normal-ordered factors: 1, a^+, a, a^+ a
_RAW_FACTORS = (_I2, _RAISE, _LOWER, np.diag([0.0, 1.0]).astype(complex))
_ODD_KINDS = frozenset({1, 2})

GRADES = ("all", "even", "odd")


class AlgebraError(ValueError):
    """Raised for malformed algebras, foreign operators or bad mode subsets."""


class FermionAlgebra:
    """CAR algebra on an ordered list of distinct mode labels.

    Parameters
    ----------
    mode_labels : sequence of hashable
        Site identifiers. Their order fixes the Jordan-Klein-Wigner string.
    max_modes : int
        Resource guard on the number of modes (dimension ``2**max_modes``).
    """

    def __init__(self, mode_labels: Iterable, max_modes: int = MAX_MODES):
        labels = tuple(mode_labels)
        if not labels:
            raise AlgebraError("an algebra needs at least one mode")
        if len(set(labels)) != len(labels):
            raise AlgebraError(f"duplicate mode labels in {labels!r}")
        if len(labels) > max_modes:
            raise AlgebraError(
                f"{len(labels)} modes exceed the cap of {max_modes} (dim {2 ** max_modes})"
            )
        self.labels = labels
        self.n_modes = len(labels)
        self.dim = 2**self.n_modes
        self._position = {lab: p for p, lab in enumerate(labels)}

        ann = []
        for p in range(self.n_modes):
            factors = [_Z] * p + [_LOWER] + [_I2] * (self.n_modes - p - 1)
            ann.append(reduce(np.kron, factors))
        self.annihilation_ops = tuple(ann)
        self.creation_ops = tuple(m.conj().T for m in ann)

    def __repr__(self) -> str:
        return f"FermionAlgebra({list(self.labels)!r})"

    def __eq__(self, other) -> bool:  # identity of an algebra is its ordered label tuple
        return isinstance(other, FermionAlgebra) and other.labels == self.labels

    def __hash__(self) -> int:
        return hash(("FermionAlgebra", self.labels))

    # -- addressing -----------------------------------------------------
    def position(self, label) -> int:
        try:
            return self._position[label]
        except KeyError:
            raise AlgebraError(f"mode {label!r} not in {self!r}") from None

    def positions(self, modes: Iterable) -> tuple[int, ...]:
        """Positions of ``modes`` sorted in algebra order."""
        pos = sorted({self.position(m) for m in modes})
        return tuple(pos)

    def ordered(self, modes: Iterable) -> tuple:
        """The labels of ``modes`` in algebra order."""
        return tuple(self.labels[p] for p in self.positions(modes))

    @cached_property
    def occupations(self) -> np.ndarray:
        """``occupations[b, p]`` is the occupation of mode position p in basis state b."""
        b = np.arange(self.dim)[:, None]
        shifts = self.n_modes - 1 - np.arange(self.n_modes)[None, :]
        return (b >> shifts) & 1

    @cached_property
    def total_number(self) -> np.ndarray:
        return self.occupations.sum(axis=1)

    # -- elements -------------------------------------------------------
    def element(self, matrix) -> "OperatorElement":
        return OperatorElement(np.asarray(matrix, dtype=complex), self)

    def a(self, label) -> "OperatorElement":
        return self.element(self.annihilation_ops[self.position(label)])

    def adag(self, label) -> "OperatorElement":
        return self.element(self.creation_ops[self.position(label)])

    def number(self, label) -> "OperatorElement":
        p = self.position(label)
        return self.element(self.creation_ops[p] @ self.annihilation_ops[p])

    def identity(self) -> "OperatorElement":
        return self.element(np.eye(self.dim, dtype=complex))

    def zero(self) -> "OperatorElement":
        return self.element(np.zeros((self.dim, self.dim), dtype=complex))

    def check_car(self, atol: float = ATOL) -> float:
        """Largest entrywise deviation from the anticommutation relations."""
        worst = 0.0
        eye = np.eye(self.dim)
        for i, j in itertools.product(range(self.n_modes), repeat=2):
            ai, aj = self.annihilation_ops[i], self.annihilation_ops[j]
            ci = self.creation_ops[i]
            dev = [
                ci @ aj + aj @ ci - (eye if i == j else 0),
                ai @ aj + aj @ ai,
                ci @ self.creation_ops[j] + self.creation_ops[j] @ ci,
            ]
            worst = max(worst, max(np.abs(d).max() for d in dev))
        return worst


def build_algebra(mode_labels: Sequence, max_modes: int = MAX_MODES) -> FermionAlgebra:
    """Construct the CAR algebra on ``mode_labels`` (see :class:`FermionAlgebra`)."""
    return FermionAlgebra(mode_labels, max_modes=max_modes)


@dataclass(frozen=True, eq=False)
class OperatorElement:
    """A matrix in a :class:`FermionAlgebra`, with its parity grade."""

    matrix: np.ndarray
    algebra: FermionAlgebra

    def __post_init__(self):
        d = self.algebra.dim
        if self.matrix.shape != (d, d):
            raise AlgebraError(f"matrix shape {self.matrix.shape} does not match dim {d}")

    @cached_property
    def grade(self) -> str:
        """``"even"``, ``"odd"`` or ``"mixed"``; the zero operator counts as even."""
        mask = _odd_mask(self.algebra)
        odd_weight = np.abs(self.matrix[mask]).max(initial=0.0)
        even_weight = np.abs(self.matrix[~mask]).max(initial=0.0)
        if odd_weight <= ATOL:
            return "even"
        if even_weight <= ATOL:
            return "odd"
        return "mixed"

    @property
    def dag(self) -> "OperatorElement":
        return OperatorElement(self.matrix.conj().T, self.algebra)

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, OperatorElement):
            if other.algebra != self.algebra:
                raise AlgebraError("operators belong to different algebras")
            return other.matrix
        if isinstance(other, Number):
            return other * np.eye(self.algebra.dim)
        return NotImplemented

    def __add__(self, other):
        m = self._coerce(other)
        if m is NotImplemented:
            return m
        return OperatorElement(self.matrix + m, self.algebra)

    __radd__ = __add__

    def __sub__(self, other):
        m = self._coerce(other)
        if m is NotImplemented:
            return m
        return OperatorElement(self.matrix - m, self.algebra)

    def __rsub__(self, other):
        m = self._coerce(other)
        if m is NotImplemented:
            return m
        return OperatorElement(m - self.matrix, self.algebra)

    def __neg__(self):
        return OperatorElement(-self.matrix, self.algebra)

    def __mul__(self, other):
        if isinstance(other, Number):
            return OperatorElement(other * self.matrix, self.algebra)
        m = self._coerce(other)
        if m is NotImplemented:
            return m
        return OperatorElement(self.matrix @ m, self.algebra)

    def __rmul__(self, other):
        if isinstance(other, Number):
            return OperatorElement(other * self.matrix, self.algebra)
        return NotImplemented

    __matmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Number):
            return OperatorElement(self.matrix / other, self.algebra)
        return NotImplemented

    def norm(self) -> float:
        """Operator (spectral) norm."""
        return float(np.linalg.norm(self.matrix, 2))

    def allclose(self, other, atol: float = ATOL) -> bool:
        m = self._coerce(other)
        return bool(np.abs(self.matrix - m).max() <= atol)


def _odd_mask(alg: FermionAlgebra) -> np.ndarray:
    """Entries (b, b') whose total-occupation parity differs: the odd part's support."""
    n = alg.total_number
    return ((n[:, None] - n[None, :]) % 2).astype(bool)


# -- structural maps ---------------------------------------------------------


def theta(A: OperatorElement) -> OperatorElement:
    """Even-odd grading automorphism: flips the sign of every generator."""
    mask = _odd_mask(A.algebra)
    return OperatorElement(np.where(mask, -A.matrix, A.matrix), A.algebra)


def gauge(A: OperatorElement, angle: float) -> OperatorElement:
    """U(1) gauge automorphism ``a^+ -> e^{i angle} a^+``, implemented as Ad(exp(i angle N))."""
    n = A.algebra.total_number
    phase = np.exp(1j * angle * (n[:, None] - n[None, :]))
    return OperatorElement(A.matrix * phase, A.algebra)


def parity_unitary(alg: FermionAlgebra, modes: Iterable = ()) -> OperatorElement:
    """``v_I = prod_{i in I} (a_i^+ a_i - a_i a_i^+)``; identity for empty I.

    Note ``v_i = 2 n_i - 1`` has eigenvalue +1 on the occupied state, so ``v_I``
    equals ``(-1)^{|I|} (-1)^{N_I}``.
    """
    pos = list(alg.positions(modes))
    occ = alg.occupations[:, pos]
    diag = np.prod(2 * occ - 1, axis=1) if pos else np.ones(alg.dim)
    return alg.element(np.diag(diag.astype(complex)))


def grade_split(A: OperatorElement) -> tuple[OperatorElement, OperatorElement]:
    """Return ``((A + theta(A))/2, (A - theta(A))/2)``."""
    mask = _odd_mask(A.algebra)
    even = np.where(mask, 0, A.matrix)
    odd = np.where(mask, A.matrix, 0)
    return OperatorElement(even, A.algebra), OperatorElement(odd, A.algebra)


# -- monomial bases ----------------------------------------------------------


def basis_indices(k: int, grade_filter: str = "all") -> list[tuple[int, ...]]:
    """Multi-indices in {0,1,2,3}^k (0: 1, 1: creator, 2: annihilator, 3: parity/number)."""
    if grade_filter not in GRADES:
        raise AlgebraError(f"grade_filter must be one of {GRADES}, got {grade_filter!r}")
    out = []
    for idx in itertools.product(range(4), repeat=k):
        odd = sum(i in _ODD_KINDS for i in idx) % 2
        if grade_filter == "all" or (grade_filter == "odd") == bool(odd):
            out.append(idx)
    return out


def is_odd_index(idx: Sequence[int]) -> bool:
    return sum(i in _ODD_KINDS for i in idx) % 2 == 1


def monomial_matrix(
    alg: FermionAlgebra, positions: Sequence[int], idx: Sequence[int], raw: bool = False
) -> np.ndarray:
    """Ordered product over ``positions`` of the per-mode factors chosen by ``idx``.

    Built directly as a Kronecker product: the factor at position j is the local
    operator times ``Z^m`` where m counts odd factors at later positions.
    """
    factors = _RAW_FACTORS if raw else _ONB_FACTORS
    local = [_I2] * alg.n_modes
    kinds = dict(zip(positions, idx))
    later_odd = 0
    for p in range(alg.n_modes - 1, -1, -1):
        kind = kinds.get(p, 0)
        op = factors[kind]
        if later_odd % 2:
            op = op @ _Z
        local[p] = op
        if kind in _ODD_KINDS:
            later_odd += 1
    return reduce(np.kron, local)


def basis_stack(
    alg: FermionAlgebra, modes: Iterable, grade_filter: str = "all"
) -> tuple[list[tuple[int, ...]], np.ndarray]:
    """Multi-indices and the (count, dim, dim) stack of orthonormal monomials on ``modes``."""
    pos = alg.positions(modes)
    idxs = basis_indices(len(pos), grade_filter)
    if not idxs:
        return idxs, np.zeros((0, alg.dim, alg.dim), dtype=complex)
    stack = np.stack([monomial_matrix(alg, pos, idx) for idx in idxs])
    return idxs, stack


def monomial_basis(
    alg: FermionAlgebra, modes: Iterable, grade_filter: str = "all"
) -> list[OperatorElement]:
    """Orthonormal monomial basis (under ``tau(X^+ Y)``) of the subalgebra on ``modes``."""
    _, stack = basis_stack(alg, modes, grade_filter)
    return [OperatorElement(m, alg) for m in stack]


def expand(A: OperatorElement, modes: Iterable) -> np.ndarray:
    """Coefficients of the orthogonal projection of A onto the subalgebra on ``modes``."""
    _, stack = basis_stack(A.algebra, modes)
    return np.einsum("aji,ji->a", stack.conj(), A.matrix) / A.algebra.dim


def in_subalgebra(A: OperatorElement, modes: Iterable, atol: float = ATOL) -> bool:
    _, stack = basis_stack(A.algebra, modes)
    coeffs = np.einsum("aji,ji->a", stack.conj(), A.matrix) / A.algebra.dim
    residual = A.matrix - np.einsum("a,aij->ij", coeffs, stack)
    return bool(np.abs(residual).max(initial=0.0) <= atol * max(1.0, np.abs(A.matrix).max()))


# -- bipartitions ------------------------------------------------------------


def _parse_modes(text: str) -> tuple:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        out.append(int(tok) if tok.lstrip("-").isdigit() else tok)
    return tuple(out)


@dataclass(frozen=True)
class Partition:
    """Disjoint mode subsets (I, J) with the ambient algebra ordered "I first, then J".

    With this ordering A_I is the leading tensor factor of the representation
    and its commutant A_I' the trailing one.
    """

    I: tuple
    J: tuple
    max_modes: int = MAX_MODES

    def __post_init__(self):
        object.__setattr__(self, "I", tuple(self.I))
        object.__setattr__(self, "J", tuple(self.J))
        if not self.I or not self.J:
            raise AlgebraError("both sides of a partition must be nonempty")
        if set(self.I) & set(self.J):
            raise AlgebraError(f"I={self.I} and J={self.J} overlap")

    @classmethod
    def parse(cls, text: str, max_modes: int = MAX_MODES) -> "Partition":
        """Parse ``"1,2:3"`` (I before the colon) or the two-site shorthand ``"1,2"``."""
        if ":" in text:
            left, right = text.split(":", 1)
            return cls(_parse_modes(left), _parse_modes(right), max_modes)
        modes = _parse_modes(text)
        if len(modes) != 2:
            raise AlgebraError(f"cannot read a partition from {text!r}; use 'I:J'")
        return cls((modes[0],), (modes[1],), max_modes)

    @cached_property
    def algebra(self) -> FermionAlgebra:
        return FermionAlgebra(self.I + self.J, max_modes=self.max_modes)

    @property
    def dims(self) -> tuple[int, int]:
        return 2 ** len(self.I), 2 ** len(self.J)

    @property
    def labels(self) -> tuple:
        return self.I + self.J

    @cached_property
    def commutant_basis(self) -> list[OperatorElement]:
        """Orthonormal basis of A_I' obtained by embedding the monomial basis of A_J."""
        return [commutant_embed(B, self) for B in monomial_basis(self.algebra, self.J)]


def commutant_embed(B: OperatorElement, partition: Partition) -> OperatorElement:
    """Map ``B in A_J`` to ``B_+ + v_I B_-``, an element of the commutant A_I'."""
    if B.algebra != partition.algebra:
        raise AlgebraError("B must live in the partition's ambient algebra")
    if not in_subalgebra(B, partition.J):
        raise AlgebraError("B is not an element of A_J")
    even, odd = grade_split(B)
    v = parity_unitary(partition.algebra, partition.I)
    return even + v * odd
