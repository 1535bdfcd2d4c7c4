"""Convex-roof entanglement of formation for bipartite CAR systems.

Every decomposition of a density ``rho = W W^+`` (``W = V_eig sqrt(D)``, rank r)
into m pure components is ``psi_i = W u_i`` for an m x r isometry ``U`` with
rows ``u_i^T``. The roofs below minimize the average marginal entropy over
such isometries by Riemannian gradient descent on the complex Stiefel
manifold, restarting from random isometries and keeping the best value.

All returned values are upper bounds on the infimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .car_algebra import Partition
from .state_kit import (
    Decomposition,
    QuantumState,
    StateError,
    entropy_of_spectrum,
    parity_sectors,
    realize,
)

LOG2 = float(np.log(2.0))
ZERO_THRESHOLD = 1e-6
_LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class RoofOptions:
    """Optimizer settings; results are deterministic for a fixed ``seed``.

    ``max_components`` defaults to rank**2. With ``early_stop`` the restart
    loop ends once ``min_restarts`` have run and the best three agree within
    ``tolerance``; the stopping rule only looks at completed restarts, so
    raising ``restarts`` can never raise the returned value.
    """

    restarts: int = 32
    max_components: int | None = None
    tolerance: float = 1e-3
    seed: int = 0
    max_iter: int = 400
    grad_tol: float = 1e-10
    early_stop: bool = True
    min_restarts: int = 4
    force_optimizer: bool = False


@dataclass(frozen=True, eq=False)
class RoofResult:
    value: float
    best_decomposition: Decomposition
    restarts_used: int
    converged: bool
    gap_estimate: float
    k: float | None = None
    restart_values: tuple = ()
    cross_check: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def numerically_zero(self) -> bool:
        return self.value < ZERO_THRESHOLD


# -- marginal maps -------------------------------------------------------------


def _parity_signs(d: int) -> np.ndarray:
    """(-1)^(occupation number) for the computational basis of a 2^k-dim factor."""
    pop = np.array([bin(b).count("1") for b in range(d)])
    return np.where(pop % 2, -1.0, 1.0)


class _MarginalCost:
    """Batched cost ``sum_s w_s S(psi|_s)`` and its gradient for components psi.

    Components are arrays of shape (m, dI, dJ) in the "I first" representation.
    Side I is the leading tensor factor. Side J is A_J itself (not A_I'):
    its reduced density takes the even block from Tr_I(psi psi^+) and the odd
    block from Tr_I((Z_I x 1) psi psi^+).
    """

    def __init__(self, dims, w_I: float, w_J: float, even_project: bool = False):
        self.dI, self.dJ = dims
        self.w_I, self.w_J = float(w_I), float(w_J)
        self.even_project = even_project
        self.zI = _parity_signs(self.dI)
        pJ = _parity_signs(self.dJ)
        self.maskI = np.outer(self.zI, self.zI) > 0
        self.maskJ = np.outer(pJ, pJ) > 0

    def reduce_I(self, Psi):
        R = np.einsum("mij,mkj->mik", Psi, Psi.conj())
        if self.even_project:
            R = np.where(self.maskI, R, 0)
        return R

    def reduce_J(self, Psi):
        s0 = np.einsum("mij,mik->mjk", Psi, Psi.conj())
        if self.even_project:
            return np.where(self.maskJ, s0, 0)
        s1 = np.einsum("mij,i,mik->mjk", Psi, self.zI, Psi.conj())
        return np.where(self.maskJ, s0, s1)

    def adjoint_I(self, X, Psi):
        if self.even_project:
            X = np.where(self.maskI, X, 0)
        return X @ Psi

    def adjoint_J(self, X, Psi):
        Xp = np.where(self.maskJ, X, 0)
        out = Psi @ Xp.transpose(0, 2, 1)
        if not self.even_project:
            Xm = X - Xp
            out = out + self.zI[None, :, None] * (Psi @ Xm.transpose(0, 2, 1))
        return out

    @staticmethod
    def _entropy_and_log(R):
        lam, vec = np.linalg.eigh(R)
        lam = np.clip(lam, 0.0, None)
        with np.errstate(divide="ignore", invalid="ignore"):
            ent = -np.sum(np.where(lam > 0, lam * np.log(np.maximum(lam, _LOG_FLOOR)), 0.0), axis=1)
        logR = np.einsum("mij,mj,mkj->mik", vec, np.log(np.maximum(lam, _LOG_FLOOR)), vec.conj())
        return ent, logR

    def per_component(self, Psi) -> np.ndarray:
        """Weighted cost of each un-normalized component (entropy times weight)."""
        p = np.einsum("mij,mij->m", Psi.conj(), Psi).real
        plogp = np.where(p > 0, p * np.log(np.maximum(p, _LOG_FLOOR)), 0.0)
        total = np.zeros(len(p))
        for w, reduce in ((self.w_I, self.reduce_I), (self.w_J, self.reduce_J)):
            if w:
                lam = np.linalg.eigvalsh(reduce(Psi))
                lam = np.clip(lam, 0.0, None)
                ent = -np.sum(np.where(lam > 0, lam * np.log(np.maximum(lam, _LOG_FLOOR)), 0.0), axis=1)
                total += w * (ent + plogp)
        return total

    def value_and_grad(self, Psi):
        p = np.einsum("mij,mij->m", Psi.conj(), Psi).real
        logp = np.log(np.maximum(p, _LOG_FLOOR))
        plogp = np.where(p > 0, p * logp, 0.0)
        F = 0.0
        G = np.zeros_like(Psi)
        for w, reduce, adjoint in (
            (self.w_I, self.reduce_I, self.adjoint_I),
            (self.w_J, self.reduce_J, self.adjoint_J),
        ):
            if not w:
                continue
            ent, logR = self._entropy_and_log(reduce(Psi))
            F += w * float(np.sum(ent + plogp))
            G += w * (logp[:, None, None] * Psi - adjoint(logR, Psi))
        return F, G


# -- Stiefel optimization ------------------------------------------------------


def _herm(X):
    return (X + X.conj().T) / 2


def _retract(X):
    u, _, vh = np.linalg.svd(X, full_matrices=False)
    return u @ vh


def _random_isometry(m: int, r: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(m, r)) + 1j * rng.normal(size=(m, r))
    q, rr = np.linalg.qr(g)
    return q * (np.diag(rr) / np.abs(np.diag(rr)))[None, :]


class _RoofProblem:
    def __init__(self, W: np.ndarray, cost: _MarginalCost):
        self.W = W
        self.cost = cost
        self.dim, self.r = W.shape

    def components(self, V) -> np.ndarray:
        """(m, dI, dJ) array of psi_i = W V[i, :]^T."""
        Psi = (self.W @ V.T).T
        return Psi.reshape(V.shape[0], self.cost.dI, self.cost.dJ)

    def evaluate(self, V):
        F, G = self.cost.value_and_grad(self.components(V))
        G = G.reshape(V.shape[0], self.dim)
        # dF = 2 Re tr(Gamma^+ dV) with Gamma[i] = W^+ g_i
        return F, G @ self.W.conj()

    def value(self, V) -> float:
        return float(np.sum(self.cost.per_component(self.components(V))))

    def descend(self, V, opts: RoofOptions):
        F, Gam = self.evaluate(V)
        t = 1.0
        stall = 0
        for _ in range(opts.max_iter):
            xi = Gam - V @ _herm(V.conj().T @ Gam)
            g2 = float(np.vdot(xi, xi).real)
            if g2 < opts.grad_tol**2:
                break
            while True:
                Vn = _retract(V - t * xi)
                Fn, Gn = self.evaluate(Vn)
                if Fn <= F - 2e-4 * t * g2 or t < 1e-14:
                    break
                t *= 0.5
            if Fn > F:
                break
            xin = Gn - Vn @ _herm(Vn.conj().T @ Gn)
            s = Vn - V
            y = xin - xi
            sy = float(np.vdot(s, y).real)
            t = float(np.vdot(s, s).real) / sy if sy > 1e-300 else 2 * t
            t = min(max(t, 1e-6), 1e4)
            stall = stall + 1 if F - Fn < 1e-13 else 0
            V, F, Gam = Vn, Fn, Gn
            if stall >= 5:
                break
        return V, self.value(V)


def _sqrt_factor(rho: np.ndarray, support: np.ndarray | None = None, cutoff: float = 1e-13):
    """``W`` with ``W W^+ = rho`` from the eigendecomposition, dropping null directions."""
    if support is not None:
        sub = rho[np.ix_(support, support)]
        lam, vec = np.linalg.eigh(sub)
        full = np.zeros((rho.shape[0], len(support)), dtype=complex)
        full[support, :] = vec
        vec = full
    else:
        lam, vec = np.linalg.eigh(rho)
    keep = lam > cutoff
    return vec[:, keep] * np.sqrt(lam[keep])[None, :]


def _run_roof(W, cost: _MarginalCost, algebra, opts: RoofOptions):
    problem = _RoofProblem(W, cost)
    r = problem.r
    if r == 1 and not opts.force_optimizer:
        V = np.ones((1, 1), dtype=complex)
        value = problem.value(V)
        return value, problem.components(V), 1, [value]
    m = max(r, opts.max_components or r * r)
    best_val, best_V, values = np.inf, None, []
    for k in range(max(1, opts.restarts)):
        rng = np.random.default_rng([opts.seed, k])
        if k == 0:
            V0 = np.zeros((m, r), dtype=complex)
            V0[:r, :r] = np.eye(r)
        else:
            V0 = _random_isometry(m, r, rng)
        V, val = problem.descend(V0, opts)
        values.append(val)
        if val < best_val:
            best_val, best_V = val, V
        if opts.early_stop and len(values) >= max(3, opts.min_restarts):
            top = sorted(values)[:3]
            if top[2] - top[0] <= opts.tolerance:
                break
    return best_val, problem.components(best_V), len(values), values


def _summary(values, tol):
    vals = sorted(values)
    third = vals[min(2, len(vals) - 1)]
    converged = len(vals) >= 3 and third - vals[0] <= tol or len(vals) == 1
    return converged, float(third - vals[0])


def _decomposition_from_components(algebra, Psi_list) -> Decomposition:
    vecs = np.concatenate([P.reshape(P.shape[0], -1) for P in Psi_list], axis=0).T
    return Decomposition.from_vectors(algebra, vecs, min_weight=1e-18)


def _check_k(k: float):
    if not 0.0 <= k <= 1.0:
        raise ValueError(f"k must lie in [0, 1], got {k}")


def roof_E_k(state: QuantumState, partition: Partition, k: float, options: RoofOptions | None = None) -> RoofResult:
    """Upper bound on the roof of ``k S(.|A_I) + (1-k) S(.|A_J)`` over all decompositions.

    For pure states the value is returned in closed form.
    """
    _check_k(k)
    opts = options or RoofOptions()
    state = realize(state, partition)
    cost = _MarginalCost(partition.dims, k, 1.0 - k)
    W = _sqrt_factor(state.density)
    value, Psi, used, values = _run_roof(W, cost, state.algebra, opts)
    converged, gap = _summary(values, opts.tolerance)
    dec = _decomposition_from_components(state.algebra, [Psi])
    return RoofResult(max(value, 0.0), dec, used, converged, gap, k=k, restart_values=tuple(values))


def roof_E_avr(state: QuantumState, partition: Partition, options: RoofOptions | None = None) -> RoofResult:
    """Averaged entanglement of formation (k = 1/2)."""
    return roof_E_k(state, partition, 0.5, options)


def eof_tensor(state: QuantumState, partition: Partition, side: str = "I", options: RoofOptions | None = None) -> RoofResult:
    """Plain entanglement of formation: k = 1 for side "I", k = 0 for side "J"."""
    if side not in ("I", "J"):
        raise ValueError("side must be 'I' or 'J'")
    return roof_E_k(state, partition, 1.0 if side == "I" else 0.0, options)


def roof_E_T(
    state: QuantumState,
    partition: Partition,
    options: RoofOptions | None = None,
    method: str = "blocks",
) -> RoofResult:
    """Entanglement of formation restricted to even-state decompositions.

    ``method="blocks"`` optimizes pure components inside each total-parity
    block. ``method="direct"`` optimizes over all pure decompositions and
    scores each component by its Theta-average, which ranges over even
    (possibly mixed) decompositions; it is slower and kept as a cross-check.
    """
    if not state.is_even:
        raise StateError("E^T is only defined for even states")
    opts = options or RoofOptions()
    state = realize(state, partition)
    rho = state.density
    if method == "direct":
        cost = _MarginalCost(partition.dims, 1.0, 0.0, even_project=True)
        value, Psi, used, values = _run_roof(_sqrt_factor(rho), cost, state.algebra, opts)
        converged, gap = _summary(values, opts.tolerance)
        comps = _theta_averaged_components(state.algebra, Psi)
        return RoofResult(max(value, 0.0), comps, used, converged, gap, restart_values=tuple(values),
                          meta={"method": "direct"})
    if method != "blocks":
        raise ValueError(f"unknown method {method!r}")

    cost_I = _MarginalCost(partition.dims, 1.0, 0.0)
    cost_J = _MarginalCost(partition.dims, 0.0, 1.0)
    total, blocks, used_max = 0.0, [], 0
    all_converged, gaps, block_values = True, [], []
    for sector in parity_sectors(state.algebra):
        W = _sqrt_factor(rho, support=sector)
        if W.shape[1] == 0:
            continue
        value, Psi, used, values = _run_roof(W, cost_I, state.algebra, opts)
        converged, gap = _summary(values, opts.tolerance)
        total += value
        blocks.append(Psi)
        used_max = max(used_max, used)
        all_converged &= converged
        gaps.append(gap)
        block_values.append(tuple(values))
    cross = float(sum(np.sum(cost_J.per_component(P)) for P in blocks))
    dec = _decomposition_from_components(state.algebra, blocks)
    return RoofResult(
        max(total, 0.0), dec, used_max, all_converged, float(sum(gaps)),
        restart_values=tuple(block_values), cross_check=cross, meta={"method": "blocks"},
    )


def _theta_averaged_components(algebra, Psi) -> Decomposition:
    vecs = Psi.reshape(Psi.shape[0], -1)
    norms = np.einsum("ij,ij->i", vecs.conj(), vecs).real
    n = algebra.total_number
    odd = ((n[:, None] - n[None, :]) % 2).astype(bool)
    weights, comps = [], []
    for v, p in zip(vecs, norms):
        if p <= 1e-18:
            continue
        rho = np.where(odd, 0, np.outer(v, v.conj()) / p)
        comps.append(QuantumState(rho, algebra))
        weights.append(p)
    weights = np.array(weights)
    return Decomposition(weights / weights.sum(), comps)


def decomposition_cost(dec: Decomposition, partition: Partition, k: float) -> float:
    """``sum_i w_i (k S(c_i|A_I) + (1-k) S(c_i|A_J))`` evaluated through restriction."""
    from .state_kit import restrict, von_neumann_entropy

    total = 0.0
    for w, c in zip(dec.weights, dec.components):
        c = realize(c, partition)
        part = 0.0
        if k:
            part += k * von_neumann_entropy(restrict(c, partition.I))
        if k < 1:
            part += (1 - k) * von_neumann_entropy(restrict(c, partition.J))
        total += w * part
    return total


# -- two-qubit oracle ----------------------------------------------------------

_SYSY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))


def _binary_entropy(x: float) -> float:
    return entropy_of_spectrum(np.array([x, 1 - x]))


def concurrence(rho: np.ndarray) -> float:
    """Wootters concurrence of a 4x4 two-qubit density."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError("concurrence needs a 4x4 density")
    lam, vec = np.linalg.eigh(rho)
    sq = vec @ np.diag(np.sqrt(np.clip(lam, 0, None))) @ vec.conj().T
    tilde = _SYSY @ rho.conj() @ _SYSY
    ev = np.linalg.eigvalsh(sq @ tilde @ sq)
    s = np.sort(np.sqrt(np.clip(ev, 0, None)))[::-1]
    return float(max(0.0, s[0] - s[1] - s[2] - s[3]))


def concurrence_oracle(state: QuantumState, partition: Partition | None = None) -> float:
    """Closed-form two-qubit entanglement of formation (nats) for the tensor pair (A_I, A_I')."""
    if state.algebra.n_modes != 2:
        raise ValueError("the concurrence oracle needs exactly two modes")
    partition = partition or Partition((state.labels[0],), (state.labels[1],))
    rho = realize(state, partition).density
    c = concurrence(rho)
    return _binary_entropy((1 + np.sqrt(max(0.0, 1 - c * c))) / 2)
