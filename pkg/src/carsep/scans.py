"""Batch computations over parameter grids and seeded random states.

Each task depends only on its own inputs and seed, so results are the same
whether run serially or in a process pool; outputs follow input order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .car_algebra import Partition
from .entanglement import RoofOptions, eof_tensor, roof_E_avr, roof_E_T
from .named_states import DEFAULT_PARTITION, make_phi_lambda
from .separability import hopping_witness, ppt_check
from .state_kit import QuantumState, random_density, random_even_density

INEQUALITY_TOL = 1e-3


def run_ordered(fn, tasks, workers: int = 1) -> list:
    """``[fn(t) for t in tasks]``, optionally across ``workers`` processes."""
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


@dataclass(frozen=True)
class SweepRow:
    lam: float
    witness: float
    E_T: float
    E_avr: float
    E_I: float
    E_J: float
    ppt_verdict: str
    ppt_min_eigenvalue: float


SWEEP_COLUMNS = tuple(SweepRow.__dataclass_fields__)


def phi_lambda_point(args) -> SweepRow:
    lam, options = args
    partition = DEFAULT_PARTITION
    state = make_phi_lambda(lam)
    ppt = ppt_check(state, partition)
    return SweepRow(
        lam=float(lam),
        witness=hopping_witness(state, partition).max_violation,
        E_T=roof_E_T(state, partition, options).value,
        E_avr=roof_E_avr(state, partition, options).value,
        E_I=eof_tensor(state, partition, "I", options).value,
        E_J=eof_tensor(state, partition, "J", options).value,
        ppt_verdict=ppt.verdict,
        ppt_min_eigenvalue=ppt.certificate["min_eigenvalue"],
    )


def phi_lambda_sweep(start: float, stop: float, steps: int, options: RoofOptions | None = None,
                     workers: int = 1) -> list[SweepRow]:
    options = options or RoofOptions()
    grid = np.linspace(start, stop, steps) if steps > 1 else np.array([start])
    return run_ordered(phi_lambda_point, [(float(x), options) for x in grid], workers)


@dataclass(frozen=True)
class InequalityRecord:
    trial: int
    even: bool
    E_avr: float
    E_I: float
    E_J: float
    E_T: float | None
    half_slack: float  # E_avr - (E_I + E_J)/2
    T_avr_gap: float | None  # E_T - E_avr
    T_I_gap: float | None  # E_T - E_I

    def ok(self, tol: float) -> bool:
        checks = [self.half_slack >= -tol]
        if self.E_T is not None:
            checks += [self.T_avr_gap >= -tol, self.T_I_gap >= -tol]
        return all(checks)


def random_trial_state(partition: Partition, seed: int, trial: int, even: bool) -> QuantumState:
    rng = np.random.default_rng([seed, trial, int(even)])
    alg = partition.algebra
    rho = random_even_density(alg, rng) if even else random_density(alg.dim, rng)
    return QuantumState(rho, alg)


def inequality_trial(args) -> InequalityRecord:
    partition, seed, trial, even, options = args
    state = random_trial_state(partition, seed, trial, even)
    avr = roof_E_avr(state, partition, options).value
    e_i = eof_tensor(state, partition, "I", options).value
    e_j = eof_tensor(state, partition, "J", options).value
    e_t = roof_E_T(state, partition, options).value if even else None
    return InequalityRecord(
        trial=trial, even=even, E_avr=avr, E_I=e_i, E_J=e_j, E_T=e_t,
        half_slack=avr - 0.5 * (e_i + e_j),
        T_avr_gap=None if e_t is None else e_t - avr,
        T_I_gap=None if e_t is None else e_t - e_i,
    )


def inequality_scan(seed: int, trials: int, partition: Partition = DEFAULT_PARTITION, even: bool = True,
                    options: RoofOptions | None = None, workers: int = 1) -> list[InequalityRecord]:
    options = options or RoofOptions(seed=seed)
    tasks = [(partition, seed, t, even, options) for t in range(trials)]
    return run_ordered(inequality_trial, tasks, workers)


def summarize_scan(records: list[InequalityRecord], tol: float = 2 * INEQUALITY_TOL) -> dict:
    gaps = [r.T_avr_gap for r in records if r.T_avr_gap is not None]
    return {
        "trials": len(records),
        "tolerance": tol,
        "violations": [r.trial for r in records if not r.ok(tol)],
        "min_half_slack": min((r.half_slack for r in records), default=None),
        "min_T_avr_gap": min(gaps, default=None),
        "max_T_avr_gap": max(gaps, default=None),
        "min_T_I_gap": min((r.T_I_gap for r in records if r.T_I_gap is not None), default=None),
    }


def as_row(record) -> dict:
    return asdict(record)
