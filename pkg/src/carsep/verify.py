"""Invariant suite run by ``carsep verify``.

Every check is a module-level function taking a seed and returning
``(passed, detail)``; :data:`CHECKS` is the traceability table from check
name to the property it covers.
"""

from __future__ import annotations

import itertools
import json
import os
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from .car_algebra import (
    FermionAlgebra,
    Partition,
    basis_stack,
    commutant_embed,
    gauge,
    grade_split,
    parity_unitary,
    theta,
)
from .entanglement import RoofOptions, decomposition_cost, eof_tensor, roof_E_avr, roof_E_k, roof_E_T
from .named_states import DEFAULT_PARTITION, make_phi_lambda, make_rho_one, rho_one_tensor_decomposition
from .scans import run_ordered
from .separability import (
    CAR,
    car_separability,
    even_pure_refinement,
    hopping_witness,
    ppt_check,
    random_car_separable,
    verify_separable_decomposition,
)
from .state_kit import (
    NoProductExtension,
    QuantumState,
    product_extension,
    random_density,
    random_even_pure_vector,
    random_pure_vector,
    restrict,
    restrict_commutant,
    tensor_marginals,
    theta_average,
    vector_state,
    von_neumann_entropy,
)
from . import statespec

FAST = RoofOptions(restarts=8, seed=0)


def _rng(seed, tag):
    return np.random.default_rng([seed, tag])


def _random_element(alg: FermionAlgebra, rng):
    m = rng.normal(size=(alg.dim, alg.dim)) + 1j * rng.normal(size=(alg.dim, alg.dim))
    return alg.element(m)


def _random_on(alg, modes, rng):
    _, stack = basis_stack(alg, modes)
    c = rng.normal(size=len(stack)) + 1j * rng.normal(size=len(stack))
    return alg.element(np.tensordot(c, stack, 1))


# -- operator algebra ------------------------------------------------------------


def check_car_relations(seed):
    worst = max(FermionAlgebra(range(1, n + 1)).check_car() for n in range(1, 7))
    return worst <= 1e-12, f"max deviation {worst:.2e} on 1..6 modes"


def check_theta_automorphism(seed):
    rng = _rng(seed, 1)
    alg = FermionAlgebra((1, 2, 3))
    err = 0.0
    for _ in range(20):
        A, B = _random_element(alg, rng), _random_element(alg, rng)
        err = max(
            err,
            np.abs((theta(A * B) - theta(A) * theta(B)).matrix).max(),
            np.abs((theta(A.dag) - theta(A).dag).matrix).max(),
            np.abs((theta(theta(A)) - A).matrix).max(),
        )
    return err <= 1e-12, f"max deviation {err:.2e}"


def check_gauge_automorphism(seed):
    rng = _rng(seed, 2)
    alg = FermionAlgebra((1, 2, 3))
    err = 0.0
    for angle in rng.uniform(0, 2 * np.pi, 5):
        A, B = _random_element(alg, rng), _random_element(alg, rng)
        err = max(
            err,
            np.abs((gauge(A * B, angle) - gauge(A, angle) * gauge(B, angle)).matrix).max(),
            np.abs((gauge(A.dag, angle) - gauge(A, angle).dag).matrix).max(),
        )
        err = max(err, np.abs((gauge(A, np.pi) - theta(A)).matrix).max())
    return err <= 1e-12, f"max deviation {err:.2e}"


def check_parity_unitary(seed):
    alg = FermionAlgebra((1, 2, 3))
    I, rest = (1, 2), (3,)
    v = parity_unitary(alg, I)
    err = 0.0
    for E in basis_stack(alg, I)[1]:
        E = alg.element(E)
        err = max(err, np.abs((v * E * v.dag - theta(E)).matrix).max())
    for E in basis_stack(alg, rest, "even")[1]:
        E = alg.element(E)
        err = max(err, np.abs((v * E * v.dag - E).matrix).max())
    return err <= 1e-12, f"max deviation {err:.2e}"


def check_commutant_generates(seed):
    detail = []
    ok = True
    for P in (Partition((1,), (2,)), Partition((1, 2), (3,)), Partition((1,), (2, 3))):
        alg = P.algebra
        _, BI = basis_stack(alg, P.I)
        _, BJ = basis_stack(alg, P.J)
        prods = [(A @ commutant_embed(alg.element(B), P).matrix).ravel() for A in BI for B in BJ]
        rank = np.linalg.matrix_rank(np.array(prods))
        ok &= rank == 4 ** alg.n_modes
        # every embedded element commutes with A_I
        for A in BI:
            for B in BJ[:8]:
                C = commutant_embed(alg.element(B), P).matrix
                ok &= bool(np.abs(A @ C - C @ A).max() <= 1e-12)
        detail.append(f"{len(P.I)}+{len(P.J)}: rank {rank}")
    return bool(ok), ", ".join(detail)


# -- states ------------------------------------------------------------------


def check_restrict_positive(seed):
    rng = _rng(seed, 3)
    alg = FermionAlgebra((1, 2, 3))
    worst = 0.0
    for _ in range(5):
        st = QuantumState(random_density(alg.dim, rng), alg)
        for k in (1, 2, 3):
            for modes in itertools.combinations(alg.labels, k):
                r = restrict(st, modes)  # constructor validates PSD and trace
                worst = max(worst, abs(np.trace(r.density) - 1), -float(np.linalg.eigvalsh(r.density)[0]))
    return worst <= 1e-10, f"worst trace/PSD defect {worst:.2e}"


def check_restrict_pairing(seed):
    rng = _rng(seed, 4)
    alg = FermionAlgebra((1, 2, 3))
    st = QuantumState(random_density(alg.dim, rng), alg)
    err = 0.0
    for modes in ((1,), (2,), (3,), (1, 3), (2, 3)):
        sub = restrict(st, modes)
        _, big = basis_stack(alg, modes)
        _, small = basis_stack(sub.algebra, sub.labels)
        for Eb, Es in zip(big, small):
            err = max(err, abs(np.trace(sub.density @ Es) - np.trace(st.density @ Eb)))
    # leading block agrees with partial trace
    rI, _ = tensor_marginals(st, Partition((1, 2), (3,)))
    err = max(err, np.abs(restrict(st, (1, 2)).density - rI).max())
    return err <= 1e-10, f"max deviation {err:.2e}"


def check_product_extension_error(seed):
    rng = _rng(seed, 5)
    a = vector_state(FermionAlgebra((1,)), random_pure_vector(2, rng))
    b = vector_state(FermionAlgebra((2,)), random_pure_vector(2, rng))
    try:
        product_extension(a, b)
    except NoProductExtension:
        return True, "two noneven pure marginals refused"
    return False, "extension built for two noneven marginals"


def check_entropy_symmetry(seed):
    rng = _rng(seed, 6)
    err = 0.0
    for P in (Partition((1,), (2,)), Partition((1, 2), (3, 4))):
        for _ in range(10):
            st = vector_state(P.algebra, random_even_pure_vector(P.algebra, rng))
            vals = [
                von_neumann_entropy(restrict(st, P.I)),
                von_neumann_entropy(restrict(st, P.J)),
                von_neumann_entropy(restrict_commutant(st, P, "I")),
                von_neumann_entropy(restrict_commutant(st, P, "J")),
            ]
            err = max(err, max(vals) - min(vals))
    return err <= 1e-8, f"max spread {err:.2e}"


def check_theta_average_commutes(seed):
    rng = _rng(seed, 7)
    alg = FermionAlgebra((1, 2, 3))
    err = 0.0
    for _ in range(5):
        st = QuantumState(random_density(alg.dim, rng), alg)
        for modes in ((1,), (2, 3), (1, 3)):
            lhs = restrict(theta_average(st), modes).density
            rhs = theta_average(restrict(st, modes)).density
            err = max(err, np.abs(lhs - rhs).max())
    return err <= 1e-12, f"max deviation {err:.2e}"


# -- roofs ---------------------------------------------------------------------


def _random_state(P, rng, even):
    from .state_kit import random_even_density

    alg = P.algebra
    return QuantumState(random_even_density(alg, rng) if even else random_density(alg.dim, rng), alg)


def check_half_inequality(seed):
    rng = _rng(seed, 8)
    P, tol = DEFAULT_PARTITION, 1e-3
    worst = np.inf
    for even in (True, False):
        for _ in range(3):
            st = _random_state(P, rng, even)
            avr = roof_E_avr(st, P, FAST).value
            mean = 0.5 * (eof_tensor(st, P, "I", FAST).value + eof_tensor(st, P, "J", FAST).value)
            worst = min(worst, avr + tol - mean)
    return worst >= 0, f"min slack {worst - tol:.3e}"


def check_ET_inequalities(seed):
    rng = _rng(seed, 9)
    tol = 1e-3
    worst = np.inf
    for P, n in ((DEFAULT_PARTITION, 3), (Partition((1, 2), (3,)), 1)):
        for _ in range(n):
            st = _random_state(P, rng, True)
            et = roof_E_T(st, P, FAST).value
            worst = min(worst, et + tol - roof_E_avr(st, P, FAST).value, et + tol - eof_tensor(st, P, "I", FAST).value)
    return worst >= 0, f"min slack {worst - tol:.3e}"


def check_restart_monotone(seed):
    rng = _rng(seed, 10)
    st = _random_state(DEFAULT_PARTITION, rng, False)
    vals = [roof_E_avr(st, DEFAULT_PARTITION, RoofOptions(restarts=r, seed=seed, early_stop=False)).value for r in (1, 2, 4, 8)]
    ok = all(b <= a for a, b in zip(vals, vals[1:]))
    return ok, "values " + ", ".join(f"{v:.6f}" for v in vals)


def check_pure_consistency(seed):
    rng = _rng(seed, 11)
    P = Partition((1,), (2, 3))
    err = 0.0
    for _ in range(3):
        st = vector_state(P.algebra, random_pure_vector(P.algebra.dim, rng))
        for k in (0.0, 0.5, 1.0):
            closed = roof_E_k(st, P, k).value
            opt = roof_E_k(st, P, k, RoofOptions(restarts=2, force_optimizer=True)).value
            err = max(err, abs(closed - opt))
    return err <= 1e-12, f"max deviation {err:.2e}"


def check_roof_convexity(seed):
    rng = _rng(seed, 12)
    P, tol = DEFAULT_PARTITION, 1e-3
    a, b = _random_state(P, rng, False), _random_state(P, rng, False)
    p = 0.3
    mix = QuantumState(p * a.density + (1 - p) * b.density, P.algebra)
    lhs = roof_E_avr(mix, P, FAST).value
    rhs = p * roof_E_avr(a, P, FAST).value + (1 - p) * roof_E_avr(b, P, FAST).value
    return lhs <= rhs + tol, f"E(mix) - mixture = {lhs - rhs:.3e}"


def check_ET_paths(seed):
    rng = _rng(seed, 13)
    err = 0.0
    for _ in range(2):
        st = _random_state(DEFAULT_PARTITION, rng, True)
        blocks = roof_E_T(st, DEFAULT_PARTITION, FAST)
        direct = roof_E_T(st, DEFAULT_PARTITION, FAST, method="direct")
        err = max(err, abs(blocks.value - direct.value), abs(blocks.value - blocks.cross_check))
    return err <= 1e-3, f"max disagreement {err:.2e}"


# -- separability ----------------------------------------------------------------


def check_witness_separable(seed):
    rng = _rng(seed, 14)
    worst = 0.0
    for P in (Partition((1,), (2,)), Partition((1, 2), (3,))):
        for even in (True, False):
            for _ in range(15):
                st, _ = random_car_separable(P, rng, even=even)
                worst = max(worst, hopping_witness(st, P).max_violation)
    return worst < 1e-10, f"max violation {worst:.2e} over 60 states"


def check_witness_soundness(seed):
    P = DEFAULT_PARTITION
    ok = True
    states = [make_phi_lambda(lam) for lam in (-1, -0.5, 0.5, 1)] + [make_rho_one()]
    for st in states:
        if hopping_witness(st, P).verdict != "nonseparable_CAR":
            ok = False
        if car_separability(st, P, FAST).verdict == "separable":
            ok = False
    dec = rho_one_tensor_decomposition()
    ok &= not verify_separable_decomposition(make_rho_one(), dec, CAR, P).ok
    return bool(ok), "no separable certificate accepted for witnessed states"


def check_ppt_pure(seed):
    rng = _rng(seed, 15)
    P = DEFAULT_PARTITION
    ok = True
    for i in range(20):
        if i % 2:
            v = np.kron(random_pure_vector(2, rng), random_pure_vector(2, rng))
        else:
            v = random_pure_vector(4, rng)
        st = vector_state(P.algebra, v)
        entangled = von_neumann_entropy(tensor_marginals(st, P)[0]) > 1e-9
        ok &= (ppt_check(st, P).verdict == "nonseparable") == entangled
    return bool(ok), "PPT agrees with Schmidt rank on 20 pure states"


def check_even_refinement(seed):
    rng = _rng(seed, 16)
    ok = True
    worst = 0.0
    for P in (Partition((1,), (2,)), Partition((1, 2), (3,))):
        for _ in range(3):
            st, dec = random_car_separable(P, rng, even=True)
            ref = even_pure_refinement(dec, P)
            chk = verify_separable_decomposition(st, ref, CAR, P)
            ok &= chk.ok and ref.all_even and ref.all_pure
            worst = max(worst, chk.residual)
    return bool(ok), f"max residual {worst:.2e}"


def check_gauge_covariance(seed):
    P = DEFAULT_PARTITION
    err = 0.0
    for lam in (-1, 0.5, 1):
        st = make_phi_lambda(lam)
        base = hopping_witness(st, P).max_violation
        for angle in (np.pi / 4, np.pi / 2):
            moved = QuantumState(gauge(P.algebra.element(st.density), angle).matrix, P.algebra)
            err = max(err, abs(hopping_witness(moved, P).max_violation - base))
    return err <= 1e-12, f"max change {err:.2e}"


# -- named states and tooling --------------------------------------------------------


def check_phi_lambda_grid(seed):
    ok = True
    for lam in np.linspace(-1, 1, 21):
        st = make_phi_lambda(lam)
        ok &= st.is_even and abs(np.trace(st.density) - 1) < 1e-12
        ok &= float(np.linalg.eigvalsh(st.density)[0]) >= -1e-12
    return bool(ok), "21 grid points valid and even"


def lam1_error(lam, rng, pairs=100) -> float:
    """Worst deviation from the odd-odd correlation formula over random pairs."""
    P = DEFAULT_PARTITION
    alg = P.algebra
    st = make_phi_lambda(lam)
    K1, K2 = alg.a(1), alg.a(2)

    def tau(X):
        return np.trace(X.matrix) / alg.dim

    err = 0.0
    for _ in range(pairs):
        A1, A2 = _random_on(alg, P.I, rng), _random_on(alg, P.J, rng)
        (A1p, A1m), (A2p, A2m) = grade_split(A1), grade_split(A2)
        c = tau(K1.dag * A1m) * tau(K2 * A2m) - tau(K1 * A1m) * tau(K2.dag * A2m)
        base = tau(A1p) * tau(A2p)
        err = max(err, abs(st.expect(A1 * A2) - (base - lam / 2 * c)), abs(st.expect(A2 * A1) - (base + lam / 2 * c)))
    return float(err)


def check_lam1(seed):
    rng = _rng(seed, 17)
    err = max(lam1_error(lam, rng) for lam in (-1, -0.5, 0.25, 0.5, 1))
    return err <= 1e-10, f"max deviation {err:.2e}"


def check_statespec_roundtrip(seed):
    rng = _rng(seed, 18)
    alg = FermionAlgebra((1, 2, 3))
    st = QuantumState(random_density(alg.dim, rng), alg)
    back = statespec.from_document(json.loads(statespec.dumps(st)))
    exact = np.array_equal(back.density, st.density)
    doc = {"kind": "density", "modes": [1], "matrix": [[["1/3", 0], [0, 0]], [[0, 0], ["2/3", 0]]]}
    again = statespec.from_document(json.loads(statespec.dumps(statespec.from_document(doc))))
    exact &= np.array_equal(again.density, np.diag([1 / 3, 2 / 3]).astype(complex))
    return bool(exact), "write/read reproduces densities bit for bit"


def check_cli_determinism(seed):
    from .cli import main

    with tempfile.TemporaryDirectory() as tmp:
        outs = []
        for i in range(2):
            path = os.path.join(tmp, f"run{i}.json")
            code = main(["analyze", "rho_one", "--restarts", "4", "--seed", str(seed), "--out", path, "--quiet"])
            if code not in (0, 1):
                return False, f"analyze exited with {code}"
            with open(path, "rb") as fh:
                outs.append(fh.read())
    return outs[0] == outs[1], "identical report bytes" if outs[0] == outs[1] else "reports differ"


@dataclass(frozen=True)
class Check:
    name: str
    module: str
    covers: str
    fn: object


CHECKS = (
    Check("car_relations", "car_algebra", "anticommutation relations on 1..6 modes", check_car_relations),
    Check("theta_automorphism", "car_algebra", "grading is an involutive *-automorphism", check_theta_automorphism),
    Check("gauge_automorphism", "car_algebra", "gauge maps are *-automorphisms; angle pi gives the grading", check_gauge_automorphism),
    Check("parity_unitary", "car_algebra", "Ad(v_I) is the grading on A_I and trivial on the even complement", check_parity_unitary),
    Check("commutant_generates", "car_algebra", "A_I and the embedded commutant span the full matrix algebra", check_commutant_generates),
    Check("restrict_positive", "state_kit", "restrictions to all subsets are states", check_restrict_positive),
    Check("restrict_pairing", "state_kit", "restriction reproduces expectations on every monomial; matches partial trace", check_restrict_pairing),
    Check("product_extension_error", "state_kit", "two noneven pure marginals have no product extension", check_product_extension_error),
    Check("entropy_symmetry", "state_kit", "four marginal entropies of even pure states coincide", check_entropy_symmetry),
    Check("theta_average_commutes", "state_kit", "Theta-averaging commutes with restriction", check_theta_average_commutes),
    Check("half_inequality", "entanglement", "E_avr >= mean of the two one-sided roofs (within 1e-3)", check_half_inequality),
    Check("ET_inequalities", "entanglement", "E_T >= E_avr and E_T >= E_I (within 1e-3)", check_ET_inequalities),
    Check("restart_monotone", "entanglement", "more restarts never raise the roof value", check_restart_monotone),
    Check("pure_consistency", "entanglement", "optimizer and closed form agree on pure states", check_pure_consistency),
    Check("roof_convexity", "entanglement", "roof of a mixture <= mixture of roofs (within 1e-3)", check_roof_convexity),
    Check("ET_paths", "entanglement", "parity-block and direct E_T paths agree (within 1e-3)", check_ET_paths),
    Check("witness_separable", "separability", "CAR-separable states have no odd-odd correlations", check_witness_separable),
    Check("witness_soundness", "separability", "witnessed states never get an accepted separable certificate", check_witness_soundness),
    Check("ppt_pure", "separability", "PPT on pure states matches the Schmidt-rank criterion", check_ppt_pure),
    Check("even_refinement", "separability", "even separable states refine to pure even product terms", check_even_refinement),
    Check("gauge_covariance", "separability", "witness value is gauge invariant", check_gauge_covariance),
    Check("phi_lambda_grid", "named_states", "phi_lambda is a valid even state on a 21-point grid", check_phi_lambda_grid),
    Check("lam1_correlations", "named_states", "phi_lambda product correlations on random pairs", check_lam1),
    Check("statespec_roundtrip", "statespec", "state documents round-trip exactly", check_statespec_roundtrip),
    Check("cli_determinism", "cli", "identical inputs give byte-identical reports", check_cli_determinism),
)


def _run_one(args):
    name, seed = args
    check = next(c for c in CHECKS if c.name == name)
    t0 = time.perf_counter()
    try:
        ok, detail = check.fn(seed)
    except Exception as exc:  # a crash is a failure, reported not raised
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return {"name": name, "module": check.module, "passed": bool(ok), "detail": detail,
            "seconds": round(time.perf_counter() - t0, 3)}


def run_suite(seed: int = 0, workers: int = 1, only: list[str] | None = None) -> list[dict]:
    names = [c.name for c in CHECKS if not only or c.name in only]
    return run_ordered(_run_one, [(n, seed) for n in names], workers)
