"""Acceptance criteria, one test each, at the stated tolerances and time limits.

Every test prints a single ``[PASS]``/``[FAIL]`` line with the measured
quantities before asserting, so the verdicts show up in ``pytest -v``.
"""

import time

import numpy as np
import pytest

from carsep.car_algebra import FermionAlgebra, Partition
from carsep.entanglement import RoofOptions, concurrence_oracle, eof_tensor, roof_E_avr
from carsep.named_states import (
    DEFAULT_PARTITION,
    make_phi_lambda,
    make_rho_one,
    make_varrho,
    rho_one_tensor_decomposition,
)
from carsep.scans import inequality_scan
from carsep.separability import (
    CAR,
    TENSOR,
    car_implies_tensor_check,
    car_separability,
    hopping_witness,
    ppt_check,
    random_car_separable,
    verify_separable_decomposition,
)
from carsep.state_kit import (
    NoProductExtension,
    QuantumState,
    product_extension,
    random_density,
    random_even_pure_vector,
    restrict,
    restrict_commutant,
    vector_state,
    von_neumann_entropy,
)
from carsep.verify import lam1_error

LOG2 = np.log(2)
P11 = DEFAULT_PARTITION


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail, seconds, limit):
        ok = bool(ok) and seconds < limit
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:>2} {title}: {detail} ({seconds:.1f} s, limit {limit} s)")
        return ok

    return emit


def test_criterion_01_car_relations(report):
    t0 = time.perf_counter()
    dev = max(FermionAlgebra(range(1, n + 1)).check_car() for n in range(1, 7))
    ok = report(1, "CAR relations n=1..6", dev <= 1e-12, f"max deviation {dev:.2e}", time.perf_counter() - t0, 1)
    assert ok


def test_criterion_02_phi_lambda_correlators(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    hop, lam1 = 0.0, 0.0
    for lam in (-1, -0.5, 0.25, 0.5, 1):
        st = make_phi_lambda(lam)
        alg = st.algebra
        hop = max(hop, abs(st.expect(alg.adag(1) * alg.a(2)) - lam / 8), abs(st.expect(alg.a(1) * alg.adag(2)) + lam / 8))
        lam1 = max(lam1, lam1_error(lam, rng, pairs=100))
    ok = hop <= 1e-12 and lam1 <= 1e-10
    ok = report(2, "phi_lambda correlators", ok, f"hopping dev {hop:.2e}, product formula dev {lam1:.2e}",
                time.perf_counter() - t0, 5)
    assert ok


def test_criterion_03_dual_verdicts(report):
    t0 = time.perf_counter()
    worst_ppt, worst_wit, ok = np.inf, 0.0, True
    for lam in np.linspace(-1, 1, 21):
        st = make_phi_lambda(lam)
        ppt = ppt_check(st, P11)
        worst_ppt = min(worst_ppt, ppt.certificate["min_eigenvalue"])
        ok &= ppt.verdict == "separable" and ppt.certificate["min_eigenvalue"] >= -1e-10
        wit = hopping_witness(st, P11)
        worst_wit = max(worst_wit, abs(wit.max_violation - abs(lam) / 8))
        if abs(lam) > 1e-12:
            ok &= wit.verdict == "nonseparable_CAR"
            ok &= car_separability(st, P11).verdict == "nonseparable"
    ok &= worst_wit <= 1e-10
    ok = report(3, "phi_lambda PPT-separable yet CAR-nonseparable", ok,
                f"min PT eigenvalue {worst_ppt:.4f}, witness dev {worst_wit:.2e} on 21 points",
                time.perf_counter() - t0, 5)
    assert ok


def test_criterion_04_rho_one(report):
    t0 = time.perf_counter()
    rho = make_rho_one()
    dec = rho_one_tensor_decomposition()
    resid = float(np.abs(dec.reassemble() - rho.density).max())
    tensor_ok = verify_separable_decomposition(rho, dec, TENSOR, P11, atol=1e-12).ok
    wit = hopping_witness(rho, P11)
    alg = P11.algebra
    at_pair = wit.witness_pair[0].allclose(alg.adag(1)) and wit.witness_pair[1].allclose(alg.a(2))
    refused = 0
    for a, b in dec.factors:
        try:
            product_extension(a, b)
        except NoProductExtension:
            refused += 1
    ok = resid <= 1e-12 and tensor_ok and abs(wit.max_violation - 0.25) <= 1e-12 and at_pair and refused == 4
    ok = report(4, "rho_one", ok, f"reassembly {resid:.2e}, witness {wit.max_violation:.12f} at {wit.pair_labels}, "
                f"{refused}/4 pairs without product extension", time.perf_counter() - t0, 1)
    assert ok


def test_criterion_05_varrho(report):
    t0 = time.perf_counter()
    v = make_varrho()
    s_i = von_neumann_entropy(restrict(v, P11.I))
    s_j = von_neumann_entropy(restrict(v, P11.J))
    avr = roof_E_avr(v, P11).value
    e_i = eof_tensor(v, P11, "I").value
    e_j = eof_tensor(v, P11, "J").value
    entropies_ok = abs(s_i) <= 1e-10 and abs(s_j - LOG2) <= 1e-10
    avr_ok = abs(avr - LOG2 / 2) <= 1e-3
    eof_ok = abs(e_i - LOG2) <= 1e-3 and abs(e_j) <= 1e-3
    detail = (f"entropies ({s_i:.3g}, {s_j:.6f}) {'ok' if entropies_ok else 'off'}; "
              f"E_avr {avr:.6f} {'ok' if avr_ok else 'off'}; "
              f"eof (I, J) = ({e_i:.6f}, {e_j:.6f}) vs expected (log 2, 0) {'ok' if eof_ok else 'off'}")
    ok = report(5, "varrho", entropies_ok and avr_ok and eof_ok, detail, time.perf_counter() - t0, 30)
    assert ok


def test_criterion_06_witness_on_separable(report):
    t0 = time.perf_counter()
    parts = [Partition.parse(t) for t in ("1:2", "1,2:3", "1:2,3", "1,2:3,4", "1,2,3:4,5,6")]
    worst, n = 0.0, 0
    for i in range(500):
        P = parts[i % len(parts)]
        rng = np.random.default_rng([6, i])
        st, _ = random_car_separable(P, rng, even=bool(i % 2))
        worst = max(worst, hopping_witness(st, P).max_violation)
        n += 1
    ok = report(6, "witness vanishes on CAR-separable states", worst < 1e-10,
                f"max violation {worst:.2e} over {n} states (2 to 6 modes)", time.perf_counter() - t0, 60)
    assert ok


def test_criterion_07_round_trip(report):
    t0 = time.perf_counter()
    max_et, certified = 0.0, 0
    for i in range(50):
        P = P11 if i < 40 else Partition((1, 2), (3,))
        st, _ = random_car_separable(P, np.random.default_rng([7, i]), even=True)
        verdict = car_separability(st, P)
        max_et = max(max_et, verdict.details["roof_value"])
        if verdict.verdict == "separable" and verify_separable_decomposition(st, verdict.certificate, CAR, P).ok:
            certified += 1
    min_avr, tested, draw = np.inf, 0, 0
    while tested < 50:
        rng = np.random.default_rng([70, draw])
        draw += 1
        st = QuantumState(random_density(4, rng), P11.algebra)
        if hopping_witness(st, P11).max_violation <= 1e-2:
            continue
        min_avr = min(min_avr, roof_E_avr(st, P11).value)
        tested += 1
    ok = max_et <= 1e-3 and certified == 50 and min_avr >= 1e-3
    ok = report(7, "separable => E_T ~ 0 with certificate; witnessed => E_avr > 0", ok,
                f"max E_T {max_et:.2e}, {certified}/50 certified, min E_avr {min_avr:.4f} on 50 witnessed states",
                time.perf_counter() - t0, 600)
    assert ok


def test_criterion_08_car_implies_tensor(report):
    t0 = time.perf_counter()
    passed, certified, ppt_fail = 0, 0, 0
    for i in range(200):
        st, _ = random_car_separable(P11, np.random.default_rng([8, i]), even=i < 100)
        passed += car_implies_tensor_check(st, P11)
        ppt_fail += ppt_check(st, P11).verdict == "nonseparable"
    ok = passed == 200 and ppt_fail == 0
    ok = report(8, "CAR-separable => tensor-separable", ok,
                f"{passed}/200 checks passed, {ppt_fail} PPT failures (100 even, 100 noneven)",
                time.perf_counter() - t0, 120)
    assert ok


def test_criterion_09_roof_inequalities(report):
    t0 = time.perf_counter()
    tol = 2e-3
    even = inequality_scan(9, 100, P11, even=True)
    noneven = inequality_scan(9, 100, P11, even=False)
    half = min(r.half_slack for r in even + noneven)
    t_avr = min(r.T_avr_gap for r in even)
    t_i = min(r.T_I_gap for r in even)
    ok = half >= -tol and t_avr >= -tol and t_i >= -tol
    ok = report(9, "roof inequalities", ok,
                f"min slacks: half {half:.3e}, E_T-E_avr {t_avr:.3e}, E_T-E_I {t_i:.3e} (tolerance {tol})",
                time.perf_counter() - t0, 600)
    assert ok


def test_criterion_10_concurrence_oracle(report):
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(100):
        rng = np.random.default_rng([10, i])
        st = QuantumState(random_density(4, rng, rank=int(rng.integers(1, 5))), P11.algebra)
        worst = max(worst, abs(eof_tensor(st, P11, "I").value - concurrence_oracle(st, P11)))
    ok = report(10, "roof optimizer vs concurrence formula", worst <= 5e-3,
                f"max |difference| {worst:.2e} nats over 100 states", time.perf_counter() - t0, 300)
    assert ok


def test_criterion_11_entropy_symmetry(report):
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(100):
        P = P11 if i % 2 else Partition((1, 2), (3, 4))
        rng = np.random.default_rng([11, i])
        st = vector_state(P.algebra, random_even_pure_vector(P.algebra, rng))
        vals = [
            von_neumann_entropy(restrict(st, P.I)),
            von_neumann_entropy(restrict(st, P.J)),
            von_neumann_entropy(restrict_commutant(st, P, "I")),
            von_neumann_entropy(restrict_commutant(st, P, "J")),
        ]
        worst = max(worst, max(vals) - min(vals))
    ok = report(11, "entropy symmetry for even pure states", worst <= 1e-8,
                f"max spread {worst:.2e} over 100 states", time.perf_counter() - t0, 10)
    assert ok
