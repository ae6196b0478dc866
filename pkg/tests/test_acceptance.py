"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import random
import time
from fractions import Fraction

import numpy as np

from wienercub.lie import (is_lie_element, lyndon_basis_words, LiePolynomial,
                           pbw_coordinates, pbw_expand, symmetrised_product)
from wienercub.measures import bernoulli_full, gaussian_cubature, verify_moments
from wienercub.sde import (SDEProblem, VectorFieldSpec, convergence_experiment,
                           cubature_tree, gbm_problem, identity_payoff,
                           monte_carlo)
from wienercub.tensor import TensorElement, exp_series, log_series, tensor_product
from wienercub.wiener import (construct_degree3, construct_degree5,
                              expected_signature, expected_signature_coefficient,
                              verify_formula)
from wienercub.words import words_of_graded_degree


def report(number, name, detail):
    print(f"ACCEPTANCE {number} ({name}): PASS — {detail}")


def test_criterion_1_degree3_verification():
    start = time.perf_counter()
    worst = 0.0
    for d in range(1, 6):
        residual = verify_formula(construct_degree3(gaussian_cubature(d, 3))).max_residual
        assert residual <= 1e-12, f"degree-3 d={d} residual {residual:.3e}"
        worst = max(worst, residual)
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"degree-3 verification took {elapsed:.2f}s"
    report(1, "degree-3 verification",
           f"d=1..5 worst residual {worst:.3e}, {elapsed:.2f}s")


def test_criterion_2_degree5_verification():
    start = time.perf_counter()
    worst = 0.0
    for d in (1, 2, 3):
        rule = gaussian_cubature(d, 5)
        for x in (0.0, 0.25, 0.5, 1.0):
            residual = verify_formula(construct_degree5(rule, x)).max_residual
            assert residual <= 1e-10, \
                f"degree-5 d={d} x={x} residual {residual:.3e}"
            worst = max(worst, residual)
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"degree-5 verification took {elapsed:.2f}s"
    report(2, "degree-5 verification",
           f"d=1..3, x in {{0,1/4,1/2,1}}, worst residual {worst:.3e}, "
           f"{elapsed:.2f}s")


def test_criterion_3_degree7_verification(degree7_formula):
    start = time.perf_counter()
    result = verify_formula(degree7_formula)
    elapsed = time.perf_counter() - start
    offenders = [(w, e) for w, _, _, e in result.worst_words if e > 1e-9]
    assert result.max_residual <= 1e-9, \
        f"degree-7 residual {result.max_residual:.3e}; offenders: {offenders}"
    assert result.words_checked == 5632
    assert elapsed < 60.0, f"degree-7 verification took {elapsed:.1f}s"
    report(3, "degree-7 verification",
           f"{result.words_checked} words, max residual "
           f"{result.max_residual:.3e}, {elapsed:.1f}s")


def test_criterion_4_oracle_equivalence():
    one = Fraction(1)
    total = 0
    for d in (1, 2, 3):
        element = expected_signature(d, 8, one)
        assert element.is_exact
        for word in words_of_graded_degree(d, 8):
            assert element.coefficient(word) == \
                expected_signature_coefficient(word, one)
            total += 1
    report(4, "oracle equivalence",
           f"exp-based and block-factorisation coefficients identical on "
           f"{total} words (exact arithmetic)")


def test_criterion_5_moment_checks():
    worst = 0.0
    for d, degree in [(1, 3), (2, 3), (3, 3), (4, 3), (5, 3),
                      (1, 5), (2, 5), (3, 5), (3, 7)]:
        err = verify_moments(gaussian_cubature(d, degree), degree, "gaussian")
        assert err <= 1e-10, f"gaussian rule d={d} degree={degree}: {err:.3e}"
        worst = max(worst, err)
    assert verify_moments(bernoulli_full(4), 5, "bernoulli") == 0
    assert verify_moments(bernoulli_full(3), 9, "bernoulli") == 0
    report(5, "moment checks",
           f"all shipped Gaussian rules ≤ {worst:.3e}; Bernoulli exact")


def test_criterion_6_pbw_machinery():
    rng = random.Random(2024)
    words = [w for w in words_of_graded_degree(3, 6) if w]
    for _ in range(100):
        terms = {w: rng.uniform(-2, 2) for w in words if rng.random() < 0.25}
        element = TensorElement(3, 6, terms)
        back = pbw_expand(pbw_coordinates(element), 3, 6)
        for w in set(element.terms) | set(back.terms):
            gap = abs(element.coefficient(w) - back.coefficient(w))
            assert gap <= 1e-10, f"round trip off by {gap:.3e} at {w}"
    squares = [TensorElement.from_word((i, i), 3, 6) for i in (1, 2, 3)]
    sym = symmetrised_product(squares, 6)
    back = pbw_expand(pbw_coordinates(sym, exact=True), 3, 6)
    assert back == sym

    lyndons = lyndon_basis_words(3, 5)
    for trial in range(3):
        polys = []
        for _ in range(2):
            coords = {w: rng.uniform(-1, 1) for w in lyndons
                      if rng.random() < 0.4}
            polys.append(LiePolynomial.from_lyndon_coordinates(coords, 3))
        product = tensor_product(exp_series(polys[0].expand(5)),
                                 exp_series(polys[1].expand(5)))
        assert is_lie_element(log_series(product), tol=1e-10)
    report(6, "PBW machinery",
           "100 random round trips ≤ 1e-10; symmetrised squares exact; "
           "BCH logarithms pass the Lie test")


def test_criterion_7_convergence_orders(degree7_formula):
    start = time.perf_counter()
    times = [2.0 ** -k for k in range(1, 7)]
    gbm = gbm_problem(0.05, 0.2, 1.0, 1.0)
    f3 = construct_degree3(gaussian_cubature(1, 3))
    f5 = construct_degree5(gaussian_cubature(1, 5))
    low = convergence_experiment(gbm, [f3, f5], times)
    slope3 = low.fits[3].slope
    slope5 = low.fits[5].slope
    assert 1.6 <= slope3 <= 2.6, f"degree-3 slope {slope3:.3f}"
    assert 2.5 <= slope5 <= 3.6, f"degree-5 slope {slope5:.3f}"

    drivers = [[[0.1]], [[0.15]], [[0.2]], [[0.1]]]
    commutative = SDEProblem(VectorFieldSpec.affine(drivers), np.array([1.0]),
                             identity_payoff, "identity", 1.0, None)
    high = convergence_experiment(commutative, [degree7_formula], times)
    slope7 = high.fits[7].slope
    assert slope7 >= 3.4, f"degree-7 slope {slope7:.3f}"
    elapsed = time.perf_counter() - start
    assert elapsed < 300.0, f"convergence runs took {elapsed:.0f}s"
    report(7, "convergence orders",
           f"slopes: degree 3 → {slope3:.2f}, degree 5 → {slope5:.2f}, "
           f"degree 7 → {slope7:.2f}; {elapsed:.0f}s")


def test_criterion_8_multistep_sanity():
    gbm = gbm_problem(0.05, 0.2, 1.0, 1.0)
    f3 = construct_degree3(gaussian_cubature(1, 3))
    errors = []
    for k in range(1, 6):
        run = cubature_tree(gbm, f3, k)
        assert run.leaf_count == 2 ** k
        errors.append(run.abs_error)
    assert all(a > b for a, b in zip(errors, errors[1:])), errors
    taylor = cubature_tree(gbm, f3, 4, method="taylor").estimate
    logode = cubature_tree(gbm, f3, 4, method="logode").estimate
    gap = abs(taylor - logode)
    assert gap <= 1e-3, f"taylor vs log-ODE gap {gap:.3e}"
    report(8, "multi-step sanity",
           f"errors decrease {errors[0]:.2e} → {errors[-1]:.2e}; "
           f"taylor/log-ODE gap {gap:.2e}; leaf counts 2^k")


def test_criterion_9_determinism():
    gbm = gbm_problem(0.05, 0.2, 1.0, 0.5)
    f5 = construct_degree5(gaussian_cubature(1, 5))
    single = cubature_tree(gbm, f5, 3, threads=1).estimate
    for threads in (2, 3, 8):
        parallel = cubature_tree(gbm, f5, 3, threads=threads).estimate
        assert parallel == single, "thread count changed the estimate bits"
    mc_a = monte_carlo(gbm, 5000, 25, seed=42).estimate
    mc_b = monte_carlo(gbm, 5000, 25, seed=42).estimate
    assert mc_a == mc_b
    report(9, "determinism",
           f"tree estimate {single!r} bit-identical for 1/2/3/8 threads; "
           f"Monte Carlo reproducible per seed")
