import math
from fractions import Fraction

import numpy as np
import pytest

from wienercub.lie import LiePolynomial
from wienercub.measures import gaussian_cubature
from wienercub.sde import (DerivativeOrderError, LeafBudgetError,
                           MissingReferenceError, SDEProblem, VectorFieldSpec,
                           analytic_mean, augment_initial_state,
                           convergence_experiment, coordinate_payoff,
                           cubature_tree, directional_derivative_tower,
                           gbm_problem, identity_payoff, logode_step,
                           monte_carlo, problem_from_dict, signature_level_system,
                           signature_words, taylor_step)
from wienercub.tensor import TensorElement, exp_series
from wienercub.wiener import construct_degree3, construct_degree5, expected_signature


def drift_field(a):
    return VectorFieldSpec.affine([[[a]]])


# ---------------------------------------------------------------------------
# derivative towers


def test_tower_base_level_is_the_state():
    field = VectorFieldSpec.gbm(0.1, 0.2)
    x = np.array([1.5])
    for kind_field in (field, field.as_polynomial()):
        tower = directional_derivative_tower(kind_field, x, 2)
        assert np.allclose(tower[0], x)


def test_tower_drift_words_are_matrix_powers():
    A0 = np.array([[0.0, 1.0], [-0.5, 0.3]])
    field = VectorFieldSpec.affine([A0])
    x = np.array([1.0, 2.0])
    tower = directional_derivative_tower(field, x, 3)
    assert np.allclose(tower[1][:, 0], A0 @ x)
    assert np.allclose(tower[2][:, 0, 0], A0 @ (A0 @ x))
    assert np.allclose(tower[3][:, 0, 0, 0], A0 @ (A0 @ (A0 @ x)))


def test_tower_constant_field_vanishes_beyond_first_order():
    # f_j(x) = c_j: the first derivative already kills the state dependence
    b = [np.array([2.0]), np.array([-1.0])]
    field = VectorFieldSpec.affine([np.zeros((1, 1)), np.zeros((1, 1))], b)
    tower = directional_derivative_tower(field, np.array([5.0]), 3)
    assert np.allclose(tower[1], [[2.0, -1.0]])
    assert np.allclose(tower[2], 0.0)
    assert np.allclose(tower[3], 0.0)


def test_tower_word_order_matches_signature_pairing():
    # word (i, j) must contract against Df_j . f_i
    A = [np.zeros((2, 2)), np.array([[0.0, 0.0], [1.0, 0.0]]),
         np.array([[0.0, 2.0], [0.0, 0.0]])]
    field = VectorFieldSpec.affine(A)
    x = np.array([1.0, 3.0])
    tower = directional_derivative_tower(field, x, 2)
    f1 = A[1] @ x
    f2 = A[2] @ x
    assert np.allclose(tower[2][:, 1, 2], A[2] @ f1)   # word (1,2)
    assert np.allclose(tower[2][:, 2, 1], A[1] @ f2)   # word (2,1)


def test_polynomial_tower_matches_affine():
    field = VectorFieldSpec.gbm(0.07, 0.3)
    poly = field.as_polynomial()
    x = np.array([1.2])
    for word in [(0,), (1,), (0, 1), (1, 1), (1, 0, 1)]:
        assert field.word_tower(word, x) == pytest.approx(
            poly.word_tower(word, x))


def test_generic_tower_matches_affine_to_fd_accuracy():
    a, b = 0.07, 0.3
    exact = VectorFieldSpec.gbm(a, b)
    generic = VectorFieldSpec.generic(
        lambda x: np.array([[a * x[0], b * x[0]]]), 1, 1, max_order=4)
    x = np.array([1.2])
    for word in [(0,), (1,), (1, 1), (0, 1, 1)]:
        got = generic.word_tower(word, x)
        want = exact.word_tower(word, x)
        assert got == pytest.approx(want, rel=1e-5)


def test_generic_field_declares_its_order():
    generic = VectorFieldSpec.generic(
        lambda x: np.array([[x[0], x[0]]]), 1, 1, max_order=2)
    with pytest.raises(DerivativeOrderError):
        directional_derivative_tower(generic, np.array([1.0]), 3)


# ---------------------------------------------------------------------------
# taylor stepping


def test_taylor_with_unit_only_is_identity():
    field = VectorFieldSpec.gbm(0.1, 0.2)
    L = TensorElement.unit(1, 5)
    assert taylor_step(np.array([3.0]), L, field, 5) == pytest.approx([3.0])


def test_taylor_reproduces_truncated_drift_exponential():
    a, T = 0.3, 1.0
    L = exp_series(TensorElement(1, 10, {(0,): T}))
    got = taylor_step(np.array([2.0]), L, drift_field(a), 10)
    want = 2.0 * sum((a * T) ** k / math.factorial(k) for k in range(6))
    assert got[0] == pytest.approx(want, rel=1e-15)


def test_taylor_exact_for_integer_matrices():
    # rational-friendly check: integer matrix, exact coefficients, exact result
    A0 = [[1, 2], [0, 1]]
    field = VectorFieldSpec.affine([[[Fraction(a) for a in row] for row in A0]])
    L = exp_series(TensorElement(1, 8, {(0,): Fraction(1)}))
    x = np.array([Fraction(1), Fraction(1)], dtype=object)
    got = taylor_step(x, L, field, 8)
    M = np.array(A0, dtype=object)
    want = np.array([Fraction(0), Fraction(0)], dtype=object)
    power = x
    for k in range(5):   # graded degree of (0,)*k is 2k <= 8 -> k <= 4
        want = want + power * Fraction(1, math.factorial(k))
        power = M @ power
    assert list(got) == list(want)


def test_taylor_gbm_single_step_mean():
    prob = gbm_problem(0.05, 0.2, 1.0, 0.5)
    L = expected_signature(1, 3, prob.T)
    estimate = taylor_step(prob.x0, L, prob.field, 3)[0]
    exact = prob.reference
    assert abs(estimate - exact) <= 2.0 * prob.T ** 2
    assert estimate == pytest.approx(exact, abs=5e-3)


# ---------------------------------------------------------------------------
# log-ODE stepping


def test_logode_zero_polynomial_is_identity():
    field = VectorFieldSpec.gbm(0.1, 0.2)
    out = logode_step(np.array([2.0]), LiePolynomial.zero(1), field, 3)
    assert out == pytest.approx([2.0])


def test_logode_linear_drift_is_exact_to_integrator_accuracy():
    a, T = 1.0, 1.0   # aT = 1
    ell = LiePolynomial(1, [(T, 0)])
    out = logode_step(np.array([1.0]), ell, drift_field(a), 3, ode_steps=192)
    assert abs(out[0] - math.exp(a * T)) <= 1e-10


def test_logode_matches_taylor_through_degree3_entries():
    prob = gbm_problem(0.05, 0.2, 1.0, 0.1)
    formula = construct_degree3(gaussian_cubature(1, 3))
    taylor = cubature_tree(prob, formula, 1, method="taylor").estimate
    logode = cubature_tree(prob, formula, 1, method="logode").estimate
    assert abs(taylor - logode) <= 5.0 * prob.T ** 2


def test_higher_degree_beats_lower_on_gbm():
    prob = gbm_problem(0.05, 0.2, 1.0, 0.25)
    err3 = cubature_tree(prob, construct_degree3(gaussian_cubature(1, 3)),
                         1).abs_error
    err5 = cubature_tree(prob, construct_degree5(gaussian_cubature(1, 5)),
                         1).abs_error
    assert err5 < err3


def test_taylor_logode_gap_shrinks_at_the_degree_order():
    # the two steppers agree to O(T^((m+1)/2)); fitted slope stays above
    # (m+1)/2 - 0.5 for the degree-3 formula on GBM
    formula = construct_degree3(gaussian_cubature(1, 3))
    times = [2.0 ** -k for k in range(1, 6)]
    gaps = []
    for T in times:
        prob = gbm_problem(0.05, 0.2, 1.0, T)
        taylor = cubature_tree(prob, formula, 1, method="taylor").estimate
        logode = cubature_tree(prob, formula, 1, method="logode",
                               ode_steps=32).estimate
        gaps.append(abs(taylor - logode))
    slope = np.polyfit(np.log(times), np.log(gaps), 1)[0]
    assert slope >= 1.5


# ---------------------------------------------------------------------------
# the cubature tree


def test_tree_leaf_counts():
    prob = gbm_problem(T=0.5)
    f3 = construct_degree3(gaussian_cubature(1, 3))
    f5 = construct_degree5(gaussian_cubature(1, 5))
    assert cubature_tree(prob, f3, 1).leaf_count == 2
    assert cubature_tree(prob, f5, 3).leaf_count == 216


def test_tree_weights_sum_to_one():
    # constant payoff integrates to exactly the weight sum
    f3 = construct_degree3(gaussian_cubature(1, 3))
    field = VectorFieldSpec.gbm(0.05, 0.2)
    prob = SDEProblem(field, np.array([1.0]), lambda x: 1.0, "expr", 0.5, None)
    for steps in (1, 3, 6):
        assert cubature_tree(prob, f3, steps).estimate == pytest.approx(
            1.0, abs=1e-12)


def test_tree_zero_field_returns_payoff_of_start():
    field = VectorFieldSpec.affine([np.zeros((1, 1)), np.zeros((1, 1))])
    prob = SDEProblem(field, np.array([3.0]), identity_payoff, "identity",
                      1.0, None)
    f3 = construct_degree3(gaussian_cubature(1, 3))
    assert cubature_tree(prob, f3, 2).estimate == 3.0


def test_tree_error_decreases_with_steps():
    prob = gbm_problem(0.05, 0.2, 1.0, 1.0)
    f3 = construct_degree3(gaussian_cubature(1, 3))
    errors = [cubature_tree(prob, f3, k).abs_error for k in range(1, 6)]
    assert all(a > b for a, b in zip(errors, errors[1:]))


def test_tree_budget_is_enforced():
    prob = gbm_problem(T=0.5)
    f5 = construct_degree5(gaussian_cubature(1, 5))
    with pytest.raises(LeafBudgetError):
        cubature_tree(prob, f5, 9, leaf_budget=10 ** 6)


def test_tree_rejects_dimension_mismatch():
    prob = gbm_problem(T=0.5)
    f3 = construct_degree3(gaussian_cubature(2, 3))
    with pytest.raises(ValueError):
        cubature_tree(prob, f3, 1)


def test_tree_is_bit_identical_across_thread_counts():
    prob = gbm_problem(0.05, 0.2, 1.0, 0.5)
    f5 = construct_degree5(gaussian_cubature(1, 5))
    base = cubature_tree(prob, f5, 3, threads=1).estimate
    for threads in (2, 4):
        assert cubature_tree(prob, f5, 3, threads=threads).estimate == base


# ---------------------------------------------------------------------------
# Monte Carlo baseline


def test_monte_carlo_is_deterministic_per_seed():
    prob = gbm_problem(T=0.5)
    a = monte_carlo(prob, 2000, 20, seed=7)
    b = monte_carlo(prob, 2000, 20, seed=7)
    c = monte_carlo(prob, 2000, 20, seed=8)
    assert a.estimate == b.estimate
    assert a.estimate != c.estimate


def test_monte_carlo_hits_gbm_mean_within_four_sigma():
    prob = gbm_problem(0.05, 0.2, 1.0, 1.0)
    report = monte_carlo(prob, 100_000, 100, seed=11)
    assert report.abs_error <= 4.0 * report.std_error


def test_monte_carlo_zero_diffusion_matches_ode():
    prob = SDEProblem(drift_field(0.3), np.array([1.0]), identity_payoff,
                      "identity", 1.0, math.exp(0.3))
    report = monte_carlo(prob, 10, 200, seed=0)
    assert report.abs_error <= 5e-5   # Heun is second order on the drift


# ---------------------------------------------------------------------------
# convergence harness


def test_slopes_match_the_cubature_degrees():
    prob = gbm_problem(0.05, 0.2, 1.0, 1.0)
    f3 = construct_degree3(gaussian_cubature(1, 3))
    f5 = construct_degree5(gaussian_cubature(1, 5))
    times = [2.0 ** -k for k in range(1, 7)]
    result = convergence_experiment(prob, [f3, f5], times)
    assert 1.6 <= result.fits[3].slope <= 2.6
    assert 2.5 <= result.fits[5].slope <= 3.6


def test_exact_problem_rejects_the_fit():
    # constant drift is captured exactly at degree 3: errors sit at the floor
    field = VectorFieldSpec.affine([np.zeros((1, 1)), np.zeros((1, 1))],
                                   [np.array([2.0]), np.array([0.0])])
    prob = SDEProblem(field, np.array([1.0]), identity_payoff, "identity",
                      1.0, None)
    f3 = construct_degree3(gaussian_cubature(1, 3))
    result = convergence_experiment(prob, [f3], [0.5, 0.25, 0.125],
                                    reference_fn=lambda T: 1.0 + 2.0 * T)
    fit = result.fits[3]
    assert fit.slope is None
    assert "rejected" in fit.note


def test_missing_reference_raises():
    field = VectorFieldSpec.affine([np.zeros((1, 1)), np.zeros((1, 1))],
                                   [np.array([2.0]), np.array([0.0])])
    prob = SDEProblem(field, np.array([1.0]), identity_payoff, "identity",
                      1.0, None)
    f3 = construct_degree3(gaussian_cubature(1, 3))
    with pytest.raises(MissingReferenceError):
        convergence_experiment(prob, [f3], [0.5, 0.25])


def test_analytic_mean_matches_gbm_closed_form():
    prob = gbm_problem(0.05, 0.2, 1.0, 0.75)
    assert analytic_mean(prob) == pytest.approx(prob.reference, rel=1e-12)


# ---------------------------------------------------------------------------
# signature-level systems


def brownian_field(d):
    A = [np.zeros((d, d)) for _ in range(d + 1)]
    b = [np.zeros(d)] + [np.eye(d)[i] for i in range(d)]
    return VectorFieldSpec.affine(A, b)


def test_signature_level_one_is_the_increment():
    prob0 = gbm_problem(0.05, 0.2, 1.0, 0.5)
    aug = signature_level_system(prob0.field, 1)
    words = signature_words(1, 1)
    idx = 1 + words.index((0,))
    prob = SDEProblem(aug, augment_initial_state(prob0.x0, 1),
                      coordinate_payoff(idx), f"coordinate:{idx}", prob0.T, None)
    f5 = construct_degree5(gaussian_cubature(1, 5))
    got = cubature_tree(prob, f5, 1).estimate
    assert got == pytest.approx(prob0.reference - 1.0, abs=1e-4)


def test_signature_level_two_of_brownian_motion():
    field = brownian_field(2)
    aug = signature_level_system(field, 2)
    words = signature_words(2, 2)
    x0 = augment_initial_state(np.zeros(2), 2)
    f5 = construct_degree5(gaussian_cubature(2, 5))
    T = 0.5
    for word, want in [((0, 0), 0.25), ((1, 1), 0.25), ((0, 1), 0.0)]:
        idx = 2 + words.index(word)
        prob = SDEProblem(aug, x0, coordinate_payoff(idx),
                          f"coordinate:{idx}", T, None)
        got = cubature_tree(prob, f5, 1).estimate
        assert got == pytest.approx(want, abs=1e-3)


def test_signature_system_is_triangular():
    field = brownian_field(2)
    aug = signature_level_system(field, 2)
    words = signature_words(2, 2)
    level2_vars = {2 + i for i, w in enumerate(words) if len(w) == 2}
    for direction in aug.polys:
        for expo, vec in direction.items():
            touches_level2 = any(expo[v] for v in level2_vars)
            assert not touches_level2   # level-2 dynamics only read below


def test_signature_state_budget():
    field = brownian_field(2)
    with pytest.raises(ValueError):
        signature_level_system(field, 4, state_budget=10)
    with pytest.raises(ValueError):
        signature_level_system(field, 5)


# ---------------------------------------------------------------------------
# problem files


def test_problem_from_dict_gbm_roundtrip():
    doc = {"state_dim": 1, "driving_dim": 1, "kind": "gbm",
           "params": {"a": 0.05, "b": 0.2}, "x0": [1.0],
           "payoff": "identity", "T": 0.25, "reference": 1.2}
    prob = problem_from_dict(doc)
    assert prob.field.kind == "affine"
    assert prob.T == 0.25 and prob.reference == 1.2
    assert prob.payoff(np.array([3.0])) == 3.0


def test_problem_from_dict_affine_and_payoffs():
    doc = {"state_dim": 2, "driving_dim": 1, "kind": "affine",
           "params": {"A": [[[0.0, 1.0], [0.0, 0.0]], [[0.1, 0.0], [0.0, 0.1]]]},
           "x0": [1.0, 2.0], "payoff": "coordinate:1", "T": 1.0,
           "reference": None}
    prob = problem_from_dict(doc)
    assert prob.payoff(np.array([5.0, 7.0])) == 7.0
    doc["payoff"] = "x[0] + exp(x[1])"
    prob = problem_from_dict(doc)
    assert prob.payoff(np.array([1.0, 0.0])) == pytest.approx(2.0)


def test_problem_from_dict_validates_dimensions():
    doc = {"state_dim": 3, "driving_dim": 1, "kind": "gbm",
           "params": {"a": 0.1, "b": 0.1}, "x0": [1.0], "payoff": "identity",
           "T": 1.0, "reference": None}
    with pytest.raises(ValueError):
        problem_from_dict(doc)
