"""Cubature on Wiener space: algebra, formula constructions, weak solvers."""

from .words import (EMPTY_WORD, graded_degree, is_lyndon, lex_compare,
                    lyndon_words, word_str, words_of_graded_degree)
from .tensor import (TensorElement, exp_series, graded_project, level_project,
                     log_series, tensor_product)
from .lie import (LiePolynomial, bracket_expand, bracket_str, is_lie_element,
                  pbw_basis, pbw_coordinates, pbw_expand, standard_bracketing,
                  symmetrised_product)
from .measures import (PointCubature, bernoulli_full, gauss_hermite_1d,
                       gaussian_cubature, verify_moments)
from .wiener import (VerificationReport, WienerCubatureFormula,
                     construct_degree3, construct_degree5, construct_degree7,
                     expected_signature, expected_signature_coefficient,
                     load_formula, save_formula, scale_formula, verify_formula,
                     write_residual_report)

__version__ = "0.1.0"
