import pytest

from wienercub import construct_degree7, verify_formula


@pytest.fixture(scope="session")
def degree7_formula():
    return construct_degree7()


@pytest.fixture(scope="session")
def degree7_report(degree7_formula):
    return verify_formula(degree7_formula)
