"""Acceptance criteria at their stated tolerances and runtime budgets.

Each test prints one ``[PASS]``/``[FAIL]`` line; the lines are repeated in
the terminal summary. Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import pytest

from levyfk.verification import CRITERIA, criterion_prefactor_ode

pytestmark = pytest.mark.acceptance

CASES = [
    pytest.param(CRITERIA[1], id="01_legendre_closed_form"),
    pytest.param(CRITERIA[2], id="02_harmonic_prefactor_mc"),
    pytest.param(CRITERIA[3], id="03_harmonic_bvp_closed_form"),
    pytest.param(CRITERIA[4], id="04_fk_vs_pide_matrix", marks=pytest.mark.slow),
    pytest.param(CRITERIA[5], id="05_harmonic_ld_slope", marks=pytest.mark.slow),
    pytest.param(CRITERIA[6], id="06_jump_exponent", marks=pytest.mark.slow),
    pytest.param(CRITERIA[7], id="07_configuration_drift", marks=pytest.mark.slow),
    pytest.param(CRITERIA[8], id="08_momentum_drift", marks=pytest.mark.slow),
    pytest.param(CRITERIA[9], id="09_quadratic_wiener_functional"),
    pytest.param(CRITERIA[10], id="10_jump_moment_bounds"),
    pytest.param(criterion_prefactor_ode, id="F_prefactor_ode"),
]


@pytest.mark.parametrize("criterion", CASES)
def test_criterion(criterion, record_criterion):
    result = criterion()
    record_criterion(result)
    assert result.passed, result.line
