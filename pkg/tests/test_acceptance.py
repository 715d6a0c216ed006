"""Acceptance suite: one test per numbered criterion, printed pass/fail lines.

Each test drives the corresponding criterion of :mod:`stefanlab.verify` at
its stated tolerance against the shared session context, prints the
criterion line, and asserts the outcome.

Criterion 3 is marked as a strict expected failure: the unit-norm
eigenpair's boundary slope obeys an exact first-order law with constant
sqrt(2 lam_k)/4 (about 0.85, 1.95, 3.06 for the first three modes), so the
stated 0.5 ceiling cannot be met by any correct implementation.  The
criterion still runs and reports the measured constants; if it ever starts
passing, something changed and the strict marker will flag it.
"""

import pytest

from stefanlab import verify


def _check(result):
    print(result.line())
    assert result.passed, result.details


def test_criterion_01_spectral_table(ctx):
    _check(verify.criterion_1(ctx))


def test_criterion_02_perturbation_law(ctx):
    _check(verify.criterion_2(ctx))


@pytest.mark.xfail(
    strict=True,
    reason="unattainable as stated: the measured drift constant of the "
           "unit-norm eigenpair slope is sqrt(2 lam_k)/4 >= 0.85 > 0.5 "
           "(Rellich identity); see the decisions ledger and README",
)
def test_criterion_03_boundary_slopes(ctx):
    _check(verify.criterion_3(ctx))


def test_criterion_04_scaling_identity(ctx):
    _check(verify.criterion_4(ctx))


def test_criterion_05_conservation(ctx):
    _check(verify.criterion_5(ctx))


def test_criterion_06_terminal_radius(ctx):
    _check(verify.criterion_6(ctx))


def test_criterion_07_rate_law_ground(ctx):
    _check(verify.criterion_7(ctx))


def test_criterion_08_rate_law_excited(ctx):
    _check(verify.criterion_8(ctx))


def test_criterion_09_modulation_fidelity(ctx):
    _check(verify.criterion_9(ctx))


def test_criterion_10_energy_bootstrap(ctx):
    _check(verify.criterion_10(ctx))


def test_criterion_11_oracle_equivalence(ctx):
    _check(verify.criterion_11(ctx))
