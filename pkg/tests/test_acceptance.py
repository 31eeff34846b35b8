"""Acceptance suite: every benchmark criterion at its pinned tolerance.

Each test evaluates one criterion through the shared reproduction context
(heavy simulations run once per session) and prints its pass/fail line.
Run `pytest tests/test_acceptance.py -v -s` for the full table; the
simulation-backed rows take a few minutes at the default resolution.
"""

import pytest

import colonykit.reproduce as rp


@pytest.fixture(scope="session")
def ctx():
    return rp.ReproductionContext(n=512, progress=lambda msg: print(msg, flush=True))


def _run(fn, ctx):
    result = fn(ctx)
    print(f"[{result.status.upper():4s}] criterion {result.cid:2d} ({result.name}): {result.detail}")
    return result


def test_criterion_01_critical_values(ctx):
    result = _run(rp._crit_critical_values, ctx)
    assert result.passed, result.detail


def test_criterion_02_bifurcation_table(ctx):
    result = _run(rp._crit_bifurcation_table, ctx)
    assert result.passed, result.detail


def test_criterion_03_ordering_interleaving(ctx):
    """The substantive ordering content: the measured ascending order is the
    interleaved chain peaking at mode 6, with the first pair corrected."""
    result = _run(rp._crit_ordering, ctx)
    assert result.data["corrected_ordering_holds"], result.detail
    assert result.data["uncontested_pairs_hold"], result.detail
    assert result.passed, result.detail


@pytest.mark.xfail(
    strict=True,
    reason="the published chain misprints its first pair: the same closed form "
    "that reproduces every other published value gives sigma0_1 = 0.035823 > "
    "sigma0_11 = 0.005411, so 'sigma0_1 < sigma0_11' cannot hold",
)
def test_criterion_03_ordering_chain_as_published(ctx):
    result = rp._crit_ordering(ctx)
    assert result.data["stated_chain_holds"]


def test_criterion_04_second_order_corrections(ctx):
    result = _run(rp._crit_sigma2_table, ctx)
    assert result.passed, result.detail


def test_criterion_05_eta_with_quadrature_oracle(ctx):
    result = _run(rp._crit_eta, ctx)
    assert result.passed, result.detail


def test_criterion_06_pattern_coefficients(ctx):
    result = _run(rp._crit_pattern_coefficients, ctx)
    assert result.passed, result.detail


def test_criterion_07_all_branches_backward(ctx):
    result = _run(rp._crit_backward_branches, ctx)
    assert result.passed, result.detail


def test_criterion_08_asymptotic_residual_order(ctx):
    result = _run(rp._crit_residual_order, ctx)
    assert result.passed, result.detail


@pytest.mark.slow
def test_criterion_09_stable_regime(ctx):
    result = _run(rp._crit_stable_regime, ctx)
    assert result.passed, result.detail


@pytest.mark.slow
def test_criterion_10_mode_selection_and_transitions(ctx):
    result = _run(rp._crit_mode_selection, ctx)
    assert result.passed, result.detail


def test_criterion_11_linear_growth_fidelity(ctx):
    result = _run(rp._crit_growth_fidelity, ctx)
    assert result.passed, result.detail


def test_criterion_12_continuation_consistency(ctx):
    result = _run(rp._crit_continuation, ctx)
    assert result.passed, result.detail


@pytest.mark.slow
def test_criterion_13_stability_verdicts(ctx):
    result = _run(rp._crit_stability_verdicts, ctx)
    assert result.passed, result.detail
