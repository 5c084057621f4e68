"""Tests for the spectral cell-problem solver.

The steady shear flow is the exact reference: its corrector is
chi = (0, -sin(x)/kappa), band limited, so the Galerkin solution must
reproduce both the coefficients and kappa + 1/(2 kappa) to solver
precision at any truncation. The cellular flows are checked against
values frozen from an independent prototype of the same discretization
and against structural invariants (symmetry, isotropy, lower bound).
"""

import math

import numpy as np
import pytest

from eddykit import (
    CellSolution,
    ConvergenceError,
    ParameterError,
    ScalingFit,
    UnsupportedFlowError,
    childress_soward,
    eddy_diffusivity_from_cell,
    fit_scaling_exponent,
    k_shear,
    ou_shear,
    periodic_shear,
    solve_cell_problem,
    spectral_diffusivity,
    steady_shear,
    taylor_green,
)

SQ2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# steady shear: exact reference
# ---------------------------------------------------------------------------


def test_shear_corrector_coefficients():
    kappa = 0.1
    sol = solve_cell_problem(steady_shear(), kappa, modes=8)
    # chi^2 = -sin(x)/kappa picks out the (+-1, 0) modes with weight +-i/(2 kappa)
    assert sol.coefficient(2, 1, 0) == pytest.approx(1j / (2 * kappa), abs=1e-12)
    assert sol.coefficient(2, -1, 0) == pytest.approx(-1j / (2 * kappa), abs=1e-12)
    # chi^1 vanishes, as does everything off the shear band
    assert np.max(np.abs(sol.coefficients[0])) < 1e-13
    other = sol.coefficients[1].copy()
    m = sol.modes
    other[m + 1, m] = other[m - 1, m] = 0.0
    assert np.max(np.abs(other)) < 1e-13
    assert abs(sol.coefficient(1, 0, 0)) == 0.0
    assert abs(sol.coefficient(2, 0, 0)) == 0.0


@pytest.mark.parametrize("kappa", [0.05, 0.1, 0.5, 1.0])
def test_spectral_matches_analytic_shear(kappa):
    tensor = eddy_diffusivity_from_cell(solve_cell_problem(steady_shear(), kappa, modes=8))
    assert tensor.entries[1, 1] == pytest.approx(k_shear(kappa), rel=1e-10)
    assert tensor.entries[0, 0] == pytest.approx(kappa, abs=1e-12)
    assert abs(tensor.entries[0, 1]) < 1e-12


# ---------------------------------------------------------------------------
# cellular flows against frozen prototype values
# ---------------------------------------------------------------------------


def test_taylor_green_frozen_value_and_isotropy():
    tensor = eddy_diffusivity_from_cell(solve_cell_problem(taylor_green(), 0.1, modes=16))
    assert tensor.entries[0, 0] == pytest.approx(0.3416574503389721, rel=1e-9)
    assert abs(tensor.entries[0, 0] - tensor.entries[1, 1]) < 1e-10
    assert abs(tensor.entries[0, 1]) < 1e-10


def test_taylor_green_truncation_converged():
    coarse = eddy_diffusivity_from_cell(solve_cell_problem(taylor_green(), 0.1, modes=16))
    fine = eddy_diffusivity_from_cell(solve_cell_problem(taylor_green(), 0.1, modes=32))
    assert np.max(np.abs(fine.entries - coarse.entries)) < 1e-8 * fine.entries[0, 0]


def test_childress_soward_frozen_values():
    tensor = eddy_diffusivity_from_cell(solve_cell_problem(childress_soward(0.5), 0.1, modes=48))
    np.testing.assert_allclose(
        tensor.entries,
        np.array([[0.92554337, 0.79087976], [0.79087976, 0.92554337]]),
        atol=1e-7,
    )
    assert tensor.project((1 / SQ2, 1 / SQ2)) == pytest.approx(1.716423126170169, rel=1e-8)
    assert tensor.project((-1 / SQ2, 1 / SQ2)) == pytest.approx(0.13466361475636562, rel=1e-8)


def test_childress_soward_lambda_zero_reduces_to_taylor_green():
    a = eddy_diffusivity_from_cell(solve_cell_problem(taylor_green(), 0.2, modes=16))
    b = eddy_diffusivity_from_cell(solve_cell_problem(childress_soward(0.0), 0.2, modes=16))
    np.testing.assert_array_equal(a.entries, b.entries)


def test_childress_soward_anisotropic_scaling():
    # along the open channel (1, 1) the diffusivity grows as kappa drops,
    # across it the trend is the opposite; the fitted exponents must split
    along, across = [], []
    for kappa in (0.05, 0.1, 0.2):
        tensor = eddy_diffusivity_from_cell(
            solve_cell_problem(childress_soward(0.5), kappa, modes=48))
        along.append((kappa, tensor.project((1 / SQ2, 1 / SQ2))))
        across.append((kappa, tensor.project((-1 / SQ2, 1 / SQ2))))
    fit_along = fit_scaling_exponent(along)
    fit_across = fit_scaling_exponent(across)
    assert fit_along.exponent < 0.0 < fit_across.exponent


def test_high_kappa_is_molecular():
    tensor = eddy_diffusivity_from_cell(solve_cell_problem(taylor_green(), 1e6, modes=8))
    assert abs(tensor.entries[0, 0] - 1e6) < 1e-5
    assert abs(tensor.entries[0, 1]) < 1e-8


# ---------------------------------------------------------------------------
# structural invariants
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("flow", [taylor_green(), childress_soward(0.5)], ids=lambda f: f.kind)
def test_molecular_lower_bound(flow):
    kappa = 0.1
    tensor = eddy_diffusivity_from_cell(solve_cell_problem(flow, kappa, modes=16))
    rng = np.random.default_rng(17)
    for _ in range(100):
        xi = rng.standard_normal(2)
        assert tensor.project(xi) >= kappa * (xi @ xi) * (1.0 - 1e-12)


def test_conjugate_symmetry_of_corrector():
    sol = solve_cell_problem(taylor_green(), 0.1, modes=16)
    for comp in (0, 1):
        coef = sol.coefficients[comp]
        flipped = np.flip(np.flip(coef, axis=0), axis=1)
        np.testing.assert_allclose(flipped, np.conj(coef), atol=1e-12)


def test_residual_is_recorded_and_small():
    sol = solve_cell_problem(childress_soward(0.3), 0.05, modes=24)
    assert 0.0 <= sol.residual <= 1e-10


# ---------------------------------------------------------------------------
# adaptive refinement and scaling fit
# ---------------------------------------------------------------------------


def test_spectral_diffusivity_converges():
    tensor, sol = spectral_diffusivity(taylor_green(), 0.1, rtol=1e-8)
    assert tensor.entries[0, 0] == pytest.approx(0.3416574503389721, rel=1e-6)
    assert sol.modes >= 32
    assert tensor.provenance == "spectral"


def test_spectral_diffusivity_stops_at_cap():
    # rtol = 0 never converges, so the loop must return the cap quietly
    tensor, sol = spectral_diffusivity(taylor_green(), 0.5, rtol=0.0,
                                       initial_modes=4, max_modes=8)
    assert sol.modes == 8
    assert tensor.entries[0, 0] > 0.5


def test_fit_scaling_exponent_exact_power_law():
    samples = [(k, 3.0 * k ** 0.5) for k in (0.01, 0.04, 0.09, 0.25)]
    fit = fit_scaling_exponent(samples)
    assert fit.exponent == pytest.approx(0.5, rel=1e-12)
    assert fit.prefactor == pytest.approx(3.0, rel=1e-12)
    assert isinstance(fit, ScalingFit)


def test_fit_scaling_exponent_validation():
    with pytest.raises(ParameterError):
        fit_scaling_exponent([(0.1, 1.0), (0.2, 2.0)])
    with pytest.raises(ParameterError):
        fit_scaling_exponent([(0.1, 1.0), (0.2, 2.0), (0.3, -1.0)])


# ---------------------------------------------------------------------------
# domain errors
# ---------------------------------------------------------------------------


def test_time_dependent_flows_are_rejected():
    for flow in (periodic_shear(1.0), ou_shear(1.0, 0.1)):
        with pytest.raises(UnsupportedFlowError):
            solve_cell_problem(flow, 0.1)


def test_solver_validation():
    with pytest.raises(ParameterError):
        solve_cell_problem(taylor_green(), 0.0)
    with pytest.raises(ParameterError):
        solve_cell_problem(taylor_green(), 0.1, modes=3)
    with pytest.raises(ParameterError):
        solve_cell_problem(taylor_green(), 0.1, modes=8.5)
    with pytest.raises(ParameterError):
        spectral_diffusivity(taylor_green(), 0.1, initial_modes=2)
    with pytest.raises(ParameterError):
        spectral_diffusivity(taylor_green(), 0.1, initial_modes=16, max_modes=8)
    with pytest.raises(ParameterError):
        spectral_diffusivity(taylor_green(), 0.1, rtol=-1e-6)


def test_cell_solution_accessors():
    sol = solve_cell_problem(taylor_green(), 0.1, modes=8)
    with pytest.raises(ParameterError):
        sol.coefficient(3, 0, 0)
    with pytest.raises(ParameterError):
        sol.coefficient(1, 9, 0)
    with pytest.raises(ParameterError):
        CellSolution(np.zeros((2, 3, 3), dtype=complex), 0.1, 8, 0.0)


def test_convergence_error_carries_residual():
    err = ConvergenceError("residual too large", residual=3e-9)
    assert err.residual == 3e-9
    assert "residual" in str(err)
