"""Position components, covariance residuals, the correction search, and the
localizability verdict plumbing."""

import numpy as np
import pytest

from freeparticle.grid import build_grid
from freeparticle.operators import adjoint_residual, sample_states
from freeparticle.position import (
    INDETERMINATE,
    LOCALIZABLE,
    OBSTRUCTED,
    OBSTRUCTION_THRESHOLD,
    _defect_order,
    corrected_position,
    correction_symbols,
    covariance_residuals,
    kinetic_energy_symbol,
    newton_wigner,
    optimized_covariance_defect,
    uniqueness_probe,
    velocity_residual,
)
from freeparticle.triplets import TripletClass, make_triplet


def test_components_are_symmetric_under_the_weighted_measure():
    # the adjoint defect is pure stencil truncation, so it falls at close to
    # fourth order between the two finest desk rungs
    defects = []
    for n in (16, 32):
        g = build_grid(n, 6.0, 1.0)
        samples = sample_states(g)
        defects.append(max(
            adjoint_residual(comp, samples).max_relative_residual
            for comp in newton_wigner(g)))
    assert defects[1] < defects[0] / 10.0
    assert defects[1] < 1e-3


def test_covariance_residual_keys(triplet_plus, wave_samples8):
    Q = newton_wigner(triplet_plus.grid)
    out = covariance_residuals(triplet_plus, Q, wave_samples8)
    assert {"commuting_components", "momentum_conjugacy", "rotation_covariance",
            "time_reversal_compat", "space_inversion_anticompat"} <= set(out)
    for stats in out.values():
        assert stats.max_relative_residual >= 0


def test_inversion_compatibility_is_exact(triplet_plus, wave_samples8):
    Q = newton_wigner(triplet_plus.grid)
    out = covariance_residuals(triplet_plus, Q, wave_samples8)
    assert out["time_reversal_compat"].max_relative_residual <= 1e-12
    assert out["space_inversion_anticompat"].max_relative_residual <= 1e-12


def test_grid_mismatch_rejected(triplet_plus):
    other = build_grid(12, 6.0, 1.0)
    with pytest.raises(ValueError):
        covariance_residuals(triplet_plus, newton_wigner(other), None)


def test_velocity_residual_decays_at_stencil_order():
    defects = []
    for n in (16, 32):
        t = make_triplet(TripletClass.MASSIVE_PLUS, build_grid(n, 6.0, 1.0))
        defects.append(velocity_residual(t).max_relative_residual)
    assert defects[1] < defects[0] / 10.0
    assert defects[1] < 0.1


def test_kinetic_energy_symbol_equals_energies(grid8):
    np.testing.assert_allclose(kinetic_energy_symbol(grid8), grid8.energies, rtol=1e-12)


def test_correction_symbols_are_real_and_bounded(grid8):
    basis = correction_symbols(grid8)
    assert len(basis) >= 3
    for g in basis:
        assert np.isrealobj(g) or np.abs(g.imag).max() == 0
        assert np.all(np.isfinite(g))


def test_optimized_defect_never_exceeds_raw(triplet_plus, wave_samples8):
    Q = newton_wigner(triplet_plus.grid)
    raw, opt, coeffs = optimized_covariance_defect(triplet_plus, Q, wave_samples8)
    assert opt <= raw + 1e-12
    assert np.all(np.isfinite(coeffs))


def test_corrected_position_with_zero_coeffs_is_identity_correction(triplet_plus, wave_samples8):
    grid = triplet_plus.grid
    Q = newton_wigner(grid)
    nb = len(correction_symbols(grid))
    fixed = corrected_position(Q, np.zeros(3 * nb))
    s = wave_samples8[0]
    for a in range(3):
        np.testing.assert_allclose(fixed[a](s).amplitudes, Q[a](s).amplitudes, atol=1e-15)
    with pytest.raises(ValueError):
        corrected_position(Q, np.zeros(3 * nb + 1))


def test_uniqueness_probe_reports_tiny_corrections():
    grid = build_grid(12, 6.0, 1.0)
    t = make_triplet(TripletClass.MASSIVE_PLUS, grid)
    out = uniqueness_probe(t)
    assert out["optimized_defect"] <= out["raw_defect"] + 1e-12
    # the best multiplication correction is numerically the zero correction
    assert out["defect_reduction"] < 0.05


def test_uniqueness_probe_rejects_other_classes(triplet_pm1):
    with pytest.raises(ValueError):
        uniqueness_probe(triplet_pm1)


def test_defect_order_slope():
    ns = [16, 24, 32]
    fourth = [1.0 * (16 / n) ** 4 for n in ns]
    flat = [0.2, 0.2, 0.2]
    assert _defect_order(ns, fourth) == pytest.approx(4.0, abs=1e-12)
    assert abs(_defect_order(ns, flat)) <= 1e-12


def test_verdict_constants():
    assert LOCALIZABLE == "LOCALIZABLE"
    assert OBSTRUCTED == "OBSTRUCTED"
    assert INDETERMINATE == "INDETERMINATE"
    assert 0 < OBSTRUCTION_THRESHOLD < 0.1


def test_experiment_needs_three_rungs():
    from freeparticle.position import localizability_experiment

    with pytest.raises(ValueError):
        localizability_experiment(0, [16, 24])
