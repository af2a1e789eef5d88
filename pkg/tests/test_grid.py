"""Lattice geometry, quadrature, states, and the stencil derivative."""

import numpy as np
import pytest

from freeparticle.grid import (
    MomentumGrid,
    State,
    build_grid,
    derivative,
    derivative_matrix,
    gaussian_packet,
    inner_product,
    parity,
)


def test_build_grid_rejects_bad_parameters():
    with pytest.raises(ValueError):
        build_grid(9, 6.0, 1.0)
    with pytest.raises(ValueError):
        build_grid(6, 6.0, 1.0)
    with pytest.raises(ValueError):
        build_grid(8, -1.0, 1.0)
    with pytest.raises(ValueError):
        build_grid(8, 6.0, -0.5)
    with pytest.raises(ValueError):
        build_grid(8, 6.0, 1.0, blocks=3)


def test_axis_coords_are_cell_centered_and_parity_symmetric(grid8):
    c = grid8.axis_coords
    assert c.size == 8
    # no node at the origin and exact reflection symmetry
    assert np.all(np.abs(c) > 0)
    np.testing.assert_allclose(c + c[::-1], 0.0, atol=1e-15)
    np.testing.assert_allclose(np.diff(c), grid8.spacing)
    assert c[0] == pytest.approx(-grid8.p_max + 0.5 * grid8.spacing)


def test_energies_and_weights(grid8):
    p = grid8.momenta
    p0 = grid8.energies
    np.testing.assert_allclose(p0**2, grid8.mass**2 + (p**2).sum(axis=0), rtol=1e-14)
    np.testing.assert_allclose(grid8.weights, grid8.spacing**3 / p0, rtol=1e-14)


def test_massless_grid_has_no_zero_energy_node():
    g = build_grid(8, 6.0, 0.0)
    assert g.energies.min() > 0


def test_quadrature_integrates_separable_gaussian(grid12):
    # h^3/p0 weights against a p0-weighted integrand recover a plain
    # Riemann sum; at h=1 the midpoint aliasing term 2 exp(-pi^2) per axis
    # caps the accuracy near 3e-4 relative
    p = grid12.momenta
    f = np.exp(-(p**2).sum(axis=0))
    total = float(np.sum(grid12.weights * grid12.energies * f))
    assert total == pytest.approx(np.pi**1.5, rel=5e-4)


def test_state_norm_and_inner(grid8):
    rng = np.random.default_rng(7)
    a = State(rng.standard_normal(grid8.state_shape()) + 1j * rng.standard_normal(grid8.state_shape()), grid8)
    b = State(rng.standard_normal(grid8.state_shape()) + 1j * rng.standard_normal(grid8.state_shape()), grid8)
    assert a.norm() == pytest.approx(np.sqrt(abs(inner_product(a, a))), rel=1e-12)
    assert inner_product(a, b) == pytest.approx(np.conj(inner_product(b, a)), rel=1e-12)
    assert a.normalized().norm() == pytest.approx(1.0, abs=1e-12)


def test_state_arithmetic_and_blocks(grid8_pm):
    rng = np.random.default_rng(3)
    a = State(rng.standard_normal(grid8_pm.state_shape()) + 0j, grid8_pm)
    upper = a.block_part(0)
    lower = a.block_part(1)
    assert upper.norm() ** 2 + lower.norm() ** 2 == pytest.approx(a.norm() ** 2, rel=1e-12)
    np.testing.assert_allclose((a - a).amplitudes, 0.0)
    np.testing.assert_allclose((2.0 * a).amplitudes, 2.0 * a.amplitudes)


def test_gaussian_packet_support_rule(grid8):
    with pytest.raises(ValueError):
        gaussian_packet(grid8, (5.0, 0.0, 0.0), 1.0)
    pkt = gaussian_packet(grid8, (1.0, 0.0, 0.0), 1.2)
    assert pkt.norm() == pytest.approx(1.0, abs=1e-12)


def test_gaussian_packet_block_weights(grid8_pm):
    pkt = gaussian_packet(grid8_pm, (1.0, 0.0, 0.0), 1.2, block_weights=(1.0, 1.0))
    n0 = pkt.block_part(0).norm()
    n1 = pkt.block_part(1).norm()
    assert n0 == pytest.approx(n1, rel=1e-12)


def test_derivative_matrix_polynomial_exactness():
    n, h = 16, 0.5
    d = derivative_matrix(n, h, 4)
    x = -4.0 + (np.arange(n) + 0.5) * h
    for k in range(5):
        np.testing.assert_allclose(d @ x**k, k * x ** max(k - 1, 0) if k else 0.0 * x,
                                   atol=1e-10)


def test_derivative_matrix_anticommutes_with_reflection():
    d = derivative_matrix(12, 0.7, 4)
    r = np.eye(12)[::-1]
    np.testing.assert_allclose(r @ d @ r, -d, atol=1e-14)


def test_derivative_matrix_rejects_bad_order():
    with pytest.raises(ValueError):
        derivative_matrix(12, 0.5, 3)


def test_derivative_converges_at_stencil_order():
    errs = []
    for n in (16, 32):
        g = build_grid(n, 6.0, 1.0)
        p = g.momenta
        f = np.exp(-(p**2).sum(axis=0) / 4.0)
        exact = -0.5 * p[0] * f
        got = derivative(State(f.reshape(g.state_shape()) + 0j, g), 0)
        errs.append(float(np.abs(got.amplitudes.ravel() - exact).max()))
    order = np.log(errs[0] / errs[1]) / np.log(2.0)
    assert order > 3.5


def test_parity_is_an_exact_involution(grid8):
    rng = np.random.default_rng(11)
    s = State(rng.standard_normal(grid8.state_shape()) + 0j, grid8)
    np.testing.assert_allclose(parity(parity(s)).amplitudes, s.amplitudes, atol=1e-15)
    # parity flips every momentum: check against explicit reindexing
    p = grid8.momenta
    f = (p[0] + 2.0 * p[1] - p[2]).reshape(grid8.state_shape())
    flipped = parity(State(f + 0j, grid8))
    np.testing.assert_allclose(flipped.amplitudes, -f, atol=1e-12)


def test_grid_is_frozen(grid8):
    with pytest.raises((AttributeError, TypeError)):
        grid8.p_max = 7.0
