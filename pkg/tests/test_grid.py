"""Grid construction, regions, norms, and the discrete operators."""

import math

import numpy as np
import pytest

from ilim.grid import (
    Region,
    ScalarField,
    VectorField,
    curl2d,
    divergence2d,
    grids_compatible,
    integrate,
    layer_region,
    lp_norm,
    make_channel_grid,
    strength_for_min_spacing,
    x_derivative,
    y_derivative,
)


# ---------------------------------------------------------------------------
# construction


def test_uniform_grid_coordinates_and_weight_sum():
    g = make_channel_grid(8, 5, 2.0 * np.pi, 1.0, clustering="uniform")
    assert np.array_equal(g.y, np.array([0.0, 0.25, 0.5, 0.75, 1.0]))
    assert g.x[0] == 0.0
    assert abs(g.quad_weights.sum() - 2.0 * np.pi) <= 1e-12 * 2.0 * np.pi


def test_unit_area_weight_sum():
    g = make_channel_grid(8, 5, 1.0, 1.0, clustering="uniform")
    assert abs(g.quad_weights.sum() - 1.0) <= 1e-12


def test_tanh_grid_clusters_near_wall():
    g = make_channel_grid(64, 65, 2.0 * np.pi, 2.0, clustering="tanh", strength=2.0)
    uniform_gap = 2.0 / 64
    assert g.dy_min < uniform_gap
    assert g.dy_min == g.y[1] - g.y[0]
    assert g.y[0] == 0.0 and g.y[-1] == 2.0
    assert np.all(np.diff(g.y) > 0.0)
    assert abs(g.quad_weights.sum() - 4.0 * np.pi) <= 1e-12 * 4.0 * np.pi


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(nx=7, ny=5, period=1.0, height=1.0),
        dict(nx=2, ny=5, period=1.0, height=1.0),
        dict(nx=8, ny=2, period=1.0, height=1.0),
        dict(nx=8, ny=5, period=0.0, height=1.0),
        dict(nx=8, ny=5, period=1.0, height=-1.0),
        dict(nx=8, ny=5, period=1.0, height=1.0, clustering="spline"),
        dict(nx=8, ny=5, period=1.0, height=1.0, clustering="tanh", strength=0.0),
    ],
)
def test_grid_validation_errors(kwargs):
    with pytest.raises(ValueError):
        make_channel_grid(**kwargs)


def test_strength_for_min_spacing_hits_target():
    target = 1e-3
    s = strength_for_min_spacing(65, 2.0, target)
    g = make_channel_grid(8, 65, 1.0, 2.0, clustering="tanh", strength=s)
    assert abs((g.y[1] - g.y[0]) - target) <= 1e-10 * target


def test_strength_for_min_spacing_rejects_coarse_target():
    with pytest.raises(ValueError):
        strength_for_min_spacing(65, 2.0, 2.0 / 64)


def test_grids_compatible_on_rebuild():
    a = make_channel_grid(16, 17, 1.0, 2.0, clustering="tanh", strength=3.0)
    b = make_channel_grid(16, 17, 1.0, 2.0, clustering="tanh", strength=3.0)
    c = make_channel_grid(16, 33, 1.0, 2.0, clustering="tanh", strength=3.0)
    assert a is not b
    assert grids_compatible(a, b)
    assert not grids_compatible(a, c)


# ---------------------------------------------------------------------------
# fields and regions


def test_scalar_field_rejects_bad_values(unit_grid):
    with pytest.raises(ValueError):
        ScalarField(unit_grid, np.zeros((3, 3)))
    bad = np.zeros(unit_grid.shape)
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        ScalarField(unit_grid, bad)


def test_fields_are_immutable(unit_grid):
    f = ScalarField(unit_grid, np.ones(unit_grid.shape))
    with pytest.raises(ValueError):
        f.values[0, 0] = 2.0
    v = VectorField(unit_grid, np.ones(unit_grid.shape), np.zeros(unit_grid.shape))
    with pytest.raises(ValueError):
        v.comp1[0, 0] = 2.0


def test_region_mask_validation(unit_grid):
    with pytest.raises(ValueError):
        Region(unit_grid, np.zeros(unit_grid.shape))  # not boolean


def test_layer_region_empty_and_full(unit_grid):
    assert layer_region(unit_grid, 0.0).is_empty
    full = layer_region(unit_grid, unit_grid.height)
    assert full.node_count == unit_grid.nx * (unit_grid.ny - 1)
    with pytest.raises(ValueError):
        layer_region(unit_grid, -0.1)


def test_layer_region_two_rows_on_uniform_grid():
    g = make_channel_grid(8, 9, 1.0, 1.0, clustering="uniform")
    region = layer_region(g, g.y[2])
    assert region.node_count == 2 * g.nx
    rows = np.unique(np.nonzero(region.mask)[1])
    assert np.array_equal(rows, np.array([1, 2]))


# ---------------------------------------------------------------------------
# norms and quadrature


def test_lp_norm_constant_field_unit_area(unit_grid):
    f = ScalarField(unit_grid, np.ones(unit_grid.shape))
    assert lp_norm(f, 2.0) == pytest.approx(1.0, rel=1e-14)


def test_lp_norm_constant_on_region_is_area_times_c(unit_grid):
    region = layer_region(unit_grid, unit_grid.y[2])
    area = integrate(unit_grid, np.ones(unit_grid.shape), region)
    c = -3.5
    f = ScalarField(unit_grid, np.full(unit_grid.shape, c))
    assert lp_norm(f, 1.0, region) == pytest.approx(abs(c) * area, rel=1e-14)


def test_lp_norm_validation_and_empty_region(unit_grid):
    f = ScalarField(unit_grid, np.ones(unit_grid.shape))
    with pytest.raises(ValueError):
        lp_norm(f, 0.5)
    assert lp_norm(f, 2.0, layer_region(unit_grid, 0.0)) == 0.0
    other = make_channel_grid(8, 9, 1.0, 1.0, clustering="uniform")
    with pytest.raises(ValueError):
        lp_norm(f, 2.0, layer_region(other, 0.5))


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0, np.inf])
def test_lp_norm_against_brute_force(p):
    g = make_channel_grid(16, 21, 2.0 * np.pi, 3.0, clustering="tanh", strength=2.0)
    rng = np.random.default_rng(7)
    vals = rng.normal(size=g.shape)
    f = ScalarField(g, vals)
    region = layer_region(g, 1.2)

    # independent quadrature: rebuild trapezoid weights from coordinates
    dy = np.diff(g.y)
    wy = np.concatenate(([0.5 * dy[0]], 0.5 * (dy[:-1] + dy[1:]), [0.5 * dy[-1]]))
    dx = g.period / g.nx
    mask = (g.y > 0.0) & (g.y <= 1.2)
    if np.isinf(p):
        expected = np.abs(vals[:, mask]).max()
    else:
        terms = [
            dx * wy[j] * abs(vals[i, j]) ** p
            for i in range(g.nx)
            for j in range(g.ny)
            if mask[j]
        ]
        expected = math.fsum(terms) ** (1.0 / p)
    assert lp_norm(f, p, region) == pytest.approx(expected, rel=1e-12)


def test_lp_norm_region_monotone_and_homogeneous(unit_grid):
    rng = np.random.default_rng(3)
    vals = rng.normal(size=unit_grid.shape)
    f = ScalarField(unit_grid, vals)
    inner = layer_region(unit_grid, 0.3)
    outer = layer_region(unit_grid, 0.8)
    for p in (1.0, 2.0, np.inf):
        assert lp_norm(f, p, inner) <= lp_norm(f, p, outer)
    g = ScalarField(unit_grid, -2.5 * vals)
    assert lp_norm(g, np.inf) == 2.5 * lp_norm(f, np.inf)
    for p in (1.0, 2.0, 3.0):
        assert lp_norm(g, p) == pytest.approx(2.5 * lp_norm(f, p), rel=1e-13)


def test_lp_norm_inf_is_region_max(unit_grid):
    rng = np.random.default_rng(11)
    vals = rng.normal(size=unit_grid.shape)
    f = ScalarField(unit_grid, vals)
    region = layer_region(unit_grid, 0.5)
    assert lp_norm(f, np.inf, region) == np.abs(vals[region.mask]).max()


def test_integrate_full_domain(unit_grid):
    assert integrate(unit_grid, np.ones(unit_grid.shape)) == pytest.approx(1.0, rel=1e-14)


# ---------------------------------------------------------------------------
# derivatives


def test_x_derivative_exact_on_band_limited(small_grid):
    g = small_grid
    vals = np.sin(3.0 * g.x)[:, None] * np.ones(g.ny)[None, :]
    expect = 3.0 * np.cos(3.0 * g.x)[:, None] * np.ones(g.ny)[None, :]
    assert np.abs(x_derivative(g, vals) - expect).max() <= 1e-12


def test_y_derivative_exact_on_quadratics():
    g = make_channel_grid(8, 17, 1.0, 2.0, clustering="tanh", strength=1.5)
    vals = np.broadcast_to(1.0 + 2.0 * g.y - 3.0 * g.y**2, g.shape).copy()
    expect = np.broadcast_to(2.0 - 6.0 * g.y, g.shape)
    assert np.abs(y_derivative(g, vals) - expect).max() <= 1e-11


def test_y_derivative_second_order():
    errs = []
    for ny in (33, 65, 129):
        g = make_channel_grid(8, ny, 1.0, 2.0, clustering="uniform")
        vals = np.broadcast_to(np.sin(2.0 * g.y), g.shape).copy()
        expect = 2.0 * np.cos(2.0 * g.y)
        errs.append(np.abs(y_derivative(g, vals) - expect).max())
    orders = np.log(np.array(errs[:-1]) / np.array(errs[1:])) / np.log(2.0)
    assert np.all(orders > 1.9)


# ---------------------------------------------------------------------------
# curl and divergence


def test_curl_of_linear_shear_is_minus_one(small_grid):
    g = small_grid
    u = VectorField(g, np.broadcast_to(g.y, g.shape).copy(), np.zeros(g.shape))
    assert np.abs(curl2d(u).values + 1.0).max() <= 1e-12


def test_curl_of_rest_state_is_zero(small_grid):
    g = small_grid
    u = VectorField(g, np.zeros(g.shape), np.zeros(g.shape))
    assert np.all(curl2d(u).values == 0.0)


def test_curl_second_order_against_analytic():
    errs = []
    for ny in (33, 65, 129):
        g = make_channel_grid(32, ny, 2.0 * np.pi, 2.0, clustering="uniform")
        gy = np.exp(-g.y) * np.sin(g.y)
        dgy = np.exp(-g.y) * (np.cos(g.y) - np.sin(g.y))
        u = VectorField(g, np.sin(g.x)[:, None] * gy[None, :], np.zeros(g.shape))
        expect = -np.sin(g.x)[:, None] * dgy[None, :]
        errs.append(np.abs(curl2d(u).values - expect).max())
    orders = np.log(np.array(errs[:-1]) / np.array(errs[1:])) / np.log(2.0)
    assert np.all(orders > 1.9)


def test_divergence_of_shear_is_zero(small_grid):
    g = small_grid
    u = VectorField(g, np.broadcast_to(g.y, g.shape).copy(), np.zeros(g.shape))
    assert np.abs(divergence2d(u).values).max() <= 1e-12


def test_divergence_patch_cancellation(small_grid):
    # periodic analogue of the (x1, -x2) patch test: d1(sin x1) cancels
    # d2(-x2 cos x1) exactly (spectral derivative exact, FD exact on linear y)
    g = small_grid
    u = VectorField(
        g,
        np.broadcast_to(np.sin(g.x)[:, None], g.shape).copy(),
        -np.cos(g.x)[:, None] * g.y[None, :],
    )
    assert np.abs(divergence2d(u).values).max() <= 1e-12


def test_operators_are_linear(small_grid):
    g = small_grid
    rng = np.random.default_rng(0)
    a = VectorField(g, rng.normal(size=g.shape), rng.normal(size=g.shape))
    b = VectorField(g, rng.normal(size=g.shape), rng.normal(size=g.shape))
    ab = VectorField(g, a.comp1 + b.comp1, a.comp2 + b.comp2)
    for op in (curl2d, divergence2d):
        combined = op(ab).values
        split = op(a).values + op(b).values
        assert np.abs(combined - split).max() <= 1e-10 * max(1.0, np.abs(split).max())
