import csv

import numpy as np
import pytest

from minkflow.errors import BoundaryError, DegenerateError, ParameterError, SpacelikeError
from minkflow.geometry import (GraphFunction, curvature_field, discrete_gradient_hessian,
                               lorentz_factor, principal_curvatures, shape_operator,
                               translator_residual, write_curvature_csv)
from minkflow.radial import radial_curvatures


def hyperboloid_derivs(x):
    s = np.sqrt(1 + x @ x)
    return x / s, (np.eye(x.size) - np.outer(x, x) / s**2) / s


def test_affine_and_quadratic_exact():
    h = 0.125
    g = GraphFunction.sample(lambda x, y: 0.3 * x - 0.2 * y + 1.0, 1.0, h)
    du, d2u = discrete_gradient_hessian(g, (5, 9))
    assert du == pytest.approx([0.3, -0.2], abs=1e-14)
    assert d2u == pytest.approx(np.zeros((2, 2)), abs=1e-12)
    q = GraphFunction.sample(lambda x, y: 0.5 * (x * x + y * y), 1.0, h)
    _, d2u = discrete_gradient_hessian(q, (3, 12))
    assert d2u == pytest.approx(np.eye(2), abs=1e-12)
    with pytest.raises(BoundaryError):
        discrete_gradient_hessian(q, (0, 4))


def test_cubic_second_order():
    errs = []
    for h in (0.1, 0.05, 0.025):
        g = GraphFunction.sample(lambda x, y: 0.1 * x**3 + 0 * y, 1.0, h)
        node = (int(round(1.5 / h)), int(round(1.0 / h)))
        du, _ = discrete_gradient_hessian(g, node)
        errs.append(abs(du[0] - 0.3 * 0.25))
    assert np.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.05)
    assert np.log2(errs[1] / errs[2]) == pytest.approx(2.0, abs=0.05)


def test_shape_operator_flat_point():
    A = shape_operator(np.zeros(2), np.eye(2))
    assert A == pytest.approx(np.eye(2))
    with pytest.raises(SpacelikeError):
        shape_operator(np.array([1.0, 0.0]), np.eye(2))
    with pytest.raises(SpacelikeError):
        lorentz_factor(1.0)


def test_hyperboloid_all_ones(rng):
    for _ in range(50):
        x = rng.uniform(-3, 3, size=int(rng.integers(1, 5)))
        du, d2u = hyperboloid_derivs(x)
        assert principal_curvatures(du, d2u) == pytest.approx(np.ones(x.size), abs=1e-10)


def test_scaling_law(rng):
    lam = 2.5
    for _ in range(10):
        x = rng.uniform(-2, 2, size=2)
        # u(λx)/λ has Du(λx) and λ D²u(λx)
        du, d2u = hyperboloid_derivs(lam * x)
        assert principal_curvatures(du, lam * d2u) == pytest.approx(lam * np.ones(2), abs=1e-10)


def test_radial_formula_agrees_with_eigen_path(profile):
    p = profile(2, 2)
    for r in (0.3, 1.0, 2.0):
        y, dy = float(p.slope(r)), float(p.dslope(r))
        e = np.array([np.cos(0.7), np.sin(0.7)])
        t = np.array([-e[1], e[0]])
        du = y * e
        d2u = dy * np.outer(e, e) + (y / r) * np.outer(t, t)
        kap = np.sort(principal_curvatures(du, d2u))
        ref = np.sort(radial_curvatures(r, y, dy, 2))
        assert kap == pytest.approx(ref, abs=1e-12)


def test_field_on_affine_and_hyperboloid():
    g = GraphFunction.sample(lambda x, y: 0.4 * x + 0.1 * y, 1.0, 0.1)
    for k in (1, 2):
        f = curvature_field(g, k)
        assert np.max(np.abs(f.phi)) < 1e-12
        assert translator_residual(g, k, 1.0) == pytest.approx(1 / np.sqrt(1 - 0.17), rel=1e-10)
    hyp = GraphFunction.sample(lambda x, y: np.sqrt(1 + x * x + y * y), 1.0, 1 / 64)
    for k in (1, 2):
        f = curvature_field(hyp, k)
        assert np.all(f.w > 0) and np.all(f.w <= 1)
        assert np.allclose(f.v * f.w, 1.0, rtol=1e-15)
        assert np.max(np.abs(f.phi[f.mask] - 1)) < 1e-3


def test_concave_graph_is_degenerate():
    g = GraphFunction.sample(lambda x, y: -0.2 * (x * x + y * y), 1.0, 0.1)
    with pytest.raises(DegenerateError):
        curvature_field(g, 1)


def test_affine_residual_is_a_over_w():
    g = GraphFunction.sample(lambda x, y: 0.4 * x + 0.1 * y + 0.001 * (x * x + y * y), 1.0, 0.1)
    f = curvature_field(g, 1)
    assert translator_residual(g, 1, 1.0, field=f) == pytest.approx(
        np.max((1 / f.w - f.phi)[f.mask]), rel=1e-14)
    assert translator_residual(g, 1, 1.0) > 1.0


def test_hyperboloid_is_not_a_translator():
    hyp = GraphFunction.sample(lambda x, y: np.sqrt(1 + x * x + y * y), 2.0, 1 / 32)
    assert translator_residual(hyp, 2, 1.0) > 0.01


def test_radial_translator_residual(profile):
    for k in (1, 2):
        g = GraphFunction.radial(profile(2, k).height, 1.0, 1 / 64)
        assert translator_residual(g, k, 1.0) <= 5e-3


def test_translator_refinement_order(profile):
    p = profile(2, 2)
    res = [translator_residual(GraphFunction.radial(p.height, 1.0, h), 2, 1.0)
           for h in (1 / 32, 1 / 64, 1 / 128)]
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    # the order climbs towards 2 as h shrinks
    assert orders[1] > orders[0]
    assert orders[1] > 1.8


def test_rotation_invariance():
    h = 1 / 64
    # a rotated Gaussian bump lands the same radial samples on rotated nodes
    def u(x, y):
        return 0.3 * np.exp(-(x * x + y * y)) + 0.2 * (x * x + y * y)

    g = GraphFunction.sample(u, 1.0, h)
    f = curvature_field(g, 1)
    # a quarter turn maps the grid onto itself
    g_rot = GraphFunction.sample(lambda x, y: u(-y, x), 1.0, h)
    f_rot = curvature_field(g_rot, 1)
    assert np.max(np.abs(np.rot90(f.kappa, 1, axes=(0, 1)) - f_rot.kappa)) < 1e-10
    # in every direction the grid curvatures match the radial formula
    X, Y = f.x
    r = np.hypot(X, Y)
    e = np.exp(-r * r)
    y = -0.6 * r * e + 0.4 * r
    dy = (1.2 * r * r - 0.6) * e + 0.4
    ref = np.sort(radial_curvatures(r, y, dy, 2), axis=-1)
    scale = np.max(np.abs(ref))
    assert np.max(np.abs(f.kappa - ref)[f.mask]) <= 10 * h**2 * scale


def test_spacelike_violation_raises():
    g = GraphFunction.sample(lambda x, y: 1.2 * x + 0 * y, 1.0, 0.1)
    with pytest.raises(SpacelikeError):
        curvature_field(g, 1)


def test_invalid_inputs():
    with pytest.raises(ParameterError):
        GraphFunction(np.zeros((5, 5)), 1.0, 0.1)
    with pytest.raises(ParameterError):
        GraphFunction(np.full((3, 3), np.nan), 1.0, 1.0)
    g = GraphFunction.sample(lambda x, y: 0.5 * (x * x + y * y), 1.0, 0.25)
    with pytest.raises(ParameterError):
        curvature_field(g, 3)


def test_curvature_csv(tmp_path):
    g = GraphFunction.sample(lambda x, y: np.sqrt(1 + x * x + y * y), 1.0, 0.25)
    f = curvature_field(g, 2)
    write_curvature_csv(f, tmp_path / "c.csv")
    rows = list(csv.reader(open(tmp_path / "c.csv")))
    assert rows[0] == ["x1", "x2", "kappa1", "kappa2", "w", "Phi"]
    assert len(rows) - 1 == int(f.mask.sum())
