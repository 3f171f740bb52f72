"""Acceptance gate: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the report lines
(they are also written when output is captured).
"""
import math
import time
import warnings

import numpy as np
import pytest

from minkflow.barriers import (SphereFunction, barrier_eval, barrier_grid,
                               make_barrier_pair)
from minkflow.errors import ComparisonError
from minkflow.flow import (FlowConfig, FlowState, RadialGraph, run_normalized,
                           sandwich_check, speed_support_ratio, step, target_values)
from minkflow.geometry import GraphFunction, principal_curvatures, translator_residual
from minkflow.legendre import dual_residual, legendre_transform
from minkflow.radial import RadialParams, limit_profile, remainder_ratio

FIVE_PAIRS = [(2, 1), (3, 1), (3, 2), (4, 2), (4, 3)]


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        assert ok, detail
    return emit


def _profile(n, k, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return limit_profile(RadialParams(n, k, **kw))


# -- translators ----------------------------------------------------------------

def test_criterion_01_closed_form_n2_k2(report):
    start = time.perf_counter()
    p = _profile(2, 2)
    elapsed = time.perf_counter() - start
    r = np.linspace(0.0, 4.0, 4001)
    err = float(np.max(np.abs(p.z_at(r) - (1.0 - np.exp(-r * r)))))
    report(1, err <= 1e-8 and elapsed < 1.0,
           f"max|z - (1 - e^(-r^2))| = {err:.2e} (tol 1e-8), runtime {elapsed:.3f} s (< 1 s)")


def test_criterion_02_closed_form_n1_k1(report):
    p = _profile(1, 1)
    r = np.linspace(0.0, 4.0, 4001)
    err = float(np.max(np.abs(p.slope(r) - np.tanh(r))))
    report(2, err <= 1e-8, f"max|y - tanh r| = {err:.2e} (tol 1e-8)")


def test_criterion_03_two_sided_bounds(report):
    r = np.linspace(0.1, 3.0, 2901)
    worst = -np.inf
    for n, k in FIVE_PAIRS:
        q = 1.0 - _profile(n, k).z_at(r)
        lower = np.exp(-(2.0 * n / k) * r**k) - 1e-6
        upper = np.exp(-r**k / n) + 1e-6
        worst = max(worst, float(np.max(lower - q)), float(np.max(q - upper)))
    report(3, worst <= 0.0, f"largest bound violation over five pairs = {worst:.2e} (<= 0)")


def test_criterion_04_asymptotic_plateau(report):
    spreads = {}
    for n, k in FIVE_PAIRS:
        p = _profile(n, k)
        rm = p.params.r_max
        C = p.C_at(np.linspace(rm - 1.0, rm, 401))
        spreads[(n, k)] = float((C.max() - C.min()) / abs(C.mean()))
    c22 = _profile(2, 2).C_asym
    c11 = _profile(1, 1).C_asym
    ok = (max(spreads.values()) < 0.01 and abs(c22 - 0.5) <= 1e-3 and abs(c11 - 2.0) <= 2e-3)
    report(4, ok, f"max relative spread {max(spreads.values()):.2e} (< 1%), "
                  f"C_asym(2,2) = {c22:.6f}, C_asym(1,1) = {c11:.6f}")


def test_criterion_05_height_expansion(report):
    details, ok = [], True
    for (n, k), target in (((2, 2), 0.25), ((1, 1), 1.0)):
        p = _profile(n, k)
        ratio = float(remainder_ratio(p, np.array([8.0]))[0])
        predicted = p.C_asym * k / (2 * n)
        ok &= abs(ratio - target) <= 0.02 * target and abs(predicted - target) <= 0.02 * target
        details.append(f"({n},{k}) ratio(8) = {ratio:.5f}, C_asym k/2n = {predicted:.5f}")
    report(5, ok, "; ".join(details) + " (within 2%)")


# -- geometry -------------------------------------------------------------------

def test_criterion_06_grid_residual(report):
    details, ok = [], True
    for k in (1, 2):
        p = _profile(2, k)
        res = [translator_residual(GraphFunction.radial(p.height, 1.0, h), k, 1.0)
               for h in (1 / 64, 1 / 128)]
        order = math.log2(res[0] / res[1])
        ok &= res[0] <= 5e-3 and order >= 1.8
        details.append(f"k={k}: residual(1/64) = {res[0]:.2e}, order = {order:.3f}")
    report(6, ok, "; ".join(details) + " (<= 5e-3, order >= 1.8)")


def test_criterion_07_hyperboloid(report, rng):
    worst = 0.0
    for x in rng.uniform(-3, 3, size=(200, 2)):
        s = math.sqrt(1 + x @ x)
        du = x / s
        d2u = (np.eye(2) - np.outer(du, du)) / s
        worst = max(worst, float(np.max(np.abs(principal_curvatures(du, d2u) - 1.0))))
    report(7, worst <= 1e-6, f"max|kappa_i - 1| = {worst:.2e} over 200 points (tol 1e-6)")


# -- flow -----------------------------------------------------------------------

def test_criterion_08_fixed_point(report):
    details, ok = [], True
    for k in (1, 2):
        p = _profile(2, k)
        state = FlowState(RadialGraph.sample(p.height, 4.0, 0.01, 2), 0.0, 1.0, k)
        cfg = FlowConfig(t_end=1.0, target=p)
        tv = target_values(p, state.graph)
        drift = 0.0
        while state.t < 1.0 - 1e-12:
            state = step(state, cfg)
            drift = max(drift, float(np.max(np.abs(state.normalized - tv))))
        ok &= drift <= 1e-6
        details.append(f"(2,{k}) sup drift = {drift:.2e}")
    report(8, ok, "; ".join(details) + " (tol 1e-6 on t in [0,1])")


def _bumped(p, amp=0.3):
    return lambda r: p.height(r) + amp * np.exp(-r * r)


@pytest.fixture(scope="module")
def run9():
    p = _profile(2, 1)
    state = FlowState(RadialGraph.sample(_bumped(p), 6.0, 0.01, 2), 0.0, 1.0, 1)
    cfg = FlowConfig(t_end=50.0, target=p, output_interval=0.25)
    start = time.perf_counter()
    res = run_normalized(state, cfg, on_violation="record")
    return state, res, time.perf_counter() - start


@pytest.fixture(scope="module")
def run9_grid():
    # the grid domain is square, so its corners reach |x| = 4 sqrt 2; velocity
    # 0.1 keeps them away from the light cone (see README)
    a = 0.1
    p = _profile(2, 1, a=a, r_max=140.0)
    g = GraphFunction.sample(lambda x, y: _bumped(p)(np.hypot(x, y)), 4.0, 1 / 32)
    state = FlowState(g, 0.0, a, 1)
    cfg = FlowConfig(t_end=50.0, target=p, tol_converged=5e-3)
    start = time.perf_counter()
    res = run_normalized(state, cfg, on_violation="record")
    return state, res, time.perf_counter() - start


def test_criterion_09_convergence_radial(report, run9):
    _, res, elapsed = run9
    d = [rec.sup_dist for rec in res.history]
    rises = float(np.max(np.diff(d)))
    ok = res.converged and rises <= 1e-6 and d[-1] < 1e-3 and elapsed < 120
    report(9, ok, f"radial: sup dist {d[0]:.3f} -> {d[-1]:.2e} at t = {res.t_converged:.2f}, "
                  f"largest rise {rises:.1e} (slack 1e-6), runtime {elapsed:.1f} s (< 120 s)")


@pytest.mark.slow
def test_criterion_09_convergence_grid(report, run9_grid):
    _, res, elapsed = run9_grid
    d = [rec.sup_dist for rec in res.history]
    ok = res.converged and d[-1] < 5e-3 and elapsed < 600
    report(9, ok, f"grid: sup dist {d[0]:.3f} -> {d[-1]:.2e} at t = {res.t_converged:.2f}, "
                  f"runtime {elapsed:.1f} s (< 600 s)")


def test_criterion_10_sandwich(report, run9):
    state0, res, _ = run9
    tv = target_values(_profile(2, 1), state0.graph)
    offset = state0.normalized - tv
    lower, upper = tv + min(0.0, offset.min()), tv + max(0.0, offset.max())
    final_ok = sandwich_check(res.state, lower, upper, raise_on_fail=False)
    bad = res.state.graph.values.copy()
    bad[50] = upper[50] + res.state.a * res.state.t + 1e-2
    try:
        sandwich_check(FlowState(res.state.graph.with_values(bad), res.state.t, 1.0, 1),
                       lower, upper)
        detected = False
    except ComparisonError:
        detected = True
    ok = res.sandwich_ok and final_ok and detected and not res.violations
    report(10, ok, f"sandwich held at {len(res.history)} checkpoints (slack 10h^2 = "
                   f"{10 * state0.h**2:.0e}); injected +1e-2 detected: {detected}")


@pytest.mark.slow
def test_criterion_10_sandwich_grid(report, run9_grid):
    _, res, _ = run9_grid
    report(10, res.sandwich_ok and not res.violations,
           f"grid: sandwich held at {len(res.history)} checkpoints")


# -- barriers -------------------------------------------------------------------

def test_criterion_11_barrier_ordering(report, rng):
    base = _profile(2, 2, r_max=14.0)
    data = {"0": SphereFunction(np.zeros(128)),
            "0.7": SphereFunction(np.full(128, 0.7)),
            "0.3 sin 2t": SphereFunction.from_callable(lambda t: 0.3 * np.sin(2 * t), 128)}
    excess = {}
    for name, phi in data.items():
        q1, q2 = barrier_grid(make_barrier_pair(base, phi), 6.0, 0.12)
        assert q1.values.shape == (101, 101)
        excess[name] = float(np.max(q1.values - q2.values))
    # closed envelope for constant data against dense enumeration of the sphere
    c = 0.7
    pair = make_barrier_pair(base, data["0.7"])
    dense = make_barrier_pair(base, SphereFunction(np.full(2**17, c)), M=pair.M)
    pts = rng.uniform(-6, 6, size=(40, 2))
    s = np.linalg.norm(pts, axis=1)
    closed = {"sub": c - 2 * pair.M + pair.z(s + 2 * pair.M),
              "super": c + 2 * pair.M + pair.z(np.abs(s - 2 * pair.M))}
    gap = 0.0
    for which, ref in closed.items():
        enum = np.concatenate([barrier_eval(dense, chunk, which, polish=False)
                               for chunk in np.array_split(pts, 8)])
        gap = max(gap, float(np.max(np.abs(enum - ref))))
    ok = max(excess.values()) <= 1e-10 and gap <= 1e-8
    detail = ", ".join(f"phi={k}: {v:.1e}" for k, v in excess.items())
    report(11, ok, f"max(q1 - q2) {detail} (<= 1e-10); closed vs dense (m = 2^17) = {gap:.1e} (1e-8)")


# -- Legendre -------------------------------------------------------------------

def test_criterion_12_legendre(report):
    h = 1 / 32
    g = GraphFunction.sample(lambda x, y: 0.5 * (x * x + y * y), 0.5, h)
    d = legendre_transform(g, r=0.5)
    X = d.coords()
    aligned = float(np.max(np.abs(d.values - 0.5 * (X[0] ** 2 + X[1] ** 2))[d.resolved]))
    dd = legendre_transform(d, r=0.25, spacelike=False)
    Y = dd.coords()
    invol = float(np.max(np.abs(dd.values - 0.5 * (Y[0] ** 2 + Y[1] ** 2))[dd.resolved]))
    p = _profile(2, 2)
    res = [dual_residual(legendre_transform(GraphFunction.radial(p.height, 2.0, hh), r=0.6), 2, 1.0)
           for hh in (1 / 16, 1 / 32, 1 / 64)]
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    ok = (aligned <= 1e-12 and invol <= 10 * h * h and res[-1] <= 5e-3
          and np.all(np.abs(orders - 2.0) <= 0.2))
    report(12, ok, f"aligned {aligned:.1e}, involution {invol:.1e} (<= 10h^2 = {10 * h * h:.1e}); "
                   f"dual residual(1/64) = {res[-1]:.2e} (<= 5e-3), orders {np.round(orders, 3)}")


# -- speed bound ----------------------------------------------------------------

def test_criterion_13_speed_bound(report, run9):
    _, res, _ = run9
    ratios = [rec.max_phi_over_v for rec in res.history]
    rise = max(ratios) - ratios[0]
    exact = {a: speed_support_ratio(_profile(2, 1, a=a, r_max=12.0 / a)) for a in (1.0, 2.0)}
    exact22 = speed_support_ratio(_profile(2, 2))
    dev = max(max(abs(v - a) for a, v in exact.items()), abs(exact22 - 1.0))
    ok = rise <= 1e-3 and dev <= 1e-6
    report(13, ok, f"run 9: max Phi/v {max(ratios):.4f} vs initial {ratios[0]:.4f} (+1e-3); "
                   f"exact translators |Phi/v - a| = {dev:.1e} (tol 1e-6)")


@pytest.mark.slow
def test_criterion_13_speed_bound_grid(report, run9_grid):
    _, res, _ = run9_grid
    ratios = [rec.max_phi_over_v for rec in res.history]
    report(13, max(ratios) - ratios[0] <= 1e-3,
           f"grid: max Phi/v {max(ratios):.4f} vs initial {ratios[0]:.4f} (+1e-3)")
