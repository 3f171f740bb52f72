"""Invariant suites behind ``minkflow check``.

Each suite returns a list of ``{"name", "passed", "value"}`` records.
Randomized checks draw from ``numpy.random.default_rng(seed)`` so a given
seed always produces the same report.
"""
from __future__ import annotations

import math
import warnings

import numpy as np

from .errors import ComparisonError, MinkflowError


def _rec(name, passed, value=None):
    if isinstance(value, float):
        value = float(f"{value:.6g}")
    return {"name": name, "passed": bool(passed), "value": value}


def _guard(name, fn):
    try:
        return fn()
    except (MinkflowError, ArithmeticError, ValueError) as exc:
        return [_rec(name, False, f"{type(exc).__name__}: {exc}")]


def _symfunc(rng):
    from .symfunc import (normalized_root, sigma_k, sigma_k_newton,
                          sigma_k_subsets, symmetric_eigenvalues)

    out = []
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 7))
        kap = rng.normal(size=n)
        for k in range(n + 1):
            a, b = sigma_k(kap, k), sigma_k_subsets(kap, k)
            worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    out.append(_rec("sigma_k matches subset enumeration", worst <= 1e-12, worst))
    ints = [int(v) for v in rng.integers(-5, 6, size=6)]
    exact = all(sigma_k(ints, k) == sigma_k_newton(ints, k) for k in range(7))
    out.append(_rec("Newton identities exact on integers", exact))
    kap = rng.uniform(0.1, 3.0, size=5)
    perm = rng.permutation(kap)
    dev = max(abs(sigma_k(kap, k) - sigma_k(perm, k)) for k in range(6))
    out.append(_rec("permutation invariance", dev <= 1e-12, dev))
    lam = float(rng.uniform(0.5, 2.0))
    dev = max(abs(sigma_k(lam * kap, k) - lam**k * sigma_k(kap, k)) / max(1.0, sigma_k(kap, k))
              for k in range(6))
    out.append(_rec("degree-k homogeneity", dev <= 1e-12, dev))
    roots = [normalized_root(kap, k) for k in range(1, 6)]
    out.append(_rec("Maclaurin chain on positive vectors",
                    all(roots[i] >= roots[i + 1] - 1e-12 for i in range(4))))
    A = rng.normal(size=(4, 4))
    A = A + A.T
    ev = symmetric_eigenvalues(A)
    ref = np.linalg.eigvalsh(A)
    err = float(np.max(np.abs(ev - ref)))
    out.append(_rec("Jacobi eigenvalues vs LAPACK", err <= 1e-10, err))
    return out


def _radial(rng):
    from .radial import (RadialParams, check_bounds, limit_profile)

    out = []
    r = np.linspace(0.0, 4.0, 401)
    p22 = limit_profile(RadialParams(2, 2))
    err = float(np.max(np.abs(p22.z_at(r) + np.expm1(-r * r))))
    out.append(_rec("n=k=2 closed form", err <= 1e-8, err))
    p11 = limit_profile(RadialParams(1, 1))
    err = float(np.max(np.abs(p11.slope(r) - np.tanh(r))))
    out.append(_rec("n=k=1 closed form", err <= 1e-8, err))
    out.append(_rec("C_asym n=k=2", abs(p22.C_asym - 0.5) <= 1e-3, p22.C_asym))
    out.append(_rec("C_asym n=k=1", abs(p11.C_asym - 2.0) <= 2e-3, p11.C_asym))
    out.append(_rec("c0 n=k=1 equals -log 2", abs(p11.c0 + math.log(2)) <= 1e-6, p11.c0))
    n = int(rng.integers(3, 5))
    k = int(rng.integers(1, n))
    prof = limit_profile(RadialParams(n, k))
    viol = check_bounds(prof, np.linspace(0.1, 3.0, 200))
    out.append(_rec(f"exponential bounds (n={n}, k={k})", viol <= 0, viol))
    return out


def _geometry(rng):
    from .geometry import GraphFunction, principal_curvatures, translator_residual
    from .radial import RadialParams, limit_profile

    out = []
    worst = 0.0
    for _ in range(10):
        x = rng.uniform(-2, 2, size=2)
        s = math.sqrt(1 + x @ x)
        du = x / s
        d2u = (np.eye(2) - np.outer(du, du)) / s
        worst = max(worst, float(np.max(np.abs(principal_curvatures(du, d2u) - 1.0))))
    out.append(_rec("hyperboloid curvatures equal 1", worst <= 1e-6, worst))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        prof = limit_profile(RadialParams(2, 1))
    g = GraphFunction.radial(prof.height, 1.0, 1.0 / 32)
    res = translator_residual(g, 1, 1.0)
    out.append(_rec("grid residual of (2,1) translator", res <= 5e-3, res))
    return out


def _barriers(rng):
    from .barriers import (SphereFunction, asymptotic_gap, barrier_eval,
                           barrier_grid, make_barrier_pair)
    from .radial import RadialParams, limit_profile

    out = []
    base = limit_profile(RadialParams(2, 2, r_max=14.0))
    zero = make_barrier_pair(base, SphereFunction(np.zeros(64)))
    q1, q2 = barrier_grid(zero, 4.0, 0.25)
    collapse = float(np.max(np.abs(q1.values - q2.values)))
    out.append(_rec("phi = 0 envelopes coincide", collapse <= 1e-10, collapse))
    c = float(rng.uniform(0.2, 1.0))
    const = make_barrier_pair(base, SphereFunction(np.full(64, c)))
    pts = rng.uniform(-4, 4, size=(50, 2))
    s = np.linalg.norm(pts, axis=1)
    M = const.M
    zs = const.z
    # the envelope over a circle of radius 2M is attained on the ray through x
    exact1 = c - 2 * M + zs(s + 2 * M)
    exact2 = c + 2 * M + zs(np.abs(s - 2 * M))
    err = max(float(np.max(np.abs(barrier_eval(const, pts, "sub") - exact1))),
              float(np.max(np.abs(barrier_eval(const, pts, "super") - exact2))))
    out.append(_rec("constant phi closed envelope", err <= 1e-8, err))
    wave = make_barrier_pair(base, SphereFunction.from_callable(lambda t: 0.3 * np.sin(2 * t), 128))
    q1, q2 = barrier_grid(wave, 4.0, 0.25)
    excess = float(np.max(q1.values - q2.values))
    out.append(_rec("ordering q1 <= q2 for 0.3 sin 2θ", excess <= 1e-10, excess))
    gaps = [asymptotic_gap(wave, R) for R in (3.0, 5.0)]
    out.append(_rec("asymptotic gap decreases", gaps[1] < gaps[0], gaps[1]))
    return out


def _flow(rng):
    from .flow import (FlowConfig, FlowState, RadialGraph, check_initial_admissible,
                       sandwich_check, step, target_values)
    from .radial import RadialParams, limit_profile

    out = []
    prof = limit_profile(RadialParams(2, 1))
    g = RadialGraph.sample(prof.height, 4.0, 0.02, 2)
    state = FlowState(g, 0.0, 1.0, 1)
    cfg = FlowConfig(t_end=0.5, target=prof)
    tv = target_values(prof, g)
    drift = 0.0
    while state.t < 0.5 - 1e-12:
        state = step(state, cfg)
        drift = max(drift, float(np.max(np.abs(state.normalized - tv))))
    out.append(_rec("translator is a fixed point", drift <= 1e-6, drift))
    bumped = RadialGraph.sample(lambda r: prof.height(r) + 0.3 * np.exp(-r * r), 4.0, 0.02, 2)
    s0 = FlowState(bumped, 0.0, 1.0, 1)
    s1 = step(s0, cfg)
    d0 = float(np.max(np.abs(s0.normalized - tv)))
    d1 = float(np.max(np.abs(s1.normalized - tv)))
    out.append(_rec("one step decreases the distance", d1 < d0, d1))
    rep = check_initial_admissible(s0)
    out.append(_rec("bump data admissible", rep.admissible, rep.max_ratio))
    bad = s1.graph.with_values(s1.graph.values + 1e-2 * (rng.uniform(size=g.values.size) > 0.5))
    detected = False
    try:
        sandwich_check(FlowState(bad, s1.t, 1.0, 1), tv, bumped.values)
    except ComparisonError:
        detected = True
    out.append(_rec("injected error violates the sandwich", detected))
    return out


def _legendre(rng):
    from .geometry import GraphFunction
    from .legendre import dual_residual, legendre_transform
    from .radial import RadialParams, limit_profile

    out = []
    h = 1.0 / 32
    g = GraphFunction.sample(lambda x, y: 0.5 * (x * x + y * y), 0.5, h)
    d = legendre_transform(g, r=0.5)
    X = d.coords()
    err = float(np.nanmax(np.abs(d.values - 0.5 * (X[0] ** 2 + X[1] ** 2))[d.resolved]))
    out.append(_rec("quadratic is self-dual", err <= 1e-12, err))
    dd = legendre_transform(d, r=0.25, spacelike=False)
    Y = dd.coords()
    err = float(np.nanmax(np.abs(dd.values - 0.5 * (Y[0] ** 2 + Y[1] ** 2))[dd.resolved]))
    out.append(_rec("double transform returns the quadratic", err <= 1e-8, err))
    prof = limit_profile(RadialParams(2, 2))
    g = GraphFunction.radial(prof.height, 2.0, h)
    d = legendre_transform(g, r=0.6)
    res = dual_residual(d, 2, 1.0)
    out.append(_rec("dual residual of the (2,2) translator", res <= 5e-3, res))
    hyp = GraphFunction.sample(lambda x, y: np.sqrt(1 + x * x + y * y), 2.0, h)
    res_h = dual_residual(legendre_transform(hyp, r=0.6), 2, 1.0)
    out.append(_rec("hyperboloid is not a dual translator", res_h > 0.05, res_h))
    return out


_SUITES = {
    "symfunc": _symfunc,
    "radial": _radial,
    "geometry": _geometry,
    "barriers": _barriers,
    "flow": _flow,
    "legendre": _legendre,
}


def run_suite(name, seed=0):
    """Run one suite with a seeded generator; returns its check records."""
    rng = np.random.default_rng(seed)
    fn = _SUITES[name]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        records = _guard(name, lambda: fn(rng))
    for rec in records:
        rec["name"] = f"{name}: {rec['name']}"
    return records
