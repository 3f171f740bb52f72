import csv
import warnings

import numpy as np
import pytest

from minkflow.barriers import (SphereFunction, asymptotic_gap, barrier_equation_signs,
                               barrier_eval, barrier_grid, make_barrier_pair,
                               read_sphere_csv, write_barrier_csv)
from minkflow.errors import ParameterError
from minkflow.radial import RadialParams, limit_profile, scaled_translator


@pytest.fixture(scope="module")
def base():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return limit_profile(RadialParams(2, 2, r_max=14.0))


def wave(m=128):
    return SphereFunction.from_callable(lambda t: 0.3 * np.sin(2 * t), m)


def test_spectral_derivatives_exact_on_band_limited():
    s = wave(64)
    t = s.theta
    assert s.dphi == pytest.approx(0.6 * np.cos(2 * t), abs=1e-12)
    assert s.d2phi == pytest.approx(-1.2 * np.sin(2 * t), abs=1e-12)
    tt = np.linspace(0, 7, 50)
    assert s.eval(tt) == pytest.approx(0.3 * np.sin(2 * tt), abs=1e-12)
    # the maximum of |φ| + |φ'| + |φ''| over the samples
    ref = np.max(0.3 * np.abs(np.sin(2 * t)) + 0.6 * np.abs(np.cos(2 * t)) + 1.2 * np.abs(np.sin(2 * t)))
    assert s.c2_norm == pytest.approx(ref, rel=1e-12)


def test_sphere_function_validation():
    with pytest.raises(ParameterError):
        SphereFunction(np.zeros(6))
    with pytest.raises(ParameterError):
        SphereFunction(np.array([0.0, 1.0, np.inf, 0.0]))


def test_pair_validation(base):
    with pytest.raises(ParameterError):
        make_barrier_pair(base, wave(), M=-1.0)
    pair = make_barrier_pair(base, wave())
    assert pair.M == pytest.approx(wave().c2_norm)
    with pytest.raises(ParameterError):
        barrier_eval(pair, np.zeros(2), "middle")


def test_zero_data_collapses(base):
    pair = make_barrier_pair(base, SphereFunction(np.zeros(32)))
    assert pair.M == 0
    x = np.random.default_rng(1).uniform(-4, 4, size=(30, 2))
    ref = scaled_translator(base, 1.0, np.linalg.norm(x, axis=1))
    assert barrier_eval(pair, x, "sub") == pytest.approx(ref, abs=1e-14)
    assert barrier_eval(pair, x, "super") == pytest.approx(ref, abs=1e-14)


def test_constant_data_closed_form(base):
    c = 0.7
    pair = make_barrier_pair(base, SphereFunction(np.full(64, c)))
    M = pair.M
    x = np.random.default_rng(2).uniform(-5, 5, size=(40, 2))
    s = np.linalg.norm(x, axis=1)
    far = s > 2 * M
    q1 = barrier_eval(pair, x, "sub")
    q2 = barrier_eval(pair, x, "super")
    assert q1 == pytest.approx(c - 2 * M + pair.z(s + 2 * M), abs=1e-8)
    assert q2[far] == pytest.approx(c + 2 * M + pair.z(s[far] - 2 * M), abs=1e-8)
    # sampling the envelope leaves an O(Δθ²) error, about 2e-9 here
    dense = make_barrier_pair(base, SphereFunction(np.full(2**17, c)), M=M)
    assert q1 == pytest.approx(barrier_eval(dense, x, "sub", polish=False), abs=1e-8)
    assert q2 == pytest.approx(barrier_eval(dense, x, "super", polish=False), abs=1e-8)


def test_polish_matches_dense_enumeration(base):
    pair = make_barrier_pair(base, wave())
    dense = make_barrier_pair(base, wave(2**15), M=pair.M)
    x = np.random.default_rng(3).uniform(-4, 4, size=(25, 2))
    for which in ("sub", "super"):
        assert barrier_eval(pair, x, which) == pytest.approx(
            barrier_eval(dense, x, which, polish=False), abs=1e-7)


def test_ordering_sin2theta(base):
    q1, q2 = barrier_grid(make_barrier_pair(base, wave()), 6.0, 0.24)
    assert np.max(q1.values - q2.values) <= 1e-10


def test_asymptotic_gap(base):
    pair = make_barrier_pair(base, wave())
    gaps = [asymptotic_gap(pair, R) for R in (3.0, 5.0, 7.0)]
    assert gaps[0] > gaps[1] > gaps[2]
    zero = make_barrier_pair(base, SphereFunction(np.zeros(32)))
    assert asymptotic_gap(zero, 4.0) <= np.exp(-16) / 16 + 1e-9


def test_super_minus_sub_shrinks(base):
    pair = make_barrier_pair(base, wave())
    theta = pair.phi.theta[::8]
    y = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    spreads = []
    for R in (2.0, 4.0, 8.0):
        d = barrier_eval(pair, R * y, "super") - barrier_eval(pair, R * y, "sub")
        assert np.all(d >= -1e-10)
        assert np.all(d <= 4 * pair.M + 1e-10)
        spreads.append(np.max(d))
    assert spreads[0] > spreads[1] > spreads[2]


def test_sign_report_constant_data(base):
    pair = make_barrier_pair(base, SphereFunction(np.full(64, 0.7)))
    rep = barrier_equation_signs(pair, 3.0, 1 / 16, 2)
    assert rep.sub_nodes > 100 and rep.super_nodes > 100
    assert rep.sub_fraction >= 0.95
    assert rep.super_fraction >= 0.95


def test_sphere_csv_roundtrip(tmp_path):
    s = wave(32)
    path = tmp_path / "phi.csv"
    with open(path, "w") as fh:
        fh.write("theta,phi\n")
        for t, v in zip(s.theta, s.phi):
            fh.write(f"{t:.17g},{v:.17g}\n")
    back = read_sphere_csv(path)
    assert back.phi == pytest.approx(s.phi, abs=1e-15)


@pytest.mark.parametrize("body", [
    "theta,phi\n0,0\n1,0\n2,0\n3,0\n",
    "theta,psi\n0,0\n",
    "theta,phi\n0,zero\n",
    "theta,phi\n0,0\n",
])
def test_sphere_csv_rejects(tmp_path, body):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(ParameterError):
        read_sphere_csv(path)


def test_barrier_csv(base, tmp_path):
    q1, q2 = barrier_grid(make_barrier_pair(base, wave(16)), 1.0, 0.5)
    write_barrier_csv(q1, q2, tmp_path / "b.csv")
    rows = list(csv.reader(open(tmp_path / "b.csv")))
    assert rows[0] == ["x1", "x2", "q1", "q2"]
    assert len(rows) == 26
