"""Sub- and supersolution envelopes built from data on the unit circle.

For n = 2 and sphere data φ(θ), with ``p_i(y) = Dφ(y) ± 2M y`` and
``z_a(s) = u_1(a s)/a`` the zero-offset translator of velocity a,

    q1(x) = sup_y  φ(y) - p_1(y)·y + z_a(|x + p_1(y)|)
    q2(x) = inf_y  φ(y) - p_2(y)·y + z_a(|x + p_2(y)|).

The sup/inf over y ∈ S¹ is a coarse scan over the sample angles followed by
a golden-section polish on the trigonometric interpolant of φ.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, ParameterError
from .geometry import (GraphFunction, grid_derivatives, phi_from_kappa,
                       shape_operator_2d)
from .symfunc import eigenvalues_2x2
from .radial import scaled_translator

__all__ = [
    "SphereFunction",
    "BarrierPair",
    "make_barrier_pair",
    "barrier_eval",
    "barrier_grid",
    "asymptotic_gap",
    "barrier_equation_signs",
    "SignReport",
    "read_sphere_csv",
    "write_barrier_csv",
]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SphereFunction:
    """Samples of φ at ``θ_j = θ_0 + 2πj/m`` with spectral derivatives."""

    phi: np.ndarray
    theta0: float = 0.0

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        object.__setattr__(self, "phi", phi)
        m = phi.size
        if phi.ndim != 1 or m < 4 or m & (m - 1):
            raise ParameterError(f"need a power-of-two number of samples >= 4, got {m}")
        if not np.all(np.isfinite(phi)):
            raise ParameterError("sphere data must be finite")
        coef = np.fft.rfft(phi) / m
        object.__setattr__(self, "_coef", coef)
        # band-limited data only needs its non-negligible modes
        cutoff = 1e-15 * max(float(np.max(np.abs(coef))), 1e-300)
        object.__setattr__(self, "_modes", np.flatnonzero(np.abs(coef[1:]) > cutoff) + 1)

    @property
    def m(self):
        return self.phi.size

    @property
    def theta(self):
        return self.theta0 + 2.0 * np.pi * np.arange(self.m) / self.m

    @classmethod
    def from_callable(cls, func, m=256):
        theta = 2.0 * np.pi * np.arange(m) / m
        return cls(np.asarray(func(theta), dtype=float) * np.ones(m))

    def eval(self, theta, deriv=0):
        """Trigonometric interpolant (or its derivative) at arbitrary θ."""
        t = np.asarray(theta, dtype=float) - self.theta0
        c = self._coef
        m = self.m
        out = np.full(t.shape, c[0].real if deriv == 0 else 0.0)
        for j in self._modes:
            # Nyquist mode is real and enters once; its derivatives are dropped
            weight = 1.0 if (m % 2 == 0 and j == m // 2) else 2.0
            if weight == 1.0 and deriv > 0:
                continue
            term = c[j] * np.exp(1j * j * t) * (1j * j) ** deriv
            out = out + weight * term.real
        return out

    @property
    def dphi(self):
        return self.eval(self.theta, 1)

    @property
    def d2phi(self):
        return self.eval(self.theta, 2)

    @property
    def c2_norm(self):
        """``max(|φ| + |φ'| + |φ''|)`` over the samples."""
        return float(np.max(np.abs(self.phi) + np.abs(self.dphi) + np.abs(self.d2phi)))


@dataclass(frozen=True)
class BarrierPair:
    """Unit-velocity base profile with c0 = 0, velocity a, data φ, offset M."""

    base: object
    phi: SphereFunction
    M: float
    a: float = 1.0

    def z(self, s):
        return scaled_translator(self.base, self.a, s)


def make_barrier_pair(base, phi, a=1.0, M=None):
    """Barrier pair with the default offset ``M = ||φ||_{C²}``."""
    if M is None:
        M = phi.c2_norm
    if M < 0:
        raise ParameterError("offset M must be non-negative")
    return BarrierPair(base, phi, float(M), float(a))


def _family(pair, x1, x2, theta, which, samples=False):
    """``φ(y) - p·y + z_a(|x + p|)`` for each (point, angle) pair."""
    sign = 1.0 if which == "sub" else -1.0
    if samples:
        ph = pair.phi.phi
        dph = pair.phi.dphi
    else:
        ph = pair.phi.eval(theta)
        dph = pair.phi.eval(theta, 1)
    c, s = np.cos(theta), np.sin(theta)
    # Dφ(y) = φ'(θ) (-sin θ, cos θ) is tangent, so p·y = ±2M
    p1 = -dph * s + sign * 2.0 * pair.M * c
    p2 = dph * c + sign * 2.0 * pair.M * s
    dist = np.hypot(x1 + p1, x2 + p2)
    return ph - sign * 2.0 * pair.M + pair.z(dist)


def barrier_eval(pair, x, which="sub", polish=True):
    """Evaluate q1 (``which="sub"``) or q2 (``"super"``) at points `x`.

    `x` has shape (2,) or (..., 2).
    """
    if which not in ("sub", "super"):
        raise ParameterError(f"which must be 'sub' or 'super', got {which!r}")
    x = np.asarray(x, dtype=float)
    shape = x.shape[:-1]
    pts = x.reshape(-1, 2)
    x1 = pts[:, :1]
    x2 = pts[:, 1:]
    theta = pair.phi.theta[None, :]
    vals = _family(pair, x1, x2, theta, which, samples=True)
    sgn = 1.0 if which == "sub" else -1.0
    best = np.argmax(sgn * vals, axis=1)
    out = vals[np.arange(pts.shape[0]), best]
    if polish and pair.phi.m > 1:
        dtheta = 2.0 * np.pi / pair.phi.m
        lo = pair.phi.theta[best] - dtheta
        hi = pair.phi.theta[best] + dtheta
        x1f, x2f = x1[:, 0], x2[:, 0]

        def f(t):
            return sgn * _family(pair, x1f, x2f, t, which)

        while np.max(hi - lo) > 1e-10:
            c = hi - _GOLDEN * (hi - lo)
            d = lo + _GOLDEN * (hi - lo)
            right = f(c) < f(d)
            lo = np.where(right, c, lo)
            hi = np.where(right, hi, d)
        polished = sgn * f(0.5 * (lo + hi))
        out = sgn * np.maximum(sgn * out, sgn * polished)
    return out.reshape(shape)


def barrier_grid(pair, L, h, polish=True):
    """q1 and q2 as :class:`GraphFunction` on ``[-L, L]^2``."""
    m = int(round(2 * L / h)) + 1
    axis = -L + h * np.arange(m)
    X1, X2 = np.meshgrid(axis, axis, indexing="ij")
    pts = np.stack([X1, X2], axis=-1)
    q1 = barrier_eval(pair, pts, "sub", polish=polish)
    q2 = barrier_eval(pair, pts, "super", polish=polish)
    return GraphFunction(q1, L, h), GraphFunction(q2, L, h)


def asymptotic_gap(pair, R, which="both"):
    """``max_y |q_i(R y) - R - φ(y)|`` over the sample directions."""
    theta = pair.phi.theta
    pts = R * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    kinds = ("sub", "super") if which == "both" else (which,)
    gap = 0.0
    for kind in kinds:
        q = barrier_eval(pair, pts, kind)
        gap = max(gap, float(np.max(np.abs(q - R - pair.phi.phi))))
    return gap


def _speed_minus_a(g, k, a, margin):
    """``wΦ - a`` on statistics nodes whose discrete gradient is spacelike."""
    d = grid_derivatives(g)
    keep = d["grad2"] < (1.0 - margin) ** 2
    keep[0, :] = keep[-1, :] = keep[:, 0] = keep[:, -1] = False
    flat = {name: np.where(keep, d[name], 0.0) for name in ("ux", "uy", "uxx", "uxy", "uyy")}
    a11, a12, a22, w = shape_operator_2d(flat["ux"], flat["uy"], flat["uxx"],
                                         flat["uxy"], flat["uyy"])
    lo, hi = eigenvalues_2x2(a11, a12, a22)
    phi, _ = phi_from_kappa(np.stack([lo, hi], axis=-1), k)
    return (w * phi - a)[keep]


@dataclass(frozen=True)
class SignReport:
    """Sign of ``wΦ - a`` on the spacelike statistics nodes of q1 and q2.

    ``sub_fraction`` is the share of q1 nodes with ``wΦ - a >= -tol`` and
    ``super_fraction`` the share of q2 nodes with ``wΦ - a <= tol``.
    """

    sub_min: float
    super_max: float
    sub_fraction: float
    super_fraction: float
    sub_nodes: int
    super_nodes: int


def barrier_equation_signs(pair, L, h, k, tol=0.05, margin=1e-3):
    """Numerical sub/supersolution check of the barrier pair.

    A subsolution has ``wΦ ≥ a`` and a supersolution ``wΦ ≤ a``.  Nodes
    whose central gradient is within `margin` of the light cone are
    skipped: across the switching locus of an envelope the central
    difference of a 1-Lipschitz function can leave the cone, and far from
    the vertex the shifted translators are null to working precision.
    The extreme values are dominated by such near-degenerate nodes, so
    the fractions are the informative part of the report.

    Raises
    ------
    DegenerateError
        If either grid has no usable node.
    """
    q1, q2 = barrier_grid(pair, L, h)
    s1 = _speed_minus_a(q1, k, pair.a, margin)
    s2 = _speed_minus_a(q2, k, pair.a, margin)
    if s1.size == 0 or s2.size == 0:
        raise DegenerateError("no spacelike statistics node on the barrier grids")
    return SignReport(float(np.min(s1)), float(np.max(s2)),
                      float(np.mean(s1 >= -tol)), float(np.mean(s2 <= tol)),
                      int(s1.size), int(s2.size))


def read_sphere_csv(path):
    """Read ``theta,phi`` rows; θ must be uniform over one period.

    Raises
    ------
    ParameterError
        On malformed rows or non-uniform sampling.
    """
    theta, phi = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"theta", "phi"} <= set(reader.fieldnames):
            raise ParameterError("sphere CSV needs columns theta,phi")
        for lineno, row in enumerate(reader, 2):
            try:
                theta.append(float(row["theta"]))
                phi.append(float(row["phi"]))
            except (TypeError, ValueError) as exc:
                raise ParameterError(f"{path}:{lineno}: malformed row {row}") from exc
    theta = np.asarray(theta)
    m = theta.size
    if m < 4:
        raise ParameterError("too few sphere samples")
    step = 2.0 * np.pi / m
    if np.max(np.abs(np.diff(theta) - step)) > 1e-9:
        raise ParameterError("theta samples must be uniform over [0, 2π)")
    return SphereFunction(np.asarray(phi), theta0=float(theta[0]))


def write_barrier_csv(q1, q2, path):
    """CSV ``x1,x2,q1,q2`` over all grid nodes."""
    X1, X2 = q1.coords()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x1", "x2", "q1", "q2"])
        for row in zip(X1.ravel(), X2.ravel(), q1.values.ravel(), q2.values.ravel()):
            writer.writerow([f"{v:.17g}" for v in row])
