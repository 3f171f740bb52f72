"""Rotationally symmetric translators.

With ``y = u'(r)`` and ``z = y^k`` the translator equation (unit velocity)
reduces to the first-order ODE

    z' = (n r^{k-1} - (n-k) z / r) (1 - z^{2/k}),        z(0) = 0,

which is singular at the vertex when k < n.  The production path seeds the
solution just off the vertex from its series ``z = r^k (1 - k r^2/(n+2))``
and integrates an adaptive Dormand-Prince 5(4) pair.  The regularized
family ``z_eps`` (shifted radius, ``z(0) = eps^k``) is kept as an
independent route to the same limit.

The integrated state is ``s = -log(1 - z)`` together with ``v = u - r``.
Both are well conditioned far out, where ``1 - z`` drops below machine
epsilon and ``u - r`` is a tiny remainder on top of an O(1) offset.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.integrate import quad, solve_ivp

from .errors import (ConvergenceError, DomainError, IntegrationError,
                     ParameterError, ProfileDomainError, SpacelikeError)
from .symfunc import normalized_root

__all__ = [
    "RadialParams",
    "RadialProfile",
    "RegularizedSolution",
    "PlateauWarning",
    "TailWarning",
    "DEFAULT_EPS_LADDER",
    "rhs_regularized",
    "integrate_regularized",
    "richardson_limit",
    "limit_profile",
    "asymptotic_constant",
    "reconstruct_height",
    "remainder_shape",
    "height_remainder",
    "remainder_ratio",
    "scaled_translator",
    "scaled_slope",
    "radial_curvatures",
    "radial_residual",
    "verify_residual",
    "check_bounds",
    "check_profile_invariants",
    "write_profile_csv",
    "profile_summary",
]

N_SAMPLES = 2048
R_SEED_MIN = 1e-4
# first three are the customary ladder; two more halvings push the
# extrapolation error below 1e-9
DEFAULT_EPS_LADDER = (1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4)


class PlateauWarning(UserWarning):
    """C(r) has not settled to 1% over the last unit of the range."""


class TailWarning(UserWarning):
    """The height remainder at r_max is not negligible."""


@dataclass(frozen=True)
class RadialParams:
    n: int
    k: int
    a: float = 1.0
    r_max: float = 12.0
    tol: float = 1e-10

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ParameterError(f"n must be an integer >= 1, got {self.n!r}")
        if not isinstance(self.k, (int, np.integer)) or not 1 <= self.k <= self.n:
            raise ParameterError(f"k must satisfy 1 <= k <= n={self.n}, got {self.k!r}")
        if not self.a > 0:
            raise ParameterError(f"velocity a must be positive, got {self.a!r}")
        if not self.r_max > 0:
            raise ParameterError(f"r_max must be positive, got {self.r_max!r}")
        if not 0 < self.tol < 1e-3:
            raise ParameterError(f"tol must lie in (0, 1e-3), got {self.tol!r}")

    @property
    def decay_rate(self):
        """Coefficient 2n/k^2 of r^k in the exponential decay of 1 - y."""
        return 2.0 * self.n / self.k**2

    @property
    def remainder_exponent(self):
        """Power (2n - k^2 - k)/k multiplying the height remainder."""
        return (2.0 * self.n - self.k**2 - self.k) / self.k


# -- scalar helpers on q = 1 - z ----------------------------------------------

def _one_minus_power(q, p):
    """``1 - (1 - q)^p`` without cancellation, for q in [0, 1]."""
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore"):
        return -np.expm1(p * np.log1p(-q))


def _log_one_minus_y(s, k):
    """``log(1 - y)`` where ``y = (1 - e^{-s})^{1/k}``; safe for huge s."""
    s = np.asarray(s, dtype=float)
    q = np.exp(-s)
    big = s > 30.0
    with np.errstate(divide="ignore"):
        small = np.log(_one_minus_power(np.where(big, 0.5, q), 1.0 / k))
    # 1 - y = (q/k)(1 + (1 - 1/k) q/2 + O(q^2))
    large = -s - math.log(k) + np.log1p((1.0 - 1.0 / k) * q / 2.0)
    return np.where(big, large, small)


def _unit_rhs(n, k, shift=0.0):
    def rhs(r, state):
        s = state[0]
        rho = r + shift
        q = math.exp(-s)
        z = -math.expm1(-s)
        if q < 1e-200:
            g = 2.0 / k
        else:
            g = -math.expm1((2.0 / k) * math.log1p(-q)) / q
        ds = (n * rho ** (k - 1) - (n - k) * z / rho) * g
        one_minus_y = -math.expm1(math.log1p(-q) / k) if q > 0 else 0.0
        return [ds, -one_minus_y]
    return rhs


def rhs_regularized(r, z, n, k, eps):
    """Right-hand side of the regularized radial equation.

    ``(n (r+eps)^{k-1} - (n-k) z/(r+eps)) (1 - z^{2/k})``
    """
    if not 0 < eps < 1:
        raise ParameterError(f"eps must lie in (0, 1), got {eps!r}")
    z = np.asarray(z, dtype=float)
    if np.any(z >= 1) or np.any(z < 0):
        raise DomainError("z must lie in [0, 1)")
    rho = np.asarray(r, dtype=float) + eps
    out = (n * rho ** (k - 1) - (n - k) * z / rho) * (1.0 - z ** (2.0 / k))
    return float(out) if out.ndim == 0 else out


def _solve(rhs, r_start, r_end, state0, tol):
    # local error control at tol/10 keeps the accumulated error below tol
    sol = solve_ivp(rhs, (r_start, r_end), state0, method="RK45",
                    rtol=tol / 10, atol=tol / 10, dense_output=True)
    if sol.status != 0:
        r_fail = float(sol.t[-1])
        raise IntegrationError(f"integration failed at r={r_fail:.6g}: {sol.message}",
                               r=r_fail)
    return sol


# -- regularized family --------------------------------------------------------

@dataclass(frozen=True)
class RegularizedSolution:
    params: RadialParams
    eps: float
    r: np.ndarray
    z: np.ndarray
    one_minus_z: np.ndarray
    _sol: Any = field(repr=False, compare=False)

    def at(self, r):
        """``(z, 1 - z)`` at arbitrary radii in [0, r_max]."""
        s = self._sol.sol(np.asarray(r, dtype=float))[0]
        return -np.expm1(-s), np.exp(-s)


def integrate_regularized(params, eps, tol=None):
    """Solve the regularized problem ``z(0) = eps^k`` on [0, r_max].

    `tol` overrides ``params.tol`` for the integrator.

    Raises
    ------
    IntegrationError
        On step-size underflow; ``.r`` holds the offending radius.
    """
    if not 0 < eps < 1:
        raise ParameterError(f"eps must lie in (0, 1), got {eps!r}")
    n, k = params.n, params.k
    s0 = -math.log1p(-eps**k)
    sol = _solve(_unit_rhs(n, k, shift=eps), 0.0, params.r_max, [s0, 0.0],
                 params.tol if tol is None else tol)
    r = np.linspace(0.0, params.r_max, N_SAMPLES)
    s = sol.sol(r)[0]
    s[0] = s0
    return RegularizedSolution(params, eps, r, -np.expm1(-s), np.exp(-s), sol)


def richardson_limit(params, eps_ladder=DEFAULT_EPS_LADDER, r=None):
    """ε→0 limit of ``z_eps`` by polynomial extrapolation in eps.

    Returns ``(r, z)`` on the standard sample grid (or on `r`).
    """
    eps = np.asarray(eps_ladder, dtype=float)
    if eps.size < 2:
        raise ParameterError("need at least two eps levels")
    if r is None:
        r = np.linspace(0.0, params.r_max, N_SAMPLES)
    r = np.asarray(r, dtype=float)
    # Lagrange weights of the interpolating polynomial evaluated at eps = 0
    weights = np.array([
        np.prod([-eps[j] / (eps[i] - eps[j]) for j in range(eps.size) if j != i])
        for i in range(eps.size)
    ])
    # the weights amplify integration error, so each level runs tighter
    tol = max(params.tol * 1e-2, 1e-13)
    z = np.zeros_like(r)
    for w, e in zip(weights, eps):
        z += w * integrate_regularized(params, float(e), tol=tol).at(r)[0]
    return r, z


# -- the limit profile ---------------------------------------------------------

@dataclass(frozen=True)
class RadialProfile:
    """Sampled radial translator with a dense evaluator attached.

    Sample arrays live on ``N_SAMPLES`` uniform radii in [0, r_max].  `u` is
    normalized so that ``u(0) = u_at_zero`` (0 by default); ``c0`` is the
    limit of ``u(r) - r``.  Far out ``z`` rounds to 1.0 in double precision,
    so ``one_minus_z`` is stored separately and is the accurate quantity.
    """

    params: RadialParams
    r: np.ndarray
    z: np.ndarray
    one_minus_z: np.ndarray
    y: np.ndarray
    u: np.ndarray
    C_of_r: np.ndarray
    c0: float
    C_asym: float
    plateau_error: float
    u_at_zero: float
    r_seed: float
    _sol: Any = field(repr=False, compare=False)

    # -- unit-velocity state; rho = a * r -----------------------------------
    def _state(self, rho):
        rho = np.asarray(rho, dtype=float)
        r_end = self.params.a * self.params.r_max
        if np.any(rho > r_end * (1 + 1e-12)) or np.any(rho < 0):
            raise ProfileDomainError(
                f"radius outside profile domain [0, {self.params.r_max}]")
        n, k = self.params.n, self.params.k
        rr = np.clip(rho, self.r_seed, r_end)
        s, v = self._sol.sol(np.atleast_1d(rr).ravel())
        s = s.reshape(rr.shape)
        v = v.reshape(rr.shape)
        near = rho < self.r_seed
        if np.any(near):
            zs = rho**k * (1.0 - k * rho**2 / (n + 2))
            us = rho**2 / 2.0 - rho**4 / (4.0 * (n + 2))
            s = np.where(near, -np.log1p(-zs), s)
            v = np.where(near, us - rho, v)
        return s, v

    def log_one_minus_z(self, r):
        return -self._state(self.params.a * np.asarray(r, dtype=float))[0]

    def z_at(self, r):
        return -np.expm1(self.log_one_minus_z(r))

    def slope(self, r):
        """``y = u'(r)``."""
        k = self.params.k
        return (-np.expm1(self.log_one_minus_z(r))) ** (1.0 / k)

    def one_minus_slope(self, r):
        """``1 - y`` with full relative accuracy."""
        s = -self.log_one_minus_z(r)
        return np.exp(_log_one_minus_y(s, self.params.k))

    def lorentz(self, r):
        """``w = sqrt(1 - y^2)`` with full relative accuracy."""
        q = np.exp(self.log_one_minus_z(r))
        return np.sqrt(_one_minus_power(q, 2.0 / self.params.k))

    def dslope(self, r):
        """``y'(r)`` from the radial equation (finite at the vertex)."""
        n, k, a = self.params.n, self.params.k, self.params.a
        r = np.asarray(r, dtype=float)
        rho = a * r
        y = self.slope(r)
        w2 = self.lorentz(r) ** 2
        safe_rho = np.where(rho > 0, rho, 1.0)
        safe_y = np.where(y > 0, y, 1.0)
        ratio = np.where(rho > 0, (safe_rho / safe_y) ** (k - 1), 1.0)
        bracket = ratio - (n - k) / n * np.where(rho > 0, y / safe_rho, 1.0)
        return a * (n / k) * bracket * w2

    def height(self, r, zero_offset=False):
        """``u(r)``; with ``zero_offset`` the shifted profile with c0 = 0."""
        a = self.params.a
        r = np.asarray(r, dtype=float)
        _, v = self._state(a * r)
        u = self.u_at_zero + r + v / a
        if zero_offset:
            u = u - self.c0
        return u

    def height_minus_r(self, r):
        """``u(r) - r`` without forming the O(r) height first."""
        a = self.params.a
        _, v = self._state(a * np.asarray(r, dtype=float))
        return self.u_at_zero + v / a

    def C_at(self, r):
        """C(r) evaluated in log space in the unit-velocity radius a*r."""
        p = self.params
        rho = p.a * np.asarray(r, dtype=float)
        s = self._state(rho)[0]
        with np.errstate(divide="ignore"):
            logc = (_log_one_minus_y(s, p.k)
                    - 2.0 * (p.n - p.k) / p.k * np.log(rho)
                    + p.decay_rate * rho**p.k)
        return np.exp(logc)


def _series_seed(n, k, r0):
    z0 = r0**k * (1.0 - k * r0**2 / (n + 2))
    u0 = r0**2 / 2.0 - r0**4 / (4.0 * (n + 2))
    return -math.log1p(-z0), u0 - r0


def limit_profile(params, u_at_zero=0.0, cross_check=False,
                  eps_ladder=DEFAULT_EPS_LADDER):
    """Limit (eps → 0) radial translator for ``(n, k, a)``.

    The ODE is integrated from ``r0 = max(tol^{1/k}, 1e-4)`` with the vertex
    series as initial data.  With ``cross_check`` the Richardson limit of
    the regularized family is computed too and must agree within 10·tol.

    Raises
    ------
    ConvergenceError
        If the two routes disagree.
    """
    n, k, a = params.n, params.k, params.a
    r0 = max(params.tol ** (1.0 / k), R_SEED_MIN)
    r_end = a * params.r_max
    if r_end <= r0:
        raise ParameterError("r_max too small for the vertex seed")
    s0, v0 = _series_seed(n, k, r0)
    sol = _solve(_unit_rhs(n, k), r0, r_end, [s0, v0], params.tol)

    r = np.linspace(0.0, params.r_max, N_SAMPLES)
    proto = RadialProfile(params, r, r, r, r, r, r, 0.0, 0.0, 0.0,
                          float(u_at_zero), r0, sol)
    log_q = proto.log_one_minus_z(r)
    q = np.exp(log_q)
    z = -np.expm1(log_q)
    y = proto.slope(r)
    u = proto.height(r)
    C = np.full_like(r, np.nan)
    C[1:] = proto.C_at(r[1:])
    proto = _replace(proto, z=z, one_minus_z=q, y=y, u=u, C_of_r=C)

    C_asym, plateau = asymptotic_constant(proto)
    proto = _replace(proto, C_asym=C_asym, plateau_error=plateau)
    _, c0 = reconstruct_height(proto, u_at_zero)
    profile = _replace(proto, c0=c0)
    check_profile_invariants(profile)

    if cross_check:
        _, z_eps = richardson_limit(params, eps_ladder, r=r)
        gap = float(np.max(np.abs(z_eps - z)))
        if gap > 10.0 * params.tol:
            raise ConvergenceError(
                f"vertex and eps-extrapolated profiles differ by {gap:.3e} "
                f"> 10*tol={10 * params.tol:.1e}")
    return profile


def _replace(profile, **changes):
    fields = {name: getattr(profile, name) for name in profile.__dataclass_fields__}
    fields.update(changes)
    return RadialProfile(**fields)


# -- asymptotics ---------------------------------------------------------------

def asymptotic_constant(profile):
    """Mean of C(r) over the last unit of the range and its relative spread.

    Returns ``(C_asym, plateau_error)`` where ``plateau_error`` is
    ``max |C - C_asym| / C_asym`` over ``[r_max - 1, r_max]``.  Emits a
    :class:`PlateauWarning` when that exceeds 1%.
    """
    r_max = profile.params.r_max
    if r_max <= 1.0:
        raise ParameterError("asymptotic constant needs r_max > 1")
    r = np.linspace(r_max - 1.0, r_max, 201)
    C = profile.C_at(r)
    if not np.all(np.isfinite(C)):
        raise DomainError("C(r) not finite on the plateau window")
    C_asym = float(np.mean(C))
    plateau = float(np.max(np.abs(C - C_asym)) / C_asym)
    if plateau > 0.01:
        warnings.warn(f"C(r) varies by {plateau:.2%} over the last unit; "
                      f"increase r_max", PlateauWarning, stacklevel=2)
    return C_asym, plateau


def remainder_shape(params, r):
    """``r^{(2n-k^2-k)/k} exp(-(2n/k^2) r^k)`` (unit velocity)."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        return np.exp(params.remainder_exponent * np.log(r)
                      - params.decay_rate * r**params.k)


def _unit_tail(profile, rho):
    """``∫_rho^∞ (1 - y)`` for the unit-velocity profile."""
    p = profile.params
    rho_end = p.a * p.r_max

    def integrand(t):
        return float(np.exp(_log_one_minus_y(profile._state(t)[0], p.k)))

    beyond = profile.C_asym * p.k / (2.0 * p.n) * float(remainder_shape(p, rho_end))
    if rho >= rho_end:
        return beyond
    val, _ = quad(integrand, rho, rho_end, epsabs=0.0, epsrel=1e-11, limit=400)
    return val + beyond


def reconstruct_height(profile, u_at_zero=0.0):
    """Height samples ``u = u(0) + ∫_0^r y`` and the offset ``c0``.

    ``c0`` comes from a least-squares fit of ``u - r = c0 + A·shape(r)``
    over the last 20% of samples, with ``shape`` the remainder profile
    ``r^{(2n-k^2-k)/k} e^{-(2n/k^2) r^k}``.
    """
    p = profile.params
    r = profile.r
    rho = p.a * r
    _, v = profile._state(rho)
    u = u_at_zero + r + v / p.a
    tail = r >= 0.8 * p.r_max
    shape = remainder_shape(p, rho[tail])
    scale = max(float(np.max(shape)), 1e-300)
    lhs = np.column_stack([np.ones(tail.sum()), shape / scale])
    coef, *_ = np.linalg.lstsq(lhs, v[tail], rcond=None)
    c0_unit = float(coef[0])
    amp = float(coef[1]) / scale
    left = abs(amp * float(remainder_shape(p, rho[-1])))
    if left > 10.0 * p.tol:
        warnings.warn(f"height remainder at r_max is {left:.2e}; "
                      f"c0 may be inaccurate", TailWarning, stacklevel=2)
    return u, u_at_zero + c0_unit / p.a


def height_remainder(profile, r, method="tail"):
    """``u(r) - r - c0``.

    ``method="tail"`` evaluates it as ``∫_r^∞ (1 - y)`` (relative accuracy
    even when the remainder is far below the offset); ``"direct"`` does the
    subtraction.
    """
    p = profile.params
    r = np.asarray(r, dtype=float)
    if method == "direct":
        return profile.height_minus_r(r) - profile.c0
    if method != "tail":
        raise ParameterError(f"unknown method {method!r}")
    out = np.array([_unit_tail(profile, p.a * ri) / p.a for ri in np.atleast_1d(r)])
    return out.reshape(r.shape) if r.ndim else float(out[0])


def remainder_ratio(profile, r):
    """Remainder divided by its predicted shape; tends to ``C_asym·k/(2n)``."""
    p = profile.params
    return height_remainder(profile, r) / remainder_shape(p, p.a * np.asarray(r, dtype=float)) * p.a


# -- scaled translators --------------------------------------------------------

def _check_unit_base(base):
    if base.params.a != 1.0:
        raise ParameterError("scaled_translator needs a unit-velocity base profile")


def scaled_translator(base, a_new, x_norm):
    """``(1/a) u_base(a|x|)`` for the zero-offset unit-velocity base profile."""
    _check_unit_base(base)
    if not a_new > 0:
        raise ParameterError(f"velocity must be positive, got {a_new!r}")
    x_norm = np.asarray(x_norm, dtype=float)
    return base.height(a_new * x_norm, zero_offset=True) / a_new


def scaled_slope(base, a_new, x_norm):
    """Radial derivative of :func:`scaled_translator`, ``y_base(a|x|)``."""
    _check_unit_base(base)
    if not a_new > 0:
        raise ParameterError(f"velocity must be positive, got {a_new!r}")
    return base.slope(a_new * np.asarray(x_norm, dtype=float))


# -- residual of the translator equation ----------------------------------------

def radial_curvatures(r, y, dy, n, w=None):
    """Principal curvatures of a radial graph, shape (..., n).

    ``(1/w) (y'/w^2, y/r, ..., y/r)``; at r = 0 the vertex limit y/r → y'
    is used.
    """
    r = np.asarray(r, dtype=float)
    y = np.asarray(y, dtype=float)
    dy = np.asarray(dy, dtype=float)
    if w is None:
        if np.any(np.abs(y) >= 1):
            raise SpacelikeError("radial slope reached the light cone")
        w = np.sqrt((1.0 - y) * (1.0 + y))
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0):
        raise SpacelikeError("radial slope reached the light cone")
    safe_r = np.where(r > 0, r, 1.0)
    tangential = np.where(r > 0, y / safe_r, dy)
    r_shape = np.broadcast(r, y, dy, w).shape
    kap = np.empty(r_shape + (n,))
    kap[..., 0] = dy / w**3
    if n > 1:
        kap[..., 1:] = (tangential / w)[..., None]
    return kap


def radial_residual(r, y, dy, n, k, a, w=None):
    """``|a/w - (σ_k(κ)/C(n,k))^{1/k}|`` from slope data."""
    y = np.asarray(y, dtype=float)
    if w is None:
        if np.any(np.abs(y) >= 1):
            raise SpacelikeError("radial slope reached the light cone")
        w = np.sqrt((1.0 - y) * (1.0 + y))
    kap = radial_curvatures(r, y, dy, n, w=w)
    return np.abs(a / np.asarray(w) - normalized_root(kap, k))


def verify_residual(profile, r, relative=False):
    """Residual of the translator equation at radii `r` of a profile.

    ``y'`` comes from the ODE right-hand side; the curvature vector is
    assembled separately and passed through :func:`normalized_root`.
    With ``relative`` the residual is multiplied by w (i.e. |a - wΦ|),
    which stays O(tol) where 1/w is astronomically large.
    """
    p = profile.params
    r = np.asarray(r, dtype=float)
    y = profile.slope(r)
    w = profile.lorentz(r)
    if np.any(w <= 0):
        raise SpacelikeError("profile slope reached 1 in double precision")
    dy = profile.dslope(r)
    res = radial_residual(r, y, dy, p.n, p.k, p.a, w=w)
    if relative:
        res = res * w
    return float(res) if np.ndim(res) == 0 else res


# -- invariants ---------------------------------------------------------------

def check_bounds(profile, r=None, slack=1e-6):
    """Largest violation of ``e^{-(2n/k) r^k} ≤ 1 - z ≤ e^{-r^k/n}``.

    Returns a non-positive number when both bounds hold with the given
    additive slack.
    """
    p = profile.params
    if r is None:
        r = profile.r
    r = np.asarray(r, dtype=float)
    q = np.exp(profile.log_one_minus_z(r))
    rk = (p.a * r) ** p.k
    lower = np.exp(-(2.0 * p.n / p.k) * rk)
    upper = np.exp(-rk / p.n)
    viol = np.maximum(lower - slack - q, q - upper - slack)
    return float(np.max(viol))


def check_profile_invariants(profile):
    """Assert the pointwise structure of a radial profile.

    Checked in the accurate variables: ``log(1 - z)`` strictly decreasing,
    ``1 - z`` in (0, 1] and ``z ≤ r^k``.
    """
    p = profile.params
    r = profile.r
    log_q = profile.log_one_minus_z(r)
    if log_q[0] != 0.0:
        raise DomainError("z(0) != 0")
    if not np.all(np.diff(log_q) < 0):
        raise DomainError("z is not strictly increasing")
    z = -np.expm1(log_q)
    rk = (p.a * r) ** p.k
    if np.any(z > rk * (1 + 1e-12) + 1e-300):
        raise DomainError("z exceeds r^k")
    if not np.all(np.isfinite(log_q)):
        raise SpacelikeError("profile left the spacelike region")
    return True


# -- export ------------------------------------------------------------------

def write_profile_csv(profile, path):
    """CSV ``r,z,y,u,C_of_r`` with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["r", "z", "y", "u", "C_of_r"])
        for row in zip(profile.r, profile.z, profile.y, profile.u, profile.C_of_r):
            writer.writerow([f"{v:.17g}" for v in row])


def profile_summary(profile, **extra):
    p = profile.params
    out = {
        "n": p.n, "k": p.k, "a": p.a,
        "c0": profile.c0, "C_asym": profile.C_asym,
        "plateau_error": profile.plateau_error, "tol": p.tol,
    }
    out.update(extra)
    return out


def write_summary_json(summary, path):
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
