"""Graphical σ_k curvature flow ``u_t = w Φ`` and its normalization.

``Φ = (σ_k(κ)/C(n,k))^{1/k}`` with κ the principal curvatures of the graph
and ``w = sqrt(1 - |Du|^2)``.  Translators with velocity a are the fixed
points of the normalized flow ``ũ = u - a t``.

Two discretizations are provided:

* radial: ``u(r)`` on ``r_i = i h``, 0 <= i <= N, fourth-order central
  differences with an even reflection at r = 0 and Dirichlet data on the two
  outermost nodes;
* grid: a :class:`~minkflow.geometry.GraphFunction` on ``[-L, L]^2`` with
  the second-order stencils of :mod:`minkflow.geometry` and Dirichlet data
  on the outer ring.

Time stepping is forward Euler with a curvature-adaptive step, or backward
Euler with Newton iterations (radial only).  Near the light cone the
diffusion weight grows like ``1/w^2``, so radial runs on domains where the
translator is almost null need the implicit scheme.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numba
import numpy as np
from scipy.linalg import solve_banded

from .errors import (ComparisonError, ParameterError, SpacelikeError,
                     StiffnessError)
from .geometry import GraphFunction
from .radial import RadialProfile, radial_curvatures
from .symfunc import normalized_root

__all__ = [
    "RadialGraph",
    "OperatorEval",
    "FlowState",
    "FlowConfig",
    "HistoryRecord",
    "RunResult",
    "AdmissibilityReport",
    "evaluate_operator",
    "target_values",
    "check_initial_admissible",
    "explicit_dt",
    "step",
    "run_normalized",
    "sandwich_check",
    "speed_support_ratio",
    "write_history_csv",
    "write_snapshot_csv",
    "read_config",
    "CONFIG_KEYS",
]

MAX_HALVINGS = 20
NEWTON_MAX_ITER = 25


@dataclass(frozen=True)
class RadialGraph:
    """Values of a radial function ``u(r)`` on ``r_i = i h``, ``r_N = R``."""

    values: np.ndarray
    R: float
    h: float
    n: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        N = int(round(self.R / self.h))
        if vals.ndim != 1 or vals.size != N + 1:
            raise ParameterError(f"{vals.size} values do not match R={self.R}, h={self.h}")
        if N < 6:
            raise ParameterError("radial grid needs at least 7 nodes")
        if self.n < 1:
            raise ParameterError("dimension n must be >= 1")
        if not np.all(np.isfinite(vals)):
            raise ParameterError("radial values must be finite")

    @property
    def r(self):
        return self.h * np.arange(self.values.size)

    def with_values(self, values):
        return RadialGraph(values, self.R, self.h, self.n)

    @classmethod
    def sample(cls, func, R, h, n):
        N = int(round(R / h))
        return cls(np.asarray(func(h * np.arange(N + 1)), dtype=float), R, h, n)

    def spacelike_margin(self):
        ur, _ = _radial_derivatives(self.values, self.h)
        return 1.0 - float(np.max(np.abs(ur)))


def _dim(graph):
    return graph.n


def _radial_derivatives(u, h):
    """Fourth-order ``u_r, u_rr`` on nodes 0..N-2 (even ghosts at r < 0)."""
    ext = np.concatenate([u[2:0:-1], u])
    ur = (-ext[4:] + 8 * ext[3:-1] - 8 * ext[1:-3] + ext[:-4]) / (12 * h)
    urr = (-ext[4:] + 16 * ext[3:-1] - 30 * ext[2:-2] + 16 * ext[1:-3]
           - ext[:-4]) / (12 * h * h)
    return ur, urr


@dataclass(frozen=True)
class OperatorEval:
    """Flow speed and diagnostics on the computable nodes.

    ``F = wΦ``; ``D`` bounds the largest eigenvalue of ``∂F/∂(D²u)``;
    ``mask`` selects the statistics nodes (computable minus a 2h band).
    """

    F: np.ndarray
    w: np.ndarray
    phi: np.ndarray
    kappa_min: np.ndarray
    flagged: np.ndarray
    D: np.ndarray
    mask: np.ndarray


def _phi_and_weights(sig, n, k):
    """Φ and Γ_k flags from the list ``sig = [σ_0, ..., σ_k]``.

    Returns ``(phi, outside, positive, safe)`` where ``safe`` is σ_k with
    non-positive entries replaced by 1.  Works on complex input
    (complex-step Jacobians); cone tests use real parts.
    """
    sig_k = sig[k]
    scale = np.maximum(np.abs(sig[1].real) / n, 1e-300)
    outside = np.zeros(np.shape(sig_k), dtype=bool)
    for j in range(1, k + 1):
        outside |= sig[j].real < -1e-12 * (n * scale) ** j
    positive = (~outside) & (sig_k.real > 0)
    safe = np.where(positive, sig_k, 1.0)
    phi = np.where(positive, (safe / math.comb(n, k)) ** (1.0 / k), 0.0)
    return phi, outside, positive, safe


def _radial_eval(u, h, n, k):
    ur, urr = _radial_derivatives(u, h)
    m = ur.size
    r = h * np.arange(m)
    if np.any(np.abs(ur.real) >= 1.0):
        raise SpacelikeError("|u_r| >= 1 at a radial node")
    w = np.sqrt(1.0 - ur * ur)
    k1 = urr / w**3
    rs = np.where(r > 0, r, 1.0)
    kt = np.where(r > 0, ur / (rs * w), urr)
    # σ_j of (k1, kt repeated n-1 times)
    sig = [np.ones_like(k1)]
    for j in range(1, k + 1):
        sig.append(math.comb(n - 1, j - 1) * k1 * kt ** (j - 1)
                   + math.comb(n - 1, j) * kt**j)
    phi, outside, positive, safe = _phi_and_weights(sig, n, k)
    # σ_{k-1}(κ|i) for the radial and for one tangential index
    d1 = math.comb(n - 1, k - 1) * kt ** (k - 1)
    dtan = (math.comb(n - 2, k - 2) * k1 * kt ** (k - 2) if k >= 2 and n >= 2 else 0.0) \
        + (math.comb(n - 2, k - 1) * kt ** (k - 1) if n >= 2 else 0.0)
    wmax = np.maximum(np.abs(np.real(d1)), np.abs(np.real(dtan)))
    D = np.where(positive, phi.real * wmax / (k * np.abs(safe.real)), 0.0) / w.real**2
    mask = np.zeros(m, dtype=bool)
    mask[: m - 2] = True
    kmin = np.minimum(k1.real, kt.real)
    return OperatorEval(w * phi, w, phi, kmin, outside, D, mask)


def _grid_eval(u, h, k):
    c = u[1:-1, 1:-1]
    ux = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2 * h)
    uy = (u[1:-1, 2:] - u[1:-1, :-2]) / (2 * h)
    uxx = (u[2:, 1:-1] - 2 * c + u[:-2, 1:-1]) / (h * h)
    uyy = (u[1:-1, 2:] - 2 * c + u[1:-1, :-2]) / (h * h)
    uxy = (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]) / (4 * h * h)
    grad2 = ux * ux + uy * uy
    if np.any(grad2.real >= 1.0):
        raise SpacelikeError("|Du| >= 1 at a grid node")
    w2 = 1.0 - grad2
    w = np.sqrt(w2)
    # trace and determinant of the shape operator (1/w) γ D²u γ, γ² = I + DuDu^T/w²
    s1 = (uxx + uyy + (ux * ux * uxx + 2 * ux * uy * uxy + uy * uy * uyy) / w2) / w
    s2 = (uxx * uyy - uxy * uxy) / (w2 * w2)
    sig = [np.ones_like(s1), s1, s2]
    phi, outside, positive, safe = _phi_and_weights(sig[: k + 1], 2, k)
    disc = np.sqrt(np.maximum(0.25 * s1.real**2 - s2.real, 0.0))
    kmax = 0.5 * s1.real + disc
    kmin = 0.5 * s1.real - disc
    if k == 1:
        weight = np.full(s1.shape, 0.5)
    else:
        weight = np.where(positive, kmax / (2.0 * np.where(positive, phi.real, 1.0)), 0.0)
    D = np.where(outside, 0.0, weight) / w2.real
    mask = np.zeros(s1.shape, dtype=bool)
    mask[1:-1, 1:-1] = True
    return OperatorEval(w * phi, w, phi, kmin, outside, D, mask)


def _grid_speed(u, h, k):
    """Lean ``wΦ`` on grid interiors for stepping; returns ``(F, max D)``.

    Uses ``wσ_1 = Δu + Du·D²u·Du/w²`` and ``σ_2 = det D²u / w⁴``.
    """
    c2 = 2.0 * u[1:-1, 1:-1]
    east, west = u[2:, 1:-1], u[:-2, 1:-1]
    north, south = u[1:-1, 2:], u[1:-1, :-2]
    ux = (east - west) * (0.5 / h)
    uy = (north - south) * (0.5 / h)
    uxx = (east + west - c2) * (1.0 / h**2)
    uyy = (north + south - c2) * (1.0 / h**2)
    uxy = ((u[2:, 2:] - u[2:, :-2]) - (u[:-2, 2:] - u[:-2, :-2])) * (0.25 / h**2)
    w2 = 1.0 - (ux * ux + uy * uy)
    w2min = float(np.min(w2))
    if w2min <= 0.0:
        raise SpacelikeError("|Du| >= 1 at a grid node")
    ws1 = uxx + uyy + (ux * ux * uxx + 2.0 * ux * uy * uxy + uy * uy * uyy) / w2
    if k == 1:
        return np.maximum(0.5 * ws1, 0.0), 0.5 / w2min
    det = uxx * uyy - uxy * uxy
    ok = (ws1 > 0) & (det > 0)
    # wΦ = w sqrt(σ_2) = sqrt(det)/w
    wphi = np.where(ok, np.sqrt(np.where(ok, det, 0.0)) / np.sqrt(w2), 0.0)
    # max_i ∂Φ/∂κ_i / w² = κ_max / (2Φ w²), with κ_max from trace and det
    s1 = ws1 / np.sqrt(w2)
    s2 = det / (w2 * w2)
    kmax = 0.5 * s1 + np.sqrt(np.maximum(0.25 * s1 * s1 - s2, 0.0))
    phi = np.sqrt(np.where(ok, s2, 1.0))
    D = np.where(ok, kmax / (2.0 * phi * w2), 0.0)
    return wphi, float(np.max(D))


@numba.njit(cache=True)
def _grid_speed_kernel(u, h, k, out):
    """Fused loop version of :func:`_grid_speed`; returns ``(min w², max D)``.

    ``out`` receives wΦ on the interior nodes.  A non-positive min w²
    signals a timelike node (the caller raises).
    """
    m = u.shape[0]
    ih2 = 1.0 / (h * h)
    w2min = 1.0
    dmax = 0.0
    for i in range(1, m - 1):
        for j in range(1, m - 1):
            c2 = 2.0 * u[i, j]
            ux = (u[i + 1, j] - u[i - 1, j]) * (0.5 / h)
            uy = (u[i, j + 1] - u[i, j - 1]) * (0.5 / h)
            uxx = (u[i + 1, j] + u[i - 1, j] - c2) * ih2
            uyy = (u[i, j + 1] + u[i, j - 1] - c2) * ih2
            uxy = ((u[i + 1, j + 1] - u[i + 1, j - 1])
                   - (u[i - 1, j + 1] - u[i - 1, j - 1])) * (0.25 * ih2)
            w2 = 1.0 - (ux * ux + uy * uy)
            if w2 < w2min:
                w2min = w2
            if w2 <= 0.0:
                out[i - 1, j - 1] = 0.0
                continue
            ws1 = uxx + uyy + (ux * ux * uxx + 2.0 * ux * uy * uxy + uy * uy * uyy) / w2
            if k == 1:
                out[i - 1, j - 1] = 0.5 * ws1 if ws1 > 0.0 else 0.0
                d = 0.5 / w2
            else:
                det = uxx * uyy - uxy * uxy
                if ws1 > 0.0 and det > 0.0:
                    w = math.sqrt(w2)
                    out[i - 1, j - 1] = math.sqrt(det) / w
                    s1 = ws1 / w
                    s2 = det / (w2 * w2)
                    kmax = 0.5 * s1 + math.sqrt(max(0.25 * s1 * s1 - s2, 0.0))
                    d = kmax / (2.0 * math.sqrt(s2) * w2)
                else:
                    out[i - 1, j - 1] = 0.0
                    d = 0.0
            if d > dmax:
                dmax = d
    return w2min, dmax


@numba.njit(cache=True)
def _grid_margin_kernel(u, h):
    m = u.shape[0]
    g2max = 0.0
    for i in range(1, m - 1):
        for j in range(1, m - 1):
            ux = (u[i + 1, j] - u[i - 1, j]) * (0.5 / h)
            uy = (u[i, j + 1] - u[i, j - 1]) * (0.5 / h)
            g2 = ux * ux + uy * uy
            if g2 > g2max:
                g2max = g2
    return 1.0 - math.sqrt(g2max)


@numba.njit(cache=True)
def _grid_update_kernel(u, F, dt, base, shift, h, out):
    """``out = u + dt F`` inside, ``base + shift`` on the ring; returns the margin."""
    m = u.shape[0]
    for i in range(m):
        for j in range(m):
            if i == 0 or j == 0 or i == m - 1 or j == m - 1:
                out[i, j] = base[i, j] + shift
            else:
                out[i, j] = u[i, j] + dt * F[i - 1, j - 1]
    return _grid_margin_kernel(out, h)


@numba.njit(cache=True)
def _sup_dist_kernel(u, shift, target):
    flat_u = u.ravel()
    flat_t = target.ravel()
    best = 0.0
    for i in range(flat_u.size):
        d = abs(flat_u[i] - shift - flat_t[i])
        if d > best or d != d:
            best = d
    return best


def _sup_dist(state, target):
    return float(_sup_dist_kernel(np.ascontiguousarray(state.graph.values),
                                  state.a * state.t, np.ascontiguousarray(target)))


def _grid_speed_fast(u, h, k):
    out = np.empty((u.shape[0] - 2, u.shape[1] - 2))
    w2min, dmax = _grid_speed_kernel(np.ascontiguousarray(u), float(h), int(k), out)
    if w2min <= 0.0:
        raise SpacelikeError("|Du| >= 1 at a grid node")
    return out, dmax


def evaluate_operator(graph, k, values=None):
    """:class:`OperatorEval` for a radial or grid graph (values override)."""
    u = graph.values if values is None else values
    if isinstance(graph, RadialGraph):
        if not 1 <= k <= graph.n:
            raise ParameterError(f"k={k} out of range 1..{graph.n}")
        return _radial_eval(u, graph.h, graph.n, k)
    if isinstance(graph, GraphFunction):
        if graph.n != 2 or not 1 <= k <= 2:
            raise ParameterError("grid flows need n = 2 and k in {1, 2}")
        return _grid_eval(u, graph.h, k)
    raise ParameterError(f"unsupported representation {type(graph).__name__}")


def _boundary_mask(graph):
    """Nodes held at Dirichlet data."""
    mask = np.zeros(graph.values.shape, dtype=bool)
    if isinstance(graph, RadialGraph):
        mask[-2:] = True
    else:
        mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
    return mask


def _embed(graph, arr, fill=0.0):
    """Place computable-node data into a full-size array."""
    out = np.full(graph.values.shape, fill, dtype=arr.dtype)
    if isinstance(graph, RadialGraph):
        out[: arr.size] = arr
    else:
        out[1:-1, 1:-1] = arr
    return out


# -- state and configuration ----------------------------------------------------

@dataclass(frozen=True)
class HistoryRecord:
    t: float
    sup_dist: float
    min_margin: float
    max_phi_over_v: float
    flagged_fraction: float


@dataclass(frozen=True)
class FlowState:
    """Graph at time t of the flow with velocity a and Hessian order k."""

    graph: object
    t: float
    a: float
    k: int
    history: tuple = ()

    def __post_init__(self):
        if not isinstance(self.graph, (RadialGraph, GraphFunction)):
            raise ParameterError("graph must be a RadialGraph or GraphFunction")
        if not 1 <= self.k <= self.graph.n:
            raise ParameterError(f"k={self.k} out of range 1..{self.graph.n}")
        if not self.a > 0:
            raise ParameterError("velocity a must be positive")

    @property
    def values(self):
        return self.graph.values

    @property
    def h(self):
        return self.graph.h

    @property
    def normalized(self):
        """``ũ = u - a t``."""
        return self.graph.values - self.a * self.t


_BC_MODES = ("translator_dirichlet", "barrier_dirichlet")
_SCHEMES = ("auto", "explicit", "implicit")


@dataclass(frozen=True)
class FlowConfig:
    """Run parameters.

    ``target`` is a :class:`RadialProfile` (sampled at the nodes) or an
    array/graph of the same shape as the state.  ``barrier`` supplies the
    boundary data for ``bc_mode="barrier_dirichlet"``.  ``scheme="auto"``
    uses backward Euler for radial graphs and forward Euler on grids;
    ``dt_implicit`` is the backward-Euler step.  ``jit`` selects the
    compiled grid kernel over the array implementation (same arithmetic).
    """

    t_end: float
    target: object
    dt_safety: float = 0.4
    bc_mode: str = "translator_dirichlet"
    tol_converged: float = 1e-3
    barrier: object = None
    scheme: str = "auto"
    dt_implicit: float = 0.05
    output_interval: float = 0.5
    sandwich_slack: float = None
    monotone_slack: float = 1e-6
    jit: bool = True

    def __post_init__(self):
        if not 0 < self.dt_safety <= 1:
            raise ParameterError("dt_safety must lie in (0, 1]")
        if not self.t_end > 0:
            raise ParameterError("t_end must be positive")
        if not self.tol_converged > 0:
            raise ParameterError("tol_converged must be positive")
        if self.bc_mode not in _BC_MODES:
            raise ParameterError(f"bc_mode must be one of {_BC_MODES}")
        if self.scheme not in _SCHEMES:
            raise ParameterError(f"scheme must be one of {_SCHEMES}")
        if self.bc_mode == "barrier_dirichlet" and self.barrier is None:
            raise ParameterError("barrier_dirichlet needs barrier data")
        if not self.dt_implicit > 0 or not self.output_interval > 0:
            raise ParameterError("time steps must be positive")
        if self.target is None:
            raise ParameterError("a target translator is required")


def _node_radius(graph):
    return graph.r if isinstance(graph, RadialGraph) else graph.radius()


def target_values(target, graph, a=None):
    """Sample a target (profile, graph or array) at the nodes of `graph`."""
    if isinstance(target, RadialProfile):
        if a is not None and abs(target.params.a - a) > 1e-12 * a:
            raise ParameterError(
                f"target velocity {target.params.a} differs from flow velocity {a}")
        vals = target.height(_node_radius(graph))
    elif isinstance(target, (RadialGraph, GraphFunction)):
        vals = target.values
    else:
        vals = np.asarray(target, dtype=float)
    if vals.shape != graph.values.shape:
        raise ParameterError(f"target shape {vals.shape} != state shape {graph.values.shape}")
    return np.asarray(vals, dtype=float)


def _dirichlet_base(state, config):
    if config.bc_mode == "translator_dirichlet":
        return target_values(config.target, state.graph, state.a)
    return target_values(config.barrier, state.graph)


def _scheme(state, config):
    if config.scheme != "auto":
        if config.scheme == "implicit" and not isinstance(state.graph, RadialGraph):
            raise ParameterError("the implicit scheme is implemented for radial graphs")
        return config.scheme
    return "implicit" if isinstance(state.graph, RadialGraph) else "explicit"


def _cfl(state, config, dmax):
    if not dmax > 0:
        dmax = 1.0
    return config.dt_safety * state.h**2 / (2 * _dim(state.graph) * dmax)


def explicit_dt(state, config):
    """``dt_safety h² / (2n max D)`` over the computable nodes."""
    op = evaluate_operator(state.graph, state.k)
    return _cfl(state, config, float(np.max(op.D)))


# -- time stepping ------------------------------------------------------------

def _radial_residual(u, u_old, dt, h, n, k, interior):
    op = _radial_eval(u, h, n, k)
    G = u[interior] - u_old[interior] - dt * op.F
    return G


def _implicit_update(state, base, bnd, dt, tol=1e-12):
    """Backward Euler: ``u - u_old = dt wΦ(u)`` by damped Newton.

    The pentadiagonal Jacobian is assembled by complex-step differentiation
    over five node colors, so it is exact to rounding and never perturbs
    the slope toward the light cone.
    """
    g = state.graph
    h, n, k = g.h, g.n, state.k
    u_old = g.values
    N1 = u_old.size - 2          # computable nodes 0..N-2
    interior = slice(0, N1)
    u = u_old.copy()
    u[bnd] = base[bnd] + state.a * (state.t + dt)
    # a pure translation keeps every slope; an explicit predictor can
    # push near-null slopes across the light cone
    u[interior] = u_old[interior] + state.a * dt
    step_h = 1e-30
    scale = 1.0 + np.max(np.abs(u_old))
    for _ in range(NEWTON_MAX_ITER):
        G = _radial_residual(u, u_old, dt, h, n, k, interior).real
        cols = np.empty((5, N1))
        for color in range(5):
            uc = u.astype(complex)
            uc[color:N1:5] += 1j * step_h
            cols[color] = _radial_residual(uc, u_old, dt, h, n, k, interior).imag / step_h
        # column j of the Jacobian lives in the residual of its color, rows j-2..j+2
        # (the mirror ghosts at r < 0 only couple nodes 0..2, inside the band)
        ab = np.zeros((5, N1))
        j = np.arange(N1)
        for off in range(-2, 3):
            rows = j + off
            ok = (rows >= 0) & (rows < N1)
            ab[2 + off, j[ok]] = cols[j[ok] % 5, rows[ok]]
        delta = solve_banded((2, 2), ab, -G)
        lam = 1.0
        while True:
            trial = u.copy()
            trial[interior] += lam * delta
            try:
                _radial_eval(trial, h, n, k)
                break
            except SpacelikeError:
                lam *= 0.5
                if lam < 1e-6:
                    raise
        u = trial
        if np.max(np.abs(lam * delta)) <= tol * scale:
            return u
    raise SpacelikeError("Newton iteration did not converge")


def _margin(graph, u):
    """``1 - max |Du|`` from first differences only."""
    if isinstance(graph, RadialGraph):
        ur, _ = _radial_derivatives(u, graph.h)
        return 1.0 - float(np.max(np.abs(ur)))
    return float(_grid_margin_kernel(np.ascontiguousarray(u), float(graph.h)))


def step(state, config, dt=None, base=None):
    """Advance one time step; returns the new :class:`FlowState`.

    The step is ``dt`` if given, else the explicit CFL step or
    ``config.dt_implicit``.  Boundary nodes are set to ``base + a t``
    (default: the Dirichlet data selected by ``config.bc_mode``).  A step
    that leaves the spacelike region, or whose Newton solve fails, is
    retried with dt halved.

    Raises
    ------
    StiffnessError
        After 20 halvings without an admissible step.
    """
    scheme = _scheme(state, config)
    if base is None:
        base = _dirichlet_base(state, config)
    graph = state.graph
    bnd = _boundary_mask(graph)
    fused = scheme == "explicit" and isinstance(graph, GraphFunction) and config.jit
    if scheme == "explicit":
        if isinstance(graph, GraphFunction):
            speed_fn = _grid_speed_fast if config.jit else _grid_speed
            F, dmax = speed_fn(graph.values, graph.h, state.k)
        else:
            op = evaluate_operator(graph, state.k)
            F, dmax = op.F.real, float(np.max(op.D))
        if not fused:
            speed = _embed(graph, F)
        if dt is None:
            dt = _cfl(state, config, dmax)
    elif dt is None:
        dt = config.dt_implicit
    last = None
    for _ in range(MAX_HALVINGS + 1):
        try:
            if fused:
                u = np.empty_like(graph.values)
                margin = _grid_update_kernel(graph.values, F, dt, base,
                                             state.a * (state.t + dt), graph.h, u)
            else:
                if scheme == "implicit":
                    u = _implicit_update(state, base, bnd, dt)
                else:
                    u = graph.values + dt * speed
                    u[bnd] = base[bnd] + state.a * (state.t + dt)
                margin = _margin(graph, u)
            if margin > 0 and np.isfinite(margin):
                return replace(state, graph=graph.with_values(u), t=state.t + dt)
            last = "spacelike margin <= 0"
        except (SpacelikeError, np.linalg.LinAlgError, ValueError) as exc:
            last = str(exc)
        dt *= 0.5
    raise StiffnessError(
        f"no admissible step after {MAX_HALVINGS} halvings at t={state.t:.6g} "
        f"(last dt={dt * 2:.3g}; {last})")


# -- diagnostics ---------------------------------------------------------------

def speed_support_ratio(state, r=None):
    """``max Φ/v = max wΦ`` over the statistics nodes.

    A :class:`RadialProfile` is evaluated exactly (ODE slope data) at radii
    `r`, default 513 points on ``[0, r_max/2]``.
    """
    if isinstance(state, RadialProfile):
        p = state.params
        if r is None:
            r = np.linspace(0.0, 0.5 * p.r_max, 513)
        w = state.lorentz(r)
        kap = radial_curvatures(r, state.slope(r), state.dslope(r), p.n, w=w)
        return float(np.max(w * normalized_root(kap, p.k)))
    op = evaluate_operator(state.graph, state.k)
    return float(np.max((op.w * op.phi).real[op.mask]))


def _record(state, target):
    op = evaluate_operator(state.graph, state.k)
    dist = float(np.max(np.abs(state.normalized - target)))
    margin = state.graph.spacelike_margin()
    ratio = float(np.max((op.w * op.phi).real[op.mask]))
    flagged = float(np.mean(op.flagged[op.mask]))
    return HistoryRecord(state.t, dist, margin, ratio, flagged)


def sandwich_check(state, lower, upper, slack=None, raise_on_fail=True):
    """``lower + a t <= u <= upper + a t`` at every node within `slack`.

    `lower` and `upper` are arrays or graphs on the state's nodes; the
    default slack is ``10 h²``.  Returns True, or raises
    :class:`ComparisonError` (False when ``raise_on_fail`` is off).
    """
    if slack is None:
        slack = 10.0 * state.h**2
    lo = target_values(lower, state.graph)
    hi = target_values(upper, state.graph)
    u = state.normalized
    below = float(np.max(lo - u))
    above = float(np.max(u - hi))
    ok = below <= slack and above <= slack
    if not ok and raise_on_fail:
        raise ComparisonError(
            f"sandwich violated at t={state.t:.6g}: lower excess {below:.3g}, "
            f"upper excess {above:.3g}, slack {slack:.3g}")
    return ok


@dataclass(frozen=True)
class AdmissibilityReport:
    """Outcome of :func:`check_initial_admissible`.

    ``max_ratio`` is ``max σ_k^{1/k}/v`` (the quantity bounded by C);
    ``max_sigma_ratio`` is ``max σ_k/v``.  ``a_max = C C(n,k)^{-1/k}``.
    """

    admissible: bool
    strictly_convex: bool
    max_ratio: float
    max_sigma_ratio: float
    a_max: float
    a_in_range: bool
    messages: tuple = ()


def check_initial_admissible(state, C=None):
    """Check ``0 < σ_k^{1/k} <= C v`` and report the admissible velocities.

    With ``C=None`` the smallest admissible constant (the observed maximum
    ratio) is used.  Translator data of velocity a have the constant ratio
    ``C(n,k)^{1/k} a``, so they sit exactly at the end of the range
    ``0 < a <= C C(n,k)^{-1/k}``.  Inadmissible data only yield
    ``admissible=False``; the flow may still be run.
    """
    n, k = state.graph.n, state.k
    msgs = []
    try:
        op = evaluate_operator(state.graph, k)
    except SpacelikeError:
        return AdmissibilityReport(False, False, math.inf, math.inf, 0.0, False,
                                   ("initial data not spacelike",))
    m = op.mask
    convex = bool(np.all(op.kappa_min[m] > 0))
    if not convex:
        msgs.append("initial data not strictly convex")
    norm = math.comb(n, k) ** (1.0 / k)
    ratio = norm * (op.w * op.phi).real[m]
    max_ratio = float(np.max(ratio))
    w = op.w.real[m]
    max_sigma = float(np.max(ratio**k * w ** (1 - k)))
    if C is None:
        C = max_ratio
    a_max = C / norm
    bounded = bool(np.all(np.isfinite(ratio))) and max_ratio <= C * (1 + 1e-12)
    if not bounded:
        msgs.append(f"ratio sigma_k^(1/k)/v = {max_ratio:.6g} exceeds C={C:.6g}")
    in_range = 0 < state.a <= a_max * (1 + 1e-9)
    if not in_range:
        msgs.append(f"velocity a={state.a:.6g} outside (0, {a_max:.6g}]")
    return AdmissibilityReport(convex and bounded and in_range, convex, max_ratio,
                               max_sigma, a_max, in_range, tuple(msgs))


# -- driver --------------------------------------------------------------------

@dataclass(frozen=True)
class RunResult:
    state: FlowState
    converged: bool
    history: tuple
    monotone: bool
    sandwich_ok: bool
    t_converged: float = None
    violations: tuple = field(default_factory=tuple)


def run_normalized(state0, config, lower=None, upper=None, check_sandwich=True,
                   on_violation="raise"):
    """Step until ``sup|ũ - u_target| <= tol_converged`` or ``t >= t_end``.

    History is recorded every ``output_interval`` and at the end; at each
    record the distance is compared with the previous record (monotonicity
    flag, slack ``config.monotone_slack``) and the sandwich
    ``lower + at <= u <= upper + at`` is checked.  The default bounds are
    the vertical translates ``target + c`` of the target through the
    extreme offsets of the initial and boundary data; both are exact
    solutions, so comparison confines the flow between them.  A sandwich violation raises
    :class:`ComparisonError`, or with ``on_violation="record"`` clears
    ``sandwich_ok`` and the run continues.
    """
    if on_violation not in ("raise", "record"):
        raise ParameterError("on_violation must be 'raise' or 'record'")
    target = target_values(config.target, state0.graph, state0.a)
    if lower is None or upper is None:
        offset = state0.normalized - target
        edge = (_dirichlet_base(state0, config) - target)[_boundary_mask(state0.graph)]
        if lower is None:
            lower = target + min(0.0, float(np.min(offset)), float(np.min(edge)))
        if upper is None:
            upper = target + max(0.0, float(np.max(offset)), float(np.max(edge)))
    state = state0
    history = [_record(state, target)]
    violations = []
    monotone = True
    sandwich_ok = True

    def checkpoint(st):
        nonlocal monotone
        rec = _record(st, target)
        if rec.sup_dist > history[-1].sup_dist + config.monotone_slack:
            monotone = False
            violations.append(f"distance increased at t={rec.t:.6g}")
        history.append(rec)
        sandwich(st)
        return rec

    def sandwich(st):
        nonlocal sandwich_ok
        if not check_sandwich:
            return
        ok = sandwich_check(st, lower, upper, config.sandwich_slack,
                            raise_on_fail=on_violation == "raise")
        if not ok:
            sandwich_ok = False
            violations.append(f"sandwich violated at t={st.t:.6g}")

    sandwich(state)
    next_out = state.t + config.output_interval
    converged = history[-1].sup_dist <= config.tol_converged
    t_conv = state.t if converged else None
    base = _dirichlet_base(state0, config)
    while not converged and state.t < config.t_end - 1e-12:
        state = step(state, config, base=base)
        dist = _sup_dist(state, target)
        if dist <= config.tol_converged:
            converged = True
            t_conv = state.t
        if state.t >= next_out - 1e-12 or converged or state.t >= config.t_end - 1e-12:
            checkpoint(state)
            next_out = state.t + config.output_interval
    final = replace(state, history=tuple(history))
    return RunResult(final, converged, tuple(history), monotone, sandwich_ok,
                     t_conv, tuple(violations))


def write_history_csv(history, path):
    """CSV ``t,sup_dist,min_margin,max_phi_over_v,flagged_fraction``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "sup_dist", "min_margin", "max_phi_over_v",
                         "flagged_fraction"])
        for rec in history:
            writer.writerow([f"{v:.17g}" for v in
                             (rec.t, rec.sup_dist, rec.min_margin,
                              rec.max_phi_over_v, rec.flagged_fraction)])


def write_snapshot_csv(state, path, target=None):
    """CSV ``r,u[,u_target]`` (radial) or ``x1,x2,u[,u_target]`` (grid).

    ``u_target`` is the target translated to time t.
    """
    g = state.graph
    cols = [g.r] if isinstance(g, RadialGraph) else [c.ravel() for c in g.coords()]
    names = ["r"] if isinstance(g, RadialGraph) else ["x1", "x2"]
    cols.append(g.values.ravel())
    names.append("u")
    if target is not None:
        cols.append((target_values(target, g, state.a) + state.a * state.t).ravel())
        names.append("u_target")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in zip(*cols):
            writer.writerow([f"{v:.17g}" for v in row])


# -- config files ----------------------------------------------------------------

CONFIG_KEYS = {
    "n": int,
    "k": int,
    "a": float,
    "L": float,
    "h": float,
    "dt_safety": float,
    "t_end": float,
    "bc_mode": str,
    "tol_converged": float,
    "bump": float,
    "representation": str,
    "scheme": str,
    "dt_implicit": float,
    "output_interval": float,
    "C": float,
}


def read_config(path):
    """Parse a flat ``key = value`` file; ``#`` starts a comment.

    Raises
    ------
    ParameterError
        On unknown keys, malformed lines or unconvertible values.
    """
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise ParameterError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = CONFIG_KEYS[key](value)
            except ValueError as exc:
                raise ParameterError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return out
