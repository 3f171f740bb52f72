"""Convex conjugation of graph functions and the dual translator equation.

``u*(ξ) = sup_x (x·ξ - u(x))``.  For a spacelike convex u the gradient
image lies in the unit ball, the dual curvatures are ``κ*_i = 1/κ_i`` and
the translator equation ``Φ(κ) = a/w`` becomes

    (σ_n/σ_{n-k})(κ*)^{1/k} = (1/a) C(n,k)^{-1/k} w*,   w* = sqrt(1 - |ξ|²),

with κ* the eigenvalues of ``w* γ* D²u* γ*``, ``γ* = I - ξξ^T/(1 + w*)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline, RectBivariateSpline

from .errors import DomainError, ParameterError
from .geometry import GraphFunction
from .symfunc import dual_root, eigenvalues_2x2

__all__ = [
    "DualFunction",
    "legendre_transform",
    "dual_residual",
    "dual_curvatures",
    "write_dual_csv",
]

_CHUNK = 256


@dataclass(frozen=True)
class DualFunction:
    """Values of u* on the square grid ``-r + j h`` restricted to ``|ξ| <= r``.

    Nodes outside the disc hold NaN and are never resolved; ``resolved``
    marks ξ whose maximizer lies strictly inside the primal domain.
    """

    values: np.ndarray
    resolved: np.ndarray
    r: float
    h: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        res = np.asarray(self.resolved, dtype=bool)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "resolved", res)
        if vals.shape != res.shape or vals.ndim not in (1, 2):
            raise ParameterError("values and resolved mask must share a 1-D or 2-D shape")
        m = int(round(2 * self.r / self.h)) + 1
        if any(s != m for s in vals.shape):
            raise ParameterError(f"shape {vals.shape} does not match r={self.r}, h={self.h}")

    @property
    def n(self):
        return self.values.ndim

    @property
    def L(self):
        return self.r

    @property
    def axis(self):
        return -self.r + self.h * np.arange(self.values.shape[0])

    def coords(self):
        return np.meshgrid(*([self.axis] * self.n), indexing="ij")

    def xi_norm(self):
        return np.sqrt(sum(c**2 for c in self.coords()))

    @property
    def in_disc(self):
        return self.xi_norm() <= self.r * (1 + 1e-12)

    @property
    def unresolved_fraction(self):
        disc = self.in_disc
        return float(np.mean(~self.resolved[disc]))

    def convexity_defect(self):
        """Largest midpoint-convexity violation along grid axes and diagonals.

        Returns ``max(u(x) - (u(x - e) + u(x + e))/2)`` over resolved triples;
        a convex function gives a value <= 0 up to rounding.
        """
        u = np.where(self.resolved, self.values, np.nan)
        worst = -np.inf
        if self.n == 1:
            shifts = [(1,)]
        else:
            shifts = [(1, 0), (0, 1), (1, 1), (1, -1)]
        m = u.shape[0]
        for s in shifts:
            sl_c, sl_p, sl_m = [], [], []
            for d in s:
                lo, hi = 1, m - 1
                sl_c.append(slice(lo, hi))
                sl_p.append(slice(lo + d, hi + d))
                sl_m.append(slice(lo - d, hi - d))
            c = u[tuple(sl_c)]
            p = u[tuple(sl_p)]
            q = u[tuple(sl_m)]
            defect = c - 0.5 * (p + q)
            if np.any(np.isfinite(defect)):
                worst = max(worst, float(np.nanmax(defect)))
        return worst

    def is_convex(self, slack=None):
        """Midpoint convexity within ``10 h²``."""
        if slack is None:
            slack = 10.0 * self.h**2
        return self.convexity_defect() <= slack


def _primal_data(g):
    """(axis, values, valid mask, splinable) for a primal input."""
    if isinstance(g, DualFunction):
        return g.axis, g.values, g.resolved & np.isfinite(g.values), False
    if isinstance(g, GraphFunction):
        return g.axis, g.values, np.ones(g.values.shape, dtype=bool), True
    raise ParameterError(f"cannot transform {type(g).__name__}")


def _interior_of(valid):
    """Valid nodes whose full one-ring (3^n block) is valid."""
    out = valid.copy()
    m = valid.shape[0]
    if valid.ndim == 1:
        out[0] = out[-1] = False
        out[1:-1] &= valid[:-2] & valid[2:]
        return out
    out[0, :] = out[-1, :] = out[:, 0] = out[:, -1] = False
    inner = out[1:-1, 1:-1]
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            inner &= valid[1 + di:m - 1 + di, 1 + dj:m - 1 + dj]
    return out


def _check_convex(axis, u, valid, spacelike):
    h = axis[1] - axis[0]
    inner = _interior_of(valid)
    if u.ndim == 1:
        uxx = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
        ux = (u[2:] - u[:-2]) / (2 * h)
        ok = uxx > 0
        grad2 = ux**2
        sel = inner[1:-1]
    else:
        c = u[1:-1, 1:-1]
        uxx = (u[2:, 1:-1] - 2 * c + u[:-2, 1:-1]) / h**2
        uyy = (u[1:-1, 2:] - 2 * c + u[1:-1, :-2]) / h**2
        uxy = (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]) / (4 * h**2)
        ux = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2 * h)
        uy = (u[1:-1, 2:] - u[1:-1, :-2]) / (2 * h)
        ok = (uxx > 0) & (uxx * uyy - uxy**2 > 0)
        grad2 = ux**2 + uy**2
        sel = inner[1:-1, 1:-1]
    with np.errstate(invalid="ignore"):
        if not np.all(ok[sel]):
            raise DomainError("input is not strictly convex on its interior nodes")
        if spacelike and np.any(grad2[sel] >= 1.0):
            raise DomainError("input is not spacelike (|Du| >= 1)")
    return float(np.sqrt(np.max(grad2[sel]))) if np.any(sel) else 0.0


def _argmax_nodes(axis, u, valid, xi):
    """Discrete argmax of ``x·ξ - u(x)`` over valid nodes for each ξ row.

    Coarse scan on a subsampled grid, then an exact scan of a window around
    the coarse winner; ξ whose window maximum sits on the window edge fall
    back to a full scan.  Returns flat node indices and values.
    """
    m = axis.size
    n = u.ndim
    coords = np.meshgrid(*([axis] * n), indexing="ij")
    X = np.stack([c.ravel() for c in coords], axis=-1)
    U = np.where(valid, u, np.inf).ravel()
    stride = max(1, m // 32)
    sub = np.arange(0, m, stride)
    if sub[-1] != m - 1:
        sub = np.append(sub, m - 1)
    grids = np.meshgrid(*([sub] * n), indexing="ij")
    coarse = np.ravel_multi_index(tuple(g.ravel() for g in grids), (m,) * n)
    half = stride + 1
    offs = np.arange(-half, half + 1)
    off_grids = np.meshgrid(*([offs] * n), indexing="ij")
    off_list = np.stack([o.ravel() for o in off_grids], axis=-1)
    best_idx = np.empty(xi.shape[0], dtype=np.int64)
    best_val = np.empty(xi.shape[0])
    for start in range(0, xi.shape[0], _CHUNK):
        q = xi[start:start + _CHUNK]
        vals = q @ X[coarse].T - U[coarse][None, :]
        c_idx = coarse[np.argmax(vals, axis=1)]
        c_sub = np.stack(np.unravel_index(c_idx, (m,) * n), axis=-1)
        cand = c_sub[:, None, :] + off_list[None, :, :]
        inside = np.all((cand >= 0) & (cand < m), axis=-1)
        cand = np.clip(cand, 0, m - 1)
        flat = np.ravel_multi_index(tuple(cand[..., d] for d in range(n)), (m,) * n)
        wvals = np.einsum("qd,qwd->qw", q, X[flat]) - U[flat]
        wvals = np.where(inside, wvals, -np.inf)
        j = np.argmax(wvals, axis=1)
        idx = flat[np.arange(q.shape[0]), j]
        val = wvals[np.arange(q.shape[0]), j]
        on_edge = np.any(np.abs(off_list[j]) == half, axis=-1)
        for row in np.flatnonzero(on_edge | ~np.isfinite(val)):
            full = X @ q[row] - U
            idx[row] = int(np.argmax(full))
            val[row] = full[idx[row]]
        best_idx[start:start + q.shape[0]] = idx
        best_val[start:start + q.shape[0]] = val
    return best_idx, best_val


def _polish_spline(axis, u, xi, x0, h, max_iter=8):
    """Newton on the cubic/bicubic interpolant; returns values and a success mask."""
    n = u.ndim
    if n == 1:
        S = CubicSpline(axis, u)
        x = x0[:, 0].copy()
        q = xi[:, 0]
        ok = np.ones(x.size, dtype=bool)
        for _ in range(max_iter):
            d2 = S(x, 2)
            good = d2 > 0
            ok &= good
            step = np.where(good, (q - S(x, 1)) / np.where(good, d2, 1.0), 0.0)
            x = x + step
            if np.max(np.abs(step)) < 1e-14:
                break
        ok &= np.abs(x - x0[:, 0]) <= 2 * h
        ok &= (x >= axis[0]) & (x <= axis[-1])
        return x * q - S(x), ok
    S = RectBivariateSpline(axis, axis, u, kx=3, ky=3, s=0)
    x = x0[:, 0].copy()
    y = x0[:, 1].copy()
    ok = np.ones(x.size, dtype=bool)
    for _ in range(max_iter):
        gx = xi[:, 0] - S.ev(x, y, dx=1)
        gy = xi[:, 1] - S.ev(x, y, dy=1)
        hxx = S.ev(x, y, dx=2)
        hxy = S.ev(x, y, dx=1, dy=1)
        hyy = S.ev(x, y, dy=2)
        det = hxx * hyy - hxy**2
        good = (hxx > 0) & (det > 0)
        ok &= good
        det = np.where(good, det, 1.0)
        dx = np.where(good, (hyy * gx - hxy * gy) / det, 0.0)
        dy = np.where(good, (hxx * gy - hxy * gx) / det, 0.0)
        x += dx
        y += dy
        if max(np.max(np.abs(dx)), np.max(np.abs(dy))) < 1e-14:
            break
    ok &= (np.abs(x - x0[:, 0]) <= 2 * h) & (np.abs(y - x0[:, 1]) <= 2 * h)
    ok &= (x >= axis[0]) & (x <= axis[-1]) & (y >= axis[0]) & (y <= axis[-1])
    return x * xi[:, 0] + y * xi[:, 1] - S.ev(x, y), ok


def _polish_local(axis, u, xi, idx, value):
    """One Newton step on the local quadratic model at the argmax node."""
    h = axis[1] - axis[0]
    m = axis.size
    n = u.ndim
    sub = np.stack(np.unravel_index(idx, (m,) * n), axis=-1)
    out = value.copy()
    for row, s in enumerate(sub):
        if np.any(s < 1) or np.any(s > m - 2):
            continue
        if n == 1:
            (i,) = s
            g = xi[row, 0] - (u[i + 1] - u[i - 1]) / (2 * h)
            H = (u[i + 1] - 2 * u[i] + u[i - 1]) / h**2
            if np.isfinite(g) and np.isfinite(H) and H > 0:
                out[row] = value[row] + 0.5 * g * g / H
            continue
        i, j = s
        blk = u[i - 1:i + 2, j - 1:j + 2]
        if not np.all(np.isfinite(blk)):
            continue
        grad = np.array([(u[i + 1, j] - u[i - 1, j]) / (2 * h),
                         (u[i, j + 1] - u[i, j - 1]) / (2 * h)])
        H = np.array([[(u[i + 1, j] - 2 * u[i, j] + u[i - 1, j]) / h**2,
                       (u[i + 1, j + 1] - u[i + 1, j - 1] - u[i - 1, j + 1]
                        + u[i - 1, j - 1]) / (4 * h**2)],
                      [0.0, (u[i, j + 1] - 2 * u[i, j] + u[i, j - 1]) / h**2]])
        H[1, 0] = H[0, 1]
        if H[0, 0] <= 0 or np.linalg.det(H) <= 0:
            continue
        g = xi[row] - grad
        out[row] = value[row] + 0.5 * g @ np.linalg.solve(H, g)
    return out


def legendre_transform(g, r=None, h=None, polish=True, check=True, spacelike=True):
    """Discrete Legendre transform onto the disc ``|ξ| <= r``.

    Parameters
    ----------
    g : GraphFunction or DualFunction
        Strictly convex input (n = 1, 2).  A DualFunction is transformed
        over its resolved nodes, which gives the double transform.
    r, h : float, optional
        Dual disc radius and spacing; defaults ``0.9 max|Du|`` (rounded
        down to a multiple of h) and the primal spacing.
    polish : bool
        Sharpen interior maximizers by Newton steps on the interpolant.
    check, spacelike : bool
        Verify discrete strict convexity and ``|Du| < 1`` first.

    Raises
    ------
    DomainError
        If the input fails the convexity or spacelike check.
    """
    axis, u, valid, splinable = _primal_data(g)
    n = u.ndim
    if n not in (1, 2):
        raise ParameterError("Legendre transform is implemented for n = 1, 2")
    gmax = _check_convex(axis, u, valid, spacelike) if check else None
    if h is None:
        h = axis[1] - axis[0]
    if r is None:
        if gmax is None:
            gmax = _check_convex(axis, u, valid, False)
        r = h * math.floor(0.9 * gmax / h)
    if not r > 0 or not h > 0:
        raise ParameterError("dual radius and spacing must be positive")
    m_xi = int(round(2 * r / h)) + 1
    xi_axis = -r + h * np.arange(m_xi)
    xi_coords = np.meshgrid(*([xi_axis] * n), indexing="ij")
    disc = np.sqrt(sum(c**2 for c in xi_coords)) <= r * (1 + 1e-12)
    XI = np.stack([c[disc] for c in xi_coords], axis=-1)

    idx, val = _argmax_nodes(axis, u, valid, XI)
    inner = _interior_of(valid).ravel()
    res = inner[idx]
    if polish:
        if splinable:
            coords = np.meshgrid(*([axis] * n), indexing="ij")
            x0 = np.stack([c.ravel()[idx] for c in coords], axis=-1)
            pol, ok = _polish_spline(axis, u, XI, x0, axis[1] - axis[0])
            use = ok & res
            val = np.where(use, np.maximum(pol, val), val)
        else:
            val = np.where(res, _polish_local(axis, np.where(valid, u, np.nan), XI, idx, val), val)

    values = np.full(disc.shape, np.nan)
    values[disc] = val
    resolved = np.zeros(disc.shape, dtype=bool)
    resolved[disc] = res
    return DualFunction(values, resolved, float(r), float(h))


def dual_curvatures(d):
    """κ* on nodes whose one-ring is resolved; returns ``(kappa_star, w_star, mask)``.

    ``kappa_star`` has shape ``mask.shape + (n,)`` with NaN off the mask.
    """
    u = np.where(d.resolved, d.values, np.nan)
    h = d.h
    mask = _interior_of(d.resolved)
    coords = d.coords()
    w = np.sqrt(np.clip(1.0 - sum(c**2 for c in coords), 0.0, None))
    if d.n == 1:
        xi = coords[0]
        d2 = np.full(u.shape, np.nan)
        d2[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
        gam = 1.0 - xi**2 / (1.0 + w)
        kap = (w * gam * d2 * gam)[..., None]
    else:
        x1, x2 = coords
        uxx = np.full(u.shape, np.nan)
        uyy = np.full(u.shape, np.nan)
        uxy = np.full(u.shape, np.nan)
        c = u[1:-1, 1:-1]
        uxx[1:-1, 1:-1] = (u[2:, 1:-1] - 2 * c + u[:-2, 1:-1]) / h**2
        uyy[1:-1, 1:-1] = (u[1:-1, 2:] - 2 * c + u[1:-1, :-2]) / h**2
        uxy[1:-1, 1:-1] = (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]) / (4 * h**2)
        s = 1.0 / (1.0 + w)
        g11 = 1.0 - s * x1 * x1
        g12 = -s * x1 * x2
        g22 = 1.0 - s * x2 * x2
        m11 = uxx * g11 + uxy * g12
        m12 = uxx * g12 + uxy * g22
        m21 = uxy * g11 + uyy * g12
        m22 = uxy * g12 + uyy * g22
        a11 = w * (g11 * m11 + g12 * m21)
        a12 = w * 0.5 * ((g11 * m12 + g12 * m22) + (g12 * m11 + g22 * m21))
        a22 = w * (g12 * m12 + g22 * m22)
        lo, hi = eigenvalues_2x2(a11, a12, a22)
        kap = np.stack([lo, hi], axis=-1)
    kap = np.where(mask[..., None], kap, np.nan)
    return kap, w, mask


def dual_residual(d, k, a):
    """``sup |F_*(κ*) - (1/a) C(n,k)^{-1/k} w*|`` over fully resolved nodes.

    Raises
    ------
    DomainError
        If some κ* is not positive (dual point not admissible) or no node
        has a resolved one-ring.
    """
    n = d.n
    if not 1 <= k <= n:
        raise ParameterError(f"k={k} out of range 1..{n}")
    if not a > 0:
        raise ParameterError("velocity a must be positive")
    kap, w, mask = dual_curvatures(d)
    if not np.any(mask):
        raise DomainError("no dual node has a resolved neighbourhood")
    ks = kap[mask]
    if np.any(ks <= 0):
        raise DomainError("dual curvatures not positive: dual point not admissible")
    F = dual_root(ks, k)
    rhs = math.comb(n, k) ** (-1.0 / k) * w[mask] / a
    return float(np.max(np.abs(F - rhs)))


def write_dual_csv(d, path):
    """CSV ``xi1,xi2,ustar,resolved`` over the disc nodes (xi2 = 0 for n = 1)."""
    coords = d.coords()
    disc = d.in_disc
    x1 = coords[0][disc]
    x2 = coords[1][disc] if d.n == 2 else np.zeros_like(x1)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["xi1", "xi2", "ustar", "resolved"])
        for a, b, v, r in zip(x1, x2, d.values[disc], d.resolved[disc]):
            writer.writerow([f"{a:.17g}", f"{b:.17g}", f"{v:.17g}", int(r)])
