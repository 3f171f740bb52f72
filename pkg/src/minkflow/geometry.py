"""Discrete geometry of spacelike graphs ``x_{n+1} = u(x)`` in R^{n,1}.

Grid functions live on the uniform node set ``-L + i h`` per axis (numpy
``indexing="ij"``).  Derivatives are second-order central differences, so
curvature quantities exist on interior nodes only; statistics additionally
drop a band of width 2h along the boundary.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import (BoundaryError, DegenerateError, ParameterError,
                     SpacelikeError)
from .symfunc import eigenvalues_2x2, sigma_table, symmetric_eigenvalues

__all__ = [
    "GraphFunction",
    "CurvatureField",
    "discrete_gradient_hessian",
    "grid_derivatives",
    "lorentz_factor",
    "shape_operator",
    "shape_operator_2d",
    "principal_curvatures",
    "curvature_field",
    "translator_residual",
    "write_curvature_csv",
]


@dataclass(frozen=True)
class GraphFunction:
    """Values of u on the uniform grid over ``[-L, L]^n``."""

    values: np.ndarray
    L: float
    h: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim not in (1, 2):
            raise ParameterError("grid functions are implemented for n = 1, 2")
        m = int(round(2 * self.L / self.h)) + 1
        if any(s != m for s in vals.shape):
            raise ParameterError(
                f"shape {vals.shape} does not match L={self.L}, h={self.h}")
        if not np.all(np.isfinite(vals)):
            raise ParameterError("grid values must be finite")

    @property
    def n(self):
        return self.values.ndim

    @property
    def axis(self):
        m = self.values.shape[0]
        return -self.L + self.h * np.arange(m)

    def coords(self):
        """Node coordinates, one array per axis (``indexing="ij"``)."""
        return np.meshgrid(*([self.axis] * self.n), indexing="ij")

    def radius(self):
        return np.sqrt(sum(c**2 for c in self.coords()))

    def with_values(self, values):
        return GraphFunction(values, self.L, self.h)

    @classmethod
    def sample(cls, func, L, h, n=2):
        """Grid function from a callable of the coordinate arrays."""
        m = int(round(2 * L / h)) + 1
        axis = -L + h * np.arange(m)
        coords = np.meshgrid(*([axis] * n), indexing="ij")
        return cls(np.asarray(func(*coords), dtype=float), L, h)

    @classmethod
    def radial(cls, func, L, h, n=2):
        """Grid function ``u(x) = func(|x|)``."""
        return cls.sample(lambda *c: func(np.sqrt(sum(ci**2 for ci in c))), L, h, n)

    def spacelike_margin(self):
        """``1 - max |Du|`` over interior nodes (central differences)."""
        d = grid_derivatives(self)
        return 1.0 - float(np.sqrt(np.max(d["grad2"])))


def grid_derivatives(g):
    """Central-difference derivatives on all interior nodes.

    Returns a dict with ``ux, uxx`` (n = 1) or ``ux, uy, uxx, uxy, uyy``
    (n = 2), plus ``grad2 = |Du|^2``.  Arrays have the interior shape
    ``(m - 2,) * n``.
    """
    u = g.values
    h = g.h
    if u.shape[0] < 3:
        raise BoundaryError("grid has no interior nodes")
    if g.n == 1:
        ux = (u[2:] - u[:-2]) / (2 * h)
        uxx = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
        return {"ux": ux, "uxx": uxx, "grad2": ux**2}
    c = u[1:-1, 1:-1]
    ux = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2 * h)
    uy = (u[1:-1, 2:] - u[1:-1, :-2]) / (2 * h)
    uxx = (u[2:, 1:-1] - 2 * c + u[:-2, 1:-1]) / h**2
    uyy = (u[1:-1, 2:] - 2 * c + u[1:-1, :-2]) / h**2
    uxy = (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]) / (4 * h**2)
    return {"ux": ux, "uy": uy, "uxx": uxx, "uxy": uxy, "uyy": uyy,
            "grad2": ux**2 + uy**2}


def discrete_gradient_hessian(g, node):
    """``(Du, D^2u)`` at one interior node index.

    Raises
    ------
    BoundaryError
        If the node lacks a full one-ring.
    """
    node = tuple(int(i) for i in np.atleast_1d(node))
    m = g.values.shape[0]
    if len(node) != g.n:
        raise ParameterError(f"node index must have {g.n} entries")
    if any(i < 1 or i > m - 2 for i in node):
        raise BoundaryError(f"node {node} is on the boundary")
    u, h = g.values, g.h
    if g.n == 1:
        (i,) = node
        return (np.array([(u[i + 1] - u[i - 1]) / (2 * h)]),
                np.array([[(u[i + 1] - 2 * u[i] + u[i - 1]) / h**2]]))
    i, j = node
    du = np.array([(u[i + 1, j] - u[i - 1, j]) / (2 * h),
                   (u[i, j + 1] - u[i, j - 1]) / (2 * h)])
    uxx = (u[i + 1, j] - 2 * u[i, j] + u[i - 1, j]) / h**2
    uyy = (u[i, j + 1] - 2 * u[i, j] + u[i, j - 1]) / h**2
    uxy = (u[i + 1, j + 1] - u[i + 1, j - 1] - u[i - 1, j + 1]
           + u[i - 1, j - 1]) / (4 * h**2)
    return du, np.array([[uxx, uxy], [uxy, uyy]])


def lorentz_factor(grad2):
    """``w = sqrt(1 - |Du|^2)``; raises on timelike or null gradients."""
    grad2 = np.asarray(grad2, dtype=float)
    if np.any(grad2 >= 1.0):
        raise SpacelikeError("|Du| >= 1: graph is not spacelike")
    return np.sqrt(1.0 - grad2)


def shape_operator(du, d2u):
    """Shape operator ``(1/w) γ D²u γ`` of a spacelike graph at one point.

    ``γ = I + Du Du^T / (w (1 + w))`` is the square root of the inverse
    induced metric; the eigenvalues are the principal curvatures with
    respect to the future unit normal.
    """
    du = np.atleast_1d(np.asarray(du, dtype=float))
    d2u = np.atleast_2d(np.asarray(d2u, dtype=float))
    w = float(lorentz_factor(du @ du))
    gamma = np.eye(du.size) + np.outer(du, du) / (w * (1.0 + w))
    A = gamma @ (0.5 * (d2u + d2u.T)) @ gamma / w
    return 0.5 * (A + A.T)


def shape_operator_2d(ux, uy, uxx, uxy, uyy):
    """Vectorized :func:`shape_operator` for n = 2.

    Returns ``(a11, a12, a22, w)``.
    """
    w = lorentz_factor(ux**2 + uy**2)
    c = 1.0 / (w * (1.0 + w))
    g11 = 1.0 + c * ux * ux
    g12 = c * ux * uy
    g22 = 1.0 + c * uy * uy
    # M = H γ, then A = γ M / w
    m11 = uxx * g11 + uxy * g12
    m12 = uxx * g12 + uxy * g22
    m21 = uxy * g11 + uyy * g12
    m22 = uxy * g12 + uyy * g22
    a11 = (g11 * m11 + g12 * m21) / w
    a12 = 0.5 * ((g11 * m12 + g12 * m22) + (g12 * m11 + g22 * m21)) / w
    a22 = (g12 * m12 + g22 * m22) / w
    return a11, a12, a22, w


def principal_curvatures(du, d2u):
    """Ascending principal curvatures at one point."""
    return symmetric_eigenvalues(shape_operator(du, d2u))


@dataclass(frozen=True)
class CurvatureField:
    """Per-node curvature data on the interior of a grid function.

    ``mask`` selects the nodes used for statistics (interior minus the
    2h boundary band); ``flagged`` marks nodes outside the closed Gårding
    cone Γ_k, where Φ is set to 0.
    """

    x: tuple
    kappa: np.ndarray
    w: np.ndarray
    phi: np.ndarray
    flagged: np.ndarray
    mask: np.ndarray
    k: int

    @property
    def v(self):
        """Support function ``-<ν, E> = 1/w``."""
        return 1.0 / self.w

    @property
    def flagged_fraction(self):
        return float(np.mean(self.flagged[self.mask]))


def _stats_mask(shape):
    mask = np.zeros(shape, dtype=bool)
    # interior index 0 is grid index 1 (distance h from the boundary)
    mask[(slice(1, -1),) * len(shape)] = True
    return mask


def phi_from_kappa(kappa, k):
    """Normalized root with Γ_k flagging; returns ``(phi, flagged)``."""
    kap = np.asarray(kappa, dtype=float)
    n = kap.shape[-1]
    table = sigma_table(kap, k)
    scale = np.max(np.abs(kap), axis=-1)
    tol = 1e-12 * np.stack([scale**j for j in range(k + 1)], axis=-1)
    outside = np.any(table[..., 1:] < -tol[..., 1:], axis=-1)
    sk = np.where(outside, 0.0, np.maximum(table[..., k], 0.0))
    phi = (sk / math.comb(n, k)) ** (1.0 / k)
    return phi, outside


def curvature_field(g, k):
    """Principal curvatures, w and Φ = (σ_k/C(n,k))^{1/k} on interior nodes.

    Raises
    ------
    SpacelikeError
        If any interior discrete gradient has ``|Du| >= 1``.
    DegenerateError
        If every statistics node is flagged.
    """
    if g.n != 2:
        raise ParameterError("grid curvature is implemented for n = 2")
    if not 1 <= k <= 2:
        raise ParameterError(f"k must be 1 or 2 for n = 2, got {k}")
    d = grid_derivatives(g)
    a11, a12, a22, w = shape_operator_2d(d["ux"], d["uy"], d["uxx"],
                                         d["uxy"], d["uyy"])
    lo, hi = eigenvalues_2x2(a11, a12, a22)
    kappa = np.stack([lo, hi], axis=-1)
    phi, flagged = phi_from_kappa(kappa, k)
    mask = _stats_mask(w.shape)
    if not np.any(mask):
        raise BoundaryError("grid too small for curvature statistics")
    if np.all(flagged[mask]):
        raise DegenerateError("no node of the grid is k-convex")
    X = tuple(c[1:-1, 1:-1] for c in g.coords())
    return CurvatureField(X, kappa, w, phi, flagged, mask, k)


def translator_residual(g, k, a, field=None):
    """``sup |a/w - Φ|`` over the statistics nodes."""
    if field is None:
        field = curvature_field(g, k)
    res = np.abs(a / field.w - field.phi)
    return float(np.max(res[field.mask]))


def write_curvature_csv(field, path):
    """CSV ``x1,x2,kappa1,kappa2,w,Phi`` over the statistics nodes."""
    m = field.mask
    cols = [field.x[0][m], field.x[1][m], field.kappa[..., 0][m],
            field.kappa[..., 1][m], field.w[m], field.phi[m]]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x1", "x2", "kappa1", "kappa2", "w", "Phi"])
        for row in zip(*cols):
            writer.writerow([f"{v:.17g}" for v in row])
