"""Elementary symmetric polynomials and small symmetric eigenproblems.

Everything here is a pure function of its inputs.  Curvature vectors are
plain sequences (or numpy arrays whose *last* axis runs over the principal
curvatures), so the same routines serve scalar checks and whole grids.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from numbers import Integral

import numpy as np

from .errors import DomainError, ParameterError

__all__ = [
    "sigma_k",
    "sigma_k_subsets",
    "sigma_k_newton",
    "sigma_table",
    "normalized_root",
    "dual_root",
    "symmetric_eigenvalues",
    "symmetric_eigh",
    "eigenvalues_2x2",
]


def _as_vector(kappa):
    if isinstance(kappa, np.ndarray):
        vec = kappa
    else:
        vec = list(kappa)
    if len(vec) < 1:
        raise ParameterError("curvature vector must have at least one entry")
    return vec


def _check_k(k, n, allow_zero=False):
    lo = 0 if allow_zero else 1
    if not isinstance(k, Integral) or not lo <= k <= n:
        raise ParameterError(f"k={k!r} out of range {lo}..{n}")


def sigma_k(kappa, k):
    """k-th elementary symmetric polynomial of `kappa`.

    Uses the one-pass recursion ``e_j <- e_j + x * e_{j-1}``.  Integer (or
    Fraction) input stays exact because no division is involved.  ``k = 0``
    returns 1 by convention.
    """
    vec = _as_vector(kappa)
    n = len(vec)
    _check_k(k, n, allow_zero=True)
    e = [1] + [0] * k
    for x in vec:
        for j in range(k, 0, -1):
            e[j] = e[j] + x * e[j - 1]
    return e[k]


def sigma_k_subsets(kappa, k):
    """Brute-force sum over all k-subsets; the oracle for :func:`sigma_k`."""
    vec = _as_vector(kappa)
    _check_k(k, len(vec), allow_zero=True)
    total = 0
    for combo in itertools.combinations(vec, k):
        prod = 1
        for x in combo:
            prod = prod * x
        total = total + prod
    return total


def sigma_k_newton(kappa, k):
    """σ_k via Newton's identities on power sums.

    ``k e_k = sum_{i=1..k} (-1)^{i-1} e_{k-i} p_i``.  Exact for integer
    input (the division is carried out on Fractions).
    """
    vec = _as_vector(kappa)
    _check_k(k, len(vec), allow_zero=True)
    exact = all(isinstance(x, (Integral, Fraction)) for x in vec)
    if exact:
        vec = [Fraction(x) for x in vec]
    p = [None] + [sum(x**i for x in vec) for i in range(1, k + 1)]
    e = [Fraction(1) if exact else 1.0]
    for m in range(1, k + 1):
        acc = 0
        for i in range(1, m + 1):
            acc += (-1) ** (i - 1) * e[m - i] * p[i]
        e.append(acc / m)
    out = e[k]
    if exact and out.denominator == 1:
        return int(out)
    return out


def sigma_table(kappa, kmax):
    """All σ_0..σ_kmax of an array of curvature vectors.

    Parameters
    ----------
    kappa : array_like, shape (..., n)
    kmax : int

    Returns
    -------
    ndarray, shape (..., kmax + 1)
    """
    kap = np.asarray(kappa, dtype=float)
    n = kap.shape[-1]
    _check_k(kmax, n, allow_zero=True)
    e = np.zeros(kap.shape[:-1] + (kmax + 1,))
    e[..., 0] = 1.0
    for i in range(n):
        x = kap[..., i]
        for j in range(kmax, 0, -1):
            e[..., j] += x * e[..., j - 1]
    return e


def normalized_root(kappa, k):
    """``(σ_k(κ) / C(n, k))^{1/k}``, the degree-one homogeneous curvature.

    Accepts a single vector or an array of shape (..., n).

    Raises
    ------
    DomainError
        If σ_k < 0 anywhere (the input is not k-convex).
    """
    kap = np.asarray(kappa, dtype=float)
    if kap.ndim == 0:
        raise ParameterError("curvature vector must be one-dimensional")
    n = kap.shape[-1]
    _check_k(k, n)
    sk = sigma_table(kap, k)[..., k]
    if np.any(sk < 0):
        raise DomainError("sigma_k < 0: point is not k-convex")
    out = (sk / math.comb(n, k)) ** (1.0 / k)
    return float(out) if out.ndim == 0 else out


def dual_root(kappa_star, k):
    """``(σ_n / σ_{n-k})^{1/k}`` evaluated on the dual curvatures κ*.

    For positive κ this equals ``σ_k(1/κ*)^{-1/k}``; σ_0 ≡ 1.
    """
    kap = np.asarray(kappa_star, dtype=float)
    n = kap.shape[-1]
    _check_k(k, n)
    table = sigma_table(kap, n)
    top = table[..., n]
    bottom = table[..., n - k]
    if np.any(bottom <= 0):
        raise DomainError("sigma_{n-k}(kappa*) <= 0: dual point not admissible")
    ratio = top / bottom
    if np.any(ratio < 0):
        raise DomainError("sigma_n / sigma_{n-k} < 0: dual point not admissible")
    out = ratio ** (1.0 / k)
    return float(out) if out.ndim == 0 else out


# -- eigenvalues --------------------------------------------------------------

def _check_symmetric(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {A.shape}")
    scale = max(np.abs(A).max(), 1e-300)
    if np.abs(A - A.T).max() > 1e-12 * scale:
        raise ParameterError("matrix is not symmetric")
    return 0.5 * (A + A.T)


def eigenvalues_2x2(a11, a12, a22):
    """Ascending eigenvalues of ``[[a11, a12], [a12, a22]]``, vectorized."""
    a11 = np.asarray(a11, dtype=float)
    a22 = np.asarray(a22, dtype=float)
    mean = 0.5 * (a11 + a22)
    rad = np.hypot(0.5 * (a11 - a22), a12)
    return mean - rad, mean + rad


def _eig3_trig(A):
    """Closed-form eigenvalues of a symmetric 3x3; None when ill-conditioned."""
    p1 = A[0, 1] ** 2 + A[0, 2] ** 2 + A[1, 2] ** 2
    if p1 == 0.0:
        return np.sort(np.diag(A))
    q = np.trace(A) / 3.0
    p2 = ((A[0, 0] - q) ** 2 + (A[1, 1] - q) ** 2 + (A[2, 2] - q) ** 2
          + 2.0 * p1)
    p = math.sqrt(p2 / 6.0)
    B = (A - q * np.eye(3)) / p
    r = np.linalg.det(B) / 2.0
    # acos loses half the digits near +-1 (nearly repeated roots)
    if abs(r) > 1.0 - 1e-6:
        return None
    phi = math.acos(r) / 3.0
    l1 = q + 2.0 * p * math.cos(phi)
    l3 = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    l2 = 3.0 * q - l1 - l3
    return np.sort([l1, l2, l3])


def symmetric_eigh(A, threshold=1e-14, max_sweeps=100):
    """Cyclic Jacobi eigen-decomposition of a real symmetric matrix.

    Returns ``(values, vectors)`` with ascending values and orthonormal
    columns, so that ``A ≈ Q diag(values) Q^T``.
    """
    A = _check_symmetric(A).copy()
    n = A.shape[0]
    Q = np.eye(n)
    scale = max(np.abs(A).max(), 1e-300)
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        # summing the off-diagonal entries directly avoids cancellation
        off = math.sqrt(np.sum(A[offdiag] ** 2))
        if off <= threshold * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= threshold * scale * 1e-3:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
                Q = Q @ J
    vals = np.diag(A).copy()
    order = np.argsort(vals)
    return vals[order], Q[:, order]


def symmetric_eigenvalues(A):
    """Ascending eigenvalues of a real symmetric matrix.

    n <= 2 and well-separated n = 3 use closed forms; everything else goes
    through :func:`symmetric_eigh`.

    Raises
    ------
    ParameterError
        If `A` is not square and symmetric to 1e-12 relative.
    """
    A = _check_symmetric(A)
    n = A.shape[0]
    if n == 1:
        return A[0].copy()
    if n == 2:
        lo, hi = eigenvalues_2x2(A[0, 0], A[0, 1], A[1, 1])
        return np.array([float(lo), float(hi)])
    if n == 3:
        vals = _eig3_trig(A)
        if vals is not None:
            return np.asarray(vals, dtype=float)
    return symmetric_eigh(A)[0]
