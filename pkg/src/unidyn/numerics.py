"""Shared numerical kernels.

Polynomials are coefficient sequences in *ascending* degree order
(``c[0] + c[1] x + ... + c[n] x**n``).  Float kernels run on numpy/LAPACK;
the ``*_exact`` helpers work on :class:`fractions.Fraction` and are used
where a repeated root makes floating point hopeless (pole placement).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, SingularMatrixError, SolverError, ValidationError

POLY_TRIM = 1e-14
FD_STEP = 1e-6
RANK_TOL = 1e-9


# ---------------------------------------------------------------------------
# eigenvalues and polynomial roots


def eigenvalues(M, tol: float = 1e-8, check: bool = True) -> np.ndarray:
    """Eigenvalues of a small dense real matrix.

    LAPACK ``geev`` balances (permutes and scales) before the Hessenberg QR
    sweep, which isolates the structural zero columns of the state matrices
    exactly.  ``tol`` bounds the scaled residual ``sigma_min(M - lam I) / |M|``
    checked for every returned value (skipped with ``check=False`` for bulk
    map evaluation).
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {M.shape}")
    if M.shape[0] > 16:
        raise ValidationError("eigenvalue kernel is sized for n <= 16")
    if not np.all(np.isfinite(M)):
        raise ValidationError("matrix has non-finite entries")
    if M.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    try:
        lam = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"QR iteration did not converge for {M.shape} matrix: {exc}") from exc
    lam = lam.astype(complex)
    if not check:
        return lam
    scale = max(np.linalg.norm(M, 2), 1.0)
    n = M.shape[0]
    for value in lam:
        smin = np.linalg.svd(M - value * np.eye(n), compute_uv=False)[-1]
        # Defective eigenvalues are only accurate to eps**(1/k); the residual
        # test is still tight because it measures backward error.
        if smin > tol * scale:
            raise ConvergenceError(
                f"eigenvalue {value} has scaled residual {smin / scale:.3e} > {tol:.1e}"
            )
    return lam


def trim_poly(coeffs: Sequence[float], rel: float = POLY_TRIM) -> np.ndarray:
    """Drop leading (highest-degree) coefficients below ``rel * max|c|``."""
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise ValidationError("polynomial needs at least one coefficient")
    big = np.max(np.abs(c))
    if big == 0.0:
        raise ValidationError("zero polynomial has no roots")
    n = c.size
    while n > 1 and abs(c[n - 1]) <= rel * big:
        n -= 1
    return c[:n]


def poly_eval(coeffs, x):
    """Horner evaluation, ascending coefficients."""
    acc = 0.0 * x
    for c in reversed(list(coeffs)):
        acc = acc * x + c
    return acc


def poly_derivative(coeffs) -> np.ndarray:
    c = np.asarray(coeffs)
    if c.size <= 1:
        return np.zeros(1, dtype=c.dtype)
    return c[1:] * np.arange(1, c.size)


def companion(coeffs) -> np.ndarray:
    """Frobenius companion matrix of a trimmed polynomial (monic-normalised)."""
    c = trim_poly(coeffs)
    n = c.size - 1
    if n < 1:
        raise ValidationError("polynomial degree must be >= 1")
    C = np.zeros((n, n))
    C[1:, :-1] = np.eye(n - 1)
    C[:, -1] = -c[:-1] / c[-1]
    return C


def _cluster_refine(c: np.ndarray, roots: np.ndarray, radius: float) -> np.ndarray:
    # A k-fold root is perturbed into a ring of radius ~eps**(1/k); the ring's
    # centroid is well conditioned.  Accept a centroid only if p, p', ...,
    # p^(k-1) all vanish there to working accuracy.
    roots = roots.copy()
    n = roots.size
    unassigned = list(range(n))
    while unassigned:
        seed = unassigned.pop(0)
        group = [seed]
        grew = True
        while grew:
            grew = False
            for j in list(unassigned):
                if min(abs(roots[j] - roots[i]) for i in group) <= radius:
                    group.append(j)
                    unassigned.remove(j)
                    grew = True
        k = len(group)
        if k < 2:
            continue
        centre = np.mean(roots[group])
        deriv = c.astype(complex)
        ok = True
        for _ in range(k):
            mag = poly_eval(np.abs(deriv), abs(centre))
            if mag > 0 and abs(poly_eval(deriv, centre)) > 1e-9 * mag:
                ok = False
                break
            deriv = poly_derivative(deriv)
        if ok:
            roots[group] = centre
    return roots


def poly_roots(coeffs, tol: float = 1e-9) -> np.ndarray:
    """All complex roots via the companion-matrix eigenvalue kernel.

    Clusters that pass a multiplicity test are replaced by their centroid, so
    ``(x + 8)**6`` comes back as six copies of ``-8`` rather than a ring of
    radius ~1e-2.  Real input yields conjugate-closed output.
    """
    c = trim_poly(coeffs)
    if c.size < 2:
        raise ValidationError("polynomial degree must be >= 1")
    C = companion(c)
    try:
        raw = np.linalg.eigvals(C).astype(complex)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"companion eigensolve failed: {exc}") from exc
    scale = max(1.0, float(np.max(np.abs(raw))))
    roots = _cluster_refine(c, raw, radius=0.05 * scale)
    roots = np.where(np.abs(roots.imag) <= 1e-13 * np.abs(roots), roots.real + 0j, roots)
    # normwise backward error: what a companion eigensolve actually guarantees
    cmax = float(np.max(np.abs(c)))
    mag = np.array([cmax * poly_eval(np.ones(c.size), abs(z)) for z in roots])
    val = np.array([abs(poly_eval(c, z)) for z in roots])
    bad = val > tol * mag
    if np.any(bad):
        raise ConvergenceError(f"root residual too large at {roots[bad]}")
    return np.sort_complex(roots)


# ---------------------------------------------------------------------------
# rank, linear solves, Jacobians


def numerical_rank(M, rel_tol: float = RANK_TOL) -> int:
    """Number of singular values above ``rel_tol`` times the largest."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(M)):
        raise ValidationError("matrix has non-finite entries")
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


def solve_linear(A, b, rel_tol: float = 1e-12) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0.0 or s[-1] < rel_tol * s[0]:
        raise SingularMatrixError(
            f"matrix is singular to relative tolerance {rel_tol:g} (sigma_min/sigma_max = "
            f"{(s[-1] / s[0]) if s.size and s[0] else 0.0:.3e})"
        )
    x = np.linalg.solve(A, b)
    scale = np.linalg.norm(A, np.inf) * np.linalg.norm(x, np.inf) + np.linalg.norm(b, np.inf)
    if np.linalg.norm(A @ x - b, np.inf) > 1e-10 * max(scale, 1.0):
        raise SolverError("linear solve residual exceeds 1e-10 of scale")
    return x


def fd_jacobian(f: Callable, x, h_rel: float = FD_STEP) -> np.ndarray:
    """Central-difference Jacobian with per-component step ``h_rel*max(1,|x_i|)``."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x), dtype=float)
    J = np.empty((f0.size, x.size))
    for i in range(x.size):
        h = h_rel * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        fp = np.asarray(f(xp), dtype=float)
        fm = np.asarray(f(xm), dtype=float)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise SolverError(f"non-finite function value while differencing component {i}")
        J[:, i] = (fp - fm) / (2.0 * h)
    return J


# ---------------------------------------------------------------------------
# exact rational arithmetic


def to_fractions(M):
    """Exact rational copy of a float array (floats are dyadic rationals)."""
    a = np.asarray(M, dtype=float)
    if a.ndim == 1:
        return [Fraction(float(v)) for v in a]
    return [[Fraction(float(v)) for v in row] for row in a]


def _matmul_exact(A, B):
    n, m, p = len(A), len(B), len(B[0])
    return [[sum((A[i][k] * B[k][j] for k in range(m)), Fraction(0)) for j in range(p)] for i in range(n)]


def charpoly_exact(M) -> list:
    """Characteristic polynomial ``det(x I - M)`` in exact arithmetic.

    Faddeev-LeVerrier recursion; ascending coefficients, monic.
    """
    A = M if isinstance(M, list) else to_fractions(M)
    n = len(A)
    coeffs = [Fraction(0)] * (n + 1)
    coeffs[n] = Fraction(1)
    Mk = [[Fraction(0)] * n for _ in range(n)]
    for k in range(1, n + 1):
        AM = _matmul_exact(A, Mk)
        Mk = [[AM[i][j] + (coeffs[n - k + 1] if i == j else 0) for j in range(n)] for i in range(n)]
        AMk = _matmul_exact(A, Mk)
        coeffs[n - k] = -sum((AMk[i][i] for i in range(n)), Fraction(0)) / k
    return coeffs


def solve_linear_exact(A, b) -> list:
    """Gauss-Jordan elimination over the rationals."""
    n = len(A)
    aug = [list(A[i]) + [b[i]] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise SingularMatrixError(f"exactly singular matrix (no pivot in column {col})")
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [v / p for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [vr - f * vc for vr, vc in zip(aug[r], aug[col])]
    return [aug[i][n] for i in range(n)]


def poly_mul_exact(p, q) -> list:
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def poly_from_roots_exact(roots) -> list:
    """Monic ascending coefficients of prod (x - r)."""
    out = [Fraction(1)]
    for r in roots:
        out = poly_mul_exact(out, [-Fraction(r), Fraction(1)])
    return out
