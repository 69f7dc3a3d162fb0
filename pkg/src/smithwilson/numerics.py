"""Dense linear solves and knot-aware adaptive quadrature.

Both routines are used by the fitters and, independently, as oracles in the
test suite. They are pure: identical inputs give bit-identical outputs.
"""

from __future__ import annotations

import warnings
from fractions import Fraction
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _integrate
from scipy import linalg as _linalg

from .errors import IntegrationError, SingularMatrixError, ValidationError

_EPS = np.finfo(float).eps

#: Relative backward-error target met by :func:`solve_dense` on well-posed inputs.
SOLVE_TOL = 1e-12


def solve_dense(a, b, refine: int = 2) -> np.ndarray:
    """Solve ``a @ x = b`` by LU factorisation with row pivoting.

    A few steps of iterative refinement are applied so that
    ``|a @ x - b|_inf <= SOLVE_TOL * |b|_inf`` holds for reasonably
    conditioned systems.  Residuals are accumulated in ``np.longdouble``;
    where that type is wider than double (x86) the refined solution is
    accurate to a few ulps rather than ``cond(a) * eps``.  ``b`` may be a vector or a matrix of right-hand
    sides.

    Raises
    ------
    SingularMatrixError
        If a pivot is negligible relative to its column, carrying the
        offending pivot magnitude.
    """
    a = np.array(a, dtype=float, copy=True)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"matrix must be square, got shape {a.shape}")
    n = a.shape[0]
    if b.shape[0] != n:
        raise ValidationError(f"right-hand side has {b.shape[0]} rows, matrix has {n}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValidationError("non-finite entries in linear system")
    if n == 0:
        return np.zeros_like(b)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _linalg.LinAlgWarning)
        lu, piv = _linalg.lu_factor(a, check_finite=False)

    pivots = np.abs(np.diag(lu))
    col_scale = np.max(np.abs(a), axis=0)
    # row pivoting leaves column order intact, so pivot j belongs to column j
    bad = pivots <= n * _EPS * col_scale
    if np.any(bad) or np.any(col_scale == 0.0):
        j = int(np.argmax(bad | (col_scale == 0.0)))
        raise SingularMatrixError("matrix is singular to working precision", float(pivots[j]), j)

    x = _linalg.lu_solve((lu, piv), b, check_finite=False)
    a_wide, b_wide = a.astype(np.longdouble), b.astype(np.longdouble)
    for _ in range(refine):
        r = (b_wide - a_wide @ x.astype(np.longdouble)).astype(float)
        x = x + _linalg.lu_solve((lu, piv), r, check_finite=False)
    return x


def naive_solve(a, b, refine: bool = True) -> np.ndarray:
    """Textbook Gaussian elimination with partial pivoting, pure Python loops.

    Slow; kept as an independent cross-check for :func:`solve_dense`.  With
    ``refine`` one correction step is taken using the residual computed
    exactly in rational arithmetic, which brings the result to within a few
    ulps of the exact solution of the floating-point system.
    """
    a0 = [list(map(float, row)) for row in np.asarray(a, dtype=float)]
    b0 = [float(v) for v in np.asarray(b, dtype=float)]
    x = _eliminate(a0, b0)
    if refine:
        r = [float(Fraction(bi) - sum(Fraction(aij) * Fraction(xj) for aij, xj in zip(row, x)))
             for row, bi in zip(a0, b0)]
        x = [xi + di for xi, di in zip(x, _eliminate(a0, r))]
    return np.array(x)


def _eliminate(a: list[list[float]], b: list[float]) -> list[float]:
    m = [row[:] for row in a]
    rhs = list(b)
    n = len(m)
    for col in range(n):
        p = max(range(col, n), key=lambda r: abs(m[r][col]))
        if m[p][col] == 0.0:
            raise SingularMatrixError("zero pivot in naive elimination", 0.0, col)
        m[col], m[p] = m[p], m[col]
        rhs[col], rhs[p] = rhs[p], rhs[col]
        for r in range(col + 1, n):
            factor = m[r][col] / m[col][col]
            if factor != 0.0:
                for c in range(col, n):
                    m[r][c] -= factor * m[col][c]
                rhs[r] -= factor * rhs[col]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        s = rhs[r] - sum(m[r][c] * x[c] for c in range(r + 1, n))
        x[r] = s / m[r][r]
    return x


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and truncation point for :func:`integrate`.

    ``tail_cutoff`` of ``None`` means "largest knot + 40", i.e. a decay
    scale of one year; use :meth:`for_decay` for kernel integrands.
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    tail_cutoff: float | None = None
    max_subintervals: int = 400

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValidationError("quadrature tolerances must be positive")

    @classmethod
    def for_decay(cls, alpha: float, knots: Sequence[float] = (), **kw) -> "QuadratureSpec":
        """Copy whose tail cutoff is ``max(knots) + 40/alpha``."""
        top = max(knots, default=0.0)
        return cls(tail_cutoff=top + 40.0 / alpha, **kw)


def integrate(
    f: Callable[[float], float],
    knots: Sequence[float] = (),
    spec: QuadratureSpec | None = None,
    full_output: bool = False,
):
    """Integrate ``f`` over ``(0, inf)``, split exactly at ``knots``.

    Each panel between consecutive knots (and the final panel up to the tail
    cutoff) is integrated adaptively with Gauss-Kronrod (QUADPACK).  The
    integrand is assumed to be negligible beyond the cutoff.

    Returns the value, or ``(value, error_bound)`` with ``full_output``.
    """
    spec = spec or QuadratureSpec()
    pts = sorted({float(k) for k in knots if k > 0})
    cutoff = spec.tail_cutoff if spec.tail_cutoff is not None else max(pts, default=0.0) + 40.0
    if pts and cutoff <= pts[-1]:
        raise ValidationError(f"tail cutoff {cutoff} must exceed the largest knot {pts[-1]}")
    edges = [0.0, *pts, cutoff]

    total = 0.0
    err = 0.0
    failed = False
    for lo, hi in zip(edges[:-1], edges[1:]):
        res = _integrate.quad(
            f, lo, hi,
            epsabs=spec.abs_tol, epsrel=spec.rel_tol,
            limit=spec.max_subintervals, full_output=1,
        )
        total += res[0]
        err += res[1]
        failed |= len(res) > 3  # QUADPACK appends a message when ier != 0
    if failed and err > max(spec.abs_tol, spec.rel_tol * abs(total)) * len(edges):
        raise IntegrationError("adaptive quadrature did not converge", total, err)
    return (total, err) if full_output else total
