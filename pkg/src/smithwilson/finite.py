"""Kernel that reaches the ultimate forward rate exactly at a finite term ``t2``.

On ``(0, t2)`` the kernel ``Wt(t, u)`` is ``exp(-f_inf*t) * g(t, u)`` with

    g(t, u) = a0 e^{-at} + b0 e^{at} + c0 t + d0      for t < u
            = a1 e^{-at} + b1 e^{at} + c1 t + d1      for u < t < t2

Boundary conditions: ``g(0) = g''(0) = 0`` and ``g'(t2) = g''(t2) = 0``
(forward rate equal to ``f_inf`` with zero slope at ``t2``).  At ``u`` the
function and its first two derivatives are continuous and
``-Da e^{-au} + Db e^{au}`` equals the jump size (``Da = a1 - a0`` etc.).

The jump is fixed at ``1 - exp(-2 a t2)``, which gives compact closed forms
and, being independent of ``u``, a constant Green's-function normalisation.
"""

from __future__ import annotations

import math
import os
from typing import NamedTuple

import numpy as np

from .curve import CurveConfig, CurveKind, FittedCurve, Instrument, build_grid, cashflow_matrix
from .errors import SolverError, UnsupportedOperationError, ValidationError
from .numerics import solve_dense

#: Minimum gap between the last cash flow and ``t2``.
T2_MARGIN = 1e-6

#: Cross-check every closed-form evaluation against the linear-system oracle.
#: Off by default; enable with ``SMITHWILSON_VERIFY_COEFFS=1``.
VERIFY_COEFFS = os.environ.get("SMITHWILSON_VERIFY_COEFFS", "") not in ("", "0")


class KernelCoeffs(NamedTuple):
    a0: float
    b0: float
    c0: float
    d0: float
    a1: float
    b1: float
    c1: float
    d1: float

    def as_array(self) -> np.ndarray:
        return np.array([np.asarray(c, dtype=float) for c in self])


def jump_size(t2: float, alpha: float) -> float:
    """Third-derivative jump (divided by ``alpha**3``) used by :func:`wtilde_coeffs`."""
    return -math.expm1(-2.0 * alpha * t2)


def _check(u, t2, alpha):
    u = np.asarray(u, dtype=float)
    if not (alpha > 0 and math.isfinite(alpha)):
        raise ValidationError(f"alpha must be positive, got {alpha!r}")
    if not (t2 > 0 and math.isfinite(t2)):
        raise ValidationError(f"t2 must be positive, got {t2!r}")
    if np.any(u <= 0) or np.any(u >= t2):
        raise ValidationError(f"kernel knot must lie strictly inside (0, {t2})")
    return u


def wtilde_coeffs(u, t2: float, alpha: float) -> KernelCoeffs:
    """Closed-form piece coefficients of ``Wt(., u)``; broadcasts over ``u``."""
    u = _check(u, t2, alpha)
    a = alpha
    s = np.sinh(a * u)
    e2 = math.exp(-2 * a * t2)
    e1 = math.exp(-a * t2)
    a0 = 0.5 * (np.exp(-a * u) - e2 * np.exp(a * u))
    c0 = a * (1.0 - e2 - 2.0 * e1 * s)
    a1 = -s
    b1 = e2 * s
    c1 = -2.0 * a * e1 * s
    d1 = jump_size(t2, a) * a * u
    out = KernelCoeffs(a0, -a0, c0, np.zeros_like(a0), a1, b1, c1, d1)
    if VERIFY_COEFFS:
        _verify(out, u, t2, alpha)
    return out


def _verify(coeffs: KernelCoeffs, u, t2: float, alpha: float) -> None:
    arr = np.broadcast_to(coeffs.as_array().reshape(8, -1), (8, np.size(u)))
    jump = jump_size(t2, alpha)
    for j, uj in enumerate(np.ravel(u)):
        ref = wtilde_coeffs_oracle(uj, t2, alpha).as_array() * jump
        err = np.abs(arr[:, j] - ref).max() / max(np.abs(ref).max(), 1e-300)
        if err > 1e-10:
            raise SolverError(f"closed-form kernel coefficients disagree with oracle at u={uj}: {err:.2e}")


def _condition_system(u: float, t2: float, alpha: float, jump: float):
    """The eight linear conditions as ``(A, rhs)`` in the unknowns (a0..d1)."""
    a = alpha
    em, ep = math.exp(-a * t2), math.exp(a * t2)
    um, up = math.exp(-a * u), math.exp(a * u)
    A = np.zeros((8, 8))
    rhs = np.zeros(8)
    A[0, [0, 1, 3]] = 1.0                       # g(0) = 0
    A[1, [0, 1]] = 1.0                          # g''(0) = 0
    A[2, 4:7] = [-a * em, a * ep, 1.0]          # g'(t2) = 0
    A[3, 4:6] = [em, ep]                        # g''(t2) = 0
    for row, coef in zip(
        range(4, 8),
        ([um, up, u, 1.0], [-a * um, a * up, 1.0, 0.0], [um, up, 0.0, 0.0], [-um, up, 0.0, 0.0]),
    ):
        A[row, :4] = [-c for c in coef]
        A[row, 4:] = coef
    rhs[7] = jump
    return A, rhs


def _separated_system(u: float, t2: float, alpha: float, jump: float):
    """Equivalent row combinations of :func:`_condition_system`.

    For large ``alpha * t2`` the two conditions at ``t2`` (and the second and
    third derivative conditions at ``u``) become numerically parallel after
    scaling.  Taking ``g'(t2) - alpha * g''(t2)`` and half-sums/differences of
    the jump rows separates the growing and decaying exponentials; every
    cancellation below is between identical floating-point entries, so the
    recombined system has exactly the same solution set.
    """
    A, rhs = _condition_system(u, t2, alpha, jump)
    B, r = A.copy(), rhs.copy()
    B[2] = A[2] - alpha * A[3]                  # -2a e^{-a t2} a1 + c1 = 0
    B[6] = 0.5 * (A[6] - A[7])                  # jump rows: decaying part
    r[6] = 0.5 * (rhs[6] - rhs[7])
    B[7] = 0.5 * (A[6] + A[7])                  # growing part
    r[7] = 0.5 * (rhs[6] + rhs[7])
    B[5] = A[5] - alpha * A[7]                  # slope row -> linear coefficient
    r[5] = rhs[5] - alpha * rhs[7]
    B[4] = A[4] - A[6] - u * B[5]               # value row -> constant
    r[4] = rhs[4] - rhs[6] - u * r[5]
    return B, r


def wtilde_coeffs_oracle(u: float, t2: float, alpha: float, jump: float = 1.0) -> KernelCoeffs:
    """Coefficients from a direct solve of the eight defining conditions.

    ``jump`` is the right-hand side of the third-derivative jump condition;
    :func:`wtilde_coeffs` corresponds to ``jump = jump_size(t2, alpha)``.
    """
    _check(u, t2, alpha)
    A, rhs = _separated_system(float(u), t2, alpha, jump)
    # entries span e^{-a t2}..e^{a t2}; equilibrate rows then columns
    r = 1.0 / np.max(np.abs(A), axis=1)
    As = A * r[:, None]
    c = 1.0 / np.max(np.abs(As), axis=0)
    y = solve_dense(As * c[None, :], rhs * r)
    return KernelCoeffs(*(c * y))


def condition_residuals(coeffs: KernelCoeffs, u: float, t2: float, alpha: float, jump: float) -> np.ndarray:
    """Componentwise relative residuals of the eight defining conditions."""
    A, rhs = _condition_system(float(u), t2, alpha, jump)
    x = coeffs.as_array()
    scale = np.abs(A) @ np.abs(x) + np.abs(rhs)
    res = np.abs(A @ x - rhs)
    return np.where(scale > 0, res / np.where(scale > 0, scale, 1.0), res)


def wtilde_scaled(t, u, t2: float, alpha: float, order: int = 0):
    """``order``-th ``t``-derivative of ``g(t, u) = exp(f_inf t) Wt(t, u)``.

    Broadcasts ``t`` against ``u``.  At ``t == u`` the right piece is used.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > t2):
        raise ValidationError(f"finite-convergence kernel is defined on [0, {t2}]")
    k = wtilde_coeffs(u, t2, alpha)
    right = t >= np.asarray(u)
    a_, b_, c_, d_ = (np.where(right, hi, lo) for lo, hi in ((k.a0, k.a1), (k.b0, k.b1), (k.c0, k.c1), (k.d0, k.d1)))
    em = np.exp(-alpha * t)
    ep = np.exp(alpha * t)
    if order == 0:
        out = a_ * em + b_ * ep + c_ * t + d_
    elif order == 1:
        out = alpha * (-a_ * em + b_ * ep) + c_
    elif order == 2:
        out = alpha**2 * (a_ * em + b_ * ep)
    elif order == 3:
        out = alpha**3 * (-a_ * em + b_ * ep)
    else:
        raise ValueError("order must be 0..3")
    return float(out) if out.ndim == 0 else out


def wtilde(t, u, t2: float, config: CurveConfig):
    """Finite-convergence kernel ``Wt(t, u)`` for ``0 <= t <= t2``; not symmetric."""
    t = np.asarray(t, dtype=float)
    out = np.exp(-config.f_inf * t) * wtilde_scaled(t, u, t2, config.alpha)
    return float(out) if np.ndim(out) == 0 else out


def fit_finite_convergence(instruments: list[Instrument], config: CurveConfig) -> FittedCurve:
    """Exact fit with the finite-convergence kernel.

    Coupon instruments use the same parametrisation as the classic generalised
    fit: ``zeta_k = exp(-f_inf t_k) * sum_i cf_i(t_k) xi_i``.  The discount
    factor makes the source strengths match the classic kernel's
    ``exp(-f_inf tau)`` normalisation, so the fit tends to the classic one as
    ``t2`` grows.
    """
    if config.t2 is None:
        raise ValidationError("finite-convergence fit requires t2")
    if not instruments:
        raise ValidationError("no instruments to fit")
    t2 = config.t2
    ids = [ins.id for ins in instruments]
    if len(set(ids)) != len(ids):
        raise ValidationError("instrument ids must be unique")
    instruments = sorted(instruments, key=lambda ins: ins.id)
    for ins in instruments:
        if not ins.is_exact:
            raise UnsupportedOperationError(
                f"instrument {ins.id!r} is weighted; weighted fitting is not available "
                "with the finite-convergence kernel"
            )
        if ins.times[-1] > t2 - T2_MARGIN:
            raise ValidationError(
                f"instrument {ins.id!r} has a cash flow at {ins.times[-1]} not before t2={t2}"
            )
    grid = build_grid(instruments)
    X = cashflow_matrix(instruments, grid)
    disc = np.exp(-config.f_inf * grid)
    K = wtilde(grid[:, None], grid[None, :], t2, config)
    prices = np.array([ins.price for ins in instruments])
    rhs = prices - X @ disc
    xi = solve_dense(X @ K @ (disc[:, None] * X.T), rhs)
    zeta = disc * (X.T @ xi)
    return FittedCurve(CurveKind.FINITE, grid, zeta, config)
