"""Wilson kernel, its derivatives and the Smith-Wilson energy coefficients.

Notation: ``h(t, tau) = exp(f_inf * t) * W(t, tau)`` is the kernel with the
UFR discounting stripped off in ``t``.  The smoothness functional only ever
sees ``h`` and its first two ``t``-derivatives, which is why ``wilson_g1`` and
``wilson_g2`` are defined on ``h`` rather than on ``W``.

All functions broadcast over numpy arrays and return plain floats for scalar
input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# above this argument sinh is replaced by its exponential form
_SINH_SWITCH = 300.0


@dataclass(frozen=True)
class KernelParams:
    """Term-scale ``alpha`` (1/years) and continuous ultimate forward rate ``f_inf``."""

    alpha: float
    f_inf: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValidationError(f"alpha must be positive and finite, got {self.alpha!r}")
        if not math.isfinite(self.f_inf):
            raise ValidationError(f"f_inf must be finite, got {self.f_inf!r}")


def _ret(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def _damped_sinh(lo, hi, alpha):
    """``exp(-alpha*hi) * sinh(alpha*lo)`` without overflow for large arguments."""
    x = alpha * lo
    y = alpha * hi
    big = x > _SINH_SWITCH
    direct = np.exp(-y) * np.sinh(np.where(big, 0.0, x))
    safe = 0.5 * (np.exp(np.where(big, x - y, 0.0)) - np.exp(-(x + y)))
    return np.where(big, safe, direct)


def _check_terms(t, tau):
    t = np.asarray(t, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if np.any(t < 0):
        raise ValidationError("kernel evaluated at negative term")
    if np.any(tau <= 0):
        raise ValidationError("kernel knot must be positive")
    return t, tau


def wilson_h(t, tau, p: KernelParams):
    """``exp(f_inf*t) * W(t, tau)``."""
    t, tau = _check_terms(t, tau)
    lo = np.minimum(t, tau)
    hi = np.maximum(t, tau)
    a = p.alpha
    return _ret(np.exp(-p.f_inf * tau) * (a * lo - _damped_sinh(lo, hi, a)))


def wilson_w(t, tau, p: KernelParams):
    """Wilson's kernel ``W(t, tau)``; symmetric in its arguments."""
    t = np.asarray(t, dtype=float)
    return _ret(np.exp(-p.f_inf * t) * wilson_h(t, tau, p))


def wilson_g1(t, tau, p: KernelParams):
    """First ``t``-derivative of ``exp(f_inf*t) * W(t, tau)``.

    At ``t == tau`` the left branch is used; both branches coincide there.
    """
    t, tau = _check_terms(t, tau)
    a = p.alpha
    left = 1.0 - 0.5 * (np.exp(a * np.minimum(t - tau, 0.0)) + np.exp(-a * (t + tau)))
    right = _damped_sinh(np.minimum(t, tau), np.maximum(t, tau), a)
    return _ret(a * np.exp(-p.f_inf * tau) * np.where(t <= tau, left, right))


def wilson_g2(t, tau, p: KernelParams):
    """Second ``t``-derivative of ``exp(f_inf*t) * W(t, tau)``; continuous at ``t == tau``."""
    t, tau = _check_terms(t, tau)
    a = p.alpha
    lo = np.minimum(t, tau)
    hi = np.maximum(t, tau)
    return _ret(-a * a * np.exp(-p.f_inf * tau) * _damped_sinh(lo, hi, a))


def wilson_g3(t, tau, p: KernelParams):
    """Third ``t``-derivative of ``exp(f_inf*t) * W(t, tau)``.

    Jumps by ``alpha**3 * exp(-f_inf*tau)`` at ``t == tau`` (left value returned there).
    """
    t, tau = _check_terms(t, tau)
    a = p.alpha
    left = -0.5 * (np.exp(a * np.minimum(t - tau, 0.0)) + np.exp(-a * (t + tau)))
    right = _damped_sinh(np.minimum(t, tau), np.maximum(t, tau), a)
    return _ret(a**3 * np.exp(-p.f_inf * tau) * np.where(t <= tau, left, right))


def energy_coeff(tau_k, tau_l, p: KernelParams):
    """Energy coefficient ``EW_kl = 2 <W(., tau_k), W(., tau_l)>``.

    Closed form obtained by splitting the integrals at the two knots; written
    for ``tau_k <= tau_l`` and symmetrised by sorting the arguments.
    """
    tau_k, tau_l = _check_terms(tau_k, tau_l)
    if np.any(tau_k <= 0):
        raise ValidationError("energy coefficients need positive terms")
    a = p.alpha
    lo = np.minimum(tau_k, tau_l)
    hi = np.maximum(tau_k, tau_l)
    pref = np.exp(-(lo + hi) * p.f_inf)
    s_lo = np.sinh(a * lo)
    s_hi = np.sinh(a * hi)
    e_hi = np.exp(-a * hi)
    e_lo = np.exp(-a * lo)
    e_sum = np.exp(-a * (lo + hi))

    # integral of the product of second derivatives
    second = 0.25 * a**3 * pref * (
        e_sum * (np.sinh(2 * a * lo) - 2 * lo * a)
        + e_hi * 2 * s_lo * a * (hi - lo)
        + s_lo * e_hi * (np.exp(-2 * a * hi) - np.exp(-2 * a * lo))
        + 4 * s_lo * s_hi * 0.5 * np.exp(-2 * a * hi)
    )
    # integral of the product of first derivatives
    first = a**2 * pref * (
        (lo - (e_lo + e_hi) * s_lo / a + e_sum * (0.5 * lo + np.sinh(2 * a * lo) / (4 * a)))
        + s_lo * (
            -(e_hi - e_lo) / a
            - 0.5 * e_hi * (hi - lo)
            + (np.exp(-3 * a * hi) - np.exp(-a * (2 * lo + hi))) / (4 * a)
        )
        + s_lo * s_hi * np.exp(-2 * a * hi) / (2 * a)
    )
    return _ret(second / a**3 + first / a)


@dataclass(frozen=True)
class EnergyMatrix:
    """Symmetric matrix of energy coefficients over a grid of cash-flow terms."""

    times: np.ndarray
    entries: np.ndarray

    def quadratic_form(self, zeta) -> float:
        z = np.asarray(zeta, dtype=float)
        return float(z @ self.entries @ z)


def energy_matrix(times, p: KernelParams) -> EnergyMatrix:
    times = np.array(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValidationError("energy matrix needs a non-empty 1-d grid")
    if np.any(times <= 0):
        raise ValidationError("grid times must be positive")
    if np.any(np.diff(times) <= 0):
        raise ValidationError("grid times must be strictly increasing")
    ew = energy_coeff(times[:, None], times[None, :], p)
    times.setflags(write=False)
    ew.setflags(write=False)
    return EnergyMatrix(times, ew)
