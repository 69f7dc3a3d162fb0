"""Smith-Wilson fitting: classic exact fit and the weighted (penalised) variant.

All fitters index the coefficient vector ``zeta`` by distinct cash-flow time.
The weighted variant minimises

    1/2 zeta' EW zeta + 1/2 |C_w zeta - r_w|^2    subject to    C_e zeta = r_e

where ``EW`` is the energy matrix, ``C_w``/``r_w`` hold the weighted
instruments (rows scaled by ``sqrt(w)``) and ``C_e``/``r_e`` the exactly
fitted ones.  Residual prices are taken relative to the flat UFR curve.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .curve import CurveConfig, CurveKind, FittedCurve, build_grid, cashflow_matrix
from .errors import SingularMatrixError, UnsupportedOperationError, ValidationError
from .kernel import energy_matrix, wilson_w
from .numerics import solve_dense

log = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class DesignMatrices:
    c_exact: np.ndarray
    c_weighted: np.ndarray
    pr_exact: np.ndarray
    pr_weighted: np.ndarray
    exact_ids: tuple[str, ...] = ()
    weighted_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class FitDiagnostics:
    """Post-fit summary.

    ``kkt_residual`` is the stationarity residual in max-norm relative to the
    size of the terms it balances; ``constraint_residual`` is the absolute
    max-norm violation of the exact-price constraints.
    """

    energy: float
    penalty: float
    kkt_residual: float
    constraint_residual: float
    condition_estimate: float
    multipliers: tuple[float, ...] = ()


def fit_zcb_exact(prices, config: CurveConfig) -> FittedCurve:
    """Classic interpolating fit to zero-coupon prices ``[(t_j, P_j), ...]``."""
    data = np.asarray(prices, dtype=float).reshape(-1, 2)
    if data.shape[0] == 0:
        raise ValidationError("no zero-coupon prices given")
    t, p = data[:, 0], data[:, 1]
    if np.any(t <= 0) or np.any(p <= 0):
        raise ValidationError("terms and prices must be positive")
    if np.any(np.diff(t) < 0):
        raise ValidationError("terms must be increasing")
    # repeated terms give repeated rows; left for the solver to reject as singular
    W = wilson_w(t[:, None], t[None, :], config)
    zeta = solve_dense(W, p - np.exp(-config.f_inf * t))
    return FittedCurve(CurveKind.CLASSIC, t, zeta, config)


def build_design(instruments, grid, config: CurveConfig) -> DesignMatrices:
    grid = np.asarray(grid, dtype=float)
    exact = [ins for ins in instruments if ins.is_exact]
    weighted = [ins for ins in instruments if not ins.is_exact]
    for ins in weighted:
        if not ins.weight > 0:
            raise ValidationError(f"instrument {ins.id!r}: weight must be positive, got {ins.weight!r}")
    W = wilson_w(grid[:, None], grid[None, :], config)
    flat = np.exp(-config.f_inf * grid)

    def rows(group):
        if not group:
            return np.zeros((0, grid.size)), np.zeros(0)
        X = cashflow_matrix(group, grid)
        prices = np.array([ins.price for ins in group])
        return X @ W, prices - X @ flat

    c_e, r_e = rows(exact)
    c_w, r_w = rows(weighted)
    if weighted:
        sw = np.sqrt([ins.weight for ins in weighted])
        c_w = c_w * sw[:, None]
        r_w = r_w * sw
    return DesignMatrices(
        c_e, c_w, r_e, r_w,
        tuple(ins.id for ins in exact), tuple(ins.id for ins in weighted),
    )


def _dependent_rows(c: np.ndarray) -> list[int]:
    """Rows of ``c`` that are linear combinations of earlier rows."""
    tol = max(c.shape) * _EPS * np.abs(c).max() * 10
    if np.linalg.matrix_rank(c, tol=tol) == c.shape[0]:
        return []
    out = []
    rank = 0
    for i in range(c.shape[0]):
        sub = c[: i + 1][[j for j in range(i + 1) if j not in out]]
        r = np.linalg.matrix_rank(sub, tol=tol)
        if r == rank:
            out.append(i)
        rank = r
    return out


def _drop_zero_weights(instruments):
    kept = []
    for ins in instruments:
        if ins.weight == 0:
            warnings.warn(f"instrument {ins.id!r} has zero weight and is ignored", stacklevel=3)
            continue
        kept.append(ins)
    return kept


def fit_weighted(
    instruments, config: CurveConfig, formulation: str = "augmented"
) -> tuple[FittedCurve, FitDiagnostics]:
    """Fit exact instruments exactly and weighted ones by penalised least squares.

    ``formulation="block"`` solves the textbook KKT system

        [[EW + C_w'C_w, C_e'], [C_e, 0]] (zeta, lam) = (C_w' r_w, r_e)

    (or just its upper-left block when nothing is exact).  The default
    ``"augmented"`` form introduces ``nu = diag(w) (A zeta - b)``, with ``A``,
    ``b`` the unscaled weighted rows, and solves

        [[EW, A', C_e'], [A, -diag(1/w), 0], [C_e, 0, 0]] (zeta, nu, lam) = (0, b, r_e)

    which has the same solution but stays well conditioned as weights grow:
    ``w -> inf`` turns into an exact constraint instead of swamping ``EW``.
    Both are solved with row-pivoted LU.  Instruments are processed in ``id``
    order, which is also the order of ``FitDiagnostics.multipliers``.
    """
    if formulation not in ("augmented", "block"):
        raise ValidationError(f"unknown formulation {formulation!r}")
    instruments = _drop_zero_weights(instruments)
    if not instruments:
        raise ValidationError("no instruments to fit")
    ids = [ins.id for ins in instruments]
    if len(set(ids)) != len(ids):
        raise ValidationError("instrument ids must be unique")
    # canonical order makes the result independent of the caller's ordering
    instruments = sorted(instruments, key=lambda ins: ins.id)

    grid = build_grid(instruments)
    d = build_design(instruments, grid, config)
    ew = energy_matrix(grid, config).entries
    n, ne, nw = grid.size, d.c_exact.shape[0], d.c_weighted.shape[0]
    if ne:
        dep = _dependent_rows(d.c_exact)
        if dep:
            names = ", ".join(d.exact_ids[i] for i in dep)
            raise SingularMatrixError(
                f"exact instruments are linearly dependent on others: {names}", 0.0
            )

    H = ew + d.c_weighted.T @ d.c_weighted
    g = d.c_weighted.T @ d.pr_weighted
    ce = d.c_exact
    if formulation == "block":
        system = np.block([[H, ce.T], [ce, np.zeros((ne, ne))]])
        rhs = np.concatenate([g, d.pr_exact])
        sol = solve_dense(system, rhs)
        zeta, lam = sol[:n], sol[n:]
    else:
        w = np.array([ins.weight for ins in instruments if not ins.is_exact])
        sw = np.sqrt(w)
        a = d.c_weighted / sw[:, None] if nw else d.c_weighted
        b = d.pr_weighted / sw if nw else d.pr_weighted
        system = np.block([
            [ew, a.T, ce.T],
            [a, -np.diag(1.0 / w), np.zeros((nw, ne))],
            [ce, np.zeros((ne, nw)), np.zeros((ne, ne))],
        ])
        rhs = np.concatenate([np.zeros(n), b, d.pr_exact])
        sol = solve_dense(system, rhs)
        zeta, lam = sol[:n], sol[n + nw:]

    stat = H @ zeta + ce.T @ lam - g
    scale = (
        np.abs(H).sum(axis=1).max() * np.abs(zeta).max()
        + (np.abs(ce).sum(axis=0).max() * np.abs(lam).max() if ne else 0.0)
        + np.abs(g).max(initial=0.0)
    )
    kkt = float(np.abs(stat).max() / scale) if scale > 0 else float(np.abs(stat).max())
    cons = float(np.abs(ce @ zeta - d.pr_exact).max(initial=0.0))
    diag = FitDiagnostics(
        energy=0.5 * float(zeta @ ew @ zeta),
        penalty=0.5 * float(np.sum((d.c_weighted @ zeta - d.pr_weighted) ** 2)),
        kkt_residual=kkt,
        constraint_residual=cons,
        condition_estimate=float(np.linalg.cond(system, 1)),
        multipliers=tuple(float(x) for x in lam),
    )
    log.debug("weighted fit: n=%d exact=%d weighted=%d cond=%.3e", n, ne, nw, diag.condition_estimate)
    return FittedCurve(CurveKind.CLASSIC, grid, zeta, config), diag


def fit_exact(instruments, config: CurveConfig) -> FittedCurve:
    """Generalised classic fit: every instrument repriced exactly, weights ignored."""
    return fit_weighted([ins.with_weight(None) for ins in instruments], config)[0]


def energy_value(curve: FittedCurve) -> float:
    """Smoothness energy ``1/2 zeta' EW zeta`` of a classic curve."""
    if curve.kind is not CurveKind.CLASSIC:
        raise UnsupportedOperationError("energy is only defined for classic Smith-Wilson curves")
    if curve.grid.size == 0:
        return 0.0
    return 0.5 * energy_matrix(curve.grid, curve.config).quadratic_form(curve.zeta)


def evsw_value(curve: FittedCurve, instruments) -> float:
    """Energy plus ``1/2 sum w_i (model_i - price_i)^2`` over weighted instruments."""
    total = energy_value(curve)
    for ins in instruments:
        if ins.is_exact or ins.weight == 0:
            continue
        total += 0.5 * ins.weight * (curve.instrument_value(ins) - ins.price) ** 2
    return total
