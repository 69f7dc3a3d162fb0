"""Instruments, fitted curves and curve evaluation.

A fitted curve is stored as ``P(t) = exp(-f_inf t) * G(t)`` with
``G(t) = 1 + sum_k zeta_k h(t, t_k)``, where ``h`` is the kernel with the UFR
discounting removed.  Rates are computed from ``G`` directly, which keeps
them accurate at very long terms where ``P`` itself underflows.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .kernel import KernelParams, wilson_g1, wilson_h

#: Cash-flow times closer than this are merged onto one grid point.
GRID_TOL = 1e-9


@dataclass(frozen=True)
class CurveConfig(KernelParams):
    """Kernel parameters plus the optional convergence term ``t2`` (years)."""

    t2: float | None = None

    def __post_init__(self):
        super().__post_init__()
        if self.t2 is not None and not (math.isfinite(self.t2) and self.t2 > 0):
            raise ValidationError(f"t2 must be positive, got {self.t2!r}")

    @classmethod
    def from_annual_ufr(cls, alpha: float, ufr: float, t2: float | None = None) -> "CurveConfig":
        """Build from an annually compounded UFR, e.g. 0.039 -> ``log(1.039)``."""
        if not ufr > -1:
            raise ValidationError(f"annual UFR must exceed -1, got {ufr!r}")
        return cls(alpha, math.log1p(ufr), t2)


@dataclass(frozen=True)
class Instrument:
    """Cash-flow schedule with an observed price.

    ``weight=None`` fixes the price exactly.  A finite weight penalises the
    squared pricing error instead; ``math.inf`` is accepted and normalised to
    exact, and a zero weight means the instrument carries no information.
    """

    id: str
    times: tuple[float, ...]
    amounts: tuple[float, ...]
    price: float
    weight: float | None = None

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        amounts = tuple(float(a) for a in self.amounts)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "amounts", amounts)
        if not times:
            raise ValidationError(f"instrument {self.id!r} has no cash flows")
        if len(times) != len(amounts):
            raise ValidationError(f"instrument {self.id!r}: times and amounts differ in length")
        if times[0] <= 0 or any(b <= a for a, b in zip(times, times[1:])):
            raise ValidationError(f"instrument {self.id!r}: cash-flow times must be positive and increasing")
        if not all(math.isfinite(a) for a in amounts):
            raise ValidationError(f"instrument {self.id!r}: non-finite cash-flow amount")
        if not (math.isfinite(self.price) and self.price > 0):
            raise ValidationError(f"instrument {self.id!r}: price must be positive, got {self.price!r}")
        if self.weight is not None:
            w = float(self.weight)
            if math.isnan(w) or w < 0:
                raise ValidationError(f"instrument {self.id!r}: weight must be >= 0, got {self.weight!r}")
            object.__setattr__(self, "weight", None if math.isinf(w) else w)

    @property
    def is_exact(self) -> bool:
        return self.weight is None

    @property
    def maturity(self) -> float:
        return self.times[-1]

    @classmethod
    def zcb(cls, id: str, maturity: float, price: float, weight: float | None = None) -> "Instrument":
        return cls(id, (maturity,), (1.0,), price, weight)

    def with_weight(self, weight: float | None) -> "Instrument":
        return Instrument(self.id, self.times, self.amounts, self.price, weight)


def build_grid(instruments) -> np.ndarray:
    """Sorted distinct cash-flow times, merging times within ``GRID_TOL``."""
    times = sorted(t for ins in instruments for t in ins.times)
    if not times:
        raise ValidationError("no cash flows")
    grid = [times[0]]
    for t in times[1:]:
        if t - grid[-1] > GRID_TOL:
            grid.append(t)
    return np.array(grid)


def cashflow_matrix(instruments, grid) -> np.ndarray:
    """``X[i, k]`` = amount paid by instrument ``i`` at ``grid[k]``."""
    grid = np.asarray(grid, dtype=float)
    X = np.zeros((len(instruments), grid.size))
    for i, ins in enumerate(instruments):
        for t, amt in zip(ins.times, ins.amounts):
            k = int(np.argmin(np.abs(grid - t)))
            if abs(grid[k] - t) > GRID_TOL:
                raise ValidationError(f"cash flow of {ins.id!r} at {t} is not on the grid")
            X[i, k] += amt
    return X


class CurveKind(enum.Enum):
    CLASSIC = "classic"
    FINITE = "finite"


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class FittedCurve:
    """Discount curve ``exp(-f_inf t) + sum_k zeta_k K(t, t_k)``.

    ``K`` is Wilson's kernel for :attr:`CurveKind.CLASSIC` and the
    finite-convergence kernel for :attr:`CurveKind.FINITE`; in the latter case
    the forward rate is held at ``f_inf`` beyond ``config.t2``.
    """

    kind: CurveKind
    grid: np.ndarray
    zeta: np.ndarray
    config: CurveConfig

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float).reshape(-1)
        zeta = np.array(self.zeta, dtype=float).reshape(-1)
        if grid.size != zeta.size:
            raise ValidationError("zeta length must equal grid length")
        if grid.size and (grid[0] <= 0 or np.any(np.diff(grid) <= 0)):
            raise ValidationError("grid must be positive and strictly increasing")
        if self.kind is CurveKind.FINITE:
            if self.config.t2 is None:
                raise ValidationError("finite-convergence curve needs t2")
            if grid.size and grid[-1] >= self.config.t2:
                raise ValidationError("grid must lie strictly before t2")
        grid.setflags(write=False)
        zeta.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "zeta", zeta)

    def with_zeta(self, zeta) -> "FittedCurve":
        return FittedCurve(self.kind, self.grid, zeta, self.config)

    # G(t) and G'(t); P = exp(-f t) G
    def _scaled(self, t: np.ndarray, order: int) -> np.ndarray:
        if self.grid.size == 0:
            return np.full(t.shape, 1.0 if order == 0 else 0.0)
        if self.kind is CurveKind.CLASSIC:
            fn = wilson_h if order == 0 else wilson_g1
            basis = fn(t[..., None], self.grid, self.config)
        else:
            from .finite import wtilde_scaled

            t2 = self.config.t2
            beyond = t > t2
            tc = np.minimum(t, t2)
            basis = wtilde_scaled(tc[..., None], self.grid, t2, self.config.alpha, order)
            if order > 0:
                basis = np.where(beyond[..., None], 0.0, basis)
        return (1.0 if order == 0 else 0.0) + basis @ self.zeta

    def _terms(self, t, strict: bool) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(np.isnan(t)) or np.any(t < 0) or (strict and np.any(t == 0)):
            bad = t[(np.isnan(t)) | (t < 0) | ((t == 0) & strict)]
            raise DomainError("term must be " + ("positive" if strict else "non-negative"), float(bad.flat[0]))
        return t

    def _positive_scaled(self, t: np.ndarray) -> np.ndarray:
        g = self._scaled(t, 0)
        if np.any(g <= 0):
            raise DomainError("non-positive discount factor", float(t[g <= 0].flat[0]))
        return g

    def price(self, t):
        """Discount factor at term ``t >= 0``."""
        t = self._terms(t, strict=False)
        return _scalar_or_array(np.exp(-self.config.f_inf * t) * self._scaled(t, 0))

    def spot_continuous(self, t):
        """Continuously compounded spot rate ``-log P(t) / t``."""
        t = self._terms(t, strict=True)
        g = self._positive_scaled(t)
        return _scalar_or_array(self.config.f_inf - np.log(g) / t)

    def spot_annual(self, t):
        """Annually compounded spot rate ``P(t)**(-1/t) - 1``."""
        return _scalar_or_array(np.expm1(self.spot_continuous(t)))

    def forward_instantaneous(self, t):
        """Instantaneous forward ``-dP/dt / P`` from analytic kernel derivatives.

        Also defined at ``t = 0``, where it equals the short rate.
        """
        t = self._terms(t, strict=False)
        g = self._positive_scaled(t)
        return _scalar_or_array(self.config.f_inf - self._scaled(t, 1) / g)

    def instrument_value(self, ins: Instrument) -> float:
        """Model present value of an instrument's cash flows."""
        return float(np.dot(ins.amounts, self.price(np.array(ins.times))))
