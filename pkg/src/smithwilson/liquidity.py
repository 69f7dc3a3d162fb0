"""Liquidity ratios and the weights derived from them.

An instrument's liquidity measure ``L`` (bid-ask spread, volume, trade
count...) is compared with the threshold ``T_L`` at which the market counts
as fully liquid.  Fully liquid instruments are fitted exactly; partially
liquid ones get penalty weight ``-C log(1 - R)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError

#: Ratios this close to one are treated as fully liquid.
EXACT_SNAP = 1e-12


def liquidity_ratio(measure: float, threshold: float) -> float:
    """``min(1, L / T_L)``."""
    if not (threshold > 0 and math.isfinite(threshold)):
        raise ValidationError(f"liquidity threshold must be positive, got {threshold!r}")
    if not measure >= 0:
        raise ValidationError(f"liquidity measure must be non-negative, got {measure!r}")
    return min(1.0, measure / threshold)


def weight_from_ratio(ratio: float, scale: float) -> float:
    """Penalty weight for a liquidity ratio.

    Returns ``math.inf`` (fit exactly) for ``ratio`` within ``EXACT_SNAP`` of
    1, ``0.0`` (no information, instrument excluded) for ``ratio == 0``, and
    ``-scale * log(1 - ratio)`` otherwise.  These map directly onto
    :class:`~smithwilson.curve.Instrument` weights.
    """
    if not (scale > 0 and math.isfinite(scale)):
        raise ValidationError(f"weight scale C must be positive, got {scale!r}")
    if not 0.0 <= ratio <= 1.0:
        raise ValidationError(f"liquidity ratio must lie in [0, 1], got {ratio!r}")
    if ratio >= 1.0 - EXACT_SNAP:
        return math.inf
    if ratio == 0.0:
        return 0.0
    return -scale * math.log1p(-ratio)


@dataclass(frozen=True)
class LiquidityRecord:
    measure: float
    threshold: float
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValidationError(f"weight scale C must be positive, got {self.scale!r}")
        liquidity_ratio(self.measure, self.threshold)

    @property
    def ratio(self) -> float:
        return liquidity_ratio(self.measure, self.threshold)

    @property
    def weight(self) -> float:
        return weight_from_ratio(self.ratio, self.scale)
