"""Instrument CSV ingestion and curve export.

Instrument file columns::

    id, kind, maturity, rate_or_price, R, schedule_file

``kind`` is one of ``zcb`` (value is the price), ``parswap`` (value is the
annual par rate; maturity in whole years) or ``cashflows`` (value is the
price, cash flows read from ``schedule_file`` with columns ``time, amount``).
``rate`` and ``price`` are accepted as names for the value column.  ``R`` is
the liquidity ratio in [0, 1] and defaults to 1.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .curve import FittedCurve, Instrument
from .errors import DomainError, ParseError, ValidationError
from .liquidity import weight_from_ratio

KINDS = ("zcb", "parswap", "cashflows")
VALUE_COLUMNS = ("rate_or_price", "rate", "price")
INSTRUMENT_COLUMNS = ("id", "kind", "maturity", "rate_or_price", "R", "schedule_file")
CURVE_COLUMNS = ("term", "discount_factor", "spot_continuous", "spot_annual", "forward_instantaneous")


@dataclass(frozen=True)
class InstrumentRow:
    id: str
    kind: str
    maturity: float | None
    value: float
    ratio: float = 1.0
    schedule_file: str | None = None


def _number(text: str, line: int, column: str, source: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise ParseError(f"malformed number {text!r}", line, column, source) from None
    if not math.isfinite(x):
        raise ParseError(f"non-finite number {text!r}", line, column, source)
    return x


def parse_rows(text: str, source: str = "<input>") -> list[InstrumentRow]:
    """Parse and validate instrument rows; errors carry the line number."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if not header or all(not h.strip() for h in header):
        raise ParseError("empty instrument file", 1, None, source)
    header = [h.strip() for h in header]
    value_cols = [c for c in header if c in VALUE_COLUMNS]
    unknown = [c for c in header if c not in INSTRUMENT_COLUMNS and c not in VALUE_COLUMNS]
    if unknown:
        raise ParseError(f"unknown column {unknown[0]!r}", 1, unknown[0], source)
    for col in ("id", "kind", "maturity"):
        if col not in header:
            raise ParseError(f"missing column {col!r}", 1, col, source)
    if len(value_cols) != 1:
        raise ParseError("exactly one of rate_or_price/rate/price is required", 1, None, source)
    vcol = value_cols[0]

    rows: list[InstrumentRow] = []
    seen: set[str] = set()
    for line, raw in enumerate(reader, start=2):
        if not raw or all(not c.strip() for c in raw):
            continue
        if len(raw) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(raw)}", line, None, source)
        rec = {k: v.strip() for k, v in zip(header, raw)}
        rid = rec["id"]
        if not rid:
            raise ParseError("empty id", line, "id", source)
        if rid in seen:
            raise ParseError(f"duplicate id {rid!r}", line, "id", source)
        seen.add(rid)
        kind = rec["kind"].lower()
        if kind not in KINDS:
            raise ParseError(f"unknown kind {rec['kind']!r}", line, "kind", source)
        value = _number(rec[vcol], line, vcol, source)
        ratio = _number(rec["R"], line, "R", source) if rec.get("R") else 1.0
        if not 0.0 <= ratio <= 1.0:
            raise ParseError(f"liquidity ratio {ratio} outside [0, 1]", line, "R", source)
        maturity = _number(rec["maturity"], line, "maturity", source) if rec["maturity"] else None
        schedule = rec.get("schedule_file") or None
        if kind == "parswap":
            if maturity is None or maturity != int(maturity) or maturity < 1:
                raise ParseError("par swap maturity must be a whole number of years >= 1", line, "maturity", source)
            if value <= -1:
                raise ParseError("par rate must exceed -1", line, vcol, source)
        elif kind == "zcb":
            if maturity is None or maturity <= 0:
                raise ParseError("zero-coupon maturity must be positive", line, "maturity", source)
            if value <= 0:
                raise ParseError("zero-coupon price must be positive", line, vcol, source)
        else:
            if schedule is None:
                raise ParseError("cashflows instrument needs schedule_file", line, "schedule_file", source)
            if value <= 0:
                raise ParseError("price must be positive", line, vcol, source)
        rows.append(InstrumentRow(rid, kind, maturity, value, ratio, schedule))
    if not rows:
        raise ParseError("no instruments in file", None, None, source)
    return rows


def _fmt_float(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def serialize_rows(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(INSTRUMENT_COLUMNS)
    for r in rows:
        w.writerow([r.id, r.kind, _fmt_float(r.maturity), _fmt_float(r.value), _fmt_float(r.ratio), r.schedule_file or ""])
    return buf.getvalue()


def parswap_to_cashflows(maturity: int, rate: float) -> tuple[tuple[float, ...], tuple[float, ...], float]:
    """Annual fixed leg plus notional of a unit par swap: ``(times, amounts, price=1)``."""
    if maturity != int(maturity) or maturity < 1:
        raise ValidationError(f"par swap maturity must be a whole number of years >= 1, got {maturity!r}")
    if not rate > -1:
        raise ValidationError(f"par rate must exceed -1, got {rate!r}")
    m = int(maturity)
    times = tuple(float(t) for t in range(1, m + 1))
    amounts = tuple([float(rate)] * (m - 1) + [1.0 + rate])
    return times, amounts, 1.0


def read_schedule(path: str | Path) -> tuple[tuple[float, ...], tuple[float, ...]]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read schedule file {str(path)!r}: {exc.strerror}") from None
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or {"time", "amount"} - {f.strip() for f in reader.fieldnames}:
        raise ParseError("schedule needs columns time, amount", 1, None, str(path))
    times, amounts = [], []
    for line, rec in enumerate(reader, start=2):
        rec = {k.strip(): (v or "").strip() for k, v in rec.items()}
        times.append(_number(rec["time"], line, "time", str(path)))
        amounts.append(_number(rec["amount"], line, "amount", str(path)))
    if not times:
        raise ParseError("empty schedule", None, None, str(path))
    return tuple(times), tuple(amounts)


def rows_to_instruments(
    rows,
    scale: float | None = None,
    liquid_only: bool = False,
    base_dir: str | Path | None = None,
) -> list[Instrument]:
    """Turn rows into instruments.

    Rows with ``R == 0`` are dropped, as are rows with ``R < 1`` when
    ``liquid_only``.  With a weight ``scale`` C, partially liquid rows become
    weighted instruments; without one every kept row is fitted exactly.
    """
    base = Path(base_dir) if base_dir is not None else Path(".")
    out = []
    for r in rows:
        if r.ratio == 0.0 or (liquid_only and r.ratio < 1.0):
            continue
        weight = None if scale is None else weight_from_ratio(r.ratio, scale)
        if r.kind == "parswap":
            times, amounts, price = parswap_to_cashflows(int(r.maturity), r.value)
        elif r.kind == "zcb":
            times, amounts, price = (r.maturity,), (1.0,), r.value
        else:
            times, amounts = read_schedule(base / r.schedule_file)
            price = r.value
        out.append(Instrument(r.id, times, amounts, price, weight))
    if not out:
        raise ValidationError("no instruments left after liquidity filtering")
    return out


def parse_instruments(text: str, scale: float | None = None, liquid_only: bool = False,
                      base_dir: str | Path | None = None, source: str = "<input>") -> list[Instrument]:
    return rows_to_instruments(parse_rows(text, source), scale, liquid_only, base_dir)


def load_instruments(path: str | Path, scale: float | None = None, liquid_only: bool = False) -> list[Instrument]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {str(path)!r}: {exc.strerror}") from None
    return parse_instruments(text, scale, liquid_only, path.parent, str(path))


@dataclass(frozen=True)
class CurveTable:
    term: np.ndarray
    discount_factor: np.ndarray
    spot_continuous: np.ndarray
    spot_annual: np.ndarray
    forward_instantaneous: np.ndarray

    def columns(self) -> list[np.ndarray]:
        return [getattr(self, c) for c in CURVE_COLUMNS]


def make_mesh(start: float, end: float, step: float) -> np.ndarray:
    if not (step > 0 and start >= 0 and end >= start):
        raise ValidationError(f"bad mesh start={start} end={end} step={step}")
    n = int(math.floor((end - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(n), 12)


def curve_table(curve: FittedCurve, terms) -> CurveTable:
    """Evaluate a curve on ``terms``; at term 0 the spot is reported as its limit, the short rate."""
    terms = np.asarray(terms, dtype=float)
    if terms.ndim != 1 or terms.size == 0:
        raise ValidationError("mesh must be a non-empty list of terms")
    if terms[0] < 0 or np.any(np.diff(terms) <= 0):
        raise ValidationError("mesh terms must be non-negative and strictly increasing")
    df = curve.price(terms)
    pos = terms > 0
    fwd = curve.forward_instantaneous(terms)
    spot = np.where(pos, 0.0, fwd)
    spot[pos] = curve.spot_continuous(terms[pos])
    if np.any(df <= 0):
        raise DomainError("non-positive discount factor", float(terms[df <= 0][0]))
    return CurveTable(terms, df, spot, np.expm1(spot), fwd)


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def export_curve(curve: FittedCurve, terms) -> str:
    """Curve table as CSV text with 12 significant digits."""
    table = curve_table(curve, terms)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_COLUMNS)
    for row in zip(*table.columns()):
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def export_comparison(curves: dict[str, FittedCurve], terms) -> str:
    """One ``term`` column, then a column group ``label:quantity`` per curve."""
    tables = {label: curve_table(c, terms) for label, c in curves.items()}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["term"] + [f"{label}:{col}" for label in tables for col in CURVE_COLUMNS[1:]])
    terms = np.asarray(terms, dtype=float)
    for i, t in enumerate(terms):
        row = [_fmt(t)]
        for table in tables.values():
            row.extend(_fmt(col[i]) for col in table.columns()[1:])
        w.writerow(row)
    return buf.getvalue()


def parse_curve_table(text: str) -> CurveTable:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CURVE_COLUMNS:
        raise ParseError(f"expected columns {', '.join(CURVE_COLUMNS)}", 1)
    data = [[_number(v, line, col, "<curve>") for v, col in zip(raw, CURVE_COLUMNS)]
            for line, raw in enumerate(reader, start=2) if raw]
    arr = np.array(data, dtype=float).reshape(-1, len(CURVE_COLUMNS))
    return CurveTable(*arr.T)
