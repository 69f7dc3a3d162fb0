"""Command-line front end.

    smithwilson fit --method classic --alpha 0.1 --ufr-annual 0.039 --in swaps.csv --out curve.csv
    smithwilson compare --in swaps.csv --out compare.csv \\
        --variant with30=classic --variant without30=classic:liquid_only=1 \\
        --variant w1=weighted:C=1 --variant fin=finite:t2=60

Exit codes: 0 success, 2 invalid input, 3 numerical failure.  Failures print
one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .curve import CurveConfig, FittedCurve
from .errors import DomainError, SolverError, ValidationError
from .finite import fit_finite_convergence
from .fit import fit_weighted
from .marketio import export_comparison, export_curve, load_instruments, make_mesh

METHODS = ("classic", "weighted", "finite")
EXIT_VALIDATION = 2
EXIT_SOLVER = 3


@dataclass(frozen=True)
class RunConfig:
    method: str
    alpha: float
    f_inf: float
    input: Path
    output: Path | None = None
    t2: float | None = None
    C: float | None = None
    liquid_only: bool = False
    mesh_start: float = 0.0
    mesh_end: float | None = None
    mesh_step: float = 0.25
    diagnostics: Path | None = None

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}")
        if not self.alpha > 0:
            raise ValidationError("--alpha must be positive")
        if self.method == "finite" and self.t2 is None:
            raise ValidationError("--t2 is required for --method finite")
        if self.method == "weighted" and self.C is None:
            raise ValidationError("--C is required for --method weighted")
        if self.method != "finite" and self.t2 is not None:
            raise ValidationError("--t2 only applies to --method finite")

    def mesh(self) -> np.ndarray:
        end = self.mesh_end if self.mesh_end is not None else max(self.t2 or 0.0, 60.0)
        return make_mesh(self.mesh_start, end, self.mesh_step)


class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        _fail("validation", message, EXIT_VALIDATION)


def _fail(kind: str, message: str, code: int):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    raise SystemExit(code)


def run(cfg: RunConfig) -> tuple[FittedCurve, dict]:
    """Load instruments, fit, and collect diagnostics for one configuration."""
    cfg.validate()
    scale = cfg.C if cfg.method == "weighted" else None
    instruments = load_instruments(cfg.input, scale=scale, liquid_only=cfg.liquid_only)
    config = CurveConfig(cfg.alpha, cfg.f_inf, cfg.t2 if cfg.method == "finite" else None)
    if config.t2 is not None:
        last = max(ins.maturity for ins in instruments)
        if config.t2 <= last:
            raise ValidationError(f"--t2 {config.t2} must exceed the longest maturity {last}")

    diag: dict = {
        "method": cfg.method,
        "alpha": cfg.alpha,
        "f_inf": cfg.f_inf,
        "t2": config.t2,
        "C": scale,
    }
    if cfg.method == "finite":
        curve = fit_finite_convergence(instruments, config)
        fwd = curve.forward_instantaneous(config.t2)
        diag.update(forward_at_t2=fwd, forward_at_t2_error=abs(fwd - config.f_inf))
    else:
        if cfg.method == "classic":
            instruments = [ins.with_weight(None) for ins in instruments]
        curve, fd = fit_weighted(instruments, config)
        diag.update(
            energy=fd.energy,
            penalty=fd.penalty,
            kkt_residual=fd.kkt_residual,
            constraint_residual=fd.constraint_residual,
            condition_estimate=fd.condition_estimate,
        )

    rows = []
    for ins in instruments:
        model = curve.instrument_value(ins)
        rows.append({
            "id": ins.id,
            "mode": "exact" if ins.is_exact else "weighted",
            "weight": ins.weight,
            "price": ins.price,
            "model_price": model,
            "error": model - ins.price,
        })
    diag["instruments"] = rows
    exact_errors = [abs(r["error"]) for r in rows if r["mode"] == "exact"]
    diag["max_exact_repricing_error"] = max(exact_errors, default=0.0)
    return curve, diag


def _write(path: Path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ValidationError(f"cannot write {str(path)!r}: {exc.strerror}") from None


def _diag_path(out: Path, explicit: Path | None) -> Path:
    return explicit if explicit is not None else out.with_name(out.stem + ".diagnostics.json")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _ufr(args) -> float:
    if args.ufr_continuous is not None:
        return args.ufr_continuous
    if not args.ufr_annual > -1:
        raise ValidationError("--ufr-annual must exceed -1")
    return math.log1p(args.ufr_annual)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.1, help="term-scale parameter (default 0.1)")
    ufr = p.add_mutually_exclusive_group()
    ufr.add_argument("--ufr-annual", type=float, default=0.039, help="annually compounded UFR (default 0.039)")
    ufr.add_argument("--ufr-continuous", type=float, help="continuously compounded UFR")
    p.add_argument("--in", dest="input", required=True, type=Path, help="instrument CSV")
    p.add_argument("--out", dest="output", required=True, type=Path, help="curve CSV to write")
    p.add_argument("--diagnostics", type=Path, help="diagnostics JSON (default: <out>.diagnostics.json)")
    p.add_argument("--mesh-start", type=float, default=0.0)
    p.add_argument("--mesh-end", type=float, help="default max(t2, 60)")
    p.add_argument("--mesh-step", type=float, default=0.25)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgParser(prog="smithwilson", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgParser)

    p_fit = sub.add_parser("fit", help="fit one curve")
    _common(p_fit)
    p_fit.add_argument("--method", choices=METHODS, required=True)
    p_fit.add_argument("--t2", type=float, help="convergence term (finite only)")
    p_fit.add_argument("--C", dest="C", type=float, help="liquidity weight scale (weighted only)")
    p_fit.add_argument("--liquid-only", action="store_true", help="drop instruments with R < 1")

    p_cmp = sub.add_parser("compare", help="fit several variants onto one mesh")
    _common(p_cmp)
    p_cmp.add_argument(
        "--variant", action="append", required=True, metavar="LABEL=METHOD[:key=val,...]",
        help="keys: C, t2, liquid_only, mesh_start, mesh_end, mesh_step",
    )
    return parser


_VARIANT_KEYS = {"C": float, "t2": float, "liquid_only": lambda s: s.lower() in ("1", "true", "yes"),
                 "mesh_start": float, "mesh_end": float, "mesh_step": float}


def parse_variant(spec: str, base: RunConfig) -> tuple[str, RunConfig]:
    """``label=method[:key=val,...]`` -> (label, config derived from ``base``)."""
    label, sep, rest = spec.partition("=")
    if not sep or not label:
        raise ValidationError(f"variant {spec!r} must look like LABEL=METHOD[:key=val,...]")
    method, _, opts = rest.partition(":")
    changes: dict = {"method": method}
    for item in filter(None, opts.split(",")):
        key, eq, val = item.partition("=")
        if not eq or key not in _VARIANT_KEYS:
            raise ValidationError(f"variant {label!r}: bad option {item!r}")
        try:
            changes[key] = _VARIANT_KEYS[key](val)
        except ValueError:
            raise ValidationError(f"variant {label!r}: bad value in {item!r}") from None
    cfg = replace(base, **changes)
    cfg.validate()
    return label, cfg


def cmd_fit(args) -> int:
    cfg = RunConfig(
        method=args.method, alpha=args.alpha, f_inf=_ufr(args), input=args.input, output=args.output,
        t2=args.t2, C=args.C, liquid_only=args.liquid_only, mesh_start=args.mesh_start,
        mesh_end=args.mesh_end, mesh_step=args.mesh_step, diagnostics=args.diagnostics,
    )
    curve, diag = run(cfg)
    text = export_curve(curve, cfg.mesh())
    _write(cfg.output, text)
    _write(_diag_path(cfg.output, cfg.diagnostics), _dump(diag))
    return 0


def cmd_compare(args) -> int:
    base = RunConfig(
        method="classic", alpha=args.alpha, f_inf=_ufr(args), input=args.input, output=args.output,
        mesh_start=args.mesh_start, mesh_end=args.mesh_end, mesh_step=args.mesh_step,
    )
    variants = [parse_variant(v, base) for v in args.variant]
    labels = [label for label, _ in variants]
    if len(set(labels)) != len(labels):
        raise ValidationError("variant labels must be unique")
    # shared default mesh end covers every variant's t2
    if args.mesh_end is None:
        end = max([60.0] + [c.t2 for _, c in variants if c.t2 is not None])
        variants = [(l, c if c.mesh_end is not None else replace(c, mesh_end=end)) for l, c in variants]
    meshes = [c.mesh() for _, c in variants]
    if any(m.shape != meshes[0].shape or np.any(m != meshes[0]) for m in meshes[1:]):
        raise ValidationError("variants must share one evaluation mesh")
    curves, diags = {}, {}
    for label, cfg in variants:
        curves[label], diags[label] = run(cfg)
    _write(args.output, export_comparison(curves, meshes[0]))
    _write(_diag_path(args.output, args.diagnostics), _dump(diags))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return {"fit": cmd_fit, "compare": cmd_compare}[args.command](args)
    except (ValidationError, DomainError) as exc:
        _fail("validation", str(exc), EXIT_VALIDATION)
    except SolverError as exc:
        _fail("solver", str(exc), EXIT_SOLVER)


if __name__ == "__main__":
    sys.exit(main())
