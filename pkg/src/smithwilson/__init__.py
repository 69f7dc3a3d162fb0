"""Smith-Wilson yield curves with a weighted fit for partially liquid
instruments and a kernel that reaches the UFR at a finite term."""

from .curve import CurveConfig, CurveKind, FittedCurve, Instrument, build_grid, cashflow_matrix
from .errors import (
    DomainError,
    IntegrationError,
    ParseError,
    SingularMatrixError,
    SolverError,
    UnsupportedOperationError,
    ValidationError,
)
from .finite import KernelCoeffs, fit_finite_convergence, wtilde, wtilde_coeffs, wtilde_coeffs_oracle
from .fit import FitDiagnostics, energy_value, evsw_value, fit_exact, fit_weighted, fit_zcb_exact
from .kernel import KernelParams, energy_coeff, energy_matrix, wilson_w
from .liquidity import liquidity_ratio, weight_from_ratio

__all__ = [
    "CurveConfig", "CurveKind", "FittedCurve", "Instrument", "build_grid", "cashflow_matrix",
    "DomainError", "IntegrationError", "ParseError", "SingularMatrixError", "SolverError",
    "UnsupportedOperationError", "ValidationError",
    "KernelCoeffs", "fit_finite_convergence", "wtilde", "wtilde_coeffs", "wtilde_coeffs_oracle",
    "FitDiagnostics", "energy_value", "evsw_value", "fit_exact", "fit_weighted", "fit_zcb_exact",
    "KernelParams", "energy_coeff", "energy_matrix", "wilson_w",
    "liquidity_ratio", "weight_from_ratio",
]
