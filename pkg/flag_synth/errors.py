from __future__ import annotations

from typing import Dict, Optional


class FlagSynthError(Exception):
    """Base class for every error the library raises on purpose."""

    exit_code: int = 1


class InputError(FlagSynthError):
    exit_code = 2


class ParseError(InputError):
    """A line or row of an input file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None, unit: str = "line"):
        self.line = line
        if line is not None:
            message = f"{unit} {line}: {message}"
        super().__init__(message)


class DegenerateDataError(FlagSynthError):
    exit_code = 3


class EmptyDatasetError(DegenerateDataError):
    pass


class EmptyDistributionError(DegenerateDataError):
    pass


class DegenerateDistributionError(DegenerateDataError):
    pass


class NumericError(DegenerateDataError):
    """The optimizer did not converge; `diagnostics` holds what it reported."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, object]] = None):
        self.diagnostics = diagnostics or {}
        super().__init__(f"{message} {self.diagnostics}" if self.diagnostics else message)


class ParameterError(FlagSynthError):
    exit_code = 4


class IllegalBeta(ParameterError):
    def __init__(self, beta: float, beta_max: float, support_beta_max: Optional[float] = None):
        self.beta = beta
        self.beta_max = beta_max
        self.support_beta_max = support_beta_max
        message = f"beta={beta:g} exceeds beta_max={beta_max:.12g}"
        if support_beta_max is not None and support_beta_max > beta_max:
            # Only informative when the smallest observed size is above 1.
            message += (
                f" (the smallest observed profile size would allow up to "
                f"{support_beta_max:.6g})"
            )
        super().__init__(message)


class NoFeasibleFitError(ParameterError):
    def __init__(self, beta_max_at_alpha: Dict[float, float]):
        self.beta_max_at_alpha = beta_max_at_alpha
        shown = ", ".join(f"{a:g}:{b:.4g}" for a, b in list(beta_max_at_alpha.items())[:10])
        more = "" if len(beta_max_at_alpha) <= 10 else f", ... ({len(beta_max_at_alpha)} alphas)"
        super().__init__(
            f"No legal (alpha, beta) pair in the requested grid; beta_max by alpha: {shown}{more}"
        )


class CoverageError(FlagSynthError):
    exit_code = 5

    def __init__(self, missing: list[str]):
        self.missing = missing
        sample = ", ".join(missing[:5])
        super().__init__(
            f"Attribute table does not cover {len(missing)} entities (e.g. {sample}); "
            "pass --allow-partial to exclude them"
        )


class ConsistencyError(FlagSynthError):
    exit_code = 5
