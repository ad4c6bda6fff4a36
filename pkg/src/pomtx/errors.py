"""Exception types shared across the toolkit.

The CLI maps these onto exit codes (see cli.py): validation problems exit
with 3, fit non-convergence with 4, file I/O with 5.
"""


class TransducerError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(TransducerError, ValueError):
    """A physical parameter is outside its allowed domain."""


class ValidationError(TransducerError, ValueError):
    """One or more config/record invariants are violated.

    Collects every violation so a bad config is reported in one pass.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class SpectrumFormatError(TransducerError, ValueError):
    """A spectrum file is malformed; message carries the offending row."""


class TableRangeError(TransducerError, ValueError):
    """A lookup-table query lies outside the tabulated span."""


class CalibrationError(TransducerError):
    """An operation requires a calibrated noise model and got none."""


class InconsistentAsymmetryError(ParameterError):
    """Sideband count rates violate gamma_blue > gamma_red (bad calibration)."""


class FitError(TransducerError):
    """Base class for extraction failures."""


class FitConvergenceError(FitError):
    """Least-squares did not converge; message carries the final residual."""


class RankDeficiencyError(FitError):
    """The fit design is degenerate (e.g. all abscissae identical)."""


class SignConventionError(FitError):
    """A fitted slope has the wrong sign for the stated detuning convention."""
