"""Exception hierarchy shared by every qcert module."""

from __future__ import annotations


class QcertError(Exception):
    """Base class for all library errors."""


class InvalidExponentError(QcertError, ValueError):
    pass


class ShapeMismatchError(QcertError, ValueError):
    """Polynomials with different nvars or degree were combined."""


class InvalidMapError(QcertError, ValueError):
    pass


class AsymmetricMatrixError(QcertError, ValueError):
    pass


class ParseError(QcertError, ValueError):
    """Raised by the polynomial text parser.

    ``position`` is the 0-based character offset of the offending token
    (``None`` when the problem is global, e.g. inhomogeneity).
    """

    def __init__(self, message: str, position: int | None = None, text: str | None = None):
        self.position = position
        self.text = text
        if position is not None and text is not None:
            message = f"{message} at position {position}\n  {text}\n  {' ' * position}^"
        elif position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)


class InhomogeneousError(ParseError):
    def __init__(self, degrees: set[int]):
        self.degrees = sorted(degrees)
        super().__init__(f"polynomial is not homogeneous: term degrees {self.degrees}")


class ConvergenceError(QcertError):
    """No multistart run reached stationarity; ``best`` holds the best iterate."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class RejectedInputError(QcertError):
    """The input takes a negative value; ``witness`` is a point with f(witness) < 0."""

    def __init__(self, witness, value: float):
        super().__init__(f"input is negative somewhere: f(x) = {value:.3e}")
        self.witness = witness
        self.value = value


class ReductionError(QcertError):
    pass


class NotPsdError(QcertError, ValueError):
    pass


class HilbertStepError(QcertError):
    pass


class AssemblyError(QcertError):
    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class PullBackError(AssemblyError):
    pass


class DirectRouteError(QcertError):
    pass


class CertificationError(QcertError):
    """Every route failed; ``diagnostics`` maps route name to failure reason."""

    def __init__(self, diagnostics: dict[str, str]):
        self.diagnostics = dict(diagnostics)
        lines = "; ".join(f"{k}: {v}" for k, v in self.diagnostics.items())
        super().__init__(f"certification failed ({lines})")
