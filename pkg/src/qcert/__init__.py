"""Rational sum-of-squares certificates for nonnegative quaternary quartics.

For a nonnegative form f in x0..x3 of degree 4, :func:`certify` returns a
degree-4 sum-of-squares multiplier q and a degree-8 sum of squares p with
``q * f = p``, so that f = p / q wherever q does not vanish.
:func:`verify_certificate` re-checks such an identity from scratch.
"""

__version__ = "0.1.0"

from .polycore import HomogPoly, OrthoMap  # noqa: E402
from .polytext import format_poly, parse_poly  # noqa: E402
from .certificate import Certificate, Method  # noqa: E402
from .verify import VerifyReport, sos_check, verify_certificate  # noqa: E402
from .certify import CertifyOptions, certify  # noqa: E402

__all__ = [
    "Certificate",
    "CertifyOptions",
    "HomogPoly",
    "Method",
    "OrthoMap",
    "VerifyReport",
    "certify",
    "format_poly",
    "parse_poly",
    "sos_check",
    "verify_certificate",
]
