"""Certificate data model and its JSON file format.

A certificate for a quartic f is an identity ``qmult * f = p`` with

* ``qmult`` a degree-4 form given with an explicit list of squares (and, for
  structured certificates, as ``factor_scale * q2 * f2`` with each quadric
  factor given as at most three squares), and
* ``p = sum_k r_k**2`` a degree-8 form given with its squares r_k.

File layout (``format = "qcert-certificate"``, ``version = 1``); every
coefficient vector is in the graded-lex order of :mod:`qcert.polycore`::

    {
      "format": "qcert-certificate", "version": 1, "tool_version": "...",
      "monomial_order": "graded-lex, x0 > x1 > x2 > x3",
      "input": {"nvars": 4, "degree": 4, "coeffs": [...], "text": "..."},
      "method": "Structured" | "Direct" | "SosFastPath",
      "transform": {"matrix": [[...] x4], "scale": s},
      "qmult": {"coeffs": [...], "squares": [[...], ...],
                "factors": [{"name": "q2", "coeffs": [...], "squares": [...]}, ...],
                "factor_scale": 4.0, "gram": [[...]] | null},
      "p": {"coeffs": [...], "squares": [[...], ...], "gram": [[...]] | null},
      "residual": r,
      "tolerances": {...}
    }

Squares are stored as coefficient vectors of degree-2 (qmult) or degree-4
(p) forms in 4 variables.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .polycore import HomogPoly, OrthoMap, mul, sum_of_squares
from .polytext import format_poly

FORMAT_NAME = "qcert-certificate"
FORMAT_VERSION = 1


class Method(enum.Enum):
    STRUCTURED = "Structured"
    DIRECT = "Direct"
    SOS_FAST_PATH = "SosFastPath"


@dataclass
class Factor:
    name: str
    poly: HomogPoly
    squares: list[HomogPoly]


@dataclass
class Certificate:
    f: HomogPoly
    qmult: HomogPoly
    qmult_squares: list[HomogPoly]
    p: HomogPoly
    squares: list[HomogPoly]
    method: Method
    transform: OrthoMap = field(default_factory=lambda: OrthoMap.identity(4))
    scale: float = 1.0
    factors: list[Factor] = field(default_factory=list)
    factor_scale: float = 1.0
    qmult_gram: np.ndarray | None = None
    p_gram: np.ndarray | None = None
    residual: float = float("nan")
    tolerances: dict[str, float] = field(default_factory=dict)
    notes: dict[str, Any] = field(default_factory=dict)

    @property
    def n_squares(self) -> int:
        return len(self.squares)

    def identity_residual(self, f: HomogPoly | None = None) -> float:
        """||qmult*f - sum r_k^2||_inf / ||qmult*f||_inf."""
        f = self.f if f is None else f
        lhs = mul(self.qmult, f)
        rhs = sum_of_squares(self.squares, lhs.nvars, lhs.degree)
        denom = lhs.norm_inf()
        diff = (lhs - rhs).norm_inf()
        return diff / denom if denom > 0 else float("inf")

    def scaled(self, c: float) -> "Certificate":
        """Certificate for c*f (c > 0): p and its squares scale, qmult does not."""
        if c <= 0:
            raise ValueError("scale must be positive")
        root = float(np.sqrt(c))
        out = Certificate(
            f=self.f * c,
            qmult=self.qmult,
            qmult_squares=list(self.qmult_squares),
            p=self.p * c,
            squares=[r * root for r in self.squares],
            method=self.method,
            transform=self.transform,
            scale=self.scale / c,
            factors=list(self.factors),
            factor_scale=self.factor_scale,
            qmult_gram=self.qmult_gram,
            p_gram=None if self.p_gram is None else self.p_gram * c,
            tolerances=dict(self.tolerances),
            notes=dict(self.notes),
        )
        out.residual = out.identity_residual()
        return out


def _vec(f: HomogPoly) -> list[float]:
    return [float(c) for c in f.coeffs]


def _mat(M: np.ndarray | None):
    return None if M is None else [[float(v) for v in row] for row in np.asarray(M)]


def to_dict(cert: Certificate) -> dict[str, Any]:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "tool_version": __version__,
        "monomial_order": "graded-lex, x0 > x1 > x2 > x3",
        "input": {
            "nvars": cert.f.nvars,
            "degree": cert.f.degree,
            "coeffs": _vec(cert.f),
            "text": format_poly(cert.f),
        },
        "method": cert.method.value,
        "transform": {"matrix": _mat(cert.transform.matrix), "scale": float(cert.scale)},
        "qmult": {
            "coeffs": _vec(cert.qmult),
            "squares": [_vec(s) for s in cert.qmult_squares],
            "factors": [
                {"name": fac.name, "coeffs": _vec(fac.poly), "squares": [_vec(s) for s in fac.squares]}
                for fac in cert.factors
            ],
            "factor_scale": float(cert.factor_scale),
            "gram": _mat(cert.qmult_gram),
        },
        "p": {
            "coeffs": _vec(cert.p),
            "squares": [_vec(s) for s in cert.squares],
            "gram": _mat(cert.p_gram),
        },
        "residual": float(cert.residual),
        "tolerances": {k: float(v) for k, v in sorted(cert.tolerances.items())},
    }


class CertificateFormatError(ValueError):
    pass


def from_dict(d: dict[str, Any]) -> Certificate:
    """Parse a certificate dictionary; shapes are validated, values are not trusted."""
    if d.get("format") != FORMAT_NAME:
        raise CertificateFormatError(f"not a {FORMAT_NAME} document")
    if d.get("version") != FORMAT_VERSION:
        raise CertificateFormatError(f"unsupported certificate version {d.get('version')!r}")
    try:
        inp = d["input"]
        nvars = int(inp["nvars"])
        f = HomogPoly(nvars, int(inp["degree"]), inp["coeffs"])
        q = d["qmult"]
        qdeg = _degree_for(len(q["coeffs"]), nvars)
        pdeg = _degree_for(len(d["p"]["coeffs"]), nvars)

        def poly(coeffs, degree=None):
            return HomogPoly(nvars, _degree_for(len(coeffs), nvars) if degree is None else degree, coeffs)

        factors = [
            Factor(fac["name"], poly(fac["coeffs"]), [poly(s) for s in fac["squares"]])
            for fac in q.get("factors", [])
        ]
        # the transform is metadata; a tampered (non-orthogonal) matrix is
        # kept raw so the verifier can report it instead of failing to load
        matrix = np.asarray(d["transform"]["matrix"], dtype=np.float64)
        try:
            transform = OrthoMap(matrix)
        except ValueError:
            transform = _RawMap(matrix)
        return Certificate(
            f=f,
            qmult=poly(q["coeffs"], qdeg),
            qmult_squares=[poly(s) for s in q["squares"]],
            p=poly(d["p"]["coeffs"], pdeg),
            squares=[poly(s) for s in d["p"]["squares"]],
            method=Method(d["method"]),
            transform=transform,
            scale=float(d["transform"]["scale"]),
            factors=factors,
            factor_scale=float(q.get("factor_scale", 1.0)),
            qmult_gram=None if q.get("gram") is None else np.asarray(q["gram"], dtype=np.float64),
            p_gram=None if d["p"].get("gram") is None else np.asarray(d["p"]["gram"], dtype=np.float64),
            residual=float(d["residual"]),
            tolerances=dict(d.get("tolerances", {})),
        )
    except (KeyError, TypeError) as exc:
        raise CertificateFormatError(f"malformed certificate: {exc!r}") from exc


@dataclass(frozen=True, eq=False)
class _RawMap:
    """Stand-in for an OrthoMap that failed its orthogonality check on load."""

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _degree_for(length: int, nvars: int) -> int:
    from math import comb

    for deg in range(0, 64):
        n = comb(deg + nvars - 1, nvars - 1)
        if n == length:
            return deg
        if n > length:
            break
    raise CertificateFormatError(f"{length} coefficients do not form a homogeneous vector in {nvars} variables")


def dumps(cert: Certificate) -> str:
    return json.dumps(to_dict(cert), indent=1, sort_keys=False) + "\n"


def loads(text: str) -> Certificate:
    return from_dict(json.loads(text))


def save(cert: Certificate, path: str | Path) -> None:
    Path(path).write_text(dumps(cert), encoding="utf-8")


def load(path: str | Path) -> Certificate:
    return loads(Path(path).read_text(encoding="utf-8"))
