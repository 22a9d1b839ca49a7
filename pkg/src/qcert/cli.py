"""Command-line front end: ``qcert certify | verify | check-sos | min-sphere | gen``.

Exit codes::

    0  success (certificate verified / verification passed)
    1  verification failed
    2  input rejected: negative somewhere (a witness is printed)
    3  certification failed on every route
    4  unreadable input (syntax, inhomogeneity, wrong shape, bad file)
    64 command-line usage error
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .certificate import CertificateFormatError, dumps, load
from .certify import CertifyOptions, Route, certify
from .corpus import choi_lam, indefinite, random_sos, sos_eps
from .errors import CertificationError, ConvergenceError, QcertError, RejectedInputError
from .polycore import HomogPoly
from .polytext import format_poly, parse_poly
from .sphereopt import min_on_sphere
from .verify import DEFAULT_TOL, sos_check, verify_certificate

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_REJECTED = 2
EXIT_FAILED = 3
EXIT_BAD_INPUT = 4
EXIT_USAGE = 64

BATCH_SUFFIXES = (".poly", ".txt")
GEN_KINDS = ("sos", "soseps", "choilam", "indefinite")

log = logging.getLogger("qcert")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would collide with "rejected"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("QC_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise SystemExit(f"QC_SEED must be an integer, got {env!r}") from None


def read_input(source: str) -> HomogPoly:
    """Polynomial from literal text, a file path, or '-' for standard input."""
    if source == "-":
        text = sys.stdin.read()
    elif os.path.isfile(source):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source
    return parse_poly(text.strip())


def _quartic(source: str) -> HomogPoly:
    f = read_input(source)
    if f.degree != 4:
        raise QcertError(f"expected a quartic, got degree {f.degree}")
    return f


def _fmt_point(x) -> str:
    return "[" + ", ".join(repr(float(v)) for v in np.asarray(x)) + "]"


def _certify_one(f: HomogPoly, opts: CertifyOptions, out: str | None) -> tuple[int, str]:
    """Certify f, write the certificate; returns (exit code, message)."""
    try:
        cert = certify(f, opts)
    except RejectedInputError as exc:
        return EXIT_REJECTED, f"rejected: f(x) = {exc.value!r} < 0 at x = {_fmt_point(exc.witness)}"
    except CertificationError as exc:
        return EXIT_FAILED, f"certification failed: {exc}"
    text = dumps(cert)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    msg = f"certified: method {cert.method.value}, {cert.n_squares} squares, residual {cert.residual:.3e}"
    return EXIT_OK, msg


def _batch_worker(job: tuple[str, str, dict]) -> tuple[str, int, str]:
    src, out, kw = job
    try:
        f = _quartic(src)
    except (QcertError, OSError) as exc:
        return src, EXIT_BAD_INPUT, f"bad input: {exc}"
    code, msg = _certify_one(f, CertifyOptions(**kw), out)
    return src, code, msg


def cmd_certify(args) -> int:
    kw = dict(method=Route(args.method), tol=args.tol, seed=_seed(args))
    if args.batch:
        folder = Path(args.batch)
        if not folder.is_dir():
            print(f"--batch: {folder} is not a directory", file=sys.stderr)
            return EXIT_BAD_INPUT
        out_dir = Path(args.out or folder)
        out_dir.mkdir(parents=True, exist_ok=True)
        files = sorted(p for p in folder.iterdir() if p.suffix in BATCH_SUFFIXES)
        jobs = [(str(p), str(out_dir / (p.stem + ".cert.json")), kw) for p in files]
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_batch_worker, jobs))
        worst = EXIT_OK
        for src, code, msg in results:
            # one line per file; parse errors carry a caret diagram below
            print(f"{src}: {msg.splitlines()[0]}")
            worst = max(worst, code)
        return worst
    if not args.input:
        print("certify needs --input or --batch", file=sys.stderr)
        return EXIT_USAGE
    try:
        f = _quartic(args.input)
    except (QcertError, OSError) as exc:
        print(f"bad input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    code, msg = _certify_one(f, CertifyOptions(**kw), args.out)
    print(msg, file=sys.stdout if code == EXIT_REJECTED else sys.stderr)
    return code


def cmd_verify(args) -> int:
    try:
        f = _quartic(args.input)
    except (QcertError, OSError) as exc:
        print(f"bad input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        cert = load(args.cert)
    except (CertificateFormatError, QcertError, ValueError, OSError) as exc:
        print(f"certificate unreadable: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report = verify_certificate(f, cert, tol=args.tol)
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_dict(), indent=1) + "\n", encoding="utf-8")
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_INVALID


def cmd_check_sos(args) -> int:
    try:
        f = read_input(args.input)
    except (QcertError, OSError) as exc:
        print(f"bad input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        res = sos_check(f)
    except QcertError as exc:
        print(f"bad input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    print(res.status.value)
    print(f"t* = {res.t!r}", file=sys.stderr)
    return EXIT_OK


def cmd_min_sphere(args) -> int:
    try:
        f = read_input(args.input)
    except (QcertError, OSError) as exc:
        print(f"bad input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        res = min_on_sphere(f, seed=_seed(args))
    except ConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_FAILED
    print(f"value {res.value!r}")
    print(f"minimizer {_fmt_point(res.xstar)}")
    print(f"classification {res.classification.value}")
    return EXIT_OK


def cmd_gen(args) -> int:
    rng = np.random.default_rng(_seed(args))
    for _ in range(args.count):
        if args.kind == "sos":
            f, _ = random_sos(rng)
            f = f * (1.0 / f.norm_inf())
        elif args.kind == "soseps":
            f = sos_eps(rng, args.eps)
        elif args.kind == "choilam":
            f = choi_lam()
        else:
            f = indefinite(rng)
        print(format_poly(f))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qcert", description="Sum-of-squares certificates for nonnegative quaternary quartics.")
    ap.add_argument("--version", action="version", version=f"qcert {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="log progress to stderr (-vv for debug)")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def seeded(p):
        p.add_argument("--seed", type=int, default=None, help="random seed (default: $QC_SEED, else 0)")

    p = sub.add_parser("certify", help="certify a nonnegative quartic")
    p.add_argument("--input", "-i", help="polynomial text, a file containing it, or '-' for stdin")
    p.add_argument("--method", choices=[r.value for r in Route], default="auto")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--out", "-o", help="certificate file (stdout if omitted); output directory with --batch")
    p.add_argument("--batch", metavar="DIR", help=f"certify every {'/'.join(BATCH_SUFFIXES)} file in DIR")
    p.add_argument("--jobs", type=int, default=None, help="parallel workers for --batch")
    seeded(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("verify", help="check a certificate against a polynomial")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--cert", "-c", required=True)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--report", help="write the JSON report here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("check-sos", help="Gram SDP test: IsSos / NotSos / Inconclusive")
    p.add_argument("--input", "-i", required=True)
    p.set_defaults(func=cmd_check_sos)

    p = sub.add_parser("min-sphere", help="minimize a form on the unit sphere")
    p.add_argument("--input", "-i", required=True)
    seeded(p)
    p.set_defaults(func=cmd_min_sphere)

    p = sub.add_parser("gen", help="print corpus polynomials, one per line")
    p.add_argument("--kind", choices=GEN_KINDS, required=True)
    p.add_argument("--eps", type=float, default=1e-3, help="weight of (sum x_i^2)^2 for --kind soseps")
    p.add_argument("--count", "-n", type=int, default=1)
    seeded(p)
    p.set_defaults(func=cmd_gen)
    return ap


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    return args.func(args)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
