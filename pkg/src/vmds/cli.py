"""Command-line front end.

Exit status: 0 success, 1 the checked property fails, 2 usage or parse error.
Diagnostics go to stderr; output files are written atomically so a failed
command never leaves a partial file behind.
"""

from __future__ import annotations

import argparse
import os
import random
import sys
import tempfile
from typing import Sequence

from vmds import __version__
from vmds.algebra import make_field
from vmds.analysis import (
    FAMILIES,
    basis_vector_degrees,
    bound_max_k,
    determinant_criterion,
    diagonal_structure_check,
    intersection_profile,
    is_optimal_access,
    is_optimal_bandwidth,
    is_optimal_update,
    merge_reports,
    render_report,
)
from vmds.construct import constant_scheme_transform, diagonal_code, figure1_code, random_mds_code, shorten
from vmds.errors import InvalidScheme, InvariantViolation, NotPowerOfR, ParseError, VmdsError
from vmds.model import (
    DataState,
    RepairScheme,
    VectorMdsCode,
    deserialize,
    encode,
    is_mds,
    normalize_last_row,
    serialize,
)
from vmds.repair import render_transcript, repair_node, zero_state
from vmds.search import certify_max_k, render_certificate

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".vmds-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _load(path: str) -> tuple[VectorMdsCode, RepairScheme | None]:
    try:
        return deserialize(_read(path))
    except InvariantViolation as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load_with_scheme(path: str) -> tuple[VectorMdsCode, RepairScheme]:
    code, scheme = _load(path)
    if scheme is None:
        raise UsageError(f"{path} has no repair scheme section")
    return code, scheme


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


# --- commands ------------------------------------------------------------------


def cmd_verify(args: argparse.Namespace) -> int:
    code, scheme = _load(args.file)
    mds = is_mds(code)
    parts = [f"MDS: {_verdict(bool(mds))}"]
    ok = bool(mds)
    if scheme is None:
        parts.append("bandwidth: n/a")
        parts.append("access: n/a")
    else:
        bw = is_optimal_bandwidth(code, scheme)
        ok = ok and bw.passed
        parts.append(f"bandwidth: {_verdict(bw.passed)}")
        parts.append(f"access: {_verdict(bw.passed and is_optimal_access(scheme))}")
    parts.append(f"update: {_verdict(is_optimal_update(code))}")
    print("; ".join(parts))
    if args.verbose:
        if not mds:
            print(f"singular block submatrix rows={list(mds.witness[0])} cols={list(mds.witness[1])}")
        if scheme is not None:
            sys.stdout.write(render_report(is_optimal_bandwidth(code, scheme)))
    return EXIT_OK if ok else EXIT_FAIL


def _parse_data(text: str, code: VectorMdsCode) -> DataState:
    rows = []
    for num, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rows.append([int(x) for x in line.split()])
        except ValueError:
            raise ParseError(f"expected integers, got {line!r}", num) from None
    if len(rows) != code.k:
        raise ParseError(f"expected {code.k} data rows, got {len(rows)}")
    return encode(code, rows)


def cmd_repair(args: argparse.Namespace) -> int:
    code, scheme = _load_with_scheme(args.file)
    if args.zero:
        data = zero_state(code)
    elif args.random is not None:
        rng = random.Random(args.random)
        data = encode(code, [[rng.randrange(code.ctx.q) for _ in range(code.l)] for _ in range(code.k)])
    else:
        data = _parse_data(_read(args.data), code)
    try:
        transcript = repair_node(code, scheme, data, args.node)
    except InvalidScheme as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if transcript.reconstructed != data.node(args.node):  # pragma: no cover - repair is exact
        print("error: reconstruction does not match the erased node", file=sys.stderr)
        return EXIT_FAIL
    sys.stdout.write(render_transcript(transcript))
    return EXIT_OK


def _keep_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated node ids, got {text!r}") from None


def cmd_construct(args: argparse.Namespace) -> int:
    kind = args.kind
    if kind == "figure1":
        code, scheme = figure1_code()
    elif kind == "diagonal":
        code, scheme = diagonal_code(args.r, args.t, make_field(args.p, args.m))
    elif kind == "transform":
        code, scheme = constant_scheme_transform(*_load_with_scheme(args.file), deleted=args.deleted)
    elif kind == "shorten":
        code, scheme = shorten(*_load(args.file), args.keep)
    else:
        code = random_mds_code(args.k, args.r, args.l, make_field(args.p, args.m), args.seed)
        scheme = None
    _write(args.output, serialize(code, scheme))
    return EXIT_OK


def cmd_bounds(args: argparse.Namespace) -> int:
    try:
        bound = bound_max_k(args.l, args.r, args.family, constant_scheme=not args.non_constant)
    except NotPowerOfR as exc:
        raise UsageError(str(exc)) from None
    print(bound)
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    code, scheme = _load_with_scheme(args.file)
    diag = args.diagnostic
    normalized = False
    if diag in ("partitions", "detcriterion") and not code.is_normalized():
        # rescaling nodes by C_{r,j} keeps the scheme, so analyse the normal form
        code, normalized = normalize_last_row(code), True
    if diag == "intersections":
        report = intersection_profile(scheme)
    elif diag == "degrees":
        degrees, report = basis_vector_degrees(scheme)
        print("degrees " + " ".join(map(str, degrees)))
    elif diag == "partitions":
        report = merge_reports(
            "diagonal-structure", [diagonal_structure_check(code, scheme, m) for m in range(1, code.k + 1)]
        )
    else:
        report = determinant_criterion(code, scheme)
    sys.stdout.write(render_report(report))
    if normalized:
        print("note analysed after normalising the last parity row to identity")
    if args.verbose:
        for key, value in report.data.items():
            print(f"data {key} {value}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_search(args: argparse.Namespace) -> int:
    cert = certify_max_k(
        args.l,
        args.r,
        make_field(args.p, args.m),
        args.family,
        constant_scheme=args.constant,
        budget=args.budget,
        seed=args.seed,
    )
    _write(args.output, render_certificate(cert))
    if args.verbose:
        print(f"achieved_k={cert.achieved_k} exhausted={cert.exhausted} status={cert.status}", file=sys.stderr)
    return EXIT_OK if cert.exhausted else EXIT_FAIL


# --- argument parsing ------------------------------------------------------------


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vmds", description="Vector MDS codes with optimal repair.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="print full reports")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="classify a code document")
    p.add_argument("file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("repair", parents=[common], help="simulate repair of one systematic node")
    p.add_argument("file")
    p.add_argument("--node", type=int, required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--zero", action="store_true", help="all-zero data")
    src.add_argument("--random", type=int, metavar="SEED", help="uniform random data")
    src.add_argument("--data", metavar="FILE", help="k lines of l symbols")
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("construct", help="build a code document")
    kinds = p.add_subparsers(dest="kind", required=True)
    for name in ("figure1", "diagonal", "transform", "shorten", "random"):
        k = kinds.add_parser(name, parents=[common])
        k.add_argument("-o", "--output", default="-")
        if name in ("diagonal", "random"):
            k.add_argument("--r", type=int, required=True)
            k.add_argument("--p", type=int, required=True)
            k.add_argument("--m", type=int, default=1)
        if name == "diagonal":
            k.add_argument("--t", type=int, required=True)
        if name == "random":
            k.add_argument("--k", type=int, required=True)
            k.add_argument("--l", type=int, required=True)
            k.add_argument("--seed", type=int, default=0)
        if name in ("transform", "shorten"):
            k.add_argument("file")
        if name == "transform":
            k.add_argument("--deleted", type=int)
        if name == "shorten":
            k.add_argument("--keep", type=_keep_list, required=True, help="e.g. 1,2")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("bounds", parents=[common], help="upper bound on k")
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--family", choices=FAMILIES, default="general")
    const = p.add_mutually_exclusive_group()
    const.add_argument("--constant", action="store_true", help="constant repair schemes (default)")
    const.add_argument("--non-constant", action="store_true", help="allow non-constant schemes")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("analyze", parents=[common], help="structural diagnostics of a repair scheme")
    p.add_argument("file")
    p.add_argument("--diagnostic", choices=("intersections", "degrees", "partitions", "detcriterion"), required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("search", parents=[common], help="certify the largest k for tiny parameters")
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--family", choices=FAMILIES, default="general")
    p.add_argument("--constant", action="store_true")
    p.add_argument("--budget", type=_positive, default=2_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_search)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except VmdsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
