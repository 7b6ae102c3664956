"""Command line: ``padic-witness analyze|witness|verify|valset``.

Exit codes: 0 pass, 1 verification failure, 2 schema error, 3 dependent
basis, 4 truncation too shallow, 5 inconclusive.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import DependentBasis, InputError, ModeError, SchemaError, TruncationTooShallow
from .field_tower import PrimeContext, element_from_json
from .oracle import DEFAULT_PRECISION, MAX_PRECISION, fractional_parts, parse_basis, valuation_set, verify_certificate, verify_injectivity_grid
from .series import truncate_vector
from .witness import analyze, basis_to_json, minimal_m, solve

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_DEPENDENT, EXIT_TRUNCATION, EXIT_INCONCLUSIVE = range(6)


def load_json(path: str):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg}", f"{path}:{exc.lineno}:{exc.colno}") from None


def _int_key(obj, key, where="", minimum=1):
    val = obj.get(key)
    if isinstance(val, bool) or not isinstance(val, int) or val < minimum:
        raise SchemaError(f"'{key}' must be an integer >= {minimum}", f"{where}{key}")
    return val


def load_problem(path: str):
    """Parse a problem file into ``(SubspaceBasis, options)``."""
    obj = load_json(path)
    if not isinstance(obj, dict):
        raise SchemaError("problem file must hold a JSON object")
    p = _int_key(obj, "p", minimum=2)
    D = _int_key(obj, "D")
    d = _int_key(obj, "d")
    r = _int_key(obj, "r")
    try:
        ctx = PrimeContext(p, D)
    except InputError as exc:
        raise SchemaError(str(exc), "p") from None
    basis = parse_basis(obj.get("basis"), ctx, d, r)
    options = obj.get("options", {})
    if not isinstance(options, dict):
        raise SchemaError("'options' must be an object", "options")
    return basis, options


def load_vectors(obj):
    """Vectors for ``valset``: ``{"p", "D", "vectors": [[element, ...], ...]}``."""
    ctx = PrimeContext(_int_key(obj, "p", minimum=2), _int_key(obj, "D"))
    vecs = obj.get("vectors")
    if not isinstance(vecs, list) or not vecs:
        raise SchemaError("'vectors' must be a nonempty list", "vectors")
    out = []
    for i, v in enumerate(vecs):
        if not isinstance(v, list):
            raise SchemaError("each vector must be a list", f"vectors[{i}]")
        out.append(tuple(element_from_json(x, ctx, f"vectors[{i}][{k}]") for k, x in enumerate(v)))
    if len({len(v) for v in out}) != 1:
        raise SchemaError("vectors must share one length", "vectors")
    return out


def _emit(data, args):
    text = json.dumps(data, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    elif not args.quiet:
        sys.stdout.write(text)


def _precision(args, options):
    if args.precision is not None:
        return args.precision
    return options.get("precision", DEFAULT_PRECISION)


def cmd_analyze(args) -> int:
    basis, _ = load_problem(args.problem)
    _emit(analyze(basis), args)
    return EXIT_OK


def cmd_witness(args) -> int:
    basis, _ = load_problem(args.problem)
    _, cert = solve(basis)
    _emit(cert.to_json(), args)
    return EXIT_OK


def cmd_verify(args) -> int:
    cert = load_json(args.certificate)
    report = verify_certificate(cert)
    result = {"certificate": "pass" if report.passed else "fail", "failures": [f"{n}: {d}".rstrip(": ") for n, d in report.failures()]}
    status = EXIT_OK if report.passed else EXIT_FAIL
    if args.problem:
        basis, options = load_problem(args.problem)
        same = basis_to_json(basis) == cert.get("basis")
        result["problem_match"] = same
        if not same:
            status = EXIT_FAIL
        if report.passed and same:
            witness = tuple(element_from_json(x, None, f"witness[{i}]") for i, x in enumerate(cert["witness"]))
            grid = verify_injectivity_grid(basis, witness, _precision(args, options))
            result["grid"] = grid.to_json()
            if grid.status == "fail":
                status = EXIT_FAIL
            elif grid.status == "inconclusive":
                status = EXIT_INCONCLUSIVE
    _emit(result, args)
    return status


def cmd_valset(args) -> int:
    obj = load_json(args.problem)
    if not isinstance(obj, dict):
        raise SchemaError("expected a JSON object")
    if "vectors" in obj:
        t = load_vectors(obj)
    else:
        basis, _ = load_problem(args.problem)
        m = minimal_m(basis) if basis.r == 1 else 1
        t = [truncate_vector(e, m) for e in basis.elements]
    L = args.precision if args.precision is not None else DEFAULT_PRECISION
    vs = valuation_set(t, L, max(L, MAX_PRECISION))
    fracs, conclusive = fractional_parts(vs)
    out = vs.to_json()
    out["fractional_parts"] = [str(f) for f in sorted(fracs)]
    out["fractional_parts_conclusive"] = conclusive
    _emit(out, args)
    return EXIT_OK if vs.stabilized else EXIT_INCONCLUSIVE


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--precision", type=int, default=None, help="residue precision L")
    common.add_argument("--output", help="write JSON here instead of standard output")
    common.add_argument("--quiet", action="store_true", help="print nothing on standard output")

    parser = argparse.ArgumentParser(prog="padic-witness", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("analyze", parents=[common], help="constants m, M, A, q, N and the region")
    p.add_argument("problem")
    p.set_defaults(func=cmd_analyze)
    p = sub.add_parser("witness", parents=[common], help="witness point and certificate")
    p.add_argument("problem")
    p.set_defaults(func=cmd_witness)
    p = sub.add_parser("verify", parents=[common], help="audit a certificate")
    p.add_argument("certificate")
    p.add_argument("problem", nargs="?")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("valset", parents=[common], help="enumerate a valuation set")
    p.add_argument("problem")
    p.set_defaults(func=cmd_valset)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except DependentBasis as exc:
        print(f"dependent basis: {exc}", file=sys.stderr)
        return EXIT_DEPENDENT
    except TruncationTooShallow as exc:
        print(f"truncation too shallow: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    except (InputError, ModeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
