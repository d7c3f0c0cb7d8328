"""Command-line front end.

Exit codes: 0 success, 1 failed assertion (verify), 2 usage or configuration
error, 3 numeric-domain error (unbounded operator, overflow, nonpositive weight).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from typing import Any

from . import __version__
from . import expr as dsl
from . import functions as fm
from . import operators as ops
from . import verify
from .errors import EvaluationError, ParseError, RangeError, UnboundedOperatorError, WeightDomainError
from .spaces import Hardy, Weighted, parse_space
from .tree import Homogeneous, max_safe_depth, parse_shape
from .weights import parse_weight

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(Exception):
    pass


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--shape", help="tree shape: homogeneous:q, constant:k or perlevel:a,b,c")
    parser.add_argument("--depth", type=int, help="truncation depth")
    parser.add_argument("--space", default="lipschitz", help="lipschitz, weighted:<weight> or hardy:q=<q>,p=<p>")
    parser.add_argument("--weight", help="weight for a bare 'weighted' space or alt-witness: expr:<dsl> or table:a,b,c")
    parser.add_argument("--param", action="append", default=[], metavar="K=V", help="named parameter (repeatable)")
    parser.add_argument("--format", choices=("json", "tsv", "human"), default="json")
    parser.add_argument("--output", default="-", help="output path, '-' for stdout")
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    parser.add_argument("--cap", type=float, default=ops.DEFAULT_UNBOUNDED_CAP, help="ratio cap past which D is reported unbounded")
    parser.add_argument("--timing", action="store_true", help="include wall time (makes reports non-reproducible)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treediff", description="Differentiation and backward shift on tree function spaces.")
    parser.add_argument("--version", action="version", version=f"treediff {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run every reproduction check")
    _common(p)

    p = sub.add_parser("norm", help="norms of f and op(f) and their ratio")
    _common(p)
    p.add_argument("--function", required=True, help="chi:<address>, hardy-witness, alt-witness, constant:re[,im], expr:<dsl> or a JSON file")
    p.add_argument("--op", default="D", help="I, D, Cb, I-Cb or I+Cb")

    p = sub.add_parser("alpha", help="the α_n sequence deciding boundedness of C_b on Hardy spaces")
    _common(p)
    p.add_argument("--q", type=int, help="homogeneous degree (defaults to the shape's)")

    p = sub.add_parser("eigen", help="classify λ as an eigenvalue of D")
    _common(p)
    p.add_argument("--lambda", dest="lam", required=True, help="'re,im' or a real number")

    p = sub.add_parser("spectrum", help="bounding disks and known members of σ(D)")
    _common(p)

    p = sub.add_parser("matrix", help="finite section of an operator")
    _common(p)
    p.add_argument("--op", default="D", help="I, D, Cb, I-Cb or I+Cb")
    p.add_argument("--max-dim", type=int, default=ops.DEFAULT_MATRIX_CAP)

    p = sub.add_parser("parse", help="parse a weight expression and print its canonical form")
    _common(p)
    p.add_argument("text", help="expression text")
    return parser


# --- configuration ----------------------------------------------------------


def _params(items: list[str]) -> dict[str, float]:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--param expects K=V, got {item!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"--param {key} value {value!r} is not a number") from None
    return out


def _config(args) -> dict[str, Any]:
    params = _params(args.param)
    weight = parse_weight(args.weight, params) if args.weight else None
    space = parse_space(args.space, params, weight)
    if args.shape:
        shape = parse_shape(args.shape)
    elif isinstance(space, Hardy):
        shape = space.params.shape
    else:
        shape = None
    if args.depth is not None:
        if args.depth < 1:
            raise ConfigError(f"--depth must be at least 1, got {args.depth}")
        if shape is not None and args.depth > max_safe_depth(shape):
            raise ConfigError(f"--depth {args.depth} exceeds the overflow-safe maximum {max_safe_depth(shape)} for {shape}")
    return {"params": params, "weight": weight, "space": space, "shape": shape}


def _echo(args, cfg) -> dict:
    return {
        "shape": str(cfg["shape"]) if cfg["shape"] else None,
        "depth": args.depth,
        "space": cfg["space"].text(),
        "weight": cfg["weight"].text() if cfg["weight"] else None,
        "params": dict(sorted(cfg["params"].items())),
        "format": args.format,
        "seed": args.seed,
        "cap": args.cap,
    }


# --- commands ---------------------------------------------------------------


def cmd_verify(args, cfg) -> tuple[dict, int]:
    checks = verify.run(verify.VerifyConfig(shape=cfg["shape"], depth=args.depth, seed=args.seed))
    failed = sum(c.status == verify.FAIL for c in checks)
    results = {
        "checks": [c.to_json() for c in checks],
        "passed": sum(c.status == verify.PASS for c in checks),
        "failed": failed,
        "skipped": sum(c.status == verify.SKIP for c in checks),
    }
    return results, EXIT_FAIL if failed else EXIT_OK


def cmd_norm(args, cfg) -> tuple[dict, int]:
    shape = cfg["shape"] or Homogeneous(2)
    space = cfg["space"]
    space.check_shape(shape)
    N = args.depth or 6
    weight = cfg["weight"] or (space.weight if isinstance(space, Weighted) else None)
    f = fm.from_spec(args.function, weight, cfg["params"])
    op = ops.parse_operator(args.op)
    nf = space.norm(f, shape, N)
    opf = ops.apply(op, f, shape)
    nop = space.norm(opf, shape, N)
    results = {
        "function": f.describe(),
        "operator": str(op),
        "f": nf.to_json(),
        "op_f": nop.to_json(),
        "ratio": nop.value / nf.value if nf.value > 0 else None,
        "certified": nf.attained and nop.attained,
    }
    return results, EXIT_OK


def cmd_alpha(args, cfg) -> tuple[dict, int]:
    shape = cfg["shape"]
    if args.q is not None:
        q = args.q
    elif isinstance(cfg["space"], Hardy):
        q = cfg["space"].params.q
    elif isinstance(shape, Homogeneous):
        q = shape.q
    else:
        q = 2
    if q < 1:
        raise ConfigError(f"--q must be a positive integer, got {q}")
    N = args.depth or 12
    results = {
        "q": q,
        "alpha_0": ops.hardy_alpha(q, 0),
        "alpha": [ops.hardy_alpha(q, n) for n in range(1, N + 1)],
        "levels": list(range(1, N + 1)),
        "sup": ops.hardy_alpha_sup(q, N),
    }
    return results, EXIT_OK


def cmd_eigen(args, cfg) -> tuple[dict, int]:
    shape = cfg["shape"] or Homogeneous(2)
    try:
        lam = ops.parse_complex(args.lam)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    has_constants, certified = cfg["space"].contains_constants()
    result = ops.eigen_classify(lam, shape, args.depth or 8, has_constants)
    out = result.to_json()
    out["has_constants"] = has_constants
    out["has_constants_certified"] = certified
    return out, EXIT_OK


def cmd_spectrum(args, cfg) -> tuple[dict, int]:
    shape = cfg["shape"] or Homogeneous(2)
    report = ops.spectrum_bounds(cfg["space"], shape, args.depth or 8, cap=args.cap)
    return report.to_json(), EXIT_OK


def cmd_matrix(args, cfg) -> tuple[dict, int]:
    shape = cfg["shape"] or Homogeneous(2)
    op = ops.parse_operator(args.op)
    tm = ops.truncation_matrix(op, shape, args.depth or 2, cap=args.max_dim)
    out = tm.to_json()
    out["eigenvalues"] = [[k.real, k.imag, count] for k, count in sorted(tm.eigenvalues().items(), key=lambda kv: (kv[0].real, kv[0].imag))]
    out["operator"] = str(op)
    return out, EXIT_OK


def cmd_parse(args, cfg) -> tuple[dict, int]:
    tree = dsl.parse(args.text)
    out: dict[str, Any] = {"canonical": dsl.format(tree), "params": sorted(dsl.params(tree))}
    if args.depth is not None:
        out["values"] = [dsl.eval_radial(tree, n, cfg["params"]) for n in range(args.depth + 1)]
    return out, EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "norm": cmd_norm,
    "alpha": cmd_alpha,
    "eigen": cmd_eigen,
    "spectrum": cmd_spectrum,
    "matrix": cmd_matrix,
    "parse": cmd_parse,
}


# --- rendering --------------------------------------------------------------


def _cell(x) -> str:
    if isinstance(x, (list, dict)):
        return json.dumps(x, sort_keys=True, ensure_ascii=False)
    return "" if x is None else str(x)


def render_tsv(command: str, results: dict) -> str:
    lines = []
    if command == "verify":
        lines.append("criterion\tname\tstatus\texpected\tcomputed\ttolerance\tprovenance")
        for c in results["checks"]:
            lines.append("\t".join(_cell(c[k]) for k in ("criterion", "name", "status", "expected", "computed", "tolerance", "provenance")))
    elif command == "norm":
        lines.append("function\tdepth\tvalue\twitness\tattained")
        for key in ("f", "op_f"):
            rep = results[key]
            for depth, value in rep["partials"]:
                lines.append("\t".join([key, str(depth), repr(value), _cell(rep["witness"]), str(rep["attained"]).lower()]))
    elif command == "alpha":
        lines.append("n\talpha")
        lines.append(f"0\t{results['alpha_0']!r}")
        lines.extend(f"{n}\t{a!r}" for n, a in zip(results["levels"], results["alpha"]))
    elif command == "eigen":
        lines.append("vertex\tre\tim")
        lines.extend(f"{_cell(v)}\t{z[0]!r}\t{z[1]!r}" for v, z in results["trace"])
    elif command == "matrix":
        lines.append("\t".join(_cell(v) for v in results["order"]))
        lines.extend("\t".join(_cell(x) for x in row) for row in results["rows"])
    else:
        lines.append("key\tvalue")
        lines.extend(f"{k}\t{_cell(v)}" for k, v in sorted(results.items()))
    return "\n".join(lines) + "\n"


def render_human(command: str, report: dict) -> str:
    results = report["results"]
    lines = [f"treediff {report['version']} {command}"]
    if command == "verify":
        for c in results["checks"]:
            lines.append(f"[{c['status'].upper():7}] #{c['criterion']:<2} {c['name']}: computed {_cell(c['computed'])}, expected {_cell(c['expected'])}")
        lines.append(f"{results['passed']} passed, {results['failed']} failed, {results['skipped']} skipped")
    else:
        for k, v in sorted(results.items()):
            lines.append(f"{k}: {_cell(v)}")
    if "error" in report:
        lines.append(f"error: {report['error']}")
    return "\n".join(lines) + "\n"


def _emit(text: str, output: str) -> None:
    if output == "-":
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    report: dict[str, Any] = {"command": args.command, "version": __version__}
    try:
        cfg = _config(args)
        report["config"] = _echo(args, cfg)
        results, code = COMMANDS[args.command](args, cfg)
    except (ConfigError, ParseError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"treediff: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (UnboundedOperatorError, RangeError, WeightDomainError) as exc:
        print(f"treediff: numeric-domain error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (EvaluationError, ValueError, TypeError) as exc:
        print(f"treediff: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report["results"] = results
    if args.timing:
        report["wall_time"] = time.perf_counter() - start
    if args.format == "json":
        text = json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    elif args.format == "tsv":
        text = render_tsv(args.command, results)
    else:
        text = render_human(args.command, report)
    _emit(text, args.output)
    return code


if __name__ == "__main__":
    sys.exit(main())
