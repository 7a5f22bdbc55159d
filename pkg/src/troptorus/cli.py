"""Command-line front end: problem files in, canonical JSON reports out.

Exit codes are a stable contract: 0 success/pass, 2 problem-file parse
error, 3 library invariant failure, 4 search exhausted, 5 experiment or
certification verdict failed.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .complexes import (
    ComplexError,
    Simplex,
    barycentric_triangulation,
    dyadic_refine,
)
from .equidist import (
    ExperimentConfig,
    ExperimentError,
    collapse_experiment,
    fixed_denominator_obstruction,
    run_equidistribution,
)
from .lattice import (
    Lattice,
    LatticeError,
    NotPositiveDefiniteError,
    Polarization,
    orthogonalize,
    superlattice,
)
from .linalg import DimensionMismatchError, SingularMatrixError, zero_vec
from .paf import (
    Cocycle,
    NotCertifiedError,
    PafError,
    auto_epsilon,
    build_model_function,
    check_strongly_convex,
    sup_distance_to_quadratic,
    tate_iterate,
)
from .serialization import (
    SerializationError,
    canonical_dumps,
    certificate_to_json,
    complex_to_json,
    format_rational,
    parse_matrix,
    parse_rational,
    parse_vector,
    report_to_json,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INVARIANT = 3
EXIT_SEARCH = 4
EXIT_VERDICT = 5

_INVARIANT_ERRORS = (
    LatticeError,
    NotPositiveDefiniteError,
    ComplexError,
    PafError,
    SingularMatrixError,
    DimensionMismatchError,
    ExperimentError,
    ValueError,
)


@dataclass(frozen=True)
class Problem:
    lattice: Lattice
    polarization: Polarization
    linear: tuple
    epsilon: Optional[Fraction]
    level: int
    equidist: dict
    collapse: dict
    obstruction: dict


def load_problem(path: str) -> Problem:
    import json

    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SerializationError(f"cannot read problem file: {exc}") from exc
    if not isinstance(raw, dict):
        raise SerializationError("problem file must be a JSON object")
    if raw.get("version") != 1:
        raise SerializationError("unsupported problem version")
    try:
        basis = parse_matrix(raw["lattice"])
        gram = parse_matrix(raw["gram"])
        linear = (
            parse_vector(raw["linear"])
            if "linear" in raw
            else zero_vec(len(basis))
        )
        eps = parse_rational(raw["epsilon"]) if "epsilon" in raw else None
        level = raw.get("level", 0)
        if not isinstance(level, int) or level < 0:
            raise SerializationError("level must be a nonnegative integer")
    except KeyError as exc:
        raise SerializationError(f"missing problem field {exc}") from exc
    return Problem(
        lattice=Lattice(basis),
        polarization=Polarization(gram),
        linear=linear,
        epsilon=eps,
        level=level,
        equidist=raw.get("equidist", {}),
        collapse=raw.get("collapse", {}),
        obstruction=raw.get("obstruction", {}),
    )


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _base_complex(p: Problem, level: int):
    orth = orthogonalize(p.lattice, p.polarization)
    _, prime = superlattice(orth, p.lattice)
    c = barycentric_triangulation(prime.generators, prime)
    return dyadic_refine(c, level)


def cmd_triangulate(p: Problem, args) -> int:
    level = args.level if args.level is not None else p.level
    c = _base_complex(p, level)
    _emit(canonical_dumps(complex_to_json(c)), args.out)
    return EXIT_OK


def cmd_certify(p: Problem, args) -> int:
    c = _base_complex(p, 0)
    z = Cocycle(polarization=p.polarization, linear=p.linear)
    spec = args.epsilon
    if spec is None:
        spec = "auto" if p.epsilon is None else format_rational(p.epsilon)
    if spec == "auto":
        try:
            eps, _, cert = auto_epsilon(c, z)
        except NotCertifiedError as exc:
            sys.stderr.write(f"{exc}\n")
            return EXIT_SEARCH
    else:
        eps = parse_rational(spec)
        cert = check_strongly_convex(build_model_function(c, z, eps))
    body = {"epsilon": format_rational(eps)}
    body.update(certificate_to_json(cert))
    _emit(canonical_dumps(body), args.out)
    return EXIT_OK if cert.passed else EXIT_VERDICT


def cmd_tate(p: Problem, args) -> int:
    c = _base_complex(p, 0)
    z = Cocycle(polarization=p.polarization, linear=p.linear)
    eps = p.epsilon if p.epsilon is not None else auto_epsilon(c, z)[0]
    f0 = build_model_function(c, z, eps)
    rows = []
    prev = None
    for i in range(args.iterations + 1):
        fi = tate_iterate(f0, i)
        if not check_strongly_convex(fi).passed:
            raise PafError(f"convexity lost at iteration {i}")
        d = sup_distance_to_quadratic(fi)
        ratio = None if prev in (None, 0) else d / prev
        if ratio is not None and ratio != Fraction(1, 4):
            raise PafError(f"contraction ratio {ratio} != 1/4 at step {i}")
        rows.append({"i": i, "sup_distance": d, "ratio": ratio})
        prev = d
    if args.format == "csv":
        lines = ["i,sup_distance,ratio"]
        for r in rows:
            ratio = "" if r["ratio"] is None else format_rational(r["ratio"])
            lines.append(f"{r['i']},{format_rational(r['sup_distance'])},{ratio}")
        _emit("\n".join(lines) + "\n", args.out)
    else:
        _emit(canonical_dumps({"epsilon": eps, "rows": rows}), args.out)
    return EXIT_OK


def _report_exit(report, args, csv_header: str) -> int:
    if args.format == "csv":
        lines = [csv_header]
        for entry in report.entries:
            lines.append(
                ",".join(
                    format_rational(x) if isinstance(x, Fraction) else str(x)
                    for x in entry
                )
            )
        _emit("\n".join(lines) + "\n", args.out)
    else:
        _emit(canonical_dumps(report_to_json(report)), args.out)
    return EXIT_OK if report.verdict == "pass" else EXIT_VERDICT


def cmd_equidist(p: Problem, args) -> int:
    opts = p.equidist
    cfg = ExperimentConfig(
        lattice=p.lattice,
        polarization=p.polarization,
        test_level=opts.get("test_level", 1),
        grid_orders=tuple(opts.get("grid_orders", (8, 16, 32, 64, 128, 256, 512))),
        seed=args.seed,
    )
    return _report_exit(
        run_equidistribution(cfg), args, "m,discrepancy,exact_zero"
    )


def _diagonal_face(p: Problem, copies: int) -> Simplex:
    base = _base_complex(p, 0)
    cell = base.cells[0]
    return Simplex(tuple(v * copies for v in cell.vertices))


def cmd_collapse(p: Problem, args) -> int:
    opts = p.collapse
    copies = opts.get("copies", 2)
    deltas = tuple(
        parse_rational(d)
        for d in opts.get("deltas", ["1/4", "1/8", "1/16", "1/32"])
    )
    samples = args.samples if args.samples is not None else opts.get(
        "samples", 100_000
    )
    report = collapse_experiment(
        p.lattice,
        _diagonal_face(p, copies),
        copies,
        deltas,
        samples=samples,
        seed=args.seed,
    )
    return _report_exit(report, args, "delta,mass")


def cmd_obstruction(p: Problem, args) -> int:
    opts = p.obstruction
    e = opts.get("denominator", 1)
    level = opts.get("witness_level", 0)
    try:
        bound, witness, integral = fixed_denominator_obstruction(
            p.lattice, e, level, p.polarization
        )
    except ExperimentError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_SEARCH
    body = {
        "kind": "obstruction",
        "verdict": "pass",
        "denominator": e,
        "bound": bound,
        "witness_integral": integral,
        "witness_level": witness.complex.level,
    }
    _emit(canonical_dumps(body), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="troptorus",
        description="Exact polyhedral toolkit for periodic convex functions "
        "and torus equidistribution experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("triangulate", cmd_triangulate),
        ("certify", cmd_certify),
        ("tate", cmd_tate),
        ("equidist", cmd_equidist),
        ("collapse", cmd_collapse),
        ("obstruction", cmd_obstruction),
    ):
        s = sub.add_parser(name)
        s.set_defaults(handler=fn)
        s.add_argument("--problem", required=True)
        s.add_argument("--out", default=None)
        s.add_argument("--level", type=int, default=None)
        s.add_argument("--epsilon", default=None, help="'auto' or 'p/q'")
        s.add_argument("--iterations", type=int, default=4)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--samples", type=int, default=None)
        s.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        problem = load_problem(args.problem)
    except SerializationError as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return EXIT_PARSE
    try:
        return args.handler(problem, args)
    except SerializationError as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return EXIT_PARSE
    except _INVARIANT_ERRORS as exc:
        sys.stderr.write(f"invariant failure: {exc}\n")
        return EXIT_INVARIANT


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
