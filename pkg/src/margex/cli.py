"""Command-line front end: state files, reports, and subcommands."""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import shlex
import sys
from pathlib import Path

import numpy as np

from .coherent import coherent_lift_extension
from .constructors import (
    build_triangle_equality_state,
    chain_extension,
    classical_extension,
    embed_classical,
    extract_classical,
    golden_thompson_R,
    matched_separable_extension,
    perturbation_extension,
    separable_ensemble,
    shannon,
)
from .criteria import (
    COMPAT_TOL,
    ENTROPY_EQ_TOL,
    check_compatible,
    entropy_report,
    necessary_conditions,
)
from .errors import (
    IncompatibleMarginalsError,
    InvalidStateError,
    MargexError,
)
from .feasibility import (
    FEAS_TOL,
    CounterexampleSpec,
    Status,
    build_counterexample,
    solve,
)
from .states import DensityMatrix, density, entropy, marginal, random_density

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BLOCKED = 2
EXIT_MODULE = 2

STATUS_EXIT = {
    Status.FEASIBLE: 0,
    Status.INFEASIBLE: 3,
    Status.UNDECIDED: 4,
}


# ---------------------------------------------------------------------------
# canonical state files


def _fmt17(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise InvalidStateError("non-finite value cannot be serialized")
    return format(x, ".17g")


def _emit(obj) -> str:
    if isinstance(obj, dict):
        items = (f'"{k}": {_emit(obj[k])}' for k in sorted(obj))
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_emit(v) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt17(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_dumps(obj) -> str:
    """Serialize to JSON with sorted keys, %.17g floats, one LF at the end."""
    return _emit(obj) + "\n"


def matrix_payload(mat: np.ndarray) -> list:
    a = np.asarray(mat, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in a]


def state_payload(rho: DensityMatrix) -> dict:
    return {"dims": [int(d) for d in rho.dims],
            "matrix": matrix_payload(rho.mat)}


def parse_state(payload, tol: float | None = None,
                name: str = "state") -> DensityMatrix:
    """Build a validated DensityMatrix from a decoded StateFile document."""
    if not isinstance(payload, dict) or set(payload) != {"dims", "matrix"}:
        raise InvalidStateError(f"{name}: expected keys dims and matrix")
    dims = payload["dims"]
    if (not isinstance(dims, list) or not dims
            or not all(isinstance(d, int) and d > 0 for d in dims)):
        raise InvalidStateError(f"{name}: dims must be positive integers")
    rows = payload["matrix"]
    n = int(np.prod(dims))
    try:
        a = np.asarray(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidStateError(f"{name}: malformed matrix entries") from exc
    if a.shape != (n, n, 2):
        raise InvalidStateError(
            f"{name}: matrix shape {a.shape} does not match dims {dims}")
    return density(a[..., 0] + 1j * a[..., 1], tuple(dims), atol=tol)


def loads_state(text: str, tol: float | None = None,
                name: str = "state") -> DensityMatrix:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidStateError(f"{name}: invalid JSON ({exc})") from exc
    return parse_state(payload, tol=tol, name=name)


def dumps_state(rho: DensityMatrix) -> str:
    return canonical_dumps(state_payload(rho))


def read_state(path, tol: float | None = None) -> DensityMatrix:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidStateError(f"{path}: {exc.strerror or exc}") from exc
    return loads_state(text, tol=tol, name=str(path))


def write_state(path, rho: DensityMatrix) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_state(rho))


# ---------------------------------------------------------------------------
# reports


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _file_digest(path) -> str:
    return _digest(Path(path).read_bytes())


class Report:
    """Collects the machine block and the human summary side by side."""

    def __init__(self, command: str, argv: list[str]):
        self.machine = {"command": command, "argv": list(argv),
                        "inputs": {}, "tolerances": {}}
        self.lines = [f"command: margex {' '.join(argv)}".rstrip()]

    def add_input(self, label: str, path: str, digest: str) -> None:
        self.machine["inputs"][label] = {"path": str(path), "sha256": digest}
        self.lines.append(f"input {label}: {path} sha256={digest[:12]}")

    def add_tolerance(self, name: str, value: float) -> None:
        self.machine["tolerances"][name] = float(value)
        self.lines.append(f"tolerance {name} = {value:g}")

    def add(self, key: str, value, text: str | None = None) -> None:
        self.machine[key] = value
        if text is None:
            if isinstance(value, float):
                text = f"{key} = {value:.6g}"
            else:
                text = f"{key} = {value}"
        self.lines.append(text)

    def emit(self, as_json: bool, stream=None) -> None:
        stream = sys.stdout if stream is None else stream
        if as_json:
            stream.write(canonical_dumps(self.machine))
        else:
            stream.write("\n".join(self.lines) + "\n")


def _report_entropies(report: Report, rep) -> None:
    for name in ("S1", "S2", "S3", "S12", "S23"):
        report.add(name, getattr(rep, name))
    report.add("slack_cheap", rep.slack_cheap)
    report.add("slack_pol", rep.slack_pol)
    report.add("al_slack12", rep.al_slack12)
    report.add("al_slack23", rep.al_slack23)


# ---------------------------------------------------------------------------
# subcommands


def cmd_check(args, argv) -> int:
    report = Report("check", argv)
    tol = COMPAT_TOL if args.tol is None else args.tol
    report.add_tolerance("compat_tol", tol)
    report.add_tolerance("entropy_eq_tol", ENTROPY_EQ_TOL)
    rho12 = read_state(args.rho12, tol=args.tol)
    report.add_input("rho12", args.rho12, _file_digest(args.rho12))
    rho23 = read_state(args.rho23, tol=args.tol)
    report.add_input("rho23", args.rho23, _file_digest(args.rho23))
    try:
        pair = check_compatible(rho12, rho23, tol=tol)
    except IncompatibleMarginalsError as exc:
        report.add("compatibility_distance", exc.distance)
        report.add("compatible", False)
        report.add("blocked", True)
        report.add("reason", "middle reductions disagree")
        report.emit(args.json)
        return EXIT_BLOCKED
    verdict = necessary_conditions(pair)
    report.add("compatibility_distance", pair.overlap_gap)
    report.add("compatible", verdict.compatible)
    _report_entropies(report, verdict.report)
    report.add("product_only_obstruction", verdict.product_only_obstruction,
               "product-only obstruction = "
               + ("yes" if verdict.product_only_obstruction else "no"))
    report.add("passes_cheap", verdict.passes_cheap)
    report.add("passes_pol", verdict.passes_pol)
    report.add("blocked", verdict.blocked)
    if verdict.blocked and verdict.product_only_obstruction:
        report.add("reason", "product-only obstruction")
    report.emit(args.json)
    return EXIT_BLOCKED if verdict.blocked else EXIT_OK


def cmd_entropy(args, argv) -> int:
    report = Report("entropy", argv)
    rho = read_state(args.state, tol=args.tol)
    report.add_input("state", args.state, _file_digest(args.state))
    report.add("dims", [int(d) for d in rho.dims],
               "dims = " + "x".join(str(d) for d in rho.dims))
    report.add("entropy", entropy(rho))
    if len(rho.dims) > 1:
        for i in range(len(rho.dims)):
            report.add(f"entropy_{i + 1}", entropy(marginal(rho, [i])))
    w = np.linalg.eigvalsh(rho.mat)
    report.add("eig_min", float(w[0]))
    report.add("eig_max", float(w[-1]))
    report.emit(args.json)
    return EXIT_OK


def _read_pair_args(args, report: Report):
    if args.rho12 == "-":
        data = sys.stdin.read()
        report.add_input("bundle", "<stdin>", _digest(data.encode("utf-8")))
        try:
            payload = json.loads(data)
        except json.JSONDecodeError as exc:
            raise InvalidStateError(f"stdin: invalid JSON ({exc})") from exc
        if not isinstance(payload, dict) or \
                not {"rho12", "rho23"} <= set(payload):
            raise InvalidStateError("stdin: bundle needs rho12 and rho23")
        rho12 = parse_state(payload["rho12"], tol=args.tol, name="rho12")
        rho23 = parse_state(payload["rho23"], tol=args.tol, name="rho23")
        return rho12, rho23
    if args.rho23 is None:
        raise InvalidStateError("rho23 file is required unless reading stdin")
    rho12 = read_state(args.rho12, tol=args.tol)
    report.add_input("rho12", args.rho12, _file_digest(args.rho12))
    rho23 = read_state(args.rho23, tol=args.tol)
    report.add_input("rho23", args.rho23, _file_digest(args.rho23))
    return rho12, rho23


def cmd_solve(args, argv) -> int:
    report = Report("solve", argv)
    feas_tol = FEAS_TOL if args.tol is None else args.tol
    report.add_tolerance("feas_tol", feas_tol)
    rho12, rho23 = _read_pair_args(args, report)
    pair = check_compatible(rho12, rho23)
    verdict = solve(pair, max_iter=args.max_iter, feas_tol=feas_tol)
    report.add("status", verdict.status.name,
               f"verdict: {verdict.status.name}")
    report.add("residual", verdict.residual)
    report.add("gap", verdict.gap)
    report.add("iterations", verdict.iterations)
    report.add("evidence", verdict.evidence, f"evidence: {verdict.evidence}")
    if verdict.witness is not None:
        report.machine["witness"] = state_payload(verdict.witness)
        if args.out:
            write_state(args.out, verdict.witness)
            report.lines.append(f"witness written to {args.out}")
    report.emit(args.json)
    return STATUS_EXIT[verdict.status]


def cmd_counterexample(args, argv) -> int:
    report = Report("counterexample", argv)
    spec = CounterexampleSpec(mu1=args.mu1, phi1_angle=args.phi1_angle,
                              eta_skew=args.skew)
    pair, cert = build_counterexample(spec)
    rep = entropy_report(pair)
    report.add("span_dim", int(cert.span_dim))
    _report_entropies(report, rep)
    bundle = {
        "rho12": state_payload(pair.rho12),
        "rho23": state_payload(pair.rho23),
        "certificate": {
            "span_dim": int(cert.span_dim),
            "vectors": [[[float(v.real), float(v.imag)] for v in vec]
                        for vec in cert.vectors],
        },
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_state(out / "rho12.json", pair.rho12)
        write_state(out / "rho23.json", pair.rho23)
        with open(out / "certificate.json", "w", encoding="utf-8",
                  newline="\n") as fh:
            fh.write(canonical_dumps(bundle["certificate"]))
        report.lines.append(f"state and certificate files written to {out}")
        report.emit(args.json)
    else:
        # keep stdout clean for piping into `solve -`
        report.emit(args.json, stream=sys.stderr)
        sys.stdout.write(canonical_dumps(bundle))
    return EXIT_OK


def _parse_csv_floats(text: str) -> np.ndarray:
    try:
        vals = np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError as exc:
        raise InvalidStateError(f"bad number list {text!r}") from exc
    if vals.size == 0:
        raise InvalidStateError(f"empty number list {text!r}")
    return vals


def _parse_dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise InvalidStateError(f"bad dims {text!r}") from exc
    if not dims or any(d <= 0 for d in dims):
        raise InvalidStateError(f"bad dims {text!r}")
    return dims


def _marginal_errors(rho123: DensityMatrix, pair) -> tuple[float, float]:
    got12 = marginal(rho123, [0, 1]).mat
    got23 = marginal(rho123, [1, 2]).mat
    return (float(np.abs(got12 - pair.rho12.mat).max()),
            float(np.abs(got23 - pair.rho23.mat).max()))


def cmd_construct(args, argv) -> int:
    report = Report(f"construct {args.kind}", argv)
    if args.tol is not None:
        report.add_tolerance("tol", args.tol)
    out: DensityMatrix

    if args.kind == "classical":
        _require(args, "inputs", 2, "classical needs P12 and P23 files")
        p12 = extract_classical(_read_input(args, report, 0, "p12"))
        p23 = extract_classical(_read_input(args, report, 1, "p23"))
        joint = classical_extension(p12, p23)
        out = embed_classical(joint)
        h_gap = shannon(joint.probs) - (shannon(p12.probs)
                                        + shannon(p23.probs)
                                        - shannon(p12.probs.sum(axis=0)))
        report.add("entropy_identity_gap", abs(h_gap))
    elif args.kind == "chain":
        if len(args.inputs) < 2:
            raise InvalidStateError("chain needs at least two table files")
        joints = [extract_classical(_read_input(args, report, i, f"p{i + 1}"))
                  for i in range(len(args.inputs))]
        joint = chain_extension(joints)
        out = embed_classical(joint)
        # each table past the first shares its leading variable
        h_target = sum(shannon(j.probs) for j in joints) \
            - sum(shannon(j.probs.sum(axis=1)) for j in joints[1:])
        report.add("entropy_identity_gap",
                   abs(shannon(joint.probs) - h_target))
    elif args.kind == "separable":
        dims = _parse_dims(args.dims or "2,2,2")
        if len(dims) != 3:
            raise InvalidStateError("separable needs three dims")
        k = args.random
        rng = np.random.default_rng(args.seed)
        weights = rng.dirichlet(np.ones(k))
        ens = separable_ensemble(
            weights,
            [random_density(dims[0], rng=rng) for _ in range(k)],
            [random_density(dims[1], rng=rng) for _ in range(k)],
            [random_density(dims[2], rng=rng) for _ in range(k)],
        )
        rho12, rho23, out = matched_separable_extension(ens)
        pair = check_compatible(rho12, rho23)
        e12, e23 = _marginal_errors(out, pair)
        report.add("terms", int(k))
        report.add("marginal_error_12", e12)
        report.add("marginal_error_23", e23)
    elif args.kind == "perturb":
        _require(args, "inputs", 3, "perturb needs BASE, RHO12, RHO23 files")
        base = _read_input(args, report, 0, "base")
        rho12 = _read_input(args, report, 1, "rho12")
        rho23 = _read_input(args, report, 2, "rho23")
        pair = check_compatible(rho12, rho23)
        out = perturbation_extension(base, pair)
        e12, e23 = _marginal_errors(out, pair)
        report.add("marginal_error_12", e12)
        report.add("marginal_error_23", e23)
    elif args.kind == "coherent":
        _require(args, "inputs", 2, "coherent needs RHO12 and RHO23 files")
        rho12 = _read_input(args, report, 0, "rho12")
        rho23 = _read_input(args, report, 1, "rho23")
        pair = check_compatible(rho12, rho23)
        res = coherent_lift_extension(pair)
        out = res.state
        report.add("marginal_error_12", res.marginal_error_12)
        report.add("marginal_error_23", res.marginal_error_23)
        report.add("min_symbol_12", res.min_symbol_12)
        report.add("min_symbol_23", res.min_symbol_23)
        report.add("middle_gap", res.middle_gap)
    elif args.kind == "triangle":
        if not args.lambdas or not args.mus:
            raise InvalidStateError("triangle needs --lambdas and --mus")
        lams = _parse_csv_floats(args.lambdas)
        mus = _parse_csv_floats(args.mus)
        out = build_triangle_equality_state(lams, mus)
        s12 = entropy(out)
        s1 = entropy(marginal(out, [0]))
        s2 = entropy(marginal(out, [1]))
        gap = s12 - (s1 - s2)
        report.add("S12", s12)
        report.add("S1", s1)
        report.add("S2", s2)
        report.add("triangle_gap", gap,
                   f"S12 - (S1 - S2) = {gap:.1e} (tol {ENTROPY_EQ_TOL:g})")
    elif args.kind == "gt":
        _require(args, "inputs", 2, "gt needs RHO12 and RHO23 files")
        rho12 = _read_input(args, report, 0, "rho12")
        rho23 = _read_input(args, report, 1, "rho23")
        pair = check_compatible(rho12, rho23)
        r, trace_r = golden_thompson_R(pair)
        out = density(r / trace_r, pair.dims)
        report.add("trace_R", trace_r, f"trace(R) = {trace_r:.9f}")
        e12, e23 = _marginal_errors(out, pair)
        report.add("marginal_error_12", e12)
        report.add("marginal_error_23", e23)
    else:  # pragma: no cover - argparse restricts choices
        raise InvalidStateError(f"unknown kind {args.kind!r}")

    w = np.linalg.eigvalsh(out.mat)
    report.add("eig_min", float(w[0]))
    if args.out:
        write_state(args.out, out)
        report.lines.append(f"state written to {args.out}")
        report.machine["out"] = str(args.out)
    else:
        report.machine["state"] = state_payload(out)
    report.emit(args.json)
    return EXIT_OK


def _require(args, field: str, count: int, message: str) -> None:
    if len(getattr(args, field)) != count:
        raise InvalidStateError(message)


def _read_input(args, report: Report, idx: int, label: str) -> DensityMatrix:
    path = args.inputs[idx]
    rho = read_state(path, tol=args.tol)
    report.add_input(label, path, _file_digest(path))
    return rho


# ---------------------------------------------------------------------------
# parser and dispatch


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage failures exit 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="margex",
                     description="Joint extensions of overlapping quantum "
                                 "marginals: checks, constructions, and a "
                                 "feasibility solver.")
    parser.add_argument("--batch", metavar="FILE",
                        help="run one job per line from FILE")
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--tol", type=float, default=None,
                       help="override the module validation tolerance")
        p.add_argument("--json", action="store_true",
                       help="print the machine-readable report")

    p = sub.add_parser("check", parents=[], help="necessary conditions",
                       description="Compatibility and entropy screening "
                                   "for a marginal pair.")
    p.add_argument("rho12")
    p.add_argument("rho23")
    common(p)

    p = sub.add_parser("entropy", help="entropies of one state")
    p.add_argument("state")
    common(p)

    p = sub.add_parser("solve", help="joint-extension feasibility")
    p.add_argument("rho12", help="rho12 state file, or - for a stdin bundle")
    p.add_argument("rho23", nargs="?", default=None)
    p.add_argument("--out", help="witness output file")
    p.add_argument("--max-iter", type=int, default=5000)
    common(p)

    p = sub.add_parser("counterexample",
                       help="pair with no joint extension")
    p.add_argument("--mu1", type=float, default=0.5)
    p.add_argument("--phi1-angle", type=float, default=math.pi / 4)
    p.add_argument("--skew", type=float, default=0.0)
    p.add_argument("--out", help="output directory for the state files")
    common(p)

    p = sub.add_parser("construct", help="explicit extension constructions")
    p.add_argument("kind", choices=["classical", "chain", "separable",
                                    "perturb", "coherent", "triangle", "gt"])
    p.add_argument("inputs", nargs="*", help="input state files (per kind)")
    p.add_argument("--out", help="output state file")
    p.add_argument("--lambdas", help="triangle: comma list, spectrum on 1'")
    p.add_argument("--mus", help="triangle: comma list, spectrum on 2")
    p.add_argument("--dims", help="separable: comma list d1,d2,d3")
    p.add_argument("--random", type=int, default=3, metavar="K",
                   help="separable: number of product terms")
    p.add_argument("--seed", type=int, default=None)
    common(p)
    return parser


_COMMANDS = {
    "check": cmd_check,
    "entropy": cmd_entropy,
    "solve": cmd_solve,
    "counterexample": cmd_counterexample,
    "construct": cmd_construct,
}


def _run_single(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.batch:
        print("--batch cannot be nested", file=sys.stderr)
        return EXIT_ERROR
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_ERROR
    handler = _COMMANDS[args.command]
    try:
        return handler(args, argv)
    except InvalidStateError as exc:
        print(f"margex {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except MargexError as exc:
        print(f"margex {args.command}: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_MODULE


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args, _ = parser.parse_known_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.batch:
        try:
            lines = Path(args.batch).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            print(f"margex: cannot read batch file: {exc}", file=sys.stderr)
            return EXIT_ERROR
        code = EXIT_OK
        for lineno, line in enumerate(lines, start=1):
            job = line.strip()
            if not job or job.startswith("#"):
                continue
            print(f"# job {lineno}: {job}")
            code = max(code, _run_single(shlex.split(job)))
        return code
    return _run_single(argv)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
