"""Command-line interface.

Subcommands:

    estimate          exponent estimates (with CIs) from a text or counts file
    simulate          draw an occupancy sample from a zeta law
    study-normality   Monte Carlo check of the estimators' normal limits
    study-covariance  Monte Carlo check of the limiting covariance function
    eval-asymptotics  tabulate limiting variances and covariance values

All numeric output is printed with 10 significant digits so runs with the
same seed are byte-identical; timestamps appear only in the sidecar
manifest written next to each output file.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from datetime import datetime, timezone

from . import __version__
from .errors import AmbiguousRootError, UsageError, ZipfestError
from .estimators import (ImplicitSolver, log_ratio_estimate, ratio_estimate_k,
                         ratio_estimate_r1)
from .ingest import load_counts, to_occupancy, tokenize_file
from .law import make_zipf_law, zeta_normalization
from .montecarlo import (ExperimentConfig, covariance_study, normality_study,
                         remainder_study)
from .occupancy import DEFAULT_K_MAX
from .sampler import (SeedSpec, read_counts_csv, sample_fixed,
                      sample_poissonized, write_counts_csv)
from . import asymptotics

ALL_ESTIMATORS = ("implicit-r", "implicit-u", "implicit-rk",
                  "ratio-r1", "ratio-k", "log-ratio")


# ----------------------------------------------------------------------
# deterministic numeric formatting
# ----------------------------------------------------------------------

def _fmt(value) -> str:
    """10-significant-digit literal for floats; plain repr otherwise."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if value != value:
            return "NaN"
        text = f"{value:.10g}"
        return text
    return repr(value) if not isinstance(value, (int, str)) else None


def _json_write(obj, indent=0) -> str:
    pad = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, float):
        return _fmt(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        inner = ",\n".join("  " * (indent + 1) + _json_write(v, indent + 1) for v in obj)
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for key in sorted(obj):
            items.append("  " * (indent + 1) + json.dumps(str(key)) + ": "
                         + _json_write(obj[key], indent + 1))
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _csv_text(fieldnames, rows) -> str:
    lines = [",".join(fieldnames)]
    for row in rows:
        cells = []
        for name in fieldnames:
            value = row.get(name, "")
            if isinstance(value, float):
                cells.append(_fmt(value))
            elif value is None:
                cells.append("")
            else:
                cells.append(str(value))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_manifest(output_path, command: str, config: dict, inputs=()) -> None:
    if output_path in (None, "-"):
        return
    manifest = {
        "command": command,
        "config": config,
        "config_hash": hashlib.sha256(
            json.dumps(config, sort_keys=True, default=str).encode()).hexdigest(),
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "inputs": {str(p): _sha256_file(p) for p in inputs},
        "package": f"zipfest {__version__}",
    }
    with open(str(output_path) + ".manifest.json", "w", encoding="utf-8") as fh:
        fh.write(_json_write(manifest) + "\n")


# ----------------------------------------------------------------------
# shared argument plumbing
# ----------------------------------------------------------------------

def _apply_config_file(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    """key=value lines; command-line flags override file values."""
    if not getattr(args, "config", None):
        return
    overridden = {a.dest for a in parser._actions}
    explicit = set()
    for token in sys.argv:
        if token.startswith("--"):
            explicit.add(token[2:].split("=")[0].replace("-", "_"))
    with open(args.config, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{args.config}:{line_no}: expected key=value")
            key, _, value = line.partition("=")
            dest = key.strip().replace("-", "_")
            if dest not in overridden:
                raise UsageError(f"{args.config}:{line_no}: unknown key {key.strip()!r}")
            if dest in explicit:
                continue
            current = getattr(args, dest, None)
            if isinstance(current, bool):
                setattr(args, dest, value.strip().lower() in ("1", "true", "yes"))
            elif isinstance(current, int) and not isinstance(current, bool):
                setattr(args, dest, int(value))
            elif isinstance(current, float):
                setattr(args, dest, float(value))
            else:
                setattr(args, dest, value.strip())


def _parse_estimators(spec: str) -> list[str]:
    tags = [t.strip() for t in spec.split(",") if t.strip()]
    if not tags:
        raise UsageError("empty estimator list")
    if tags == ["all"]:
        return list(ALL_ESTIMATORS)
    for tag in tags:
        if tag not in ALL_ESTIMATORS:
            raise UsageError(f"unknown estimator {tag!r}; choose from "
                             f"{', '.join(ALL_ESTIMATORS)} or 'all'")
    return tags


def _parse_k_list(spec: str) -> list[int]:
    try:
        ks = [int(t) for t in spec.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad k list {spec!r}: {exc}")
    if not ks or any(k < 1 for k in ks):
        raise UsageError(f"k list must contain positive integers, got {spec!r}")
    return ks


def _parse_grid(spec: str) -> tuple[float, ...]:
    try:
        grid = tuple(float(t) for t in spec.split(",") if t.strip())
    except ValueError as exc:
        raise UsageError(f"bad grid {spec!r}: {exc}")
    return grid


def _build_c_model(spec: str | None):
    if spec is None:
        return None
    if spec == "zeta":
        return zeta_normalization
    if spec.startswith("const:"):
        value = float(spec.split(":", 1)[1])
        if value <= 0:
            raise UsageError("const c model must be positive")
        return lambda theta: value
    raise UsageError(f"unknown c model {spec!r}; use 'zeta' or 'const:<value>'")


# ----------------------------------------------------------------------
# estimate
# ----------------------------------------------------------------------

def _cmd_estimate(args) -> int:
    if args.input_format == "text":
        corpus = tokenize_file(args.input)
        occupancy = to_occupancy(corpus)
    elif args.input_format == "tokens":
        occupancy = to_occupancy(load_counts(args.input))
    elif args.input_format == "occupancy":
        occupancy = read_counts_csv(args.input)
    else:
        raise UsageError(f"unknown input format {args.input_format!r}")

    k_values = _parse_k_list(args.k)
    k_max = max(DEFAULT_K_MAX, max(k_values) + 1)
    snapshot = occupancy.snapshot(k_max=k_max)
    n = int(occupancy.total)
    tags = _parse_estimators(args.estimators)
    c_model = _build_c_model(args.c_model)
    if any(t.startswith("implicit") for t in tags) and c_model is None:
        raise UsageError("implicit estimators need a known normalization: pass --c-model")

    results = []
    baseline = None
    for tag in tags:
        if tag == "log-ratio":
            results.append(log_ratio_estimate(snapshot, level=args.level))
        elif tag == "ratio-r1":
            results.append(ratio_estimate_r1(snapshot, level=args.level))
        elif tag == "ratio-k":
            for k in k_values:
                results.append(ratio_estimate_k(snapshot, k, level=args.level))
        else:
            which = {"implicit-r": "r", "implicit-u": "u", "implicit-rk": "rk"}[tag]
            stats = {"r": [(None, float(snapshot.r))],
                     "u": [(None, float(snapshot.u))],
                     "rk": [(k, float(snapshot.exact_count(k))) for k in k_values]}[which]
            for k, stat_value in stats:
                solver = ImplicitSolver(which, n, c_model, k=k)
                try:
                    results.append(solver.solve(stat_value, level=args.level))
                except AmbiguousRootError as exc:
                    if baseline is None:
                        baseline = log_ratio_estimate(snapshot).theta_hat
                    root = min(exc.roots, key=lambda r: abs(r - baseline))
                    results.append(solver.result_for_root(root, stat_value,
                                                          level=args.level))

    payload = {"n": n, "estimates": [r.to_json_dict() for r in results]}
    if args.format == "json":
        _emit(_json_write(payload) + "\n", args.output)
    else:
        rows = [{**r.to_json_dict(), "flags": ";".join(r.flags)} for r in results]
        _emit(_csv_text(["estimator", "theta_hat", "stderr", "ci_lo", "ci_hi",
                         "level", "flags"], rows), args.output)
    _write_manifest(args.output, "estimate", _echo_args(args), inputs=[args.input])
    return 0


# ----------------------------------------------------------------------
# simulate
# ----------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    law = make_zipf_law(args.theta, i0=args.i0, tail_epsilon=args.tail_epsilon)
    seed = SeedSpec(args.seed, args.stream)
    if args.mode == "fixed":
        if args.n < 1:
            raise UsageError("--n must be >= 1 for fixed mode")
        counts = sample_fixed(law, args.n, seed)
    else:
        horizon = args.t if args.t is not None else float(args.n)
        counts = sample_poissonized(law, horizon, seed)
    write_counts_csv(counts, args.output)
    if args.snapshot:
        snap = counts.snapshot(k_max=args.k_max)
        _emit(_json_write(snap.to_json_dict()) + "\n", args.snapshot)
    _write_manifest(args.output, "simulate", _echo_args(args))
    return 0


# ----------------------------------------------------------------------
# studies
# ----------------------------------------------------------------------

def _study_config(args, estimators=None) -> ExperimentConfig:
    return ExperimentConfig(
        theta=args.theta, n=args.n, m=args.m, i0=args.i0,
        estimators=tuple(estimators) if estimators is not None else NORMALITY_DEFAULT,
        k_values=tuple(_parse_k_list(args.k)) if hasattr(args, "k") else (1,),
        grid=_parse_grid(args.grid) if hasattr(args, "grid") else (0.5, 1.0),
        nu=getattr(args, "nu", 1), seed=args.seed, level=getattr(args, "level", 0.95),
        k_max=getattr(args, "k_max", DEFAULT_K_MAX),
        tail_epsilon=args.tail_epsilon,
        variance_tolerance=getattr(args, "variance_tolerance", 0.2),
        workers=args.workers)


NORMALITY_DEFAULT = ("implicit-r", "implicit-u", "implicit-rk", "ratio-r1", "ratio-k")


def _cmd_study_normality(args) -> int:
    estimators = _parse_estimators(args.estimators)
    config = _study_config(args, estimators=estimators)
    report = normality_study(config)
    if args.format == "json":
        _emit(_json_write(report.to_json_dict()) + "\n", args.output)
    else:
        fields = ["estimator", "m_included", "m_excluded", "mean", "variance",
                  "skewness", "excess_kurtosis", "ks_distance", "ks_pvalue",
                  "target_variance", "variance_ratio", "coverage"]
        _emit(_csv_text(fields, [r.to_json_dict() for r in report.rows]), args.output)
    _write_manifest(args.output, "study-normality", report.config)
    return 0


def _cmd_study_covariance(args) -> int:
    config = _study_config(args, estimators=NORMALITY_DEFAULT)
    table = covariance_study(config)
    if args.format == "json":
        _emit(_json_write(table.to_json_dict()) + "\n", args.output)
    else:
        fields = ["i", "j", "tau", "t", "empirical", "theoretical", "std_error",
                  "z_score"]
        _emit(_csv_text(fields, [r.to_json_dict() for r in table.rows]), args.output)
    _write_manifest(args.output, "study-covariance", table.config)
    return 0


# ----------------------------------------------------------------------
# eval-asymptotics
# ----------------------------------------------------------------------

def _parse_tau_t(spec: str) -> list[tuple[float, float]]:
    pairs = []
    for chunk in spec.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise UsageError(f"bad tau:t pair {chunk!r}")
        tau, _, t = chunk.partition(":")
        pairs.append((float(tau), float(t)))
    return pairs


def _cmd_eval_asymptotics(args) -> int:
    thetas = [float(t) for t in args.theta.split(",") if t.strip()]
    k_values = _parse_k_list(args.k)
    pairs = _parse_tau_t(args.tau_t) if args.tau_t else []
    rows = []
    for theta in thetas:
        rows.append({"kind": "ratio-r1-variance", "theta": theta, "k": None,
                     "i": None, "j": None, "tau": None, "t": None,
                     "value": asymptotics.ratio_r1_variance(theta)})
        for k in k_values:
            rows.append({"kind": "ratio-k-variance", "theta": theta, "k": k,
                         "i": None, "j": None, "tau": None, "t": None,
                         "value": asymptotics.ratio_k_variance(theta, k)})
        for which in ("r", "u"):
            rows.append({"kind": f"implicit-variance-{which}", "theta": theta,
                         "k": None, "i": None, "j": None, "tau": None, "t": None,
                         "value": asymptotics.implicit_variance(theta, which)})
        for k in k_values:
            rows.append({"kind": "implicit-variance-rk", "theta": theta, "k": k,
                         "i": None, "j": None, "tau": None, "t": None,
                         "value": asymptotics.implicit_variance(theta, "rk", k)})
        if pairs:
            spec = asymptotics.CovarianceSpec(theta, nu=args.nu)
            for i in range(args.nu + 1):
                for j in range(args.nu + 1):
                    for tau, t in pairs:
                        rows.append({"kind": "cov", "theta": theta, "k": None,
                                     "i": i, "j": j, "tau": tau, "t": t,
                                     "value": spec.cov(i, j, tau, t)})
    if args.format == "json":
        _emit(_json_write(rows) + "\n", args.output)
    else:
        _emit(_csv_text(["kind", "theta", "k", "i", "j", "tau", "t", "value"], rows),
              args.output)
    _write_manifest(args.output, "eval-asymptotics", _echo_args(args))
    return 0


def _echo_args(args) -> dict:
    skip = {"func", "config"}
    return {k: v for k, v in sorted(vars(args).items())
            if k not in skip and not k.startswith("_")}


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zipfest",
        description="Estimate power-law exponents from occupancy statistics "
                    "and verify the estimators' limit theorems by simulation.")
    parser.add_argument("--version", action="version", version=f"zipfest {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    def add_common_law(p):
        p.add_argument("--theta", type=float, required=True,
                       help="power-law exponent in (0,1) (dimensionless)")
        p.add_argument("--i0", type=int, default=0,
                       help="index shift of the zeta law (urns)")
        p.add_argument("--tail-epsilon", type=float, default=1e-12,
                       help="probability mass allowed beyond the support cutoff")

    p = sub.add_parser("estimate", formatter_class=fmt,
                       help="estimate the exponent from a text or counts file")
    p.add_argument("--input", required=True, help="input file path")
    p.add_argument("--input-format", choices=("text", "tokens", "occupancy"),
                   default="text",
                   help="text: raw UTF-8; tokens: token,count CSV; "
                        "occupancy: urn_index,count CSV")
    p.add_argument("--estimators", default="ratio-r1,ratio-k,log-ratio",
                   help="comma list or 'all' "
                        f"(choices: {', '.join(ALL_ESTIMATORS)})")
    p.add_argument("--k", default="1", help="comma list of k values (ball counts)")
    p.add_argument("--c-model", default=None,
                   help="normalization c(theta) for implicit estimators: "
                        "'zeta' or 'const:<value>'")
    p.add_argument("--level", type=float, default=0.95,
                   help="confidence level in (0,1)")
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="output format")
    p.add_argument("--output", default="-", help="output path ('-' = stdout)")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("simulate", formatter_class=fmt,
                       help="draw an occupancy sample from a zeta law")
    add_common_law(p)
    p.add_argument("--n", type=int, default=10000, help="number of balls")
    p.add_argument("--t", type=float, default=None,
                   help="poissonized horizon (balls; defaults to --n)")
    p.add_argument("--mode", choices=("fixed", "poisson"), default="fixed",
                   help="fixed ball count or poissonized horizon")
    p.add_argument("--seed", type=int, default=0, help="master seed (64-bit)")
    p.add_argument("--stream", type=int, default=0, help="stream index")
    p.add_argument("--k-max", type=int, default=DEFAULT_K_MAX,
                   help="largest exact count tracked in the snapshot")
    p.add_argument("--output", required=True, help="counts CSV path")
    p.add_argument("--snapshot", default=None,
                   help="optional JSON snapshot path")
    p.set_defaults(func=_cmd_simulate)

    def add_study_common(p):
        add_common_law(p)
        p.add_argument("--n", type=int, default=100000, help="balls per replication")
        p.add_argument("--m", type=int, default=2000, help="replications (>= 100)")
        p.add_argument("--seed", type=int, default=0, help="master seed (64-bit)")
        p.add_argument("--workers", type=int, default=None,
                       help="parallel workers (default: ZIPFEST_WORKERS env or 1)")
        p.add_argument("--format", choices=("json", "csv"), default="json",
                       help="output format")
        p.add_argument("--output", default="-", help="output path ('-' = stdout)")
        p.add_argument("--config", default=None,
                       help="key=value config file; flags override file values")

    p = sub.add_parser("study-normality", formatter_class=fmt,
                       help="Monte Carlo normality/variance check of the estimators")
    add_study_common(p)
    p.add_argument("--estimators", default="implicit-r,implicit-u,implicit-rk,ratio-r1,ratio-k",
                   help="comma list (log-ratio not allowed here)")
    p.add_argument("--k", default="1", help="comma list of k values")
    p.add_argument("--level", type=float, default=0.95, help="CI level in (0,1)")
    p.add_argument("--variance-tolerance", type=float, default=0.2,
                   help="relative band around each variance target")
    p.set_defaults(func=_cmd_study_normality)

    p = sub.add_parser("study-covariance", formatter_class=fmt,
                       help="Monte Carlo check of the limiting covariance function")
    add_study_common(p)
    p.add_argument("--grid", default="0.5,1.0",
                   help="comma list of times in (0,1], strictly increasing")
    p.add_argument("--nu", type=int, default=1,
                   help="number of exact-count components (indices 1..nu)")
    p.set_defaults(func=_cmd_study_covariance)

    p = sub.add_parser("eval-asymptotics", formatter_class=fmt,
                       help="tabulate limiting variances and covariance values")
    p.add_argument("--theta", required=True,
                   help="comma list of exponents in (0,1)")
    p.add_argument("--k", default="1,2,3", help="comma list of k values")
    p.add_argument("--tau-t", default="",
                   help="comma list of tau:t pairs for covariance rows "
                        "(e.g. '0.5:1.0,1.0:1.0')")
    p.add_argument("--nu", type=int, default=1,
                   help="covariance components 0..nu")
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="output format")
    p.add_argument("--output", default="-", help="output path ('-' = stdout)")
    p.set_defaults(func=_cmd_eval_asymptotics)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args, parser)
        return args.func(args)
    except UsageError as exc:
        print(f"zipfest: usage error: {exc}", file=sys.stderr)
        return 2
    except ZipfestError as exc:
        print(f"zipfest: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"zipfest: i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
