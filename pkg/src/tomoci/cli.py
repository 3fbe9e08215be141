"""Command-line interface: simulate, estimate, and report.

Subcommands
-----------
simulate         draw synthetic counts for a named or file-given subject
estimate         point estimate (with physicality flag) from a counts file
ci               gamma-moment confidence radii for one or more levels
affine-ci        confidence interval for a fidelity or observable functional
mc-compare       bootstrap-vs-gamma CDF table for the error statistic
verify-coverage  empirical coverage of the regions for a built-in subject
bench            wall-clock comparison of the gamma and bootstrap methods
import           convert generic per-circuit count dictionaries to the schema

All numeric output is deterministic for a fixed --seed. Exit codes:
0 success, 1 validation or schema problem, 2 numerical failure; errors
are emitted to stderr as a one-line JSON object.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import affine, schemas, sim
from .bootstrap import BootstrapConfig, bootstrap_xi, empirical_cdf
from .errors import InvalidArgumentError, SchemaError, TomociError
from .linalg import DensityMatrix
from .qpt import (
    ChoiMatrix,
    build_process_design,
    process_linear_inversion,
    process_moments,
)
from .qst import (
    MODE_GAUSSIAN,
    MODE_PAPER,
    build_design,
    confidence_level,
    linear_inversion,
    moments,
    region_from_level,
    region_from_radius,
)

_REPORT_VERSION = "1"


# ---------------------------------------------------------------------------
# serialization helpers


def _matrix_payload(M: np.ndarray) -> dict:
    """Row-major real/imag serialization of a complex matrix."""
    M = np.asarray(M)
    return {
        "real": [[float(v.real) for v in row] for row in M],
        "imag": [[float(v.imag) for v in row] for row in M],
    }


def _load_matrix(path: str) -> np.ndarray:
    """Read a real/imag matrix file written in report serialization."""
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or "real" not in payload:
        raise SchemaError(f"{path} must be an object with a 'real' matrix", "real")
    real = np.asarray(payload["real"], dtype=np.float64)
    if real.ndim != 2 or real.shape[0] != real.shape[1]:
        raise SchemaError("matrix must be square", "real")
    imag = payload.get("imag")
    if imag is None:
        return real.astype(np.complex128)
    imag = np.asarray(imag, dtype=np.float64)
    if imag.shape != real.shape:
        raise SchemaError("imag shape differs from real", "imag")
    return real + 1j * imag


def _write_text(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _emit_json(payload: dict, out: str | None):
    _write_text(json.dumps(payload, indent=2) + "\n", out)


def _csv(rows, header: tuple[str, ...]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


# ---------------------------------------------------------------------------
# subject resolution and model assembly


def _resolve_subject(spec: str, want_channel: bool):
    """A subject by built-in name, or by matrix file for custom subjects."""
    try:
        obj = sim.subject(spec)
    except InvalidArgumentError:
        obj = None
    if obj is not None:
        if want_channel != isinstance(obj, ChoiMatrix):
            kind = "channel" if want_channel else "state"
            raise InvalidArgumentError(f"subject {spec!r} is not a {kind}")
        return obj
    if not os.path.exists(spec):
        raise InvalidArgumentError(
            f"{spec!r} is neither a built-in subject nor a file"
        )
    M = _load_matrix(spec)
    if want_channel:
        d = int(round(np.sqrt(M.shape[0])))
        if d * d != M.shape[0]:
            raise SchemaError("a Choi matrix needs a square-number dimension")
        return ChoiMatrix.from_matrix(M, d, d)
    return DensityMatrix.from_matrix(M)


def _model_of(cf: schemas.CountsFile):
    protocol = schemas.build_protocol(cf)
    if cf.kind == schemas.KIND_QPT:
        return build_process_design(protocol)
    return build_design(protocol)


def _load_counts(path: str):
    cf = schemas.parse_counts(path)
    model = _model_of(cf)
    return cf, model, schemas.frequency_vector(cf, model)


def _estimate_of(cf, model, data):
    if cf.kind == schemas.KIND_QPT:
        return process_linear_inversion(model, data).estimate
    return linear_inversion(model, data)


def _moments_of(cf, model, data, mode: str):
    if cf.kind == schemas.KIND_QPT:
        return process_moments(model, data, mode)
    return moments(model, data, mode)


def _report_head(cf: schemas.CountsFile, estimate) -> dict:
    report = {
        "format_version": _REPORT_VERSION,
        "kind": cf.kind,
        "qubits": cf.qubits,
        "shots_per_block": cf.shots_per_block,
        "estimate": _matrix_payload(estimate.matrix),
        "physical": bool(estimate.physical),
    }
    if cf.kind == schemas.KIND_QPT:
        report["d_in"] = estimate.d_in
        report["d_out"] = estimate.d_out
        report["trace"] = float(np.trace(estimate.matrix).real)
    else:
        report["trace"] = float(np.trace(estimate.matrix).real)
    return report


def _parse_levels(text: str) -> list[float]:
    try:
        levels = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise InvalidArgumentError(f"levels must be numbers, got {text!r}") from None
    if not levels:
        raise InvalidArgumentError("at least one level is required")
    return levels


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_simulate(args) -> int:
    want_channel = args.kind == schemas.KIND_QPT
    spec = args.channel if want_channel else args.state
    if spec is None:
        flag = "--channel" if want_channel else "--state"
        raise InvalidArgumentError(f"{flag} is required for kind {args.kind}")
    if (args.channel is not None) and (args.state is not None):
        raise InvalidArgumentError("give either --state or --channel, not both")
    truth = _resolve_subject(spec, want_channel)
    m = sim.subject_qubits(truth)
    if args.qubits is not None and args.qubits != m:
        raise InvalidArgumentError(
            f"--qubits {args.qubits} contradicts the subject's {m} qubit(s)"
        )
    readout = "mub" if want_channel else args.readout
    protocol = sim.default_protocol(truth, args.shots, readout=readout)
    model, p = sim.model_and_probabilities(truth, protocol)
    data = sim.sample_counts(model, p, sim.derived_stream(args.seed))
    cf = schemas.counts_file(args.kind, m, readout, args.shots, data.counts)
    schemas.write_counts(cf, args.out)
    _emit_json(
        {
            "out": args.out,
            "kind": cf.kind,
            "qubits": cf.qubits,
            "blocks": len(cf.blocks),
            "shots_per_block": cf.shots_per_block,
        },
        None,
    )
    return 0


def _cmd_estimate(args) -> int:
    cf, model, data = _load_counts(args.counts)
    estimate = _estimate_of(cf, model, data)
    _emit_json(_report_head(cf, estimate), args.out)
    return 0


def _cmd_ci(args) -> int:
    cf, model, data = _load_counts(args.counts)
    estimate = _estimate_of(cf, model, data)
    est = _moments_of(cf, model, data, args.mode)
    report = _report_head(cf, estimate)
    report["moments"] = {"mode": est.mode, "mean": est.mu, "var": est.var}
    regions = []
    if args.radius is not None:
        if args.radius == 0.0:
            level = 0.0
        else:
            level = confidence_level(est, model.dim, args.radius)
        regions.append({"level": level, "radius": float(args.radius)})
    else:
        for level in _parse_levels(args.level):
            region = region_from_level(estimate, est, level)
            regions.append({"level": region.level, "radius": region.radius})
    report["regions"] = regions
    _emit_json(report, args.out)
    return 0


def _parse_functional(spec: str, cf: schemas.CountsFile) -> affine.AffineFunctional:
    name, sep, rest = spec.partition(":")
    if not sep or not rest:
        raise InvalidArgumentError(
            "functional must look like fidelity:<target> or observable:<file>"
        )
    if name == "fidelity":
        target = _resolve_subject(rest, want_channel=cf.kind == schemas.KIND_QPT)
        return affine.fidelity_functional(target)
    if name == "observable":
        if cf.kind == schemas.KIND_QPT:
            raise InvalidArgumentError(
                "observable functionals apply to state tomography only"
            )
        return affine.observable_functional(_load_matrix(rest))
    raise InvalidArgumentError(f"unknown functional kind {name!r}")


def _cmd_affine_ci(args) -> int:
    cf, model, data = _load_counts(args.counts)
    estimate = _estimate_of(cf, model, data)
    fn = _parse_functional(args.functional, cf)
    est = _moments_of(cf, model, data, args.mode)
    region = region_from_level(estimate, est, args.level)
    interval = affine.affine_interval(fn, region, clamp=args.clamp)
    report = _report_head(cf, estimate)
    report["moments"] = {"mode": est.mode, "mean": est.mu, "var": est.var}
    report["affine"] = [
        {
            "label": fn.label,
            "value": fn.value(estimate),
            "lo": interval.lo,
            "hi": interval.hi,
            "level": interval.level,
            "clamped": interval.clamped,
        }
    ]
    _emit_json(report, args.out)
    return 0


def _cmd_mc_compare(args) -> int:
    cf, model, data = _load_counts(args.counts)
    est = _moments_of(cf, model, data, args.mode)
    dist = bootstrap_xi(
        model, data, BootstrapConfig(samples=args.samples, seed=args.seed)
    )
    d = model.dim
    rows = []
    for xi in dist.samples:
        delta = float(np.sqrt(d * xi / 2.0))
        rows.append(
            (delta, confidence_level(est, d, delta), empirical_cdf(dist, xi))
        )
    _write_text(_csv(rows, ("delta", "gamma_cdf", "mc_cdf")), args.out)
    return 0


def _cmd_verify_coverage(args) -> int:
    truth = sim.subject(args.subject)
    protocol = sim.default_protocol(truth, args.shots)
    report = sim.coverage_experiment(
        truth,
        protocol,
        _parse_levels(args.levels),
        args.reps,
        mode=args.mode,
        seed=args.seed,
        label=args.subject,
    )
    rows = [
        (
            report.subject,
            level,
            f_in,
            sim.binomial_spread(level, report.reps),
            report.reps,
            report.shots,
            report.mode,
        )
        for level, f_in in zip(report.levels, report.f_in)
    ]
    header = ("subject", "level", "f_in", "spread", "reps", "shots", "mode")
    _write_text(_csv(rows, header), args.out)
    return 0


def _cmd_bench(args) -> int:
    truth = sim.subject(args.subject)
    protocol = sim.default_protocol(truth, args.shots)
    prof = sim.profile_methods(
        truth,
        protocol,
        bootstrap_samples=args.samples,
        seed=args.seed,
        label=args.subject,
    )
    _emit_json(
        {
            "subject": prof.subject,
            "shots_per_block": prof.shots,
            "bootstrap_samples": prof.bootstrap_samples,
            "gamma_seconds": prof.gamma_seconds,
            "bootstrap_seconds": prof.bootstrap_seconds,
            "speedup": prof.speedup,
        },
        args.out,
    )
    return 0


def _cmd_import(args) -> int:
    if args.source != "generic-counts":
        raise InvalidArgumentError(
            f"unsupported import source {args.source!r}; only generic-counts"
        )
    try:
        with open(args.input, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read {args.input}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{args.input} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise SchemaError("generic counts must be an object of label -> counts")
    keys = schemas.outcome_keys(args.qubits, args.readout)
    expected = schemas.expected_block_keys(args.kind, args.qubits, args.readout)
    stacked = []
    shots = None
    for idx, word in expected:
        label = word if idx is None else f"{idx}:{word}"
        if label not in payload:
            raise SchemaError(f"missing circuit {label!r}", "label")
        rec = payload[label]
        if not isinstance(rec, dict):
            raise SchemaError("circuit counts must be an object", label)
        extra = sorted(set(rec) - set(keys))
        if extra:
            raise SchemaError(f"unknown outcome keys {extra[:4]}", label)
        row = []
        for k in keys:
            c = rec.get(k, 0)  # device exports omit unseen outcomes
            if not isinstance(c, int) or isinstance(c, bool) or c < 0:
                raise SchemaError(f"outcome {k!r} is not a count", label)
            row.append(c)
        total = sum(row)
        if shots is None:
            shots = total
        elif total != shots:
            raise SchemaError(
                f"circuit {label!r} has {total} shots, others have {shots}", label
            )
        stacked.extend(row)
    cf = schemas.counts_file(
        args.kind, args.qubits, args.readout, shots, np.array(stacked)
    )
    schemas.write_counts(cf, args.out)
    _emit_json({"out": args.out, "blocks": len(cf.blocks), "shots_per_block": shots}, None)
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def _add_mode(p: argparse.ArgumentParser):
    p.add_argument(
        "--mode",
        choices=[MODE_GAUSSIAN, MODE_PAPER],
        default=MODE_GAUSSIAN,
        help="moment estimator used for the gamma fit",
    )


def _add_out(p: argparse.ArgumentParser, required: bool = False):
    p.add_argument(
        "--out",
        required=required,
        default=None,
        help="output path" + ("" if required else " (default: stdout)"),
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tomoci",
        description="Quantum state/process tomography with gamma-moment "
        "confidence regions.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("simulate", help="draw synthetic counts for a subject")
    p.add_argument("--kind", choices=[schemas.KIND_QST, schemas.KIND_QPT], required=True)
    p.add_argument("--state", help="state subject name or matrix file (qst)")
    p.add_argument("--channel", help="channel subject name or Choi file (qpt)")
    p.add_argument("--readout", choices=["mub", "sic"], default="mub")
    p.add_argument("--qubits", type=int, default=None, help="cross-check only")
    p.add_argument("--shots", type=int, required=True, help="shots per block")
    p.add_argument("--seed", type=int, default=0)
    _add_out(p, required=True)
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("estimate", help="point estimate from a counts file")
    p.add_argument("--counts", required=True)
    _add_out(p)
    p.set_defaults(handler=_cmd_estimate)

    p = sub.add_parser("ci", help="confidence radii at one or more levels")
    p.add_argument("--counts", required=True)
    p.add_argument("--level", default="0.95", help="comma-separated levels")
    p.add_argument(
        "--radius", type=float, default=None, help="report the level of this radius"
    )
    _add_mode(p)
    _add_out(p)
    p.set_defaults(handler=_cmd_ci)

    p = sub.add_parser("affine-ci", help="interval for an affine functional")
    p.add_argument("--counts", required=True)
    p.add_argument(
        "--functional",
        required=True,
        help="fidelity:<subject|file> or observable:<matrix file>",
    )
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--clamp", action="store_true", help="clip the interval to [0,1]")
    _add_mode(p)
    _add_out(p)
    p.set_defaults(handler=_cmd_affine_ci)

    p = sub.add_parser("mc-compare", help="bootstrap vs gamma CDF table")
    p.add_argument("--counts", required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    _add_mode(p)
    _add_out(p)
    p.set_defaults(handler=_cmd_mc_compare)

    p = sub.add_parser("verify-coverage", help="empirical coverage experiment")
    p.add_argument("--subject", required=True)
    p.add_argument("--levels", required=True, help="comma-separated levels")
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_mode(p)
    _add_out(p)
    p.set_defaults(handler=_cmd_verify_coverage)

    p = sub.add_parser("bench", help="time gamma vs bootstrap on one dataset")
    p.add_argument("--subject", required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--shots", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    _add_out(p)
    p.set_defaults(handler=_cmd_bench)

    p = sub.add_parser(
        "import", help="convert generic per-circuit counts to the schema"
    )
    p.add_argument(
        "--from",
        dest="source",
        required=True,
        help="source format; only generic-counts is supported",
    )
    p.add_argument("--input", required=True, help="JSON of label -> outcome counts")
    p.add_argument("--kind", choices=[schemas.KIND_QST, schemas.KIND_QPT], required=True)
    p.add_argument("--qubits", type=int, required=True)
    p.add_argument("--readout", choices=["mub", "sic"], default="mub")
    _add_out(p, required=True)
    p.set_defaults(handler=_cmd_import)

    return parser


def _emit_error(exc: TomociError):
    payload = {
        "error": {
            "type": type(exc).__name__,
            "message": str(exc),
        }
    }
    field = getattr(exc, "field", None)
    if field is not None:
        payload["error"]["field"] = field
    sys.stderr.write(json.dumps(payload) + "\n")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; map those onto the
        # validation exit code and let --help exit cleanly
        return 0 if exc.code in (0, None) else 1
    if getattr(args, "handler", None) is None:
        parser.print_help()
        return 1
    try:
        return args.handler(args)
    except TomociError as exc:
        _emit_error(exc)
        return exc.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
