"""
Command-line front end.

Subcommands and their CSV schemas (header row always written):

  clone         field,value
  sweep-phases  phi,f_a,f_b   (24 rows, then a "mean" footer row)
  eavesdrop     theta,state,basis,s_bob,s_eve,qber,i_ab,i_ae
  bb84          always JSON: ProtocolReport fields
  compile       sequence listing (PULSE/DELAY/GRAD lines); JSON report on stdout
  spectrum      frequency_hz,real,imag; integral summary on stderr

Numbers are written in 9-significant-digit scientific notation.
Exit codes: 0 success, 2 usage error, 1 internal failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict

import numpy as np

from . import bb84, cloner, nmr, qcore

DEFAULT_THETA = cloner.OPTIMAL_THETA


def fmt(x: float) -> str:
    return f"{x + 0.0:.8e}"


def _jsonable(obj):
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2) + "\n"


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def emit(text: str, out: str | None):
    """Write to ``out`` atomically, or to stdout."""
    if out is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qpccm-")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _relaxed_clone(phi: float, theta: float, sys_: nmr.SpinSystem, seq: nmr.PulseSequence):
    ket = qcore.equatorial_ket(cloner.canonical_phase(phi))
    rho_in = qcore.tensor(np.outer(ket, ket.conj()), np.diag([1, 0]))
    rho = nmr.apply_frames(nmr.simulate_relaxed(rho_in, seq, sys_), seq)
    rho_a = qcore.partial_trace(rho, "a")
    rho_b = qcore.partial_trace(rho, "b")
    return rho, qcore.fidelity(ket, rho_a), qcore.fidelity(ket, rho_b)


def cmd_clone(args) -> str:
    theta = args.theta
    res = cloner.clone(args.phi, theta)
    fields = {"phi": args.phi, "theta": theta, "f_a": res.f_a, "f_b": res.f_b}
    for name, rho in (("a", res.rho_a), ("b", res.rho_b)):
        vec = qcore.bloch(rho)
        fields.update({f"bloch_{name}_x": vec.rx, f"bloch_{name}_y": vec.ry, f"bloch_{name}_z": vec.rz})
        for i in range(2):
            for j in range(2):
                fields[f"rho_{name}_{i}{j}_re"] = float(rho[i, j].real)
                fields[f"rho_{name}_{i}{j}_im"] = float(rho[i, j].imag)
    if args.relaxed:
        sys_ = nmr.SpinSystem()
        seq = nmr.compile_clone(theta, sys_)
        _, fa, fb = _relaxed_clone(args.phi, theta, sys_, seq)
        fields.update({"f_a_relaxed": fa, "f_b_relaxed": fb, "duration": seq.total_duration})
    if args.format == "json":
        return dumps(fields)
    return csv_text(("field", "value"), fields.items())


def cmd_sweep_phases(args) -> str:
    sys_ = nmr.SpinSystem()
    seq = nmr.compile_clone(args.theta, sys_) if args.relaxed else None
    rows = []
    for phi in cloner.phase_grid(args.grid_points):
        if seq is None:
            res = cloner.clone(phi, args.theta)
            rows.append((phi, res.f_a, res.f_b))
        else:
            _, fa, fb = _relaxed_clone(phi, args.theta, sys_, seq)
            rows.append((phi, fa, fb))
    mean_a = math.fsum(r[1] for r in rows) / len(rows)
    mean_b = math.fsum(r[2] for r in rows) / len(rows)
    if args.format == "json":
        return dumps(
            {
                "theta": args.theta,
                "relaxed": args.relaxed,
                "rows": [dict(zip(("phi", "f_a", "f_b"), r)) for r in rows],
                "mean_f_a": mean_a,
                "mean_f_b": mean_b,
            }
        )
    return csv_text(("phi", "f_a", "f_b"), rows + [("mean", mean_a, mean_b)])


def cmd_eavesdrop(args) -> str:
    rows = bb84.curves(bb84.theta_grid(args.grid_points))
    if args.format == "json":
        return dumps([asdict(r) for r in rows])
    return csv_text(bb84.CURVE_COLUMNS, [tuple(asdict(r).values()) for r in rows])


def cmd_bb84(args) -> str:
    report = bb84.run_protocol(args.n_pulses, bb84.AttackConfig(args.theta), args.seed, args.workers)
    return dumps(report.to_dict())


def cmd_compile(args) -> tuple[str, str]:
    sys_ = nmr.SpinSystem()
    seq = nmr.compile_clone(args.theta, sys_)
    report = nmr.compilation_report(seq, args.theta, sys_)
    return nmr.to_listing(seq), dumps(asdict(report))


def cmd_spectrum(args) -> tuple[str, str]:
    sys_ = nmr.SpinSystem()
    ket = qcore.equatorial_ket(cloner.canonical_phase(args.phi))
    rho_in = qcore.tensor(np.outer(ket, ket.conj()), np.diag([1, 0]))
    if args.relaxed:
        seq = nmr.compile_clone(args.theta, sys_)
        rho_out, _, _ = _relaxed_clone(args.phi, args.theta, sys_, seq)
    else:
        rho_out = cloner.clone(args.phi, args.theta).rho_ab
    acq = nmr.AcquisitionConfig(args.n_samples, args.dwell, nmr.receiver_phase(rho_in, "a"))
    spec = nmr.synthesize_spectrum(rho_out, args.spin, sys_, acq)
    ref = nmr.synthesize_spectrum(rho_in, "a", sys_, acq)
    r = spec.multiplet_integral / ref.multiplet_integral
    summary = {
        "spin": args.spin,
        "multiplet_integral": spec.multiplet_integral,
        "reference_integral": ref.multiplet_integral,
        "r_prime": r,
        "fidelity": (1 + r) / 2,
    }
    if args.format == "json":
        summary["frequency_hz"] = spec.frequencies.tolist()
        summary["real"] = spec.amplitudes.real.tolist()
        summary["imag"] = spec.amplitudes.imag.tolist()
        return dumps(summary), ""
    rows = zip(spec.frequencies.tolist(), spec.amplitudes.real.tolist(), spec.amplitudes.imag.tolist())
    text = csv_text(("frequency_hz", "real", "imag"), rows)
    return text, "".join(f"{k}={fmt(v) if isinstance(v, float) else v}\n" for k, v in summary.items())


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _finite(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"must be finite: {text!r}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--relaxed", action="store_true", help="include T1/T2 relaxation")

    angle = argparse.ArgumentParser(add_help=False)
    group = angle.add_mutually_exclusive_group()
    group.add_argument("--theta", type=_finite, help="cloner angle in radians (default pi/4)")
    group.add_argument("--theta-deg", type=_finite, help="cloner angle in degrees")

    parser = _Parser(prog="qpccm", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("clone", parents=[common, angle], help="clone one equatorial state")
    p.add_argument("--phi", type=_finite, default=0.0, help="input phase in radians")
    p.set_defaults(func=cmd_clone)

    p = sub.add_parser(
        "sweep-phases", parents=[common, angle], help="fidelities over equally spaced phases (CSV: phi,f_a,f_b)"
    )
    p.add_argument("--grid-points", type=_positive_int, default=24)
    p.set_defaults(func=cmd_sweep_phases)

    p = sub.add_parser(
        "eavesdrop",
        parents=[common],
        help="signal and information curves (CSV: theta,state,basis,s_bob,s_eve,qber,i_ab,i_ae)",
    )
    p.add_argument("--grid-points", type=_positive_int, default=24)
    p.set_defaults(func=cmd_eavesdrop)

    p = sub.add_parser("bb84", parents=[common, angle], help="Monte Carlo protocol run (JSON)")
    p.add_argument("--n-pulses", type=_positive_int, default=200_000)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.set_defaults(func=cmd_bb84)

    p = sub.add_parser("compile", parents=[common, angle], help="pulse sequence listing and report")
    p.add_argument("--report", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser(
        "spectrum", parents=[common, angle], help="readout spectrum of one clone (CSV: frequency_hz,real,imag)"
    )
    p.add_argument("--phi", type=_finite, default=0.0)
    p.add_argument("--spin", choices=("a", "b"), default="a")
    p.add_argument("--n-samples", type=_positive_int, default=8192)
    p.add_argument("--dwell", type=_finite, default=2e-4)
    p.set_defaults(func=cmd_spectrum)
    return parser


def _validate(parser, args):
    if hasattr(args, "theta"):
        if args.theta_deg is not None:
            args.theta = math.radians(args.theta_deg)
        elif args.theta is None:
            args.theta = DEFAULT_THETA
    if args.command == "eavesdrop" and args.grid_points < 2:
        parser.error("--grid-points must be at least 2")
    if args.command == "spectrum":
        j = nmr.SpinSystem().j_coupling
        try:
            acq = nmr.AcquisitionConfig(args.n_samples, args.dwell)
            if j < 2 * acq.resolution or j * args.dwell >= 1:
                raise ValueError("acquisition cannot resolve the J multiplet")
        except ValueError as exc:
            parser.error(str(exc))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate(parser, args)
    try:
        result = args.func(args)
    except (AssertionError, ValueError, ArithmeticError) as exc:
        print(f"qpccm: internal error: {exc}", file=sys.stderr)
        return 1
    if isinstance(result, tuple):
        main_text, side = result
        emit(main_text, args.out)
        if args.command == "compile":
            if args.report:
                emit(side, args.report)
            else:
                sys.stdout.write(side)
        elif side:
            sys.stderr.write(side)
    else:
        emit(result, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
