"""Batch command line: writes measure tables, filter grids, schedules, spectra and reports.

Outputs are deterministic: fixed row order, floats written with 17
significant digits, files written to a temporary path and renamed into
place only after the command succeeds.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import channels, charfunc, ddseq, engineering, fockspace, twirl
from .errors import ConvergenceError, GKPDDError, OutputError, PreconditionError


@dataclass
class RunConfig:
    cutoff: int = 100
    tolerances: dict = field(default_factory=dict)
    output_path: str = "-"
    format: str = "csv"

    def __post_init__(self):
        if self.cutoff < 2:
            raise PreconditionError(f"cutoff must be >= 2, got {self.cutoff}")
        if self.format not in ("csv", "json"):
            raise PreconditionError(f"unknown format {self.format!r}")

    def tol(self, key: str, default: float) -> float:
        return float(self.tolerances.get(key, default))


# ---------------------------------------------------------------- formatting


def fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def to_json(obj, indent: int = 0) -> str:
    """Minimal JSON writer with 17-significant-digit floats and stable key order."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return "null" if not math.isfinite(obj) else format(float(obj), ".17g")
    if isinstance(obj, str):
        import json

        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{inner}"{k}": {to_json(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [inner + to_json(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj)}")


def render_table(header, rows, fmt_name: str) -> str:
    if fmt_name == "json":
        return to_json([dict(zip(header, r)) for r in rows]) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in r])
    return buf.getvalue()


def write_output(text: str, path: str):
    """Write atomically: temp file in the target directory, then rename."""
    if path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    except OSError as exc:
        raise OutputError(f"cannot write to {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise OutputError(f"cannot write to {path}: {exc}") from exc


# ---------------------------------------------------------------- parsing helpers


def parse_range(spec: str) -> list:
    """'1..5' -> [1, 2, 3, 4, 5]; '1,3,8' -> [1, 3, 8]."""
    try:
        if ".." in spec:
            lo, hi = spec.split("..")
            out = list(range(int(lo), int(hi) + 1))
        else:
            out = [int(x) for x in spec.split(",")]
    except ValueError as exc:
        raise PreconditionError(f"bad range {spec!r}") from exc
    if not out:
        raise PreconditionError(f"empty range {spec!r}")
    return out


def parse_tolerance(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise PreconditionError(f"tolerance override must be key=value, got {item!r}")
        try:
            out[key] = float(val)
        except ValueError as exc:
            raise PreconditionError(f"tolerance {key} is not a number: {val!r}") from exc
    return out


def square_grid(extent: float, points: int) -> np.ndarray:
    if points < 1 or extent < 0:
        raise PreconditionError("grid needs points >= 1 and extent >= 0")
    xs = np.linspace(-extent, extent, points)
    return np.array([complex(x, y) for y in xs for x in xs])


def parse_state(spec: str, cutoff: int) -> fockspace.TruncatedOperator:
    """vacuum | fock:N | coherent:RE,IM | gkp0:DELTA | gkp1:DELTA | magic+:DELTA | magic-:DELTA."""
    kind, _, arg = spec.partition(":")
    try:
        if kind == "vacuum":
            ket = fockspace.fock_state(0, cutoff)
        elif kind == "fock":
            ket = fockspace.fock_state(int(arg), cutoff)
        elif kind == "coherent":
            re, im = (float(v) for v in arg.split(","))
            ket = fockspace.coherent_state(complex(re, im), cutoff)
        elif kind in ("gkp0", "gkp1"):
            ket = fockspace.gkp_codestate(int(kind[-1]), float(arg), cutoff)
        elif kind in ("magic+", "magic-"):
            ket = fockspace.magic_state(kind[-1], float(arg), cutoff)
        else:
            raise PreconditionError(f"unknown state {spec!r}")
    except ValueError as exc:
        if isinstance(exc, PreconditionError):
            raise
        raise PreconditionError(f"bad state spec {spec!r}") from exc
    return ket.density()


def parse_channel(spec: str, cutoff: int, kraus: bool) -> channels.ChiEvaluator:
    """loss:GAMMA | squeezing:DELTA."""
    kind, _, arg = spec.partition(":")
    try:
        value = float(arg)
    except ValueError as exc:
        raise PreconditionError(f"bad channel spec {spec!r}") from exc
    if kind == "loss":
        if kraus:
            return channels.chi_from_kraus(channels.photon_loss_kraus(value, cutoff))
        return channels.photon_loss_chi(channels.LossParams(value))
    if kind == "squeezing":
        return channels.finite_squeezing_chi(value)
    raise PreconditionError(f"unknown channel {spec!r}")


# ---------------------------------------------------------------- measure tables

MEASURE_HEADER = ("n", "m", "weight_numerator", "weight_denominator", "weight_float")


def measure_rows(measure: twirl.TwirlMeasure) -> list:
    return [(n, m, w.numerator, w.denominator, float(w)) for (n, m), w in sorted(measure.weights.items())]


def read_measure_table(path: str, level: int, variant: str = "logical") -> twirl.TwirlMeasure:
    """Parse a CSV written by ``twirl-measure`` back into an exact measure."""
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    weights = {
        (int(r["n"]), int(r["m"])): Fraction(int(r["weight_numerator"]), int(r["weight_denominator"])) for r in rows
    }
    return twirl.TwirlMeasure(weights, level, twirl.VARIANTS[variant], variant)


# ---------------------------------------------------------------- commands


def cmd_twirl_measure(args, cfg: RunConfig) -> str:
    measure = twirl.twirl_measure(args.N, args.variant)
    return render_table(MEASURE_HEADER, measure_rows(measure), cfg.format)


def cmd_filter_grid(args, cfg: RunConfig) -> str:
    kind = twirl.FilterKind(args.variant, args.N)
    rows = [(d.real, d.imag, twirl.filter_value(d, kind)) for d in square_grid(args.extent, args.points)]
    return render_table(("re_delta", "im_delta", "filter"), rows, cfg.format)


def cmd_schedule(args, cfg: RunConfig) -> str:
    sched = ddseq.pulse_schedule(args.N, args.shift_set)
    entries = [
        {
            "k": k + 1,
            "n": e.vertex[0],
            "m": e.vertex[1],
            "Q_re": e.Q.real,
            "Q_im": e.Q.imag,
            "P_re": e.P.real,
            "P_im": e.P.imag,
            "tau_num": e.tau.numerator,
            "tau_den": e.tau.denominator,
        }
        for k, e in enumerate(sched.entries)
    ]
    if cfg.format == "csv":
        header = tuple(entries[0])
        return render_table(header, [tuple(e.values()) for e in entries], "csv")
    doc = {"header": {"N": sched.N, "shift_set": sched.shift_set, "M": sched.M}, "entries": entries}
    return to_json(doc) + "\n"


SPECTRUM_LEVELS = 10


def cmd_spectrum(args, cfg: RunConfig) -> str:
    header = (
        ("N",)
        + tuple(f"E{j}" for j in range(SPECTRUM_LEVELS))
        + ("delta_q0", "delta_p0", "delta_q1", "delta_p1", "gap", "splitting", "cutoff_used", "converged")
    )
    rows = []
    for N in parse_range(args.N):
        try:
            r = engineering.engineered_spectrum(
                N,
                args.E_J,
                cutoff=args.start_cutoff,
                n_levels=SPECTRUM_LEVELS,
                tol=cfg.tol("spectrum", 1e-6),
                max_cutoff=args.max_cutoff,
            )
        except ConvergenceError as exc:
            print(f"N={N}: {exc}", file=sys.stderr)
            rows.append((N,) + (math.nan,) * (SPECTRUM_LEVELS + 6) + (exc.diagnostics.get("cutoff", 0), False))
            continue
        sq = r.squeezing_reports
        rows.append(
            (N,)
            + r.eigenvalues
            + (sq[0].delta_q, sq[0].delta_p, sq[1].delta_q, sq[1].delta_p, r.gap, r.ground_pair_splitting)
            + (r.cutoff_used, r.converged)
        )
    return render_table(header, rows, cfg.format)


def read_spectrum_table(path: str) -> list:
    with open(path, encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def cmd_wigner(args, cfg: RunConfig) -> str:
    rho = parse_state(args.state, cfg.cutoff)
    grid = square_grid(args.extent, args.points)
    values = charfunc.wigner(rho, grid)
    return render_table(("re_alpha", "im_alpha", "wigner"), [(a.real, a.imag, w) for a, w in zip(grid, values)], cfg.format)


def cmd_chi(args, cfg: RunConfig) -> str:
    chi = parse_channel(args.channel, cfg.cutoff, args.kraus)
    beta = complex(args.beta_re, args.beta_im)
    rows = []
    for a in square_grid(args.extent, args.points):
        v = chi(a, beta)
        rows.append((a.real, a.imag, beta.real, beta.imag, v.real, v.imag))
    return render_table(("re_alpha", "im_alpha", "re_beta", "im_beta", "re_chi", "im_chi"), rows, cfg.format)


def cmd_check_params(args, cfg: RunConfig) -> str:
    omega = args.omega if args.omega is not None else 2 * math.pi * args.freq_ghz * 1e9
    rep = engineering.feasibility(omega, args.N, args.T_X, cfg.tol("margin", 10.0))
    doc = {
        "N": rep.N,
        "osc_frequency": rep.osc_frequency,
        "T_C_min": rep.T_C_min,
        "T_X_bound": rep.T_X_bound,
        "margin": rep.margin,
        "T_X": rep.T_X,
        "feasible": rep.feasible,
    }
    if cfg.format == "csv":
        return render_table(tuple(doc), [tuple("" if v is None else v for v in doc.values())], "csv")
    return to_json(doc) + "\n"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--cutoff", type=int, default=100, help="Fock cutoff (default 100)")
    common.add_argument("--format", choices=("csv", "json"), default=None, help="output format")
    common.add_argument("--out", default="-", help="output path, '-' for stdout")
    common.add_argument("--tolerance", action="append", metavar="KEY=VAL", help="override a tolerance")

    p = argparse.ArgumentParser(prog="gkpdd", description="Twirl and decoupling toolkit for grid-state engineering")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("twirl-measure", parents=[common], help="exact binomial twirl measure table")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--variant", choices=sorted(twirl.VARIANTS), default="logical")
    s.set_defaults(func=cmd_twirl_measure)

    s = sub.add_parser("filter-grid", parents=[common], help="twirl filter on a square grid")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--variant", choices=sorted(twirl.VARIANTS), default="logical")
    s.add_argument("--extent", type=float, default=2 * fockspace.SQRT_2PI)
    s.add_argument("--points", type=int, default=101)
    s.set_defaults(func=cmd_filter_grid)

    s = sub.add_parser("schedule", parents=[common], help="decoupling pulse schedule")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--shift-set", dest="shift_set", choices=sorted(ddseq.SHIFT_SETS), default="logical")
    s.set_defaults(func=cmd_schedule, default_format="json")

    s = sub.add_parser("spectrum", parents=[common], help="engineered spectra over a range of N")
    s.add_argument("--N", required=True, help="range such as 1..5 or list 1,4,8")
    s.add_argument("--E-J", dest="E_J", type=float, default=1.0)
    s.add_argument("--start-cutoff", dest="start_cutoff", type=int, default=None)
    s.add_argument("--max-cutoff", dest="max_cutoff", type=int, default=2400)
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("wigner", parents=[common], help="Wigner function of a state on a grid")
    s.add_argument("--state", default="vacuum")
    s.add_argument("--extent", type=float, default=3.0)
    s.add_argument("--points", type=int, default=31)
    s.set_defaults(func=cmd_wigner)

    s = sub.add_parser("chi", parents=[common], help="channel chi function on a grid of alpha")
    s.add_argument("--channel", default="loss:0.1")
    s.add_argument("--beta-re", dest="beta_re", type=float, default=0.0)
    s.add_argument("--beta-im", dest="beta_im", type=float, default=0.0)
    s.add_argument("--extent", type=float, default=1.5)
    s.add_argument("--points", type=int, default=7)
    s.add_argument("--kraus", action="store_true", help="evaluate from Kraus traces instead of the closed form")
    s.set_defaults(func=cmd_chi)

    s = sub.add_parser("check-params", parents=[common], help="timing feasibility report")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--omega", type=float, help="angular frequency in rad/s")
    g.add_argument("--freq-ghz", dest="freq_ghz", type=float, help="frequency omega/2pi in GHz")
    s.add_argument("--N", type=int, default=1)
    s.add_argument("--T-X", dest="T_X", type=float, default=None, help="elementary displacement time in seconds")
    s.set_defaults(func=cmd_check_params, default_format="json")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        fmt_name = args.format or getattr(args, "default_format", "csv")
        cfg = RunConfig(args.cutoff, parse_tolerance(args.tolerance), args.out, fmt_name)
        text = args.func(args, cfg)
        write_output(text, cfg.output_path)
    except GKPDDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
