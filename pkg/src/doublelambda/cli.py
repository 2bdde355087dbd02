"""
Command-line front end: figure data as CSV/JSON tables plus integrity checks.

    doublelambda fig4a --od 200 --points 400 --out fig4a.csv
    doublelambda check
    doublelambda transfer --od 200 --delta 63.66

Detunings are read and written in units of Gamma.  ``--config file.json``
supplies defaults for any flag (keys are flag names with dashes replaced by
underscores); flags given on the command line win.  Sweep points are
evaluated in a process pool sized by ``DOUBLELAMBDA_WORKERS`` (default: all
cores) and written in sweep order.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np

from . import checks
from .gates import (
    NoSolutionError,
    coherent_response,
    hadamard_detuning,
    hom_probabilities,
    noon_report,
    qubit_probabilities,
    swap_report,
)
from .medium import DomainError, MediumParams, transfer_matrix

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_CHECK = 0, 1, 2, 3
WORKERS_ENV = "DOUBLELAMBDA_WORKERS"
DELTA_RULES = {"od/pi": 1.0 / math.pi, "od/2pi": 0.5 / math.pi}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        raise UsageError(message)


@dataclass
class SweepConfig:
    command: str
    points: int = 400
    out: str = "-"
    format: str = "csv"
    grid: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.points < 2:
            raise UsageError(f"--points must be >= 2, got {self.points}")
        if self.format not in ("csv", "json"):
            raise UsageError(f"--format must be csv or json, got {self.format!r}")


# ----------------------------------------------------------------------------
# per-point evaluators (module level so the process pool can pickle them)


def _delta_for(od: float, delta: float | None, rule: str | None) -> float:
    return od * DELTA_RULES[rule] if rule else delta


def _fig2_row(phi_r: float, od: float, delta: float, u_beta: float) -> list:
    r = coherent_response(MediumParams(od, delta), u_beta, phi_r)
    return [phi_r, r.t_p, r.t_s, r.dphi_p, r.dphi_s]


def _fig3a_row(od: float, delta: float | None, rule: str | None, u: float, phi_r: float) -> list:
    # phi_u = 0 with the loop phase set so that phi_r = phi_u - (phi_c - phi_d)
    params = MediumParams(od, _delta_for(od, delta, rule), phi_c=-phi_r)
    q = qubit_probabilities(params, u, 0.0)
    return [od, q.p_1p0s, q.p_0p1s]


def _fig3b_row(u: float, od: float) -> list:
    row = [u]
    for branch in ("probe", "signal"):
        try:
            row.append(hadamard_detuning(od, u, branch))
        except NoSolutionError:
            row.append(math.nan)
    return row


def _fig4a_row(delta: float, od: float) -> list:
    h = hom_probabilities(MediumParams(od, delta))
    return [delta, h.p_2p0s, h.p_0p2s, h.p_1p1s]


def _fig4b_row(od: float, delta: float | None, rule: str | None) -> list:
    h = hom_probabilities(MediumParams(od, _delta_for(od, delta, rule)))
    return [od, h.p_2p0s, h.p_0p2s, h.p_2p0s + h.p_0p2s]


def _fig4c_row(od: float, delta: float | None, rule: str | None) -> list:
    h = noon_report(MediumParams(od, _delta_for(od, delta, rule)))
    return [od, h.noon_fidelity, h.noon_fidelity_linear]


def _fig5a_row(od: float, delta: float | None, rule: str | None) -> list:
    s = swap_report(MediumParams(od, _delta_for(od, delta, rule)))
    return [od, s.mean_fidelity, s.std_fidelity]


# ----------------------------------------------------------------------------


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise UsageError(f"{WORKERS_ENV} must be >= 1, got {value}")
    return value


def evaluate(fn: Callable[[float], list], xs: Sequence[float]) -> list[list]:
    workers = min(_workers(), len(xs))
    if workers <= 1:
        return [fn(x) for x in xs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, xs, chunksize=max(1, len(xs) // (4 * workers))))


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    return f"{float(value):.12g}"


def _json_value(value):
    if isinstance(value, str):
        return value
    value = float(value)
    return None if math.isnan(value) else float(f"{value:.12g}")


def render(columns: Sequence[str], rows: Sequence[Sequence], fmt: str) -> str:
    if fmt == "json":
        body = {"columns": list(columns), "rows": [[_json_value(v) for v in row] for row in rows]}
        return json.dumps(body, indent=1) + "\n"
    lines = [",".join(columns)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _emit(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _check_delta_choice(args) -> None:
    if getattr(args, "delta", None) is not None and getattr(args, "delta_rule", None):
        raise UsageError("--delta and --delta-rule are mutually exclusive")


def _sweep(lo: float, hi: float, points: int) -> list[float]:
    return [float(x) for x in np.linspace(lo, hi, points)]


FIGURES = {
    "fig2": ["phi_r", "T_p", "T_s", "dphi_p", "dphi_s"],
    "fig3a": ["od", "p_1p0s", "p_0p1s"],
    "fig3b": ["u", "delta_probe", "delta_signal"],
    "fig4a": ["delta", "p_2p0s", "p_0p2s", "p_1p1s"],
    "fig4b": ["od", "p_2p0s", "p_0p2s", "sum"],
    "fig4c": ["od", "noon_fidelity_sqrt", "noon_fidelity_linear"],
    "fig5a": ["od", "mean_fidelity", "std_fidelity"],
    "fig5b": ["input", "output", "probability"],
}


def figure_table(args) -> tuple[list[str], list[list]]:
    cmd = args.command
    _check_delta_choice(args)
    if cmd == "fig2":
        xs = _sweep(args.phi_min, args.phi_max, args.points)
        fn = partial(_fig2_row, od=args.od, delta=args.delta, u_beta=args.u_beta)
    elif cmd == "fig3a":
        delta = args.delta if (args.delta is not None or args.delta_rule) else 200.0 / math.pi
        xs = _sweep(args.od_min, args.od_max, args.points)
        fn = partial(_fig3a_row, delta=delta, rule=args.delta_rule, u=args.u, phi_r=args.phi_r)
    elif cmd == "fig3b":
        xs = _sweep(args.u_min, args.u_max, args.points)
        fn = partial(_fig3b_row, od=args.od)
    elif cmd == "fig4a":
        xs = _sweep(args.delta_min, args.delta_max, args.points)
        fn = partial(_fig4a_row, od=args.od)
    elif cmd in ("fig4b", "fig4c", "fig5a"):
        default_rule = "od/2pi" if cmd == "fig5a" else "od/pi"
        rule = args.delta_rule or (None if args.delta is not None else default_rule)
        xs = _sweep(args.od_min, args.od_max, args.points)
        row = {"fig4b": _fig4b_row, "fig4c": _fig4c_row, "fig5a": _fig5a_row}[cmd]
        fn = partial(row, delta=args.delta, rule=rule)
    elif cmd == "fig5b":
        rule = args.delta_rule or (None if args.delta is not None else "od/2pi")
        report = swap_report(MediumParams(args.od, _delta_for(args.od, args.delta, rule)))
        rows = [
            [inp, out, prob]
            for inp, outs in report.truth_table.items()
            for out, prob in outs.items()
        ]
        return FIGURES[cmd], rows
    else:  # pragma: no cover - parser restricts choices
        raise UsageError(f"unknown command {cmd!r}")
    return FIGURES[cmd], evaluate(fn, xs)


def transfer_summary(args) -> dict:
    params = MediumParams(args.od, args.delta, args.gamma, args.phi_c, args.phi_d)
    tm = transfer_matrix(params)

    def cx(z: complex) -> dict:
        return {"re": _json_value(z.real), "im": _json_value(z.imag), "abs2": _json_value(abs(z) ** 2)}

    return {
        "params": {"od": args.od, "delta": args.delta, "gamma": args.gamma, "phi_c": args.phi_c, "phi_d": args.phi_d},
        "A": cx(tm.a),
        "B": cx(tm.b),
        "C": cx(tm.c),
        "D": cx(tm.d),
        "probe_loss": _json_value(tm.probe_loss()),
        "signal_loss": _json_value(tm.signal_loss()),
        "loss_exponent": _json_value(params.loss_exponent),
    }


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--points", type=int, default=400)
    p.add_argument("--out", default="-", help="output file, '-' for stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _add_delta_choice(p: argparse.ArgumentParser) -> None:
    p.add_argument("--delta", type=float, default=None, help="explicit detuning in units of Gamma")
    p.add_argument("--delta-rule", choices=sorted(DELTA_RULES), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="doublelambda", description=__doc__.split("\n\n")[0])
    parser.add_argument("--config", help="JSON file with default flag values")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fig2", help="coherent-field transmittance and phase vs phi_r")
    p.add_argument("--od", type=float, default=50.0)
    p.add_argument("--delta", type=float, default=13.0)
    p.add_argument("--u-beta", type=float, default=1.0)
    p.add_argument("--phi-min", type=float, default=0.0)
    p.add_argument("--phi-max", type=float, default=2.0 * math.pi)
    _add_output(p)

    p = sub.add_parser("fig3a", help="two-colour qubit output probabilities vs OD")
    p.add_argument("--od-min", type=float, default=0.0)
    p.add_argument("--od-max", type=float, default=400.0)
    p.add_argument("--u", type=float, default=1.0)
    p.add_argument("--phi-r", type=float, default=math.pi / 2)
    _add_delta_choice(p)
    _add_output(p)

    p = sub.add_parser("fig3b", help="Hadamard detunings vs amplitude ratio u")
    p.add_argument("--od", type=float, default=200.0)
    p.add_argument("--u-min", type=float, default=0.2)
    p.add_argument("--u-max", type=float, default=5.0)
    _add_output(p)

    p = sub.add_parser("fig4a", help="two-photon output probabilities vs detuning")
    p.add_argument("--od", type=float, default=200.0)
    p.add_argument("--delta-min", type=float, default=0.0)
    p.add_argument("--delta-max", type=float, default=150.0)
    _add_output(p)

    for name, hi, text in (
        ("fig4b", 1000.0, "bunching probabilities vs OD"),
        ("fig4c", 1000.0, "NOON-state fidelity vs OD"),
        ("fig5a", 2000.0, "SWAP fidelity mean/std vs OD"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--od-min", type=float, default=10.0)
        p.add_argument("--od-max", type=float, default=hi)
        _add_delta_choice(p)
        _add_output(p)

    p = sub.add_parser("fig5b", help="SWAP truth table")
    p.add_argument("--od", type=float, default=1000.0)
    _add_delta_choice(p)
    _add_output(p)

    sub.add_parser("check", help="run the integrity-check suite")

    p = sub.add_parser("transfer", help="print A, B, C, D as JSON")
    p.add_argument("--od", type=float, default=None)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--phi-c", type=float, default=0.0)
    p.add_argument("--phi-d", type=float, default=0.0)
    return parser


def parse(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                overrides = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"--config: cannot read {args.config}: {exc}") from None
        if not isinstance(overrides, dict):
            raise UsageError("--config: top level must be an object")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(overrides) - known - {"command", "config"}
        if unknown:
            raise UsageError(f"--config: unknown keys {sorted(unknown)}")
        sub.set_defaults(**{k: v for k, v in overrides.items() if k in known})
        args = parser.parse_args(argv)
    if hasattr(args, "points"):
        SweepConfig(args.command, args.points, args.out, args.format)
    return args


def _flag_message(message: str) -> str:
    """Rename a leading parameter name to its command-line flag."""
    head, _, rest = message.partition(" ")
    flags = {"od", "delta", "gamma", "phi_c", "phi_d", "u", "u_beta", "length"}
    return f"--{head.replace('_', '-')} {rest}" if head in flags else message


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse(argv)
        if args.command == "check":
            results = checks.run_all()
            for result in results:
                print(result.line())
            ok = all(r.passed for r in results)
            print("all checks passed" if ok else "CHECK FAILURES")
            return EXIT_OK if ok else EXIT_CHECK
        if args.command == "transfer":
            if args.od is None:
                raise UsageError("--od is required")
            print(json.dumps(transfer_summary(args), indent=1))
            return EXIT_OK
        columns, rows = figure_table(args)
        _emit(render(columns, rows, args.format), args.out)
        return EXIT_OK
    except UsageError as exc:
        print(f"doublelambda: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"doublelambda: domain error: {_flag_message(str(exc))}", file=sys.stderr)
        return EXIT_DOMAIN


def main() -> None:
    sys.exit(run())
