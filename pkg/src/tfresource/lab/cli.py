"""Entanglement and magic of frustrated XYZ rings from the command line.

Exit status: 0 success, 1 usage error, 2 compute error, 3 verification
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import warnings
from dataclasses import replace
from typing import List, Optional, Sequence

from .. import __version__
from ..errors import DomainError, TFResourceError, UsageError
from ..model import Boundary, ModelSpec, parse_config
from ..spin import StateVector
from ..states import (
    KinkFamily,
    clifford_map_circuit,
    ghz_state,
    kink_state,
    neel_state,
    omega_state,
    w_state,
)
from .plot import AxesSpec, emit_plot
from .sweep import DEFAULT_MEM_BUDGET, format_table, parse_plan, run_sweep
from .tasks import SPECTRUM_COLUMNS, Caps, Quantity, StateKind, TaskOptions, compute_row, spectrum_rows
from .verify import SUITES, run_suite

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE, EXIT_VERIFY = 0, 1, 2, 3

log = logging.getLogger("tfres")


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        # prefix matching would let the top-level parser claim subcommand
        # flags such as --m as abbreviations of --mem-budget
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    g = p.add_argument_group("model and run options")
    g.add_argument("--n", type=int, default=d(None), help="number of sites N")
    g.add_argument("--jx", type=float, default=d(1.0))
    g.add_argument("--jy", type=float, default=d(0.0))
    g.add_argument("--jz", type=float, default=d(0.0))
    g.add_argument("--h", type=float, default=d(0.0), help="transverse field (normalized to |h|)")
    g.add_argument("--boundary", choices=[b.value for b in Boundary], default=d("periodic"))
    g.add_argument("--config", default=d(None), help="model file with keys n, jx, jy, jz, h, boundary")
    g.add_argument("--threads", type=int, default=d(1))
    g.add_argument("--mem-budget", type=float, default=d(float(DEFAULT_MEM_BUDGET)), help="bytes")
    g.add_argument("--seed", type=int, default=d(7))
    g.add_argument("--out", default=d(None), help="output path (default stdout)")
    g.add_argument("--format", choices=["csv", "json"], default=d("csv"))
    g.add_argument("--no-timestamp", action="store_true", default=d(False))
    g.add_argument("--dense-max-sites", type=int, default=d(Caps.dense))
    g.add_argument("--max-solve-sites", type=int, default=d(Caps.solve))
    g.add_argument("--max-sre-sites", type=int, default=d(Caps.sre))
    g.add_argument("-v", "--verbose", action="store_true", default=d(False))


def _add_state_choice(p, default="ground"):
    p.add_argument("--state", choices=[s.value for s in StateKind], default=default)
    p.add_argument("--ell", type=int, default=0, help="momentum index for omega / w states")
    p.add_argument("--k", type=int, default=4, help="eigenpairs to request")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tfres", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        _add_globals(p, suppress=True)
        return p

    p = command("spectrum", "lowest eigenvalues with symmetry labels")
    p.add_argument("--k", type=int, default=4)

    p = command("states", "emit a reference state or the Clifford map circuit")
    p.add_argument("kind", choices=["kink", "omega", "w", "ghz", "neel", "circuit"])
    p.add_argument("--ell", type=int, default=0)
    p.add_argument("--position", type=int, default=1, help="kink position k")
    p.add_argument("--family", choices=[f.value for f in KinkFamily], default="minus")
    p.add_argument("--basis", choices=["z", "x"], default="z", help="neel basis")
    p.add_argument("--state-format", choices=["tfsv", "json"], default="json")

    p = command("ee", "entanglement entropy of a leading block of floor(m N) sites")
    _add_state_choice(p)
    p.add_argument("--m", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=1.0)

    p = command("dee", "disconnected Renyi entropy")
    _add_state_choice(p)
    p.add_argument("--preset", choices=["fig4", "fractions"], default="fig4")
    p.add_argument("--m", type=float, default=0.5)
    p.add_argument("--l", type=float, default=0.125)
    p.add_argument("--r", type=float, default=0.25)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--allow-rounding", action="store_true")

    p = command("sre", "stabilizer Renyi entropy")
    _add_state_choice(p)
    p.add_argument("--q", type=int, default=2)

    p = command("r2", "relative frustrated SRE correction")
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--k", type=int, default=4)

    p = command("transition", "locate h* and the SRE jump across it")
    p.add_argument("--h-lo", type=float, default=0.0)
    p.add_argument("--h-hi", type=float, default=1.0)
    p.add_argument("--resolution", type=float, default=1e-3)
    p.add_argument("--coarse-step", type=float, default=0.05)
    p.add_argument("--delta", type=float, default=1e-2)
    p.add_argument("--no-jump", action="store_true")

    p = command("sweep", "run a plan file")
    p.add_argument("plan")

    p = command("verify", "run a verification suite")
    p.add_argument("suite", choices=sorted(SUITES) + ["all"])

    p = command("plot", "render a CSV table as SVG")
    p.add_argument("input", help="CSV file written by another subcommand")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--group")
    p.add_argument("--logx", action="store_true")
    p.add_argument("--logy", action="store_true")
    p.add_argument("--title", default="")
    p.add_argument("--hline", action="append", default=[], help="VALUE[:LABEL] reference line")
    return parser


# -- helpers ----------------------------------------------------------------


def _caps(args) -> Caps:
    caps = Caps(args.dense_max_sites, args.max_solve_sites, args.max_sre_sites)
    if caps.solve > Caps.solve or caps.sre > Caps.sre:
        warnings.warn("size caps raised above the desk-scale defaults", UserWarning)
    return caps


def _model(args) -> ModelSpec:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            spec = parse_config(fh.read())
    else:
        if args.n is None:
            raise UsageError("--n is required (or --config)")
        spec = ModelSpec(args.n, args.jx, args.jy, args.jz, args.h, Boundary(args.boundary))
    if spec.h < 0:
        warnings.warn(f"field h={spec.h} normalized to |h|", UserWarning)
        spec = spec.with_field(abs(spec.h))
        args._h_normalized = True
    return spec


def _meta(args) -> dict:
    meta = {"command": args.command, "seed": args.seed, "version": __version__}
    if getattr(args, "_h_normalized", False):
        meta["h_normalized"] = True
        meta["note"] = "field normalized to |h|"
    return meta


def _emit_text(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_rows(args, rows, columns) -> None:
    _emit_text(format_table(rows, args.format, not args.no_timestamp, _meta(args), columns), args.out)


def _options(args, **kw) -> TaskOptions:
    base = {"seed": args.seed, "timing": not args.no_timestamp}
    base.update({k: v for k, v in kw.items() if v is not None})
    return TaskOptions(**base)


# -- commands ---------------------------------------------------------------


def _cmd_spectrum(args) -> int:
    spec = _model(args)
    rows = spectrum_rows(spec, _options(args, k=args.k), _caps(args))
    _emit_rows(args, rows, SPECTRUM_COLUMNS)
    return EXIT_OK


def _cmd_states(args) -> int:
    n = args.n
    if n is None:
        raise UsageError("--n is required")
    if args.kind == "circuit":
        _emit_text(clifford_map_circuit(n).to_json() + "\n", args.out)
        return EXIT_OK
    makers = {
        "kink": lambda: kink_state(n, args.position, args.family),
        "omega": lambda: omega_state(n, args.ell),
        "w": lambda: w_state(n, args.ell),
        "ghz": lambda: ghz_state(n),
        "neel": lambda: neel_state(n, args.basis),
    }
    state: StateVector = makers[args.kind]()
    if args.state_format == "json":
        _emit_text(state.to_json() + "\n", args.out)
    elif args.out:
        with open(args.out, "wb") as fh:
            fh.write(state.to_bytes())
    else:
        sys.stdout.buffer.write(state.to_bytes())
    return EXIT_OK


def _single(args, quantity: Quantity, **opt) -> int:
    spec = _model(args)
    opts = _options(args, **opt)
    row = compute_row(quantity, spec, opts, _caps(args))
    _emit_rows(args, [row], list(row.keys()))
    return EXIT_OK


def _cmd_ee(args) -> int:
    return _single(args, Quantity.EE, state=args.state, ell=args.ell, k=args.k, m=args.m, alpha=args.alpha)


def _cmd_dee(args) -> int:
    return _single(
        args, Quantity.DEE, state=args.state, ell=args.ell, k=args.k, preset=args.preset,
        m=args.m, l=args.l, r=args.r, alpha=args.alpha, allow_rounding=args.allow_rounding,
    )


def _cmd_sre(args) -> int:
    return _single(args, Quantity.SRE, state=args.state, ell=args.ell, k=args.k, q=args.q)


def _cmd_r2(args) -> int:
    return _single(args, Quantity.R2, q=args.q, k=args.k)


def _cmd_transition(args) -> int:
    return _single(
        args, Quantity.TRANSITION, h_lo=args.h_lo, h_hi=args.h_hi, resolution=args.resolution,
        coarse_step=args.coarse_step, delta=args.delta, jump=not args.no_jump,
    )


def _cmd_sweep(args, argv: Sequence[str]) -> int:
    with open(args.plan, encoding="utf-8") as fh:
        text = fh.read()
    given = set(argv)
    overrides = {}
    if "--out" in given:
        overrides["out"] = args.out
    if "--threads" in given:
        overrides["threads"] = args.threads
    if "--mem-budget" in given:
        overrides["mem_budget"] = int(args.mem_budget)
    if "--seed" in given:
        overrides["seed"] = args.seed
    if "--format" in given:
        overrides["fmt"] = args.format
    if args.no_timestamp:
        overrides["timestamp"] = False
    plan = parse_plan(text, **overrides)
    plan = replace(
        plan,
        caps=_caps(args),
        options=replace(plan.options, seed=plan.seed, timing=plan.timestamp),
    )
    rows = run_sweep(plan, stream=None if plan.out else sys.stdout)
    failed = [r for r in rows if r.get("status") != "ok"]
    if failed:
        log.warning("%d of %d grid points failed", len(failed), len(rows))
    return EXIT_OK


def _cmd_verify(args) -> int:
    report = run_suite(args.suite, seed=args.seed, timestamp=not args.no_timestamp)
    _emit_text(json.dumps(report, sort_keys=True, indent=2) + "\n", args.out)
    return EXIT_OK if report["pass"] else EXIT_VERIFY


def _cmd_plot(args) -> int:
    with open(args.input, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    hlines = []
    for item in args.hline:
        value, _, label = item.partition(":")
        try:
            hlines.append((float(value), label or value))
        except ValueError as exc:
            raise UsageError(f"bad --hline {item!r}") from exc
    axes = AxesSpec(args.x, args.y, args.group, args.logx, args.logy, args.title, tuple(hlines))
    _emit_text(emit_plot(rows, axes), args.out)
    return EXIT_OK


_COMMANDS = {
    "spectrum": _cmd_spectrum,
    "states": _cmd_states,
    "ee": _cmd_ee,
    "dee": _cmd_dee,
    "sre": _cmd_sre,
    "r2": _cmd_r2,
    "transition": _cmd_transition,
    "verify": _cmd_verify,
    "plot": _cmd_plot,
}


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse has printed usage; --help and --version exit with 0
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "sweep":
            return _cmd_sweep(args, argv)
        return _COMMANDS[args.command](args)
    except (UsageError, DomainError) as exc:
        print(f"tfres: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TFResourceError, OSError) as exc:
        print(f"tfres: compute error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
