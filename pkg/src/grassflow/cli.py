"""Command-line entry point ``grassflow``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .development import develop, undevelop
from .flows import parse_model, simulate
from .hierarchy import F_SIGN, compute_hierarchy, hamiltonian_F
from .io import FieldData, FieldParseError, FieldValidationError, load_field, save_field
from .lie import DomainError, ParameterError
from .presets import PRESETS, make_field
from .suites import SUITE_NAMES, Config, any_fail, format_report, run_suite


class UsageError(Exception):
    pass


def _need(fd: FieldData, kind: str):
    if fd.kind != kind:
        raise UsageError(f"expected a {kind} input, got {fd.kind}")


def cmd_hierarchy(args) -> int:
    fd = load_field(args.input)
    _need(fd, "skew_field")
    T = compute_hierarchy(fd.values, fd.grid, fd.params, args.jmax)
    F = [hamiltonian_F(T, j) for j in range(max(0, args.jmax - 1))]
    doc = {
        "header": {**fd.header(), "kind": "hierarchy_table", "jmax": args.jmax, "F_sign": F_SIGN},
        "residuals": list(T.residuals),
        "F": F,
        "levels": [np.stack([Q.real, Q.imag], -1).tolist() for Q in T.Q],
    }
    Path(args.output).write_text(json.dumps(doc, separators=(",", ":")) + "\n", encoding="utf-8")
    print(f"recursion residual max {max(T.residuals, default=0.0):.3e}; F = {F}")
    return 0 if T.ok else 1


def cmd_simulate(args) -> int:
    fd = load_field(args.input)
    name, j = parse_model(args.model, args.j)
    want = {"kdv": "scalar_field", "gnls": "grassmann_path", "hflow": "grassmann_path"}.get(name, "skew_field")
    _need(fd, want)
    tr = simulate(name, fd.values, fd.grid, fd.params, args.t_final, args.dt,
                  log_every=args.log_every, j=j)
    states = tr.states
    enc = np.stack([states.real, states.imag], -1).tolist() if np.iscomplexobj(states) else states.tolist()
    doc = {
        "header": {**fd.header(), "kind": "trajectory", "model": tr.model, "dt": args.dt},
        "times": tr.times.tolist(),
        "states": enc,
        "orbit_corrections": tr.orbit_corrections.tolist(),
        "flags": tr.flags,
    }
    Path(args.output).write_text(json.dumps(doc, separators=(",", ":")) + "\n", encoding="utf-8")
    if args.conserved:
        with open(args.conserved, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("t",) + tr.conserved_names)
            for t, row in zip(tr.times, tr.conserved):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in row])
    for name_, d in tr.drift().items():
        print(f"{name_} relative drift {d:.3e}")
    return 1 if tr.flags else 0


def cmd_develop(args) -> int:
    fd = load_field(args.input)
    _need(fd, "grassmann_path")
    fp = develop(fd.values, fd.grid, fd.params)
    meta = {**fd.metadata, "source": "develop", "par_leak": fp.par_leak, "frame_drift": fp.drift}
    save_field(FieldData("skew_field", fp.u, fd.grid, fd.params, meta), args.output)
    return 0 if fp.ok else 1


def cmd_undevelop(args) -> int:
    fd = load_field(args.input)
    _need(fd, "skew_field")
    fp = undevelop(fd.values, fd.grid, fd.params)
    meta = {**fd.metadata, "source": "undevelop", "frame_drift": fp.drift}
    save_field(FieldData("grassmann_path", fp.gamma, fd.grid, fd.params, meta), args.output)
    return 0 if fp.ok else 1


def cmd_make_field(args) -> int:
    fd = make_field(args.preset, args.n, args.k, args.L, args.N, args.seed)
    save_field(fd, args.output)
    return 0


def cmd_verify(args) -> int:
    cfg = Config()
    if args.config:
        try:
            cfg = Config.from_dict(json.loads(Path(args.config).read_text(encoding="utf-8")))
        except (json.JSONDecodeError, TypeError, ValueError) as e:
            raise UsageError(f"bad config: {e}") from e
    rows = run_suite(args.suite, cfg)
    text = format_report(rows)
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    nfail = sum(r[5] == "FAIL" for r in rows)
    print(f"{len(rows)} rows, {nfail} FAIL", file=sys.stderr)
    return 1 if any_fail(rows) else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="grassflow", description="Grassmannian NLS hierarchy verification")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("hierarchy", help="compute Q_0..Q_J for a skew field")
    s.add_argument("--input", required=True)
    s.add_argument("--jmax", type=int, default=6)
    s.add_argument("--output", required=True)
    s.set_defaults(func=cmd_hierarchy)

    s = sub.add_parser("simulate", help="time-step a model")
    s.add_argument("--model", required=True, help="mnls, gnls, kdv, flow-j or hflow-j")
    s.add_argument("--j", type=int, default=None)
    s.add_argument("--t-final", type=float, required=True)
    s.add_argument("--dt", type=float, required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--log-every", type=int, default=100)
    s.add_argument("--output", required=True)
    s.add_argument("--conserved", default=None)
    s.set_defaults(func=cmd_simulate)

    for name, fn, hlp in (("develop", cmd_develop, "path to field"),
                          ("undevelop", cmd_undevelop, "field to path")):
        s = sub.add_parser(name, help=hlp)
        s.add_argument("--input", required=True)
        s.add_argument("--output", required=True)
        s.set_defaults(func=fn)

    s = sub.add_parser("make-field", help="write a preset field")
    s.add_argument("--preset", required=True, choices=PRESETS)
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--L", type=float, default=20.0)
    s.add_argument("--N", type=int, default=256)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--output", required=True)
    s.set_defaults(func=cmd_make_field)

    s = sub.add_parser("verify", help="run verification suites")
    s.add_argument("--suite", default="all", choices=SUITE_NAMES + ("all",))
    s.add_argument("--config", default=None, help="JSON file overriding suite settings")
    s.add_argument("--report", default=None, help="CSV output path (default stdout)")
    s.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    try:
        return args.func(args)
    except (UsageError, FieldParseError, FieldValidationError, ParameterError, DomainError,
            FileNotFoundError, ValueError) as e:
        print(f"grassflow: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
