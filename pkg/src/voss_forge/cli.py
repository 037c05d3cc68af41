"""Command-line entry point: ``gen``, ``verify`` and ``export-report``.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration
error, 3 domain, singularity or solver error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from .errors import VossError
from .jobs import CHECKS, FAMILIES, JobConfig, UsageError, build_job, max_threads, run_checks
from .meshio import FORMATS, write_mesh

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 3

# keys a --config file may carry, mapped to the argparse destination
CONFIG_KEYS = {
    "family": "family",
    "k": "k",
    "lambda": "lam",
    "s": "s",
    "t": "t",
    "strip_index": "strip_index",
    "profile": "profile",
    "variant": "variant",
    "axes": "axes",
    "grid": "grid",
    "box": "box",
    "margin": "margin",
    "checks": "checks",
    "out": "out",
    "format": "format",
}
PARAM_DESTS = {"k": "k", "lambda": "lam", "s": "s", "t": "t", "strip_index": "strip_index",
               "profile": "profile", "variant": "variant", "axes": "axes"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _grid(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", str(text))
    if not m:
        raise UsageError(f"grid must look like 200x200, got {text!r}")
    return int(m.group(1)), int(m.group(2))


def _floats(text, n: int, what: str) -> list[float]:
    parts = text if isinstance(text, (list, tuple)) else str(text).split(",")
    try:
        vals = [float(p) for p in parts]
    except (TypeError, ValueError):
        raise UsageError(f"{what} must be {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n:
        raise UsageError(f"{what} must be {n} comma-separated numbers, got {text!r}")
    return vals


def _job_arguments(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON job file; flags given on the command line override it")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--k", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--strip-index", dest="strip_index", type=int)
    p.add_argument("--profile", choices=("knet-revolution", "catenoid"))
    p.add_argument("--variant", choices=("theorem", "corollary"))
    p.add_argument("--axes", help="ellipsoid semi-axes a,b,c")
    p.add_argument("--grid", help="samples as NUxNV (default 200x200)")
    p.add_argument("--box", help="parameter box u0,u1,v0,v1 (default: family specific)")
    p.add_argument("--margin", type=float, help="relative inset from singular curves")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="voss-forge", description="Alignable Voss nets: generation, verification and reports.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    gen = sub.add_parser("gen", help="sample a family and write a mesh")
    _job_arguments(gen)
    gen.add_argument("--out", help="mesh path")
    gen.add_argument("--format", choices=FORMATS, help="mesh format (default: from the suffix)")

    ver = sub.add_parser("verify", help="run named checks and write a JSON report")
    _job_arguments(ver)
    ver.add_argument("--check", dest="checks", action="append", help=f"one of {', '.join(CHECKS)}; repeatable or comma-separated")
    ver.add_argument("--out", help="report path (default: stdout)")

    rep = sub.add_parser("export-report", help="merge reports into JSON, a summary table and a figure")
    rep.add_argument("reports", nargs="+")
    rep.add_argument("--out", required=True, help="output stem; .json, .tsv and .png are written")
    return parser


def _resolve(args: argparse.Namespace) -> dict:
    """Merge ``--config`` contents with flags (flags win)."""
    merged: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(data) - set(CONFIG_KEYS))
        if unknown:
            raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
        for key, val in data.items():
            merged[CONFIG_KEYS[key]] = val
    for dest in set(CONFIG_KEYS.values()):
        val = getattr(args, dest, None)
        if val is not None:
            merged[dest] = val
    return merged


def _config(args: argparse.Namespace) -> tuple[JobConfig, dict]:
    m = _resolve(args)
    family = m.get("family")
    if family is None:
        raise UsageError("no family given (use --family or a config file)")
    if family not in FAMILIES:
        raise UsageError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    params = {name: m[dest] for name, dest in PARAM_DESTS.items() if dest in m}
    if "axes" in params:
        params["axes"] = _floats(params["axes"], 3, "axes")
    kw = {}
    if "grid" in m:
        kw["nu"], kw["nv"] = _grid(m["grid"])
    if "box" in m:
        b = m["box"]
        if isinstance(b, list) and len(b) == 2 and all(isinstance(r, list) for r in b):
            b = [*b[0], *b[1]]
        u0, u1, v0, v1 = _floats(b, 4, "box")
        kw["box"] = ((u0, u1), (v0, v1))
    if "margin" in m:
        kw["margin"] = m["margin"]
    checks = m.get("checks") or []
    if isinstance(checks, str):
        checks = [checks]
    if not isinstance(checks, list):
        raise UsageError(f"checks must be a list of names, got {checks!r}")
    kw["checks"] = [c.strip() for item in checks for c in str(item).split(",") if c.strip()]
    return JobConfig.create(family, params, **kw), m


def cmd_gen(args: argparse.Namespace) -> int:
    cfg, m = _config(args)
    out = m.get("out")
    if not out:
        raise UsageError("gen needs --out")
    fmt = m.get("format") or Path(out).suffix.lstrip(".").lower()
    if fmt not in FORMATS:
        raise UsageError(f"cannot infer a mesh format from {out!r}; use --format {{{','.join(FORMATS)}}}")
    job = build_job(cfg)
    write_mesh(job.surface, out, fmt)
    print(f"wrote {out} ({fmt}, {job.grid.nu}x{job.grid.nv})")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    cfg, m = _config(args)
    if not cfg.checks:
        raise UsageError(f"verify needs at least one --check from {', '.join(CHECKS)}")
    threads = max_threads()
    job = build_job(cfg)
    rep = run_checks(job, cfg.checks, threads)
    text = rep.to_json() + "\n"
    out = m.get("out")
    if out:
        Path(out).write_text(text)
        from .report import summary_table

        sys.stdout.write(summary_table(rep))
    else:
        sys.stdout.write(text)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_export_report(args: argparse.Namespace) -> int:
    from .report import export_report, load_report, merge_reports, summary_table

    try:
        reports = [load_report(p) for p in args.reports]
        merged = merge_reports(reports)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    paths = export_report(reports, args.out)
    sys.stdout.write(summary_table(merged))
    print(f"wrote {paths['json']}, {paths['tsv']}, {paths['png']}")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "verify": cmd_verify, "export-report": cmd_export_report}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"voss-forge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except VossError as exc:
        print(f"voss-forge: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"voss-forge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
