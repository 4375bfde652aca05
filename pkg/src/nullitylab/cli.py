"""Command-line front end: ``nullitylab analyze|extend|selftest|catalog``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import analyzer as AN
from . import catalog as C
from . import extension as EX
from . import report as RP
from .bilinear import FLAT_TOL
from .selftest import run_selftest
from .subspace import DEFAULT_TOL

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISMATCH = 3
EXIT_INVARIANT = 4
EXIT_IO = 5

EXTENDABLE = ("CompositionBound", "RankOneL_k1", "RankOneL_k0_Ruled")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    immersion: str | None
    manifest: str | None
    grid: tuple[int, ...] | None
    box: tuple[tuple[float, float], ...] | None
    tol_rank: float
    tol_flat: float
    seed: int
    out: str | None
    format: str

    def to_dict(self) -> dict:
        return {
            "immersion": self.immersion,
            "manifest": self.manifest,
            "grid": None if self.grid is None else list(self.grid),
            "box": None if self.box is None else [list(b) for b in self.box],
            "tol_rank": self.tol_rank,
            "tol_flat": self.tol_flat,
            "seed": self.seed,
            "format": self.format,
        }


def parse_grid(text: str) -> tuple[int, ...]:
    try:
        counts = tuple(int(t) for t in text.lower().split("x"))
    except ValueError:
        raise CliError(f"bad --grid {text!r}; expected e.g. 9x9", EXIT_CONFIG) from None
    if any(c < 2 for c in counts):
        raise CliError("--grid needs at least 2 points per axis", EXIT_CONFIG)
    return counts


def parse_box(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for part in text.split(","):
        try:
            lo, hi = (float(t) for t in part.split(":"))
        except ValueError:
            raise CliError(f"bad --box {text!r}; expected e.g. -1:1,0:2", EXIT_CONFIG) from None
        if not lo < hi:
            raise CliError(f"empty box interval {part!r}", EXIT_CONFIG)
        out.append((lo, hi))
    return tuple(out)


def _config(args) -> RunConfig:
    if args.tol_rank <= 0 or args.tol_flat <= 0:
        raise CliError("tolerances must be positive", EXIT_CONFIG)
    return RunConfig(
        immersion=args.immersion,
        manifest=args.manifest,
        grid=None if args.grid is None else parse_grid(args.grid),
        box=None if args.box is None else parse_box(args.box),
        tol_rank=args.tol_rank,
        tol_flat=args.tol_flat,
        seed=args.seed,
        out=args.out,
        format=args.format or ("text" if args.command == "selftest" else "json"),
    )


def _load_defs(cfg: RunConfig) -> list[C.ImmersionDef]:
    if cfg.manifest is None:
        return C.list_catalog()
    try:
        return C.load_manifest(cfg.manifest)
    except OSError as exc:
        raise CliError(f"cannot read manifest: {exc}", EXIT_IO) from exc
    except (C.CatalogError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CliError(f"invalid manifest: {exc}", EXIT_CONFIG) from exc


def _resolve(cfg: RunConfig) -> C.ImmersionDef:
    defs = _load_defs(cfg)
    if cfg.immersion is None:
        if cfg.manifest is not None and len(defs) == 1:
            return defs[0]
        raise CliError("--immersion is required", EXIT_CONFIG)
    for d in defs:
        if d.name == cfg.immersion:
            return d
    raise CliError(f"unknown immersion {cfg.immersion!r}", EXIT_CONFIG)


def _grid_and_box(cfg: RunConfig, d: C.ImmersionDef, default: int):
    counts = cfg.grid or (default,) * d.n
    if len(counts) == 1:
        counts = counts * d.n
    if len(counts) != d.n:
        raise CliError(f"--grid has {len(counts)} axes but {d.name} has dimension {d.n}", EXIT_CONFIG)
    box = cfg.box or d.sample_box
    if len(box) != d.n:
        raise CliError(f"--box has {len(box)} intervals but {d.name} has dimension {d.n}", EXIT_CONFIG)
    for x in AN.grid_points(box, counts)[0][[0, -1]]:
        if not d.contains(x):
            raise CliError(f"--box leaves the domain of {d.name}", EXIT_CONFIG)
    return counts, box


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out is None:
        sys.stdout.write(text)
        return
    try:
        Path(cfg.out).write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {cfg.out}: {exc}", EXIT_IO) from exc


def cmd_analyze(cfg: RunConfig) -> int:
    d = _resolve(cfg)
    counts, box = _grid_and_box(cfg, d, 5 if d.n <= 3 else 3)
    reports = AN.analyze_grid(d, counts, box, cfg.tol_rank, cfg.tol_flat, cfg.seed)
    doc = RP.envelope(
        "analyze",
        cfg.to_dict(),
        immersion=d.to_dict(),
        grid={"counts": list(counts), "box": [list(b) for b in box]},
        summary=AN.summarize(reports),
        points=[r.to_dict() for r in reports],
    )
    _emit(cfg, RP.dumps(doc) if cfg.format == "json" else RP.analyze_text(doc))
    return EXIT_INVARIANT if doc["summary"]["chern_kuiper_violations"] else EXIT_OK


def cmd_extend(cfg: RunConfig) -> int:
    d = _resolve(cfg)
    counts, box = _grid_and_box(cfg, d, 3)
    reports = AN.analyze_grid(d, counts, box, cfg.tol_rank, cfg.tol_flat, cfg.seed)
    inner = [r for r in reports if r.interior] or reports
    cases = sorted({r.case for r in inner})
    if len(cases) != 1 or cases[0] not in EXTENDABLE:
        raise CliError(
            f"{d.name} classifies as {', '.join(cases)} on the box; extend needs one of {', '.join(EXTENDABLE)}",
            EXIT_MISMATCH,
        )
    r0 = inner[0]
    xs = [r.x for r in inner[:3]]
    try:
        rep = EX.extend(d, xs, r0.case, r0.mu, r0.nu_g, r0.k, tol=cfg.tol_rank)
    except EX.ExtensionError as exc:
        raise CliError(f"extension failed: {exc}", EXIT_INVARIANT) from exc
    doc = RP.envelope("extend", cfg.to_dict(), extension=rep.to_dict(), passed=rep.passed)
    _emit(cfg, RP.dumps(doc) if cfg.format == "json" else RP.extend_text(doc))
    return EXIT_OK if rep.passed else EXIT_INVARIANT


def cmd_selftest(cfg: RunConfig) -> int:
    defs = _load_defs(cfg)
    if cfg.immersion is not None:
        defs = [d for d in defs if d.name == cfg.immersion]
        if not defs:
            raise CliError(f"unknown immersion {cfg.immersion!r}", EXIT_CONFIG)
    res = run_selftest(defs, cfg.tol_rank, cfg.tol_flat, cfg.seed)
    if cfg.format == "json":
        doc = RP.envelope(
            "selftest",
            cfg.to_dict(),
            passed=res.passed,
            families={
                f.name: {"worst": f.worst, "threshold": f.threshold, "passed": f.passed, "failures": f.failures}
                for f in res.families.values()
            },
        )
        _emit(cfg, RP.dumps(doc))
    else:
        lines = res.lines()
        lines.append("selftest passed" if res.passed else
                     "selftest FAILED: " + ", ".join(f.name for f in res.failing()))
        _emit(cfg, "\n".join(lines) + "\n")
    return EXIT_OK if res.passed else EXIT_INVARIANT


def cmd_catalog(cfg: RunConfig) -> int:
    defs = _load_defs(cfg)
    if cfg.format == "json":
        _emit(cfg, RP.dumps(C.manifest(defs)))
    else:
        lines = [f"{d.name:28s} n={d.n} p={d.p}  {(d.expected or {}).get('case', '-')}" for d in defs]
        _emit(cfg, "\n".join(lines) + "\n")
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "extend": cmd_extend,
    "selftest": cmd_selftest,
    "catalog": cmd_catalog,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--immersion", help="catalog or manifest entry name")
    common.add_argument("--manifest", help="JSON immersion manifest to use instead of the built-in catalog")
    common.add_argument("--grid", help="points per axis, e.g. 9x9 or 5")
    common.add_argument("--box", help="sampling box, e.g. --box=-1:1,0:2")
    common.add_argument("--tol-rank", type=float, default=DEFAULT_TOL)
    common.add_argument("--tol-flat", type=float, default=FLAT_TOL)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("json", "text"), help="json (default) or text; selftest defaults to text")

    parser = argparse.ArgumentParser(prog="nullitylab", description="Nullity analysis of Euclidean submanifolds.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="classify every point of a sample grid")
    sub.add_parser("extend", parents=[common], help="build and audit the flat ruled extension")
    sub.add_parser("selftest", parents=[common], help="run the invariant suite")
    sub.add_parser("catalog", parents=[common], help="list or export the immersion catalog")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = _config(args)
        return COMMANDS[args.command](cfg)
    except CliError as exc:
        print(f"nullitylab: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"nullitylab: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
