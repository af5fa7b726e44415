"""Command-line entry point: ``mugie mutate | check | report | campaign``.

Exit codes: 0 success, 1 nothing to do, 2 malformed input, 3 I/O failure,
4 verifier could not be launched.
"""

from __future__ import annotations

import argparse
import logging
import shutil
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from mugie import __version__
from mugie.diagnostics import IVLError
from mugie.genloop import (
    ATTEMPTS_PER_MUTANT,
    DEFAULT_ALL_MUTANTS,
    DEFAULT_SINGLE_MUTANTS,
    BatchSpec,
    MutantPool,
    generate_mutants,
    write_pool,
)
from mugie.harness import (
    DEFAULT_CONFIRM_RUNS,
    DEFAULT_FAILURES,
    DEFAULT_SUCCESS,
    DEFAULT_TIMEOUT,
    LAUNCH_ERROR_EXIT,
    CheckItem,
    ResultRow,
    ToolSpec,
    check_batch,
    discover,
    pool_items,
    read_results,
    write_results,
)
from mugie.metrics import compute_measures, read_group_map, render_report
from mugie.mutops import OPERATORS, OperatorKind
from mugie.parser import parse_file
from mugie.syntax import Program
from mugie.typecheck import typecheck

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("mugie")

EXIT_OK, EXIT_NOTHING, EXIT_INPUT, EXIT_IO, EXIT_LAUNCH = 0, 1, 2, 3, 4
RESULTS_NAME = "results.ndjson"
REPORT_NAME = "report.csv"


class UsageError(ValueError):
    """Malformed command-line values or configuration."""


def parse_weights(text: str) -> Dict[OperatorKind, float]:
    """``"S1=1,L6=2.5"`` (``:`` also accepted as separator)."""
    weights = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        name, sep, value = part.replace(":", "=").partition("=")
        if not sep:
            raise UsageError(f"weight {part!r} is not of the form OP=W")
        try:
            weights[OperatorKind(name.strip().upper())] = float(value)
        except ValueError:
            raise UsageError(f"bad weight {part!r}") from None
    return weights


def load_seed(path: Path) -> Program:
    return typecheck(parse_file(path))


def _print_diagnostics(exc: IVLError):
    for d in exc.diagnostics:
        print(d, file=sys.stderr)


# -- mutate ------------------------------------------------------------------


def cmd_mutate(args) -> int:
    seed_path = Path(args.seed)
    try:
        seed = load_seed(seed_path)
    except IVLError as exc:
        _print_diagnostics(exc)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        if args.only:
            spec = BatchSpec.only(
                args.only,
                DEFAULT_SINGLE_MUTANTS if args.num is None else args.num,
                max_attempts=args.max_attempts,
                rng_seed=args.rng_seed,
            )
        else:
            weights = parse_weights(args.weights) if args.weights else None
            num = DEFAULT_ALL_MUTANTS if args.num is None else args.num
            kw = dict(max_attempts=args.max_attempts, rng_seed=args.rng_seed, trigger_mutation=args.mutate_triggers)
            spec = BatchSpec(weights, num, **kw) if weights else BatchSpec.all_operators(num, **kw)
        spec.validate()
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out = Path(args.out)
    stem = seed_path.stem
    if (out / f"{stem}.bpl").resolve() == seed_path.resolve():
        print("error: --out would overwrite the seed file; choose another directory", file=sys.stderr)
        return EXIT_IO
    pool = generate_mutants(seed, spec, seed_path.name)
    try:
        write_pool(pool, out, stem)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"requested {spec.num_mutants}, generated {len(pool.mutants)}, attempts {pool.attempts}/{spec.attempts_limit}")
    return EXIT_OK


# -- check -------------------------------------------------------------------


def _tool_from_args(args) -> ToolSpec:
    return ToolSpec(
        name=args.name or Path(args.tool.split()[0]).name if args.tool.strip() else "tool",
        command_template=args.tool,
        timeout_seconds=args.timeout,
        timeout_confirm_runs=args.confirm,
        success_pattern=args.success_pattern or DEFAULT_SUCCESS,
        failure_patterns=tuple(args.failure_pattern) if args.failure_pattern else DEFAULT_FAILURES,
    )


def _launchable(tool: ToolSpec) -> bool:
    exe = tool.argv([])[0] if tool.argv([]) else ""
    return bool(exe) and shutil.which(exe) is not None


def cmd_check(args) -> int:
    try:
        tool = _tool_from_args(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if not _launchable(tool):
        print(f"error: cannot launch verifier {tool.argv([])[:1]}", file=sys.stderr)
        return EXIT_LAUNCH
    try:
        items = discover(args.dir)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if not items:
        print(f"error: no programs found in {args.dir}", file=sys.stderr)
        return EXIT_NOTHING
    rows = check_batch(tool, items, workers=args.workers, batch=args.batch)
    out = Path(args.out) if args.out else Path(args.dir) / RESULTS_NAME
    try:
        write_results(rows, out)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    counts: Dict[str, int] = {}
    for r in rows:
        counts[r.kind.value] = counts.get(r.kind.value, 0) + 1
    print(f"{len(rows)} rows -> {out}: " + ", ".join(f"{k} {v}" for k, v in sorted(counts.items())))
    if any(r.raw_exit == LAUNCH_ERROR_EXIT for r in rows):
        return EXIT_LAUNCH
    return EXIT_OK


# -- report ------------------------------------------------------------------


def cmd_report(args) -> int:
    try:
        rows = read_results(args.results)
        groups = read_group_map(args.group_map) if args.group_map else {}
        text = render_report(compute_measures(rows, groups), args.format)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return _emit(text, args.out)


def _emit(text: str, out: Optional[str]) -> int:
    if out is None:
        sys.stdout.write(text)
        return EXIT_OK
    try:
        Path(out).write_text(text, encoding="utf-8")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


# -- campaign ----------------------------------------------------------------


@dataclass(frozen=True)
class SeedEntry:
    path: Path
    group: Optional[str] = None


@dataclass(frozen=True)
class BatchEntry:
    name: str
    spec: BatchSpec


@dataclass
class CampaignConfig:
    seeds: List[SeedEntry]
    tools: List[ToolSpec]
    batches: List[BatchEntry]
    out: Path = Path("campaign-out")
    workers: int = 1
    rng_seed: int = 0
    groups: Dict[str, str] = field(default_factory=dict)


def default_batches(rng_seed: int = 0) -> List[BatchEntry]:
    """``M_all`` (every operator but G2, N=100) and one single-operator batch per operator (N=50)."""
    out = [BatchEntry("M_all", BatchSpec.all_operators(DEFAULT_ALL_MUTANTS, rng_seed=rng_seed))]
    for op in OPERATORS:
        out.append(BatchEntry(f"M_{op.value}", BatchSpec.only(op, DEFAULT_SINGLE_MUTANTS, rng_seed=rng_seed)))
    return out


def _table(d, key, kind, default):
    value = d.get(key, default)
    if not isinstance(value, kind):
        raise UsageError(f"config key {key!r} must be {kind.__name__}")
    return value


def load_config(path) -> CampaignConfig:
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise UsageError(f"{path}: {exc}") from None
    rng_seed = _table(raw, "rng_seed", int, 0)
    seeds = []
    for s in _table(raw, "seeds", list, []):
        if "path" not in s:
            raise UsageError("every [[seeds]] entry needs a path")
        seeds.append(SeedEntry(Path(s["path"]), s.get("group")))
    tools = []
    for t in _table(raw, "tools", list, []):
        try:
            tools.append(
                ToolSpec(
                    name=t["name"],
                    command_template=t["command"],
                    timeout_seconds=float(t.get("timeout", DEFAULT_TIMEOUT)),
                    timeout_confirm_runs=int(t.get("confirm", DEFAULT_CONFIRM_RUNS)),
                    success_pattern=t.get("success_pattern", DEFAULT_SUCCESS),
                    failure_patterns=tuple(t.get("failure_patterns", DEFAULT_FAILURES)),
                )
            )
        except KeyError as exc:
            raise UsageError(f"tool entry lacks {exc}") from None
        except ValueError as exc:
            raise UsageError(f"tool {t.get('name')!r}: {exc}") from None
    batches = []
    for b in _table(raw, "batches", list, []):
        try:
            name = b["name"]
            weights = {OperatorKind(k): float(v) for k, v in b["weights"].items()}
            num = int(b.get("num_mutants", DEFAULT_ALL_MUTANTS))
            max_attempts = b.get("max_attempts")
            spec = BatchSpec(
                weights,
                num,
                max_attempts=None if max_attempts is None else int(max_attempts),
                rng_seed=int(b.get("rng_seed", rng_seed)),
                trigger_mutation=bool(b.get("trigger_mutation", False)),
            )
            spec.validate()
        except KeyError as exc:
            raise UsageError(f"batch entry lacks {exc}") from None
        except (ValueError, AttributeError) as exc:
            raise UsageError(f"batch {b.get('name')!r}: {exc}") from None
        batches.append(BatchEntry(name, spec))
    names = [b.name for b in batches]
    if len(set(names)) != len(names):
        raise UsageError("batch names must be unique")
    stems = [s.path.stem for s in seeds]
    if len(set(stems)) != len(stems):
        raise UsageError("seed file names must be unique")
    return CampaignConfig(
        seeds=seeds,
        tools=tools,
        batches=batches or default_batches(rng_seed),
        out=Path(_table(raw, "out", str, "campaign-out")),
        workers=_table(raw, "workers", int, 1),
        rng_seed=rng_seed,
        groups={s.path.name: s.group for s in seeds if s.group},
    )


def _generate(job: Tuple[Program, BatchSpec, str]) -> MutantPool:
    seed, spec, name = job
    return generate_mutants(seed, spec, name)


def run_campaign(cfg: CampaignConfig) -> Tuple[int, List[ResultRow]]:
    """Generate every (seed, batch) pool, check each with every tool, and report.

    Returns the exit status and the result rows.
    """
    loaded: List[Tuple[SeedEntry, Program]] = []
    for s in cfg.seeds:
        try:
            loaded.append((s, load_seed(s.path)))
        except (IVLError, OSError) as exc:
            log.error("skipping seed %s: %s", s.path, exc)
    if not loaded:
        print("error: no usable seeds", file=sys.stderr)
        return EXIT_NOTHING, []

    jobs = [(prog, b.spec, s.path.name) for b in cfg.batches for s, prog in loaded]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            pools = list(ex.map(_generate, jobs))
    else:
        pools = [_generate(j) for j in jobs]

    items: List[CheckItem] = []
    it = iter(pools)
    for b in cfg.batches:
        batch_dir = cfg.out / b.name
        for s, _ in loaded:
            pool = next(it)
            write_pool(pool, batch_dir, s.path.stem)
            items.extend(pool_items(pool, batch_dir, s.path.stem, b.name))
            log.info("%s/%s: %d mutants", b.name, s.path.name, len(pool.mutants))

    rows: List[ResultRow] = []
    for tool in cfg.tools:
        rows.extend(check_batch(tool, items, workers=cfg.workers))
    write_results(rows, cfg.out / RESULTS_NAME)
    report = render_report(compute_measures(rows, cfg.groups), "csv")
    (cfg.out / REPORT_NAME).write_text(report, encoding="utf-8")
    status = EXIT_LAUNCH if any(r.raw_exit == LAUNCH_ERROR_EXIT for r in rows) else EXIT_OK
    return status, rows


def cmd_campaign(args) -> int:
    try:
        cfg = load_config(args.config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.out:
        cfg.out = Path(args.out)
    if args.workers:
        cfg.workers = args.workers
    if not cfg.seeds:
        print("error: the configuration lists no seeds", file=sys.stderr)
        return EXIT_NOTHING
    if not cfg.tools:
        print("error: the configuration lists no tools", file=sys.stderr)
        return EXIT_NOTHING
    try:
        status, rows = run_campaign(cfg)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if rows:
        print(f"{len(rows)} rows -> {cfg.out / RESULTS_NAME}; report -> {cfg.out / REPORT_NAME}")
    return status


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mugie", description="Mutation-based robustness testing for Boogie verifiers.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    m = sub.add_parser("mutate", help="generate mutants of one seed")
    m.add_argument("--seed", required=True)
    m.add_argument("--num", type=int, help=f"mutants to generate (default {DEFAULT_ALL_MUTANTS}, {DEFAULT_SINGLE_MUTANTS} with --only)")
    m.add_argument("--rng-seed", type=int, default=0)
    m.add_argument("--out", required=True)
    m.add_argument("--only", type=str.upper, choices=[op.value for op in OPERATORS], help="single-operator batch")
    m.add_argument("--weights", help="operator weights, e.g. S1=1,L6=2")
    m.add_argument("--max-attempts", type=int, help=f"attempt budget (default {ATTEMPTS_PER_MUTANT} x num)")
    m.add_argument("--mutate-triggers", action="store_true", help="allow G2 (trigger removal)")
    m.set_defaults(func=cmd_mutate)

    c = sub.add_parser("check", help="run a verifier on a directory of seeds and mutants")
    c.add_argument("--dir", required=True)
    c.add_argument("--tool", required=True, help='command template, e.g. "boogie {files}"')
    c.add_argument("--name", help="tool name recorded in results")
    c.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    c.add_argument("--confirm", type=int, default=DEFAULT_CONFIRM_RUNS)
    c.add_argument("--batch", default="")
    c.add_argument("--out", help=f"results file (default DIR/{RESULTS_NAME})")
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--success-pattern")
    c.add_argument("--failure-pattern", action="append")
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("report", help="summarize a results file")
    r.add_argument("--results", required=True)
    r.add_argument("--group-map")
    r.add_argument("--format", choices=["csv", "json", "text"], default="csv")
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)

    k = sub.add_parser("campaign", help="generate, check and report from a TOML config")
    k.add_argument("config")
    k.add_argument("--out", help="override the output directory")
    k.add_argument("--workers", type=int)
    k.set_defaults(func=cmd_campaign)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
