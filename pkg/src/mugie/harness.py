"""Run an external verifier on seed and mutant files and classify the outcome.

The command template is tokenized with :mod:`shlex`; the single ``{files}``
token is replaced by the file paths in order, so a two-file mutant is passed
as two arguments.  Each run is started in its own session so that a timeout
kills the whole process group, including solver subprocesses.
"""

from __future__ import annotations

import json
import logging
import os
import re
import shlex
import signal
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from mugie.genloop import MutantPool, MutantRecord, mutant_paths, parse_mutant_filename, read_header

log = logging.getLogger(__name__)

FILES = "{files}"
SEED_ID = "SEED"
DEFAULT_TIMEOUT = 20.0
DEFAULT_CONFIRM_RUNS = 10
DEFAULT_SUCCESS = r"(\d+) verified, 0 errors?"
DEFAULT_FAILURES = (r", (\d+) errors?", r"postcondition .* not hold")

TIMEOUT_EXIT = "timeout"
LAUNCH_ERROR_EXIT = "launch-error"


class VerdictKind(str, Enum):
    VERIFIED = "Verified"
    FAILURE = "VerificationFailure"
    TOOL_ERROR = "ToolError"
    TIMEOUT = "Timeout"


class LaunchError(OSError):
    """The tool could not be started at all."""


@dataclass(frozen=True)
class ToolSpec:
    name: str
    command_template: str
    timeout_seconds: float = DEFAULT_TIMEOUT
    timeout_confirm_runs: int = DEFAULT_CONFIRM_RUNS
    success_pattern: str = DEFAULT_SUCCESS
    failure_patterns: Tuple[str, ...] = DEFAULT_FAILURES

    def __post_init__(self):
        object.__setattr__(self, "failure_patterns", tuple(self.failure_patterns))
        if self.command_template.count(FILES) != 1:
            raise ValueError(f"command template must contain {FILES} exactly once")
        if FILES not in shlex.split(self.command_template):
            raise ValueError(f"{FILES} must be a separate word in the command template")
        if not self.timeout_seconds > 0:
            raise ValueError("timeout_seconds must be positive")
        if self.timeout_confirm_runs < 1:
            raise ValueError("timeout_confirm_runs must be at least 1")
        for pat in (self.success_pattern,) + self.failure_patterns:
            re.compile(pat)

    def argv(self, files: Sequence[Union[str, Path]]) -> List[str]:
        out: List[str] = []
        for word in shlex.split(self.command_template):
            if word == FILES:
                out.extend(str(f) for f in files)
            else:
                out.append(word)
        return out


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    wall_time_seconds: float
    raw_exit: Union[int, str]
    captured_output: str = ""
    runs: int = 1


def _failure_matches(pattern: str, output: str) -> bool:
    for m in re.finditer(pattern, output):
        counts = [g for g in m.groups() if g is not None and g.isdigit()]
        if not counts or any(int(c) > 0 for c in counts):
            return True
    return False


def classify(tool: ToolSpec, exit_code: Union[int, str], output: str) -> VerdictKind:
    """Total decision table over (exit status, output)."""
    if exit_code == TIMEOUT_EXIT:
        return VerdictKind.TIMEOUT
    if exit_code == LAUNCH_ERROR_EXIT:
        return VerdictKind.TOOL_ERROR
    success = re.search(tool.success_pattern, output) is not None
    if success and exit_code == 0:
        return VerdictKind.VERIFIED
    if not success and any(_failure_matches(p, output) for p in tool.failure_patterns):
        return VerdictKind.FAILURE
    return VerdictKind.TOOL_ERROR


def _kill_group(proc: subprocess.Popen):
    try:
        os.killpg(proc.pid, signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        proc.kill()


def run_one(tool: ToolSpec, files: Sequence[Union[str, Path]]) -> Verdict:
    for f in files:
        if not os.access(f, os.R_OK):
            raise FileNotFoundError(f"cannot read {f}")
    argv = tool.argv(files)
    start = time.monotonic()
    try:
        proc = subprocess.Popen(
            argv,
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
            stdin=subprocess.DEVNULL,
            start_new_session=True,
        )
    except OSError as exc:
        raise LaunchError(f"cannot launch {argv[0]!r}: {exc}") from exc
    try:
        out, _ = proc.communicate(timeout=tool.timeout_seconds)
        exit_code: Union[int, str] = proc.returncode
    except subprocess.TimeoutExpired:
        _kill_group(proc)
        out, _ = proc.communicate()
        exit_code = TIMEOUT_EXIT
    elapsed = time.monotonic() - start
    text = out.decode("utf-8", errors="replace")
    return Verdict(classify(tool, exit_code, text), elapsed, exit_code, text)


def run_confirmed(tool: ToolSpec, files: Sequence[Union[str, Path]]) -> Verdict:
    """Re-run on timeout; report Timeout only when every one of the confirmation runs times out."""
    for k in range(1, tool.timeout_confirm_runs + 1):
        v = run_one(tool, files)
        if v.kind is not VerdictKind.TIMEOUT:
            return Verdict(v.kind, v.wall_time_seconds, v.raw_exit, v.captured_output, k)
    return Verdict(v.kind, v.wall_time_seconds, v.raw_exit, v.captured_output, tool.timeout_confirm_runs)


# -- batches -----------------------------------------------------------------


@dataclass(frozen=True)
class CheckItem:
    """One program to verify: a seed (``mutant_id == SEED``) or a mutant with its file(s)."""

    seed: str
    mutant_id: str
    files: Tuple[Path, ...]
    lineage: str = ""
    batch: str = ""


@dataclass(frozen=True)
class ResultRow:
    seed: str
    mutant_id: str
    lineage: str
    tool: str
    kind: VerdictKind
    wall_time_seconds: float = field(compare=False)
    raw_exit: Union[int, str]
    batch: str = ""
    captured_output: str = field(default="", compare=False)

    def to_json(self) -> Dict:
        return {
            "seed": self.seed,
            "mutant_id": self.mutant_id,
            "lineage": self.lineage,
            "tool": self.tool,
            "kind": self.kind.value,
            "wall_time_seconds": round(self.wall_time_seconds, 6),
            "raw_exit": self.raw_exit,
            "batch": self.batch,
        }

    @classmethod
    def from_json(cls, d: Dict) -> "ResultRow":
        missing = {"seed", "mutant_id", "tool", "kind"} - set(d)
        if missing:
            raise ValueError(f"result row lacks {sorted(missing)}")
        return cls(
            seed=str(d["seed"]),
            mutant_id=str(d["mutant_id"]),
            lineage=str(d.get("lineage", "")),
            tool=str(d["tool"]),
            kind=VerdictKind(d["kind"]),
            wall_time_seconds=float(d.get("wall_time_seconds", 0.0)),
            raw_exit=d.get("raw_exit", 0),
            batch=str(d.get("batch", "")),
        )

    @property
    def is_seed(self) -> bool:
        return self.mutant_id == SEED_ID


def _row_key(r: ResultRow):
    digits = r.mutant_id[1:]
    mid = -1 if r.is_seed else int(digits) if digits.isdigit() else 1 << 62
    return (r.batch, r.tool, r.seed, mid, r.mutant_id)


def _check_one(tool: ToolSpec, item: CheckItem, batch: Optional[str]) -> ResultRow:
    try:
        v = run_confirmed(tool, item.files)
    except LaunchError as exc:
        log.error("%s %s: %s", item.seed, item.mutant_id, exc)
        v = Verdict(VerdictKind.TOOL_ERROR, 0.0, LAUNCH_ERROR_EXIT, str(exc))
    return ResultRow(item.seed, item.mutant_id, item.lineage, tool.name, v.kind,
                     v.wall_time_seconds, v.raw_exit, item.batch if batch is None else batch, v.captured_output)


def check_batch(
    tool: ToolSpec, items: Iterable[CheckItem], workers: int = 1, batch: Optional[str] = None
) -> List[ResultRow]:
    """One row per item, sorted; launch failures become ToolError rows with ``raw_exit == 'launch-error'``.

    ``batch``, when given, overrides the batch label carried by each item.
    """
    items = list(items)
    if workers <= 1:
        rows = [_check_one(tool, it, batch) for it in items]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda it: _check_one(tool, it, batch), items))
    return sorted(rows, key=_row_key)


def discover(directory: Union[str, Path]) -> List[CheckItem]:
    """Find seeds and mutants written by :func:`mugie.genloop.write_pool` in ``directory``."""
    directory = Path(directory)
    seeds: Dict[str, CheckItem] = {}
    mutants: Dict[Tuple[str, int], List[Path]] = {}
    for path in sorted(directory.glob("*.bpl")):
        parsed = parse_mutant_filename(path.name)
        if parsed is not None:
            stem, k, part2 = parsed
            files = mutants.setdefault((stem, k), [None, None])
            files[1 if part2 else 0] = path
            continue
        rec = _header(path)
        seeds[path.stem] = CheckItem(rec.seed_name if rec else path.name, SEED_ID, (path,), "")
    items = list(seeds.values())
    for (stem, k), (primary, companion) in sorted(mutants.items()):
        if primary is None:
            raise ValueError(f"companion file without primary for {stem}.m{k}")
        rec = _header(primary)
        if rec is None:
            raise ValueError(f"{primary} lacks a lineage header")
        if stem not in seeds:
            raise ValueError(f"mutant {primary.name} has no seed file {stem}.bpl")
        files = (primary,) if companion is None else (primary, companion)
        items.append(CheckItem(seeds[stem].seed, f"m{k}", files, rec.ops))
    return items


def pool_items(pool: MutantPool, out_dir: Union[str, Path], stem: str, batch: str = "") -> List[CheckItem]:
    """Items for a pool already written with ``write_pool(pool, out_dir, stem)``."""
    out_dir = Path(out_dir)
    seed_name = pool.seed.record.seed_name
    items = [CheckItem(seed_name, SEED_ID, (out_dir / f"{stem}.bpl",), "", batch)]
    for k, m in enumerate(pool.mutants, start=1):
        primary, companion = mutant_paths(out_dir, stem, k)
        files = (primary,) if m.companion is None else (primary, companion)
        items.append(CheckItem(seed_name, f"m{k}", files, m.record.ops, batch))
    return items


def _header(path: Path) -> Optional[MutantRecord]:
    with open(path, encoding="utf-8") as fh:
        return read_header(fh.readline())


def write_results(rows: Iterable[ResultRow], path: Union[str, Path], append: bool = False):
    with open(path, "a" if append else "w", encoding="utf-8") as fh:
        for r in rows:
            fh.write(json.dumps(r.to_json(), sort_keys=True) + "\n")


def read_results(path: Union[str, Path]) -> List[ResultRow]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rows.append(ResultRow.from_json(json.loads(line)))
            except (ValueError, TypeError, AttributeError) as exc:
                raise ValueError(f"{path}:{n}: malformed result row: {exc}") from exc
    return rows
