"""Robustness measures over campaign result rows.

For each (group, tool, batch) with passing seeds S (seed row Verified) and,
for a seed s, its mutant rows M(s) and failing mutants F(s) (kind other
than Verified):

* ``n_pass = |S|`` and ``n_exists_fail = |{s in S : F(s) nonempty}|``
* ``pct_exists_fail = 100 * n_exists_fail / n_pass``
* ``mean_pct_fail`` is the mean over S of ``100 * |F(s)| / |M(s)|``
* ``mean_pct_timeout`` is the same with timeouts only
* ``mean_pct_fail_given_exists`` is ``mean_pct_fail`` restricted to seeds with F(s) nonempty

Seeds in S without any mutant rows are left out of the means and counted
in ``n_pass_without_mutants``.  Empty means are ``None`` (rendered ``n/a``).
"""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

from mugie.harness import ResultRow, VerdictKind

DEFAULT_GROUP = "all"
NA = "n/a"
COLUMNS = (
    "group",
    "tool",
    "batch",
    "n_pass",
    "n_exists_fail",
    "pct_exists_fail",
    "mean_pct_fail",
    "mean_pct_timeout",
    "mean_pct_fail_given_exists",
)
_PERCENT_COLUMNS = COLUMNS[5:]


class MalformedRows(ValueError):
    pass


@dataclass(frozen=True)
class MeasureSummary:
    group: str
    tool: str
    batch: str
    n_pass: int
    n_exists_fail: int
    pct_exists_fail: Optional[Fraction]
    mean_pct_fail: Optional[Fraction]
    mean_pct_timeout: Optional[Fraction]
    mean_pct_fail_given_exists: Optional[Fraction]
    n_pass_without_mutants: int = 0

    def rendered(self) -> Dict[str, Union[str, int]]:
        out: Dict[str, Union[str, int]] = {c: getattr(self, c) for c in COLUMNS[:5]}
        for c in _PERCENT_COLUMNS:
            out[c] = format_pct(getattr(self, c))
        return out


def format_pct(value: Optional[Fraction]) -> str:
    if value is None:
        return NA
    d = Decimal(value.numerator) / Decimal(value.denominator)
    return str(d.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def _mean(values: List[Fraction]) -> Optional[Fraction]:
    return sum(values, Fraction(0)) / len(values) if values else None


def _pct(part: int, whole: int) -> Fraction:
    return Fraction(100 * part, whole)


def compute_measures(rows: Iterable[ResultRow], group_map: Optional[Mapping[str, str]] = None) -> List[MeasureSummary]:
    group_map = group_map or {}
    seed_rows: Dict[Tuple[str, str, str], ResultRow] = {}
    mutant_rows: Dict[Tuple[str, str, str], Dict[str, ResultRow]] = defaultdict(dict)
    for r in rows:
        key = (r.tool, r.batch, r.seed)
        if r.is_seed:
            if key in seed_rows:
                raise MalformedRows(f"duplicate seed row for {key}")
            seed_rows[key] = r
        else:
            if r.mutant_id in mutant_rows[key]:
                raise MalformedRows(f"duplicate row for {key} {r.mutant_id}")
            mutant_rows[key][r.mutant_id] = r
    for key in mutant_rows:
        if key not in seed_rows:
            tool, batch, seed = key
            raise MalformedRows(f"mutant rows of seed {seed!r} (tool {tool!r}, batch {batch!r}) lack a seed row")

    by_cell: Dict[Tuple[str, str, str], List[str]] = defaultdict(list)
    for tool, batch, seed in seed_rows:
        by_cell[(group_map.get(seed, DEFAULT_GROUP), tool, batch)].append(seed)

    out = []
    for (group, tool, batch), seeds in sorted(by_cell.items()):
        passing = [s for s in seeds if seed_rows[(tool, batch, s)].kind is VerdictKind.VERIFIED]
        fail_pcts, timeout_pcts, exists_pcts = [], [], []
        n_exists = 0
        empty = 0
        for s in passing:
            muts = list(mutant_rows.get((tool, batch, s), {}).values())
            if not muts:
                empty += 1
                continue
            n_fail = sum(1 for m in muts if m.kind is not VerdictKind.VERIFIED)
            n_timeout = sum(1 for m in muts if m.kind is VerdictKind.TIMEOUT)
            fail_pcts.append(_pct(n_fail, len(muts)))
            timeout_pcts.append(_pct(n_timeout, len(muts)))
            if n_fail:
                n_exists += 1
                exists_pcts.append(_pct(n_fail, len(muts)))
        out.append(
            MeasureSummary(
                group=group,
                tool=tool,
                batch=batch,
                n_pass=len(passing),
                n_exists_fail=n_exists,
                pct_exists_fail=_pct(n_exists, len(passing)) if passing else None,
                mean_pct_fail=_mean(fail_pcts),
                mean_pct_timeout=_mean(timeout_pcts),
                mean_pct_fail_given_exists=_mean(exists_pcts),
                n_pass_without_mutants=empty,
            )
        )
    return out


def render_report(summaries: Iterable[MeasureSummary], fmt: str = "csv") -> str:
    data = [s.rendered() for s in summaries]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(data)
        return buf.getvalue()
    if fmt == "json":
        return json.dumps(data, indent=2) + "\n"
    if fmt == "text":
        cells = [list(COLUMNS)] + [[str(d[c]) for c in COLUMNS] for d in data]
        widths = [max(len(row[i]) for row in cells) for i in range(len(COLUMNS))]
        lines = []
        for n, row in enumerate(cells):
            lines.append("  ".join(v.ljust(w) if i < 3 else v.rjust(w) for i, (v, w) in enumerate(zip(row, widths))).rstrip())
            if n == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def read_group_map(path: Union[str, Path]) -> Dict[str, str]:
    """Lines of ``<seed> <group>``; blank lines and ``#`` comments are ignored."""
    groups = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{n}: expected '<seed> <group>'")
        groups[parts[0]] = parts[1]
    return groups
