"""Weighted random mutant generation over a growing, deduplicated pool."""

from __future__ import annotations

import glob
import hashlib
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Mapping, Optional, Tuple, Union

from mugie.mutops import (
    OPERATORS,
    InvalidSite,
    OperatorKind,
    Site,
    apply,
    enumerate_sites,
    split_sites,
)
from mugie.printer import print_program, print_with_lineage
from mugie.rng import Rng
from mugie.syntax import Program, program_fingerprint
from mugie.typecheck import typecheck

log = logging.getLogger(__name__)

DEFAULT_ALL_MUTANTS = 100
DEFAULT_SINGLE_MUTANTS = 50
ATTEMPTS_PER_MUTANT = 10

HEADER_TAG = "mugie-lineage"
_HEADER_RE = re.compile(r"//\s*" + HEADER_TAG + r" seed=(\S*) rng=(\d+) ops=(.*)$")
_MUTANT_FILE_RE = re.compile(r"^(?P<stem>.+)\.m(?P<k>\d+)(?P<part2>\.part2)?\.bpl$")


class InvalidLineage(ValueError):
    pass


@dataclass(frozen=True)
class MutantRecord:
    seed_name: str
    lineage: Tuple[Site, ...] = ()
    rng_seed: int = 0
    fingerprint: Optional[str] = None

    def header(self) -> str:
        ops = ",".join(str(s) for s in self.lineage)
        return f"// {HEADER_TAG} seed={self.seed_name} rng={self.rng_seed} ops={ops}"

    @classmethod
    def from_header(cls, line: str) -> "MutantRecord":
        m = _HEADER_RE.match(line.strip())
        if m is None:
            raise ValueError(f"not a lineage header: {line!r}")
        return cls(m.group(1), tuple(split_sites(m.group(3))), int(m.group(2)))

    @property
    def ops(self) -> str:
        return ",".join(str(s) for s in self.lineage)


def read_header(text: str) -> Optional[MutantRecord]:
    first = text.split("\n", 1)[0]
    try:
        return MutantRecord.from_header(first)
    except ValueError:
        return None


def fingerprint(primary: Program, companion: Optional[Program] = None) -> str:
    if companion is None:
        return program_fingerprint(primary)
    text = print_program(primary) + "\0" + print_program(companion)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Mutant:
    """A pool member: the primary file and, after S6, its companion file."""

    primary: Program
    companion: Optional[Program]
    record: MutantRecord

    @property
    def fingerprint(self) -> str:
        return self.record.fingerprint

    @property
    def joint(self) -> Program:
        return self.primary if self.companion is None else self.primary + self.companion


@dataclass(frozen=True)
class BatchSpec:
    weights: Mapping[OperatorKind, float]
    num_mutants: int = DEFAULT_ALL_MUTANTS
    max_attempts: Optional[int] = None
    rng_seed: int = 0
    trigger_mutation: bool = False

    def __post_init__(self):
        object.__setattr__(self, "weights", {OperatorKind(k): v for k, v in self.weights.items()})

    @classmethod
    def all_operators(cls, num_mutants: int = DEFAULT_ALL_MUTANTS, **kw) -> "BatchSpec":
        """Equal positive weight for every operator except G2."""
        weights = {op: (0 if op.semantics_risky else 1) for op in OPERATORS}
        return cls(weights, num_mutants, **kw)

    @classmethod
    def only(cls, op, num_mutants: int = DEFAULT_SINGLE_MUTANTS, **kw) -> "BatchSpec":
        op = OperatorKind(op)
        if op.semantics_risky:
            kw.setdefault("trigger_mutation", True)
        return cls({op: 1}, num_mutants, **kw)

    @property
    def attempts_limit(self) -> int:
        if self.max_attempts is not None:
            return self.max_attempts
        return ATTEMPTS_PER_MUTANT * self.num_mutants

    def weight(self, op: OperatorKind) -> float:
        return self.weights.get(op, 0)

    def validate(self):
        if self.num_mutants < 0:
            raise ValueError("num_mutants must be non-negative")
        if self.max_attempts is not None and self.max_attempts < 0:
            raise ValueError("max_attempts must be non-negative")
        if not 0 <= self.rng_seed < 1 << 64:
            raise ValueError("rng_seed must be an unsigned 64-bit integer")
        if any(w < 0 for w in self.weights.values()):
            raise ValueError("weights must be non-negative")
        if self.num_mutants > 0 and not any(w > 0 for w in self.weights.values()):
            raise ValueError("at least one operator weight must be positive")
        for op, w in self.weights.items():
            if op.semantics_risky and w > 0 and not self.trigger_mutation:
                raise ValueError(f"{op.value} needs trigger mutation to be enabled explicitly")


class MutantPool:
    """Insertion-ordered set of distinct mutants keyed by fingerprint; member 0 is the seed."""

    def __init__(self, seed: Mutant):
        self.members: List[Mutant] = [seed]
        self._by_fp: Dict[str, Mutant] = {seed.fingerprint: seed}
        self.attempts = 0

    @property
    def seed(self) -> Mutant:
        return self.members[0]

    @property
    def mutants(self) -> List[Mutant]:
        return self.members[1:]

    def add(self, m: Mutant) -> bool:
        if m.fingerprint in self._by_fp:
            return False
        self._by_fp[m.fingerprint] = m
        self.members.append(m)
        return True

    def fingerprints(self) -> set:
        return set(self._by_fp)

    def __contains__(self, fp: str) -> bool:
        return fp in self._by_fp

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[Mutant]:
        return iter(self.members)


def _derive(parent: Mutant, site: Site, trigger_mutation: bool) -> Mutant:
    res = apply(parent.primary, site, trigger_mutation=trigger_mutation)
    companion = parent.companion
    if res.companion is not None:
        companion = res.companion if companion is None else companion + res.companion
    rec = parent.record
    lineage = rec.lineage + (site,)
    fp = fingerprint(res.primary, companion)
    return Mutant(res.primary, companion, MutantRecord(rec.seed_name, lineage, rec.rng_seed, fp))


def seed_mutant(seed: Program, seed_name: str, rng_seed: int = 0) -> Mutant:
    return Mutant(seed, None, MutantRecord(seed_name, (), rng_seed, fingerprint(seed)))


def generate_mutants(seed: Program, spec: BatchSpec, seed_name: str = "seed.bpl") -> MutantPool:
    """Grow a pool from ``seed`` until it holds ``spec.num_mutants`` mutants or attempts run out.

    Each attempt draws a pool member uniformly, an operator proportionally
    to its weight, and a site uniformly among the operator's sites on that
    member.  Inapplicable draws and duplicates still consume the attempt.
    """
    spec.validate()
    typecheck(seed)
    rng = Rng(spec.rng_seed)
    pool = MutantPool(seed_mutant(seed, seed_name, spec.rng_seed))
    weights = [spec.weight(op) for op in OPERATORS]
    limit = spec.attempts_limit
    while len(pool) < spec.num_mutants + 1 and pool.attempts < limit:
        pool.attempts += 1
        parent = pool.members[rng.below(len(pool))]
        op = OPERATORS[rng.weighted_index(weights)]
        sites = enumerate_sites(parent.primary, op)
        if not sites:
            continue
        site = sites[rng.below(len(sites))]
        pool.add(_derive(parent, site, spec.trigger_mutation))
    log.debug("%s: %d mutants after %d attempts", seed_name, len(pool) - 1, pool.attempts)
    return pool


def replay(seed: Program, rec: MutantRecord) -> Mutant:
    """Re-apply ``rec.lineage`` to ``seed``; the result must match ``rec.fingerprint`` when set."""
    m = seed_mutant(seed, rec.seed_name, rec.rng_seed)
    for k, site in enumerate(rec.lineage):
        try:
            m = _derive(m, site, trigger_mutation=True)
        except InvalidSite as exc:
            raise InvalidLineage(f"lineage step {k} ({site}) is invalid: {exc}") from exc
    if rec.fingerprint is not None and m.fingerprint != rec.fingerprint:
        raise InvalidLineage("replayed program does not match the recorded fingerprint")
    return m


# -- files -------------------------------------------------------------------


def mutant_paths(out_dir: Path, stem: str, k: int) -> Tuple[Path, Path]:
    return out_dir / f"{stem}.m{k}.bpl", out_dir / f"{stem}.m{k}.part2.bpl"


def parse_mutant_filename(name: str) -> Optional[Tuple[str, int, bool]]:
    """``(seed_stem, k, is_companion)`` for mutant file names, else None."""
    m = _MUTANT_FILE_RE.match(name)
    if m is None:
        return None
    return m.group("stem"), int(m.group("k")), m.group("part2") is not None


def write_pool(pool: MutantPool, out_dir: Union[str, Path], stem: Optional[str] = None) -> List[Path]:
    """Write the seed as ``<stem>.bpl`` and mutant k as ``<stem>.m<k>.bpl`` (+ ``.part2.bpl``)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = pool.seed
    stem = stem or Path(seed.record.seed_name).stem
    for old in out_dir.glob(f"{glob.escape(stem)}.m*.bpl"):
        parsed = parse_mutant_filename(old.name)
        if parsed is not None and parsed[0] == stem:
            old.unlink()
    written = []
    seed_path = out_dir / f"{stem}.bpl"
    seed_path.write_text(print_with_lineage(seed.primary, seed.record), encoding="utf-8")
    written.append(seed_path)
    for k, m in enumerate(pool.mutants, start=1):
        primary_path, companion_path = mutant_paths(out_dir, stem, k)
        primary_path.write_text(print_with_lineage(m.primary, m.record), encoding="utf-8")
        written.append(primary_path)
        if m.companion is not None:
            companion_path.write_text(print_with_lineage(m.companion, m.record), encoding="utf-8")
            written.append(companion_path)
    return written
