"""Acceptance criteria.  A PASS/FAIL line per criterion is printed in the terminal summary."""

import difflib
import hashlib
import itertools
import re
import shutil
import time
from collections import Counter, deque
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from mugie import cli
from mugie.fixtures import build_listing1, corpus, corpus_dir, mock_command
from mugie.genloop import BatchSpec, fingerprint, generate_mutants
from mugie.harness import ResultRow, ToolSpec, VerdictKind, check_batch, read_results, run_confirmed
from mugie.metrics import compute_measures, format_pct
from mugie.mutops import OPERATORS, OperatorKind, apply, enumerate_sites
from mugie.parser import parse, parse_file
from mugie.printer import print_program
from mugie.syntax import (
    ASSERT,
    Binary,
    ConstDecl,
    If,
    ProcedureDecl,
    Quantifier,
    Unary,
    normalize,
    walk,
)
from mugie.typecheck import check_diagnostics

acceptance = pytest.mark.acceptance


def _apply(p, site):
    return apply(p, site, trigger_mutation=True)


def _joint(res):
    return res.primary if res.companion is None else res.primary + res.companion


# -- 1 -----------------------------------------------------------------------


@acceptance(1, "round-trip: parse(print(parse(src))) == parse(src) on the corpus, < 5 s")
def test_round_trip_corpus():
    start = time.monotonic()
    paths = sorted(corpus_dir().glob("*.bpl"))
    assert len(paths) >= 20
    for path in paths:
        p = parse(path.read_text(encoding="utf-8"), path.name)
        text = print_program(p)
        again = parse(text, path.name)
        assert again == normalize(p), path.name
        assert print_program(again) == text, path.name
    assert time.monotonic() - start < 5.0


# -- 2 -----------------------------------------------------------------------


@acceptance(2, "every enumerated site of every operator yields a well-typed mutant, < 60 s")
def test_every_site_typechecks():
    start = time.monotonic()
    applied = Counter()
    for name, p in corpus():
        for op in OPERATORS:
            for site in enumerate_sites(p, op):
                res = _apply(p, site)
                diags = check_diagnostics(_joint(res))
                assert not diags, f"{name} {site}: {diags[0]}"
                applied[op] += 1
    assert all(applied[op] > 0 for op in OPERATORS), applied
    assert time.monotonic() - start < 60.0


# -- 3 -----------------------------------------------------------------------


def _draw_pool():
    """Corpus programs plus a few generated mutants of each, so draws see varied shapes."""
    programs = []
    for name, p in corpus():
        programs.append(p)
        pool = generate_mutants(p, BatchSpec.all_operators(6, rng_seed=11), name)
        programs.extend(m.primary for m in pool.mutants)
    triples = []
    for p in programs:
        for op in OPERATORS:
            triples.extend((p, s) for s in enumerate_sites(p, op))
    return triples


_TRIPLES = None


def _triples():
    global _TRIPLES
    if _TRIPLES is None:
        _TRIPLES = _draw_pool()
    return _TRIPLES


def _decl_texts(p):
    return Counter(print_program(type(p)((d,))) for d in p.declarations)


def _clauses(p, elem, kind):
    if kind in ("requires", "ensures"):
        d = next(d for d in p.declarations if isinstance(d, ProcedureDecl) and d.name == elem)
        return getattr(d.spec, kind)
    return _stmt(p, elem).invariants


def _body(p, ref):
    from mugie.mutops import bodies

    return p.declarations[dict(bodies(p))[ref]].body


def _block(p, path):
    ref, *steps = path.split("/")
    block = _body(p, ref)
    for idx, sel in zip(steps[::2], steps[1::2]):
        s = block.stmts[int(idx)]
        block = {"t": lambda: s.then, "e": lambda: s.else_, "b": lambda: s.body}[sel]()
    return block


def _stmt(p, path):
    head, idx = path.rsplit("/", 1)
    return _block(p, head).stmts[int(idx)]


def _conjuncts(e):
    if isinstance(e, Binary) and e.op == "&&":
        return _conjuncts(e.left) + _conjuncts(e.right)
    return [e]


def _trigger_count(p):
    return sum(len(q.triggers) for q in walk(p) if isinstance(q, Quantifier))


_G1_LINE = re.compile(r"^\s*(requires|ensures|invariant|assert) true;$")


def check_shape(p, site):
    res = _apply(p, site)
    q = res.primary
    op, args = site.op, site.args
    if op is OperatorKind.S1:
        assert _decl_texts(q) == _decl_texts(p)
    elif op is OperatorKind.S5:
        assert len(q.declarations) == len(p.declarations) + 1
    elif op is OperatorKind.S6:
        assert _decl_texts(q) + _decl_texts(res.companion) == _decl_texts(p)
    elif op is OperatorKind.L1:
        assert Counter(_body(q, args[0]).stmts) == Counter(_body(p, args[0]).stmts)
        assert len(q.declarations) == len(p.declarations)
    elif op is OperatorKind.L6:
        elem, kind = args[0], args[1]
        if kind == ASSERT:
            assert Counter(_block(q, elem).stmts) == Counter(_block(p, elem).stmts)
        else:
            assert Counter(_clauses(q, elem, kind)) == Counter(_clauses(p, elem, kind))
    elif op in (OperatorKind.L4, OperatorKind.L5):
        kind = "requires" if op is OperatorKind.L4 else "ensures"
        before, after = _clauses(p, args[0], kind), _clauses(q, args[0], kind)
        assert len(after) == len(before) - 1
        flat = lambda cs: Counter(c for cl in cs for c in _conjuncts(cl.expr))
        assert flat(after) == flat(before)
    elif op is OperatorKind.L8:
        old, new = _stmt(p, args[0]), _stmt(q, args[0])
        assert isinstance(new, If)
        assert new.cond == Unary("!", old.cond)
        assert new.then == old.else_ and new.else_ == old.then
    elif op is OperatorKind.G1:
        a, b = print_program(p).splitlines(), print_program(q).splitlines()
        ops = [o for o in difflib.SequenceMatcher(a=a, b=b, autojunk=False).get_opcodes() if o[0] != "equal"]
        assert len(ops) == 1 and ops[0][0] == "insert" and ops[0][4] - ops[0][3] == 1
        assert _G1_LINE.match(b[ops[0][3]])
        restored = "\n".join(b[: ops[0][3]] + b[ops[0][4]:]) + "\n"
        assert hashlib.sha256(restored.encode()).hexdigest() == fingerprint(p)
    elif op is OperatorKind.G2:
        assert _trigger_count(q) == _trigger_count(p) - 1


@acceptance(3, "operator shape invariants over >= 1000 random (program, operator, site) draws")
@settings(max_examples=1000, deadline=None, suppress_health_check=list(HealthCheck), derandomize=True)
@given(st.data())
def test_operator_shapes(data):
    triples = _triples()
    p, site = triples[data.draw(st.integers(0, len(triples) - 1))]
    check_shape(p, site)


# -- 4 -----------------------------------------------------------------------


@acceptance(4, "S1-only pool on listing1.bpl equals the 120 brute-force permutations, < 30 s")
def test_permutation_closure():
    start = time.monotonic()
    p = build_listing1()
    oracle = {fingerprint(type(p)(perm)) for perm in itertools.permutations(p.declarations)}
    assert len(oracle) == 120
    full = generate_mutants(p, BatchSpec({"S1": 1}, 119, max_attempts=100_000, rng_seed=1), "listing1.bpl")
    assert full.fingerprints() == oracle
    capped = generate_mutants(p, BatchSpec({"S1": 1}, 200, rng_seed=1), "listing1.bpl")
    assert len(capped) == 120
    assert capped.attempts == capped_limit(200)
    assert time.monotonic() - start < 30.0


def capped_limit(n):
    return BatchSpec({"S1": 1}, n).attempts_limit


# -- 5 -----------------------------------------------------------------------


@acceptance(5, "S5-only reachable pool of a program with 3 inline procedures has 2^3 = 8 members")
def test_s5_capacity():
    seed = parse_file(corpus_dir() / "three_inline.bpl")
    inline = [d for d in seed.declarations if isinstance(d, ProcedureDecl) and d.body is not None]
    assert len(inline) == 3
    seen = {fingerprint(seed)}
    queue = deque([seed])
    while queue:
        p = queue.popleft()
        for site in enumerate_sites(p, OperatorKind.S5):
            q = _apply(p, site).primary
            if fingerprint(q) not in seen:
                seen.add(fingerprint(q))
                queue.append(q)
    assert len(seen) == 8
    pool = generate_mutants(seed, BatchSpec.only("S5", 50, rng_seed=3), "three_inline.bpl")
    assert pool.fingerprints() == seen


# -- 6 -----------------------------------------------------------------------


def _tree(d: Path):
    return {f.name: f.read_bytes() for f in sorted(d.iterdir())}


@acceptance(6, "mutate is byte-for-byte deterministic per rng seed and varies across seeds")
def test_generation_determinism(tmp_path):
    seed = corpus_dir() / "listing1.bpl"
    reach = generate_mutants(parse_file(seed), BatchSpec.all_operators(201, max_attempts=20_000, rng_seed=5))
    assert len(reach.mutants) == 201

    def run(out, rng):
        argv = ["mutate", "--seed", str(seed), "--num", "100", "--rng-seed", str(rng), "--out", str(out)]
        assert cli.main(argv) == 0
        return _tree(out)

    a, b, c = run(tmp_path / "a", 42), run(tmp_path / "b", 42), run(tmp_path / "c", 43)
    assert sum(not n.endswith(".part2.bpl") for n in a) == 101
    assert a == b
    assert a != c


# -- 7 -----------------------------------------------------------------------


@acceptance(7, "harness classifies the five mock verifiers; timeout and flake confirmation")
def test_harness_classification(tmp_path):
    prog = tmp_path / "p.bpl"
    prog.write_text("const marked: int;\n")

    def verdict(behavior, timeout=10.0, confirm=1, **kw):
        tool = ToolSpec(behavior, mock_command(behavior, **kw), timeout, confirm)
        return run_confirmed(tool, [prog])

    assert verdict("always-verify").kind is VerdictKind.VERIFIED
    assert verdict("always-fail").kind is VerdictKind.FAILURE
    assert verdict("fail-on-marker", marker="marked", fail_mode="type-error").kind is VerdictKind.TOOL_ERROR

    slow = verdict("sleep-then-verify", timeout=1.0, sleep=5)
    assert slow.kind is VerdictKind.TIMEOUT
    assert 1.0 <= slow.wall_time_seconds <= 2.5

    log = tmp_path / "spawns.log"
    flaky = verdict("flaky-timeout", timeout=1.0, confirm=4, counter=tmp_path / "n", flakes=2, log=log)
    assert flaky.kind is VerdictKind.VERIFIED
    assert flaky.runs == 3
    assert len(log.read_text().splitlines()) == 3


# -- 8 -----------------------------------------------------------------------


def _rows(spec):
    """``spec``: seed -> (seed kind, [mutant kinds])."""
    rows = []
    for seed, (kind, muts) in spec.items():
        rows.append(ResultRow(seed, "SEED", "", "t", kind, 0.0, 0, "M_all"))
        rows.extend(ResultRow(seed, f"m{k}", "S1(0,1)", "t", m, 0.0, 0, "M_all") for k, m in enumerate(muts, 1))
    return rows


V, F, T, E = VerdictKind.VERIFIED, VerdictKind.FAILURE, VerdictKind.TIMEOUT, VerdictKind.TOOL_ERROR


@acceptance(8, "robustness measures match the hand-computed fixture; timeout mean <= failure mean")
def test_metrics_oracle():
    rows = _rows({
        "s1": (V, [F, T] + [V] * 8),
        "s2": (V, [V] * 10),
        "s3": (V, [V] * 10),
        "s4": (E, [F] * 10),
    })
    (s,) = compute_measures(rows)
    assert (s.n_pass, s.n_exists_fail) == (3, 1)
    assert format_pct(s.pct_exists_fail) == "33.33"
    assert format_pct(s.mean_pct_fail) == "6.67"
    assert format_pct(s.mean_pct_fail_given_exists) == "20.00"
    assert s.mean_pct_timeout == Fraction(10, 3)


@acceptance(8, "robustness measures match the hand-computed fixture; timeout mean <= failure mean")
@settings(max_examples=300, deadline=None)
@given(st.dictionaries(
    st.sampled_from([f"s{k}" for k in range(8)]),
    st.tuples(st.sampled_from([V, F, T, E]), st.lists(st.sampled_from([V, F, T, E]), max_size=12)),
    max_size=8,
))
def test_metrics_timeout_bound(spec):
    for s in compute_measures(_rows(spec)):
        if s.mean_pct_fail is not None:
            assert s.mean_pct_timeout <= s.mean_pct_fail
        assert s.n_exists_fail <= s.n_pass


# -- 9 -----------------------------------------------------------------------


def _marked_moved(path: Path) -> bool:
    """Oracle: ``marked`` is declared somewhere other than first in its file."""
    decls = parse_file(path).declarations
    return any(isinstance(d, ConstDecl) and "marked" in d.names for d in decls[1:])


@acceptance(9, "end-to-end campaign flags exactly the marked seed as brittle, < 2 min")
def test_campaign_end_to_end(tmp_path):
    start = time.monotonic()
    out = tmp_path / "out"
    cmd = mock_command("fail-on-marker", marker=r";\nconst marked")
    config = tmp_path / "campaign.toml"
    config.write_text(
        f"workers = 8\nout = {str(out)!r}\nrng_seed = 7\n"
        f"[[seeds]]\npath = {str(corpus_dir() / 'marked.bpl')!r}\ngroup = \"marked\"\n"
        f"[[seeds]]\npath = {str(corpus_dir() / 'clean.bpl')!r}\ngroup = \"clean\"\n"
        f"[[tools]]\nname = \"mock\"\ncommand = {cmd!r}\ntimeout = 20\nconfirm = 1\n"
    )
    assert cli.main(["campaign", str(config)]) == 0

    rows = read_results(out / "results.ndjson")
    batches = {r.batch for r in rows}
    assert len(batches) == 12
    for r in rows:
        if r.is_seed:
            assert r.kind is VerdictKind.VERIFIED
            continue
        stem = Path(r.seed).stem
        files = sorted((out / r.batch).glob(f"{stem}.{r.mutant_id}.*bpl"))
        assert r.kind is (VerdictKind.FAILURE if any(map(_marked_moved, files)) else VerdictKind.VERIFIED), r

    import csv

    report = list(csv.DictReader((out / "report.csv").open()))
    cell = {(d["group"], d["batch"]): d for d in report}
    assert cell[("marked", "M_all")]["n_exists_fail"] == "1"
    assert cell[("clean", "M_all")]["n_exists_fail"] == "0"
    assert all(d["n_exists_fail"] == "0" for d in report if d["group"] == "clean")
    assert time.monotonic() - start < 120.0


# -- 10 ----------------------------------------------------------------------


@acceptance(10, "optional: real Boogie classifies all 120 permutations of listing1.bpl without harness errors")
@pytest.mark.skipif(shutil.which("boogie") is None, reason="boogie is not on PATH")
def test_real_boogie(tmp_path, capsys):
    p = build_listing1()
    pool = generate_mutants(p, BatchSpec({"S1": 1}, 119, max_attempts=100_000, rng_seed=1), "listing1.bpl")
    from mugie.genloop import write_pool
    from mugie.harness import discover

    write_pool(pool, tmp_path, "listing1")
    rows = check_batch(ToolSpec("boogie", "boogie {files}", 20, 1), discover(tmp_path), workers=4)
    assert len(rows) == 120
    assert all(r.raw_exit != "launch-error" for r in rows)
    verified = sum(r.kind is VerdictKind.VERIFIED for r in rows)
    with capsys.disabled():
        print(f"\nboogie verified {verified} of 120 permutations")
