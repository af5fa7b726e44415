import csv
import io
import json
import random
from fractions import Fraction

import pytest

from mugie.harness import ResultRow, VerdictKind, read_results, write_results
from mugie.metrics import COLUMNS, MalformedRows, MeasureSummary, compute_measures, format_pct, read_group_map, render_report

V, F, T, E = VerdictKind.VERIFIED, VerdictKind.FAILURE, VerdictKind.TIMEOUT, VerdictKind.TOOL_ERROR


def rows_for(spec, tool="t", batch="M_all"):
    out = []
    for seed, (kind, muts) in spec.items():
        out.append(ResultRow(seed, "SEED", "", tool, kind, 0.0, 0, batch))
        out.extend(ResultRow(seed, f"m{k}", "", tool, m, 0.0, 0, batch) for k, m in enumerate(muts, 1))
    return out


def test_hand_computed_example():
    # passing seeds s1, s2: s1 has 1 of 4 failing (a timeout), s2 has 2 of 2 failing
    (s,) = compute_measures(rows_for({"s1": (V, [T, V, V, V]), "s2": (V, [F, E]), "s3": (F, [F])}))
    assert (s.n_pass, s.n_exists_fail) == (2, 2)
    assert s.pct_exists_fail == 100
    assert s.mean_pct_fail == Fraction(25 + 100, 2)
    assert s.mean_pct_timeout == Fraction(25, 2)
    assert s.mean_pct_fail_given_exists == Fraction(125, 2)


def test_no_passing_seeds_gives_na():
    (s,) = compute_measures(rows_for({"s1": (F, [V, V])}))
    assert s.n_pass == 0
    assert s.pct_exists_fail is None and s.mean_pct_fail is None and s.mean_pct_fail_given_exists is None
    assert s.rendered()["mean_pct_fail"] == "n/a"


def test_all_mutants_verified():
    (s,) = compute_measures(rows_for({"s1": (V, [V] * 5), "s2": (V, [V] * 3)}))
    assert s.n_exists_fail == 0 and s.mean_pct_fail == 0 and s.mean_pct_fail_given_exists is None


def test_seed_without_mutants_excluded_from_means():
    (s,) = compute_measures(rows_for({"s1": (V, []), "s2": (V, [F, V])}))
    assert s.n_pass == 2 and s.n_pass_without_mutants == 1
    assert s.mean_pct_fail == 50


def test_groups_tools_batches_are_separate():
    rows = rows_for({"a": (V, [F]), "b": (V, [V])}) + rows_for({"a": (V, [V])}, tool="u") + \
        rows_for({"a": (V, [V])}, batch="M_S1")
    out = compute_measures(rows, {"a": "A"})
    keys = [(s.group, s.tool, s.batch) for s in out]
    assert keys == sorted(keys) == [("A", "t", "M_S1"), ("A", "t", "M_all"), ("A", "u", "M_all"), ("all", "t", "M_all")]


def test_mutant_without_seed_row():
    rows = [ResultRow("s", "m1", "", "t", V, 0.0, 0, "b")]
    with pytest.raises(MalformedRows):
        compute_measures(rows)


def test_duplicate_rows_rejected():
    rows = rows_for({"s": (V, [V])})
    with pytest.raises(MalformedRows):
        compute_measures(rows + rows[:1])


def test_permutation_invariance_and_serialization(tmp_path):
    rng = random.Random(0)
    spec = {f"s{k}": (rng.choice([V, F]), [rng.choice([V, F, T, E]) for _ in range(rng.randrange(6))])
            for k in range(10)}
    rows = rows_for(spec)
    shuffled = rows[:]
    rng.shuffle(shuffled)
    assert compute_measures(rows) == compute_measures(shuffled)
    path = tmp_path / "r.ndjson"
    write_results(shuffled, path)
    assert compute_measures(read_results(path)) == compute_measures(rows)


@pytest.mark.parametrize("value, text", [(None, "n/a"), (Fraction(100, 3), "33.33"), (Fraction(20, 3), "6.67"),
                                         (Fraction(1, 200), "0.01"), (Fraction(0), "0.00"), (Fraction(100), "100.00")])
def test_format_pct(value, text):
    assert format_pct(value) == text


def _summary():
    return MeasureSummary("A", "boogie", "M_all", 3, 1, Fraction(100, 3), Fraction(20, 3), Fraction(0),
                          Fraction(20))


def test_csv_report():
    text = render_report([_summary()], "csv")
    lines = text.splitlines()
    assert lines[0] == ",".join(COLUMNS)
    assert lines[1] == "A,boogie,M_all,3,1,33.33,6.67,0.00,20.00"
    assert render_report([], "csv") == ",".join(COLUMNS) + "\n"
    assert list(csv.DictReader(io.StringIO(text)))[0]["n_pass"] == "3"


def test_json_report():
    (obj,) = json.loads(render_report([_summary()], "json"))
    assert list(obj) == list(COLUMNS)
    assert obj["pct_exists_fail"] == "33.33" and obj["n_pass"] == 3


def test_text_report_is_aligned():
    lines = render_report([_summary()], "text").splitlines()
    assert lines[0].split() == list(COLUMNS)
    assert set(lines[1]) <= {"-", " "}
    assert lines[2].split() == ["A", "boogie", "M_all", "3", "1", "33.33", "6.67", "0.00", "20.00"]
    with pytest.raises(ValueError):
        render_report([], "xml")


def test_group_map(tmp_path):
    p = tmp_path / "groups"
    p.write_text("# seeds\na.bpl A\n\nb.bpl  T  # trailing\n")
    assert read_group_map(p) == {"a.bpl": "A", "b.bpl": "T"}
    p.write_text("a.bpl\n")
    with pytest.raises(ValueError):
        read_group_map(p)
