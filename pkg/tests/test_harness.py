import os
import sys
import time

import pytest

from mugie.fixtures import build_listing1, mock_command
from mugie.genloop import BatchSpec, generate_mutants, write_pool
from mugie.harness import (
    SEED_ID,
    CheckItem,
    LaunchError,
    ResultRow,
    ToolSpec,
    VerdictKind,
    check_batch,
    classify,
    discover,
    pool_items,
    read_results,
    run_confirmed,
    run_one,
    write_results,
)

V, F, E, T = VerdictKind.VERIFIED, VerdictKind.FAILURE, VerdictKind.TOOL_ERROR, VerdictKind.TIMEOUT


@pytest.fixture
def prog(tmp_path):
    p = tmp_path / "p.bpl"
    p.write_text("const a: int;\n")
    return p


def tool(behavior, timeout=10.0, confirm=1, **kw):
    return ToolSpec(behavior, mock_command(behavior, **kw), timeout, confirm)


class TestToolSpec:
    def test_defaults(self):
        t = ToolSpec("boogie", "boogie {files}")
        assert (t.timeout_seconds, t.timeout_confirm_runs) == (20, 10)

    @pytest.mark.parametrize("template", ["boogie", "boogie {files} {files}", "boogie x{files}"])
    def test_placeholder_exactly_once(self, template):
        with pytest.raises(ValueError):
            ToolSpec("b", template)

    def test_argv_keeps_file_order(self):
        t = ToolSpec("b", "boogie /trace '{files}' -x")
        assert t.argv(["a.bpl", "a.part2.bpl"]) == ["boogie", "/trace", "a.bpl", "a.part2.bpl", "-x"]

    def test_bad_limits(self):
        with pytest.raises(ValueError):
            ToolSpec("b", "b {files}", timeout_seconds=0)
        with pytest.raises(ValueError):
            ToolSpec("b", "b {files}", timeout_confirm_runs=0)


class TestClassify:
    t = ToolSpec("b", "b {files}")

    @pytest.mark.parametrize("exit_code, output, kind", [
        (0, "Boogie program verifier finished with 3 verified, 0 errors", V),
        (0, "1 verified, 0 error", V),
        (1, "Boogie program verifier finished with 3 verified, 0 errors", E),
        (1, "Boogie program verifier finished with 2 verified, 1 error", F),
        (0, "Boogie program verifier finished with 0 verified, 4 errors", F),
        (1, "p.bpl(3,1): Error: A postcondition might not hold on this return path.", F),
        (2, "p.bpl(1,1): Error: invalid type\n1 type checking errors detected in p.bpl", E),
        (1, "", E),
        (0, "", E),
        (0, "finished with 2 verified, 0 errors, 0 time outs", V),
        (1, "garbage , 0 errors", E),
        ("timeout", "1 verified, 0 errors", T),
        ("launch-error", "", E),
    ])
    def test_table(self, exit_code, output, kind):
        assert classify(self.t, exit_code, output) is kind

    def test_custom_patterns(self):
        t = ToolSpec("b", "b {files}", success_pattern=r"^OK$", failure_patterns=(r"^FAIL (\d+)$",))
        assert classify(t, 0, "OK") is V
        assert classify(t, 1, "FAIL 2") is F
        assert classify(t, 1, "FAIL 0") is E


class TestRuns:
    def test_verified_one_run(self, prog):
        v = run_confirmed(tool("always-verify", confirm=10), [prog])
        assert v.kind is V and v.runs == 1 and v.raw_exit == 0
        assert "1 verified, 0 errors" in v.captured_output

    def test_failure(self, prog):
        v = run_one(tool("always-fail"), [prog])
        assert v.kind is F and v.raw_exit == 1

    def test_marker_modes(self, prog):
        assert run_one(tool("fail-on-marker", marker="const a"), [prog]).kind is F
        assert run_one(tool("fail-on-marker", marker="const a", fail_mode="type-error"), [prog]).kind is E
        assert run_one(tool("fail-on-marker", marker="const zzz"), [prog]).kind is V

    def test_timeout_then_all_confirmations(self, prog, tmp_path):
        log = tmp_path / "log"
        v = run_confirmed(tool("sleep-then-verify", timeout=0.3, confirm=3, sleep=30, log=log), [prog])
        assert v.kind is T and v.raw_exit == "timeout" and v.runs == 3
        assert v.wall_time_seconds >= 0.3
        assert len(log.read_text().splitlines()) == 3

    def test_flake_recovers_on_last_run(self, prog, tmp_path):
        v = run_confirmed(tool("flaky-timeout", timeout=0.5, confirm=3, counter=tmp_path / "c", flakes=2), [prog])
        assert v.kind is V and v.runs == 3

    def test_process_group_killed(self, prog, tmp_path):
        # the child shell forks a sleeper; both must die at the timeout
        pidfile = tmp_path / "pid"
        script = f"sleep 30 & echo $! > {pidfile}; wait"
        t = ToolSpec("sh", f"sh -c '{script}' {{files}}", timeout_seconds=0.5, timeout_confirm_runs=1)
        start = time.monotonic()
        assert run_one(t, [prog]).kind is T
        assert time.monotonic() - start < 5
        pid = int(pidfile.read_text())
        for _ in range(50):
            try:
                os.kill(pid, 0)
            except ProcessLookupError:
                break
            time.sleep(0.05)
        else:
            pytest.fail("grandchild survived the timeout")

    def test_missing_binary(self, prog):
        with pytest.raises(LaunchError):
            run_one(ToolSpec("x", "/nonexistent/verifier {files}"), [prog])

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            run_one(tool("always-verify"), [tmp_path / "missing.bpl"])

    def test_environment_passes_through(self, prog, monkeypatch):
        monkeypatch.setenv("MUGIE_PROBE", "42")
        cmd = f"{sys.executable} -c 'import os; print(os.environ[\"MUGIE_PROBE\"], \"1 verified, 0 errors\")' {{files}}"
        v = run_one(ToolSpec("py", cmd), [prog])
        assert v.kind is V and v.captured_output.startswith("42")


class TestBatches:
    @pytest.fixture
    def written(self, tmp_path):
        pool = generate_mutants(build_listing1(), BatchSpec({"S1": 1, "S6": 1}, 6, rng_seed=5), "listing1.bpl")
        write_pool(pool, tmp_path, "listing1")
        return pool, tmp_path

    def test_rows_per_program(self, written, tmp_path):
        pool, d = written
        log = tmp_path / "spawns"
        rows = check_batch(tool("always-verify", log=log), discover(d), batch="M_x")
        assert len(rows) == 7
        assert rows[0].mutant_id == SEED_ID and rows[0].seed == "listing1.bpl"
        assert [r.mutant_id for r in rows[1:]] == [f"m{k}" for k in range(1, 7)]
        assert all(r.batch == "M_x" and r.kind is V for r in rows)
        # companion files travel with their primary in a single run
        two_file = sum(1 for m in pool.mutants if m.companion is not None)
        assert sum(len(line.split()) == 2 for line in log.read_text().splitlines()) == two_file

    def test_discover_matches_pool_items(self, written):
        pool, d = written
        assert discover(d) == pool_items(pool, d, "listing1")

    def test_parallel_equals_serial(self, written):
        _, d = written
        items = discover(d)
        t = tool("fail-on-marker", marker="S6")
        assert check_batch(t, items, workers=1) == check_batch(t, items, workers=4)

    def test_seed_only(self, tmp_path):
        pool = generate_mutants(build_listing1(), BatchSpec({"S1": 1}, 0), "listing1.bpl")
        write_pool(pool, tmp_path)
        assert len(check_batch(tool("always-verify"), discover(tmp_path))) == 1

    def test_launch_failure_becomes_row(self, written):
        _, d = written
        rows = check_batch(ToolSpec("x", "/nonexistent/verifier {files}"), discover(d))
        assert len(rows) == 7
        assert all(r.kind is E and r.raw_exit == "launch-error" for r in rows)

    def test_results_round_trip(self, written, tmp_path):
        _, d = written
        rows = check_batch(tool("always-fail"), discover(d), batch="b")
        out = tmp_path / "r.ndjson"
        write_results(rows, out)
        assert read_results(out) == rows

    def test_malformed_results(self, tmp_path):
        bad = tmp_path / "bad.ndjson"
        bad.write_text('{"seed": "s"}\n')
        with pytest.raises(ValueError):
            read_results(bad)
        bad.write_text("not json\n")
        with pytest.raises(ValueError):
            read_results(bad)

    def test_row_json_fields(self):
        r = ResultRow("s.bpl", "m1", "S1(0,1)", "t", V, 1.5, 0, "M_all")
        assert set(r.to_json()) == {"seed", "mutant_id", "lineage", "tool", "kind", "wall_time_seconds", "raw_exit",
                                    "batch"}

    def test_check_item_files(self, tmp_path):
        item = CheckItem("s.bpl", "SEED", (tmp_path / "s.bpl",))
        assert item.lineage == "" and item.batch == ""
