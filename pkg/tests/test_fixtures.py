import itertools
import subprocess
import sys

from mugie.fixtures import LISTING1_NAME, build_listing1, corpus, mock_command, mock_verifier_path
from mugie.mutops import OPERATORS, enumerate_sites
from mugie.syntax import AxiomDecl, ConstDecl, FunctionDecl, ProcedureDecl, Program
from mugie.typecheck import check_diagnostics


def test_listing1_shape():
    p = build_listing1()
    assert [type(d) for d in p.declarations] == [FunctionDecl, AxiomDecl, ConstDecl, AxiomDecl, ProcedureDecl]
    assert p.declarations[0].name == "h" and p.declarations[4].name == "p"


def test_listing1_every_permutation_typechecks():
    p = build_listing1()
    perms = list(itertools.permutations(p.declarations))
    assert len(perms) == 120
    assert all(check_diagnostics(Program(perm)) == [] for perm in perms)


def test_corpus_size_and_coverage(corpus_programs):
    names = [n for n, _ in corpus_programs]
    assert len(names) >= 20 and LISTING1_NAME in names
    for op in OPERATORS:
        assert any(enumerate_sites(p, op) for _, p in corpus_programs), op
    assert corpus() == corpus_programs


def run_mock(*args):
    return subprocess.run([sys.executable, str(mock_verifier_path()), *map(str, args)], capture_output=True, text=True)


def test_mock_output_format(tmp_path):
    f = tmp_path / "a.bpl"
    f.write_text("x")
    ok = run_mock("--behavior", "always-verify", f, f)
    assert ok.returncode == 0 and "2 verified, 0 errors" in ok.stdout
    bad = run_mock("--behavior", "always-fail", f)
    assert bad.returncode != 0 and "0 verified, 1 error" in bad.stdout


def test_marker_escapes_are_decoded(tmp_path):
    f = tmp_path / "a.bpl"
    f.write_text("int;\nconst marked: int;\n")
    assert run_mock("--behavior", "fail-on-marker", "--marker", r";\nconst marked", f).returncode == 1
    assert run_mock("--behavior", "fail-on-marker", "--marker", r"; const marked", f).returncode == 0


def test_flaky_counter(tmp_path):
    f = tmp_path / "a.bpl"
    f.write_text("x")
    counter = tmp_path / "n"
    counter.write_text("5")
    done = run_mock("--behavior", "flaky-timeout", "--counter", counter, "--flakes", 3, f)
    assert done.returncode == 0 and counter.read_text() == "6"


def test_mock_command_is_a_valid_template():
    cmd = mock_command("sleep-then-verify", sleep=0.1, fail_mode="x")
    assert cmd.endswith(" {files}") and "--fail-mode x" in cmd and "--sleep 0.1" in cmd
