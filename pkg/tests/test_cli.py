import json

import pytest

from prsmc import parse_system
from prsmc.cli import FIXTURE_DIR, main, oracle_compare


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


S1 = str(FIXTURE_DIR / "S1.prs")
S1P = str(FIXTURE_DIR / "S1prime.prs")
S2 = str(FIXTURE_DIR / "S2.prs")


class TestCheck:
    def test_holds(self, capsys):
        code, out, _ = run(capsys, "check", "-s", S1, "-x", "X", "-f", "GF <b>")
        assert code == 0 and out.startswith("Yes")

    def test_counterexample(self, capsys):
        code, out, _ = run(capsys, "check", "-s", S1P, "-x", "X", "-f", "GF <b>", "--json", "--validate")
        assert code == 1
        data = json.loads(out)
        assert data["verdict"] == "No"
        assert data["lasso"]["cycle"] == ["r6"]
        assert data["certificates"][0]["kind"] == "model_check"

    def test_outside_fragment(self, capsys):
        code, _, err = run(capsys, "check", "-s", S1, "-x", "X", "-f", "<a> U <b>")
        assert code == 3 and "fragment" in err

    def test_bad_formula(self, capsys):
        code, _, err = run(capsys, "check", "-s", S1, "-x", "X", "-f", "GF (<b>")
        assert code == 3 and "formula" in err

    def test_unknown_start(self, capsys):
        code, _, err = run(capsys, "check", "-s", S1, "-x", "Q", "-f", "GF <b>")
        assert code == 3 and "Q" in err


class TestDecide:
    def test_finite(self, capsys):
        code, out, _ = run(capsys, "decide", "-s", S1, "-x", "X", "--K", "1")
        assert code == 0
        assert "--r1--> Y" in out and "--r2--> W.(Z)" in out

    def test_lasso(self, capsys):
        code, out, _ = run(capsys, "decide", "-s", S1, "-x", "X", "--K", "1,2", "--Komega", "1,2", "--json", "--validate")
        assert code == 0
        data = json.loads(out)
        assert sorted(data["lasso"]["cycle"]) == ["r1", "r2", "r3", "r5"]
        assert data["certificates"]

    def test_not_contained(self, capsys):
        code, out, _ = run(capsys, "decide", "-s", S1, "-x", "X", "--K", "1", "--Komega", "1,2")
        assert code == 1 and "contained" in out

    def test_bundled_name(self, capsys):
        code, _, _ = run(capsys, "decide", "-s", "S2", "-x", "X", "--K", "1", "--Komega", "")
        assert code == 0

    def test_index_out_of_range(self, capsys):
        code, _, err = run(capsys, "decide", "-s", S1, "-x", "X", "--K", "3")
        assert code == 3 and "outside 1..2" in err

    def test_missing_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["decide", "-s", S1, "-x", "X"])
        assert exc.value.code == 3

    def test_syntax_error_location(self, capsys, tmp_path):
        bad = tmp_path / "bad.prs"
        bad.write_text("vars X\nrule r : X -a-> Q\n")
        code, _, err = run(capsys, "decide", "-s", str(bad), "-x", "X", "--K", "")
        assert code == 3 and f"{bad}:2:" in err

    def test_budget_env(self, capsys, monkeypatch):
        monkeypatch.setenv("PRSMC_BUDGET_NODES", "zero")
        code, _, err = run(capsys, "decide", "-s", S1, "-x", "X", "--K", "1")
        assert code == 3 and "PRSMC_BUDGET_NODES" in err


class TestDump:
    def test_parallel_summary(self, capsys):
        code, out, _ = run(capsys, "dump", "--what", "par", "-s", S1, "--K", "1,2")
        assert code == 0
        m = parse_system(out)
        assert len(m.rules) == 6
        assert "# _k3: empty" in out

    def test_sequential_summary(self, capsys):
        code, out, _ = run(capsys, "dump", "--what", "seq", "-s", S1, "--K", "1,2")
        assert code == 0
        m = parse_system(out)
        assert {r.shape for r in m.rules} <= {"push", "rename"}

    def test_infinite_summary(self, capsys):
        code, out, _ = run(capsys, "dump", "--what", "paromega", "-s", S1P, "--K", "1,2", "--Komega", "1")
        assert code == 0
        assert "_w1 : Y -{1}/{}-> _Zinf" in out
        assert "# infinitely-often 1 :" in out

    def test_pure_parallel_unchanged(self, capsys):
        code, out, _ = run(capsys, "dump", "-s", S2, "--K", "1")
        assert code == 0
        got, want = parse_system(out), parse_system((FIXTURE_DIR / "S2.prs").read_text())
        assert (got.rules, got.components, got.vars) == (want.rules, want.components, want.vars)

    def test_paromega_needs_subset(self, capsys):
        code, _, _ = run(capsys, "dump", "--what", "paromega", "-s", S1, "--K", "1", "--Komega", "2")
        assert code == 3


class TestOracleCompare:
    def test_deterministic(self, capsys):
        a = run(capsys, "oracle-compare", "--seed", "4", "--count", "5")
        b = run(capsys, "oracle-compare", "--seed", "4", "--count", "5")
        assert a == b
        assert a[0] == 0 and a[1].rstrip().endswith("disagreements 0")

    def test_no_components(self):
        lines, bad = oracle_compare(1, 5, max_components=0)
        assert bad == 0
        assert all("K=[1" not in line for line in lines)


def test_usage_error_code(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 3


def test_bundled_example_by_file_name(capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["check", "-s", "S1.prs", "-x", "X", "-f", "GF <b>"]) == 0
    assert main(["check", "-s", "missing.prs", "-x", "X", "-f", "GF <b>"]) == 3
