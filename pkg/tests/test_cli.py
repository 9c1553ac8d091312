"""Command-line runner: config parsing, output schema, determinism."""
import json

import pytest

from mdsqueue.cli import (COLUMNS, SpecError, main, parse_config_text,
                          rows_to_csv)


def write(tmp_path, text, name="exp.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestConfigParsing:
    def test_flat_keys_comments_and_case(self):
        spec = parse_config_text(
            "N = 4   # servers\n"
            "# full-line comment\n"
            "Lambda = 0.5, 1.0\n"
            "\n"
            "policy = reservation\n")
        assert spec == {"n": "4", "lambda": "0.5, 1.0",
                        "policy": "reservation"}

    def test_rejects_bare_words(self):
        with pytest.raises(SpecError, match="line 2"):
            parse_config_text("n = 4\nnonsense\n")


class TestExitCodes:
    def test_missing_config_is_exit_2(self, capsys):
        assert main(["solve"]) == 2
        assert "error" in capsys.readouterr().err

    def test_bad_spec_is_exit_2(self, tmp_path, capsys):
        cfg = write(tmp_path, "n = 4\nk = 2\npolicy = reservation\n"
                              "lambda = 1.0, 0.5\nseries = mds\nkind = sweep\n")
        assert main(["sweep", "--config", cfg]) == 2
        assert "increasing" in capsys.readouterr().err

    def test_unknown_policy_is_exit_2(self, tmp_path, capsys):
        cfg = write(tmp_path, "n = 4\nk = 2\npolicy = fifo\nlambda = 0.5\n")
        assert main(["solve", "--config", cfg]) == 2

    def test_good_run_is_exit_0(self, tmp_path):
        cfg = write(tmp_path, "n = 4\nk = 2\npolicy = reservation\nt = 1\n"
                              "lambda = 0.8\n")
        out = str(tmp_path / "o.csv")
        assert main(["solve", "--config", cfg, "--out", out]) == 0


@pytest.fixture(scope="module")
def solve_csv(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    cfg = write(tmp, "n = 4\nk = 2\npolicy = mkmn\nt = 1\n"
                     "lambda = 0.8, 1.2\n")
    out = str(tmp / "o.csv")
    assert main(["solve", "--config", cfg, "--out", out]) == 0
    with open(out) as fh:
        return fh.read()


class TestOutputSchema:

    def test_header_and_width(self, solve_csv):
        lines = solve_csv.strip().splitlines()
        assert lines[0] == ",".join(COLUMNS)
        assert all(len(l.split(",")) == len(COLUMNS) for l in lines)
        # 3 metrics per stable lambda
        assert len(lines) == 1 + 2 * 3

    def test_values_roundtrip_as_floats(self, solve_csv):
        lines = solve_csv.strip().splitlines()[1:]
        vcol = COLUMNS.index("value")
        for line in lines:
            float(line.split(",")[vcol])

    def test_unstable_rows_are_flagged(self, tmp_path):
        cfg = write(tmp_path, "n = 4\nk = 2\npolicy = reservation\nt = 1\n"
                              "lambda = 0.5, 3.0\n")
        out = str(tmp_path / "o.csv")
        assert main(["solve", "--config", cfg, "--out", out]) == 0
        lines = open(out).read().strip().splitlines()
        notes = [l.split(",")[COLUMNS.index("note")] for l in lines[1:]]
        assert "unstable" in notes

    def test_json_format(self, tmp_path, capsys):
        cfg = write(tmp_path, "n = 4\nk = 2\npolicy = reservation\nt = 1\n"
                              "lambda = 0.8\n")
        assert main(["solve", "--config", cfg, "--format", "json"]) == 0
        rows = json.loads(capsys.readouterr().out)
        assert {r["metric"] for r in rows} >= {"mean_latency", "mean_jobs"}


class TestDeterminism:
    def test_identical_spec_and_seed_byte_identical(self, tmp_path):
        cfg = write(tmp_path,
                    "kind = sweep\nn = 4\nk = 2\nlambda = 0.8, 1.2\n"
                    "series = reservation:1,mds\nbatches = 20000\n"
                    "reps = 2\nseed = 7\n")
        out1, out2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        assert main(["sweep", "--config", cfg, "--out", out1]) == 0
        assert main(["sweep", "--config", cfg, "--out", out2]) == 0
        a = open(out1, "rb").read()
        b = open(out2, "rb").read()
        assert a == b and len(a) > 0

    def test_seed_override_changes_simulated_rows(self, tmp_path):
        cfg = write(tmp_path,
                    "kind = sweep\nn = 4\nk = 2\nlambda = 1.0\n"
                    "series = mds\nbatches = 20000\nreps = 1\nseed = 7\n")
        out1, out2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        assert main(["sweep", "--config", cfg, "--out", out1]) == 0
        assert main(["sweep", "--config", cfg, "--out", out2,
                     "--seed", "8"]) == 0
        assert open(out1).read() != open(out2).read()


def test_throughput_config(tmp_path):
    cfg = write(tmp_path, "kind = throughput\nn = 4, 5\nk = 2\n"
                          "policy = reservation\nt = 1\n")
    out = str(tmp_path / "o.csv")
    assert main(["throughput", "--config", cfg, "--out", out]) == 0
    lines = open(out).read().strip().splitlines()
    assert len(lines) == 3
    vcol = COLUMNS.index("value")
    v4, v5 = (float(l.split(",")[vcol]) for l in lines[1:])
    assert v4 < v5  # capacity grows with the number of servers
