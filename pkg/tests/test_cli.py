"""Command line behavior: configs, exit codes, records, replay."""

import csv
import json

import numpy as np
import pytest

from tracelab import __version__, cli, kmers
from tracelab.channel import ChannelParams
from tracelab.errors import ConfigParseError


def run(*argv):
    return cli.main(list(argv))


def records(path):
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(json.loads(line))
    return out


# ---------- Config files ----------


def test_empty_config_is_empty(tmp_path):
    f = tmp_path / "empty.cfg"
    f.write_text("# just a comment\n\n   \n")
    assert cli.load_config(str(f)) == {}


def test_config_parses_types_and_comments(tmp_path):
    f = tmp_path / "a.cfg"
    f.write_text("p = 0.25  # deletion rate\nn=8\nx = 1011\nmode=brute\n")
    assert cli.load_config(str(f)) == {"p": 0.25, "n": 8, "x": "1011", "mode": "brute"}


def test_config_rejects_malformed_line_with_its_number(tmp_path):
    f = tmp_path / "b.cfg"
    f.write_text("p==\n")
    with pytest.raises(ConfigParseError) as exc:
        cli.load_config(str(f))
    assert exc.value.line_number == 1


def test_config_rejects_unknown_key(tmp_path):
    f = tmp_path / "c.cfg"
    f.write_text("p = 0.5\nfrobnicate = 3\n")
    with pytest.raises(ConfigParseError) as exc:
        cli.load_config(str(f))
    assert exc.value.line_number == 2
    assert "frobnicate" in str(exc.value)


def test_config_rejects_badly_typed_value(tmp_path):
    f = tmp_path / "d.cfg"
    f.write_text("n = eleven\n")
    with pytest.raises(ConfigParseError) as exc:
        cli.load_config(str(f))
    assert exc.value.line_number == 1


def test_flags_override_config(tmp_path, capsys):
    f = tmp_path / "e.cfg"
    f.write_text("x = 0000\np = 0.5\nT = 2\nseed = 1\n")
    out = tmp_path / "r.jsonl"
    assert run("simulate", "--config", str(f), "--x", "1111", "--out", str(out)) == 0
    rec = records(out)[0]
    assert rec["params"]["x"] == "1111"  # flag beat the config
    assert rec["params"]["p"] == 0.5  # config filled the gap


# ---------- Exit codes ----------


def test_verify_channel_suite_exits_zero(capsys):
    assert run("verify", "--suite", "channel") == 0
    assert "pass" in capsys.readouterr().out


def test_missing_seed_is_a_usage_error(capsys):
    assert run("simulate", "--x", "101", "--p", "0.3") == 2
    assert "--seed" in capsys.readouterr().err


def test_unknown_flag_and_subcommand_exit_two(capsys):
    assert run("simulate", "--bogus", "1") == 2
    assert run("frobnicate") == 2
    capsys.readouterr()


def test_domain_error_exits_one(capsys):
    # 9 is a perfect cube of 2.08..; it is not, so the family raises.
    assert run("hardpair", "--L", "9", "--p", "0.5", "--seed", "1") == 1
    assert "cube" in capsys.readouterr().err


def test_unknown_mode_is_a_usage_error(capsys):
    assert run("mle", "--mode", "wat", "--seed", "1") == 2
    capsys.readouterr()


def test_report_on_missing_file_exits_two(tmp_path, capsys):
    assert run("report", "--out", str(tmp_path / "absent.jsonl")) == 2
    capsys.readouterr()


def test_genpoly_needs_no_seed(tmp_path, capsys):
    assert run("genpoly", "--x", "10110", "--w", "11", "--p", "0.3") == 0
    capsys.readouterr()


# ---------- Records ----------


def test_record_fields_and_version(tmp_path, capsys):
    out = tmp_path / "r.jsonl"
    assert run("simulate", "--x", "1011", "--p", "0.2", "--T", "3",
               "--seed", "7", "--out", str(out)) == 0
    capsys.readouterr()
    recs = records(out)
    assert len(recs) == 1
    rec = recs[0]
    assert rec["command"] == "simulate"
    assert rec["seed"] == 7
    assert rec["version"] == __version__
    assert set(rec) == {"command", "params", "outputs", "seed", "timestamp", "version"}
    assert len(rec["outputs"]["traces"]) == 3
    assert rec["outputs"]["lengths"] == [len(t) for t in rec["outputs"]["traces"]]


def test_experiment_record_roundtrip():
    rec = cli.ExperimentRecord(
        command="x", params={"a": 1}, outputs={"b": [1.5]},
        seed=None, timestamp="2026-01-01T00:00:00+00:00", version=__version__,
    )
    assert cli.ExperimentRecord.from_json(rec.to_json()) == rec


def test_density_map_record_matches_the_library(tmp_path, capsys):
    out = tmp_path / "r.jsonl"
    assert run("density-map", "--x", "10110", "--k", "2", "--p", "0.4",
               "--out", str(out)) == 0
    capsys.readouterr()
    rec = records(out)[0]
    K = kmers.density_map("10110", 2, ChannelParams(0.4))
    assert sorted(rec["outputs"]["windows"]) == sorted(K.rows)
    for w in K.rows:
        assert np.allclose(rec["outputs"]["rows"][w], K.row(w))
    assert rec["seed"] is None


def test_records_append_across_invocations(tmp_path, capsys):
    out = tmp_path / "r.jsonl"
    run("simulate", "--x", "11", "--p", "0.1", "--seed", "1", "--out", str(out))
    run("simulate", "--x", "11", "--p", "0.1", "--seed", "2", "--out", str(out))
    capsys.readouterr()
    assert [r["seed"] for r in records(out)] == [1, 2]


def test_no_out_flag_writes_nothing(tmp_path, capsys):
    assert run("simulate", "--x", "101", "--p", "0.2", "--seed", "3") == 0
    capsys.readouterr()
    assert list(tmp_path.iterdir()) == []


# ---------- Replay determinism ----------


def strip_timestamps(path):
    return [
        json.dumps({k: v for k, v in r.items() if k != "timestamp"},
                   sort_keys=True, separators=(",", ":"))
        for r in records(path)
    ]


def test_same_seed_reruns_are_identical_minus_timestamp(tmp_path, capsys):
    argsets = [
        ("simulate", "--x", "101100", "--p", "0.3", "--T", "4", "--seed", "11"),
        ("hardpair", "--L", "8", "--p", "0.5", "--seed", "11"),
        ("distinguish", "--x", "1100", "--y", "1010", "--p", "0.2",
         "--T", "2", "--trials", "40", "--seed", "11"),
    ]
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    for argv in argsets:
        assert run(*argv, "--out", str(a)) == 0
    for argv in argsets:
        assert run(*argv, "--out", str(b)) == 0
    capsys.readouterr()
    assert strip_timestamps(a) == strip_timestamps(b)


# ---------- Reports ----------


def test_report_csv_columns_and_rows(tmp_path, capsys):
    out = tmp_path / "r.jsonl"
    run("simulate", "--x", "1011", "--p", "0.2", "--T", "2", "--seed", "5",
        "--out", str(out))
    run("density-map", "--x", "1011", "--k", "1", "--p", "0.2", "--out", str(out))
    csv_path = tmp_path / "r.csv"
    assert run("report", "--out", str(out), "--csv", str(csv_path)) == 0
    capsys.readouterr()
    with open(csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert rows[0]["command"] == "simulate"
    assert rows[1]["command"] == "density-map"
    assert float(rows[0]["outputs.mean_length"]) >= 0.0
    assert rows[1]["outputs.mean_length"] == ""  # restval fills the gap
    assert rows[0]["version"] == __version__


def test_report_without_csv_prints_summary(tmp_path, capsys):
    out = tmp_path / "r.jsonl"
    run("simulate", "--x", "10", "--p", "0.1", "--seed", "1", "--out", str(out))
    assert run("report", "--out", str(out)) == 0
    text = capsys.readouterr().out
    assert "1 records" in text


# ---------- Help and version ----------


def test_version_flag(capsys):
    assert run("--version") == 0
    assert capsys.readouterr().out.strip() == __version__


def test_sweep_mode_needs_no_L(tmp_path, capsys):
    # A full sweep takes minutes, so confirm only the flag validation:
    # a sweep with a bad p dies as a usage error, not as a missing --L.
    assert run("hardpair", "--mode", "sweep", "--p", "1.5", "--seed", "1") == 2
    err = capsys.readouterr().err
    assert "usage error" in err and "--L" not in err
