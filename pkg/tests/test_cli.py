import json

import numpy as np
import pytest

from treeswap import (
    Matching,
    cherry_count,
    enumerate_space,
    internal_tree_length,
    read_states,
)
from treeswap.cli import main


def run(capsys, *argv):
    rc = main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def data_rows(path):
    lines = path.read_text().splitlines()
    body = [ln for ln in lines if not ln.startswith("# ")]
    return body[0], body[1:]


def test_enumerate_count_only(capsys):
    rc, out, _ = run(capsys, "enumerate", "--n", "5", "--count-only")
    assert rc == 0 and out.strip() == "5"
    rc, out, _ = run(capsys, "enumerate", "--n", "7", "--mode", "labeled",
                     "--count-only")
    assert rc == 0 and out.strip() == "56700"
    # the closed form needs no enumeration, so no budget applies
    rc, out, _ = run(capsys, "enumerate", "--n", "10", "--count-only")
    assert rc == 0 and out.strip() == "7936"


def test_enumerate_writes_states(tmp_path, capsys):
    out = tmp_path / "states.jsonl"
    rc, text, _ = run(capsys, "enumerate", "--n", "5", "--mode", "labeled",
                      "--out", str(out))
    assert rc == 0 and "180" in text
    lines = out.read_text().splitlines()
    assert lines[0] == "# treeswap 0.1.0"
    assert lines[1] == "# command: enumerate"
    assert lines[2].startswith("# flags: ")
    states = read_states(str(out), 5, "labeled")
    want = enumerate_space(5, "labeled")
    assert states == list(want.states)


def test_enumerate_requires_out(capsys):
    rc, _, err = run(capsys, "enumerate", "--n", "4")
    assert rc == 2 and "--out" in err


@pytest.mark.parametrize("argv", [
    ("enumerate", "--n", "10", "--out", "/tmp/никогда.jsonl"),
    ("enumerate", "--n", "7", "--mode", "labeled", "--out", "/tmp/x.jsonl"),
    ("gap", "--n", "10"),
])
def test_budget_exit_code(capsys, argv):
    rc, _, err = run(capsys, *argv)
    assert rc == 3
    assert "--unsafe-budget" in err


def test_unsafe_budget_lifts_cap(tmp_path, capsys):
    out = tmp_path / "lab7.jsonl"
    rc, text, _ = run(capsys, "enumerate", "--n", "7", "--mode", "labeled",
                      "--unsafe-budget", "--out", str(out))
    assert rc == 0 and "56700" in text


@pytest.mark.parametrize("argv,needle", [
    (("sample", "--n", "1", "--out", "/tmp/x.csv"), "--n >= 3"),
    (("verify", "--n", "2"), "--n >= 3"),
    (("stats", "--n", "2"), "--n >= 3"),
    (("tvdist", "--n", "5", "--start", "bogus", "--out", "/tmp/x.csv"),
     "unknown start"),
    (("tvdist", "--n", "5", "--start", "index:nine", "--out", "/tmp/x.csv"),
     "bad start index"),
    (("tvdist", "--n", "5", "--start", "index:99", "--out", "/tmp/x.csv"),
     "out of range"),
    (("couple", "--n", "5", "--start", "index:0", "--out", "/tmp/x.csv"),
     "distinct states"),
    (("couple", "--n", "5", "--start", "index:25", "--out", "/tmp/x.csv"),
     "out of range"),
])
def test_usage_errors(capsys, argv, needle):
    rc, _, err = run(capsys, *argv)
    assert rc == 2
    assert needle in err


def test_sample_schema_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    rc, text, _ = run(capsys, "sample", "--n", "5", "--mode", "labeled",
                      "--replicates", "40", "--seed", "42", "--out", str(a))
    assert rc == 0 and "mean phi" in text
    rc, _, _ = run(capsys, "sample", "--n", "5", "--mode", "labeled",
                   "--replicates", "40", "--seed", "42", "--out", str(b))
    assert rc == 0
    header, rows = data_rows(a)
    assert header == "n,mode,seed,replicate,phi,cherries,state"
    assert len(rows) == 40
    assert data_rows(b)[1] == rows
    import csv as csvmod
    with open(a, newline="") as fh:
        records = [r for r in csvmod.reader(fh)
                   if not r[0].startswith("#")][1:]
    for rec in records[:10]:
        m = Matching.deserialize(rec[6])
        assert m.n == 5 and m.mode == "labeled"
        assert int(rec[4]) == internal_tree_length(m)
        assert int(rec[5]) == cherry_count(m)


def test_sample_unlabeled_states(tmp_path, capsys):
    out = tmp_path / "u.csv"
    rc, _, _ = run(capsys, "sample", "--n", "6", "--replicates", "25",
                   "--seed", "1", "--out", str(out))
    assert rc == 0
    _, rows = data_rows(out)
    assert all('"L' not in r for r in rows)
    assert all(",unlabeled," in r for r in rows)


def test_tvdist_curve(tmp_path, capsys):
    out = tmp_path / "tv.csv"
    rc, text, _ = run(capsys, "tvdist", "--n", "5", "--lazy",
                      "--out", str(out))
    assert rc == 0 and "mixing time" in text
    header, rows = data_rows(out)
    assert header == "n,mode,lazy,start,t,tv"
    tvs = [float(r.split(",")[5]) for r in rows]
    assert all(a >= b - 1e-12 for a, b in zip(tvs, tvs[1:]))
    assert tvs[-1] < 0.25
    assert rows[0].startswith("5,unlabeled,1,worst,0,")


def test_tvdist_index_start(tmp_path, capsys):
    out = tmp_path / "tv.csv"
    rc, _, _ = run(capsys, "tvdist", "--n", "5", "--start", "index:3",
                   "--t-max", "50", "--out", str(out))
    assert rc == 0
    _, rows = data_rows(out)
    assert rows[0].startswith("5,unlabeled,0,index:3,0,")


def test_gap_json(tmp_path, capsys):
    out = tmp_path / "gap.json"
    rc, text, _ = run(capsys, "gap", "--n", "4", "--lazy", "--out", str(out))
    assert rc == 0 and "gap" in text
    payload = json.loads(out.read_text())
    assert payload["_meta"]["version"] == "0.1.0"
    assert payload["_meta"]["command"] == "gap"
    assert payload["n"] == 4 and payload["states"] == 2
    assert payload["lazy"] is True and payload["full_spectrum"] is True
    assert payload["gap"] == pytest.approx(3 / 16)
    assert payload["relaxation_time"] == pytest.approx(16 / 3)
    assert isinstance(payload["mixing_time"], int)
    eigs = payload["eigenvalues_head"]
    assert eigs == sorted(eigs, reverse=True) and eigs[0] == pytest.approx(1.0)


def test_couple_csv_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ("couple", "--n", "5", "--mode", "labeled", "--replicates", "30",
            "--seed", "7")
    rc, text, _ = run(capsys, *args, "--out", str(a))
    assert rc == 0
    assert "caterpillar vs stationary draw" in text
    assert "mean bound 160" in text
    rc, _, _ = run(capsys, *args, "--out", str(b))
    assert rc == 0
    header, rows = data_rows(a)
    assert header == "n,mode,seed,replicate,tau,T_2,T_1"
    assert len(rows) == 30
    assert data_rows(b)[1] == rows
    taus = [int(r.split(",")[4]) for r in rows]
    assert all(t >= 0 for t in taus)


def test_couple_worst_start(tmp_path, capsys):
    out = tmp_path / "w.csv"
    rc, text, _ = run(capsys, "couple", "--n", "5", "--start", "worst",
                      "--replicates", "10", "--seed", "2", "--out", str(out))
    assert rc == 0
    assert "exact worst pair" in text


def test_couple_pair_index_start(tmp_path, capsys):
    out = tmp_path / "p.csv"
    rc, text, _ = run(capsys, "couple", "--n", "5", "--start", "index:7",
                      "--replicates", "5", "--seed", "2", "--out", str(out))
    assert rc == 0
    assert "(1,2)" in text


def test_couple_worst_labeled_budget(tmp_path, capsys):
    rc, _, err = run(capsys, "couple", "--n", "6", "--mode", "labeled",
                     "--start", "worst", "--replicates", "5",
                     "--out", str(tmp_path / "x.csv"))
    assert rc == 3
    assert "ordered pairs" in err


def test_couple_empty_is_library_error(tmp_path, capsys):
    rc, _, err = run(capsys, "couple", "--n", "5", "--replicates", "0",
                     "--out", str(tmp_path / "x.csv"))
    assert rc == 1
    assert err.startswith("error: ")


def test_stats_json(tmp_path, capsys):
    out = tmp_path / "stats.json"
    rc, text, _ = run(capsys, "stats", "--n", "7", "--replicates", "30000",
                      "--seed", "4", "--out", str(out))
    assert rc == 0
    payload = json.loads(out.read_text())
    assert payload["phi_mean_exact"] == "25/3"
    assert payload["phi_var_exact"] == "112/45"
    assert abs(payload["phi_mean_mc"] - 25 / 3) < 5 * payload["phi_mean_se"]
    assert payload["red_mean_worst_z"] < 5.0
    assert "worst red-mean z" in text


@pytest.mark.parametrize("n,mode", [(3, "unlabeled"), (4, "labeled"),
                                    (5, "unlabeled")])
def test_verify_battery_passes(capsys, n, mode):
    rc, out, _ = run(capsys, "verify", "--n", str(n), "--mode", mode,
                     "--replicates", "20000", "--coupling-replicates", "20",
                     "--seed", "11")
    assert rc == 0
    assert "verification passed" in out
    assert "FAIL" not in out
    assert "ok   count" in out
    assert "ok   stationarity" in out
    assert "ok   coupling" in out
    if n <= 5:
        assert "ok   lumping" in out
        assert "ok   spectrum-inclusion" in out


def test_headers_carry_provenance(tmp_path, capsys):
    out = tmp_path / "h.csv"
    run(capsys, "tvdist", "--n", "4", "--t-max", "30", "--out", str(out))
    lines = out.read_text().splitlines()
    assert lines[0] == "# treeswap 0.1.0"
    assert lines[1] == "# command: tvdist"
    assert "--t-max=30" in lines[2]
    out2 = tmp_path / "h2.csv"
    run(capsys, "sample", "--n", "4", "--seed", "9", "--replicates", "5",
        "--out", str(out2))
    assert "# seed: 9" in out2.read_text().splitlines()[3]
