import json

import pytest

from stablecocycle import __version__
from stablecocycle import cli


def run(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["simulate", "--regime", "sub1", "--alpha", "0.7", "--beta", "1", "--n", "256", "--replicas", "30",
            "--seed", "7"]
    assert run(base + ["--out", str(a)], capsys)[0] == 0
    assert run(base + ["--out", str(a.with_name("c.csv")), "--threads", "3"], capsys)[0] == 0
    assert run(base + ["--out", str(b)], capsys)[0] == 0
    ta, tb = a.read_text().splitlines(), b.read_text().splitlines()
    assert ta[1:] == tb[1:]
    assert a.with_name("c.csv").read_text().splitlines()[1:] == ta[1:]
    meta = json.loads(ta[0][2:])
    assert meta["seed"] == 7 and meta["artifact_version"] == __version__
    assert ta[1].startswith("replica,W1,")
    assert len(ta) == 2 + 30


def test_simulate_dumps(tmp_path, capsys):
    paths, streams, samples = tmp_path / "p.csv", tmp_path / "s.csv", tmp_path / "v.csv"
    code, _, _ = run(["simulate", "--regime", "super1", "--alpha", "1.4", "--n", "64", "--replicas", "3",
                      "--out", str(tmp_path / "e.csv"), "--paths-out", str(paths),
                      "--dump-streams", str(streams), "--dump-samples", str(samples)], capsys)
    assert code == 0
    assert paths.read_text().splitlines()[1] == "replica,j,S_j"
    assert streams.read_text().splitlines()[1] == "k,position,j"
    assert samples.read_text().splitlines()[1] == "row,position,value"


def test_super1_alpha_one_rejected(capsys):
    code, _, err = run(["simulate", "--regime", "super1", "--alpha", "1.0", "--n", "64"], capsys)
    assert code == 2 and "alpha" in err


def test_config_file_and_override(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("# demo\nregime = sym\nalpha = 1.3\nn = 128\nreplicas = 5\nseed = 2\n")
    out = tmp_path / "o.csv"
    code, _, _ = run(["simulate", "--config", str(conf), "--n", "64", "--out", str(out)], capsys)
    assert code == 0
    meta = json.loads(out.read_text().splitlines()[0][2:])
    assert meta["config"]["n"] == 64 and meta["config"]["regime"] == "sym"
    bad = tmp_path / "bad.conf"
    bad.write_text("colour = red\n")
    assert run(["simulate", "--config", str(bad)], capsys)[0] == 2


def test_missing_required_values(capsys):
    assert run(["simulate", "--regime", "sym", "--alpha", "1.3"], capsys)[0] == 2
    assert run(["moments"], capsys)[0] == 2


def test_runtime_error_exit_code(capsys):
    code, _, err = run(["simulate", "--regime", "sym", "--alpha", "1.3", "--n", str(2**20), "--replicas", "100",
                        "--paths-out", "/dev/null", "--out", "/dev/null"], capsys)
    assert code == 3 and "runtime error" in err


def test_moments_report(tmp_path, capsys):
    out = tmp_path / "m.json"
    code, _, _ = run(["moments", "--alpha", "0.7", "--seed", "3", "--out", str(out)], capsys)
    rep = json.loads(out.read_text())
    assert rep["schema_version"] and rep["artifact_version"] == __version__
    assert rep["extra"]["skipped"]
    names = [r["name"] for r in rep["results"]]
    assert sum("sigma_doubling" in x for x in names) == 4
    assert code == (0 if rep["summary"]["all_pass"] else 1)


def test_verify_appendix_only(tmp_path, capsys):
    out = tmp_path / "v.json"
    code, _, _ = run(["verify", "--regime", "super1", "--alpha", "1.4", "--suite", "appendix", "--seed", "1",
                      "--out", str(out)], capsys)
    rep = json.loads(out.read_text())
    assert all(r["name"].startswith("appendix_") for r in rep["results"])
    assert all("threshold" in r for r in rep["results"])
    assert code in (0, 1)


def test_help_documents_csv_columns(capsys):
    with pytest.raises(SystemExit):
        cli.main(["simulate", "--help"])
    text = capsys.readouterr().out
    for col in ("W1", "sup_M", "L_nonzero", "replica, j, S_j", "k, position, j", "row, position, value"):
        assert col in text
