import json
import logging

import pytest

from dgtqc import cli
from dgtqc.reports import read_csv_report


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert cli.main(["synth", "--out", str(out), "--seed", "0", "--no-figures"]) == 0
    return out


def run(argv, capsys):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_synth_writes_layout(dataset):
    for name in ("annotations", "worker_log.jsonl", "verification.csv", "completeness.csv",
                 "corpus.jsonl"):
        assert (dataset / name).exists()


def test_ingest(dataset, tmp_path, capsys):
    code, out, _ = run(["ingest", "--corpus", str(dataset), "--out", str(tmp_path)], capsys)
    assert code == 0
    summary = json.loads(out)
    assert summary
    # directory loading visits labelers alphabetically, so only the order may differ
    lines = lambda path: sorted(path.read_text().splitlines())  # noqa: E731
    assert lines(tmp_path / "corpus.jsonl") == lines(dataset / "corpus.jsonl")


def test_missing_directory(tmp_path, capsys):
    code, _, err = run(["ingest", "--corpus", str(tmp_path / "nope"), "--out", str(tmp_path)],
                       capsys)
    assert code == 2
    assert "not found" in err


def test_malformed_xml_skipped(dataset, tmp_path, capsys, caplog):
    root = tmp_path / "ann"
    lab = root / "VY"
    lab.mkdir(parents=True)
    src = next((dataset / "annotations" / "VY").glob("*.xml"))
    (lab / src.name).write_text(src.read_text())
    (lab / "broken.xml").write_text("<annotation><object>")
    with caplog.at_level(logging.WARNING):
        code, out, _ = run(["ingest", "--corpus", str(root), "--out", str(tmp_path / "o")],
                           capsys)
    assert code == 0
    assert "broken.xml" in caplog.text


def test_verify_report(dataset, tmp_path, capsys):
    code, out, _ = run(["verify-report", "--corpus", str(dataset), "--out", str(tmp_path)],
                       capsys)
    assert code == 0
    config, rows = read_csv_report(tmp_path / "verify.csv")
    assert config["command"] == "verify-report"
    qs = [float(r["q"]) for r in rows]
    assert qs == sorted(qs, reverse=True)


def test_sweep_and_figure(dataset, tmp_path, capsys):
    code, out, _ = run(["sweep", "--corpus", str(dataset), "--out", str(tmp_path)], capsys)
    assert code == 0
    assert out.startswith("best k=")
    config, rows = read_csv_report(tmp_path / "sweep.csv")
    assert [r["trusted_size"] for r in rows] == ["0", "1", "2"]
    assert all(r["r_squared"] for r in rows[1:])
    workers = [int(r["workers"]) for r in rows]
    assert workers == sorted(workers, reverse=True)
    assert config["norm"] == "mean" and config["min_hits"] == 10
    assert (tmp_path / "figures" / "sweep_r2.png").stat().st_size > 0


def test_sweep_all_modes(dataset, tmp_path, capsys):
    code, out, _ = run(["sweep", "--corpus", str(dataset), "--out", str(tmp_path),
                        "--all-modes", "--no-figures"], capsys)
    assert code == 0
    _, rows = read_csv_report(tmp_path / "modes.csv")
    assert len({r["mode"] for r in rows}) == 6
    assert out.count("mode ") == 6


def test_k_range_too_large(dataset, tmp_path, capsys):
    code, _, err = run(["sweep", "--corpus", str(dataset), "--out", str(tmp_path),
                        "--k-range", "1..5"], capsys)
    assert code == 2
    assert "outside" in err


def test_baselines(dataset, tmp_path, capsys):
    code, out, _ = run(["baselines", "--corpus", str(dataset), "--out", str(tmp_path),
                        "--k", "2", "--replicates", "100"], capsys)
    assert code == 0
    _, rows = read_csv_report(tmp_path / "baselines.csv")
    r2 = rows[-1]
    assert r2["worker_id"] == "R2"
    assert float(r2["avg_p"]) > float(r2["tot_amt"])
    assert "two-factor" in out
    assert (tmp_path / "figures" / "baselines.png").exists()


def test_baselines_k_zero(dataset, tmp_path, capsys):
    code, _, _ = run(["baselines", "--corpus", str(dataset), "--out", str(tmp_path),
                      "--k", "0"], capsys)
    assert code == 2


def test_profiles_and_scores(dataset, tmp_path, capsys):
    assert run(["profiles", "--corpus", str(dataset), "--out", str(tmp_path)], capsys)[0] == 0
    _, rows = read_csv_report(tmp_path / "profiles.csv")
    assert len(rows) == 20 and "n_link" in rows[0]
    assert (tmp_path / "profiles_trusted.csv").exists()
    assert (tmp_path / "figures" / "rank_frequency.png").exists()
    assert run(["dgt-score", "--corpus", str(dataset), "--out", str(tmp_path)], capsys)[0] == 0
    _, rows = read_csv_report(tmp_path / "dgt_scores.csv")
    assert {"p_VY", "p_SV", "avg_p"} <= set(rows[0])


def test_powerlaw_values(tmp_path, capsys):
    values = tmp_path / "v.txt"
    values.write_text(" ".join(str(2.0 ** (i / 7)) for i in range(60)))
    code, _, _ = run(["powerlaw", "--values", str(values), "--out", str(tmp_path),
                      "--replicates", "100"], capsys)
    assert code == 0
    _, rows = read_csv_report(tmp_path / "powerlaw.csv")
    assert rows[0]["id"] == "v.txt"


def test_degenerate_values_exit_one(tmp_path, capsys):
    values = tmp_path / "v.txt"
    values.write_text("3 3 3 3")
    code, _, err = run(["powerlaw", "--values", str(values), "--out", str(tmp_path)], capsys)
    assert code == 1
    assert "computation error" in err


def test_config_precedence(dataset, tmp_path, monkeypatch):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"seed": 3, "norm": "raw", "min_hits": 5}))
    monkeypatch.setenv(cli.SEED_ENV, "11")
    args = cli.build_parser().parse_args(["sweep", "--config", str(conf), "--norm", "proportion"])
    cfg = cli.resolve_config(args)
    assert (cfg.seed, cfg.norm, cfg.min_hits) == (11, "proportion", 5)
    args = cli.build_parser().parse_args(["sweep", "--config", str(conf), "--seed", "2"])
    assert cli.resolve_config(args).seed == 2


def test_unknown_config_key(tmp_path, capsys):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"sed": 3}))
    code, _, err = run(["sweep", "--config", str(conf)], capsys)
    assert code == 2 and "sed" in err


def test_parse_k_range():
    assert cli.parse_k_range("1..4") == [1, 2, 3, 4]
    assert cli.parse_k_range("3") == [3]
    for bad in ("0..2", "4..1", "a..b"):
        with pytest.raises(cli.UsageError):
            cli.parse_k_range(bad)


def test_reruns_are_byte_identical(dataset, tmp_path, capsys):
    argv = ["baselines", "--corpus", str(dataset), "--out", str(tmp_path), "--replicates", "100",
            "--pmethod", "exact", "--seed", "4"]
    names = ("baselines.csv", "baselines.json", "figures/baselines.png")
    assert run(argv, capsys)[0] == 0
    first = [(tmp_path / f).read_bytes() for f in names]
    assert run(argv, capsys)[0] == 0
    assert first == [(tmp_path / f).read_bytes() for f in names]


def test_synth_bad_spec(tmp_path, capsys):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"trusted": [{"labeler_id": "X", "proportions": {"link": 0.9}}]}))
    code, _, err = run(["synth", "--spec", str(spec), "--out", str(tmp_path / "o")], capsys)
    assert code == 2
    assert "sum" in err
