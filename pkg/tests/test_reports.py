import json
import math

import pytest

from dgtqc import dgt, reports, synth
from dgtqc.metrics import build_profiles


@pytest.fixture(scope="module")
def sweep_rows():
    corpus = synth.generate(synth.SyntheticSpec(), 0)
    trusted, _ = build_profiles(corpus)
    ordered = dgt.order_trusted(trusted)
    return [dgt.reference_row(corpus)] + dgt.sweep(corpus, ordered, [1, 2])


@pytest.mark.parametrize("value,spec,text", [
    (0.123456, ".4f", "0.1235"),
    (32.66, ".1f", "32.7"),
    (17, "d", "17"),
    (0.5, "d", "0.5000"),
    (None, ".4f", ""),
    (math.inf, ".1f", "inf"),
    ("VY SV", "s", "VY SV"),
])
def test_fmt_value(value, spec, text):
    assert reports.fmt_value(value, spec) == text


def test_json_value_rounds_like_csv():
    assert reports.json_value(0.123456, ".4f") == 0.1235
    assert reports.json_value(math.inf, ".1f") == "inf"
    assert reports.json_value(3, "d") == 3


def test_csv_config_line_round_trip(tmp_path, sweep_rows):
    config = {"norm": "mean", "include_zeros": True, "min_hits": 10, "min_elements": 100}
    rep = reports.sweep_report(sweep_rows, config)
    (csv_path, json_path) = reports.write_report(rep, tmp_path, "both")
    first = csv_path.read_text().splitlines()[0]
    assert first.startswith("# config: ")
    cfg, rows = reports.read_csv_report(csv_path)
    assert cfg == config
    assert list(rows[0]) == rep.header
    assert [r["trusted_size"] for r in rows] == ["0", "1", "2"]
    fitted = rows[2]
    assert len(fitted["model_p"].split(".")[1]) == 4
    assert len(fitted["f_statistic"].split(".")[1]) == 1
    assert rows[0]["r_squared"] == ""
    payload = json.loads(json_path.read_text())
    assert payload["config"] == config and payload["columns"] == rep.header


def test_unknown_format(tmp_path, sweep_rows):
    with pytest.raises(ValueError):
        reports.write_report(reports.sweep_report(sweep_rows, {}), tmp_path, "xml")


def test_best_row(sweep_rows):
    best = reports.best_row(sweep_rows)
    assert best.model.r_squared == max(r.model.r_squared for r in sweep_rows if r.model)
    assert reports.best_row(sweep_rows[:1]) is None


def test_baseline_report_summary_row():
    corpus = synth.generate(synth.SyntheticSpec(), 0)
    trusted, _ = build_profiles(corpus)
    ordered = dgt.order_trusted(trusted)
    sub = dgt.testing_subset(corpus, ordered, 2)
    rep = dgt.baseline_compare(sub.workers, ordered[:2],
                               powerlaw_config=dgt.PowerLawConfig(replicates=100))
    table = reports.baseline_report(rep, {})
    assert table.rows[-1]["worker_id"] == "R2"
    assert table.rows[-1]["avg_p"] == rep.factor_models["avg_p"].r_squared
    assert set(table.extra) == {"factor_models", "two_factor"}
    lines = reports.baseline_summary_lines(rep)
    assert lines[-1].startswith("two-factor (avg_p, eui_amt)")
