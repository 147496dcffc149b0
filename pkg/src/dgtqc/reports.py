"""Tabular reports: row builders plus CSV/JSON writers.

Every report carries the effective configuration. CSV files start with a
``# config: {...}`` comment line; JSON files hold ``{"config", "columns",
"rows"}`` plus any extra sections. Numbers use fixed precision: p-values and
R^2 to 4 decimals, F to 1 decimal.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from dgtqc.dgt import BaselineReport, DgtScore, ModeResult, SweepRow
from dgtqc.metrics import TrustedProfile, WorkerProfile
from dgtqc.stats import RegressionResult

FORMATS = ("csv", "json", "both")


@dataclass
class Report:
    """A named table with a format code per column (``.4f``, ``.1f``, ``d``, ``s`` ...)."""

    name: str
    columns: list[tuple[str, str]]
    rows: list[dict[str, Any]]
    config: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def header(self) -> list[str]:
        return [c for c, _ in self.columns]

    def formatted(self) -> list[list[str]]:
        return [[fmt_value(row.get(c), spec) for c, spec in self.columns] for row in self.rows]

    def json_rows(self) -> list[dict]:
        return [{c: json_value(row.get(c), spec) for c, spec in self.columns}
                for row in self.rows]


def fmt_value(value, spec: str) -> str:
    if value is None:
        return ""
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if spec == "s":
        return str(value)
    if spec == "d" and isinstance(value, float):
        # summary rows put an R^2 under an integer column
        return format(value, ".4f")
    return format(value, spec)


def json_value(value, spec: str):
    """Round like the CSV does; infinities become strings since JSON lacks them."""
    if value is None or spec == "s":
        return value
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if spec == "d":
        return round(value, 4) if isinstance(value, float) else int(value)
    digits = int(spec[1:-1]) if spec.startswith(".") and spec.endswith("f") else None
    return round(float(value), digits) if digits is not None else value


def write_csv(report: Report, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# config: {json.dumps(report.config, sort_keys=True)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(report.header)
        w.writerows(report.formatted())
    return path


def write_json(report: Report, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"config": report.config, "columns": report.header, "rows": report.json_rows()}
    payload.update(report.extra)
    path.write_text(json.dumps(payload, indent=2, sort_keys=False) + "\n", encoding="utf-8")
    return path


def write_report(report: Report, out_dir: str | Path, fmt: str = "both") -> list[Path]:
    if fmt not in FORMATS:
        raise ValueError(f"unknown report format {fmt!r}")
    out = Path(out_dir)
    written = []
    if fmt in ("csv", "both"):
        written.append(write_csv(report, out / f"{report.name}.csv"))
    if fmt in ("json", "both"):
        written.append(write_json(report, out / f"{report.name}.json"))
    return written


def read_csv_report(path: str | Path) -> tuple[dict, list[dict[str, str]]]:
    """Inverse of :func:`write_csv`: (config, rows as strings)."""
    with open(path, encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if not first.startswith("# config: "):
            raise ValueError(f"{path}: missing config line")
        config = json.loads(first[len("# config: "):])
        return config, list(csv.DictReader(fh))


# --------------------------------------------------------------------------- #
# Row builders
# --------------------------------------------------------------------------- #

def _model_summary(model: RegressionResult | None) -> dict:
    if model is None:
        return {"r_squared": None, "df_num": None, "df_den": None,
                "f_statistic": None, "model_p": None}
    return {"r_squared": model.r_squared, "df_num": model.df[0], "df_den": model.df[1],
            "f_statistic": model.f_statistic, "model_p": model.p_value}


def verify_report(ordered: Sequence[TrustedProfile], config: dict) -> Report:
    """Trusted labelers by quality index; SC shown on the 0-100 scale."""
    rows = []
    for p in ordered:
        rows.append({
            "labeler_id": p.labeler_id,
            "verified_uis": p.n_verified,
            "precision_mean": p.precision_t,
            "precision_sd": p.precision_sd,
            "sc_mean": None if p.sc is None else p.sc * 100,
            "sc_sd": None if p.sc_sd is None else p.sc_sd * 100,
            "q": p.q,
        })
    cols = [("labeler_id", "s"), ("verified_uis", "d"), ("precision_mean", ".4f"),
            ("precision_sd", ".4f"), ("sc_mean", ".1f"), ("sc_sd", ".1f"), ("q", ".4f")]
    return Report("verify", cols, rows, config)


def worker_profile_report(workers: Sequence[WorkerProfile], config: dict) -> Report:
    vocab = workers[0].distribution.vocabulary if workers else ()
    rows = []
    for w in workers:
        row = {
            "worker_id": w.worker_id, "attempted": w.attempted, "accepted": w.accepted,
            "rejected": w.rejected, "precision_amt": w.precision_amt, "eui_amt": w.eui_amt,
            "tot_amt_s": w.tot_amt, "n_elements": w.n_elements,
        }
        row.update({f"n_{c}": n for c, n in w.distribution.as_dict().items()})
        rows.append(row)
    cols = [("worker_id", "s"), ("attempted", "d"), ("accepted", "d"), ("rejected", "d"),
            ("precision_amt", ".4f"), ("eui_amt", ".2f"), ("tot_amt_s", ".1f"),
            ("n_elements", "d")] + [(f"n_{c}", "d") for c in vocab]
    return Report("profiles", cols, rows, config)


def trusted_profile_report(trusted: Sequence[TrustedProfile], config: dict) -> Report:
    vocab = trusted[0].distribution.vocabulary if trusted else ()
    rows = []
    for t in trusted:
        row = {"labeler_id": t.labeler_id, "n_uis": t.n_uis, "n_elements": t.n_elements,
               "precision_t": t.precision_t, "sc": t.sc, "q": t.q, "eui_t": t.eui_t}
        row.update({f"n_{c}": n for c, n in t.distribution.as_dict().items()})
        rows.append(row)
    cols = [("labeler_id", "s"), ("n_uis", "d"), ("n_elements", "d"), ("precision_t", ".4f"),
            ("sc", ".4f"), ("q", ".4f"), ("eui_t", ".1f")] + [(f"n_{c}", "d") for c in vocab]
    return Report("profiles_trusted", cols, rows, config)


SWEEP_COLUMNS = [
    ("trusted_size", "d"), ("trusted_ids", "s"), ("uis_removed", "d"),
    ("uis_removed_pct", ".2f"), ("workers", "d"), ("accepted_hits", "d"),
    ("rejected_hits", "d"), ("precision_mean", ".4f"), ("precision_sd", ".4f"),
    ("r_squared", ".4f"), ("df_num", "d"), ("df_den", "d"), ("f_statistic", ".1f"),
    ("model_p", ".4f"),
]


def sweep_row_dict(row: SweepRow) -> dict:
    out = {
        "trusted_size": row.trusted_size,
        "trusted_ids": " ".join(row.trusted_ids),
        "uis_removed": row.uis_removed if row.trusted_size else None,
        "uis_removed_pct": row.uis_removed_fraction * 100 if row.trusted_size else None,
        "workers": row.workers_in_subset,
        "accepted_hits": row.accepted_hits,
        "rejected_hits": row.rejected_hits,
        "precision_mean": row.precision_mean,
        "precision_sd": row.precision_sd,
    }
    out.update(_model_summary(row.model))
    return out


def sweep_report(rows: Sequence[SweepRow], config: dict, name: str = "sweep") -> Report:
    return Report(name, list(SWEEP_COLUMNS), [sweep_row_dict(r) for r in rows], config)


def best_row(rows: Sequence[SweepRow]) -> SweepRow | None:
    fitted = [r for r in rows if r.model is not None]
    return max(fitted, key=lambda r: (r.model.r_squared, -r.trusted_size)) if fitted else None


def score_report(scores: Sequence[DgtScore], trusted_ids: Sequence[str], config: dict) -> Report:
    rows = []
    for s in scores:
        row = {"worker_id": s.worker_id, "avg_p": s.avg_p}
        row.update({f"p_{t}": s.per_trusted_p.get(t) for t in trusted_ids})
        row.update({f"d_{t}": s.per_trusted_d.get(t) for t in trusted_ids})
        rows.append(row)
    cols = ([("worker_id", "s")] + [(f"p_{t}", ".4f") for t in trusted_ids]
            + [("avg_p", ".4f")] + [(f"d_{t}", ".4f") for t in trusted_ids])
    return Report("dgt_scores", cols, rows, config)


def baseline_report(rep: BaselineReport, config: dict) -> Report:
    """Per-worker factors plus an ``R2`` summary row (and the two-factor model in JSON)."""
    p_cols = [f"p_{t}" for t in rep.trusted_ids]
    rows = []
    for r in rep.rows:
        row = {"worker_id": r.worker_id, "precision_amt": r.precision_amt, "avg_p": r.avg_p,
               "attempted": r.attempted, "tot_amt": r.tot_amt, "eui_amt": r.eui_amt,
               "gof_pl": r.gof_pl}
        row.update({f"p_{t}": r.per_trusted_p[t] for t in rep.trusted_ids})
        rows.append(row)
    summary = {"worker_id": "R2"}
    for name, model in rep.factor_models.items():
        summary[name] = None if model is None else model.r_squared
    rows.append(summary)
    cols = ([("worker_id", "s"), ("precision_amt", ".4f")] + [(c, ".4f") for c in p_cols]
            + [("avg_p", ".4f"), ("attempted", "d"), ("tot_amt", ".1f"), ("eui_amt", ".2f"),
               ("gof_pl", ".4f")])
    extra = {
        "factor_models": {k: None if m is None else m.as_dict()
                          for k, m in rep.factor_models.items()},
        "two_factor": None if rep.two_factor is None else {
            "factors": ["avg_p", "eui_amt"], **rep.two_factor.as_dict()},
    }
    return Report("baselines", cols, rows, config, extra)


def baseline_summary_lines(rep: BaselineReport) -> list[str]:
    lines = []
    for name, model in rep.factor_models.items():
        r2 = "absent" if model is None else f"{model.r_squared:.4f}"
        lines.append(f"R2[{name}] = {r2}")
    if rep.two_factor is not None:
        m = rep.two_factor
        lines.append(
            f"two-factor (avg_p, eui_amt): R2 = {m.r_squared:.4f}, "
            f"F({m.df[0]},{m.df[1]}) = {m.f_statistic:.1f}, "
            f"beta = {m.standardized_betas[0]:.4f}, {m.standardized_betas[1]:.4f}"
        )
    return lines


def powerlaw_report(results: Sequence[tuple[str, Any]], config: dict) -> Report:
    """``results`` pairs an id with a GofResult, or with None when no fit exists."""
    rows = []
    for ident, res in results:
        if res is None:
            rows.append({"id": ident})
            continue
        rows.append({"id": ident, "alpha": res.fit.alpha, "xmin": res.fit.xmin,
                     "n_tail": res.fit.n_tail, "n": res.fit.n, "d_statistic": res.fit.d_statistic,
                     "p_value": res.p_value, "replicates": res.replicates,
                     "discarded": res.discarded})
    cols = [("id", "s"), ("alpha", ".4f"), ("xmin", ".4f"), ("n_tail", "d"), ("n", "d"),
            ("d_statistic", ".4f"), ("p_value", ".4f"), ("replicates", "d"),
            ("discarded", "d")]
    return Report("powerlaw", cols, rows, config)


def modes_report(results: Sequence[ModeResult], config: dict) -> Report:
    rows = []
    for m in results:
        for r in m.rows:
            row = {"mode": m.ks_config.label, "target_gap": m.target_gap, "max_gap": m.max_gap}
            row.update(sweep_row_dict(r))
            rows.append(row)
    cols = [("mode", "s"), ("target_gap", ".4f"), ("max_gap", ".4f")] + list(SWEEP_COLUMNS)
    extra = {"best_mode": results[0].ks_config.label if results else None}
    return Report("modes", cols, rows, config, extra)
