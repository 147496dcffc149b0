"""Figures written next to the CSV/JSON reports (non-interactive backend)."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from dgtqc.dgt import BaselineReport, SweepRow  # noqa: E402
from dgtqc.metrics import TrustedProfile, WorkerProfile, rank_frequencies  # noqa: E402


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def rank_frequency_figure(
    trusted: Sequence[TrustedProfile],
    workers: Sequence[WorkerProfile],
    path: str | Path,
    groups: Mapping[str, str] | None = None,
) -> Path:
    """Mean-normalized class frequencies by rank, log-scaled.

    Trusted distributions are pair-averaged so both vocabularies share the
    x axis. ``groups`` optionally maps worker ids to a legend group.
    """
    fig, ax = plt.subplots(figsize=(6, 4))
    for t in trusted:
        if t.distribution.total == 0:
            continue
        y = rank_frequencies(t.distribution, pair_average=True)
        ax.plot(range(1, len(y) + 1), y, color="black", lw=2, label=f"trusted {t.labeler_id}")
    colors = {}
    for w in workers:
        if w.distribution.total == 0:
            continue
        y = rank_frequencies(w.distribution)
        group = (groups or {}).get(w.worker_id, "worker")
        if group not in colors:
            colors[group] = f"C{len(colors)}"
            label = group
        else:
            label = None
        ax.plot(range(1, len(y) + 1), y, color=colors[group], alpha=0.5, lw=1, label=label)
    ax.set_yscale("symlog", linthresh=0.01)
    ax.set_xlabel("class rank")
    ax.set_ylabel("frequency / mean frequency")
    ax.legend(fontsize=7)
    return _save(fig, path)


def sweep_figure(rows: Sequence[SweepRow], path: str | Path) -> Path:
    fitted = [r for r in rows if r.model is not None]
    fig, ax1 = plt.subplots(figsize=(6, 4))
    ax1.plot([r.trusted_size for r in fitted], [r.model.r_squared for r in fitted],
             "o-", color="C0")
    ax1.set_xlabel("trusted set size k")
    ax1.set_ylabel("R$^2$ (precision ~ avg p)", color="C0")
    ax1.set_ylim(0, 1)
    ax2 = ax1.twinx()
    ax2.bar([r.trusted_size for r in rows], [r.workers_in_subset for r in rows],
            alpha=0.25, color="C1")
    ax2.set_ylabel("workers in testing subset", color="C1")
    return _save(fig, path)


def baseline_figure(rep: BaselineReport, path: str | Path) -> Path:
    fig, (a, b, c) = plt.subplots(1, 3, figsize=(12, 3.8))
    y = [r.precision_amt for r in rep.rows]
    a.scatter([r.avg_p for r in rep.rows], y, s=15)
    a.set_xlabel("avg p")
    a.set_ylabel("precision (accepted / attempted)")
    b.scatter([r.eui_amt for r in rep.rows], y, s=15, color="C2")
    b.set_xlabel("elements per HIT")
    names = list(rep.factor_models)
    r2 = [m.r_squared if m is not None else 0.0 for m in rep.factor_models.values()]
    if rep.two_factor is not None:
        names.append("avg_p+eui")
        r2.append(rep.two_factor.r_squared)
    c.barh(names, r2, color="C4")
    c.set_xlim(0, 1)
    c.set_xlabel("R$^2$")
    c.invert_yaxis()
    return _save(fig, path)
