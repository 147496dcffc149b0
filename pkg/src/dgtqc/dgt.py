"""Distributional ground truth scoring, testing subsets, sweeps and baselines.

A worker is scored by running the two-sample KS test between their class
frequency values and those of each trusted labeler, then averaging the
p-values. Trusted screenshots are removed from the worker pool before
scoring, so trusted and tested work never overlap.
"""

from __future__ import annotations

import logging
import statistics
import zlib
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from dgtqc.corpus import Corpus
from dgtqc.errors import ArgumentError, DegenerateError, DgtError, SingularityError
from dgtqc.metrics import (
    NORM_MODES,
    ClassDistribution,
    ProfileConfig,
    TrustedProfile,
    WorkerProfile,
    normalize_distribution,
    worker_profiles,
)
from dgtqc.powerlaw import DEFAULT_REPLICATES, GofResult, fit_powerlaw, gof_pvalue
from dgtqc.stats import DEFAULT_RESAMPLES, KS_METHODS, RegressionResult, ks_two_sample, ols

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class KsConfig:
    """What is fed to the KS test and how its p-value is computed."""

    norm: str = "mean"
    pmethod: str = "asymptotic"
    include_zeros: bool = True
    seed: int = 0
    n_resamples: int = DEFAULT_RESAMPLES

    def __post_init__(self):
        if self.norm not in NORM_MODES:
            raise ArgumentError(f"unknown normalization {self.norm!r}")
        if self.pmethod not in KS_METHODS:
            raise ArgumentError(f"unknown p-value method {self.pmethod!r}")

    @property
    def label(self) -> str:
        return f"{self.norm}/{'zeros' if self.include_zeros else 'nozeros'}/{self.pmethod}"


@dataclass(frozen=True)
class InclusionRule:
    min_attempted: int = 10
    min_elements: int = 100

    def __post_init__(self):
        if self.min_attempted < 1 or self.min_elements < 1:
            raise ArgumentError("inclusion thresholds must be positive")

    def admits(self, worker: WorkerProfile) -> bool:
        return worker.attempted >= self.min_attempted and worker.n_elements >= self.min_elements


@dataclass(frozen=True)
class PowerLawConfig:
    mode: str = "continuous"
    replicates: int = DEFAULT_REPLICATES
    seed: int = 0
    values: str = "raw"  # raw | mean | proportion


@dataclass(frozen=True)
class DgtScore:
    worker_id: str
    per_trusted_p: dict[str, float]
    avg_p: float
    ks_config: KsConfig
    per_trusted_d: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class TestingSubset:
    trusted_size: int
    trusted_ids: tuple[str, ...]
    removed_screenshots: frozenset[str]
    uis_removed_fraction: float
    workers: tuple[WorkerProfile, ...]
    screenshots: frozenset[str]

    __test__ = False  # not a pytest class

    @property
    def uis_removed(self) -> int:
        return len(self.removed_screenshots)

    def __iter__(self):
        # unpacks as (trusted ids, workers)
        return iter((self.trusted_ids, self.workers))


@dataclass(frozen=True)
class SweepRow:
    trusted_size: int
    trusted_ids: tuple[str, ...]
    uis_removed: int
    uis_removed_fraction: float
    workers_in_subset: int
    accepted_hits: int
    rejected_hits: int
    precision_mean: float | None
    precision_sd: float | None
    model: RegressionResult | None
    scores: tuple[DgtScore, ...] = ()
    screenshots: frozenset[str] = frozenset()
    removed_screenshots: frozenset[str] = frozenset()


@dataclass(frozen=True)
class BaselineRow:
    worker_id: str
    precision_amt: float
    per_trusted_p: dict[str, float]
    avg_p: float
    attempted: int
    tot_amt: float
    eui_amt: float
    gof_pl: float | None
    gof: GofResult | None = None


@dataclass(frozen=True)
class BaselineReport:
    rows: tuple[BaselineRow, ...]
    factor_models: dict[str, RegressionResult | None]
    two_factor: RegressionResult | None
    trusted_ids: tuple[str, ...]
    ks_config: KsConfig
    powerlaw_config: PowerLawConfig


# --------------------------------------------------------------------------- #

def order_trusted(profiles: Iterable[TrustedProfile]) -> list[TrustedProfile]:
    """Trusted labelers by descending quality index.

    Ties go to the higher precision, then to the lexicographically smaller id.
    Profiles without a quality index are dropped.
    """
    kept = []
    for p in profiles:
        if p.q is None:
            log.warning("trusted labeler %s has no quality index; excluded", p.labeler_id)
            continue
        kept.append(p)
    return sorted(kept, key=lambda p: (-p.q, -p.precision_t, p.labeler_id))


def mean_p(values: Iterable[float]) -> float:
    vals = list(values)
    if not vals:
        raise ArgumentError("no p-values to average")
    return sum(vals) / len(vals)


def _stream_key(*ids: str) -> tuple[int, ...]:
    return tuple(zlib.crc32(i.encode("utf-8")) for i in ids)


def _ks_values(dist: ClassDistribution, cfg: KsConfig, who: str) -> list[float]:
    d = dist if cfg.include_zeros else dist.nonzero()
    if d.total <= 0:
        raise DegenerateError(f"{who} has an empty class distribution")
    return normalize_distribution(d, cfg.norm)


def dgt_score(
    worker: WorkerProfile, trusted: Sequence[TrustedProfile], ks_config: KsConfig = KsConfig()
) -> DgtScore:
    """Average KS p-value of a worker against every trusted labeler.

    Each side is normalized by its own statistics. The two value lists may
    differ in length (different vocabularies); classes are never aligned.
    """
    if not trusted:
        raise ArgumentError("trusted set is empty")
    wv = _ks_values(worker.distribution, ks_config, f"worker {worker.worker_id}")
    ps, ds = {}, {}
    for t in trusted:
        tv = _ks_values(t.distribution, ks_config, f"trusted labeler {t.labeler_id}")
        seed = np.random.SeedSequence(
            ks_config.seed, spawn_key=_stream_key(worker.worker_id, t.labeler_id)
        )
        res = ks_two_sample(wv, tv, ks_config.pmethod, seed=seed,
                            n_resamples=ks_config.n_resamples)
        ps[t.labeler_id] = res.p_value
        ds[t.labeler_id] = res.d_statistic
    return DgtScore(worker.worker_id, ps, mean_p(ps.values()), ks_config, ds)


def testing_subset(
    corpus: Corpus,
    ordered_trusted: Sequence[TrustedProfile],
    k: int,
    rule: InclusionRule = InclusionRule(),
    profile_config: ProfileConfig = ProfileConfig(),
) -> TestingSubset:
    """Workers eligible for scoring once the top-k trusted screenshots are removed.

    Worker profiles are recomputed over the surviving HITs and the inclusion
    rule is applied again. Workers with no labeled elements left are dropped.
    """
    if not 1 <= k <= len(ordered_trusted):
        raise ArgumentError(f"trusted set size must be in 1..{len(ordered_trusted)}, got {k}")
    top = ordered_trusted[:k]
    removed = frozenset().union(*(t.screenshots for t in top))
    surviving = [r for r in corpus.worker_records if r.screenshot_id not in removed]
    profiles = worker_profiles(surviving, corpus.worker_vocabulary, profile_config)
    workers = tuple(p for p in profiles if rule.admits(p) and p.n_elements > 0)
    pool = corpus.screenshot_ids
    return TestingSubset(
        trusted_size=k,
        trusted_ids=tuple(t.labeler_id for t in top),
        removed_screenshots=removed,
        uis_removed_fraction=len(removed) / len(pool) if pool else 0.0,
        workers=workers,
        screenshots=frozenset().union(*(w.screenshots for w in workers)),
    )


def _subset_stats(workers: Sequence[WorkerProfile]):
    prec = [w.precision_amt for w in workers]
    mean = statistics.fmean(prec) if prec else None
    sd = statistics.stdev(prec) if len(prec) > 1 else None
    return (
        sum(w.accepted for w in workers),
        sum(w.rejected for w in workers),
        mean,
        sd,
    )


def _score_all(workers, trusted, cfg):
    scores = []
    for w in workers:
        try:
            scores.append(dgt_score(w, trusted, cfg))
        except ArgumentError as exc:
            log.warning("worker %s not scored: %s", w.worker_id, exc)
    return scores


def _fit_or_none(columns, y) -> RegressionResult | None:
    if len(y) < 3:
        return None
    try:
        return ols(columns, y)
    except (ArgumentError, SingularityError) as exc:
        log.info("regression skipped: %s", exc)
        return None


def reference_row(
    corpus: Corpus,
    rule: InclusionRule = InclusionRule(),
    profile_config: ProfileConfig = ProfileConfig(),
) -> SweepRow:
    """Descriptive row for the full worker pool (no trusted set, no model)."""
    profiles = worker_profiles(corpus.worker_records, corpus.worker_vocabulary, profile_config)
    workers = [p for p in profiles if rule.admits(p) and p.n_elements > 0]
    acc, rej, mean, sd = _subset_stats(workers)
    return SweepRow(0, (), 0, 0.0, len(workers), acc, rej, mean, sd, None,
                    screenshots=frozenset().union(*(w.screenshots for w in workers)))


def sweep(
    corpus: Corpus,
    ordered_trusted: Sequence[TrustedProfile],
    k_range: Iterable[int],
    ks_config: KsConfig = KsConfig(),
    rule: InclusionRule = InclusionRule(),
    profile_config: ProfileConfig = ProfileConfig(),
) -> list[SweepRow]:
    """One row per trusted-set size: subset statistics and precision ~ avg_p model."""
    ks = list(k_range)
    for k in ks:
        if not 1 <= k <= len(ordered_trusted):
            raise ArgumentError(
                f"trusted set size {k} outside 1..{len(ordered_trusted)}"
            )
    rows = []
    for k in ks:
        sub = testing_subset(corpus, ordered_trusted, k, rule, profile_config)
        top = ordered_trusted[:k]
        scores = _score_all(sub.workers, top, ks_config)
        by_id = {w.worker_id: w for w in sub.workers}
        model = _fit_or_none(
            [[s.avg_p for s in scores]], [by_id[s.worker_id].precision_amt for s in scores]
        )
        acc, rej, mean, sd = _subset_stats(sub.workers)
        rows.append(SweepRow(
            trusted_size=k,
            trusted_ids=sub.trusted_ids,
            uis_removed=sub.uis_removed,
            uis_removed_fraction=sub.uis_removed_fraction,
            workers_in_subset=len(sub.workers),
            accepted_hits=acc,
            rejected_hits=rej,
            precision_mean=mean,
            precision_sd=sd,
            model=model,
            scores=tuple(scores),
            screenshots=sub.screenshots,
            removed_screenshots=sub.removed_screenshots,
        ))
    return rows


def _worker_seed(root: int, worker_id: str) -> int:
    ss = np.random.SeedSequence(root, spawn_key=_stream_key(worker_id))
    return int(ss.generate_state(1)[0])


def worker_gof(worker: WorkerProfile, config: PowerLawConfig = PowerLawConfig()) -> GofResult:
    """Power-law goodness of fit of a worker's class counts (zeros dropped)."""
    dist = worker.distribution.nonzero()
    dropped = len(worker.distribution.counts) - len(dist.counts)
    if dropped:
        log.debug("worker %s: %d zero classes dropped before power-law fit",
                  worker.worker_id, dropped)
    if dist.total <= 0:
        raise DegenerateError(f"worker {worker.worker_id} has no labeled elements")
    values = normalize_distribution(dist, config.values)
    fit = fit_powerlaw(values, config.mode)
    return gof_pvalue(values, fit, config.replicates, _worker_seed(config.seed, worker.worker_id))


def baseline_compare(
    workers: Sequence[WorkerProfile],
    trusted: Sequence[TrustedProfile],
    ks_config: KsConfig = KsConfig(),
    powerlaw_config: PowerLawConfig = PowerLawConfig(),
) -> BaselineReport:
    """Compare avg_p against volume, time and power-law factors.

    Rows are ordered by attempted HITs (descending), then worker id.
    """
    if not workers:
        raise ArgumentError("no workers to compare")
    rows = []
    for w in sorted(workers, key=lambda w: (-w.attempted, w.worker_id)):
        score = dgt_score(w, trusted, ks_config)
        try:
            gof = worker_gof(w, powerlaw_config)
        except DgtError as exc:
            log.warning("worker %s: no power-law fit (%s)", w.worker_id, exc)
            gof = None
        rows.append(BaselineRow(
            worker_id=w.worker_id,
            precision_amt=w.precision_amt,
            per_trusted_p=score.per_trusted_p,
            avg_p=score.avg_p,
            attempted=w.attempted,
            tot_amt=w.tot_amt,
            eui_amt=w.eui_amt,
            gof_pl=None if gof is None else gof.p_value,
            gof=gof,
        ))

    y = [r.precision_amt for r in rows]
    factors = {f"p_{tid}": [r.per_trusted_p[tid] for r in rows] for tid in
               (t.labeler_id for t in trusted)}
    factors["avg_p"] = [r.avg_p for r in rows]
    factors["attempted"] = [r.attempted for r in rows]
    factors["tot_amt"] = [r.tot_amt for r in rows]
    factors["eui_amt"] = [r.eui_amt for r in rows]
    models = {name: _fit_or_none([col], y) for name, col in factors.items()}
    with_gof = [r for r in rows if r.gof_pl is not None]
    models["gof_pl"] = _fit_or_none(
        [[r.gof_pl for r in with_gof]], [r.precision_amt for r in with_gof]
    )
    two = _fit_or_none([factors["avg_p"], factors["eui_amt"]], y) if len(y) > 3 else None
    return BaselineReport(
        rows=tuple(rows),
        factor_models=models,
        two_factor=two,
        trusted_ids=tuple(t.labeler_id for t in trusted),
        ks_config=ks_config,
        powerlaw_config=powerlaw_config,
    )


def config_dict(*configs) -> dict:
    out = {}
    for c in configs:
        out[type(c).__name__] = asdict(c)
    return out


@dataclass(frozen=True)
class ModeResult:
    ks_config: KsConfig
    rows: tuple[SweepRow, ...]
    target_gap: float | None  # mean |R^2 - target| over the targeted sizes
    max_gap: float | None


def all_modes(base: KsConfig = KsConfig()) -> list[KsConfig]:
    """Every normalization crossed with zero handling, other settings kept."""
    return [
        KsConfig(norm, base.pmethod, zeros, base.seed, base.n_resamples)
        for norm in NORM_MODES for zeros in (True, False)
    ]


def compare_modes(
    corpus: Corpus,
    ordered_trusted: Sequence[TrustedProfile],
    k_range: Iterable[int],
    targets: dict[int, float] | None = None,
    base: KsConfig = KsConfig(),
    rule: InclusionRule = InclusionRule(),
    profile_config: ProfileConfig = ProfileConfig(),
) -> list[ModeResult]:
    """Run the sweep under every KS mode; rank modes by distance to target R^2 values.

    ``targets`` maps trusted-set size to an R^2 value. Modes with no scorable
    target size get a gap of None and sort last.
    """
    ks = list(k_range)
    targets = targets or {}
    out = []
    for cfg in all_modes(base):
        rows = sweep(corpus, ordered_trusted, ks, cfg, rule, profile_config)
        gaps = [abs(r.model.r_squared - targets[r.trusted_size])
                for r in rows if r.trusted_size in targets and r.model is not None]
        out.append(ModeResult(
            cfg, tuple(rows),
            statistics.fmean(gaps) if gaps else None,
            max(gaps) if gaps else None,
        ))
    return sorted(out, key=lambda m: (m.target_gap is None, m.target_gap or 0.0))
