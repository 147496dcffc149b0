"""Per-person quality quantities and profile assembly.

Trusted labelers get a verified precision (macro-averaged over screenshots),
a subjective completeness, and their product, the quality index. Crowdworkers
get an acceptance-based precision plus volume and time factors.
"""

from __future__ import annotations

import logging
import statistics
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from dgtqc.corpus import Corpus, WorkerTaskRecord
from dgtqc.errors import ArgumentError, DegenerateError

log = logging.getLogger(__name__)

NORM_MODES = ("raw", "mean", "proportion")


@dataclass(frozen=True)
class ClassDistribution:
    vocabulary: tuple[str, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.vocabulary) != len(self.counts):
            raise ArgumentError("vocabulary and counts differ in length")
        if any(c < 0 for c in self.counts):
            raise ArgumentError("counts must be non-negative")

    @property
    def total(self) -> int:
        return sum(self.counts)

    def as_dict(self) -> dict[str, int]:
        return dict(zip(self.vocabulary, self.counts))

    def nonzero(self) -> "ClassDistribution":
        """The same distribution with zero-count classes dropped."""
        keep = [(v, c) for v, c in zip(self.vocabulary, self.counts) if c > 0]
        return ClassDistribution(tuple(v for v, _ in keep), tuple(c for _, c in keep))

    def scaled(self, factor: int) -> "ClassDistribution":
        return ClassDistribution(self.vocabulary, tuple(c * factor for c in self.counts))

    def __add__(self, other: "ClassDistribution") -> "ClassDistribution":
        if self.vocabulary != other.vocabulary:
            raise ArgumentError("cannot add distributions over different vocabularies")
        return ClassDistribution(
            self.vocabulary, tuple(a + b for a, b in zip(self.counts, other.counts))
        )


@dataclass(frozen=True)
class ProfileConfig:
    """How labels are turned into distributions.

    ``aliases`` maps a raw label to its canonical class (curation merges such
    as a misspelled class name); it is applied before vocabulary matching.
    """

    include_zeros: bool = True
    include_custom: bool = False
    aliases: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class TrustedProfile:
    labeler_id: str
    distribution: ClassDistribution
    screenshots: frozenset[str]
    n_elements: int
    eui_t: float
    n_verified: int = 0
    precision_t: float | None = None
    precision_sd: float | None = None
    sc: float | None = None
    sc_sd: float | None = None
    q: float | None = None

    @property
    def n_uis(self) -> int:
        return len(self.screenshots)

    @property
    def flagged(self) -> bool:
        """True when quality fields could not be computed."""
        return self.q is None


@dataclass(frozen=True)
class WorkerProfile:
    worker_id: str
    distribution: ClassDistribution
    attempted: int
    accepted: int
    rejected: int
    precision_amt: float
    eui_amt: float
    tot_amt: float
    n_elements: int
    screenshots: frozenset[str] = frozenset()


# --------------------------------------------------------------------------- #
# Quality measures
# --------------------------------------------------------------------------- #

def precision_trusted(per_screenshot: Sequence[tuple[int, int]]) -> float:
    """Mean over screenshots of correct / (correct + incorrect).

    Each screenshot contributes equally regardless of how many elements it
    holds; counts are not pooled.
    """
    if not per_screenshot:
        raise ArgumentError("no screenshots to average")
    ratios = []
    for correct, incorrect in per_screenshot:
        if correct < 0 or incorrect < 0:
            raise ArgumentError("verdict counts must be non-negative")
        if correct + incorrect == 0:
            raise ArgumentError("screenshot with no verified elements")
        ratios.append(correct / (correct + incorrect))
    return sum(ratios) / len(ratios)


def subjective_completeness(scores: Iterable[float | None]) -> float:
    """Mean completeness score rescaled from 0-100 to 0-1; absent scores skipped."""
    present = [s for s in scores if s is not None]
    if not present:
        raise ArgumentError("no completeness scores recorded")
    for s in present:
        if not 0 <= s <= 100:
            raise ArgumentError(f"completeness {s} outside [0, 100]")
    return sum(present) / len(present) / 100.0


def quality_index(precision: float, sc: float) -> float:
    for name, v in (("precision", precision), ("sc", sc)):
        if not 0.0 <= v <= 1.0:
            raise ArgumentError(f"{name}={v} outside [0, 1]")
    return precision * sc


def precision_worker(accepted: int, rejected: int) -> float:
    if accepted < 0 or rejected < 0:
        raise ArgumentError("HIT counts must be non-negative")
    if accepted + rejected == 0:
        raise ArgumentError("precision undefined for a worker with no attempted HITs")
    return accepted / (accepted + rejected)


# --------------------------------------------------------------------------- #
# Distributions
# --------------------------------------------------------------------------- #

def class_distribution(
    labels: Iterable[str],
    vocabulary: Sequence[str],
    include_zeros: bool = True,
    include_custom: bool = False,
    aliases: Mapping[str, str] | None = None,
) -> ClassDistribution:
    """Count labels per vocabulary class.

    Labels outside the vocabulary are dropped, or appended as extra classes
    (in order of first appearance) when ``include_custom`` is set.
    """
    if not vocabulary:
        raise ArgumentError("vocabulary is empty")
    aliases = aliases or {}
    counts = Counter()
    custom = []
    known = set(vocabulary)
    for raw in labels:
        label = raw.strip()
        label = aliases.get(label, label)
        if label not in known and label not in counts:
            custom.append(label)
        counts[label] += 1
    vocab = list(vocabulary)
    if include_custom:
        vocab.extend(c for c in custom if c)
    dist = ClassDistribution(tuple(vocab), tuple(counts.get(v, 0) for v in vocab))
    return dist if include_zeros else dist.nonzero()


def normalize_distribution(dist: ClassDistribution, mode: str = "mean") -> list[float]:
    """Counts as floats, divided by the mean count, or divided by the total."""
    if mode not in NORM_MODES:
        raise ArgumentError(f"unknown normalization mode {mode!r}")
    total = dist.total
    if total <= 0:
        raise DegenerateError("distribution has zero total")
    counts = np.asarray(dist.counts, dtype=float)
    if mode == "raw":
        return counts.tolist()
    if mode == "proportion":
        return (counts / total).tolist()
    return (counts * (len(counts) / total)).tolist()


def rank_frequencies(dist: ClassDistribution, pair_average: bool = False) -> list[float]:
    """Mean-normalized frequencies sorted in decreasing order.

    With ``pair_average`` every two consecutive ranks are averaged into one,
    which puts a 20-class distribution on the same axis as a 10-class one.
    Presentation only; never fed to the KS test.
    """
    values = sorted(normalize_distribution(dist, "mean"), reverse=True)
    if pair_average:
        values = [
            sum(values[i:i + 2]) / len(values[i:i + 2]) for i in range(0, len(values), 2)
        ]
    return values


# --------------------------------------------------------------------------- #
# Profiles
# --------------------------------------------------------------------------- #

def _sd(values: Sequence[float]) -> float | None:
    return statistics.stdev(values) if len(values) > 1 else None


def trusted_profiles(corpus: Corpus, config: ProfileConfig = ProfileConfig()) -> list[TrustedProfile]:
    by_labeler = defaultdict(list)
    for lab in corpus.trusted_labelings:
        by_labeler[lab.labeler_id].append(lab)

    profiles = []
    for labeler_id in sorted(by_labeler):
        labs = by_labeler[labeler_id]
        labels = [b.class_label for lab in labs for b in lab.boxes]
        dist = class_distribution(labels, corpus.trusted_vocabulary, config.include_zeros,
                                  config.include_custom, config.aliases)
        n_elements = len(labels)
        verified = [lab for lab in labs if lab.fully_verified]
        ratios = [c / (c + i) for c, i in (lab.verdict_counts() for lab in verified)]
        scores = [lab.completeness for lab in labs if lab.completeness is not None]
        precision = sd_p = sc = sd_sc = q = None
        if verified and scores:
            precision = precision_trusted([lab.verdict_counts() for lab in verified])
            sd_p = _sd(ratios)
            sc = subjective_completeness(scores)
            sd_sc = _sd([s / 100.0 for s in scores])
            q = quality_index(precision, sc)
        else:
            log.warning("trusted labeler %s has no verified screenshots with completeness; "
                        "quality fields left empty", labeler_id)
        profiles.append(TrustedProfile(
            labeler_id=labeler_id,
            distribution=dist,
            screenshots=frozenset(lab.screenshot_id for lab in labs),
            n_elements=n_elements,
            eui_t=n_elements / len(labs),
            n_verified=len(verified),
            precision_t=precision,
            precision_sd=sd_p,
            sc=sc,
            sc_sd=sd_sc,
            q=q,
        ))
    return profiles


def worker_profiles(
    records: Iterable[WorkerTaskRecord],
    vocabulary: Sequence[str],
    config: ProfileConfig = ProfileConfig(),
) -> list[WorkerProfile]:
    """One profile per worker over all attempted HITs (accepted and rejected)."""
    by_worker = defaultdict(list)
    for rec in records:
        by_worker[rec.worker_id].append(rec)

    profiles = []
    for worker_id in sorted(by_worker):
        recs = by_worker[worker_id]
        labels = [b.class_label for r in recs for b in r.boxes]
        accepted = sum(1 for r in recs if r.status == "accepted")
        rejected = len(recs) - accepted
        profiles.append(WorkerProfile(
            worker_id=worker_id,
            distribution=class_distribution(labels, vocabulary, config.include_zeros,
                                            config.include_custom, config.aliases),
            attempted=len(recs),
            accepted=accepted,
            rejected=rejected,
            precision_amt=precision_worker(accepted, rejected),
            eui_amt=len(labels) / len(recs),
            tot_amt=sum(r.time_on_task for r in recs) / len(recs),
            n_elements=len(labels),
            screenshots=frozenset(r.screenshot_id for r in recs),
        ))
    return profiles


def build_profiles(
    corpus: Corpus, config: ProfileConfig = ProfileConfig()
) -> tuple[list[TrustedProfile], list[WorkerProfile]]:
    return (
        trusted_profiles(corpus, config),
        worker_profiles(corpus.worker_records, corpus.worker_vocabulary, config),
    )
