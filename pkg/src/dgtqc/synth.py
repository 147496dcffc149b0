"""Seeded synthetic corpora for end-to-end runs without the external dataset.

Trusted labelers draw classes from fixed proportion vectors (by default two
columns of the reference class-count table). Workers come in archetypes:

* honest: the trusted shape, perturbed by symmetric Dirichlet noise
* sloppy: honest shape but far fewer elements per HIT
* spammer: one dominant class
* uniform: every class equally likely

Honest HITs are accepted with probability ``p_honest``; every other
archetype with ``p_malicious``. Time on task is drawn from the same
distribution for every archetype. Box geometry is placeholder only.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from dgtqc.corpus import (
    TRUSTED_VOCABULARY,
    WORKER_VOCABULARY,
    BoundingBox,
    Corpus,
    ScreenshotLabeling,
    WorkerTaskRecord,
    dump_completeness,
    dump_verification,
    dump_worker_log,
    export_corpus,
    format_annotation,
)
from dgtqc.errors import ArgumentError
from dgtqc.reference import TESTING_SET_COUNTS, TRUSTED_EUI, VERIFICATION, trusted_proportions

ARCHETYPES = ("honest", "sloppy", "spammer", "uniform")


@dataclass(frozen=True)
class TrustedArchetype:
    labeler_id: str
    proportions: Mapping[str, float]
    precision: float = 0.95
    completeness: float = 85.0
    elements_per_ui: float = 85.0
    screenshots: int = 12


def reference_archetype(labeler_id: str, screenshots: int = 12) -> TrustedArchetype:
    _, precision, _, sc, _, _ = VERIFICATION[labeler_id]
    return TrustedArchetype(
        labeler_id=labeler_id,
        proportions=trusted_proportions(labeler_id),
        precision=precision,
        completeness=sc,
        elements_per_ui=TRUSTED_EUI[labeler_id],
        screenshots=screenshots,
    )


def _default_trusted():
    return (reference_archetype("VY"), reference_archetype("SV"))


@dataclass(frozen=True)
class SyntheticSpec:
    trusted: tuple[TrustedArchetype, ...] = field(default_factory=_default_trusted)
    workers: Mapping[str, int] = field(
        default_factory=lambda: {"honest": 10, "sloppy": 0, "spammer": 5, "uniform": 5}
    )
    screenshots: int = 240
    hits_per_worker: int = 12
    elements_per_hit: float = 40.0
    dirichlet_noise: float = 0.1
    sloppy_factor: float = 0.25
    spammer_share: float = 0.9
    p_honest: float = 0.9
    p_malicious: float = 0.1
    tot_shape: float = 4.0
    tot_scale: float = 150.0
    sc_sd: float = 8.0
    trusted_vocabulary: tuple[str, ...] = TRUSTED_VOCABULARY
    worker_vocabulary: tuple[str, ...] = WORKER_VOCABULARY

    def validate(self) -> None:
        for t in self.trusted:
            probs = np.array([t.proportions.get(c, 0.0) for c in self.trusted_vocabulary])
            extra = set(t.proportions) - set(self.trusted_vocabulary)
            if extra:
                raise ArgumentError(f"{t.labeler_id}: classes outside vocabulary {sorted(extra)}")
            if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
                raise ArgumentError(
                    f"{t.labeler_id}: proportions must be non-negative and sum to 1 "
                    f"(sum={probs.sum():.6g})"
                )
            if not 0 <= t.precision <= 1 or not 0 <= t.completeness <= 100:
                raise ArgumentError(f"{t.labeler_id}: quality targets out of range")
        unknown = set(self.workers) - set(ARCHETYPES)
        if unknown:
            raise ArgumentError(f"unknown worker archetypes {sorted(unknown)}")
        if any(n < 0 for n in self.workers.values()):
            raise ArgumentError("worker counts must be non-negative")
        if not self.trusted:
            raise ArgumentError("at least one trusted archetype is required")
        assigned = sum(t.screenshots for t in self.trusted)
        if assigned > self.screenshots:
            raise ArgumentError("trusted labelers need more screenshots than the pool holds")
        if self.hits_per_worker > self.screenshots:
            raise ArgumentError("hits_per_worker exceeds the screenshot pool")
        for name in ("dirichlet_noise", "p_honest", "p_malicious", "spammer_share"):
            if not 0 <= getattr(self, name) <= 1:
                raise ArgumentError(f"{name} must lie in [0, 1]")


def project_proportions(
    proportions: Mapping[str, float],
    source_vocabulary: Sequence[str],
    target_vocabulary: Sequence[str],
    target_order: Sequence[str] | None = None,
) -> dict[str, float]:
    """Carry a proportion vector's shape onto a smaller vocabulary.

    Source proportions are sorted in decreasing order and averaged in runs of
    len(source)/len(target) ranks; the averaged values are handed out to the
    target classes in ``target_order`` (most frequent first). Only the
    multiset of values survives, which is all the KS comparison sees.
    """
    values = sorted((proportions.get(c, 0.0) for c in source_vocabulary), reverse=True)
    m = len(target_vocabulary)
    edges = np.linspace(0, len(values), m + 1)
    averaged = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        chunk = values[int(round(lo)):int(round(hi))] or [0.0]
        averaged.append(sum(chunk) / len(chunk))
    total = sum(averaged)
    order = list(target_order or target_vocabulary)
    if sorted(order) != sorted(target_vocabulary):
        raise ArgumentError("target_order must be a permutation of the target vocabulary")
    return {c: v / total for c, v in zip(order, averaged)}


def honest_base(spec: SyntheticSpec, archetype: TrustedArchetype) -> np.ndarray:
    order = [c for c in TESTING_SET_COUNTS if c in spec.worker_vocabulary]
    order += [c for c in spec.worker_vocabulary if c not in order]
    proj = project_proportions(archetype.proportions, spec.trusted_vocabulary,
                               spec.worker_vocabulary, order)
    return np.array([proj[c] for c in spec.worker_vocabulary])


def _boxes(labels: Iterable[str]) -> tuple[BoundingBox, ...]:
    return tuple(BoundingBox(i, 0, i + 1, 1, lab) for i, lab in enumerate(labels))


def _draw_labels(rng, vocab, probs, n):
    counts = rng.multinomial(n, probs)
    labels = np.repeat(np.arange(len(vocab)), counts)
    rng.shuffle(labels)
    return [vocab[i] for i in labels]


def generate(spec: SyntheticSpec = SyntheticSpec(), seed: int = 0) -> Corpus:
    """Build a fully verified synthetic corpus. Deterministic per ``seed``."""
    spec.validate()
    root = np.random.SeedSequence(seed)
    trusted_seq, worker_seq = root.spawn(2)
    sids = [f"ui{i:04d}" for i in range(1, spec.screenshots + 1)]

    labelings = []
    tvocab = list(spec.trusted_vocabulary)
    offset = 0
    for arch, ss in zip(spec.trusted, trusted_seq.spawn(len(spec.trusted))):
        rng = np.random.default_rng(ss)
        probs = np.array([arch.proportions.get(c, 0.0) for c in tvocab])
        for sid in sids[offset:offset + arch.screenshots]:
            n = max(1, int(rng.poisson(arch.elements_per_ui)))
            labels = _draw_labels(rng, tvocab, probs, n)
            verdicts = tuple(bool(v) for v in rng.random(n) < arch.precision)
            sc = float(np.clip(round(rng.normal(arch.completeness, spec.sc_sd), 1), 0, 100))
            labelings.append(ScreenshotLabeling(sid, arch.labeler_id, _boxes(labels),
                                                verdicts, sc))
        offset += arch.screenshots

    wvocab = list(spec.worker_vocabulary)
    records = []
    plan = [a for a in ARCHETYPES for _ in range(spec.workers.get(a, 0))]
    for i, (arch, ss) in enumerate(zip(plan, worker_seq.spawn(len(plan)))):
        rng = np.random.default_rng(ss)
        wid = f"w{i + 1:03d}"
        per_hit = spec.elements_per_hit
        if arch in ("honest", "sloppy"):
            base = honest_base(spec, spec.trusted[i % len(spec.trusted)])
            noise = rng.dirichlet(np.ones(len(wvocab)))
            probs = (1 - spec.dirichlet_noise) * base + spec.dirichlet_noise * noise
            if arch == "sloppy":
                per_hit *= spec.sloppy_factor
        elif arch == "spammer":
            dominant = int(rng.integers(len(wvocab)))
            probs = np.full(len(wvocab), (1 - spec.spammer_share) / (len(wvocab) - 1))
            probs[dominant] = spec.spammer_share
        else:
            probs = np.full(len(wvocab), 1.0 / len(wvocab))
        p_accept = spec.p_honest if arch == "honest" else spec.p_malicious
        chosen = rng.choice(len(sids), size=spec.hits_per_worker, replace=False)
        for j in sorted(chosen):
            n = int(rng.poisson(per_hit))
            records.append(WorkerTaskRecord(
                worker_id=wid,
                screenshot_id=sids[j],
                status="accepted" if rng.random() < p_accept else "rejected",
                time_on_task=round(float(rng.gamma(spec.tot_shape, spec.tot_scale)), 1),
                boxes=_boxes(_draw_labels(rng, wvocab, probs, n)),
            ))
    return Corpus(tuple(labelings), tuple(records), tuple(tvocab), tuple(wvocab))


def worker_archetypes(spec: SyntheticSpec) -> dict[str, str]:
    """Worker id to archetype name, matching :func:`generate`'s numbering."""
    plan = [a for a in ARCHETYPES for _ in range(spec.workers.get(a, 0))]
    return {f"w{i + 1:03d}": a for i, a in enumerate(plan)}


def scale_worker_volume(corpus: Corpus, worker_ids: Iterable[str], factor: int) -> Corpus:
    """Repeat every box of the given workers ``factor`` times (same class mix)."""
    if factor < 1:
        raise ArgumentError("factor must be a positive integer")
    ids = set(worker_ids)
    records = []
    for rec in corpus.worker_records:
        if rec.worker_id in ids:
            labels = [b.class_label for b in rec.boxes for _ in range(factor)]
            rec = replace(rec, boxes=_boxes(labels))
        records.append(rec)
    return replace(corpus, worker_records=tuple(records))


def write_corpus_files(corpus: Corpus, out_dir: str | Path) -> dict[str, Path]:
    """Write annotations, worker log, verification, completeness and snapshot files."""
    out = Path(out_dir)
    ann = out / "annotations"
    for lab in corpus.trusted_labelings:
        path = ann / lab.labeler_id / f"{lab.screenshot_id}.xml"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(format_annotation(lab), encoding="utf-8")
    ann.mkdir(parents=True, exist_ok=True)
    paths = {
        "annotations": ann,
        "worker_log": out / "worker_log.jsonl",
        "verification": out / "verification.csv",
        "completeness": out / "completeness.csv",
        "snapshot": out / "corpus.jsonl",
    }
    writers = {
        "worker_log": lambda buf: dump_worker_log(corpus.worker_records, buf),
        "verification": lambda buf: dump_verification(corpus, buf),
        "completeness": lambda buf: dump_completeness(corpus, buf),
        "snapshot": lambda buf: export_corpus(corpus, buf),
    }
    for key, write in writers.items():
        buf = io.StringIO()
        write(buf)
        paths[key].write_text(buf.getvalue(), encoding="utf-8")
    return paths
