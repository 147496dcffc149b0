import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dgtqc.corpus import (
    TRUSTED_VOCABULARY,
    WORKER_VOCABULARY,
    BoundingBox,
    Corpus,
    ScreenshotLabeling,
    WorkerTaskRecord,
)
from dgtqc.errors import ArgumentError, DegenerateError
from dgtqc.metrics import (
    ClassDistribution,
    ProfileConfig,
    build_profiles,
    class_distribution,
    normalize_distribution,
    precision_trusted,
    precision_worker,
    quality_index,
    rank_frequencies,
    subjective_completeness,
    trusted_profiles,
    worker_profiles,
)
from dgtqc.reference import TRUSTED_COUNTS


def boxes(*labels):
    return tuple(BoundingBox(i, 0, i + 1, 1, lab) for i, lab in enumerate(labels))


class TestPrecisionTrusted:
    def test_macro_average_not_pooled(self):
        assert precision_trusted([(9, 1), (4, 1)]) == pytest.approx(0.85)
        assert precision_trusted([(9, 1), (4, 1)]) != pytest.approx(13 / 15)

    def test_all_correct(self):
        assert precision_trusted([(5, 0), (7, 0)]) == 1.0

    @pytest.mark.parametrize("rows", [[], [(0, 0)], [(-1, 2)]])
    def test_invalid(self, rows):
        with pytest.raises(ArgumentError):
            precision_trusted(rows)

    @given(st.integers(0, 50), st.integers(0, 50), st.integers(1, 10))
    def test_identical_screenshots(self, c, i, k):
        if c + i == 0:
            return
        assert precision_trusted([(c, i)] * k) == pytest.approx(c / (c + i))


class TestCompleteness:
    def test_examples(self):
        assert subjective_completeness([80, 90]) == pytest.approx(0.85)
        assert subjective_completeness([100]) == 1.0

    def test_absent_scores_skipped(self):
        assert subjective_completeness([80, None, 90]) == pytest.approx(0.85)

    def test_all_absent(self):
        with pytest.raises(ArgumentError):
            subjective_completeness([None, None])

    def test_out_of_range(self):
        with pytest.raises(ArgumentError):
            subjective_completeness([101])


class TestQuality:
    @pytest.mark.parametrize("p,sc,q", [(0.928, 0.955, 0.886), (0.974, 0.804, 0.783)])
    def test_reported_rows(self, p, sc, q):
        assert quality_index(p, sc) == pytest.approx(q, abs=0.0005)

    def test_unit(self):
        assert quality_index(1, 1) == 1

    def test_out_of_range(self):
        with pytest.raises(ArgumentError):
            quality_index(1.2, 0.5)

    def test_precision_worker(self):
        assert precision_worker(38, 1) == pytest.approx(0.974, abs=0.001)
        assert precision_worker(0, 34) == 0
        with pytest.raises(ArgumentError):
            precision_worker(0, 0)


class TestDistributions:
    def test_counts_over_worker_vocabulary(self):
        d = class_distribution(["link", "link", "button"], WORKER_VOCABULARY)
        assert d.as_dict()["link"] == 2 and d.as_dict()["button"] == 1
        assert d.total == 3
        assert sum(1 for c in d.counts if c == 0) == 8

    def test_empty(self):
        d = class_distribution([], WORKER_VOCABULARY)
        assert d.total == 0 and len(d.counts) == 10

    def test_custom_classes(self):
        labels = ["link", "mystery", "link", "mystery", "other"]
        assert class_distribution(labels, WORKER_VOCABULARY).total == 2
        d = class_distribution(labels, WORKER_VOCABULARY, include_custom=True)
        assert d.vocabulary[-2:] == ("mystery", "other")
        assert d.counts[-2:] == (2, 1)

    def test_aliases(self):
        d = class_distribution(["textt", "text"], TRUSTED_VOCABULARY, aliases={"textt": "text"})
        assert d.as_dict()["text"] == 2

    def test_case_sensitive(self):
        assert class_distribution(["Link"], WORKER_VOCABULARY).total == 0

    def test_without_zeros(self):
        d = class_distribution(["link", "button"], WORKER_VOCABULARY, include_zeros=False)
        assert d.vocabulary == ("button", "link")

    def test_reference_column(self):
        labels = [c for c, n in zip(TRUSTED_VOCABULARY, TRUSTED_COUNTS["VY"]) for _ in range(n)]
        d = class_distribution(labels, TRUSTED_VOCABULARY)
        assert d.counts == TRUSTED_COUNTS["VY"]
        assert d.as_dict()["image"] == 509 and d.as_dict()["link"] == 1263

    def test_mean_mode(self):
        d = ClassDistribution(WORKER_VOCABULARY, (2, 1) + (0,) * 8)
        v = normalize_distribution(d, "mean")
        assert v[:2] == pytest.approx([20 / 3, 10 / 3])
        assert np.mean(v) == pytest.approx(1.0, abs=1e-12)

    def test_uniform_mean_mode(self):
        d = ClassDistribution(("a", "b", "c", "d"), (5, 5, 5, 5))
        assert normalize_distribution(d, "mean") == [1.0] * 4

    def test_zero_total(self):
        with pytest.raises(DegenerateError):
            normalize_distribution(ClassDistribution(("a",), (0,)), "raw")

    def test_unknown_mode(self):
        with pytest.raises(ArgumentError):
            normalize_distribution(ClassDistribution(("a",), (1,)), "log")

    @settings(max_examples=60)
    @given(st.lists(st.integers(0, 10_000), min_size=1, max_size=25))
    def test_normalization_identities(self, counts):
        if sum(counts) == 0:
            return
        d = ClassDistribution(tuple(f"c{i}" for i in range(len(counts))), tuple(counts))
        assert np.mean(normalize_distribution(d, "mean")) == pytest.approx(1.0, abs=1e-12)
        assert sum(normalize_distribution(d, "proportion")) == pytest.approx(1.0, abs=1e-12)
        assert normalize_distribution(d, "raw") == [float(c) for c in counts]

    @given(st.lists(st.integers(0, 500), min_size=2, max_size=20), st.integers(1, 9))
    def test_scaling_leaves_normalized_values(self, counts, factor):
        if sum(counts) == 0:
            return
        d = ClassDistribution(tuple(f"c{i}" for i in range(len(counts))), tuple(counts))
        for mode in ("mean", "proportion"):
            assert normalize_distribution(d.scaled(factor), mode) == pytest.approx(
                normalize_distribution(d, mode), rel=1e-12)

    def test_rank_frequencies_pair_average(self):
        d = ClassDistribution(("a", "b", "c", "d"), (8, 4, 2, 2))
        assert rank_frequencies(d) == pytest.approx([2.0, 1.0, 0.5, 0.5])
        assert rank_frequencies(d, pair_average=True) == pytest.approx([1.5, 0.5])


@pytest.fixture
def corpus():
    labs = (
        ScreenshotLabeling("s1", "A", boxes("link", "button", "mine"), (True, True, False), 90),
        ScreenshotLabeling("s2", "A", boxes("link"), (True,), 70),
        ScreenshotLabeling("s3", "B", boxes("image", "image"), None, 50),
        ScreenshotLabeling("s4", "C", boxes("image"), (True,), None),
    )
    recs = (
        WorkerTaskRecord("w1", "s5", "accepted", 10.0, boxes(*["link"] * 10)),
        WorkerTaskRecord("w1", "s6", "rejected", 20.0, boxes(*["button"] * 20)),
        WorkerTaskRecord("w1", "s7", "accepted", 60.0, boxes(*["image"] * 30)),
        WorkerTaskRecord("w2", "s5", "rejected", 5.0, ()),
    )
    return Corpus(labs, recs)


class TestProfiles:
    def test_trusted_quality(self, corpus):
        a = next(p for p in trusted_profiles(corpus) if p.labeler_id == "A")
        assert a.precision_t == pytest.approx((2 / 3 + 1) / 2)
        assert a.sc == pytest.approx(0.8)
        assert a.q == a.precision_t * a.sc
        assert a.n_verified == 2
        # custom class counts toward EUI but not toward the distribution
        assert a.eui_t == 2.0
        assert a.distribution.total == 3

    def test_unverified_flagged(self, corpus, caplog):
        with caplog.at_level(logging.WARNING):
            profiles = {p.labeler_id: p for p in trusted_profiles(corpus)}
        assert profiles["B"].flagged and profiles["B"].q is None
        assert profiles["C"].flagged  # verified but no completeness
        assert "B" in caplog.text

    def test_worker_volume_and_time(self, corpus):
        w1 = worker_profiles(corpus.worker_records, WORKER_VOCABULARY)[0]
        assert w1.eui_amt == 20
        assert w1.tot_amt == 30
        assert w1.precision_amt == pytest.approx(2 / 3)
        assert w1.distribution.as_dict()["button"] == 20  # rejected HIT still counted

    def test_empty_hits_count(self, corpus):
        w2 = worker_profiles(corpus.worker_records, WORKER_VOCABULARY)[1]
        assert (w2.attempted, w2.n_elements, w2.eui_amt) == (1, 0, 0)

    def test_worker_counts_sum_to_corpus_totals(self, corpus):
        _, workers = build_profiles(corpus)
        summed = sum((w.distribution for w in workers[1:]), workers[0].distribution)
        recount = {c: 0 for c in WORKER_VOCABULARY}
        for r in corpus.worker_records:
            for b in r.boxes:
                recount[b.class_label] += 1
        assert summed.as_dict() == recount

    def test_profiles_sorted_by_id(self, corpus):
        trusted, workers = build_profiles(corpus, ProfileConfig())
        assert [p.labeler_id for p in trusted] == ["A", "B", "C"]
        assert [w.worker_id for w in workers] == ["w1", "w2"]
