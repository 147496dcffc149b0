"""Labeled-UI corpus: annotation parsing, worker logs, verification records.

A :class:`Corpus` is immutable once loaded. Loaders return new objects rather
than mutating, so a corpus can be shared freely between threads.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace
from pathlib import Path
from typing import IO, Iterable, Iterator

from dgtqc.errors import (
    ArgumentError,
    BoxIndexError,
    ConflictError,
    FieldError,
    GeometryError,
    ParseError,
    UnknownReferenceError,
)

log = logging.getLogger(__name__)

SNAPSHOT_SCHEMA = "dgtqc-corpus"
SNAPSHOT_VERSION = 1

# Classes offered to the trusted labelers (LabelImg session).
TRUSTED_VOCABULARY = (
    "image", "backgroundimage", "panel", "list", "table", "paragraph",
    "textblock", "text", "symbol", "checkbox", "radiobutton", "selectbox",
    "textinput", "textarea", "button", "label", "tabs", "scrollbar",
    "pagination", "link",
)

# Classes offered to crowdworkers in the labeling HIT.
WORKER_VOCABULARY = (
    "button", "link", "check", "input", "dropdown", "table", "image",
    "backgroundimage", "navigation", "panel",
)

CORNERS = ("xmin", "ymin", "xmax", "ymax")


@dataclass(frozen=True)
class BoundingBox:
    xmin: int
    ymin: int
    xmax: int
    ymax: int
    class_label: str

    def __post_init__(self):
        if not self.class_label:
            raise ArgumentError("class label is empty")
        if min(self.xmin, self.ymin) < 0:
            raise GeometryError(f"negative corner in {self}")
        if self.xmin >= self.xmax or self.ymin >= self.ymax:
            raise GeometryError(
                f"inverted box ({self.xmin}, {self.ymin}, {self.xmax}, {self.ymax})"
            )

    def to_json(self) -> dict:
        return {"class": self.class_label, "xmin": self.xmin, "ymin": self.ymin,
                "xmax": self.xmax, "ymax": self.ymax}


@dataclass(frozen=True)
class ScreenshotLabeling:
    """One trusted labeler's boxes on one screenshot.

    ``verdicts`` is None when the labeling was never verified; otherwise it has
    one entry per box, True for correct, False for incorrect and None for a box
    the verifiers skipped.
    """

    screenshot_id: str
    labeler_id: str
    boxes: tuple[BoundingBox, ...] = ()
    verdicts: tuple[bool | None, ...] | None = None
    completeness: float | None = None

    def __post_init__(self):
        if self.verdicts is not None and len(self.verdicts) != len(self.boxes):
            raise ArgumentError(
                f"{self.screenshot_id}: {len(self.verdicts)} verdicts for "
                f"{len(self.boxes)} boxes"
            )
        if self.completeness is not None and not 0 <= self.completeness <= 100:
            raise ArgumentError(
                f"{self.screenshot_id}: completeness {self.completeness} outside [0, 100]"
            )

    @property
    def fully_verified(self) -> bool:
        return (
            self.verdicts is not None
            and len(self.boxes) > 0
            and all(v is not None for v in self.verdicts)
        )

    def verdict_counts(self) -> tuple[int, int]:
        """(correct, incorrect) over verified boxes."""
        if self.verdicts is None:
            return 0, 0
        correct = sum(1 for v in self.verdicts if v is True)
        incorrect = sum(1 for v in self.verdicts if v is False)
        return correct, incorrect


@dataclass(frozen=True)
class WorkerTaskRecord:
    worker_id: str
    screenshot_id: str
    status: str  # accepted | rejected
    time_on_task: float
    boxes: tuple[BoundingBox, ...] = ()

    def __post_init__(self):
        if self.status not in ("accepted", "rejected"):
            raise ArgumentError(f"status must be accepted or rejected, got {self.status!r}")
        if not self.time_on_task >= 0:
            raise ArgumentError(f"time_on_task must be non-negative, got {self.time_on_task}")


@dataclass(frozen=True)
class Corpus:
    trusted_labelings: tuple[ScreenshotLabeling, ...] = ()
    worker_records: tuple[WorkerTaskRecord, ...] = ()
    trusted_vocabulary: tuple[str, ...] = TRUSTED_VOCABULARY
    worker_vocabulary: tuple[str, ...] = WORKER_VOCABULARY

    def __post_init__(self):
        seen = set()
        for lab in self.trusted_labelings:
            if lab.screenshot_id in seen:
                raise ConflictError(
                    f"screenshot {lab.screenshot_id} has more than one trusted labeling"
                )
            seen.add(lab.screenshot_id)
        for name, vocab in (("trusted", self.trusted_vocabulary),
                            ("worker", self.worker_vocabulary)):
            if len(set(vocab)) != len(vocab):
                raise ArgumentError(f"{name} vocabulary has duplicate labels")

    def labeling(self, screenshot_id: str) -> ScreenshotLabeling:
        for lab in self.trusted_labelings:
            if lab.screenshot_id == screenshot_id:
                return lab
        raise UnknownReferenceError(f"unknown screenshot {screenshot_id!r}")

    @property
    def trusted_labeler_ids(self) -> list[str]:
        return sorted({lab.labeler_id for lab in self.trusted_labelings})

    @property
    def worker_ids(self) -> list[str]:
        return sorted({rec.worker_id for rec in self.worker_records})

    @property
    def screenshot_ids(self) -> set[str]:
        ids = {lab.screenshot_id for lab in self.trusted_labelings}
        ids.update(rec.screenshot_id for rec in self.worker_records)
        return ids


@dataclass(frozen=True)
class CorpusSummary:
    screenshots: int = 0
    trusted_labelers: int = 0
    workers: int = 0
    trusted_uis: int = 0
    trusted_elements: int = 0
    worker_elements: int = 0
    accepted_hits: int = 0
    rejected_hits: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


# --------------------------------------------------------------------------- #
# Pascal VOC annotations
# --------------------------------------------------------------------------- #

def _corner(obj: ET.Element, name: str, index: int) -> int:
    node = obj.find(f"bndbox/{name}")
    if node is None or node.text is None or not node.text.strip():
        raise FieldError(f"object {index}: missing bndbox/{name}")
    text = node.text.strip()
    try:
        value = float(text)
    except ValueError:
        raise FieldError(f"object {index}: {name}={text!r} is not a number") from None
    if not math.isfinite(value) or value != int(value):
        raise FieldError(f"object {index}: {name}={text!r} is not an integer pixel")
    return int(value)


def parse_annotation(xml_text: str, labeler_id: str, screenshot_id: str) -> ScreenshotLabeling:
    """Parse one Pascal VOC annotation into a :class:`ScreenshotLabeling`.

    Boxes keep document order. Class names are stripped of surrounding
    whitespace and otherwise kept verbatim.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        line, _ = exc.position
        raise ParseError(f"malformed XML ({exc})", line=line) from None
    if root.tag != "annotation":
        raise ParseError(f"root element is <{root.tag}>, expected <annotation>")
    boxes = []
    for index, obj in enumerate(root.findall("object")):
        name_node = obj.find("name")
        label = (name_node.text or "").strip() if name_node is not None else ""
        if not label:
            raise FieldError(f"object {index}: missing name")
        if obj.find("bndbox") is None:
            raise FieldError(f"object {index}: missing bndbox")
        xmin, ymin, xmax, ymax = (_corner(obj, c, index) for c in CORNERS)
        if xmin >= xmax or ymin >= ymax:
            raise GeometryError(
                f"object {index} ({label}): inverted box "
                f"xmin={xmin} ymin={ymin} xmax={xmax} ymax={ymax}"
            )
        boxes.append(BoundingBox(xmin, ymin, xmax, ymax, label))
    return ScreenshotLabeling(screenshot_id, labeler_id, tuple(boxes))


def format_annotation(labeling: ScreenshotLabeling) -> str:
    """Serialize a labeling back to Pascal VOC XML."""
    root = ET.Element("annotation")
    ET.SubElement(root, "filename").text = f"{labeling.screenshot_id}.png"
    for box in labeling.boxes:
        obj = ET.SubElement(root, "object")
        ET.SubElement(obj, "name").text = box.class_label
        bnd = ET.SubElement(obj, "bndbox")
        for corner in CORNERS:
            ET.SubElement(bnd, corner).text = str(getattr(box, corner))
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


def load_annotation_dir(root: str | Path) -> list[ScreenshotLabeling]:
    """Load ``<root>/<labeler_id>/<screenshot_id>.xml`` files.

    Files that fail to parse are skipped with a warning.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"annotation directory not found: {root}")
    labelings = []
    for path in sorted(root.glob("*/*.xml")):
        try:
            labelings.append(
                parse_annotation(path.read_text(encoding="utf-8"), path.parent.name, path.stem)
            )
        except (ParseError, ArgumentError) as exc:
            log.warning("skipping %s: %s", path, exc)
    return labelings


# --------------------------------------------------------------------------- #
# Worker log
# --------------------------------------------------------------------------- #

def _box_from_json(obj: dict, where: str) -> BoundingBox:
    try:
        return BoundingBox(
            int(obj["xmin"]), int(obj["ymin"]), int(obj["xmax"]), int(obj["ymax"]),
            str(obj["class"]).strip(),
        )
    except KeyError as exc:
        raise FieldError(f"{where}: box missing {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ArgumentError):
            raise
        raise FieldError(f"{where}: bad box {obj!r}") from None


def _lines(stream: IO[str] | Iterable[str]) -> Iterator[tuple[int, str]]:
    for lineno, line in enumerate(stream, start=1):
        if line.strip():
            yield lineno, line


def load_worker_log(stream: IO[str] | Iterable[str]) -> list[WorkerTaskRecord]:
    """Read line-delimited JSON HIT records. Unknown fields are ignored."""
    records = []
    for lineno, line in _lines(stream):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from None
        if not isinstance(obj, dict):
            raise ParseError("record is not a JSON object", line=lineno)
        try:
            worker_id = str(obj["worker_id"])
            screenshot_id = str(obj["screenshot_id"])
            status = obj["status"]
            tot = float(obj["time_on_task_s"])
        except KeyError as exc:
            raise FieldError(f"missing field {exc.args[0]!r}", line=lineno) from None
        except (TypeError, ValueError):
            raise FieldError("time_on_task_s is not a number", line=lineno) from None
        if status not in ("accepted", "rejected"):
            raise ArgumentError(f"line {lineno}: status must be accepted or rejected, got {status!r}")
        if not tot >= 0:
            raise ArgumentError(f"line {lineno}: negative time_on_task_s {tot}")
        boxes = tuple(
            _box_from_json(b, f"line {lineno}") for b in obj.get("boxes") or ()
        )
        records.append(WorkerTaskRecord(worker_id, screenshot_id, status, tot, boxes))
    return records


def dump_worker_log(records: Iterable[WorkerTaskRecord], stream: IO[str]) -> None:
    for rec in records:
        stream.write(json.dumps(_record_json(rec), separators=(",", ":")) + "\n")


def _record_json(rec: WorkerTaskRecord) -> dict:
    return {
        "worker_id": rec.worker_id,
        "screenshot_id": rec.screenshot_id,
        "status": rec.status,
        "time_on_task_s": rec.time_on_task,
        "boxes": [b.to_json() for b in rec.boxes],
    }


# --------------------------------------------------------------------------- #
# Verification and completeness
# --------------------------------------------------------------------------- #

_VERDICTS = {"correct": True, "incorrect": False}


def load_verification(stream: IO[str] | Iterable[str], corpus: Corpus) -> Corpus:
    """Attach verdicts and/or completeness scores from a CSV file.

    Rows carrying ``box_index`` and ``verdict`` set one box verdict; rows
    carrying ``sc`` (or ``completeness``) set the screenshot's completeness.
    A file may hold either kind of row or both.
    """
    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        return corpus
    fields = {f.strip() for f in reader.fieldnames}
    if "screenshot_id" not in fields:
        raise FieldError("verification CSV has no screenshot_id column")
    sc_key = "sc" if "sc" in fields else ("completeness" if "completeness" in fields else None)

    index = {lab.screenshot_id: i for i, lab in enumerate(corpus.trusted_labelings)}
    verdicts: dict[str, list] = {}
    completeness: dict[str, float] = {}

    for lineno, raw in enumerate(reader, start=2):
        row = {(k or "").strip(): (v or "").strip() for k, v in raw.items()}
        sid = row["screenshot_id"]
        if sid not in index:
            raise UnknownReferenceError(f"line {lineno}: unknown screenshot {sid!r}")
        lab = corpus.trusted_labelings[index[sid]]

        if row.get("verdict"):
            if row["verdict"] not in _VERDICTS:
                raise ParseError(f"verdict must be correct or incorrect, got {row['verdict']!r}",
                                 line=lineno)
            try:
                bi = int(row.get("box_index", ""))
            except ValueError:
                raise FieldError("box_index is not an integer", line=lineno) from None
            if not 0 <= bi < len(lab.boxes):
                raise BoxIndexError(
                    f"line {lineno}: box_index {bi} out of range for {sid} "
                    f"({len(lab.boxes)} boxes)"
                )
            current = verdicts.setdefault(
                sid, list(lab.verdicts) if lab.verdicts is not None else [None] * len(lab.boxes)
            )
            if current[bi] is not None:
                raise ConflictError(f"line {lineno}: duplicate verdict for {sid} box {bi}")
            current[bi] = _VERDICTS[row["verdict"]]

        if sc_key and row.get(sc_key):
            try:
                sc = float(row[sc_key])
            except ValueError:
                raise FieldError(f"{sc_key} is not a number", line=lineno) from None
            if not 0 <= sc <= 100:
                raise ArgumentError(f"line {lineno}: completeness {sc} outside [0, 100]")
            if sid in completeness or lab.completeness is not None:
                raise ConflictError(f"line {lineno}: duplicate completeness for {sid}")
            completeness[sid] = sc

    labelings = list(corpus.trusted_labelings)
    for sid in set(verdicts) | set(completeness):
        i = index[sid]
        lab = labelings[i]
        labelings[i] = replace(
            lab,
            verdicts=tuple(verdicts[sid]) if sid in verdicts else lab.verdicts,
            completeness=completeness.get(sid, lab.completeness),
        )
    return replace(corpus, trusted_labelings=tuple(labelings))


def dump_verification(corpus: Corpus, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["screenshot_id", "box_index", "verdict"])
    for lab in corpus.trusted_labelings:
        for i, v in enumerate(lab.verdicts or ()):
            if v is not None:
                writer.writerow([lab.screenshot_id, i, "correct" if v else "incorrect"])


def dump_completeness(corpus: Corpus, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["screenshot_id", "sc"])
    for lab in corpus.trusted_labelings:
        if lab.completeness is not None:
            writer.writerow([lab.screenshot_id, _num(lab.completeness)])


def _num(x: float):
    return int(x) if float(x).is_integer() else x


# --------------------------------------------------------------------------- #
# Summary and snapshots
# --------------------------------------------------------------------------- #

def corpus_summary(corpus: Corpus) -> CorpusSummary:
    return CorpusSummary(
        screenshots=len(corpus.screenshot_ids),
        trusted_labelers=len(corpus.trusted_labeler_ids),
        workers=len(corpus.worker_ids),
        trusted_uis=len(corpus.trusted_labelings),
        trusted_elements=sum(len(lab.boxes) for lab in corpus.trusted_labelings),
        worker_elements=sum(len(rec.boxes) for rec in corpus.worker_records),
        accepted_hits=sum(1 for r in corpus.worker_records if r.status == "accepted"),
        rejected_hits=sum(1 for r in corpus.worker_records if r.status == "rejected"),
    )


def export_corpus(corpus: Corpus, stream: IO[str]) -> None:
    """Write a line-delimited JSON snapshot with a one-line header record."""
    header = {
        "schema": SNAPSHOT_SCHEMA,
        "version": SNAPSHOT_VERSION,
        "trusted_vocabulary": list(corpus.trusted_vocabulary),
        "worker_vocabulary": list(corpus.worker_vocabulary),
    }
    stream.write(json.dumps(header, separators=(",", ":")) + "\n")
    for lab in corpus.trusted_labelings:
        rec = {
            "kind": "labeling",
            "screenshot_id": lab.screenshot_id,
            "labeler_id": lab.labeler_id,
            "boxes": [b.to_json() for b in lab.boxes],
            "verdicts": None if lab.verdicts is None else [
                None if v is None else ("correct" if v else "incorrect") for v in lab.verdicts
            ],
            "completeness": lab.completeness,
        }
        stream.write(json.dumps(rec, separators=(",", ":")) + "\n")
    for r in corpus.worker_records:
        stream.write(json.dumps({"kind": "hit", **_record_json(r)}, separators=(",", ":")) + "\n")


def load_snapshot(stream: IO[str] | Iterable[str]) -> Corpus:
    it = _lines(stream)
    try:
        lineno, first = next(it)
    except StopIteration:
        raise ParseError("empty snapshot") from None
    header = json.loads(first)
    if header.get("schema") != SNAPSHOT_SCHEMA:
        raise ParseError(f"not a corpus snapshot (schema={header.get('schema')!r})", line=lineno)
    if header.get("version") != SNAPSHOT_VERSION:
        raise ParseError(f"unsupported snapshot version {header.get('version')!r}", line=lineno)
    labelings, hits = [], []
    for lineno, line in it:
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from None
        kind = obj.pop("kind", None)
        if kind == "labeling":
            verdicts = obj.get("verdicts")
            labelings.append(ScreenshotLabeling(
                screenshot_id=obj["screenshot_id"],
                labeler_id=obj["labeler_id"],
                boxes=tuple(_box_from_json(b, f"line {lineno}") for b in obj["boxes"]),
                verdicts=None if verdicts is None else tuple(
                    None if v is None else _VERDICTS[v] for v in verdicts
                ),
                completeness=obj.get("completeness"),
            ))
        elif kind == "hit":
            hits.extend(load_worker_log([json.dumps(obj)]))
        else:
            raise ParseError(f"unknown record kind {kind!r}", line=lineno)
    return Corpus(
        trusted_labelings=tuple(labelings),
        worker_records=tuple(hits),
        trusted_vocabulary=tuple(header["trusted_vocabulary"]),
        worker_vocabulary=tuple(header["worker_vocabulary"]),
    )


def snapshot_text(corpus: Corpus) -> str:
    buf = io.StringIO()
    export_corpus(corpus, buf)
    return buf.getvalue()


def load_corpus(
    annotations: str | Path | None = None,
    worker_log: str | Path | None = None,
    verification: Iterable[str | Path] = (),
    snapshot: str | Path | None = None,
    trusted_vocabulary: Iterable[str] = TRUSTED_VOCABULARY,
    worker_vocabulary: Iterable[str] = WORKER_VOCABULARY,
) -> Corpus:
    """Assemble a corpus from files on disk.

    Either ``snapshot`` (a previously exported corpus) or an annotation
    directory and/or worker log. Verification and completeness CSVs are
    applied afterwards, in the given order.
    """
    if snapshot is not None:
        with open(snapshot, encoding="utf-8") as fh:
            corpus = load_snapshot(fh)
    else:
        labelings = load_annotation_dir(annotations) if annotations is not None else []
        records = []
        if worker_log is not None:
            with open(worker_log, encoding="utf-8") as fh:
                records = load_worker_log(fh)
        corpus = Corpus(tuple(labelings), tuple(records),
                        tuple(trusted_vocabulary), tuple(worker_vocabulary))
    for path in verification:
        with open(path, encoding="utf-8", newline="") as fh:
            corpus = load_verification(fh, corpus)
    return corpus
