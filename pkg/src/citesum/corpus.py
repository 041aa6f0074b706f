"""Corpus ingestion: raw JSONL papers -> qualified, citation-linked dataset.

Construction runs in two passes. The first pass qualifies each paper on its
own (Introduction section, enough distinct citations, required fields). The
second pass drops every citation that does not resolve inside the collected
corpus. Papers that fail qualification but still carry an abstract are kept as
auxiliary records: they can be cited, but are never training samples.
"""

from __future__ import annotations

import enum
import json
import math
import random
import re
from collections import Counter
from dataclasses import dataclass, field, fields as dc_fields, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator

from .errors import EmptyResult, MalformedJson, MissingUid, TooFewSamples, UnknownSplit
from .text import count_words, split_sentences

SPLIT_NAMES = ("train", "val", "test")
DEFAULT_CITATION_LIMIT = 3


@dataclass(frozen=True)
class FieldMap:
    """Key names used to read a raw corpus line.

    Section-form body items carry ``heading`` + ``paragraphs``; paragraph-form
    items (CORD-19 ``body_text`` style) carry ``text`` + ``section`` and are
    grouped into sections by consecutive heading.
    """

    uid: str = "uid"
    title: str = "title"
    abstract: str = "abstract"
    body: str = "body"
    heading: str = "heading"
    paragraphs: str = "paragraphs"
    section: str = "section"
    text: str = "text"
    cite_spans: str = "cite_spans"
    ref_id: str = "ref_id"
    bibliography: str = "bibliography"
    bib_uid: str = "uid"

    @classmethod
    def from_mapping(cls, mapping):
        known = {f.name for f in dc_fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise ValueError(f"unknown field-map keys: {sorted(unknown)}")
        return cls(**mapping)


@dataclass(frozen=True)
class BibEntry:
    ref_id: str | None
    uid: str | None


@dataclass(frozen=True)
class RawSection:
    heading: str
    paragraphs: tuple[str, ...]


@dataclass(frozen=True)
class RawPaperFile:
    uid: str
    title: str
    abstract: str
    body: tuple[RawSection, ...]
    bibliography: tuple[BibEntry, ...]
    # ref_ids of every in-text citation occurrence, in reading order
    mentions: tuple[str, ...] = ()


@dataclass(frozen=True)
class Section:
    heading: str
    text: str


@dataclass(frozen=True)
class PaperRecord:
    uid: str
    title: str
    abstract: str
    sections: tuple[Section, ...]
    citation_uids: tuple[str, ...]
    # in-text mention count per citation uid, aligned with citation_uids
    citation_mentions: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.citation_mentions is None:
            object.__setattr__(self, "citation_mentions", (1,) * len(self.citation_uids))
        if len(self.citation_mentions) != len(self.citation_uids):
            raise ValueError("citation_mentions must align with citation_uids")

    @cached_property
    def body_text(self):
        return "\n".join(s.text for s in self.sections)

    @property
    def distinct_citations(self):
        return len(self.citation_uids)

    @property
    def total_citations(self):
        return sum(self.citation_mentions)

    @cached_property
    def word_count(self):
        return count_words(self.body_text)

    @cached_property
    def sentence_count(self):
        return len(split_sentences(self.body_text))

    @property
    def chunk_count(self):
        return len(self.sections)

    def prune(self, known_uids):
        """Return a copy citing only uids in ``known_uids``."""
        kept = [(u, m) for u, m in zip(self.citation_uids, self.citation_mentions) if u in known_uids]
        return replace(
            self,
            citation_uids=tuple(u for u, _ in kept),
            citation_mentions=tuple(m for _, m in kept),
        )

    def to_json(self):
        return {
            "uid": self.uid,
            "title": self.title,
            "abstract": self.abstract,
            "sections": [{"heading": s.heading, "text": s.text} for s in self.sections],
            "citations": list(self.citation_uids),
        }

    @classmethod
    def from_json(cls, obj, mentions=None):
        return cls(
            uid=obj["uid"],
            title=obj["title"],
            abstract=obj["abstract"],
            sections=tuple(Section(s["heading"], s["text"]) for s in obj["sections"]),
            citation_uids=tuple(obj["citations"]),
            citation_mentions=tuple(mentions) if mentions is not None else None,
        )


class RejectReason(str, enum.Enum):
    MISSING_ELEMENTS = "MissingElements"
    NO_INTRODUCTION = "NoIntroduction"
    MULTIPLE_INTRODUCTIONS = "MultipleIntroductions"
    TOO_FEW_DISTINCT_CITATIONS = "TooFewDistinctCitations"
    DUPLICATE_UID = "DuplicateUid"


@dataclass(frozen=True)
class Rejection:
    reason: RejectReason
    detail: str = ""


@dataclass(frozen=True)
class Dataset:
    records: dict[str, PaperRecord]
    aux_records: dict[str, PaperRecord] = field(default_factory=dict)
    splits: dict[str, tuple[str, ...]] = field(
        default_factory=lambda: {name: () for name in SPLIT_NAMES}
    )
    rejections: dict[str, int] = field(default_factory=dict)

    def lookup(self, uid):
        if uid in self.records:
            return self.records[uid]
        return self.aux_records.get(uid)

    def __contains__(self, uid):
        return uid in self.records or uid in self.aux_records

    def all_records(self):
        yield from self.records.values()
        yield from self.aux_records.values()

    def split_records(self, name):
        if name not in self.splits:
            raise UnknownSplit(f"unknown split {name!r}; have {sorted(self.splits)}")
        return [self.records[u] for u in self.splits[name]]


@dataclass(frozen=True)
class CorpusStats:
    sample_count: int
    paper_count: int
    avg_distinct_citations: float
    avg_total_citations: float
    avg_chunks: float
    avg_doc_sentences: float
    avg_doc_words: float
    avg_summary_sentences: float
    avg_summary_words: float


# ---------------------------------------------------------------------------
# parsing


def _as_text(value, fields):
    """Flatten a str / list of str / list of {text: ...} into one string."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value.strip()
    if isinstance(value, dict):
        return _as_text(value.get(fields.text), fields)
    if isinstance(value, list):
        parts = [_as_text(v, fields) for v in value]
        return "\n".join(p for p in parts if p)
    return str(value).strip()


def _paragraph(item, fields, mentions):
    if isinstance(item, str):
        return item.strip()
    for span in item.get(fields.cite_spans) or ():
        ref = span.get(fields.ref_id) if isinstance(span, dict) else span
        if ref is not None:
            mentions.append(str(ref))
    return _as_text(item.get(fields.text), fields)


def _parse_body(items, fields, mentions):
    sections = []
    for item in items or ():
        if isinstance(item, dict) and fields.paragraphs in item:
            heading = _as_text(item.get(fields.heading), fields)
            paras = [_paragraph(p, fields, mentions) for p in item[fields.paragraphs] or ()]
        else:
            heading = ""
            if isinstance(item, dict):
                heading = _as_text(item.get(fields.section, item.get(fields.heading)), fields)
            paras = [_paragraph(item, fields, mentions)]
        paras = [p for p in paras if p]
        if sections and sections[-1][0] == heading:
            sections[-1][1].extend(paras)
        else:
            sections.append((heading, list(paras)))
    return tuple(RawSection(h, tuple(p)) for h, p in sections)


def _parse_bibliography(value, fields):
    if isinstance(value, dict):
        items = [(str(k), v) for k, v in value.items()]
    else:
        items = [(None, v) for v in value or ()]
    entries = []
    for ref_id, entry in items:
        if isinstance(entry, dict):
            ref_id = entry.get(fields.ref_id, ref_id)
            uid = entry.get(fields.bib_uid)
        else:
            uid = entry
        uid = str(uid).strip() if uid not in (None, "") else None
        entries.append(BibEntry(str(ref_id) if ref_id is not None else None, uid or None))
    return tuple(entries)


def parse_raw_entry(line, fields=FieldMap()):
    """Parse one JSONL line (bytes or str) into a :class:`RawPaperFile`."""
    try:
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        obj = json.loads(line)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedJson(str(exc)) from exc
    if not isinstance(obj, dict):
        raise MalformedJson(f"expected a JSON object, got {type(obj).__name__}")
    uid = obj.get(fields.uid)
    if uid is None or str(uid).strip() == "":
        raise MissingUid(f"line has no {fields.uid!r} field")
    mentions = []
    body = _parse_body(obj.get(fields.body), fields, mentions)
    return RawPaperFile(
        uid=str(uid).strip(),
        title=_as_text(obj.get(fields.title), fields),
        abstract=_as_text(obj.get(fields.abstract), fields),
        body=body,
        bibliography=_parse_bibliography(obj.get(fields.bibliography), fields),
        mentions=tuple(mentions),
    )


def read_raw_corpus(path, fields=FieldMap()) -> Iterator[RawPaperFile]:
    with open(path, "rb") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield parse_raw_entry(line, fields)
            except (MalformedJson, MissingUid) as exc:
                raise type(exc)(f"{path}:{lineno}: {exc}") from exc


# ---------------------------------------------------------------------------
# qualification and construction

_NUMBERING = re.compile(r"^\s*(?:\d+(?:\.\d+)*\.?|[ivxlcdm]+\.)\s*", re.IGNORECASE)


def is_introduction(heading):
    """True if ``heading`` reads "Introduction" once numbering is stripped."""
    stripped = _NUMBERING.sub("", heading).strip().strip(":.").strip()
    return stripped.lower() == "introduction"


def distinct_citations(raw):
    """Distinct resolved citation uids in bibliography order, with mention counts.

    Self-citations are ignored. A bibliography entry with no in-text mention
    still counts as one occurrence.
    """
    mention_counts = Counter(raw.mentions)
    order = []
    counts = {}
    for entry in raw.bibliography:
        if entry.uid is None or entry.uid == raw.uid:
            continue
        n = mention_counts.get(entry.ref_id, 0) if entry.ref_id is not None else 0
        if entry.uid not in counts:
            order.append(entry.uid)
            counts[entry.uid] = 0
        counts[entry.uid] += n
    return tuple(order), tuple(max(1, counts[u]) for u in order)


def qualify_paper(raw: RawPaperFile, citation_limit: int = DEFAULT_CITATION_LIMIT):
    """Return a :class:`PaperRecord`, or a :class:`Rejection` naming the first failed rule.

    Rules are checked in order: required elements present, exactly one
    Introduction section, at least ``citation_limit`` distinct citations.
    """
    if citation_limit < 1:
        raise ValueError("citation_limit must be >= 1")
    for name, value in (
        ("uid", raw.uid),
        ("title", raw.title),
        ("abstract", raw.abstract),
        ("sections", raw.body),
        ("citations", raw.bibliography),
    ):
        if not value:
            return Rejection(RejectReason.MISSING_ELEMENTS, name)
    n_intro = sum(is_introduction(s.heading) for s in raw.body)
    if n_intro == 0:
        return Rejection(RejectReason.NO_INTRODUCTION)
    if n_intro > 1:
        return Rejection(RejectReason.MULTIPLE_INTRODUCTIONS, str(n_intro))
    uids, mentions = distinct_citations(raw)
    if len(uids) < citation_limit:
        return Rejection(RejectReason.TOO_FEW_DISTINCT_CITATIONS, f"{len(uids)} < {citation_limit}")
    return PaperRecord(
        uid=raw.uid,
        title=raw.title,
        abstract=raw.abstract,
        sections=tuple(Section(s.heading, "\n".join(s.paragraphs)) for s in raw.body),
        citation_uids=uids,
        citation_mentions=mentions,
    )


def _citation_target(raw):
    return PaperRecord(
        uid=raw.uid,
        title=raw.title,
        abstract=raw.abstract,
        sections=tuple(Section(s.heading, "\n".join(s.paragraphs)) for s in raw.body),
        citation_uids=(),
    )


def build_dataset(corpus: Iterable[RawPaperFile], citation_limit: int = DEFAULT_CITATION_LIMIT) -> Dataset:
    """Two-pass construction of the citation-linked dataset.

    Pass 1 qualifies papers in stream order (first occurrence of a uid wins);
    unqualified papers with an abstract become auxiliary citation targets.
    Pass 2 prunes citations that resolve nowhere in the collected corpus;
    records left with fewer than ``citation_limit`` citations are demoted to
    the auxiliary set.
    """
    records = {}
    aux = {}
    rejections = Counter()
    seen = set()
    for raw in corpus:
        if raw.uid in seen:
            rejections[RejectReason.DUPLICATE_UID.value] += 1
            continue
        seen.add(raw.uid)
        result = qualify_paper(raw, citation_limit)
        if isinstance(result, PaperRecord):
            records[raw.uid] = result
            continue
        rejections[result.reason.value] += 1
        if raw.abstract:
            aux[raw.uid] = _citation_target(raw)

    known = set(records) | set(aux)
    kept = {}
    for uid, rec in records.items():
        pruned = rec.prune(known)
        if len(pruned.citation_uids) >= citation_limit:
            kept[uid] = pruned
        else:
            aux[uid] = pruned
            rejections["Demoted"] += 1
    if not kept:
        raise EmptyResult("no paper qualified")
    return Dataset(records=kept, aux_records=aux, rejections=dict(sorted(rejections.items())))


def split_sizes(n, ratios):
    """Split sizes under the floor-for-val/test, remainder-to-train rule."""
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must be three positive numbers summing to 1, got {ratios}")
    n_val = math.floor(n * ratios[1] + 1e-9)
    n_test = math.floor(n * ratios[2] + 1e-9)
    return n - n_val - n_test, n_val, n_test


def split_dataset(ds: Dataset, ratios=(0.8, 0.1, 0.1), seed=0) -> Dataset:
    sizes = split_sizes(len(ds.records), ratios)
    if min(sizes) == 0:
        raise TooFewSamples(f"{len(ds.records)} records give split sizes {sizes}")
    uids = sorted(ds.records)
    random.Random(seed).shuffle(uids)
    n_train, n_val, _ = sizes
    splits = {
        "train": tuple(uids[:n_train]),
        "val": tuple(uids[n_train:n_train + n_val]),
        "test": tuple(uids[n_train + n_val:]),
    }
    return replace(ds, splits=splits)


# ---------------------------------------------------------------------------
# chunking and statistics


def _pack(units, max_tokens):
    chunks = []
    current = []
    for unit in units:
        if current and len(current) + len(unit) > max_tokens:
            chunks.append(current)
            current = []
        current = current + unit
    if current:
        chunks.append(current)
    return chunks


def chunk_document(rec: PaperRecord, max_tokens: int, tokenizer):
    """Greedy packing of a document's token ids into chunks of ``max_tokens``.

    Whole sections are the preferred packing unit. A section longer than
    ``max_tokens`` is broken into sentences, and a sentence that is still too
    long into fixed-size slices. Units are packed in order; a unit that does
    not fit in the current chunk starts a new one.
    """
    if max_tokens < 16:
        raise ValueError("max_tokens must be >= 16")
    units = []
    for section in rec.sections:
        ids = tokenizer.encode(section.text)
        if not ids:
            continue
        if len(ids) <= max_tokens:
            units.append(ids)
            continue
        for sentence in split_sentences(section.text):
            ids = tokenizer.encode(sentence)
            for start in range(0, len(ids), max_tokens):
                units.append(ids[start:start + max_tokens])
    return _pack(units, max_tokens)


def _mean(values):
    return sum(values) / len(values) if values else 0.0


def compute_stats(ds: Dataset, split: str) -> CorpusStats:
    recs = ds.split_records(split)
    if not recs:
        raise TooFewSamples(f"split {split!r} is empty")
    papers = set()
    for rec in recs:
        papers.add(rec.uid)
        papers.update(rec.citation_uids)
    return CorpusStats(
        sample_count=len(recs),
        paper_count=len(papers),
        avg_distinct_citations=_mean([r.distinct_citations for r in recs]),
        avg_total_citations=_mean([r.total_citations for r in recs]),
        avg_chunks=_mean([r.chunk_count for r in recs]),
        avg_doc_sentences=_mean([r.sentence_count for r in recs]),
        avg_doc_words=_mean([r.word_count for r in recs]),
        avg_summary_sentences=_mean([len(split_sentences(r.abstract)) for r in recs]),
        avg_summary_words=_mean([count_words(r.abstract) for r in recs]),
    )


# ---------------------------------------------------------------------------
# persistence


def dumps_record(rec):
    return json.dumps(rec.to_json(), ensure_ascii=False)


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(row if isinstance(row, str) else json.dumps(row, ensure_ascii=False))
            fh.write("\n")


def read_jsonl(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise MalformedJson(f"{path}:{lineno}: {exc}") from exc
    return rows


def save_dataset(ds: Dataset, directory, manifest=None):
    """Write ``{train,val,test,aux}.jsonl``, ``stats.json``, ``mentions.json`` and ``manifest.json``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    for name in SPLIT_NAMES:
        write_jsonl(out / f"{name}.jsonl", (dumps_record(r) for r in ds.split_records(name)))
    write_jsonl(out / "aux.jsonl", (dumps_record(r) for r in ds.aux_records.values()))
    stats = {name: vars(compute_stats(ds, name)) for name in SPLIT_NAMES if ds.splits[name]}
    mentions = {r.uid: list(r.citation_mentions) for r in ds.all_records() if r.citation_uids}
    for fname, obj in (("stats.json", stats), ("mentions.json", mentions)):
        (out / fname).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if manifest is not None:
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return stats


def load_records(path, mentions=None):
    mentions = mentions or {}
    return [PaperRecord.from_json(obj, mentions.get(obj["uid"])) for obj in read_jsonl(path)]


def load_dataset(directory) -> Dataset:
    src = Path(directory)
    mentions = {}
    if (src / "mentions.json").exists():
        mentions = json.loads((src / "mentions.json").read_text(encoding="utf-8"))
    records = {}
    splits = {}
    for name in SPLIT_NAMES:
        recs = load_records(src / f"{name}.jsonl", mentions)
        splits[name] = tuple(r.uid for r in recs)
        records.update((r.uid, r) for r in recs)
    aux = {}
    if (src / "aux.jsonl").exists():
        aux = {r.uid: r for r in load_records(src / "aux.jsonl", mentions)}
    return Dataset(records=records, aux_records=aux, splits=splits)
