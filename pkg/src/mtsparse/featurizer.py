"""Lexicon counting over time-bucketed documents, and cosine task coupling."""

from __future__ import annotations

import csv
import json
import re
import warnings
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import CouplingGraph, DataError, Edge, MultiTaskDataset, TaskDataset


class EmptyBucketWarning(UserWarning):
    """A labelled bucket had no documents and was featurized as a zero row."""


_SPLIT = re.compile(r"[\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens; '#'/'@' prefixes are dropped and URLs are removed whole."""
    tokens = []
    for chunk in text.lower().split():
        chunk = chunk.lstrip("#@")
        if chunk.startswith("http"):
            continue
        tokens.extend(t for t in _SPLIT.split(chunk) if t)
    return tokens


@dataclass(frozen=True)
class Lexicon:
    """Maps terms to feature indices; several terms may share one feature."""

    entries: tuple[tuple[str, int], ...]
    feature_names: tuple[str, ...]

    def __post_init__(self):
        terms = [t for t, _ in self.entries]
        if len(set(terms)) != len(terms):
            raise DataError("lexicon terms must be unique")
        used = {k for _, k in self.entries}
        if used != set(range(len(self.feature_names))):
            raise DataError("lexicon feature indices must cover 0..d-1 exactly")
        object.__setattr__(self, "_index", dict(self.entries))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "Lexicon":
        """Build from ``(term, feature_name)``; indices follow first appearance of each feature name."""
        features: dict[str, int] = {}
        entries = []
        for term, feature in pairs:
            k = features.setdefault(feature, len(features))
            entries.append((term.lower(), k))
        return cls(tuple(entries), tuple(features))

    @property
    def d(self) -> int:
        return len(self.feature_names)

    def lookup(self, term: str) -> int | None:
        return self._index.get(term)


@dataclass(frozen=True)
class Document:
    text: str
    timestamp: datetime
    task: str


@dataclass(frozen=True)
class TimeBucketing:
    origin: datetime
    width: timedelta

    def __post_init__(self):
        if self.width <= timedelta(0):
            raise ValueError("bucket width must be positive")
        object.__setattr__(self, "origin", as_utc(self.origin))

    def index(self, ts: datetime) -> int:
        delta = as_utc(ts) - self.origin
        if delta < timedelta(0):
            raise DataError(f"timestamp {ts.isoformat()} precedes the bucket origin {self.origin.isoformat()}")
        return int(delta // self.width)


def as_utc(ts: datetime) -> datetime:
    # naive timestamps are taken to be UTC
    return ts.replace(tzinfo=timezone.utc) if ts.tzinfo is None else ts.astimezone(timezone.utc)


def parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    return as_utc(datetime.fromisoformat(text))


_DURATION = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([smhdw]?)\s*$")
_UNITS = {"": 1, "s": 1, "m": 60, "h": 3600, "d": 86400, "w": 604800}


def parse_duration(text: str) -> timedelta:
    """``"90"``/``"90s"``, ``"30m"``, ``"12h"``, ``"7d"`` or ``"2w"``."""
    m = _DURATION.match(text)
    if not m:
        raise ValueError(f"cannot parse duration {text!r}")
    width = timedelta(seconds=float(m.group(1)) * _UNITS[m.group(2)])
    if width <= timedelta(0):
        raise ValueError("duration must be positive")
    return width


def keyword_filter(docs: Iterable[Document], keywords: Iterable[str]) -> list[Document]:
    """Keep documents containing at least one keyword token."""
    keys = {k.strip().lower() for k in keywords if k.strip()}
    return [doc for doc in docs if keys.intersection(tokenize(doc.text))]


def featurize_bucket(docs: Iterable[Document], lex: Lexicon) -> np.ndarray:
    """Raw lexicon feature counts summed over all tokens of all documents."""
    counts = Counter()
    for doc in docs:
        counts.update(tokenize(doc.text))
    vec = np.zeros(lex.d)
    for term, n in counts.items():
        k = lex.lookup(term)
        if k is not None:
            vec[k] += n
    return vec


def build_dataset(
    docs: Sequence[Document],
    lex: Lexicon,
    bucketing: TimeBucketing,
    labels: Mapping[tuple[str, int], int],
) -> MultiTaskDataset:
    """One row per labelled (task, bucket), in bucket order; unlabelled buckets are skipped.

    Tasks are ordered by first appearance in ``labels``.
    """
    task_names = list(dict.fromkeys(task for task, _ in labels))
    known = set(task_names)
    grouped: dict[tuple[str, int], list[Document]] = {}
    for doc in docs:
        if doc.task not in known:
            raise DataError(f"document task {doc.task!r} has no labels (known tasks: {sorted(known)})")
        grouped.setdefault((doc.task, bucketing.index(doc.timestamp)), []).append(doc)

    tasks = []
    for name in task_names:
        buckets = sorted(b for t, b in labels if t == name)
        rows, ys = [], []
        for b in buckets:
            label = int(labels[(name, b)])
            if label not in (-1, 1):
                raise DataError(f"label for task {name!r} bucket {b} is {label}, expected -1 or 1")
            bucket_docs = grouped.get((name, b), [])
            if not bucket_docs:
                warnings.warn(f"task {name!r} bucket {b} is labelled but has no documents", EmptyBucketWarning,
                              stacklevel=2)
            rows.append(featurize_bucket(bucket_docs, lex))
            ys.append(label)
        tasks.append(TaskDataset(np.array(rows).reshape(len(rows), lex.d), np.array(ys, dtype=np.int64)))
    return MultiTaskDataset(tuple(tasks), tuple(task_names), lex.feature_names)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b) / (na * nb)


def cosine_coupling(ds: MultiTaskDataset, threshold: float = 0.5, weight: float = 1.0) -> CouplingGraph:
    """Couple every task pair whose total keyword-frequency vectors have cosine above ``threshold``."""
    if not 0 <= threshold <= 1:
        raise ValueError("threshold must lie in [0, 1]")
    if not weight > 0:
        raise ValueError("edge weight must be positive")
    for name, task in zip(ds.task_names, ds.tasks):
        if task.m < 1:
            raise DataError(f"task {name!r} has no rows")
    totals = [task.x.sum(axis=0) for task in ds.tasks]
    edges = [
        Edge(i, j, weight)
        for i in range(len(totals))
        for j in range(i + 1, len(totals))
        if cosine(totals[i], totals[j]) > threshold
    ]
    return CouplingGraph(tuple(edges))


# --- input files --------------------------------------------------------------


def read_documents(path: str | Path) -> list[Document]:
    """JSON lines with ``text``, ``timestamp`` (RFC 3339) and ``task``."""
    path = Path(path)
    docs = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                docs.append(Document(str(obj["text"]), parse_timestamp(str(obj["timestamp"])), str(obj["task"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: malformed document ({exc.__class__.__name__}: {exc})") from None
    return docs


def read_lexicon(path: str | Path) -> Lexicon:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["term", "feature_name"]:
            raise DataError(f"{path}: expected header term,feature_name")
        pairs = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 or not row[0].strip() or not row[1].strip():
                raise DataError(f"{path}:{lineno}: expected two non-empty fields")
            pairs.append((row[0].strip(), row[1].strip()))
    if not pairs:
        raise DataError(f"{path}: lexicon is empty")
    return Lexicon.from_pairs(pairs)


def read_labels(path: str | Path) -> dict[tuple[str, int], int]:
    path = Path(path)
    labels: dict[tuple[str, int], int] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"task", "bucket_index", "label"} <= set(reader.fieldnames):
            raise DataError(f"{path}: expected header task,bucket_index,label")
        for lineno, row in enumerate(reader, start=2):
            try:
                key = (row["task"], int(row["bucket_index"]))
                label = int(row["label"])
            except (TypeError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if label not in (-1, 1) or key[1] < 0:
                raise DataError(f"{path}:{lineno}: label must be -1 or 1 and bucket_index >= 0")
            if key in labels:
                raise DataError(f"{path}:{lineno}: duplicate label for {key}")
            labels[key] = label
    return labels


def read_keywords(path: str | Path) -> list[str]:
    return [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
