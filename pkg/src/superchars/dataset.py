"""Corpus parsing, exploratory statistics, tokenization and k-fold splits."""
from __future__ import annotations

import csv
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError, RowError, SchemaError

log = logging.getLogger(__name__)

ATTRIBUTE_COLUMNS = (
    "sentenceid",
    "author",
    "nchar",
    "created_utc",
    "score",
    "subreddit",
    "label",
    "full_text",
    "wordcount",
    "id",
)
# spelling of the fourth task follows the shared-task column name
TASKS = (
    "Emotion_disclosure",
    "Information_disclosure",
    "Support",
    "Emmotion_support",
    "Information_support",
    "General_support",
)
_INT_COLUMNS = ("nchar", "score", "wordcount")
_CORPUS_YEARS = (2017, 2018)

_WS = re.compile(r"\s+")


def tokenize(full_text: str) -> list[str]:
    """Split on whitespace runs; punctuation stays attached."""
    return _WS.split(full_text.strip()) if full_text.strip() else []


@dataclass(frozen=True)
class Record:
    sentenceid: str
    author: str
    nchar: int
    created_utc: int
    score: int
    subreddit: str
    label: str
    full_text: str
    wordcount: int
    id: str
    task_labels: Mapping[str, int] | None = None

    def __post_init__(self):
        if self.nchar < 0 or self.wordcount < 0:
            raise ValueError("nchar and wordcount must be non-negative")
        if self.task_labels is not None:
            if set(self.task_labels) != set(TASKS):
                raise ValueError(f"task_labels must have exactly the keys {TASKS}")
            if any(v not in (0, 1) for v in self.task_labels.values()):
                raise ValueError("task labels must be 0 or 1")

    @property
    def tokens(self) -> list[str]:
        return tokenize(self.full_text)

    @property
    def created(self) -> datetime:
        return datetime.fromtimestamp(self.created_utc, tz=timezone.utc)


def _normalize(name: str) -> str:
    return name.strip().lower()


def _parse_int(value: str, column: str, row: int, allow_integral_float: bool = False) -> int:
    text = value.strip()
    try:
        return int(text)
    except ValueError:
        pass
    if allow_integral_float:
        try:
            as_float = float(text)
        except ValueError:
            as_float = None
        if as_float is not None and as_float.is_integer():
            return int(as_float)
    raise RowError(row, f"column {column!r} is not an integer: {value!r}")


def parse_corpus(path: str | Path, has_labels: bool | None = None) -> list[Record]:
    """Read a corpus CSV. Columns are matched by name, case-insensitively.

    ``has_labels=None`` treats the file as labeled when every task column is
    present in the header.

    Row numbers in errors count the header as row 1, so they match a
    spreadsheet view of the file.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty (no header row)") from None
        index = {_normalize(name): i for i, name in enumerate(header)}
        if has_labels is None:
            has_labels = all(_normalize(t) in index for t in TASKS)
        required = ATTRIBUTE_COLUMNS + (TASKS if has_labels else ())
        for column in required:
            if _normalize(column) not in index:
                raise SchemaError(column)
        col = {c: index[_normalize(c)] for c in required}

        records = []
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < len(header):
                raise RowError(row_number, f"expected {len(header)} fields, got {len(row)}")
            records.append(_make_record(row, col, row_number, has_labels))
    _warn_on_suspect_values(records)
    return records


def _make_record(row: list[str], col: dict[str, int], n: int, has_labels: bool) -> Record:
    task_labels = None
    if has_labels:
        task_labels = {}
        for task in TASKS:
            value = row[col[task]].strip()
            if value not in ("0", "1"):
                raise RowError(n, f"label {task!r} must be 0 or 1, got {value!r}")
            task_labels[task] = int(value)
    nchar = _parse_int(row[col["nchar"]], "nchar", n)
    wordcount = _parse_int(row[col["wordcount"]], "wordcount", n)
    if nchar < 0 or wordcount < 0:
        raise RowError(n, "nchar and wordcount must be non-negative")
    return Record(
        sentenceid=row[col["sentenceid"]],
        author=row[col["author"]],
        nchar=nchar,
        created_utc=_parse_int(row[col["created_utc"]], "created_utc", n, allow_integral_float=True),
        score=_parse_int(row[col["score"]], "score", n),
        subreddit=row[col["subreddit"]],
        label=row[col["label"]],
        full_text=row[col["full_text"]],
        wordcount=wordcount,
        id=row[col["id"]],
        task_labels=task_labels,
    )


def _warn_on_suspect_values(records: Sequence[Record]) -> None:
    out_of_range = sum(1 for r in records if r.created.year not in _CORPUS_YEARS)
    if out_of_range:
        log.warning("%d records have created_utc outside %d-%d", out_of_range, *_CORPUS_YEARS)
    mismatched = sum(1 for r in records if r.wordcount != len(r.tokens))
    if mismatched:
        log.warning("%d records have a wordcount column that differs from the token count", mismatched)


def write_corpus(records: Iterable[Record], path: str | Path, with_labels: bool | None = None) -> None:
    records = list(records)
    if with_labels is None:
        with_labels = bool(records) and records[0].task_labels is not None
    columns = ATTRIBUTE_COLUMNS + (TASKS if with_labels else ())
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for r in records:
            row = [getattr(r, c) for c in ATTRIBUTE_COLUMNS]
            if with_labels:
                row += [r.task_labels[t] for t in TASKS]
            writer.writerow(row)


@dataclass(frozen=True)
class StatsReport:
    row_count: int
    unique_ids: int
    unique_authors: int
    max_nchar: int
    max_wordcount: int
    score_min: int
    score_max: int
    unique_scores: int
    unique_labels: int
    subreddit_values: list[str]
    length_histogram: dict[int, int]
    year_min: int
    year_max: int
    wordcount_mismatches: int
    # fraction of records whose token count exceeds each cut length
    truncated_fraction: dict[int, float] = field(default_factory=dict)

    def to_kv(self) -> str:
        lines = [
            f"row_count={self.row_count}",
            f"unique_ids={self.unique_ids}",
            f"unique_authors={self.unique_authors}",
            f"max_nchar={self.max_nchar}",
            f"max_wordcount={self.max_wordcount}",
            f"score_min={self.score_min}",
            f"score_max={self.score_max}",
            f"unique_scores={self.unique_scores}",
            f"unique_labels={self.unique_labels}",
            f"subreddit_values={'|'.join(self.subreddit_values)}",
            f"year_min={self.year_min}",
            f"year_max={self.year_max}",
            f"wordcount_mismatches={self.wordcount_mismatches}",
        ]
        lines += [f"truncated_fraction_{cut}={frac:.6f}" for cut, frac in sorted(self.truncated_fraction.items())]
        lines += [f"length_{n}={c}" for n, c in sorted(self.length_histogram.items())]
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        cuts = ", ".join(
            f"{cut} words: {100 * frac:.2f}%" for cut, frac in sorted(self.truncated_fraction.items())
        )
        return (
            f"rows:            {self.row_count}\n"
            f"unique ids:      {self.unique_ids}\n"
            f"unique authors:  {self.unique_authors}\n"
            f"max nchar:       {self.max_nchar}\n"
            f"max wordcount:   {self.max_wordcount}\n"
            f"score range:     [{self.score_min}, {self.score_max}] ({self.unique_scores} unique)\n"
            f"unique labels:   {self.unique_labels}\n"
            f"subreddits:      {', '.join(self.subreddit_values)}\n"
            f"years:           {self.year_min}-{self.year_max}\n"
            f"wordcount column disagrees with tokens: {self.wordcount_mismatches}\n"
            f"truncated at:    {cuts}\n"
        )


def histogram_bars(histogram: Mapping[int, int], width: int = 60) -> str:
    """Text bar chart, one line per sentence length."""
    if not histogram:
        return ""
    peak = max(histogram.values())
    lines = []
    for length in sorted(histogram):
        count = histogram[length]
        bar = "#" * max(1, round(width * count / peak))
        lines.append(f"{length:5d} | {bar} {count}")
    return "\n".join(lines) + "\n"


def corpus_stats(records: Sequence[Record], cuts: Sequence[int] = (40, 42, 49)) -> StatsReport:
    if not records:
        raise DataError("cannot compute statistics of an empty corpus")
    lengths = [len(r.tokens) for r in records]
    scores = [r.score for r in records]
    years = [r.created.year for r in records]
    n = len(records)
    return StatsReport(
        row_count=n,
        unique_ids=len({r.id for r in records}),
        unique_authors=len({r.author for r in records}),
        max_nchar=max(r.nchar for r in records),
        max_wordcount=max(r.wordcount for r in records),
        score_min=min(scores),
        score_max=max(scores),
        unique_scores=len(set(scores)),
        unique_labels=len({r.label for r in records}),
        subreddit_values=sorted({r.subreddit for r in records}),
        length_histogram=dict(sorted(Counter(lengths).items())),
        year_min=min(years),
        year_max=max(years),
        wordcount_mismatches=sum(1 for r, L in zip(records, lengths) if r.wordcount != L),
        truncated_fraction={cut: sum(1 for L in lengths if L > cut) / n for cut in cuts},
    )


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: tuple[int, ...]

    def indices(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.assignment) if f == fold]

    def train_indices(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.assignment) if f != fold]

    def sizes(self) -> list[int]:
        counts = Counter(self.assignment)
        return [counts.get(f, 0) for f in range(self.k)]

    def save(self, path: str | Path) -> None:
        with Path(path).open("w") as fh:
            for i, f in enumerate(self.assignment):
                fh.write(f"{i} {f}\n")

    @classmethod
    def load(cls, path: str | Path, k: int | None = None) -> FoldPlan:
        pairs = []
        for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
            if not line.strip():
                continue
            try:
                i, f = (int(x) for x in line.split())
            except ValueError:
                raise DataError(f"{path}:{line_no}: expected 'index fold'") from None
            pairs.append((i, f))
        pairs.sort()
        if [i for i, _ in pairs] != list(range(len(pairs))):
            raise DataError(f"{path}: record indices are not 0..n-1")
        assignment = tuple(f for _, f in pairs)
        k = k or (max(assignment) + 1 if assignment else 0)
        return cls(k=k, assignment=assignment)


def make_folds(
    records: Sequence[Record],
    k: int = 10,
    seed: int = 0,
    stratify_task: str | None = None,
) -> FoldPlan:
    """Seeded permutation followed by round-robin fold assignment.

    With ``stratify_task`` the permutation is stably grouped by that task's
    label before dealing, so each fold gets a near-equal share of positives.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if not records:
        raise DataError("cannot split an empty corpus")
    if k > len(records):
        raise ValueError(f"k={k} exceeds the number of records ({len(records)})")
    order = np.random.default_rng(seed).permutation(len(records))
    if stratify_task is not None:
        order = sorted(order, key=lambda i: records[i].task_labels[stratify_task])
    assignment = [0] * len(records)
    for position, index in enumerate(order):
        assignment[int(index)] = position % k
    return FoldPlan(k=k, assignment=tuple(assignment))
