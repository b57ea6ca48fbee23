import csv

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superchars.dataset import (
    ATTRIBUTE_COLUMNS,
    TASKS,
    FoldPlan,
    Record,
    corpus_stats,
    histogram_bars,
    make_folds,
    parse_corpus,
    tokenize,
    write_corpus,
)
from superchars.errors import DataError, RowError, SchemaError

from conftest import record_with_text


@pytest.mark.parametrize(
    "text, expected",
    [
        ("If it were me,", ["If", "it", "were", "me,"]),
        ("", []),
        ("a  b\tc", ["a", "b", "c"]),
        ("  \n\t ", []),
        ("line\nbreak nbsp", ["line", "break", "nbsp"]),
    ],
)
def test_tokenize(text, expected):
    assert tokenize(text) == expected


@given(st.text())
def test_tokenize_never_emits_empty_or_whitespace(text):
    tokens = tokenize(text)
    assert all(tokens)
    assert not any(ch.isspace() for t in tokens for ch in t)
    assert "".join(tokens) == "".join(ch for ch in text if not ch.isspace())


def test_parse_round_trip(labeled_records, write_csv):
    path = write_csv(labeled_records)
    parsed = parse_corpus(path, has_labels=True)
    assert parsed == labeled_records


def test_parse_preserves_embedded_commas_and_newlines(write_csv):
    text = 'first line, with comma\nsecond "quoted" line'
    path = write_csv([record_with_text(text)])
    (r,) = parse_corpus(path, has_labels=False)
    assert r.full_text == text
    assert r.task_labels is None


def test_header_only_file_gives_empty_list(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text(",".join(ATTRIBUTE_COLUMNS) + "\n")
    assert parse_corpus(path, has_labels=False) == []


def test_columns_matched_by_name_in_any_order(tmp_path, labeled_records):
    columns = list(reversed(ATTRIBUTE_COLUMNS + TASKS))
    path = tmp_path / "shuffled.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([c.upper() for c in columns])
        for r in labeled_records:
            writer.writerow([r.task_labels[c] if c in TASKS else getattr(r, c) for c in columns])
    assert parse_corpus(path) == labeled_records


def test_missing_column_names_it(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(",".join(c for c in ATTRIBUTE_COLUMNS if c != "score") + "\n")
    with pytest.raises(SchemaError, match="score"):
        parse_corpus(path, has_labels=False)


def test_missing_label_column_when_labels_requested(tmp_path):
    path = tmp_path / "unlabeled.csv"
    path.write_text(",".join(ATTRIBUTE_COLUMNS) + "\n")
    with pytest.raises(SchemaError, match="Emotion_disclosure"):
        parse_corpus(path, has_labels=True)


def _one_row_file(tmp_path, **replace):
    row = {c: "x" for c in ATTRIBUTE_COLUMNS}
    row.update(nchar="3", created_utc="1520000000", score="0", wordcount="1", full_text="abc")
    row.update({t: "0" for t in TASKS})
    row.update(replace)
    path = tmp_path / "row.csv"
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(row))
        writer.writeheader()
        writer.writerow(row)
    return path


def test_non_integer_reports_row_number(tmp_path):
    with pytest.raises(RowError, match="row 2") as err:
        parse_corpus(_one_row_file(tmp_path, score="lots"), has_labels=True)
    assert err.value.row == 2


def test_label_outside_binary_is_row_error(tmp_path):
    with pytest.raises(RowError, match="Support"):
        parse_corpus(_one_row_file(tmp_path, Support="2"), has_labels=True)


def test_integral_float_timestamp_accepted(tmp_path):
    (r,) = parse_corpus(_one_row_file(tmp_path, created_utc="1520000000.0"), has_labels=True)
    assert r.created_utc == 1520000000


def test_out_of_range_year_is_only_a_warning(tmp_path, caplog):
    (r,) = parse_corpus(_one_row_file(tmp_path, created_utc="0"), has_labels=True)
    assert r.created.year == 1970
    assert "outside" in caplog.text


def test_record_rejects_partial_task_labels():
    with pytest.raises(ValueError):
        record_with_text("a", task_labels={"Support": 1})


def test_stats_single_record():
    stats = corpus_stats([record_with_text("a b")])
    assert stats.row_count == 1
    assert stats.length_histogram == {2: 1}


def test_stats_empty_is_error():
    with pytest.raises(DataError):
        corpus_stats([])


def test_stats_fields(labeled_records):
    stats = corpus_stats(labeled_records)
    assert stats.row_count == len(labeled_records)
    assert stats.unique_ids == len(labeled_records)
    assert sum(stats.length_histogram.values()) == stats.row_count
    assert stats.unique_authors <= stats.row_count
    assert set(stats.length_histogram) == {1, 2, 3}
    kv = dict(line.split("=", 1) for line in stats.to_kv().splitlines())
    assert kv["row_count"] == str(len(labeled_records))
    assert "unique ids" in stats.to_text()


def test_stats_histogram_uses_tokens_not_wordcount_column():
    r = record_with_text("one two three", wordcount=99)
    stats = corpus_stats([r])
    assert stats.length_histogram == {3: 1}
    assert stats.max_wordcount == 99
    assert stats.wordcount_mismatches == 1


def test_truncated_fraction_counts_strictly_longer():
    records = [record_with_text(" ".join(["w"] * n), id=str(n)) for n in (48, 49, 50, 60)]
    assert corpus_stats(records).truncated_fraction[49] == 0.5


def test_histogram_bars_three_lengths():
    bars = histogram_bars({1: 1, 2: 4, 5: 2})
    assert len(bars.splitlines()) == 3


def _records(n):
    return [record_with_text("x", id=str(i)) for i in range(n)]


def test_folds_12860_by_10():
    plan = make_folds(_records(12860), 10, seed=0)
    assert plan.sizes() == [1286] * 10


def test_folds_one_each():
    assert make_folds(_records(5), 5, seed=1).sizes() == [1] * 5


def test_folds_deterministic():
    records = _records(37)
    assert make_folds(records, 4, seed=9) == make_folds(records, 4, seed=9)
    assert make_folds(records, 4, seed=9) != make_folds(records, 4, seed=10)


def test_folds_errors():
    with pytest.raises(ValueError):
        make_folds(_records(3), 4)
    with pytest.raises(ValueError):
        make_folds(_records(3), 1)
    with pytest.raises(DataError):
        make_folds([], 2)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(2, 300), k=st.integers(2, 12), seed=st.integers(0, 2**32 - 1))
def test_folds_partition_and_balance(n, k, seed):
    if k > n:
        return
    plan = make_folds(_records(n), k, seed)
    sizes = plan.sizes()
    assert sum(sizes) == n
    assert max(sizes) - min(sizes) <= 1
    covered = sorted(i for f in range(k) for i in plan.indices(f))
    assert covered == list(range(n))


def test_stratified_folds_spread_positives(labeled_records):
    plan = make_folds(labeled_records * 5, 3, seed=0, stratify_task="Support")
    records = labeled_records * 5
    positives = [sum(records[i].task_labels["Support"] for i in plan.indices(f)) for f in range(3)]
    assert max(positives) - min(positives) <= 1
    assert max(plan.sizes()) - min(plan.sizes()) <= 1


def test_seed_changes_folds_not_stats(labeled_records):
    assert make_folds(labeled_records, 3, 0) != make_folds(labeled_records, 3, 1)
    assert corpus_stats(labeled_records) == corpus_stats(list(labeled_records))


def test_fold_plan_file_round_trip(tmp_path):
    plan = make_folds(_records(23), 4, seed=2)
    plan.save(tmp_path / "folds.txt")
    lines = (tmp_path / "folds.txt").read_text().splitlines()
    assert len(lines) == 23 and all(len(line.split()) == 2 for line in lines)
    assert FoldPlan.load(tmp_path / "folds.txt", 4) == plan
