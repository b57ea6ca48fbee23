"""Synthetic corpora with a planted, layout-detectable signal."""
from __future__ import annotations

import numpy as np

from .dataset import TASKS, Record

# dense capitals versus thin lowercase: positives are visibly darker
HEAVY_WORDS = ("MWM", "WOMB", "BMW", "MOW", "WHAM", "BOOM", "MEMO", "MAMBO", "WOW", "HMM")
LIGHT_WORDS = ("i", "it", "lit", "ill", "til", "if", "tl", "jil", "fit", "li")
FILLER_WORDS = ("the", "and", "was", "me", "you", "but", "not", "so", "we", "had", "feel", "just")

SUBREDDITS = ("offmychest", "CasualConversation")
RELATIONS = ("husband", "wife", "boyfriend", "girlfriend", "bf", "gf", "husband wife")


def make_record(index: int, tokens: list[str], labels: dict[str, int] | None, rng: np.random.Generator) -> Record:
    text = " ".join(tokens)
    return Record(
        sentenceid=f"s{index}",
        author=f"user{int(rng.integers(0, 10_000))}",
        nchar=len(text),
        created_utc=int(rng.integers(1_483_228_800, 1_546_300_799)),  # 2017-01-01 .. 2018-12-31
        score=int(rng.integers(-44, 1839)),
        subreddit=str(rng.choice(SUBREDDITS)),
        label=str(rng.choice(RELATIONS)),
        full_text=text,
        wordcount=len(tokens),
        id=f"r{index:05d}",
        task_labels=labels,
    )


def make_corpus(
    n: int,
    seed: int = 0,
    signal_task: str | None = TASKS[0],
    length_range: tuple[int, int] = (36, 42),
    signal_tokens: int = 7,
    labeled: bool = True,
) -> list[Record]:
    """Records whose ``signal_task`` label is written into the text.

    Positives open with ``signal_tokens`` heavy words, negatives with light
    ones; the rest is filler. Every other task gets a random label.
    """
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        labels = {t: int(rng.integers(0, 2)) for t in TASKS}
        if signal_task is not None:
            labels[signal_task] = i % 2
        length = int(rng.integers(length_range[0], length_range[1] + 1))
        lead = min(signal_tokens, length)
        if signal_task is not None:
            pool = HEAVY_WORDS if labels[signal_task] else LIGHT_WORDS
        else:
            pool = FILLER_WORDS
        tokens = [str(rng.choice(pool)) for _ in range(lead)]
        tokens += [str(rng.choice(FILLER_WORDS)) for _ in range(length - lead)]
        records.append(make_record(i, tokens, labels if labeled else None, rng))
    return records


def separable_corpus(n_per_class: int = 16, seed: int = 0) -> list[Record]:
    """Two obviously different layouts: short sentences are class 0, long ones class 1."""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(2 * n_per_class):
        label = i % 2
        length = int(rng.integers(35, 50)) if label else int(rng.integers(3, 8))
        tokens = [str(rng.choice(FILLER_WORDS + HEAVY_WORDS)) for _ in range(length)]
        labels = {t: label for t in TASKS}
        records.append(make_record(i, tokens, labels, rng))
    return records


def demo_records() -> dict[str, Record]:
    """One hand-written record per layout, used for golden images."""
    return {
        "one": Record(
            sentenceid="demo-1",
            author="demo",
            nchar=203,
            created_utc=1_530_000_000,
            score=5,
            subreddit="offmychest",
            label="wife",
            full_text=(
                "If it were me, and I cared about a person, I would absolutely read their book to show "
                "support, but I can also understand struggling to get stalted on/through something I have "
                "absolutely no interest in."
            ),
            wordcount=36,
            id="demo-one",
        ),
        "two": Record(
            sentenceid="demo-2",
            author="Laseyguy",
            nchar=102,
            created_utc=1_532_634_562,  # 2018-07-26 19:49:22 UTC
            score=2426,
            subreddit="offmychest",
            label="husband",
            full_text=(
                "I think it's safe to say that we've all been there - that realization that this isn't "
                "what we signed up for - and that life will never be the same again"
            ),
            wordcount=32,
            id="demo-two",
        ),
        "three": Record(
            sentenceid="demo-3",
            author="demo",
            nchar=170,
            created_utc=1_520_000_000,
            score=2,
            subreddit="CasualConversation",
            label="girlfriend",
            full_text=(
                "The best thing that you can do is keep at it don't give up hope, and try not to lose sight "
                "of what is important - you health and the health of your loved ones (and kity)!"
            ),
            wordcount=37,
            id="demo-three",
        ),
    }
