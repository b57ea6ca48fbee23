"""Compose 224x224 Super Characters images from records."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .dataset import Record, tokenize
from .glyph import BACKGROUND, INK, cached_word_pixels, clean_word

CANVAS = 224


class Design(str, enum.Enum):
    ONE = "one"
    TWO = "two"
    THREE = "three"
    # Option Three geometry plus space-prefix augmentation
    FOUR = "four"


@dataclass(frozen=True)
class Rect:
    x: int
    y: int
    w: int
    h: int

    def overlaps(self, other: Rect) -> bool:
        return not (
            self.x + self.w <= other.x
            or other.x + other.w <= self.x
            or self.y + self.h <= other.y
            or other.y + other.h <= self.y
        )


@dataclass(frozen=True)
class LayoutSpec:
    design: Design
    words_per_row: int
    text_rows: int
    attribute_plan: tuple[tuple[str, Rect], ...] = ()

    def __post_init__(self):
        if CANVAS % self.words_per_row:
            raise ValueError(f"{self.words_per_row} words per row does not divide {CANVAS}")
        text = Rect(0, 0, CANVAS, self.text_height)
        if self.text_height > CANVAS:
            raise ValueError("text rows do not fit on the canvas")
        for name, rect in self.attribute_plan:
            if rect.x < 0 or rect.y < 0 or rect.x + rect.w > CANVAS or rect.y + rect.h > CANVAS:
                raise ValueError(f"region for {name!r} leaves the canvas")
            if rect.overlaps(text):
                raise ValueError(f"region for {name!r} overlaps the text rows")
            if rect.h < 8 or rect.w < rect.h:
                raise ValueError(f"region for {name!r} cannot hold a single glyph cell")

    @property
    def cell_px(self) -> int:
        return CANVAS // self.words_per_row

    @property
    def cutlength(self) -> int:
        return self.words_per_row * self.text_rows

    @property
    def text_height(self) -> int:
        return self.text_rows * self.cell_px

    def slot_rect(self, slot: int) -> Rect:
        row, col = divmod(slot, self.words_per_row)
        return Rect(col * self.cell_px, row * self.cell_px, self.cell_px, self.cell_px)


def _row(y: int, h: int, *cells: tuple[str, int]) -> list[tuple[str, Rect]]:
    """Pack attributes left to right; each entry is (name, width in cells)."""
    out, x = [], 0
    for name, n in cells:
        out.append((name, Rect(x, y, n * h, h)))
        x += n * h
    return out


OPTION_ONE = LayoutSpec(Design.ONE, words_per_row=7, text_rows=7)
OPTION_TWO = LayoutSpec(
    Design.TWO,
    words_per_row=8,
    text_rows=5,
    attribute_plan=tuple(
        _row(140, 28, ("author", 2), ("wordcount", 2), ("created_utc", 4))
        + _row(168, 28, ("subreddit", 2), ("score", 2), ("nchar", 4))
        + _row(196, 28, ("label", 8))
    ),
)
OPTION_THREE = LayoutSpec(
    Design.THREE,
    words_per_row=7,
    text_rows=6,
    attribute_plan=tuple(
        _row(192, 32, ("subreddit", 1), ("wordcount", 1), ("score", 1), ("label", 4))
    ),
)


def spec_for(design: Design | str) -> LayoutSpec:
    design = Design(design)
    return {
        Design.ONE: OPTION_ONE,
        Design.TWO: OPTION_TWO,
        Design.THREE: OPTION_THREE,
        Design.FOUR: OPTION_THREE,
    }[design]


@dataclass(frozen=True)
class SuperImage:
    pixels: np.ndarray = field(repr=False)  # (224, 224) uint8
    record_id: str
    design: Design
    prefix_spaces: int = 0
    cells_rendered: int = 0


def format_attribute(record: Record, name: str) -> str:
    value = getattr(record, name)
    if name == "created_utc":
        return datetime.fromtimestamp(value, tz=timezone.utc).strftime("%Y-%m-%d %H:%M:%S")
    return str(value)


def _paste(canvas: np.ndarray, word: str, x: int, y: int, side: int) -> bool:
    word = clean_word(word)
    if not word:
        return False
    canvas[y : y + side, x : x + side] = cached_word_pixels(word, side)
    return True


def embed_attributes(canvas: np.ndarray, record: Record, plan) -> None:
    """Write attribute values (no key names) into their regions, in place.

    Each whitespace token of a formatted value takes one square cell as tall
    as its region; tokens that do not fit are dropped.
    """
    for name, rect in plan:
        side = rect.h
        capacity = rect.w // side
        for i, token in enumerate(tokenize(format_attribute(record, name))[:capacity]):
            _paste(canvas, token, rect.x + i * side, rect.y, side)


def render(record: Record, spec: LayoutSpec, prefix_spaces: int = 0, design: Design | None = None) -> SuperImage:
    if prefix_spaces < 0:
        raise ValueError("prefix_spaces must be non-negative")
    canvas = np.full((CANVAS, CANVAS), BACKGROUND, dtype=np.uint8)
    tokens = tokenize(record.full_text)
    room = max(0, spec.cutlength - prefix_spaces)
    side = spec.cell_px
    rendered = 0
    for i, token in enumerate(tokens[:room]):
        rect = spec.slot_rect(prefix_spaces + i)
        rendered += _paste(canvas, token, rect.x, rect.y, side)
    embed_attributes(canvas, record, spec.attribute_plan)
    return SuperImage(
        pixels=canvas,
        record_id=record.id,
        design=design or spec.design,
        prefix_spaces=prefix_spaces,
        cells_rendered=rendered,
    )


def augmentation_prefixes(n_tokens: int, cutlength: int = OPTION_THREE.cutlength, include_original: bool = True) -> list[int]:
    """Prefix lengths used for space-prefix augmentation of one sentence.

    Sentences at or beyond the cut length, and empty ones, get only the
    unshifted image.
    """
    if n_tokens == 0 or n_tokens >= cutlength:
        return [0]
    prefixes = list(range(cutlength - n_tokens + 1))
    return prefixes if include_original else prefixes[1:]


def augment(record: Record, spec: LayoutSpec = OPTION_THREE, include_original: bool = True) -> list[SuperImage]:
    n = len(tokenize(record.full_text))
    return [
        render(record, spec, p, design=Design.FOUR)
        for p in augmentation_prefixes(n, spec.cutlength, include_original)
    ]


def cell_pixels(image: SuperImage | np.ndarray, spec: LayoutSpec, slot: int) -> np.ndarray:
    pixels = image.pixels if isinstance(image, SuperImage) else image
    rect = spec.slot_rect(slot)
    return pixels[rect.y : rect.y + rect.h, rect.x : rect.x + rect.w]


def ink_fraction(image: SuperImage) -> float:
    return float(np.mean(image.pixels == INK))
