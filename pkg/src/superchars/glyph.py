"""Squared English Word rendering: one word squeezed into one square cell."""
from __future__ import annotations

import math
import unicodedata
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .font import DEFAULT_FONT, FontTable

INK = 0
BACKGROUND = 255
MAX_WORD_CHARS = 64


@dataclass(frozen=True)
class GlyphCell:
    side_px: int
    pixels: np.ndarray  # (side_px, side_px) uint8, INK or BACKGROUND


def sew_grid_dim(word_len: int) -> int:
    """Smallest m with m*m >= word_len."""
    if word_len < 1:
        raise ValueError("word_len must be >= 1")
    m = math.isqrt(word_len)
    return m if m * m == word_len else m + 1


def clean_word(word: str) -> str:
    """Drop control characters and clamp to the longest renderable word."""
    kept = "".join(ch for ch in word if unicodedata.category(ch) != "Cc")
    return kept[:MAX_WORD_CHARS]


def _scale_mask(mask: np.ndarray, size: int) -> np.ndarray:
    # Each target pixel covers a source footprint; it is ink if any source
    # pixel in it is. For size >= 8 that is plain nearest neighbour, for
    # size < 8 it keeps thin strokes from vanishing.
    edges = (np.arange(size + 1) * 8) // size
    starts = edges[:-1]
    stops = np.maximum(edges[1:], starts + 1)
    out = np.zeros((size, size), dtype=bool)
    for i in range(size):
        rows = mask[starts[i] : stops[i]].any(axis=0)
        for j in range(size):
            out[i, j] = rows[starts[j] : stops[j]].any()
    return out


@lru_cache(maxsize=256)
def _scaled_glyph(ch: str, size: int, font: FontTable) -> np.ndarray:
    return _scale_mask(font.lookup(ch), size)


def render_word(word: str, side_px: int, font: FontTable = DEFAULT_FONT) -> GlyphCell:
    """Lay the characters of ``word`` row-major into an m x m grid of sub-cells.

    Sub-cells are ``side_px // m`` pixels square and anchored at the top-left;
    any leftover border stays background.
    """
    if side_px < 8:
        raise ValueError("side_px must be at least 8")
    word = clean_word(word)
    if not word:
        raise ValueError("word is empty after removing control characters")
    m = sew_grid_dim(len(word))
    sub = side_px // m
    ink = np.zeros((side_px, side_px), dtype=bool)
    for i, ch in enumerate(word):
        r, c = divmod(i, m)
        ink[r * sub : (r + 1) * sub, c * sub : (c + 1) * sub] = _scaled_glyph(ch, sub, font)
    pixels = np.where(ink, INK, BACKGROUND).astype(np.uint8)
    return GlyphCell(side_px=side_px, pixels=pixels)


@lru_cache(maxsize=65536)
def cached_word_pixels(word: str, side_px: int) -> np.ndarray:
    """Read-only rendering with the default font, shared across images."""
    pixels = render_word(word, side_px).pixels
    pixels.setflags(write=False)
    return pixels
