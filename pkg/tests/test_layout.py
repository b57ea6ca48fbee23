import hashlib
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superchars.export import read_png
from superchars.glyph import BACKGROUND, INK, render_word
from superchars.layout import (
    CANVAS,
    OPTION_ONE,
    OPTION_THREE,
    OPTION_TWO,
    Design,
    LayoutSpec,
    Rect,
    augment,
    augmentation_prefixes,
    cell_pixels,
    embed_attributes,
    format_attribute,
    render,
    spec_for,
)

from conftest import record_with_text, words

GOLDEN = Path(__file__).parent / "golden"
GOLDEN_SHA256 = {
    "one": "a63205149510667531640e00261c49bd465b5b5ad5d118d7303d3648ab1b287c",
    "two": "5f9eb870a8b31a658b3545b48eef95f461286866f8a6d69692dd31a1d1070f65",
    "three": "c6329ddd1e3f03e40ad96bc7da594a625427e8fd8d64b4ccca1b0324a356650f",
}


def test_geometry_constants():
    assert (OPTION_ONE.words_per_row, OPTION_ONE.text_rows, OPTION_ONE.cell_px, OPTION_ONE.cutlength) == (7, 7, 32, 49)
    assert OPTION_ONE.attribute_plan == ()
    assert (OPTION_TWO.words_per_row, OPTION_TWO.text_rows, OPTION_TWO.cell_px, OPTION_TWO.cutlength) == (8, 5, 28, 40)
    assert (OPTION_THREE.words_per_row, OPTION_THREE.text_rows, OPTION_THREE.cell_px, OPTION_THREE.cutlength) == (7, 6, 32, 42)
    assert [name for name, _ in OPTION_TWO.attribute_plan] == [
        "author", "wordcount", "created_utc", "subreddit", "score", "nchar", "label",
    ]
    assert [name for name, _ in OPTION_THREE.attribute_plan] == ["subreddit", "wordcount", "score", "label"]


@pytest.mark.parametrize("spec, region", [(OPTION_TWO, (140, 84)), (OPTION_THREE, (192, 32))])
def test_attribute_regions_fill_the_bottom_rows(spec, region):
    top, height = region
    assert spec.text_height == top
    covered = np.zeros((CANVAS, CANVAS), bool)
    for _, r in spec.attribute_plan:
        assert not covered[r.y : r.y + r.h, r.x : r.x + r.w].any()
        covered[r.y : r.y + r.h, r.x : r.x + r.w] = True
    assert covered[top : top + height].all()
    assert not covered[:top].any()


@pytest.mark.parametrize("spec", [OPTION_ONE, OPTION_TWO, OPTION_THREE])
def test_geometry_invariants(spec):
    assert spec.words_per_row * spec.cell_px == CANVAS
    bottom = max((r.y + r.h for _, r in spec.attribute_plan), default=spec.text_height)
    assert spec.text_height <= bottom <= CANVAS


def test_spec_for_four_is_option_three_geometry():
    assert spec_for("four") is OPTION_THREE
    with pytest.raises(ValueError):
        spec_for("five")


def test_bad_plans_rejected_at_construction():
    with pytest.raises(ValueError, match="overlaps"):
        LayoutSpec(Design.THREE, 7, 6, (("score", Rect(0, 160, 64, 32)),))
    with pytest.raises(ValueError, match="single glyph"):
        LayoutSpec(Design.THREE, 7, 6, (("score", Rect(0, 192, 4, 32)),))
    with pytest.raises(ValueError, match="canvas"):
        LayoutSpec(Design.THREE, 7, 6, (("score", Rect(200, 192, 64, 32)),))
    with pytest.raises(ValueError):
        LayoutSpec(Design.ONE, 5, 5)


@pytest.mark.parametrize("spec, cells", [(OPTION_ONE, 49), (OPTION_TWO, 40), (OPTION_THREE, 42)])
def test_sixty_tokens_truncated(spec, cells):
    image = render(record_with_text(words(60)), spec)
    assert image.cells_rendered == cells
    inked = sum(bool((cell_pixels(image, spec, s) == INK).any()) for s in range(spec.cutlength))
    assert inked == cells


def test_slots_fill_row_major():
    text = words(10)
    image = render(record_with_text(text), OPTION_ONE)
    for slot, token in enumerate(text.split()):
        assert np.array_equal(cell_pixels(image, OPTION_ONE, slot), render_word(token, 32).pixels)
    for slot in range(10, 49):
        assert (cell_pixels(image, OPTION_ONE, slot) == BACKGROUND).all()


def test_option_one_demo_has_seven_per_row(demos):
    image = render(demos["one"], OPTION_ONE)
    tokens = demos["one"].full_text.split()
    assert image.cells_rendered == len(tokens) == 36
    # slot 7 starts the second row with the eighth word
    assert np.array_equal(cell_pixels(image, OPTION_ONE, 7), render_word(tokens[7], 32).pixels)
    rows_inked = [(image.pixels[32 * r : 32 * r + 32] == INK).any() for r in range(7)]
    # 36 words occupy slots 0..35: five full rows plus the first slot of the sixth
    assert rows_inked == [True] * 6 + [False]


def _region(image, spec, name):
    rect = dict(spec.attribute_plan)[name]
    return image.pixels[rect.y : rect.y + rect.h, rect.x : rect.x + rect.w]


def test_option_two_attribute_rows(demos):
    r = demos["two"]
    image = render(r, OPTION_TWO)
    assert format_attribute(r, "created_utc") == "2018-07-26 19:49:22"
    expected = {
        "author": ["Laseyguy"],
        "wordcount": ["32"],
        "created_utc": ["2018-07-26", "19:49:22"],
        "subreddit": ["offmychest"],
        "score": ["2426"],
        "nchar": ["102"],
        "label": ["husband"],
    }
    for name, tokens in expected.items():
        region = _region(image, OPTION_TWO, name)
        for i, token in enumerate(tokens):
            assert np.array_equal(region[:, 28 * i : 28 * i + 28], render_word(token, 28).pixels), name
        assert (region[:, 28 * len(tokens) :] == BACKGROUND).all()


def test_option_three_attribute_row(demos):
    image = render(demos["three"], OPTION_THREE)
    row = image.pixels[192:224]
    for i, token in enumerate(["CasualConversation", "37", "2", "girlfriend"]):
        assert np.array_equal(row[:, 32 * i : 32 * i + 32], render_word(token, 32).pixels)
    assert (row[:, 128:] == BACKGROUND).all()


def test_zero_score_is_rendered():
    image = render(record_with_text("hi", score=0), OPTION_THREE)
    assert np.array_equal(_region(image, OPTION_THREE, "score")[:, :32], render_word("0", 32).pixels)


def test_attribute_overflow_truncated_at_region_edge():
    r = record_with_text("hi", label="a b c d e f g h i j")
    image = render(r, OPTION_THREE)
    region = _region(image, OPTION_THREE, "label")
    for i, token in enumerate("abcd"):
        assert np.array_equal(region[:, 32 * i : 32 * i + 32], render_word(token, 32).pixels)


def test_empty_text_leaves_only_attribute_row():
    image = render(record_with_text(""), OPTION_THREE)
    assert image.cells_rendered == 0
    assert (image.pixels[:192] == BACKGROUND).all()
    assert (image.pixels[192:] == INK).any()


def test_embed_attributes_in_place():
    canvas = np.full((CANVAS, CANVAS), BACKGROUND, np.uint8)
    embed_attributes(canvas, record_with_text("", score=-44), OPTION_THREE.attribute_plan)
    assert np.array_equal(canvas[192:224, 64:96], render_word("-44", 32).pixels)


def test_option_one_ignores_attributes():
    a = render(record_with_text("same text", score=1), OPTION_ONE)
    b = render(record_with_text("same text", score=999, author="other"), OPTION_ONE)
    assert np.array_equal(a.pixels, b.pixels)


def brute_prefixes(n_tokens, cut=42):
    if n_tokens == 0 or n_tokens >= cut:
        return [0]
    out, p = [], 0
    while n_tokens + p <= cut:
        out.append(p)
        p += 1
    return out


@pytest.mark.parametrize("n, count", [(1, 42), (20, 23), (40, 3), (41, 2), (42, 1), (100, 1)])
def test_augment_counts(n, count):
    assert len(brute_prefixes(n)) == count
    images = augment(record_with_text(words(n)))
    assert len(images) == count
    assert [im.prefix_spaces for im in images] == brute_prefixes(n)
    assert all(im.design == Design.FOUR for im in images)


def test_augment_forty_tokens_last_image_ends_at_slot_42():
    images = augment(record_with_text(words(40)))
    last = images[-1]
    assert last.prefix_spaces == 2 and last.cells_rendered == 40
    assert (cell_pixels(last, OPTION_THREE, 41) == INK).any()
    assert (cell_pixels(last, OPTION_THREE, 0) == BACKGROUND).all()


def test_augment_exclude_original():
    assert augmentation_prefixes(40, include_original=False) == [1, 2]
    assert augmentation_prefixes(42, include_original=False) == [0]
    assert augmentation_prefixes(0) == [0]


@settings(max_examples=60, deadline=None)
@given(n=st.integers(0, 60), p=st.integers(0, 50))
def test_truncation_rule(n, p):
    image = render(record_with_text(words(n)), OPTION_THREE, p)
    assert image.cells_rendered == max(0, min(n, OPTION_THREE.cutlength - p))


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 42), p=st.integers(0, 41))
def test_shift_equivalence(n, p):
    r = record_with_text(words(n))
    base = render(r, OPTION_THREE, 0)
    shifted = render(r, OPTION_THREE, p)
    for s in range(OPTION_THREE.cutlength):
        got = cell_pixels(shifted, OPTION_THREE, s)
        if s < p:
            assert (got == BACKGROUND).all()
        else:
            assert np.array_equal(got, cell_pixels(base, OPTION_THREE, s - p))
    assert np.array_equal(shifted.pixels[192:], base.pixels[192:])


def test_negative_prefix_rejected():
    with pytest.raises(ValueError):
        render(record_with_text("a"), OPTION_ONE, -1)


@pytest.mark.parametrize("design", ["one", "two", "three"])
def test_golden_images(demos, design):
    image = render(demos[design], spec_for(design))
    assert image.pixels.shape == (224, 224)
    assert set(np.unique(image.pixels)) == {INK, BACKGROUND}
    assert hashlib.sha256(image.pixels.tobytes()).hexdigest() == GOLDEN_SHA256[design]
    assert np.array_equal(read_png(GOLDEN / f"demo_{design}.png"), image.pixels)
