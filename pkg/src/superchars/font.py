"""Embedded 8x8 bitmap font.

Rows are packed one byte per row, most significant bit on the left. The table
was rasterized once from DejaVu Sans Mono Bold by ``scripts/build_font_table.py``
and is frozen here so rendering never touches OS fonts.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# fmt: off
_GLYPH_ROWS: dict[int, bytes] = {
    32: bytes(8),  # ' '
    33: bytes.fromhex('1010101010100000'),  # '!'
    34: bytes.fromhex('6c6c000000000000'),  # '"'
    35: bytes.fromhex('143c7cfc78500000'),  # '#'
    36: bytes.fromhex('107c703c5c381000'),  # '$'
    37: bytes.fromhex('60f0700c1e0c0000'),  # '%'
    38: bytes.fromhex('386070deec340000'),  # '&'
    39: bytes.fromhex('1010000000000000'),  # "'"
    40: bytes.fromhex('1810303030180800'),  # '('
    41: bytes.fromhex('3010181818302000'),  # ')'
    42: bytes.fromhex('1078540000000000'),  # '*'
    43: bytes.fromhex('001038fc10000000'),  # '+'
    44: bytes.fromhex('0000000010302000'),  # ','
    45: bytes.fromhex('0000003800000000'),  # '-'
    46: bytes.fromhex('0000000010100000'),  # '.'
    47: bytes.fromhex('0408183020400000'),  # '/'
    48: bytes.fromhex('386c7c6c6c380000'),  # '0'
    49: bytes.fromhex('78181818387c0000'),  # '1'
    50: bytes.fromhex('780c0c30707c0000'),  # '2'
    51: bytes.fromhex('780c380c4c780000'),  # '3'
    52: bytes.fromhex('183c6c7c1c080000'),  # '4'
    53: bytes.fromhex('7c60780c4c780000'),  # '5'
    54: bytes.fromhex('3c607c646c380000'),  # '6'
    55: bytes.fromhex('7c0c181830200000'),  # '7'
    56: bytes.fromhex('786c7c6c6c380000'),  # '8'
    57: bytes.fromhex('784c6c3c4c300000'),  # '9'
    58: bytes.fromhex('0000380010100000'),  # ':'
    59: bytes.fromhex('0000380010302000'),  # ';'
    60: bytes.fromhex('00047c701c000000'),  # '<'
    61: bytes.fromhex('0000fe007c000000'),  # '='
    62: bytes.fromhex('00407c1cf0000000'),  # '>'
    63: bytes.fromhex('7c0c183010100000'),  # '?'
    64: bytes.fromhex('0064deb6fe603c00'),  # '@'
    65: bytes.fromhex('38386c7c44440000'),  # 'A'
    66: bytes.fromhex('7c4c7c446e780000'),  # 'B'
    67: bytes.fromhex('3c606060741c0000'),  # 'C'
    68: bytes.fromhex('786c66647c700000'),  # 'D'
    69: bytes.fromhex('7c607c60607c0000'),  # 'E'
    70: bytes.fromhex('7c607c6060400000'),  # 'F'
    71: bytes.fromhex('3c60606c741c0000'),  # 'G'
    72: bytes.fromhex('446c7c6c6c440000'),  # 'H'
    73: bytes.fromhex('7c381010387c0000'),  # 'I'
    74: bytes.fromhex('3c0c0c0c5c780000'),  # 'J'
    75: bytes.fromhex('4c5878784c440000'),  # 'K'
    76: bytes.fromhex('60606060603c0000'),  # 'L'
    77: bytes.fromhex('6ceefed6c6440000'),  # 'M'
    78: bytes.fromhex('6464745c4c440000'),  # 'N'
    79: bytes.fromhex('386cc6c46c380000'),  # 'O'
    80: bytes.fromhex('7c6e7c7860400000'),  # 'P'
    81: bytes.fromhex('386cc6c46c3c0000'),  # 'Q'
    82: bytes.fromhex('786c7c786c460000'),  # 'R'
    83: bytes.fromhex('7c60780c4c780000'),  # 'S'
    84: bytes.fromhex('7c38101010100000'),  # 'T'
    85: bytes.fromhex('444444446c380000'),  # 'U'
    86: bytes.fromhex('c46c6c6838380000'),  # 'V'
    87: bytes.fromhex('c6d6fe7c6c440000'),  # 'W'
    88: bytes.fromhex('446c38386c440000'),  # 'X'
    89: bytes.fromhex('c66c383810100000'),  # 'Y'
    90: bytes.fromhex('7c0c1830707c0000'),  # 'Z'
    91: bytes.fromhex('3830303030301800'),  # '['
    92: bytes.fromhex('40603010080c0000'),  # '\\'
    93: bytes.fromhex('3818181818183000'),  # ']'
    94: bytes.fromhex('386c000000000000'),  # '^'
    95: bytes.fromhex('000000000000fe00'),  # '_'
    96: bytes.fromhex('3000000000000000'),  # '`'
    97: bytes.fromhex('00380c7c6c340000'),  # 'a'
    98: bytes.fromhex('60786c666c580000'),  # 'b'
    99: bytes.fromhex('003c6460741c0000'),  # 'c'
    100: bytes.fromhex('0c3c6ccc6c340000'),  # 'd'
    101: bytes.fromhex('00386cfc643c0000'),  # 'e'
    102: bytes.fromhex('1c7c383030100000'),  # 'f'
    103: bytes.fromhex('00346ccc7c2c7c00'),  # 'g'
    104: bytes.fromhex('60786c6c6c440000'),  # 'h'
    105: bytes.fromhex('18303818387c0000'),  # 'i'
    106: bytes.fromhex('1838181818187800'),  # 'j'
    107: bytes.fromhex('606478786c440000'),  # 'k'
    108: bytes.fromhex('f0303030381c0000'),  # 'l'
    109: bytes.fromhex('007cfed6d6540000'),  # 'm'
    110: bytes.fromhex('00586c6c6c440000'),  # 'n'
    111: bytes.fromhex('00386cc46c380000'),  # 'o'
    112: bytes.fromhex('00586c666c786000'),  # 'p'
    113: bytes.fromhex('00346ccc6c3c0c00'),  # 'q'
    114: bytes.fromhex('002c302020200000'),  # 'r'
    115: bytes.fromhex('0038603c4c780000'),  # 's'
    116: bytes.fromhex('307c3030301c0000'),  # 't'
    117: bytes.fromhex('00446c6c6c340000'),  # 'u'
    118: bytes.fromhex('00446c6c38100000'),  # 'v'
    119: bytes.fromhex('0082d6fc6c6c0000'),  # 'w'
    120: bytes.fromhex('004438387c440000'),  # 'x'
    121: bytes.fromhex('00446c6c38307000'),  # 'y'
    122: bytes.fromhex('007c1c38707c0000'),  # 'z'
    123: bytes.fromhex('1c10307010181c00'),  # '{'
    124: bytes.fromhex('1010101010101000'),  # '|'
    125: bytes.fromhex('7010181c10307000'),  # '}'
    126: bytes.fromhex('0000007c00000000'),  # '~'
}
# fmt: on

# hollow box for anything outside printable ASCII
_FALLBACK_ROWS = bytes.fromhex("7e4242424242427e")


def _unpack(rows: bytes) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(rows, dtype=np.uint8)).reshape(8, 8)
    return bits.astype(bool)


@dataclass(frozen=True, eq=False)
class FontTable:
    """Map from character to an 8x8 boolean ink mask (True = ink)."""

    glyphs: dict[str, np.ndarray] = field(repr=False)
    fallback: np.ndarray = field(repr=False)

    def lookup(self, ch: str) -> np.ndarray:
        return self.glyphs.get(ch, self.fallback)


def default_font() -> FontTable:
    glyphs = {chr(code): _unpack(rows) for code, rows in _GLYPH_ROWS.items()}
    for mask in glyphs.values():
        mask.setflags(write=False)
    fallback = _unpack(_FALLBACK_ROWS)
    fallback.setflags(write=False)
    return FontTable(glyphs=glyphs, fallback=fallback)


DEFAULT_FONT = default_font()
