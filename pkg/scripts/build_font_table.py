"""Regenerate the embedded 8x8 glyph table in src/superchars/font.py.

Rasterizes DejaVu Sans Mono Bold (shipped with matplotlib), box-filters the
font-wide character box down to a 7x7 ink area of an 8x8 cell and thresholds. Run once; the output is frozen as data.
"""
import sys
from pathlib import Path

import matplotlib
import numpy as np
from PIL import Image, ImageDraw, ImageFont

OVERSAMPLE = 8
THRESHOLD = 0.38
INK = 7


def cell_box(font):
    """Character box spanning letter ascenders to descenders; taller marks clip."""
    top = font.getbbox("Hbdfl")[1]
    bottom = font.getbbox("gjpqy")[3]
    return 0, top, round(font.getlength("M")), bottom


def rasterize(ch, font, box):
    x0, y0, x1, y1 = box
    img = Image.new("L", (x1 - x0, y1 - y0), 0)
    ImageDraw.Draw(img).text((-x0, -y0), ch, fill=255, font=font)
    # 7x7 ink area, last row and column left blank as spacing
    small = img.resize((INK * OVERSAMPLE, INK * OVERSAMPLE), Image.BOX)
    arr = np.asarray(small, dtype=np.float64) / 255.0
    arr = arr.reshape(INK, OVERSAMPLE, INK, OVERSAMPLE).mean(axis=(1, 3))
    out = np.zeros((8, 8), dtype=bool)
    out[:INK, :INK] = arr > THRESHOLD
    return out


def main():
    path = Path(matplotlib.get_data_path()) / "fonts/ttf/DejaVuSansMono-Bold.ttf"
    font = ImageFont.truetype(str(path), size=96)
    box = cell_box(font)
    rows = []
    for code in range(33, 127):
        bits = rasterize(chr(code), font, box)
        if not bits.any():
            raise SystemExit(f"blank glyph for {chr(code)!r}")
        packed = [int("".join("1" if b else "0" for b in row), 2) for row in bits]
        rows.append((code, packed))
    if "--show" in sys.argv:
        for code, packed in rows:
            print(repr(chr(code)))
            for v in packed:
                print(format(v, "08b").replace("0", ".").replace("1", "#"))
        return
    for code, packed in rows:
        print(f"    {code}: bytes.fromhex({bytes(packed).hex()!r}),  # {chr(code)!r}")


if __name__ == "__main__":
    main()
