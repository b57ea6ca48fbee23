"""Render the demo records under every design, plus the Option Four shifts.

    python scripts/render_demos.py OUT_DIR

Writes one PNG per design and prints the SHA-256 of each image's raw pixels.
"""
import hashlib
import sys
from pathlib import Path

from superchars.export import export_png
from superchars.layout import augment, render, spec_for
from superchars.synthetic import demo_records


def main(out_dir: str) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for design, record in demo_records().items():
        image = render(record, spec_for(design))
        export_png(image, out / f"demo_{design}.png")
        print(design, image.cells_rendered, hashlib.sha256(image.pixels.tobytes()).hexdigest())
    shifted = augment(demo_records()["three"])
    for image in shifted:
        export_png(image, out / f"demo_four_p{image.prefix_spaces}.png")
    print(f"four: {len(shifted)} shifted images")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "demo_images")
