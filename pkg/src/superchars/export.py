"""PNG and binary tensor-file output for rendered images.

Tensor file layout (little-endian)::

    b"SCHR1" | u32 count | count x (u32 label | 3*224*224 uint8, CHW)

An unlabeled image stores label 0xFFFFFFFF. A sidecar ``<file>.manifest``
holds one ``index,record_id,design,prefix_spaces,task,label`` line per image.
"""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
from PIL import Image

from .layout import CANVAS, Design, SuperImage

MAGIC = b"SCHR1"
UNLABELED = 0xFFFFFFFF
CHANNELS = 3
_RECORD_BYTES = CHANNELS * CANVAS * CANVAS
_END = object()


def png_bytes(pixels: np.ndarray) -> bytes:
    buf = io.BytesIO()
    # Pillow writes no time or text chunks unless asked to
    Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8), mode="L").save(
        buf, format="PNG", compress_level=9
    )
    return buf.getvalue()


def export_png(image: SuperImage | np.ndarray, path: str | Path) -> None:
    pixels = image.pixels if isinstance(image, SuperImage) else image
    Path(path).write_bytes(png_bytes(pixels))


def read_png(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L"))


def manifest_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".manifest")


@dataclass(frozen=True)
class ManifestRow:
    index: int
    record_id: str
    design: str
    prefix_spaces: int
    task: str
    label: int | None

    def line(self) -> str:
        label = "" if self.label is None else str(self.label)
        return f"{self.index},{self.record_id},{self.design},{self.prefix_spaces},{self.task},{label}"

    @classmethod
    def parse(cls, line: str) -> ManifestRow:
        # record ids never contain commas in the corpus, but split from the
        # right so that a stray one does not shift the other fields
        index, rest = line.split(",", 1)
        record_id, design, prefix, task, label = rest.rsplit(",", 4)
        return cls(int(index), record_id, design, int(prefix), task, int(label) if label else None)


def write_manifest(rows: Iterable[ManifestRow], path: str | Path) -> None:
    with Path(path).open("w") as fh:
        for row in rows:
            fh.write(row.line() + "\n")


def read_manifest(path: str | Path) -> list[ManifestRow]:
    return [ManifestRow.parse(line) for line in Path(path).read_text().splitlines() if line]


def to_chw(pixels: np.ndarray) -> np.ndarray:
    return np.broadcast_to(pixels, (CHANNELS,) + pixels.shape)


def export_tensor(
    images: Iterable[SuperImage],
    path: str | Path,
    labels: Iterable[int | None] | None = None,
    task: str = "",
) -> int:
    """Write images, replicated to three channels, plus the manifest sidecar.

    ``images`` may be a generator; the count is patched in once it is known.
    Returns the number of images written.
    """
    path = Path(path)
    label_iter = iter(labels) if labels is not None else None
    count = 0
    with path.open("wb") as fh, manifest_path(path).open("w") as manifest:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", 0))
        for image in images:
            label = None
            if label_iter is not None:
                label = next(label_iter, _END)
                if label is _END:
                    raise ValueError("fewer labels than images")
            fh.write(struct.pack("<I", UNLABELED if label is None else int(label)))
            fh.write(to_chw(image.pixels).tobytes())
            design = image.design.value if isinstance(image.design, Design) else str(image.design)
            manifest.write(ManifestRow(count, image.record_id, design, image.prefix_spaces, task, label).line() + "\n")
            count += 1
        if label_iter is not None and next(label_iter, _END) is not _END:
            raise ValueError("more labels than images")
        fh.seek(len(MAGIC))
        fh.write(struct.pack("<I", count))
    return count


def read_tensor(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Return (labels as int64 with -1 for unlabeled, images as (n, 3, 224, 224) uint8)."""
    data = Path(path).read_bytes()
    if data[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: not an SCHR1 tensor file")
    (count,) = struct.unpack_from("<I", data, len(MAGIC))
    offset = len(MAGIC) + 4
    expected = offset + count * (4 + _RECORD_BYTES)
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(data)}")
    labels = np.empty(count, dtype=np.int64)
    images = np.empty((count, CHANNELS, CANVAS, CANVAS), dtype=np.uint8)
    for i in range(count):
        (label,) = struct.unpack_from("<I", data, offset)
        labels[i] = -1 if label == UNLABELED else label
        offset += 4
        images[i] = np.frombuffer(data, dtype=np.uint8, count=_RECORD_BYTES, offset=offset).reshape(
            CHANNELS, CANVAS, CANVAS
        )
        offset += _RECORD_BYTES
    return labels, images
