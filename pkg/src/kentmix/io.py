"""Data ingestion and output: CSV point files, PPM images, label files,
and the RGB-to-sphere image segmentation pipeline."""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from kentmix.errors import DomainError, FitError, FormatError
from kentmix.fitter import FitConfig, fit
from kentmix.model import MixtureModel
from kentmix.selection import SelectionTable, map_classify, select_g

ZERO_NORM = 1e-12
UNIT_NORM_TOL = 1e-6


@dataclass
class Dataset:
    points: np.ndarray
    source_rows: int
    skipped_rows: int
    row_index: np.ndarray
    """0-based data-row number (header excluded) of each kept point."""


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_csv_points(text: str, normalize: bool = False) -> Dataset:
    """Parse comma-separated 3-column numeric text.

    A first row that is not numeric is taken as a header. With
    ``normalize`` each row is scaled to unit length and zero rows are
    skipped; otherwise rows off the unit sphere by more than 1e-6 are
    rejected.

    Raises:
        FormatError: on a malformed row or on rows off the sphere.
        DomainError: when no usable rows remain.
    """
    rows = list(csv.reader(io.StringIO(text)))
    start = 0
    if rows and rows[0] and not all(_is_number(f) for f in rows[0]):
        start = 1
    kept, index, bad, skipped, source = [], [], [], 0, 0
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if not row or all(not f.strip() for f in row):
            continue
        if len(row) != 3:
            raise FormatError(f"line {lineno}: expected 3 fields, got {len(row)}")
        try:
            y = np.array([float(f) for f in row])
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
        if not np.all(np.isfinite(y)):
            raise FormatError(f"line {lineno}: non-finite value")
        row_number = source
        source += 1
        norm = float(np.linalg.norm(y))
        if normalize:
            if norm < ZERO_NORM:
                skipped += 1
                continue
        elif abs(norm - 1.0) > UNIT_NORM_TOL:
            bad.append(lineno)
            continue
        kept.append(y / norm)
        index.append(row_number)
    if bad:
        shown = ", ".join(map(str, bad[:20])) + (" ..." if len(bad) > 20 else "")
        raise FormatError(f"rows not on the unit sphere at lines {shown}")
    if not kept:
        raise DomainError("empty dataset: no usable rows")
    return Dataset(np.array(kept), source, skipped, np.array(index, dtype=int))


def load_csv(path, normalize: bool = False) -> Dataset:
    return read_csv_points(Path(path).read_text(), normalize)


def save_csv(path, points) -> None:
    lines = ["x,y,z"] + [",".join(format(v, ".17g") for v in p) for p in np.asarray(points)]
    Path(path).write_text("\n".join(lines) + "\n")


def save_labels(path, labels, index=None) -> None:
    labels = np.asarray(labels, dtype=int)
    index = np.arange(labels.size) if index is None else np.asarray(index)
    body = "".join(f"{i},{lab}\n" for i, lab in zip(index.tolist(), labels.tolist()))
    Path(path).write_text("index,label\n" + body)


# -- PPM ----------------------------------------------------------------------


@dataclass
class ImageGrid:
    width: int
    height: int
    pixels: np.ndarray
    """Row-major ``(width * height, 3)`` uint8 array."""

    def __post_init__(self):
        pixels = np.asarray(self.pixels, dtype=np.uint8).reshape(-1, 3)
        if pixels.shape[0] != self.width * self.height:
            raise DomainError("pixel count must equal width * height")
        self.pixels = pixels

    def __eq__(self, other):
        if not isinstance(other, ImageGrid):
            return NotImplemented
        return (self.width, self.height) == (other.width, other.height) and np.array_equal(
            self.pixels, other.pixels
        )


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    tokens, pos = [], 0
    for _ in range(count):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise FormatError("truncated PPM header")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens, pos


def parse_ppm(data: bytes) -> ImageGrid:
    """Decode a P3 or P6 image with maxval 255.

    Raises:
        FormatError: on another magic number or maxval, or a truncated raster.
    """
    (magic, w, h, maxval), pos = _header_tokens(data, 4)
    if magic not in (b"P3", b"P6"):
        raise FormatError(f"unsupported PPM magic {magic!r}")
    try:
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise FormatError(f"bad PPM header: {exc}") from exc
    if maxval != 255:
        raise FormatError(f"unsupported maxval {maxval}; only 255 is handled")
    if width < 0 or height < 0:
        raise FormatError("negative image size")
    count = width * height * 3
    if magic == b"P6":
        raster = data[pos + 1 : pos + 1 + count]
        if len(raster) != count:
            raise FormatError("truncated P6 raster")
        pixels = np.frombuffer(raster, dtype=np.uint8)
    else:
        body = re.sub(rb"#[^\n]*", b"", data[pos:]).split()
        if len(body) < count:
            raise FormatError("truncated P3 raster")
        values = np.array([int(t) for t in body[:count]])
        if values.size and (values.min() < 0 or values.max() > 255):
            raise FormatError("P3 sample out of range")
        pixels = values.astype(np.uint8)
    return ImageGrid(width, height, pixels.reshape(-1, 3))


def load_ppm(path) -> ImageGrid:
    return parse_ppm(Path(path).read_bytes())


def encode_ppm(img: ImageGrid, binary: bool = True) -> bytes:
    if binary:
        return f"P6\n{img.width} {img.height}\n255\n".encode() + img.pixels.tobytes()
    rows = "\n".join(" ".join(str(v) for v in px) for px in img.pixels.tolist())
    return f"P3\n{img.width} {img.height}\n255\n{rows}\n".encode()


def save_ppm(path, img: ImageGrid, binary: bool = True) -> None:
    Path(path).write_bytes(encode_ppm(img, binary))


# -- segmentation --------------------------------------------------------------


def image_to_sphere(img: ImageGrid) -> tuple[Dataset, np.ndarray]:
    """Map RGB pixels to ``y / |y|`` on the sphere.

    Pure black pixels have no direction; they are left out of the dataset
    and returned as the second element (their pixel indices).
    """
    rgb = img.pixels.astype(np.float64)
    norms = np.linalg.norm(rgb, axis=1)
    black = np.flatnonzero(norms == 0.0)
    keep = np.flatnonzero(norms > 0.0)
    points = rgb[keep] / norms[keep, None]
    data = Dataset(points, img.width * img.height, black.size, keep)
    return data, black


class EmptyImageError(FitError):
    """No pixel of the image can be mapped to the sphere."""

    def __init__(self, n_pixels: int):
        super().__init__("empty dataset: every pixel is black")
        self.labels = np.zeros(n_pixels, dtype=int)


@dataclass
class Segmentation:
    labels: np.ndarray
    """Per-pixel labels in row-major order, 0 for black pixels."""
    model: MixtureModel
    table: SelectionTable | None = None


def segment_image(img: ImageGrid, g: int | str, cfg: FitConfig, g_range: tuple[int, int] = (2, 10)) -> Segmentation:
    """Cluster the pixels of ``img`` by their RGB direction.

    ``g="auto"`` selects the order over ``g_range`` with the BIC-like rule.

    Raises:
        EmptyImageError: if every pixel is black (its ``labels`` are all 0).
    """
    n_pixels = img.width * img.height
    data, _ = image_to_sphere(img)
    if data.points.shape[0] == 0:
        raise EmptyImageError(n_pixels)
    table = None
    if g == "auto":
        lo, hi = g_range
        hi = min(hi, data.points.shape[0])
        table = select_g(data.points, min(lo, hi), hi, cfg)
        model = table.selected.report.model
    else:
        model = fit(data.points, replace(cfg, g=int(g))).model
    labels = np.zeros(n_pixels, dtype=int)
    labels[data.row_index] = map_classify(data.points, model)
    return Segmentation(labels, model, table)


def recolor(img: ImageGrid, labels) -> ImageGrid:
    """Paint every pixel with the mean RGB of its label's pixels; label 0 stays black."""
    labels = np.asarray(labels)
    out = np.zeros_like(img.pixels)
    for lab in np.unique(labels):
        if lab == 0:
            continue
        members = labels == lab
        mean = img.pixels[members].astype(np.float64).mean(axis=0)
        out[members] = np.floor(mean + 0.5).astype(np.uint8)
    return ImageGrid(img.width, img.height, out)

