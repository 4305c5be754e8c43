"""Bit-exact raster input/output plus the half-resolution helpers.

Supports binary netpbm only: P6 (colour) and P5 (greyscale), maxval 255.
Writers emit the canonical header ``P6\\n<w> <h>\\n255\\n`` followed by the
raw payload, so round-trips are byte-identical. Downscaling averages
2x2 blocks (round-half-up, trailing odd row/column dropped); upscaling a
mask is nearest-neighbour.
"""

from dataclasses import dataclass

import numpy as np


class PnmError(ValueError):
    """Base for netpbm parse failures."""


class PnmMagicError(PnmError):
    """Wrong or unknown magic number."""


class PnmHeaderError(PnmError):
    """Malformed header (missing or non-integer fields, bad dimensions)."""


class PnmDepthError(PnmError):
    """Unsupported maxval (only 255 is accepted)."""


class PnmTruncatedError(PnmError):
    """Payload shorter than the header promises."""


@dataclass(frozen=True)
class Image:
    """8-bit RGB raster; pixels is a (height, width, 3) uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3 or p.dtype != np.uint8:
            raise ValueError(f"pixels must be (h, w, 3) uint8, got {p.shape} {p.dtype}")
        if p.shape[0] == 0 or p.shape[1] == 0:
            raise ValueError("image dimensions must be positive")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class MaskImage:
    """Single-channel mask raster; 255 = skin, 0 = non-skin."""

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 2 or p.dtype != np.uint8:
            raise ValueError(f"mask pixels must be (h, w) uint8, got {p.shape} {p.dtype}")
        if p.shape[0] == 0 or p.shape[1] == 0:
            raise ValueError("mask dimensions must be positive")
        if not np.isin(p, (0, 255)).all():
            raise ValueError("mask values must be 0 or 255")

    @classmethod
    def from_bool(cls, skin: np.ndarray) -> "MaskImage":
        return cls(pixels=np.where(skin, 255, 0).astype(np.uint8))

    def to_bool(self) -> np.ndarray:
        return self.pixels == 255

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def _read_header(data: bytes, expected_magic: bytes):
    """Parse a netpbm header; returns (width, height, payload offset).

    '#' comments are allowed anywhere among the header tokens; exactly one
    whitespace byte separates the maxval from the payload.
    """
    pos = 0
    n = len(data)

    def next_token():
        nonlocal pos
        while pos < n:
            byte = data[pos : pos + 1]
            if byte == b"#":
                while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            elif byte.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise PnmHeaderError("unexpected end of header")
        return data[start:pos]

    magic = next_token()
    if magic != expected_magic:
        raise PnmMagicError(f"expected magic {expected_magic.decode()}, got {magic!r}")
    fields = []
    for name in ("width", "height", "maxval"):
        token = next_token()
        try:
            fields.append(int(token))
        except ValueError:
            raise PnmHeaderError(f"non-integer {name} field: {token!r}") from None
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise PnmHeaderError(f"dimensions must be positive, got {width}x{height}")
    if maxval != 255:
        raise PnmDepthError(f"unsupported maxval {maxval}, only 255 is handled")
    if pos >= n or not data[pos : pos + 1].isspace():
        raise PnmHeaderError("missing whitespace byte after maxval")
    return width, height, pos + 1


def read_ppm(data: bytes) -> Image:
    """Decode a binary P6 file; exact pixel recovery."""
    width, height, offset = _read_header(data, b"P6")
    expected = 3 * width * height
    payload = data[offset : offset + expected]
    if len(payload) < expected:
        raise PnmTruncatedError(
            f"payload holds {len(payload)} bytes, header promises {expected}"
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return Image(pixels=pixels.copy())


def read_pgm(data: bytes) -> np.ndarray:
    """Decode a binary P5 file into a (height, width) uint8 array."""
    width, height, offset = _read_header(data, b"P5")
    expected = width * height
    payload = data[offset : offset + expected]
    if len(payload) < expected:
        raise PnmTruncatedError(
            f"payload holds {len(payload)} bytes, header promises {expected}"
        )
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width).copy()


def write_ppm(img: Image) -> bytes:
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def write_pgm(mask: MaskImage) -> bytes:
    header = f"P5\n{mask.width} {mask.height}\n255\n".encode("ascii")
    return header + mask.pixels.tobytes()


def write_gray_pgm(gray: np.ndarray) -> bytes:
    """P5 bytes for an arbitrary (h, w) uint8 plane (probability renderings)."""
    gray = np.asarray(gray, dtype=np.uint8)
    if gray.ndim != 2:
        raise ValueError(f"expected a 2-d plane, got shape {gray.shape}")
    header = f"P5\n{gray.shape[1]} {gray.shape[0]}\n255\n".encode("ascii")
    return header + gray.tobytes()


def downscale_half(img: Image) -> Image:
    """Halve both dimensions by averaging 2x2 blocks per channel.

    The mean is rounded half-up; a trailing odd row or column is dropped.
    Raises on images narrower or shorter than 2 pixels.
    """
    if img.width < 2 or img.height < 2:
        raise ValueError(f"image too small to halve: {img.width}x{img.height}")
    h2, w2 = img.height // 2, img.width // 2
    trimmed = img.pixels[: 2 * h2, : 2 * w2].astype(np.uint32)
    blocks = (
        trimmed[0::2, 0::2]
        + trimmed[0::2, 1::2]
        + trimmed[1::2, 0::2]
        + trimmed[1::2, 1::2]
    )
    return Image(pixels=((blocks + 2) // 4).astype(np.uint8))


def upscale_mask_2x(mask: MaskImage, target_w: int, target_h: int) -> MaskImage:
    """Nearest-neighbour 2x upscale of a mask to the original image size.

    The target may be one short of exactly double in either axis (the
    downscale dropped an odd row/column); the last source row/column is
    repeated to cover it.
    """
    if not 2 * mask.width - 1 <= target_w <= 2 * mask.width:
        raise ValueError(f"target width {target_w} incompatible with mask width {mask.width}")
    if not 2 * mask.height - 1 <= target_h <= 2 * mask.height:
        raise ValueError(f"target height {target_h} incompatible with mask height {mask.height}")
    ys = np.minimum(np.arange(target_h) // 2, mask.height - 1)
    xs = np.minimum(np.arange(target_w) // 2, mask.width - 1)
    return MaskImage(pixels=mask.pixels[np.ix_(ys, xs)])
