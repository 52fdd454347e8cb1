"""Image file I/O and padding.

Supported formats: PNG (8/16-bit gray, 8-bit RGB/RGBA) and binary
PPM/PGM.  Values map to [0, 1]; 16-bit gray output is lossless to
1/65535.  Inputs whose dims are not multiples of the latent granularity
are padded by edge replication on ingest and cropped back on output.
"""

import io

import numpy as np
from PIL import Image

from genmatte.errors import FormatError, ShapeError
from genmatte.tensor import Tensor3

SUPPORTED_FORMATS = ("PNG", "PPM")


def _from_pil(im: Image.Image) -> Tensor3:
    if im.format is not None and im.format not in SUPPORTED_FORMATS:
        raise FormatError(
            f"unsupported format {im.format}; supported: PNG (8/16-bit gray, RGB), PPM/PGM"
        )
    if im.mode == "RGBA":
        im = im.convert("RGB")
    if im.mode == "RGB":
        arr = np.asarray(im, dtype=np.float64) / 255.0
        return np.ascontiguousarray(arr.transpose(2, 0, 1))
    if im.mode == "L":
        return (np.asarray(im, dtype=np.float64) / 255.0)[None]
    if im.mode in ("I;16", "I;16B"):
        arr = np.asarray(im, dtype=np.float64)
        return (arr / 65535.0)[None]
    if im.mode == "I":
        arr = np.asarray(im, dtype=np.float64)
        return (arr / 65535.0)[None]
    raise FormatError(
        f"unsupported pixel mode {im.mode}; supported: 8-bit gray/RGB, 16-bit gray"
    )


def load_image(source) -> Tensor3:
    """Load a PNG or PPM/PGM file (path, bytes, or file object) to [0, 1]."""
    try:
        if isinstance(source, (bytes, bytearray)):
            im = Image.open(io.BytesIO(source))
        else:
            im = Image.open(source)
        im.load()
    except FileNotFoundError:
        raise
    except Exception as exc:  # Pillow raises a zoo of types for bad data
        raise FormatError(f"cannot decode image: {exc}") from exc
    return _from_pil(im)


def _to_pil(img: Tensor3, bit_depth: int) -> Image.Image:
    if img.ndim != 3 or img.shape[0] not in (1, 3):
        raise ShapeError(f"expected (1|3,H,W) image, got shape {img.shape}")
    x = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    if img.shape[0] == 3:
        arr = np.round(x * 255.0).astype(np.uint8).transpose(1, 2, 0)
        return Image.fromarray(arr, mode="RGB")
    if bit_depth == 16:
        arr = np.round(x[0] * 65535.0).astype(np.uint16)
        return Image.fromarray(arr)  # uint16 maps to 16-bit gray
    arr = np.round(x[0] * 255.0).astype(np.uint8)
    return Image.fromarray(arr, mode="L")


def save_image(path, img: Tensor3, bit_depth: int = 16) -> None:
    """Write PNG (default) or PPM/PGM chosen by the file extension."""
    pil = _to_pil(img, bit_depth)
    suffix = str(path).lower().rsplit(".", 1)[-1]
    if suffix in ("ppm", "pgm"):
        pil.save(path, format="PPM")
    elif suffix == "png":
        pil.save(path, format="PNG")
    else:
        raise FormatError(f"unsupported output extension .{suffix}; use .png/.ppm/.pgm")


def encode_png_bytes(img: Tensor3, bit_depth: int = 16) -> bytes:
    """PNG-encode to bytes (for the HTTP service payloads)."""
    buf = io.BytesIO()
    _to_pil(img, bit_depth).save(buf, format="PNG")
    return buf.getvalue()


def pad_to_multiple(img: Tensor3, multiple: int):
    """Edge-replicate to the next multiples of `multiple`; returns
    (padded, original_hw)."""
    _, h, w = img.shape
    ph = (multiple - h % multiple) % multiple
    pw = (multiple - w % multiple) % multiple
    if ph == 0 and pw == 0:
        return img, (h, w)
    return np.pad(img, ((0, 0), (0, ph), (0, pw)), mode="edge"), (h, w)


def unpad(img: Tensor3, original_hw) -> Tensor3:
    h, w = original_hw
    return np.ascontiguousarray(img[:, :h, :w])
