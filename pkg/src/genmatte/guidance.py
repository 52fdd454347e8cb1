"""Spatial guidance construction: trimap, coarse mask, scribbles.

A guide always carries a single-channel pixel image in the matte domain
plus the mask of unknown pixels.  Lowering to the latent grid encodes
the known-region image and max-pools the unknown mask (a latent site is
unknown as soon as any pixel it covers is unknown).
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from genmatte import codec as codec_mod
from genmatte.errors import ShapeError, ValidationError
from genmatte.sampler import GuidanceLatent
from genmatte.tensor import Tensor3

TRIMAP_LEVELS = (0.0, 0.5, 1.0)
TRIMAP_TOL = 1e-3


@dataclass(frozen=True)
class SpatialGuide:
    """Pixel-space guide: kind in {trimap, mask, scribble}."""

    kind: str
    image: Tensor3
    m_unknown: Tensor3

    def __post_init__(self):
        if self.kind not in ("trimap", "mask", "scribble"):
            raise ValidationError(f"unknown guide kind {self.kind!r}")
        if self.image.shape != self.m_unknown.shape or self.image.shape[0] != 1:
            raise ShapeError("guide image and unknown mask must be matching (1,H,W) grids")


def trimap_guide(trimap: Tensor3, tol: float = TRIMAP_TOL) -> SpatialGuide:
    """Three-level guide; unknown exactly where the value is 0.5.

    tol is the snap distance to the levels {0, 0.5, 1}; file ingest
    passes the 8-bit quantization distance (2/255) since 0.5 cannot be
    represented exactly in an 8-bit image.
    """
    t = np.asarray(trimap, dtype=np.float64)
    if t.ndim == 2:
        t = t[None]
    levels = np.abs(t[..., None] - np.array(TRIMAP_LEVELS)).min(axis=-1)
    if np.any(levels > tol):
        bad = float(t.reshape(-1)[np.argmax(levels.reshape(-1))])
        raise ValidationError(f"trimap values must be in {{0, 0.5, 1}}, found {bad}")
    snapped = np.round(t * 2.0) / 2.0
    unknown = (np.abs(snapped - 0.5) < 0.25).astype(np.float64)
    return SpatialGuide("trimap", snapped, unknown)


def mask_guide(mask: Tensor3) -> SpatialGuide:
    """Coarse-mask guide under the literal rule: everything unknown."""
    m = _require_binary(mask)
    return SpatialGuide("mask", m, np.ones_like(m))


def coarse_mask_guide(mask: Tensor3, w_band: int = 16) -> SpatialGuide:
    """Coarse-mask guide with a boundary band of unknowns.

    The literal everything-unknown rule erases the mask from the init
    entirely; this variant treats the binarized mask as a pseudo-matte
    and marks only a band of width w_band around the mask boundary as
    unknown, keeping the far field as hard constraints.
    """
    m = _require_binary(mask)
    fg = m[0] >= 0.5
    if fg.all() or (~fg).all():
        unknown = np.zeros_like(m)
        return SpatialGuide("mask", m, unknown)
    # distance from each pixel to the nearest pixel of the other class
    d_fg = ndimage.distance_transform_edt(fg)      # bg pixels: 0
    d_bg = ndimage.distance_transform_edt(~fg)
    dist = np.where(fg, d_fg, d_bg)
    unknown = (dist <= w_band / 2.0).astype(np.float64)[None]
    return SpatialGuide("mask", m, unknown)


def scribble_guide(strokes, height: int, width: int) -> SpatialGuide:
    """Rasterize labelled strokes; unknown everywhere except stroke pixels.

    strokes: iterable of dicts {label: 0|1, radius: px, points: [[x,y],..]}
    as carried by the scribble JSON document.
    """
    image = np.zeros((1, height, width), dtype=np.float64)
    known = np.zeros((height, width), dtype=bool)
    yy, xx = np.mgrid[0:height, 0:width]
    for stroke in strokes:
        label = stroke.get("label")
        if label not in (0, 1):
            raise ValidationError(f"stroke label must be 0 or 1, got {label!r}")
        radius = float(stroke.get("radius", 1.0))
        if radius <= 0:
            raise ValidationError(f"stroke radius must be > 0, got {radius}")
        points = stroke.get("points", [])
        if not points:
            raise ValidationError("stroke has no points")
        for p0, p1 in zip(points, points[1:] or [points[0]]):
            covered = _stamp_segment(xx, yy, p0, p1, radius)
            known |= covered
            image[0][covered] = float(label)
    return SpatialGuide("scribble", image, (~known).astype(np.float64)[None])


def _stamp_segment(xx, yy, p0, p1, radius):
    """Pixels within radius of the segment p0-p1 (disc stamping)."""
    x0, y0 = float(p0[0]), float(p0[1])
    x1, y1 = float(p1[0]), float(p1[1])
    dx, dy = x1 - x0, y1 - y0
    L2 = dx * dx + dy * dy
    if L2 == 0:
        return (xx - x0) ** 2 + (yy - y0) ** 2 <= radius * radius
    t = np.clip(((xx - x0) * dx + (yy - y0) * dy) / L2, 0.0, 1.0)
    px, py = x0 + t * dx, y0 + t * dy
    return (xx - px) ** 2 + (yy - py) ** 2 <= radius * radius


def _require_binary(mask: Tensor3) -> Tensor3:
    m = np.asarray(mask, dtype=np.float64)
    if m.ndim == 2:
        m = m[None]
    if np.any((np.abs(m) > TRIMAP_TOL) & (np.abs(m - 1.0) > TRIMAP_TOL)):
        raise ValidationError("mask must be binary {0, 1}")
    return np.round(m)


def guide_latent(g: SpatialGuide, matte_codec: codec_mod.LatentCodec) -> GuidanceLatent:
    """Lower a pixel-space guide to the latent grid.

    Encodes the image with unknown pixels zeroed, max-pools the unknown
    mask per latent site, and re-zeroes the latent guide wherever the
    pooled mask marks the site unknown.
    """
    f = matte_codec.f
    _, h, w = g.image.shape
    if h % f or w % f:
        raise ShapeError(f"guide dims {h}x{w} not divisible by f={f}; pad upstream")
    known_img = np.where(g.m_unknown >= 1.0, 0.0, g.image)
    c_s = codec_mod.encode(known_img, matte_codec)
    pooled = g.m_unknown[0].reshape(h // f, f, w // f, f).max(axis=(1, 3))
    m_lat = pooled[None]
    g_lat = c_s * (1.0 - (m_lat >= 1.0).astype(np.float64))
    return GuidanceLatent(g=g_lat, m_unknown=m_lat)
