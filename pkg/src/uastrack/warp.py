"""Rotational image warping and the rotated template bank.

The forward point map is the homogeneous transform
``[[s*cos(a), s*sin(a), tx], [-s*sin(a), s*cos(a), ty], [0, 0, 1]]``
(y grows downward). Patches are resampled by inverse-mapping each output
pixel through a pure rotation about the patch center and sampling the
source by bilinear interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .imagebuf import GrayImage

# Positions whose inverse map lands this far past the source border still
# count as inside; absorbs floating-point noise at exact 90-degree multiples.
_EDGE_EPS = 1e-9


@dataclass(frozen=True)
class AffineMap:
    """Scale + rotation + translation as a single homogeneous transform."""

    s: float = 1.0
    alpha: float = 0.0
    tx: float = 0.0
    ty: float = 0.0

    def __post_init__(self) -> None:
        if self.s <= 0.0:
            raise ValueError(f"scale must be positive, got {self.s}")

    def matrix(self) -> np.ndarray:
        """The 3x3 homogeneous matrix of this map."""
        c = self.s * math.cos(self.alpha)
        s = self.s * math.sin(self.alpha)
        return np.array([[c, s, self.tx], [-s, c, self.ty], [0.0, 0.0, 1.0]])


def apply_map(m: AffineMap, x: float, y: float) -> tuple[float, float]:
    """Forward-map a point: scale, rotate by ``alpha``, then translate."""
    c = math.cos(m.alpha)
    s = math.sin(m.alpha)
    return (
        m.s * c * x + m.s * s * y + m.tx,
        -m.s * s * x + m.s * c * y + m.ty,
    )


@dataclass(frozen=True)
class BankEntry:
    angle_deg: float
    patch: GrayImage


@dataclass(frozen=True)
class TemplateBank:
    """Rotated copies of one patch, ordered by strictly increasing angle."""

    entries: tuple[BankEntry, ...]
    base_width: int
    base_height: int

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def angles(self) -> tuple[float, ...]:
        return tuple(e.angle_deg for e in self.entries)


def _bilinear(src: np.ndarray, sx: np.ndarray, sy: np.ndarray) -> np.ndarray:
    """Sample float64 ``src`` at real positions; callers guarantee in-bounds."""
    h, w = src.shape
    x0 = np.clip(np.floor(sx).astype(np.intp), 0, max(w - 2, 0))
    y0 = np.clip(np.floor(sy).astype(np.intp), 0, max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = sx - x0
    fy = sy - y0
    top = src[y0, x0] * (1.0 - fx) + src[y0, x1] * fx
    bot = src[y1, x0] * (1.0 - fx) + src[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def warp_patch(src: GrayImage, alpha: float) -> GrayImage:
    """Rotate a patch by ``alpha`` radians about its center.

    Output has the source dimensions. Each output pixel is inverse-mapped
    through the rotation and bilinearly sampled; positions falling outside
    the source are filled with the source mean so they stay neutral under
    zero-mean correlation. Samples are rounded to the nearest gray level.
    """
    h, w = src.height, src.width
    f = src.as_float()
    cx = (w - 1) / 2.0
    cy = (h - 1) / 2.0
    dx, dy = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    rx = dx - cx
    ry = dy - cy
    c = math.cos(alpha)
    s = math.sin(alpha)
    # inverse of the forward rotation: R(alpha)^-1 == R(-alpha)
    sx = cx + c * rx - s * ry
    sy = cy + s * rx + c * ry
    inside = (
        (sx >= -_EDGE_EPS)
        & (sx <= w - 1 + _EDGE_EPS)
        & (sy >= -_EDGE_EPS)
        & (sy <= h - 1 + _EDGE_EPS)
    )
    sxc = np.clip(sx, 0.0, float(w - 1))
    syc = np.clip(sy, 0.0, float(h - 1))
    vals = np.where(inside, _bilinear(f, sxc, syc), f.mean())
    return GrayImage(np.clip(np.floor(vals + 0.5), 0.0, 255.0).astype(np.uint8))


def build_bank(patch: GrayImage, count: int = 36, step_deg: float = 10.0) -> TemplateBank:
    """Generate ``count`` rotated copies at ``step_deg`` spacing covering 360 degrees.

    Entry k holds angle ``k * step_deg``; entry 0 is the unmodified patch.
    """
    if count < 1 or count * step_deg != 360.0:
        raise ConfigError(
            f"bank must cover exactly 360 degrees, got {count} x {step_deg}"
        )
    entries = [BankEntry(0.0, patch)]
    for k in range(1, count):
        angle = k * step_deg
        entries.append(BankEntry(angle, warp_patch(patch, math.radians(angle))))
    return TemplateBank(tuple(entries), patch.width, patch.height)
