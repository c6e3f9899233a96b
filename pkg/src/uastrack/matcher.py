"""Zero-mean normalized cross-correlation, windowed scanning, match centroids.

Scores follow the classic ZMNCC form: the zero-mean product sum over the
region under the template, divided by the product of the root sums of
squared deviations of region and template. Scores live in [-1, 1]; a region
or template with zero variance scores 0 (no information, never a match).

All positions are template-center coordinates. A template of width ``tw``
centered at integer ``u`` covers columns ``[u - (tw-1)//2, u - (tw-1)//2 + tw)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import BoundsError
from .imagebuf import GrayImage, Rect
from .warp import TemplateBank

DEFAULT_THRESHOLD = 0.9

# Cap on elements materialized per scan chunk (~16 MB of float64).
_CHUNK_ELEMS = 2_000_000


@dataclass(frozen=True)
class MatchPoint:
    """One above-threshold template-center position."""

    u: int
    v: int
    score: float
    angle_deg: float


@dataclass(frozen=True)
class Detection:
    """Centroid of all match points plus the single best-scoring one."""

    x: float
    y: float
    best_score: float
    best_angle_deg: float
    support: int


def template_origin(center: int, size: int) -> int:
    """Left/top pixel of a ``size``-wide template centered at ``center``."""
    return center - (size - 1) // 2


def center_bounds(tpl_size: int, frame_size: int) -> tuple[int, int]:
    """Inclusive range of center positions keeping the template in frame."""
    lo = (tpl_size - 1) // 2
    hi = frame_size - tpl_size + lo
    return lo, hi


def valid_center_rect(tpl_w: int, tpl_h: int, frame_w: int, frame_h: int) -> Rect:
    """All center positions at which a tpl_w x tpl_h template fits the frame."""
    xlo, xhi = center_bounds(tpl_w, frame_w)
    ylo, yhi = center_bounds(tpl_h, frame_h)
    if xhi < xlo or yhi < ylo:
        raise BoundsError(
            f"template {tpl_w}x{tpl_h} larger than frame {frame_w}x{frame_h}"
        )
    return Rect(xlo, ylo, xhi - xlo + 1, yhi - ylo + 1)


def zmncc(img: GrayImage, tpl: GrayImage, u: int, v: int) -> float:
    """Correlation score of ``tpl`` centered at ``(u, v)`` in ``img``.

    Sums are accumulated as exact integers, so constant regions are detected
    exactly and the score is reproducible to the last bit.
    """
    th, tw = tpl.pixels.shape
    x0 = template_origin(u, tw)
    y0 = template_origin(v, th)
    if x0 < 0 or y0 < 0 or x0 + tw > img.width or y0 + th > img.height:
        raise BoundsError(
            f"template {tw}x{th} at center ({u}, {v}) outside image "
            f"{img.width}x{img.height}"
        )
    f = img.pixels[y0 : y0 + th, x0 : x0 + tw].astype(np.int64)
    t = tpl.pixels.astype(np.int64)
    n = tw * th
    sf = int(f.sum())
    st = int(t.sum())
    var_f = n * int((f * f).sum()) - sf * sf
    var_t = n * int((t * t).sum()) - st * st
    if var_f == 0 or var_t == 0:
        return 0.0
    num = n * int((f * t).sum()) - sf * st
    c = num / math.sqrt(float(var_f) * float(var_t))
    return min(1.0, max(-1.0, c))


def score_arrays(region: np.ndarray, template: np.ndarray) -> float:
    """ZMNCC of two equal-shaped float arrays, without 8-bit quantization."""
    f = np.asarray(region, dtype=np.float64)
    t = np.asarray(template, dtype=np.float64)
    if f.shape != t.shape:
        raise ValueError(f"shape mismatch {f.shape} vs {t.shape}")
    df = f - f.mean()
    dt = t - t.mean()
    den = math.sqrt(float((df * df).sum()) * float((dt * dt).sum()))
    if den == 0.0:
        return 0.0
    c = float((df * dt).sum()) / den
    return min(1.0, max(-1.0, c))


def _clamp_window(window: Rect, tpl_w: int, tpl_h: int, frame_w: int, frame_h: int):
    xlo, xhi = center_bounds(tpl_w, frame_w)
    ylo, yhi = center_bounds(tpl_h, frame_h)
    u0 = max(window.x, xlo)
    u1 = min(window.x + window.w - 1, xhi)
    v0 = max(window.y, ylo)
    v1 = min(window.y + window.h - 1, yhi)
    return u0, u1, v0, v1


def scan(
    img: GrayImage,
    bank: TemplateBank,
    window: Rect,
    threshold: float = DEFAULT_THRESHOLD,
) -> list[MatchPoint]:
    """Score every center position in ``window`` against the whole bank.

    The score at a position is the maximum over bank entries; positions at or
    above ``threshold`` become match points tagged with the maximizing entry's
    angle (ties resolved to the lowest angle). Results are in row-major
    position order. The window is clamped so the template always fits; an
    empty effective window yields an empty list.
    """
    tw, th = bank.base_width, bank.base_height
    u0, u1, v0, v1 = _clamp_window(window, tw, th, img.width, img.height)
    if u0 > u1 or v0 > v1:
        return []
    nu = u1 - u0 + 1
    nv = v1 - v0 + 1
    n = tw * th

    # All sums below are integer-valued and stay far under 2**53, so float64
    # accumulation is exact: zero-variance regions test as exactly 0.0.
    t_flat = np.stack([e.patch.pixels for e in bank.entries]).reshape(len(bank), n).astype(np.float64)
    st = t_flat.sum(axis=1)
    var_t = n * np.einsum("ij,ij->i", t_flat, t_flat) - st * st
    t_centered = t_flat - (st / n)[:, None]
    angles = np.array(bank.angles)

    ox = template_origin(u0, tw)
    oy = template_origin(v0, th)
    sub = img.pixels[oy : oy + nv + th - 1, ox : ox + nu + tw - 1]
    windows = sliding_window_view(sub, (th, tw))

    points: list[MatchPoint] = []
    rows_per_chunk = max(1, _CHUNK_ELEMS // (nu * n))
    for r0 in range(0, nv, rows_per_chunk):
        r1 = min(r0 + rows_per_chunk, nv)
        block = windows[r0:r1].reshape((r1 - r0) * nu, n).astype(np.float64)
        sf = block.sum(axis=1)
        var_f = n * np.einsum("ij,ij->i", block, block) - sf * sf
        # num = sum(f * (t - mean_t)) == sum(f*t) - mean_t * sum(f)
        num = block @ t_centered.T
        den = np.sqrt(var_f[:, None] * var_t[None, :])
        degenerate = (var_f[:, None] == 0.0) | (var_t[None, :] == 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            scores = np.where(degenerate, 0.0, num * n / den)
        np.clip(scores, -1.0, 1.0, out=scores)
        best = scores.max(axis=1)
        best_idx = scores.argmax(axis=1)  # first max wins: lowest angle
        for flat in np.flatnonzero(best >= threshold):
            points.append(
                MatchPoint(
                    u=u0 + int(flat % nu),
                    v=v0 + r0 + int(flat // nu),
                    score=float(best[flat]),
                    angle_deg=float(angles[best_idx[flat]]),
                )
            )
    return points


def detect(points: list[MatchPoint], threshold: float = DEFAULT_THRESHOLD) -> Detection | None:
    """Centroid of all match points; best score/angle from the top point.

    Returns None on an empty list. Ties on score keep the earliest point in
    scan order, so output is deterministic.
    """
    if not points:
        return None
    best = max(points, key=lambda p: p.score)
    return Detection(
        x=sum(p.u for p in points) / len(points),
        y=sum(p.v for p in points) / len(points),
        best_score=best.score,
        best_angle_deg=best.angle_deg,
        support=len(points),
    )
