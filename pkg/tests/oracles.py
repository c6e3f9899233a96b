"""Independent brute-force reference implementations for the test suite.

Everything here is deliberately naive (scalar loops, textbook formulas) and
shares no code with the library paths it checks.
"""

from __future__ import annotations

import math


def region_mean_loops(pixels, x, y, w, h) -> float:
    total = 0.0
    for j in range(y, y + h):
        for i in range(x, x + w):
            total += float(pixels[j][i])
    return total / (w * h)


def zmncc_loops(img_pixels, tpl_pixels, u, v) -> float:
    """Textbook zero-mean normalized cross-correlation, template centered at (u, v)."""
    th = len(tpl_pixels)
    tw = len(tpl_pixels[0])
    x0 = u - (tw - 1) // 2
    y0 = v - (th - 1) // 2

    f_mean = region_mean_loops(img_pixels, x0, y0, tw, th)
    t_mean = region_mean_loops(tpl_pixels, 0, 0, tw, th)

    num = 0.0
    f_var = 0.0
    t_var = 0.0
    for j in range(th):
        for i in range(tw):
            df = float(img_pixels[y0 + j][x0 + i]) - f_mean
            dt = float(tpl_pixels[j][i]) - t_mean
            num += df * dt
            f_var += df * df
            t_var += dt * dt
    if f_var == 0.0 or t_var == 0.0:
        return 0.0
    c = num / math.sqrt(f_var * t_var)
    return min(1.0, max(-1.0, c))


def rotate_patch_loops(src_pixels, alpha) -> list[list[int]]:
    """Per-pixel inverse-map rotation about the patch center with bilinear sampling.

    Out-of-source positions take the source mean; results round to nearest.
    """
    h = len(src_pixels)
    w = len(src_pixels[0])
    cx = (w - 1) / 2.0
    cy = (h - 1) / 2.0
    mean = region_mean_loops(src_pixels, 0, 0, w, h)
    cos_a = math.cos(alpha)
    sin_a = math.sin(alpha)
    out = [[0] * w for _ in range(h)]
    for dy in range(h):
        for dx in range(w):
            rx = dx - cx
            ry = dy - cy
            sx = cx + cos_a * rx - sin_a * ry
            sy = cy + sin_a * rx + cos_a * ry
            if sx < 0.0 or sx > w - 1 or sy < 0.0 or sy > h - 1:
                val = mean
            else:
                x0 = min(int(math.floor(sx)), w - 2) if w > 1 else 0
                y0 = min(int(math.floor(sy)), h - 2) if h > 1 else 0
                x1 = min(x0 + 1, w - 1)
                y1 = min(y0 + 1, h - 1)
                fx = sx - x0
                fy = sy - y0
                top = src_pixels[y0][x0] * (1 - fx) + src_pixels[y0][x1] * fx
                bot = src_pixels[y1][x0] * (1 - fx) + src_pixels[y1][x1] * fx
                val = top * (1 - fy) + bot * fy
            out[dy][dx] = int(min(255.0, max(0.0, math.floor(val + 0.5))))
    return out


def kalman_1d_posterior(x_prior, p_prior, z, r) -> tuple[float, float]:
    """Scalar Kalman correction for cross-checking the decoupled position axes."""
    k = p_prior / (p_prior + r)
    return x_prior + k * (z - x_prior), (1 - k) * p_prior
