"""Constant-velocity Kalman filter driving the adaptive search window.

State is (x, y, vx, vy) in pixels and pixels per time unit. The transition
is the exact constant-velocity propagation, so predict/correct reduce to
the linear filter equations. Position-only measurements enter through
H = [[1,0,0,0],[0,1,0,0]] with isotropic noise. All algebra is fixed-size
4x4 / 4x2 / 2x2 with a closed-form 2x2 inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .imagebuf import Rect
from .matcher import center_bounds
from .util import round_half_away

_H = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])


@dataclass(frozen=True)
class NoiseConfig:
    """Filter noise intensities and the window sigma multiplier."""

    sigma: float = 0.4      # per-axis process noise, applied uniformly
    r_pos: float = 1.0      # measurement variance per position axis
    kappa: float = 3.0      # window half-extent in predicted sigmas

    def __post_init__(self) -> None:
        for name in ("sigma", "r_pos", "kappa"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class TrackState:
    """Filter state: position, velocity, covariance, consecutive miss count."""

    x: float
    y: float
    vx: float
    vy: float
    P: np.ndarray
    misses: int = 0

    def __post_init__(self) -> None:
        P = np.array(self.P, dtype=np.float64)
        if P.shape != (4, 4):
            raise ValueError(f"covariance must be 4x4, got {P.shape}")
        P.setflags(write=False)
        object.__setattr__(self, "P", P)
        if self.misses < 0:
            raise ValueError("miss count must be non-negative")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.vx, self.vy])


def initial_state(x: float, y: float, cfg: NoiseConfig, vel_var: float = 25.0) -> TrackState:
    """Fresh track at a detected position: zero velocity, generous velocity variance."""
    P = np.diag([cfg.r_pos, cfg.r_pos, vel_var, vel_var])
    return TrackState(x=x, y=y, vx=0.0, vy=0.0, P=P, misses=0)


def process_jacobian(dt: float) -> np.ndarray:
    """Constant-velocity transition: identity with dt coupling position to velocity."""
    if dt <= 0.0:
        raise ConfigError(f"dt must be positive, got {dt}")
    A = np.eye(4)
    A[0, 2] = dt
    A[1, 3] = dt
    return A


def process_noise(dt: float, cfg: NoiseConfig) -> np.ndarray:
    """Process covariance added per prediction.

    Diagonal position terms a_i = dt*sigma_i + dt^3*sigma_{i+2}/3, velocity
    terms dt*sigma_i, and position-velocity coupling b_i = dt^2*sigma_i/2
    at (0,2)/(2,0) and (1,3)/(3,1).
    """
    if dt <= 0.0:
        raise ConfigError(f"dt must be positive, got {dt}")
    s1 = s2 = s3 = s4 = cfg.sigma
    a1 = dt * s1 + (dt ** 3) * s3 / 3.0
    a2 = dt * s2 + (dt ** 3) * s4 / 3.0
    b3 = 0.5 * dt * dt * s3
    b4 = 0.5 * dt * dt * s4
    return np.array(
        [
            [a1, 0.0, b3, 0.0],
            [0.0, a2, 0.0, b4],
            [b3, 0.0, dt * s3, 0.0],
            [0.0, b4, 0.0, dt * s4],
        ]
    )


def _symmetrized(P: np.ndarray) -> np.ndarray:
    return (P + P.T) / 2.0


def predict(s: TrackState, dt: float, cfg: NoiseConfig) -> TrackState:
    """Propagate state and inflate covariance; misses unchanged."""
    A = process_jacobian(dt)
    xv = A @ s.vector
    P = _symmetrized(A @ s.P @ A.T + process_noise(dt, cfg))
    return TrackState(x=xv[0], y=xv[1], vx=xv[2], vy=xv[3], P=P, misses=s.misses)


def update(s: TrackState, z: tuple[float, float], cfg: NoiseConfig) -> TrackState:
    """Correct a predicted state with a measured position; resets misses."""
    P = s.P
    s00 = P[0, 0] + cfg.r_pos
    s01 = P[0, 1]
    s10 = P[1, 0]
    s11 = P[1, 1] + cfg.r_pos
    det = s00 * s11 - s01 * s10
    assert det > 0.0, "innovation covariance must be positive definite"
    s_inv = np.array([[s11, -s01], [-s10, s00]]) / det
    K = P[:, :2] @ s_inv
    innov = np.array([z[0] - s.x, z[1] - s.y])
    xv = s.vector + K @ innov
    P_new = _symmetrized((np.eye(4) - K @ _H) @ P)
    return TrackState(x=xv[0], y=xv[1], vx=xv[2], vy=xv[3], P=P_new, misses=0)


def mark_miss(s: TrackState) -> TrackState:
    """Record a frame with no accepted detection."""
    return replace(s, misses=s.misses + 1)


def search_window(
    s: TrackState,
    tpl_w: int,
    tpl_h: int,
    frame_w: int,
    frame_h: int,
    cfg: NoiseConfig,
) -> Rect:
    """Center-position window around the predicted position.

    Half-extents are kappa predicted position sigmas plus half the template,
    so the template core stays inside even at the window edge. The window is
    clamped to positions where the template fits; a degenerate or
    all-covering window collapses to the full valid area.
    """
    xlo, xhi = center_bounds(tpl_w, frame_w)
    ylo, yhi = center_bounds(tpl_h, frame_h)
    if xhi < xlo or yhi < ylo:
        raise ConfigError(
            f"template {tpl_w}x{tpl_h} larger than frame {frame_w}x{frame_h}"
        )
    full = Rect(xlo, ylo, xhi - xlo + 1, yhi - ylo + 1)

    sx = math.sqrt(max(s.P[0, 0], 0.0))
    sy = math.sqrt(max(s.P[1, 1], 0.0))
    if not (math.isfinite(sx) and math.isfinite(sy) and math.isfinite(s.x) and math.isfinite(s.y)):
        return full
    half_x = math.ceil(cfg.kappa * sx) + (tpl_w + 1) // 2
    half_y = math.ceil(cfg.kappa * sy) + (tpl_h + 1) // 2
    cx = round_half_away(s.x)
    cy = round_half_away(s.y)

    u0 = max(cx - half_x, xlo)
    u1 = min(cx + half_x, xhi)
    v0 = max(cy - half_y, ylo)
    v1 = min(cy + half_y, yhi)
    if u0 > u1 or v0 > v1:
        return full
    win = Rect(u0, v0, u1 - u0 + 1, v1 - v0 + 1)
    if win == full:
        return full
    return win
