"""Tracking loop: acquire, detect, filter, actuate.

A session is initialized by a full-frame scan, then steps one frame at a
time: predict, size the search window from the predicted covariance, scan,
and either correct the filter (emitting a gimbal command) or record a miss.
After ``miss_limit`` consecutive misses the next scan covers the full frame
until the target is reacquired; reacquisition updates the existing filter.
Sessions are strictly sequential; call ``step`` once per frame.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import ekf, matcher
from .errors import ConfigError
from .imagebuf import GrayImage, Rect
from .matcher import Detection
from .util import round_half_away
from .warp import TemplateBank, build_bank

STATUS_INITIALIZED = "initialized"
STATUS_TRACKING = "tracking"
STATUS_MISS = "miss"
STATUS_REDETECTING = "redetecting"
STATUS_LOST = "lost"

LOG_COLUMNS = (
    "frame",
    "time_s",
    "status",
    "x",
    "y",
    "score",
    "angle_deg",
    "support",
    "win_x",
    "win_y",
    "win_w",
    "win_h",
    "pan_counts",
    "tilt_counts",
    "trace_P",
)


@dataclass(frozen=True)
class OpticsConfig:
    """Camera geometry used to turn pixel errors into encoder counts."""

    hfov: float = math.radians(30.0)  # horizontal field of view, radians
    frame_w: int = 320
    frame_h: int = 240
    counts_per_radian: float = 1e4    # 100 microradians per count

    def __post_init__(self) -> None:
        if not 0.0 < self.hfov < math.pi:
            raise ConfigError(f"hfov must be in (0, pi), got {self.hfov}")
        if self.frame_w < 1 or self.frame_h < 1:
            raise ConfigError("frame dimensions must be positive")
        if self.counts_per_radian <= 0.0:
            raise ConfigError("counts_per_radian must be positive")

    @property
    def angle_per_pixel(self) -> float:
        """Radians per pixel, same scale on both axes (square pixels)."""
        return self.hfov / self.frame_w


@dataclass(frozen=True)
class TrackerConfig:
    threshold: float = matcher.DEFAULT_THRESHOLD
    noise: ekf.NoiseConfig = field(default_factory=ekf.NoiseConfig)
    miss_limit: int = 5
    bank_count: int = 36
    bank_step_deg: float = 10.0
    optics: OpticsConfig = field(default_factory=OpticsConfig)
    p0_vel_var: float = 25.0
    log_path: Optional[str] = None

    def __post_init__(self) -> None:
        if not 0.0 < self.threshold <= 1.0:
            raise ConfigError(f"threshold must be in (0, 1], got {self.threshold}")
        if self.miss_limit < 1:
            raise ConfigError(f"miss_limit must be >= 1, got {self.miss_limit}")
        if self.p0_vel_var <= 0.0:
            raise ConfigError("p0_vel_var must be positive")


@dataclass(frozen=True)
class TrackOutcome:
    """Observable record of one processed frame."""

    frame_index: int
    time_s: float
    status: str
    detection: Optional[Detection]
    window: Rect
    state: Optional[ekf.TrackState]
    gimbal_cmd: Optional[tuple[int, int]]


def gimbal_offset(d: Detection, optics: OpticsConfig) -> tuple[int, int]:
    """Pan/tilt counts moving the view so the detection recenters.

    Positive pan moves the view toward +x, positive tilt toward +y. Counts
    round half away from zero, so the command is odd in the pixel error.
    """
    ex = d.x - (optics.frame_w - 1) / 2.0
    ey = d.y - (optics.frame_h - 1) / 2.0
    scale = optics.angle_per_pixel * optics.counts_per_radian
    return round_half_away(ex * scale), round_half_away(ey * scale)


class TrackerSession:
    """Single-target tracking over one bank; one frame at a time.

    ``bank`` may start as None when the template is expected from the ground
    link; acquisition begins once ``apply_template`` installs one.
    """

    def __init__(self, bank: Optional[TemplateBank], cfg: TrackerConfig):
        self.bank = bank
        self.cfg = cfg
        self.state: Optional[ekf.TrackState] = None
        self.frame_index = -1
        self.clock = 0.0

    def _full_window(self, frame: GrayImage) -> Rect:
        try:
            return matcher.valid_center_rect(
                self.bank.base_width, self.bank.base_height, frame.width, frame.height
            )
        except Exception as e:
            raise ConfigError(str(e)) from None

    def initialize(self, frame: GrayImage) -> TrackOutcome:
        """Full-frame search for the target; may be retried on later frames."""
        if self.bank is None:
            raise RuntimeError("no template installed; call apply_template first")
        self.frame_index += 1
        window = self._full_window(frame)
        det = matcher.detect(
            matcher.scan(frame, self.bank, window, self.cfg.threshold),
            self.cfg.threshold,
        )
        if det is None:
            self.state = None
            return TrackOutcome(
                self.frame_index, self.clock, STATUS_LOST, None, window, None, None
            )
        self.state = ekf.initial_state(det.x, det.y, self.cfg.noise, self.cfg.p0_vel_var)
        cmd = gimbal_offset(det, self.cfg.optics)
        return TrackOutcome(
            self.frame_index, self.clock, STATUS_INITIALIZED, det, window, self.state, cmd
        )

    def step(self, frame: GrayImage, dt: float = 1.0) -> TrackOutcome:
        """Predict, search, and correct (or record a miss) for one frame."""
        if self.state is None:
            raise RuntimeError("step called before a successful initialize")
        self.frame_index += 1
        self.clock += dt
        pred = ekf.predict(self.state, dt, self.cfg.noise)
        if pred.misses >= self.cfg.miss_limit:
            window = self._full_window(frame)
        else:
            window = ekf.search_window(
                pred,
                self.bank.base_width,
                self.bank.base_height,
                frame.width,
                frame.height,
                self.cfg.noise,
            )
        det = matcher.detect(
            matcher.scan(frame, self.bank, window, self.cfg.threshold),
            self.cfg.threshold,
        )
        if det is not None:
            self.state = ekf.update(pred, (det.x, det.y), self.cfg.noise)
            cmd = gimbal_offset(det, self.cfg.optics)
            status = STATUS_TRACKING
        else:
            self.state = ekf.mark_miss(pred)
            cmd = None
            status = (
                STATUS_REDETECTING
                if self.state.misses >= self.cfg.miss_limit
                else STATUS_MISS
            )
        return TrackOutcome(
            self.frame_index, self.clock, status, det, window, self.state, cmd
        )

    def process(self, frame: GrayImage, dt: float = 1.0) -> TrackOutcome:
        """Initialize if not yet acquired, otherwise step."""
        if self.state is None:
            if self.frame_index >= 0:
                self.clock += dt
            return self.initialize(frame)
        return self.step(frame, dt)

    def apply_template(self, patch: GrayImage) -> None:
        """Swap in a new target patch (operator upload); restarts acquisition."""
        self.bank = build_bank(patch, self.cfg.bank_count, self.cfg.bank_step_deg)
        self.state = None


@dataclass(frozen=True)
class LogRow:
    """One parsed track-log record; None marks an empty field."""

    frame: int
    time_s: float
    status: str
    x: Optional[float]
    y: Optional[float]
    score: Optional[float]
    angle_deg: Optional[float]
    support: Optional[int]
    win_x: int
    win_y: int
    win_w: int
    win_h: int
    pan_counts: Optional[int]
    tilt_counts: Optional[int]
    trace_P: Optional[float]


def outcome_to_row(o: TrackOutcome) -> LogRow:
    d = o.detection
    return LogRow(
        frame=o.frame_index,
        time_s=o.time_s,
        status=o.status,
        x=d.x if d else None,
        y=d.y if d else None,
        score=d.best_score if d else None,
        angle_deg=d.best_angle_deg if d else None,
        support=d.support if d else None,
        win_x=o.window.x,
        win_y=o.window.y,
        win_w=o.window.w,
        win_h=o.window.h,
        pan_counts=o.gimbal_cmd[0] if o.gimbal_cmd else None,
        tilt_counts=o.gimbal_cmd[1] if o.gimbal_cmd else None,
        trace_P=float(o.state.P.trace()) if o.state is not None else None,
    )


def _cell(value) -> str:
    return "" if value is None else str(value)


def write_log(outcomes: Iterable[TrackOutcome], path: str) -> None:
    """Append-style CSV log, one row per frame; header always present.

    Floats are written with full repr so re-parsing reproduces them exactly.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        for o in outcomes:
            r = outcome_to_row(o)
            w.writerow([_cell(getattr(r, col)) for col in LOG_COLUMNS])


def read_log(path: str) -> list[LogRow]:
    """Parse a track log back into rows; exact for every written value."""
    rows: list[LogRow] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != LOG_COLUMNS:
            raise ValueError(f"unexpected log columns: {reader.fieldnames}")
        for rec in reader:
            def opt(key: str, conv):
                return conv(rec[key]) if rec[key] != "" else None

            rows.append(
                LogRow(
                    frame=int(rec["frame"]),
                    time_s=float(rec["time_s"]),
                    status=rec["status"],
                    x=opt("x", float),
                    y=opt("y", float),
                    score=opt("score", float),
                    angle_deg=opt("angle_deg", float),
                    support=opt("support", int),
                    win_x=int(rec["win_x"]),
                    win_y=int(rec["win_y"]),
                    win_w=int(rec["win_w"]),
                    win_h=int(rec["win_h"]),
                    pan_counts=opt("pan_counts", int),
                    tilt_counts=opt("tilt_counts", int),
                    trace_P=opt("trace_P", float),
                )
            )
    return rows
