"""Command-line front end: track, sim, bank, bench, serve, roi.

Exit codes: 0 success, 1 usage or configuration error, 2 I/O error,
3 initialization never acquired a target. All randomness flows from the
configured seeds; logged values never depend on wall-clock time.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import groundlink, matcher, scenesim
from .ekf import NoiseConfig
from .errors import ConfigError, ProtocolError, ScenarioError, UastrackError
from .gimbal import GimbalState, command
from .imagebuf import GrayImage, Rect, crop, load_pgm, save_pgm
from .tracker import (
    STATUS_MISS,
    STATUS_REDETECTING,
    STATUS_TRACKING,
    OpticsConfig,
    TrackerConfig,
    TrackerSession,
    TrackOutcome,
    write_log,
)
from .warp import build_bank

CONFIG_DEFAULTS = {
    "threshold": 0.9,
    "sigma": 0.4,
    "r_pos": 1.0,
    "kappa": 3.0,
    "miss_limit": 5,
    "bank_count": 36,
    "bank_step_deg": 10.0,
    "hfov_deg": 30.0,
    "frame_w": 320,
    "frame_h": 240,
    "p0_vel_var": 25.0,
    "sample_every": 4,
}


class UsageError(UastrackError):
    """Bad command line; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would sys.exit(2)
        raise UsageError(f"{message}\n{self.format_usage()}")


@dataclass(frozen=True)
class RunReport:
    frames_processed: int
    tracked_count: int
    miss_count: int
    redetect_count: int
    mean_abs_pixel_error: Optional[float]
    ms_per_frame: float

    def summary(self) -> str:
        err = (
            f"{self.mean_abs_pixel_error:.2f}px"
            if self.mean_abs_pixel_error is not None
            else "n/a"
        )
        return (
            f"frames={self.frames_processed} tracked={self.tracked_count} "
            f"miss={self.miss_count} redetect={self.redetect_count} "
            f"mean_abs_err={err} ms_per_frame={self.ms_per_frame:.2f}"
        )


def load_config(path: Optional[str]) -> dict:
    """Merge a JSON config over the defaults; unknown keys are rejected."""
    merged = dict(CONFIG_DEFAULTS)
    if path is None:
        return merged
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {path}: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path}: top level must be a JSON object")
    unknown = sorted(set(data) - set(CONFIG_DEFAULTS))
    if unknown:
        raise ConfigError(f"config {path}: unknown keys {unknown}")
    for key, value in data.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"config {path}: {key} must be a number")
    merged.update(data)
    return merged


def tracker_config(cfg: dict, optics: Optional[OpticsConfig] = None) -> TrackerConfig:
    if optics is None:
        optics = OpticsConfig(
            hfov=math.radians(cfg["hfov_deg"]),
            frame_w=int(cfg["frame_w"]),
            frame_h=int(cfg["frame_h"]),
        )
    return TrackerConfig(
        threshold=float(cfg["threshold"]),
        noise=NoiseConfig(
            sigma=float(cfg["sigma"]),
            r_pos=float(cfg["r_pos"]),
            kappa=float(cfg["kappa"]),
        ),
        miss_limit=int(cfg["miss_limit"]),
        bank_count=int(cfg["bank_count"]),
        bank_step_deg=float(cfg["bank_step_deg"]),
        optics=optics,
        p0_vel_var=float(cfg["p0_vel_var"]),
    )


def _read_pgm_file(path: str) -> GrayImage:
    return load_pgm(Path(path).read_bytes())


def _frame_paths(frames_arg: str) -> list[Path]:
    p = Path(frames_arg)
    if p.is_dir():
        paths = sorted(p.glob("*.pgm"))
    elif p.suffix == ".list":
        paths = [Path(line.strip()) for line in p.read_text().splitlines() if line.strip()]
    else:
        raise UsageError(f"--frames expects a directory of PGMs or a .list file, got {frames_arg}")
    if not paths:
        raise UsageError(f"no frames found under {frames_arg}")
    return paths


def _report(outcomes: list[TrackOutcome], errors: list[float], elapsed_s: float) -> RunReport:
    tracked = sum(1 for o in outcomes if o.status == STATUS_TRACKING)
    missed = sum(1 for o in outcomes if o.status == STATUS_MISS)
    redetect = sum(1 for o in outcomes if o.status == STATUS_REDETECTING)
    mean_err = sum(errors) / len(errors) if errors else None
    n = max(len(outcomes), 1)
    return RunReport(len(outcomes), tracked, missed, redetect, mean_err, 1000.0 * elapsed_s / n)


def _print_frame(out: TrackOutcome, quiet: bool) -> None:
    if quiet:
        return
    if out.detection is not None:
        print(
            f"frame {out.frame_index:4d} {out.status:12s} "
            f"({out.detection.x:7.2f},{out.detection.y:7.2f}) "
            f"score={out.detection.best_score:.3f} angle={out.detection.best_angle_deg:g}"
        )
    else:
        print(f"frame {out.frame_index:4d} {out.status:12s} window={out.window}")


def cmd_track(args) -> int:
    cfg_map = load_config(args.config)
    cfg = tracker_config(cfg_map)
    template = _read_pgm_file(args.template)
    session = TrackerSession(build_bank(template, cfg.bank_count, cfg.bank_step_deg), cfg)
    outcomes = []
    t0 = time.perf_counter()
    for path in _frame_paths(args.frames):
        frame = _read_pgm_file(str(path))
        out = session.process(frame, args.dt)
        outcomes.append(out)
        _print_frame(out, args.quiet)
    elapsed = time.perf_counter() - t0
    if args.log:
        write_log(outcomes, args.log)
    report = _report(outcomes, [], elapsed)
    print(report.summary())
    if all(o.state is None for o in outcomes):
        return 3
    return 0


@dataclass(frozen=True)
class SimResult:
    outcomes: list[TrackOutcome]
    truths: list[tuple[float, float, float]]      # per scenario frame
    outcome_frames: list[int]                     # scenario frame per outcome
    elapsed_s: float


def run_sim(
    scenario: scenesim.Scenario,
    cfg: TrackerConfig,
    dt: float = 1.0,
    dump_dir: Optional[str] = None,
    quiet: bool = True,
    link: Optional["_LinkRuntime"] = None,
) -> SimResult:
    """Closed-loop run: render, track, and actuate the simulated gimbal."""
    if link is not None and link.await_roi:
        session = TrackerSession(None, cfg)  # template arrives over the link
    else:
        bank = build_bank(scenesim.target_patch(scenario), cfg.bank_count, cfg.bank_step_deg)
        session = TrackerSession(bank, cfg)
    gimbal = GimbalState()
    outcomes: list[TrackOutcome] = []
    outcome_frames: list[int] = []
    truths: list[tuple[float, float, float]] = []
    dump = Path(dump_dir) if dump_dir else None
    if dump:
        dump.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    for k in range(scenario.frames):
        frame = scenesim.render(scenario, gimbal, k)
        truths.append(scenesim.ground_truth(scenario, gimbal, k))
        if dump:
            (dump / f"frame_{k:05d}.pgm").write_bytes(save_pgm(frame))
        if link is not None:
            link.on_frame(k, frame, session)
        if session.bank is None:
            continue
        out = session.process(frame, dt)
        outcomes.append(out)
        outcome_frames.append(k)
        _print_frame(out, quiet)
        if out.gimbal_cmd is not None:
            gimbal = command(gimbal, *out.gimbal_cmd)
    elapsed = time.perf_counter() - t0
    if dump:
        with open(dump / "ground_truth.csv", "w") as fh:
            fh.write("frame,x,y,angle_deg\n")
            for k, (gx, gy, ga) in enumerate(truths):
                fh.write(f"{k},{gx},{gy},{ga}\n")
    return SimResult(outcomes, truths, outcome_frames, elapsed)


def _tracking_errors(result: SimResult) -> list[float]:
    errors = []
    for o, k in zip(result.outcomes, result.outcome_frames):
        if o.detection is None:
            continue
        gx, gy, _ = result.truths[k]
        errors.append(math.hypot(o.detection.x - gx, o.detection.y - gy))
    return errors


def cmd_sim(args) -> int:
    cfg_map = load_config(args.config)
    scenario = scenesim.make_scenario(
        args.scenario,
        frame_w=int(cfg_map["frame_w"]),
        frame_h=int(cfg_map["frame_h"]),
        frames=args.frames,
        seed=args.seed,
    )
    optics = OpticsConfig(
        hfov=scenario.hfov,
        frame_w=scenario.frame_w,
        frame_h=scenario.frame_h,
        counts_per_radian=scenario.counts_per_radian,
    )
    cfg = tracker_config(cfg_map, optics=optics)
    result = run_sim(scenario, cfg, dt=args.dt, dump_dir=args.dump_frames, quiet=args.quiet)
    if args.log:
        write_log(result.outcomes, args.log)
    report = _report(result.outcomes, _tracking_errors(result), result.elapsed_s)
    print(report.summary())
    if all(o.state is None for o in result.outcomes):
        return 3
    return 0


def cmd_bank(args) -> int:
    template = _read_pgm_file(args.template)
    bank = build_bank(template, args.count, 360.0 / args.count)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k, entry in enumerate(bank.entries):
        name = f"bank_{k:02d}_{int(entry.angle_deg):03d}deg.pgm"
        (out / name).write_bytes(save_pgm(entry.patch))
    print(f"wrote {len(bank)} templates to {out}")
    return 0


@dataclass(frozen=True)
class BenchResult:
    full_ms: float
    windowed_ms: float
    speedup: float
    windowed_fps: float


def run_bench(
    width: int,
    height: int,
    template: GrayImage,
    window_px: int,
    reps: int,
    seed: int = 11,
) -> BenchResult:
    """Time full-frame vs windowed scans of a seeded frame with a planted target."""
    scenario = scenesim.Scenario(
        name="bench",
        frame_w=width,
        frame_h=height,
        patch_w=template.width,
        patch_h=template.height,
        trajectory=scenesim.LineTrajectory(0.0, 0.0, 0.0, 0.0),
        seed=seed,
        frames=1,
    )
    frame = scenesim.render(scenario, GimbalState(), 0)
    gx, gy, _ = scenesim.ground_truth(scenario, GimbalState(), 0)
    bank = build_bank(template, 36, 10.0)
    full = matcher.valid_center_rect(template.width, template.height, width, height)
    win = Rect(
        int(gx) - window_px // 2,
        int(gy) - window_px // 2,
        window_px,
        window_px,
    )
    reps = max(1, reps)

    t0 = time.perf_counter()
    for _ in range(reps):
        matcher.scan(frame, bank, full, matcher.DEFAULT_THRESHOLD)
    full_ms = 1000.0 * (time.perf_counter() - t0) / reps

    t0 = time.perf_counter()
    for _ in range(reps):
        matcher.scan(frame, bank, win, matcher.DEFAULT_THRESHOLD)
    windowed_ms = 1000.0 * (time.perf_counter() - t0) / reps

    return BenchResult(
        full_ms=full_ms,
        windowed_ms=windowed_ms,
        speedup=full_ms / windowed_ms if windowed_ms > 0 else float("inf"),
        windowed_fps=1000.0 / windowed_ms if windowed_ms > 0 else float("inf"),
    )


def cmd_bench(args) -> int:
    if args.template:
        template = _read_pgm_file(args.template)
    else:
        template = scenesim.default_target_patch(seed=11)
    r = run_bench(args.width, args.height, template, args.window, args.reps)
    print(
        f"full-frame {r.full_ms:.1f} ms/frame, windowed({args.window}px) "
        f"{r.windowed_ms:.2f} ms/frame, speedup {r.speedup:.1f}x, "
        f"windowed throughput {r.windowed_fps:.1f} fps"
    )
    return 0


class _LinkRuntime:
    """Ground-link side of a serve run: frames out, ROI/patch in."""

    def __init__(self, sock, sample_every: int, peer=None, await_roi: bool = False):
        self.sock = sock
        self.sample_every = max(1, sample_every)
        self.peer = peer
        self.await_roi = await_roi

    def on_frame(self, k: int, frame: GrayImage, session: TrackerSession) -> None:
        for msg, addr in groundlink.poll_messages(self.sock):
            self.peer = addr
            if isinstance(msg, groundlink.RoiSelect):
                full = groundlink.rescale_rect(msg.rect, self.sample_every)
                try:
                    session.apply_template(crop(frame, full))
                except UastrackError:
                    continue  # stale or out-of-frame ROI: ignore, keep tracking
            elif isinstance(msg, groundlink.PatchUpload):
                session.apply_template(msg.image)
        if self.peer is not None and k % self.sample_every == 0:
            small = groundlink.decimate(frame, self.sample_every)
            try:
                self.sock.sendto(groundlink.encode_frame_sample(k, small), self.peer)
            except (ProtocolError, OSError):
                pass  # oversize or transient send failure: drop this sample


def _parse_addr(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise UsageError(f"expected host:port, got {text!r}")
    return host, int(port)


def cmd_serve(args) -> int:
    cfg_map = load_config(args.config)
    scenario = scenesim.make_scenario(
        args.scenario,
        frame_w=int(cfg_map["frame_w"]),
        frame_h=int(cfg_map["frame_h"]),
        frames=args.frames,
        seed=args.seed,
    )
    optics = OpticsConfig(
        hfov=scenario.hfov,
        frame_w=scenario.frame_w,
        frame_h=scenario.frame_h,
        counts_per_radian=scenario.counts_per_radian,
    )
    cfg = tracker_config(cfg_map, optics=optics)
    sock = groundlink.open_socket(_parse_addr(args.listen))
    peer = _parse_addr(args.peer) if args.peer else None
    link = _LinkRuntime(
        sock, int(cfg_map["sample_every"]), peer=peer, await_roi=args.await_roi
    )
    print(f"serving scenario {scenario.name!r} on {args.listen}")
    try:
        result = run_sim(scenario, cfg, dt=args.dt, quiet=args.quiet, link=link)
    finally:
        sock.close()
    if args.log:
        write_log(result.outcomes, args.log)
    print(_report(result.outcomes, _tracking_errors(result), result.elapsed_s).summary())
    return 0


def cmd_roi(args) -> int:
    parts = args.rect.split(",")
    if len(parts) != 4:
        raise UsageError(f"--rect expects x,y,w,h, got {args.rect!r}")
    try:
        x, y, w, h = (int(p) for p in parts)
    except ValueError:
        raise UsageError(f"--rect expects integers, got {args.rect!r}") from None
    payload = groundlink.encode_roi_select(args.frame, Rect(x, y, w, h))
    sock = groundlink.open_socket()
    try:
        sock.sendto(payload, _parse_addr(args.send))
    finally:
        sock.close()
    print(f"sent roi {args.rect} for frame {args.frame} to {args.send}")
    return 0


def build_parser() -> _Parser:
    p = _Parser(prog="uastrack", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    t = sub.add_parser("track", help="offline tracking over a PGM frame sequence")
    t.add_argument("--frames", required=True, help="directory of PGMs or a .list file")
    t.add_argument("--template", required=True)
    t.add_argument("--config", default=None)
    t.add_argument("--log", default=None)
    t.add_argument("--dt", type=float, default=1.0)
    t.add_argument("--quiet", action="store_true")
    t.set_defaults(func=cmd_track)

    s = sub.add_parser("sim", help="closed-loop simulation")
    s.add_argument("--scenario", required=True, choices=scenesim.BUILTIN_NAMES)
    s.add_argument("--frames", type=int, default=300)
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--config", default=None)
    s.add_argument("--log", default=None)
    s.add_argument("--dump-frames", default=None)
    s.add_argument("--dt", type=float, default=1.0)
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_sim)

    b = sub.add_parser("bank", help="emit the rotated template bank as PGMs")
    b.add_argument("--template", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--count", type=int, default=36)
    b.set_defaults(func=cmd_bank)

    be = sub.add_parser("bench", help="full-frame vs windowed scan timing")
    be.add_argument("--width", type=int, default=640)
    be.add_argument("--height", type=int, default=480)
    be.add_argument("--template", default=None)
    be.add_argument("--window", type=int, default=48)
    be.add_argument("--reps", type=int, default=3)
    be.set_defaults(func=cmd_bench)

    sv = sub.add_parser("serve", help="run sim with the UDP ground link enabled")
    sv.add_argument("--listen", required=True, help="host:port to bind")
    sv.add_argument("--scenario", required=True, choices=scenesim.BUILTIN_NAMES)
    sv.add_argument("--frames", type=int, default=300)
    sv.add_argument("--seed", type=int, default=7)
    sv.add_argument("--config", default=None)
    sv.add_argument("--log", default=None)
    sv.add_argument("--peer", default=None, help="host:port for frame samples")
    sv.add_argument("--await-roi", action="store_true", help="idle until an operator ROI/patch arrives")
    sv.add_argument("--dt", type=float, default=1.0)
    sv.add_argument("--quiet", action="store_true")
    sv.set_defaults(func=cmd_serve)

    r = sub.add_parser("roi", help="send an operator ROI datagram")
    r.add_argument("--send", required=True, help="host:port of the payload")
    r.add_argument("--frame", type=int, required=True)
    r.add_argument("--rect", required=True, help="x,y,w,h in decimated pixels")
    r.set_defaults(func=cmd_roi)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ConfigError, ScenarioError, ProtocolError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
