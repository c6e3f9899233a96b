#!/usr/bin/env python3
"""Run every builtin scenario closed-loop and print a summary table."""

import argparse
import math

from uastrack import scenesim
from uastrack.cli import run_sim, tracker_config, load_config, _tracking_errors
from uastrack.tracker import STATUS_MISS, STATUS_REDETECTING, STATUS_TRACKING, OpticsConfig


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--frames", type=int, default=150)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    print(f"{'scenario':20s} {'tracked':>8s} {'miss':>5s} {'redet':>6s} "
          f"{'track err':>10s} {'center err':>11s} {'ms/frame':>9s}")
    for name in scenesim.BUILTIN_NAMES:
        sc = scenesim.make_scenario(name, frames=args.frames, seed=args.seed)
        optics = OpticsConfig(hfov=sc.hfov, frame_w=sc.frame_w, frame_h=sc.frame_h)
        cfg = tracker_config(load_config(None), optics=optics)
        result = run_sim(sc, cfg)
        outcomes = result.outcomes
        tracked = sum(1 for o in outcomes if o.status == STATUS_TRACKING)
        missed = sum(1 for o in outcomes if o.status == STATUS_MISS)
        redet = sum(1 for o in outcomes if o.status == STATUS_REDETECTING)
        errors = _tracking_errors(result)
        track_err = sum(errors) / len(errors) if errors else float("nan")
        cx, cy = (sc.frame_w - 1) / 2, (sc.frame_h - 1) / 2
        centering = [math.hypot(gx - cx, gy - cy) for gx, gy, _ in result.truths[30:]]
        center_err = sum(centering) / len(centering)
        ms = 1000.0 * result.elapsed_s / len(outcomes)
        print(f"{name:20s} {tracked:8d} {missed:5d} {redet:6d} "
              f"{track_err:9.2f}px {center_err:10.2f}px {ms:9.1f}")


if __name__ == "__main__":
    main()
