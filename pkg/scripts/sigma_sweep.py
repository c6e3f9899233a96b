#!/usr/bin/env python3
"""Sweep the process-noise intensity and report its effect on the search window.

Shows the covariance-to-window coupling: larger sigma keeps a bigger window
(more robust to maneuvers, more correlation work per frame), smaller sigma
trusts the prediction and shrinks it.
"""

import argparse

from uastrack import scenesim
from uastrack.cli import run_sim
from uastrack.ekf import NoiseConfig
from uastrack.tracker import STATUS_TRACKING, OpticsConfig, TrackerConfig


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default="occlude", choices=scenesim.BUILTIN_NAMES)
    ap.add_argument("--frames", type=int, default=120)
    ap.add_argument("--sigmas", default="0.1,0.2,0.4,0.8,1.6")
    args = ap.parse_args()

    sigmas = [float(s) for s in args.sigmas.split(",")]
    sc = scenesim.make_scenario(args.scenario, frames=args.frames)
    optics = OpticsConfig(hfov=sc.hfov, frame_w=sc.frame_w, frame_h=sc.frame_h)

    print(f"{'sigma':>6s} {'tracked':>8s} {'mean win area':>14s} {'max win area':>13s} {'ms/frame':>9s}")
    for sigma in sigmas:
        cfg = TrackerConfig(noise=NoiseConfig(sigma=sigma), optics=optics)
        result = run_sim(sc, cfg)
        outcomes = result.outcomes
        tracked = sum(1 for o in outcomes if o.status == STATUS_TRACKING)
        areas = [o.window.area for o in outcomes[1:]]
        ms = 1000.0 * result.elapsed_s / len(outcomes)
        print(f"{sigma:6.2f} {tracked:8d} {sum(areas) / len(areas):14.0f} "
              f"{max(areas):13d} {ms:9.1f}")


if __name__ == "__main__":
    main()
