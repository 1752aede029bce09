#!/usr/bin/env python3
"""Run one scripted collection episode and narrate what happens.

    python scripts/demo_episode.py --seed 3
"""

import argparse

from litterbot.simulator import run_episode, sample_scene, SceneConfig


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=3)
    parser.add_argument("--scene", help="scene JSON; defaults to a generated one")
    parser.add_argument("--max-time", type=float, default=60.0)
    args = parser.parse_args()

    scene = SceneConfig.load(args.scene) if args.scene else sample_scene(args.seed)
    b = scene.bottles[0]
    print(f"bottle at {b.center.round(3).tolist()}, axis {b.axis.round(3).tolist()}, "
          f"radius {b.radius * 1000:.0f} mm")

    report = run_episode(scene, max_time=args.max_time)
    for e in report["events"]:
        detail = {k: v for k, v in e.items() if k not in ("t", "event")}
        print(f"  t={e['t']:7.2f}s  {e['event']:<6} {detail}")
    print(f"grasped: {report['grasp_outcomes']}, loads: {report['loads']}, "
          f"unload: {report['unload_done']}, bin peak: {report['bin_peak_deg']}")
    print(f"finished in {report['duration_s']:.2f} simulated seconds")


if __name__ == "__main__":
    main()
