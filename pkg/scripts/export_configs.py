#!/usr/bin/env python3
"""Write the built-in nominal configuration files as editable JSON.

The in-code defaults are the source of truth; these files document the
formats and give a starting point for custom models/scenes/weights.
"""

import argparse
import json
from pathlib import Path

from litterbot.defaults import default_intrinsics, default_model
from litterbot.locomotion import default_reward_weights
from litterbot.mission import default_primitive_library
from litterbot.simulator import sample_scene


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="src/litterbot/configs", help="output directory")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    default_model().save(out / "nominal_model.json")
    default_primitive_library().save(out / "primitives.json")
    default_intrinsics().save(out / "intrinsics_160x120.json")
    default_intrinsics(320, 240).save(out / "intrinsics_320x240.json")
    sample_scene(0).save(out / "example_scene.json")
    with open(out / "reward_weights.json", "w", encoding="utf-8") as f:
        json.dump(default_reward_weights(), f, indent=2)
        f.write("\n")
    print(f"wrote 6 config files to {out}/")


if __name__ == "__main__":
    main()
