"""Generate the training samples of a shape with the pheromone-guided random walk."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.append(str(REPO_ROOT / "sirl-swarm"))

from sirl_swarm.common import stream_rng  # noqa: E402
from sirl_swarm.environment.medium import MediumConfig  # noqa: E402
from sirl_swarm.harness import load_shape  # noqa: E402
from sirl_swarm.trainer import SampleConfig, generate_samples  # noqa: E402


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--shape", default="digit4", help="Shape file or bundled shape name")
    parser.add_argument("--count", type=int, default=7500)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--bias", type=float, default=2.0)
    parser.add_argument("--output", type=Path, default=REPO_ROOT / "output" / "samples.npz")
    args = parser.parse_args()

    shape = load_shape(args.shape)
    samples = generate_samples(
        shape,
        args.count,
        stream_rng(args.seed, "samples"),
        MediumConfig(),
        sample_cfg=SampleConfig(count=args.count, bias=args.bias),
    )
    samples.save(args.output)
    si = [samples.world(i).similarity() for i in range(len(samples))]
    print(f"Saved {len(samples)} samples of {shape} to {args.output}")
    print(f"Sample SI: min {min(si):.3f}, mean {sum(si) / len(si):.3f}, max {max(si):.3f}")


if __name__ == "__main__":
    main()
