"""Binarize one MNIST image into a plain-text bitmap usable as a target shape."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.append(str(REPO_ROOT / "sirl-swarm"))

from sirl_swarm.harness import DEFAULT_THRESHOLD, read_idx_images  # noqa: E402


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("images", type=Path, help="IDX image file (e.g. t10k-images-idx3-ubyte.gz)")
    parser.add_argument("--index", type=int, required=True, help="Image index")
    parser.add_argument("--threshold", type=int, default=DEFAULT_THRESHOLD)
    parser.add_argument("--output", type=Path, required=True)
    args = parser.parse_args()

    images = read_idx_images(args.images)
    if not 0 <= args.index < len(images):
        raise IndexError(f"Image {args.index} is outside the {len(images)} images of {args.images}")
    labeled = images[args.index] >= args.threshold
    if not labeled.any():
        raise ValueError(f"Image {args.index} has no pixel above {args.threshold}")

    args.output.parent.mkdir(parents=True, exist_ok=True)
    rows = ["".join("1" if v else "0" for v in row) for row in labeled]
    args.output.write_text("\n".join(rows) + "\n", encoding="ascii")
    print(f"Saved {args.output}: {labeled.shape[1]}x{labeled.shape[0]}, {int(np.sum(labeled))} agents")


if __name__ == "__main__":
    main()
