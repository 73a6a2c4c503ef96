"""Train, test or generate samples for a swarm shape-formation method."""

from __future__ import annotations

import sys

from pipeline_utils import add_package_path, print_env_info, seed_everything

add_package_path()

from sirl_swarm.harness import main  # noqa: E402


if __name__ == "__main__":
    if "--env" in sys.argv:
        sys.argv.remove("--env")
        print_env_info()
    seed_everything()
    sys.exit(main())
