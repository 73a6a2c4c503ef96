import json
import platform
import random
import sys
from pathlib import Path
from typing import List

import numpy as np

try:
    import torch
except Exception:  # pragma: no cover - torch may not be installed when importing
    torch = None  # type: ignore


SEED = 42
REPO_ROOT = Path(__file__).resolve().parent
PACKAGE_DIR = REPO_ROOT / "sirl-swarm"


def add_package_path() -> None:
    """Make the sirl_swarm package importable from the root scripts."""
    if str(PACKAGE_DIR) not in sys.path:
        sys.path.append(str(PACKAGE_DIR))


def seed_everything(seed: int = SEED) -> None:
    """Seed Python, NumPy and Torch for reproducibility."""
    random.seed(seed)
    np.random.seed(seed)
    if torch is not None:
        torch.manual_seed(seed)


def print_env_info() -> None:
    """Print basic environment information."""
    python_version = platform.python_version()
    torch_version = torch.__version__ if torch is not None else "not installed"
    threads = torch.get_num_threads() if torch is not None else 0
    os_name = platform.platform()
    print(
        f"Python {python_version}\n"
        f"numpy {np.__version__}\n"
        f"torch {torch_version} ({threads} threads)\n"
        f"OS {os_name}"
    )


def ensure_dir(path: Path) -> None:
    path.mkdir(parents=True, exist_ok=True)


def save_json(path: Path, data) -> None:
    with open(path, "w") as f:
        json.dump(data, f, indent=2)


def summarize_values(values: List[float]) -> dict:
    arr = np.array(values, dtype=np.float64)
    return {
        "mean": float(np.mean(arr)),
        "median": float(np.median(arr)),
        "min": float(np.min(arr)),
        "max": float(np.max(arr)),
    }
