"""Plot the training metrics and the periodic test SI of an experiment directory."""

from __future__ import annotations

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("experiment", type=Path, help="Output directory of a training run")
    parser.add_argument("--window", type=int, default=50, help="Rolling mean window in rounds")
    args = parser.parse_args()

    train = pd.read_csv(args.experiment / "train_metrics.csv")
    fig, axes = plt.subplots(2, 1, figsize=(8, 8), sharex=True)
    for session, group in train.groupby("session"):
        group = group.set_index("round")
        axes[0].plot(group["si_end"].rolling(args.window, min_periods=1).mean(), label=f"{session} SI end")
        for loss in ["loss_eval", "loss_policy", "loss_value"]:
            values = group[loss].dropna()
            if not values.empty:
                axes[1].plot(values.rolling(args.window, min_periods=1).mean(), label=f"{session} {loss}")
    axes[0].set_ylabel("similarity")
    axes[0].legend()
    axes[1].set_ylabel("loss")
    axes[1].set_yscale("log")
    axes[1].set_xlabel("round")
    axes[1].legend()
    fig.tight_layout()
    fig.savefig(args.experiment / "training.png")
    plt.close(fig)

    test_path = args.experiment / "test_metrics.csv"
    if test_path.exists():
        test = pd.read_csv(test_path)
        plt.figure()
        plt.plot(test["round"], test["final_si"])
        plt.ylim(0.0, 1.0)
        plt.xlabel("round")
        plt.ylabel("test SI")
        plt.title("Periodic tests")
        plt.savefig(args.experiment / "test_si.png")
        plt.close()
    print(f"Plots saved in {args.experiment}")


if __name__ == "__main__":
    main()
