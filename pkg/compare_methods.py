import argparse
import copy
import json
from dataclasses import replace
from pathlib import Path
from typing import List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from pipeline_utils import (  # noqa: E402
    add_package_path,
    ensure_dir,
    print_env_info,
    save_json,
    seed_everything,
    summarize_values,
)

add_package_path()

import sirl_swarm.common as c  # noqa: E402
import sirl_swarm.settings as s  # noqa: E402
from sirl_swarm.baselines import get_profile  # noqa: E402
from sirl_swarm.harness import ExperimentConfig, command_train, load_shape, run_test  # noqa: E402
from sirl_swarm.models.agent import AgentBrain  # noqa: E402

LEARNERS = [s.SIRL, s.SIRL_A, s.SIRL_WS, s.JL, s.IRL, s.JL_O, s.IRL_O]


def run_one(config: dict, method: str, seed: int, out_dir: Path, test_shape: str, skip_train: bool) -> dict:
    cfg = copy.deepcopy(config)
    experiment = cfg.setdefault("experiment", {})
    experiment.update({"method": method, "seed": seed, "out_dir": str(out_dir)})
    exp = ExperimentConfig.from_config(cfg)

    brain = None
    if get_profile(method).learner:
        final = exp.output("FINAL_CHECKPOINT")
        if not (skip_train and final.exists()):
            command_train(exp)
        brain = AgentBrain.load(final)

    shape = load_shape(test_shape or exp.shape, exp.threshold, exp.shape_index)
    trainer_cfg = replace(exp.trainer, seed=seed)
    result = run_test(method, shape, trainer_cfg, exp.iterations, brain, seed, cs_k=exp.cs_k)
    return {
        "method": method,
        "seed": seed,
        "agents": shape.num_agents,
        "final_si": result.final_si,
        "total_steps": result.total_steps,
    }


def load_test_curves(results: Path, methods: List[str]) -> pd.DataFrame:
    frames = []
    for method in methods:
        for path in sorted((results / method).glob("seed*/" + s.OUTPUT_FILES["TEST_METRICS"])):
            df = pd.read_csv(path)
            df["seed"] = path.parent.name
            frames.append(df)
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()


def report(df: pd.DataFrame, curves: pd.DataFrame, results: Path) -> None:
    summary = (
        df.groupby("method")
        .agg(
            median_si=("final_si", "median"),
            mean_si=("final_si", "mean"),
            median_steps=("total_steps", "median"),
            mean_steps=("total_steps", "mean"),
            runs=("seed", "count"),
        )
        .sort_values("median_si", ascending=False)
    )
    summary.to_csv(results / "summary.csv")

    with open(results / "COMPARE.md", "w") as f:
        f.write("# Comparison\n\n")
        f.write("|method|median SI|mean SI|median steps|mean steps|runs|\n")
        f.write("|---|---:|---:|---:|---:|---:|\n")
        for method, row in summary.iterrows():
            f.write(
                f"|{method}|{row.median_si:.3f}|{row.mean_si:.3f}|"
                f"{row.median_steps:.0f}|{row.mean_steps:.0f}|{int(row.runs)}|\n"
            )
        f.write("\n![final SI](final_si.png)\n")
        if not curves.empty:
            f.write("\n![test SI during training](training_si.png)\n")

    plt.figure()
    plt.bar(summary.index, summary["median_si"])
    plt.ylim(0.0, 1.0)
    plt.ylabel("median final SI")
    plt.xticks(rotation=45)
    plt.title("Final similarity per method")
    plt.tight_layout()
    plt.savefig(results / "final_si.png")
    plt.close()

    if not curves.empty:
        plt.figure()
        for method, group in curves.groupby("method"):
            median = group.groupby("round")["final_si"].median()
            plt.plot(median.index, median.values, label=method)
        plt.legend()
        plt.xlabel("training round")
        plt.ylabel("median test SI")
        plt.title("Periodic tests during training")
        plt.savefig(results / "training_si.png")
        plt.close()


def main() -> None:
    parser = argparse.ArgumentParser(description="Compare methods over several seeds")
    parser.add_argument("--config", default="configs/desk.json")
    parser.add_argument("--methods", nargs="+", default=s.SUPPORTED_METHODS, choices=s.SUPPORTED_METHODS)
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--results", default="results/compare")
    parser.add_argument("--test-shape", default=None, help="Test on another shape than the training one")
    parser.add_argument("--skip-train", action="store_true", help="Reuse existing final checkpoints")
    args = parser.parse_args()

    seed_everything()
    print_env_info()
    config = c.read_config(args.config)
    results = Path(args.results)
    ensure_dir(results)

    rows = []
    for method in args.methods:
        for seed in range(args.seeds):
            out_dir = results / method / f"seed{seed}"
            ensure_dir(out_dir)
            row = run_one(config, method, seed, out_dir, args.test_shape, args.skip_train)
            print(f"{method} seed {seed}: SI {row['final_si']:.3f}, {row['total_steps']} moves")
            rows.append(row)

    df = pd.DataFrame(rows)
    df.to_csv(results / "runs.csv", index=False)
    save_json(results / "config.json", config)
    report(df, load_test_curves(results, [m for m in args.methods if m in LEARNERS]), results)
    summaries = {m: summarize_values(g["final_si"].tolist()) for m, g in df.groupby("method")}
    print(json.dumps(summaries, indent=2))


if __name__ == "__main__":
    main()
