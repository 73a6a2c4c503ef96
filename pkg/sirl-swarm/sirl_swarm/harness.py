import argparse
import csv
import gzip
import json
import logging
import os
import struct
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import List, Optional

import numpy as np
import torch
from PIL import Image

import sirl_swarm.common as c
import sirl_swarm.settings as s
from sirl_swarm.baselines import OracleController, cs_step, dc_step, get_profile
from sirl_swarm.coordination import DISABLED, decide_winners
from sirl_swarm.environment.medium import PheromoneMap
from sirl_swarm.environment.world import TargetShape, WorldState, run_phase
from sirl_swarm.models.agent import GREEDY, AgentBrain, action_priority, select_action
from sirl_swarm.trainer import (
    METRIC_FIELDS,
    SampleConfig,
    SampleSet,
    Trainer,
    TrainerConfig,
    generate_samples,
    observe,
)

LOG_LEVEL = logging.INFO
# LOG_LEVEL = logging.DEBUG

logger = s.get_custom_logger("harness", LOG_LEVEL)

IDX_IMAGE_MAGIC = 0x00000803
DEFAULT_THRESHOLD = 128
SHAPES_DIR = Path(__file__).resolve().parent / "shapes"

TEST_METRIC_FIELDS = ["round", "method", "final_si", "total_steps", "iterations"]
CURVE_FIELDS = ["iteration", "si", "moves"]


###################################################################################
# Shapes
#


def resolve_shape_path(name):
    r"""
    Return the path of a shape file. Names without a file are looked up among the
    bundled shapes ("digit4" -> shapes/digit4.txt)
    """
    path = Path(name)
    if path.exists():
        return path
    bundled = SHAPES_DIR / "{}.txt".format(name)
    if bundled.exists():
        return bundled
    raise FileNotFoundError("Cannot find the shape file: {}".format(name))


def read_text_bitmap(path):
    rows = []
    with open(path, "r", encoding="ascii") as fd:
        for line_no, line in enumerate(fd, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if set(line) - {"0", "1"}:
                raise ValueError("{}:{}: a bitmap row holds only 0 and 1: '{}'".format(path, line_no, line))
            rows.append([int(ch) for ch in line])
    if not rows:
        raise ValueError("Empty bitmap: {}".format(path))
    if len({len(r) for r in rows}) != 1:
        raise ValueError("Bitmap rows of {} have different lengths".format(path))
    return np.array(rows, dtype=np.uint8) * 255


def read_idx_images(path):
    r"""
    Read an IDX image file (optionally gzipped) into a uint8 array [count, rows, cols]

    Format (big endian): magic 0x00000803, item count, row count, column count, then
    the pixels row-wise
    """
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rb") as fd:
        header = fd.read(16)
        if len(header) < 16:
            raise ValueError("Truncated IDX header in {}".format(path))
        magic, count, rows, cols = struct.unpack(">IIII", header)
        if magic != IDX_IMAGE_MAGIC:
            raise ValueError("Magic number mismatch in IDX image file {}: 0x{:08x}".format(path, magic))
        if count == 0 or rows == 0 or cols == 0:
            raise ValueError("Invalid IDX dimensions in {}: {}x{}x{}".format(path, count, rows, cols))
        data = fd.read()
    if len(data) != count * rows * cols:
        raise ValueError(
            "IDX file {} holds {} pixel bytes, {}x{}x{} expected".format(path, len(data), count, rows, cols)
        )
    return np.frombuffer(data, dtype=np.uint8).reshape(count, rows, cols)


def _is_text_bitmap(path):
    r"""
    Whether the file reads as a text bitmap whatever its suffix: ASCII rows of 0/1,
    blank lines and "#" comments
    """
    try:
        with open(path, "rb") as fd:
            text = fd.read().decode("ascii")
    except (OSError, UnicodeDecodeError):
        return False
    rows = [line.strip() for line in text.splitlines()]
    rows = [line for line in rows if line and not line.startswith("#")]
    return bool(rows) and all(not set(line) - {"0", "1"} for line in rows)


def _is_idx(path):
    opener = gzip.open if str(path).endswith(".gz") else open
    try:
        with opener(path, "rb") as fd:
            head = fd.read(4)
    except OSError:
        return False
    return len(head) == 4 and head[:3] == b"\x00\x00\x08"


def load_shape(path, threshold=DEFAULT_THRESHOLD, index=0) -> TargetShape:
    r"""
    Load a target shape

    Parameters
    ----------
    path : string
        Plain-text bitmap (rows of 0/1), MNIST IDX image file or 8-bit image
    threshold : int
        Pixels with an intensity >= threshold are labeled. Text bitmaps hold 0 or 255.
    index : int
        Image index inside an IDX file

    Returns
    -------
    TargetShape
    """
    path = resolve_shape_path(path)
    if path.suffix == ".txt":
        pixels = read_text_bitmap(path)
    elif _is_idx(path):
        images = read_idx_images(path)
        if not 0 <= index < len(images):
            raise IndexError("Image {} is outside the {} images of {}".format(index, len(images), path))
        pixels = images[index]
    elif _is_text_bitmap(path):
        pixels = read_text_bitmap(path)
    else:
        try:
            with Image.open(path) as image:
                pixels = np.asarray(image.convert("L"))
        except OSError as e:
            raise ValueError(
                "Unknown shape format for {} (not a 0/1 text bitmap, IDX file or image): {}".format(path, e)
            ) from e
    labeled = pixels >= threshold
    if not labeled.any():
        raise ValueError("The shape {} has no labeled cells at threshold {}".format(path, threshold))
    shape = TargetShape(labeled)
    logger.info("Loaded shape {}: {}".format(path, shape))
    return shape


###################################################################################
# Output
#


def export_frame(w: WorldState, pheromones: Optional[PheromoneMap], path):
    r"""
    Write the swarm frame as a P2 graymap, and the pheromone field next to it
    """
    path = Path(path)
    w.to_pgm(path)
    if pheromones is not None:
        pheromones.to_pgm(path.with_name(path.stem + "_pheromone.pgm"))
    return path


def write_metrics(rows: List[dict], path, fieldnames=None, overwrite=False):
    r"""
    Append rows to a CSV file, writing the header when the file is new. With
    `overwrite` the previous content is replaced.
    """
    path = Path(path)
    if not rows:
        return path
    fieldnames = fieldnames if fieldnames is not None else list(rows[0].keys())
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        new_file = overwrite or not path.exists() or path.stat().st_size == 0
        with path.open("w" if overwrite else "a", newline="") as fd:
            writer = csv.DictWriter(fd, fieldnames=fieldnames)
            if new_file:
                writer.writeheader()
            for row in rows:
                writer.writerow(row)
    except OSError as e:
        raise OSError("Cannot write metrics {}: {}".format(path, e)) from e
    return path


def reset_outputs(*paths):
    r"""
    Remove the streams of a previous run before a command appends to them
    """
    for path in paths:
        try:
            Path(path).unlink(missing_ok=True)
        except OSError as e:
            raise OSError("Cannot reset output {}: {}".format(path, e)) from e


def write_json(data, path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w") as fd:
            json.dump(data, fd, indent=2)
    except OSError as e:
        raise OSError("Cannot write {}: {}".format(path, e)) from e
    return path


###################################################################################
# Experiment configuration
#


@dataclass(frozen=True)
class ExperimentConfig:
    r"""
    Everything needed to run one experiment: the method, the shape, the module configs,
    the counts and the output directory
    """

    method: str
    shape: str
    seed: int
    out_dir: str = "output"
    threshold: int = DEFAULT_THRESHOLD
    shape_index: int = 0
    checkpoint: Optional[str] = None
    samples_path: Optional[str] = None
    iterations: int = 100
    frames_every: int = 0
    cs_k: Optional[int] = None
    threads: int = 1
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    samples: SampleConfig = field(default_factory=SampleConfig)

    def __post_init__(self):
        get_profile(self.method)
        if self.iterations < 0:
            raise ValueError("iterations cannot be negative: {}".format(self.iterations))
        if self.method == s.CS and (self.cs_k is None or self.cs_k < 1):
            raise ValueError("Method CS requires 'baselines.cs_k' >= 1")
        if self.checkpoint is not None and not os.path.exists(self.checkpoint):
            raise FileNotFoundError("Cannot find the checkpoint: {}".format(self.checkpoint))

    @property
    def profile(self):
        return get_profile(self.method)

    @classmethod
    def from_config(cls, config):
        r"""
        Build the experiment from a validated JSON config dictionary

        Raises
        ------
        ValueError
            On an inconsistent configuration
        """
        try:
            c.validate_config(config)
        except AssertionError as e:
            raise ValueError(str(e)) from e

        def get(section, key, default=None, required=False):
            return c.safe_get_parameter(config, [section, key], default, required)

        seed = get("experiment", "seed")
        if seed is None:
            raise ValueError("Config error: 'experiment.seed' is mandatory")
        trainer = TrainerConfig.from_config(config)
        return cls(
            method=get("experiment", "method", s.SIRL),
            shape=get("experiment", "shape", required=True),
            seed=int(seed),
            out_dir=get("experiment", "out_dir", "output"),
            threshold=int(get("experiment", "threshold", DEFAULT_THRESHOLD)),
            shape_index=int(get("experiment", "shape_index", 0)),
            checkpoint=get("experiment", "checkpoint"),
            samples_path=get("experiment", "samples"),
            iterations=int(get("test", "iterations", 100)),
            frames_every=int(get("test", "frames_every", 0)),
            cs_k=get("baselines", "cs_k"),
            threads=int(get("experiment", "threads", 1)),
            trainer=trainer,
            samples=SampleConfig.from_dict(config.get("samples")),
        )

    def output(self, part, round_index=None):
        return Path(self.out_dir) / c.get_output_filename(part, round_index)


###################################################################################
# Testing
#


@dataclass
class TestResult:
    r"""
    Outcome of one test run

    si_curve : similarity of the initial placement followed by one value per iteration
    total_steps : number of agent moves over the run
    """

    __test__ = False

    method: str
    final_si: float
    si_curve: List[float]
    total_steps: int
    moves: List[int]

    @property
    def iterations(self):
        return len(self.si_curve) - 1

    def curve_rows(self):
        rows = [{"iteration": 0, "si": self.si_curve[0], "moves": 0}]
        for k, (si, moves) in enumerate(zip(self.si_curve[1:], self.moves), start=1):
            rows.append({"iteration": k, "si": si, "moves": moves})
        return rows

    def to_dict(self):
        return asdict(self)


def _check_brain(brain: Optional[AgentBrain], profile):
    if brain is None:
        raise ValueError("Method {} needs a trained brain".format(profile.name))
    if brain.input_width != profile.input_width:
        raise ValueError(
            "Checkpoint topology mismatch: method {} needs inputs of width {}, the brain reads {}".format(
                profile.name, profile.input_width, brain.input_width
            )
        )


def run_test(
    method,
    shape: TargetShape,
    cfg: TrainerConfig,
    iterations,
    brain: Optional[AgentBrain] = None,
    seed=None,
    test_index=0,
    cs_k=None,
    frames_dir=None,
    frames_every=0,
) -> TestResult:
    r"""
    Test a method from a uniform random placement of the agents.

    At every iteration the agents select their attractors, the learners compute their
    priorities and exchange them in the coordination range, and the winners act greedily.
    The scripted methods run their own selection and motion. The pheromone field starts
    with the labeled area marked, is updated by the acting agents and decays at the
    occupied cells.

    Parameters
    ----------
    method : string
    shape : TargetShape
    cfg : TrainerConfig
        Module configs and seed
    iterations : int
    brain : AgentBrain
        Shared by all agents, required by the learning methods
    seed : int
        Defaults to cfg.seed, keys the placement and every later random stream
    test_index : int
        Distinguishes the random placements of repeated tests
    cs_k : int
        Agents selected per iteration by CS
    frames_dir : string
        Where to export the frames, None disables them

    Returns
    -------
    TestResult
    """
    profile = get_profile(method)
    seed = cfg.seed if seed is None else seed
    # one seed for every stream of the run
    cfg = replace(cfg, seed=seed)
    if profile.learner:
        _check_brain(brain, profile)
    if method == s.CS and (cs_k is None or cs_k < 1):
        raise ValueError("Method CS requires k >= 1")

    w = WorldState.random_placement(shape, c.stream_rng(seed, "placement", test_index))
    pheromones = PheromoneMap.initial(shape.width, shape.height, shape.labeled_cells, cfg.medium)
    field_map = pheromones if profile.stigmergy else None
    keys = (test_index, s.SESSION_CODES[s.TEST_SESSION])
    oracle = OracleController()
    curve, moves = [w.similarity()], []

    def frame(k):
        if frames_dir is not None and frames_every > 0 and k % frames_every == 0:
            export_frame(w, field_map, Path(frames_dir) / "frame_{:06}.pgm".format(k))

    frame(0)
    for t in range(1, iterations + 1):
        if method == s.ORACLE:
            outcome = oracle.step(w)
        elif method == s.DC:
            outcome = dc_step(w, pheromones, cfg.medium, cfg.dc_reward, cfg.perception, seed, t)
        elif method == s.CS:
            outcome = cs_step(w, pheromones, cs_k, cfg.medium, cfg.dc_reward, cfg.perception, seed, t)
        else:
            obs = observe(w, field_map, profile, cfg, keys, t)
            if profile.coordination == DISABLED:
                movers = list(range(w.num_agents))
            else:
                priorities = [action_priority(brain, state) for state in obs.local]
                movers = decide_winners(priorities, w, profile.coordination_config)
            actions = {i: select_action(brain, obs.inputs[i], GREEDY) for i in movers}
            outcome = run_phase(w, movers, actions.__getitem__, field_map, cfg.medium)
        curve.append(w.similarity())
        moves.append(outcome.moves)
        frame(t)

    return TestResult(method, curve[-1], curve, int(sum(moves)), moves)


###################################################################################
# Commands
#


def _generate_samples(exp: ExperimentConfig, shape):
    samples = generate_samples(
        shape,
        exp.samples.count,
        c.stream_rng(exp.seed, "samples"),
        exp.trainer.medium,
        exp.trainer.perception,
        exp.samples,
    )
    path = exp.samples_path if exp.samples_path is not None else exp.output("SAMPLES")
    samples.save(path)
    logger.info("Saved {} samples: {}".format(len(samples), path))
    return samples


def _load_or_generate_samples(exp: ExperimentConfig, shape):
    if exp.samples_path is not None and os.path.exists(exp.samples_path):
        samples = SampleSet.load(exp.samples_path, shape)
        logger.info("Loaded {} samples from {}".format(len(samples), exp.samples_path))
        return samples
    return _generate_samples(exp, shape)


def command_samples(exp: ExperimentConfig):
    return _generate_samples(exp, load_shape(exp.shape, exp.threshold, exp.shape_index))


def command_train(exp: ExperimentConfig):
    r"""
    Train a learning method, with periodic tests and checkpoints in the output directory

    Returns
    -------
    Trainer
    """
    profile = exp.profile
    if not profile.learner:
        raise ValueError("Method {} is scripted and has nothing to train".format(exp.method))
    shape = load_shape(exp.shape, exp.threshold, exp.shape_index)
    samples = _load_or_generate_samples(exp, shape)
    brain = AgentBrain.load(exp.checkpoint) if exp.checkpoint is not None else None
    trainer = Trainer(profile, samples, exp.trainer, brain)
    cfg = exp.trainer
    reset_outputs(exp.output("TRAIN_METRICS"), exp.output("TEST_METRICS"))

    def on_round(round_index, metrics):
        done = round_index + 1
        write_metrics(metrics.rows(), exp.output("TRAIN_METRICS"), METRIC_FIELDS)
        if cfg.test_every > 0 and done % cfg.test_every == 0:
            result = run_test(exp.method, shape, cfg, exp.iterations, trainer.brain, exp.seed, test_index=done)
            row = {
                "round": done,
                "method": exp.method,
                "final_si": result.final_si,
                "total_steps": result.total_steps,
                "iterations": result.iterations,
            }
            write_metrics([row], exp.output("TEST_METRICS"), TEST_METRIC_FIELDS)
            logger.info("Round {}: test SI {:.4f}".format(done, result.final_si))
        if cfg.checkpoint_every > 0 and done % cfg.checkpoint_every == 0:
            path = trainer.brain.save(exp.output("CHECKPOINT", done), extra={"round": done, "method": exp.method})
            logger.info("Checkpoint: {}".format(path))

    t0 = time.time()
    trainer.train(on_round=on_round)
    path = trainer.brain.save(exp.output("FINAL_CHECKPOINT"), extra={"round": cfg.rounds, "method": exp.method})
    logger.info("Training done in {:.1f} sec, final checkpoint: {}".format(time.time() - t0, path))
    return trainer


def command_test(exp: ExperimentConfig, brain: Optional[AgentBrain] = None) -> TestResult:
    shape = load_shape(exp.shape, exp.threshold, exp.shape_index)
    if brain is None and exp.profile.learner:
        if exp.checkpoint is None:
            raise ValueError("Testing method {} needs --checkpoint".format(exp.method))
        brain = AgentBrain.load(exp.checkpoint)
    frames_dir = exp.output("FRAMES_DIR") if exp.frames_every > 0 else None
    result = run_test(
        exp.method,
        shape,
        exp.trainer,
        exp.iterations,
        brain,
        exp.seed,
        cs_k=exp.cs_k,
        frames_dir=frames_dir,
        frames_every=exp.frames_every,
    )
    write_metrics(result.curve_rows(), exp.output("TEST_CURVE"), CURVE_FIELDS, overwrite=True)
    write_json(
        {
            "method": exp.method,
            "shape": str(exp.shape),
            "agents": shape.num_agents,
            "seed": exp.seed,
            "final_si": result.final_si,
            "total_steps": result.total_steps,
            "iterations": result.iterations,
        },
        exp.output("RESULT"),
    )
    logger.info("{} on {}: final SI {:.4f} after {} moves".format(exp.method, shape, result.final_si, result.total_steps))
    return result


###################################################################################
# CLI
#


def build_parser():
    parser = argparse.ArgumentParser(description="Swarm shape formation with stigmergy and federal training")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("train", "Train a learning method"),
        ("test", "Test a method from a random placement"),
        ("samples", "Generate the training samples"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=False, help="JSON experiment configuration")
        p.add_argument("--method", required=False, choices=s.SUPPORTED_METHODS, help="Method")
        p.add_argument("--shape", required=False, help="Shape file or bundled shape name")
        p.add_argument("--shape-index", type=int, required=False, help="Image index in an IDX file")
        p.add_argument("--threshold", type=int, required=False, help="Binarization threshold")
        p.add_argument("--seed", type=int, required=False, help="Experiment seed")
        p.add_argument("--rounds", type=int, required=False, help="Training rounds")
        p.add_argument("--iters", type=int, required=False, help="Test iterations")
        p.add_argument("--out", required=False, help="Output directory")
        p.add_argument("--checkpoint", required=False, help="Brain checkpoint to load")
        p.add_argument("--samples", required=False, help="Samples file (.npz)")
        p.add_argument("--count", type=int, required=False, help="Number of samples")
    return parser


def apply_overrides(config, args):
    r"""
    Copy the CLI flags over the file configuration
    """
    overrides = [
        ("experiment", "method", args.method),
        ("experiment", "shape", args.shape),
        ("experiment", "shape_index", args.shape_index),
        ("experiment", "threshold", args.threshold),
        ("experiment", "seed", args.seed),
        ("experiment", "out_dir", args.out),
        ("experiment", "checkpoint", args.checkpoint),
        ("experiment", "samples", args.samples),
        ("train", "rounds", args.rounds),
        ("test", "iterations", args.iters),
        ("samples", "count", args.count),
    ]
    for section, key, value in overrides:
        if value is not None:
            config.setdefault(section, {})[key] = value
    return config


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = c.read_config(args.config) if args.config else {}
    except AssertionError as e:
        raise ValueError(str(e)) from e
    exp = ExperimentConfig.from_config(apply_overrides(config, args))
    torch.set_num_threads(exp.threads)
    Path(exp.out_dir).mkdir(parents=True, exist_ok=True)

    if args.command == "samples":
        command_samples(exp)
    elif args.command == "train":
        command_train(exp)
    else:
        command_test(exp)
    return 0
