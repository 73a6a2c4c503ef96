"""Swarm shape formation with a digital pheromone medium, conflict avoidance and federal training."""

from .harness import ExperimentConfig, load_shape, run_test
from .trainer import Trainer, TrainerConfig

__all__ = ["ExperimentConfig", "Trainer", "TrainerConfig", "load_shape", "run_test"]
