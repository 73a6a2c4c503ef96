import json
import logging
import os

import numpy as np

import sirl_swarm.settings as s

LOG_LEVEL = logging.INFO
# LOG_LEVEL = logging.DEBUG

logger = s.get_custom_logger("common", LOG_LEVEL)


def validate_config(config):
    r"""
    Validate the provided configuration.
    An AssertionError is raised in case the config is invalid

    Parameters
    ----------
    config : dictionary
        Configuration of the experiment

    Returns
    -------
    bool : True on success
    """
    if "experiment" in config:
        experiment = config["experiment"]
        if "method" in experiment:
            assert (
                experiment["method"] in s.SUPPORTED_METHODS
            ), "Config error: 'experiment.method' must be one of {}".format(
                s.SUPPORTED_METHODS
            )
        if "seed" in experiment:
            assert isinstance(experiment["seed"], int) and experiment["seed"] >= 0, (
                "Config error: 'experiment.seed' should be a non-negative integer"
            )
        if experiment.get("method") == s.CS:
            k = safe_get_parameter(config, ["baselines", "cs_k"])
            assert k is not None, "Config error: method CS requires 'baselines.cs_k'"
            assert k >= 1, "Config error: 'baselines.cs_k' should be at least 1"

    if "medium" in config:
        for key in ["diffusion_rate", "decay_rate"]:
            if key in config["medium"]:
                value = config["medium"][key]
                assert 0.0 <= value <= 1.0, "Config error: 'medium.{}' should be in [0, 1]".format(
                    key
                )
        if "sense_radius" in config["medium"]:
            assert (
                config["medium"]["sense_radius"] >= 1
            ), "Config error: 'medium.sense_radius' should be positive"
        if "mark_labeled" in config["medium"]:
            assert isinstance(
                config["medium"]["mark_labeled"], bool
            ), "Config error: 'medium.mark_labeled' should be true or false"

    if "train" in config:
        if "t_max" in config["train"]:
            assert config["train"]["t_max"] >= 1, "Config error: 'train.t_max' should be at least 1"
        if "rounds" in config["train"]:
            assert config["train"]["rounds"] >= 0, "Config error: 'train.rounds' should not be negative"

    if "agent" in config:
        for key in ["gamma1", "gamma2"]:
            if key in config["agent"]:
                value = config["agent"][key]
                assert 0.0 <= value <= 1.0, "Config error: 'agent.{}' should be in [0, 1]".format(key)

    return True


def read_config(config_filename):
    if not os.path.exists(config_filename):
        raise FileNotFoundError("Missing configuration file: {}".format(config_filename))
    with open(config_filename, "r") as fd:
        config = json.load(fd)

    # Validate the config file
    validate_config(config)

    return config


def safe_get_parameter(input_dict, index_path, default=None, required=False):
    r"""
    Safe get parameter from a nested dictionary.

    Provide a nested dictionary (dictionary of dictionaries) and a list of indices:
    - If the whole index path exists the value pointed by it is returned
    - Otherwise the default value is returned.

    Input:
        input_dict: Data structure of nested dictionaries.
        index_path: List with the indices path to follow inside the input_dict.
        default: Default value to return if the indices path is broken.
        required: If true a ValueError exception will be raised in case the parameter does not exist
    Output:
        The value pointed by the index path or "default".
    """
    if input_dict is None or index_path is None:
        return default

    d = input_dict
    for i in index_path[:-1]:
        if i not in d:
            if required:
                raise ValueError("Missing parameter: {}".format(i))
            return default
        d = d[i]

    last_index = index_path[-1]
    if last_index not in d:
        if required:
            raise ValueError("Missing parameter: {}".format(last_index))
        return default

    return d[last_index]


def get_output_filename(output_part, round_index=None):
    r"""
    Build the filename of an output part of an experiment directory

    Parameters
    ----------
    output_part : string
        Key of settings.OUTPUT_FILES
    round_index : int
        Training round, used by the per-round checkpoint names

    Returns
    -------
    string
        The filename for the output part
    """
    template = s.OUTPUT_FILES[output_part]
    if "<ROUND>" in template:
        if round_index is None:
            raise ValueError("Output part {} needs a round index".format(output_part))
        template = template.replace("<ROUND>", "{:06}".format(round_index))
    return template


def stream_rng(seed, tag, *keys):
    r"""
    Build an independent numpy Generator for one stochastic decision.

    The stream is fully determined by the global seed, the purpose tag (see
    settings.STREAM_TAGS) and the keys (round, session, agent, time step ...),
    so draws never depend on the order in which agents are processed.

    Parameters
    ----------
    seed : int
        Global experiment seed
    tag : string
        Purpose of the stream
    keys : int
        Further non-negative integers identifying the draw

    Returns
    -------
    numpy.random.Generator
    """
    entropy = [int(seed), s.STREAM_TAGS[tag]] + [int(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))
