import logging
import sys


def get_custom_logger(logger_name, level, stream=sys.stdout):
    r"""
    Create a custom logger with a standard formatting

    Inputs:
    - logger_name: Name of the logger. You can get the class name as self.__class__.__name__
    - level: logging level (e.g. logging.INFO, logging.DEBUG, etc.)
    - stream: One of sys.stdout or sys.stderr

    Outputs:
        logger
    """
    logger = logging.getLogger(logger_name)
    logger.setLevel(level)

    if not logger.hasHandlers():
        handler = logging.StreamHandler(stream)
        formatter = logging.Formatter(
            "%(asctime)s %(name)-12s %(levelname)-8s %(message)s"
        )
        handler.setFormatter(formatter)
        logger.addHandler(handler)

    return logger


###################################################################################
# System constants
#

# Method names accepted by the harness
SIRL = "SIRL"
SIRL_A = "SIRL-A"
SIRL_WS = "SIRL-WS"
JL = "JL"
IRL = "IRL"
JL_O = "JL-O"
IRL_O = "IRL-O"
CS = "CS"
DC = "DC"
ORACLE = "Oracle"

SUPPORTED_METHODS = [SIRL, SIRL_A, SIRL_WS, JL, IRL, JL_O, IRL_O, CS, DC, ORACLE]

# Training sessions of one round
EVALUATION_SESSION = "evaluation"
BEHAVIOR_SESSION = "behavior"
TEST_SESSION = "test"

# Integer keys of the sessions in the random streams
SESSION_CODES = {EVALUATION_SESSION: 0, BEHAVIOR_SESSION: 1, TEST_SESSION: 2}

# Width of the per-agent observation and of the cascaded Moore observation
LOCAL_STATE_WIDTH = 7
MOORE_SLOTS = 8
JOINT_STATE_WIDTH = LOCAL_STATE_WIDTH * (MOORE_SLOTS + 1)

# Output files of an experiment directory
OUTPUT_FILES = {
    "TRAIN_METRICS": "train_metrics.csv",
    "TEST_METRICS": "test_metrics.csv",
    "TEST_CURVE": "test_curve.csv",
    "SAMPLES": "samples.npz",
    "CHECKPOINT": "brain_<ROUND>.check",
    "FINAL_CHECKPOINT": "brain_final.check",
    "RESULT": "result.json",
    "FRAMES_DIR": "frames",
}

# Checkpoint format version for networks and brains
CHECKPOINT_VERSION = 1

# Stream tags mixed into the seed sequence of every random draw
STREAM_TAGS = {
    "attractor": 1,
    "action": 2,
    "placement": 3,
    "sample_draw": 4,
    "samples": 5,
    "init": 6,
    "baseline": 7,
}
