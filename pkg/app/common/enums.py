"""Common enums for the LTTD package."""

try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):  # noqa: WPS600
        """Backport of enum.StrEnum: members are strings and print as their value."""

        __str__ = str.__str__
        __format__ = str.__format__


class AttentionNormalization(StrEnum):
    """How the raw attention logits are turned into triplet weights."""

    RAW = "raw"
    SOFTMAX = "softmax"


class Modality(StrEnum):
    """Temporal input modalities fed to the block."""

    PAST_FRAMES = "past_frames"
    STEERING_SERIES = "steering_series"
    CURRENT_IMAGE = "current_image"


class LearningScenario(StrEnum):
    """Represents the learning scenarios of the simulator."""

    CLL = "CLL"
    SFL = "SFL"
    DFL = "DFL"


class StepSchedule(StrEnum):
    """Step-size schedules alpha_k."""

    CONSTANT = "constant"
    INVERSE_SQRT = "inverse_sqrt"


class OptimizerName(StrEnum):
    """Local optimizers available to silos."""

    SGD = "sgd"
    RMSPROP = "rmsprop"


class ConsensusWeights(StrEnum):
    """Constructions of the consensus matrix."""

    METROPOLIS = "metropolis"
    UNIFORM = "uniform"


class ShardStrategy(StrEnum):
    """Represents how samples are spread over silos."""

    IID = "iid"
    BY_SEQUENCE = "by_sequence"
