import math

""" Exception types and checks on inputs and options for errors and
    incompatibilities.
"""


class QDCError(Exception):
    """Base class of every error raised by qdcformer."""


class ConfigError(QDCError, ValueError):
    pass


class DimensionError(QDCError, ValueError):
    pass


class UsageError(QDCError, RuntimeError):
    pass


class DatasetError(QDCError, ValueError):
    pass


class EmptyTrajectoryError(DatasetError):
    pass


class CapabilityError(QDCError, RuntimeError):
    pass


class NumericalAbort(QDCError, FloatingPointError):
    """ A loss became NaN or infinite during training.

        :step: (int) training step at which it happened
        :component: (string) which loss, e.g. "critic_loss"

    """
    def __init__(self, step, component, value):
        self.step = step
        self.component = component
        self.value = value
        super().__init__(f"Non-finite {component} ({value}) at training "
            f"step {step}. Aborting.")


def check_finite(value, step, component):
    if not math.isfinite(value):
        raise NumericalAbort(step, component, value)


def error_check_config(config):
    """ Make sure the TrainConfig values make sense.

        INPUTS:

        :config: (TrainConfig)

        OUTPUTS:

        None, but ConfigError raised naming the first bad field

    """
    if config.eta < 0:
        raise ConfigError(f"eta must be >= 0, got {config.eta}.")
    if not 0 < config.gamma < 1:
        raise ConfigError(f"gamma must lie in (0,1), got {config.gamma}.")
    if not 0 < config.polyak_tau <= 1:
        raise ConfigError(f"polyak_tau must lie in (0,1], got {config.polyak_tau}.")
    for key in ("K", "d", "N", "conv_window", "batch_size", "candidate_count",
                "eval_every", "critic_hidden", "eval_episodes"):
        value = getattr(config, key)
        if int(value) != value or value < 1:
            raise ConfigError(f"{key} must be a positive count, got {value}.")
    for key in ("total_steps", "critic_updates_per_step", "max_timestep"):
        value = getattr(config, key)
        if int(value) != value or value < 0:
            raise ConfigError(f"{key} must be a count >= 0, got {value}.")
    if config.candidate_max_multiplier < 1:
        raise ConfigError("candidate_max_multiplier must be >= 1, got "
            f"{config.candidate_max_multiplier}.")
    for key in ("policy_lr", "critic_lr", "rtg_scale", "grad_clip"):
        if not getattr(config, key) > 0:
            raise ConfigError(f"{key} must be > 0, got {getattr(config, key)}.")
    if config.q_choice not in ("min", "q1"):
        raise ConfigError(f"q_choice must be \"min\" or \"q1\", got {config.q_choice}.")
    if config.reselect not in ("step", "episode"):
        raise ConfigError("reselect must be \"step\" or \"episode\", got "
            f"{config.reselect}.")


def error_check_dims(what, expected, found):
    """ Raise a DimensionError naming both dimensions if they differ."""
    if tuple(expected) != tuple(found):
        raise DimensionError(f"{what}: expected dimensions {tuple(expected)}, "
            f"found {tuple(found)}.")
