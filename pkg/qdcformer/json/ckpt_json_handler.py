from . import keys
from ..data.trajectory import DatasetStats
from ..train.trainer import TrainConfig, build_models
from ..utils import error_check
from ..utils import tools
import copy
import json
import logging
import os
import numpy as np

__author__ = "qdcformer developers"

logger = logging.getLogger("qdcformer")


def about_ckpt_json_handler():
    """ About ckpt_json_handler.py

        Checkpoints are single JSON documents

            {"format": "qdc-ckpt-v1",
             "config": {TrainConfig keys},
             "dims": {"state_dim", "action_dim", "max_timestep"},
             "stats": {"state_mean", "state_std", "return_max", "return_min"},
             "params": {policy parameter name: nested list},
             "q_params": {"q1", "q2", "q1_target", "q2_target",
                          "policy_target"}}

        Floats are written by json with full repr precision, so a reload
        reproduces every parameter bit-exactly. Files are written to a
        temporary name first and renamed into place.

    """


def read_in_json_template():
    """ The empty checkpoint document."""
    templatedir = os.path.join(os.path.dirname(__file__), 'templates')
    with open(os.path.join(templatedir, 'checkpoint_template.json')) as f:
        template = json.load(f)
    return template


def fill_json(template, config, policy, ensemble, stats):
    """ A filled copy of the checkpoint template."""
    ckpt = copy.deepcopy(template)
    ckpt[keys.ckpt_format] = keys.ckpt_format_id
    ckpt[keys.ckpt_config] = config.to_dict()
    ckpt[keys.ckpt_dims] = {keys.dim_state: policy.state_dim,
                            keys.dim_action: policy.action_dim,
                            keys.dim_max_timestep: policy.max_timestep}
    ckpt[keys.ckpt_stats] = stats.to_dict()
    ckpt[keys.ckpt_params] = policy.to_dict()
    ckpt[keys.ckpt_q_params] = ensemble.to_dict()
    return ckpt


def write_checkpoint(filename, config, policy, ensemble, stats):
    ckpt = fill_json(read_in_json_template(), config, policy, ensemble, stats)
    tools.atomic_write_text(json.dumps(ckpt), filename)
    logger.info("Wrote checkpoint to %s", filename)
    return filename


def read_in_json(filename):
    if not os.path.isfile(filename):
        raise error_check.ConfigError(f"Checkpoint {filename} does not exist.")
    with open(filename) as f:
        try:
            info = json.load(f)
        except json.JSONDecodeError as e:
            raise error_check.ConfigError(f"{filename}: could not parse "
                f"checkpoint ({e.msg}).")
    return info


def load_checkpoint(filename):
    """ Rebuild the models saved by write_checkpoint.

        OUTPUTS:

        :config: (TrainConfig)
        :policy: (PolicyModel)
        :ensemble: (QEnsemble)
        :stats: (DatasetStats)

    """
    ckpt = read_in_json(filename)
    missing = [k for k in (keys.ckpt_format, keys.ckpt_config, keys.ckpt_dims,
        keys.ckpt_stats, keys.ckpt_params, keys.ckpt_q_params) if k not in ckpt]
    if missing:
        raise error_check.ConfigError(f"{filename}: checkpoint is missing keys "
            f"{missing}.")
    if ckpt[keys.ckpt_format] != keys.ckpt_format_id:
        raise error_check.ConfigError(f"{filename}: unsupported checkpoint format "
            f"{ckpt[keys.ckpt_format]}.")

    config = TrainConfig.from_dict(ckpt[keys.ckpt_config])
    dims = ckpt[keys.ckpt_dims]
    rng = np.random.default_rng(0)
    policy, ensemble = build_models(config, dims[keys.dim_state],
        dims[keys.dim_action], dims[keys.dim_max_timestep], rng, rng)
    policy.load_params(ckpt[keys.ckpt_params])
    ensemble.load_params(ckpt[keys.ckpt_q_params])
    stats = DatasetStats.from_dict(ckpt[keys.ckpt_stats])
    return config, policy, ensemble, stats
