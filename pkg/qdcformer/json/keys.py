__author__ = "qdcformer developers"


def about_keys():
    """ About keys.py

        Keys of the checkpoint document written after training and read
        by the eval command. ckpt_json_handler.py fills and reads the
        document through these names only.

    """


ckpt_format_id = 'qdc-ckpt-v1'

#TOP LEVEL
ckpt_format = 'format'
ckpt_config = 'config'
ckpt_dims = 'dims'
ckpt_stats = 'stats'
ckpt_params = 'params'
ckpt_q_params = 'q_params'

#DIMS
dim_state = 'state_dim'
dim_action = 'action_dim'
dim_max_timestep = 'max_timestep'


#EVAL REPORT
report_keys = ['raw_return_mean', 'raw_return_std', 'normalized_score_mean',
    'normalized_score_std', 'success_rate']
