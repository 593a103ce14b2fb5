"""Console script for qdcformer."""
from .ablate import batch_run_ablation
from .data import trajectory
from .envs import make_env
from .envs.behavior import BehaviorPolicySpec, generate_dataset, policy_kinds
from .json import ckpt_json_handler as ckpt_json
from .json import keys
from .train import inference
from .train.trainer import TrainConfig, metrics_columns, train
from .utils import config as cfg
from .utils import error_check
from .utils import plotting_tools as plt_tools
from .utils import tools
import argparse
import logging
import os
import sys

logger = logging.getLogger("qdcformer")


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose errors become UsageError (exit code 1)."""

    def error(self, message):
        raise error_check.UsageError(f"{self.prog}: {message}")


def gen_data(args):
    env = make_env(args.env)
    spec = BehaviorPolicySpec(args.policy, args.noise)
    trajectories = generate_dataset(env, spec, args.episodes, args.seed)
    trajectory.save_dataset(args.out, trajectories)
    summary = trajectory.dataset_summary(trajectories)
    print(f"Wrote {summary['episodes']} episodes to {args.out}; returns "
          f"min {summary['return_min']:.6g} max {summary['return_max']:.6g}")
    return 0


def train_command(args):
    config = TrainConfig.from_json(args.config)
    overrides = {}
    if args.eta is not None:
        overrides["eta"] = args.eta
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.total_steps is not None:
        overrides["total_steps"] = args.total_steps
    if overrides:
        config = config.replace(**overrides)

    trajectories, stats = trajectory.load_dataset(args.data)
    result = train(config, trajectories, stats)

    tools.make_dir(args.out)
    ckpt_json.write_checkpoint(os.path.join(args.out, "checkpoint.json"), config,
        result.policy, result.ensemble, result.stats)
    tools.write_dataframe(result.metrics[metrics_columns],
        os.path.join(args.out, "metrics.csv"))
    print(f"Trained {config.total_steps} steps; outputs in {args.out}")
    return 0


def eval_command(args):
    config, policy, ensemble, stats = ckpt_json.load_checkpoint(args.ckpt)
    env = make_env(args.env if args.env else config.env)
    error_check.error_check_dims("checkpoint vs environment (state_dim, "
        "action_dim)", (policy.state_dim, policy.action_dim),
        (env.state_dim, env.action_dim))
    if args.candidates is not None:
        config = config.replace(candidate_count=args.candidates)

    report = inference.evaluate_policy(policy, ensemble, env, stats, config,
        args.episodes, args.seed)
    out = args.out or os.path.join(os.path.dirname(os.path.abspath(args.ckpt)),
        "eval_report.json")
    tools.write_json_report({k: report[k] for k in keys.report_keys}, out)
    for k in keys.report_keys:
        print(f"{k}: {report[k]:.6g}")
    return 0


def ablate_command(args):
    out = args.out or os.path.join(cfg.outpath, args.suite)
    batch_run_ablation.run_suite(args.suite, out, seed_base=args.seed_base,
        total_steps=args.total_steps, workers=args.workers)
    print(f"Wrote {args.suite} suite results to {out}")
    return 0


def export_config_command(args):
    cfg.export_config(overwrite=args.overwrite)
    cfg.prepare_dirs()
    return 0


def plot_command(args):
    df = tools.read_dataframe(args.csv)
    out = args.out or os.path.splitext(args.csv)[0] + ".svg"
    if {"method", "K", "normalized_score_mean"} <= set(df.columns):
        methods = list(dict.fromkeys(df["method"]))
        parts = [df[df.method == m] for m in methods]
        plt_tools.plot_lines([p.K.tolist() for p in parts],
            [p.normalized_score_mean.tolist() for p in parts], methods,
            dy=[p.normalized_score_std.tolist() for p in parts], x_label="K",
            y_label="Normalized score", figname=out)
        table = df
    elif {"method", "seed", "normalized_score"} <= set(df.columns):
        methods = list(dict.fromkeys(df["method"]))
        seeds = sorted(df["seed"].unique())
        values = {m: [float(df[(df.method == m) & (df.seed == s)].normalized_score.iloc[0])
                      for s in seeds] for m in methods}
        plt_tools.plot_grouped_bars(seeds, methods, values,
            y_label="Normalized score", figname=out)
        table = df
    else:
        if args.column not in df.columns:
            raise error_check.UsageError(f"plot: column {args.column} not in "
                f"{args.csv}; available {list(df.columns)}.")
        table = df[["step", args.column]]
        plt_tools.plot_lines([table.step.tolist()], [table[args.column].tolist()],
            [args.column], y_label=args.column, figname=out)
    tools.write_dataframe(table, os.path.splitext(out)[0] + ".csv")
    print(f"Wrote {out}")
    return 0


def build_parser():
    parser = _Parser(prog="qdcformer", description="Q-value regularized "
        "decision ConvFormer for offline RL on toy environments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="Generate an offline dataset.")
    p.add_argument("--env", required=True, help="Built-in maze, maze JSON path "
        "or chain<n>")
    p.add_argument("--policy", required=True, choices=policy_kinds)
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=cfg.ablation_noise,
        help="Probability of a random action (default %(default)s)")
    p.add_argument("--out", required=True, help="JSON-Lines dataset file")
    p.set_defaults(func=gen_data)

    p = sub.add_parser("train", help="Train on a dataset.")
    p.add_argument("--config", required=True, help="TrainConfig JSON file")
    p.add_argument("--data", required=True, help="JSON-Lines dataset file")
    p.add_argument("--out", required=True, help="Output directory")
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--total-steps", type=int, default=None)
    p.set_defaults(func=train_command)

    p = sub.add_parser("eval", help="Evaluate a checkpoint.")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--env", default=None, help="Defaults to the training env")
    p.add_argument("--episodes", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--candidates", type=int, default=None)
    p.add_argument("--out", default=None, help="Report JSON path")
    p.set_defaults(func=eval_command)

    p = sub.add_parser("ablate", help="Run an ablation suite.")
    p.add_argument("--suite", required=True, choices=["stitching", "horizon"])
    p.add_argument("--out", default=None, help="Output directory (default "
        "<outpath>/<suite>)")
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--total-steps", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=ablate_command)

    p = sub.add_parser("plot", help="Render a metrics or ablation CSV as SVG.")
    p.add_argument("--csv", required=True)
    p.add_argument("--column", default="bc_loss", help="Metrics column to plot")
    p.add_argument("--out", default=None, help="SVG path")
    p.set_defaults(func=plot_command)

    p = sub.add_parser("export-config", help="Copy the default qdcformer.cfg to "
        "the working directory and create the data, output and plot directories.")
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=export_config_command)

    for p in sub.choices.values():
        p.add_argument("--verbose", action="store_true")
    return parser


def main(argv=None):
    """Console script for qdcformer. Returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except error_check.UsageError as e:
        print(e, file=sys.stderr)
        return 1

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    logging.getLogger("matplotlib").setLevel(logging.WARNING)

    try:
        return args.func(args)
    except error_check.NumericalAbort as e:
        logger.error(str(e))
        print(e, file=sys.stderr)
        return 2
    except (error_check.QDCError, OSError) as e:
        print(f"qdcformer {args.command}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())  # pragma: no cover
