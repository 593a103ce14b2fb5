from ..envs import make_env, scoring
from ..envs.behavior import (BehaviorPolicySpec, best_return_from_start,
    generate_dataset, logged_transitions_connect)
from ..train import inference
from ..train.trainer import TrainConfig, train
from ..utils import config as cfg
from ..utils import error_check
from ..utils import plotting_tools as plt_tools
from ..utils import tools
from concurrent.futures import ProcessPoolExecutor
import datetime
import logging
import os
import pandas as pd
import numpy as np

__author__ = "qdcformer developers"

logger = logging.getLogger("qdcformer")


def about_batch_run_ablation():
    """ Runs the two ablation suites on the stitching task.

        stitching: QDC and its eta=0 ablation (plain return-conditioned
            behavior cloning, a single candidate RTG) are trained on a
            stitch-mix dataset for each seed and scored over greedy
            rollouts.

            OUTPUT: stitching.csv with columns
                method, seed, normalized_score, success_rate

        horizon: both methods for every K in ablation_horizons and
            every seed.

            OUTPUT: horizon_cells.csv with one row per cell and
            horizon.csv with columns
                method, K, normalized_score_mean, normalized_score_std

        Every cell is independent and may run in its own process. A
        failed cell is logged and recorded in <suite>_runlog.csv while
        the remaining cells carry on. Each suite also writes an SVG chart.

    """


methods = ("QDC", "DC")


def method_config(base, method, seed, K=None, total_steps=None):
    """ TrainConfig of one cell. DC is QDC with eta=0 conditioned on a
        single candidate; with eta=0 the critic never reaches the policy,
        so it is switched off.

    """
    changes = {"seed": int(seed)}
    if K is not None:
        changes["K"] = int(K)
    if total_steps is not None:
        changes["total_steps"] = int(total_steps)
        changes["eval_every"] = max(int(total_steps), 1)
    if method == "DC":
        changes.update({"eta": 0.0, "candidate_count": 1,
                        "critic_updates_per_step": 0})
    values = dict(base)
    values.update(changes)
    return TrainConfig.from_dict(values)


def make_stitch_dataset(env, seed):
    spec = BehaviorPolicySpec("stitch-mix", cfg.ablation_noise)
    trajectories = generate_dataset(env, spec, cfg.ablation_episodes, seed)
    best = best_return_from_start(env, trajectories)
    optimal = scoring.optimal_return(env)
    if best is not None and best >= optimal:
        logger.warning("Stitch-mix dataset with seed %d holds an optimal "
            "episode from the start.", seed)
    if not logged_transitions_connect(env, trajectories):
        logger.warning("Stitch-mix dataset with seed %d does not connect the "
            "start to the goal.", seed)
    return trajectories


def run_cell(cell):
    """ Train and evaluate one (method, seed, K) cell.

        INPUTS:

        :cell: (dict) suite, method, seed, K, total_steps, base

        OUTPUTS:

        :row: (dict) the cell keys plus normalized_score, success_rate
            and raw_return, or error when the cell failed

    """
    label = f"{cell['suite']}/{cell['method']}/seed{cell['seed']}/K{cell['K']}"
    row = {k: cell[k] for k in ("suite", "method", "seed", "K")}
    try:
        env = make_env(cell["base"]["env"])
        trajectories = make_stitch_dataset(env, cell["seed"])
        config = method_config(cell["base"], cell["method"], cell["seed"],
            cell["K"], cell["total_steps"])
        result = train(config, trajectories, env=env, evaluate=False)
        ensemble = result.ensemble if config.eta > 0 else None
        report = inference.evaluate_policy(result.policy, ensemble, env,
            result.stats, config, cfg.ablation_rollouts, cell["seed"])
        row.update({"normalized_score": report["normalized_score_mean"],
                    "success_rate": report["success_rate"],
                    "raw_return": report["raw_return_mean"], "error": ""})
        logger.info("TIMESTAMP: Finished %s score %.3f %s", label,
            row["normalized_score"], datetime.datetime.now())
    except Exception as e:
        logger.exception("Ablation cell %s failed", label)
        row.update({"normalized_score": np.nan, "success_rate": np.nan,
                    "raw_return": np.nan, "error": f"{type(e).__name__}: {e}"})
    return row


def run_cells(cells, workers=1):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_cell, cells))
    return [run_cell(cell) for cell in cells]


def _write_runlog(rows, suite, out_dir):
    runlog = pd.DataFrame([{"suite": r["suite"], "method": r["method"],
        "seed": r["seed"], "K": r["K"],
        "status": "failed" if r["error"] else "ok", "error": r["error"]}
        for r in rows])
    tools.write_dataframe(runlog, os.path.join(out_dir, f"{suite}_runlog.csv"))


def stitching_suite(out_dir, seed_base=0, total_steps=None, workers=1):
    base = dict(cfg.ablation_config)
    base["env"] = cfg.ablation_env
    cells = [{"suite": "stitching", "method": method, "seed": seed_base + s,
              "K": base["K"], "total_steps": total_steps, "base": base}
             for s in range(cfg.ablation_seeds) for method in methods]
    rows = run_cells(cells, workers)
    _write_runlog(rows, cells[0]["suite"], out_dir)

    df = pd.DataFrame(rows, columns=["method", "seed", "normalized_score",
        "success_rate"])
    tools.write_dataframe(df, os.path.join(out_dir, "stitching.csv"))

    seeds = sorted(df["seed"].unique())
    values = {m: [float(df[(df.method == m) & (df.seed == s)].normalized_score.iloc[0])
                  for s in seeds] for m in methods}
    plt_tools.plot_grouped_bars(seeds, list(methods), values,
        title=f"Stitching on {cfg.ablation_env}", y_label="Normalized score",
        figname=os.path.join(out_dir, "stitching.svg"))
    return df


def horizon_suite(out_dir, seed_base=0, total_steps=None, workers=1):
    base = dict(cfg.ablation_config)
    base["env"] = cfg.ablation_env
    cells = [{"suite": "horizon", "method": method, "seed": seed_base + s,
              "K": K, "total_steps": total_steps, "base": base}
             for method in methods for K in cfg.ablation_horizons
             for s in range(cfg.ablation_seeds)]
    rows = run_cells(cells, workers)
    _write_runlog(rows, cells[0]["suite"], out_dir)

    cell_df = pd.DataFrame(rows, columns=["method", "K", "seed",
        "normalized_score", "success_rate"])
    tools.write_dataframe(cell_df, os.path.join(out_dir, "horizon_cells.csv"))

    summary = (cell_df.groupby(["method", "K"], sort=False)["normalized_score"]
               .agg(normalized_score_mean="mean",
                    normalized_score_std=lambda v: float(np.std(v)))
               .reset_index())
    tools.write_dataframe(summary, os.path.join(out_dir, "horizon.csv"))

    x_values, y_values, dy = [], [], []
    for m in methods:
        part = summary[summary.method == m]
        x_values.append(part.K.tolist())
        y_values.append(part.normalized_score_mean.tolist())
        dy.append(part.normalized_score_std.tolist())
    plt_tools.plot_lines(x_values, y_values, list(methods), dy=dy,
        title=f"Context length on {cfg.ablation_env}", x_label="K",
        y_label="Normalized score", figname=os.path.join(out_dir, "horizon.svg"))
    return summary


def run_suite(suite, out_dir, seed_base=0, total_steps=None, workers=1):
    tools.make_dir(out_dir)
    logger.info("TIMESTAMP: Starting %s suite %s", suite, datetime.datetime.now())
    if suite == "stitching":
        return stitching_suite(out_dir, seed_base, total_steps, workers)
    if suite == "horizon":
        return horizon_suite(out_dir, seed_base, total_steps, workers)
    raise error_check.ConfigError(f"Unknown ablation suite {suite}.")
