import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

__author__ = "qdcformer developers"

'''Line and bar charts of training metrics and ablation results, saved
    as SVG. The SVG writer is made deterministic (fixed hash salt, no
    date metadata) so repeated runs give identical files.
'''

plt.rcParams["svg.hashsalt"] = "qdcformer"
plt.rcParams["svg.fonttype"] = "none"


def save_svg(fig, figname):
    fig.savefig(figname, format="svg", metadata={"Date": None})
    plt.close(fig)
    return figname


def plot_lines(x_values, y_values, labels, title=None, x_label="Step",
    y_label="Value", dy=None, figname="lines.svg"):
    """
    Plots one or more series against a shared kind of x axis.

    Parameters
    ----------
    x_values : list of array-like, one per series

    y_values : list of array-like, one per series

    labels : list of string
        Legend entry of each series

    dy : list of array-like or None
        Optional symmetric error bars of each series

    figname : string
        Output SVG path

    Returns
    -------
    figname
    """
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for i, (x, y, label) in enumerate(zip(x_values, y_values, labels)):
        if dy is not None and dy[i] is not None:
            ax.errorbar(x, y, yerr=dy[i], label=label, marker="o", capsize=3)
        else:
            ax.plot(x, y, label=label, marker="o")
    if title:
        ax.set_title(title)
    ax.set_xlabel(x_label)
    ax.set_ylabel(y_label)
    ax.grid(True, linestyle=":")
    if len(labels) > 1:
        ax.legend(loc="best")
    return save_svg(fig, figname)


def plot_grouped_bars(groups, labels, values, title=None, y_label="Value",
    figname="bars.svg"):
    """ Bars of values[label][group], one color per label."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    x = np.arange(len(groups))
    width = 0.8 / max(len(labels), 1)
    for i, label in enumerate(labels):
        ax.bar(x + i * width, values[label], width, label=label)
    ax.set_xticks(x + width * (len(labels) - 1) / 2)
    ax.set_xticklabels([str(g) for g in groups])
    if title:
        ax.set_title(title)
    ax.set_ylabel(y_label)
    ax.legend(loc="best")
    return save_svg(fig, figname)
