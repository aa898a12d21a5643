"""Figure rendering for trajectory CSV data.

Plots are a convenience view of the CSV output, written next to it; the CSV
stays the authoritative record. Uses the Agg backend so no display is needed.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

MOMENT_COLUMNS = ("xi_q", "xi_p", "xi_qq", "xi_pp")


def _finite_mask(col):
    return np.isfinite(col)


def plot_moments(data, path, label=None):
    """Four-panel moments figure (first and second moments plus norm)."""
    wst = data["wSt"]
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    for ax, name in zip(axes.flat, MOMENT_COLUMNS):
        col = data[name]
        m = _finite_mask(col)
        if m.any():
            ax.plot(wst[m], col[m], label=label)
        ax.set_ylabel(name)
        ax.grid(True, alpha=0.3)
    for ax in axes[1]:
        ax.set_xlabel(r"$\omega_S t$")
    if label:
        axes[0, 0].legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_phonons(data, path):
    """Level weights w_n and mean phonon number against omega_S t.

    Returns False (and writes nothing) when the weight columns are absent
    or entirely nan, as for oracle trajectories.
    """
    names = sorted((n for n in data if n.startswith("w") and n[1:].isdigit()),
                   key=lambda n: int(n[1:]))
    if not names or not any(np.isfinite(data[n]).any() for n in names):
        return False
    wst = data["wSt"]
    fig, (top, bot) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for n in names:
        col = data[n]
        m = _finite_mask(col)
        top.plot(wst[m], col[m], label=f"$w_{{{n[1:]}}}$")
    top.set_ylabel("level weight")
    top.legend(loc="best", fontsize=8, ncol=2)
    top.grid(True, alpha=0.3)
    col = data["n_mean"]
    m = _finite_mask(col)
    bot.plot(wst[m], col[m])
    bot.set_ylabel(r"$\langle n \rangle$")
    bot.set_xlabel(r"$\omega_S t$")
    bot.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return True


def plot_overlay(data_a, data_b, labels, path):
    """Overlay the moment columns of two trajectories for visual diffing."""
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    for ax, name in zip(axes.flat, MOMENT_COLUMNS):
        for data, label, style in ((data_a, labels[0], "-"), (data_b, labels[1], "--")):
            col = data[name]
            m = _finite_mask(col)
            if m.any():
                ax.plot(data["wSt"][m], col[m], style, label=label)
        ax.set_ylabel(name)
        ax.grid(True, alpha=0.3)
    for ax in axes[1]:
        ax.set_xlabel(r"$\omega_S t$")
    axes[0, 0].legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
