"""PNG figure rendering for the CLI result tables.

Each writer takes the row dictionaries of one subcommand's table (values in
native Python types, spectra as lists) and saves a figure next to the
delimited output. Rendering uses the Agg backend so runs never need a
display.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_DPI = 150


def _finish(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=FIGURE_DPI)
    plt.close(fig)
    return path


def save_swap_figure(rows, path: str) -> str:
    row = rows[0]
    predicted = row["spectrum_shared_predicted"]
    simulated = row["spectrum_shared_simulated"]
    x = np.arange(max(len(predicted), len(simulated)))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(x[:len(predicted)] - 0.2, predicted, 0.4, label="predicted")
    ax.bar(x[:len(simulated)] + 0.2, simulated, 0.4, label="simulated")
    ax.set_xlabel("Schmidt index")
    ax.set_ylabel("coefficient")
    ax.set_xticks(x)
    ax.set_title(f"shared spectrum after {row['nodes']} swap(s), "
                 f"F = {row['fidelity_simulated']:.5f}, "
                 f"p0 = {row['p0_simulated']:.5f}")
    ax.legend()
    return _finish(fig, path)


def save_network_figure(rows, path: str) -> str:
    nodes = [r["node"] for r in rows]
    fig, (ax_p, ax_f) = plt.subplots(1, 2, figsize=(9, 4))
    ax_p.plot(nodes, [r["acceptance_predicted"] for r in rows], "-",
              label="predicted")
    ax_p.plot(nodes, [r["acceptance_simulated"] for r in rows], "o",
              label="simulated")
    ax_p.set_xlabel("node")
    ax_p.set_ylabel("acceptance probability")
    ax_p.set_title("per-node acceptance")
    ax_p.legend()
    ax_f.plot(nodes, [r["fidelity_predicted"] for r in rows], "-",
              label="predicted")
    ax_f.plot(nodes, [r["fidelity_simulated"] for r in rows], "o",
              label="simulated")
    ax_f.set_xlabel("nodes crossed")
    ax_f.set_ylabel("fidelity to target")
    ax_f.set_title("chained fidelity")
    ax_f.legend()
    return _finish(fig, path)


def save_theta_sweep_figure(rows, path: str) -> str:
    thetas = [r["theta"] for r in rows]
    fig, ax = plt.subplots(figsize=(6.5, 4))
    ax.plot(thetas, [r["fidelity_ideal"] for r in rows], "-",
            label="fidelity (closed form)")
    ax.plot(thetas, [r["fidelity_simulated"] for r in rows], ".",
            label="fidelity (simulated)")
    ax.plot(thetas, [r["p0_ideal"] for r in rows], "--",
            label="acceptance probability")
    if any(r["fidelity_noisy"] is not None for r in rows):
        ax.plot(thetas, [r["fidelity_noisy"] for r in rows], "x",
                label="fidelity (noisy)")
    ax.set_xlabel("theta")
    ax.set_ylabel("value")
    ax.set_title("single swap across the theta family")
    ax.legend()
    return _finish(fig, path)


def save_random_circuits_figure(rows, path: str) -> str:
    sizes = [r["n"] for r in rows]
    fig, (ax_f, ax_p) = plt.subplots(1, 2, figsize=(9, 4))
    ax_f.errorbar(sizes, [r["fidelity_mean"] for r in rows],
                  yerr=[r["fidelity_std"] for r in rows], fmt="o-",
                  capsize=3)
    ax_f.set_xlabel("n")
    ax_f.set_ylabel("predicted fidelity")
    ax_f.set_title("mean fidelity over random brickwork states")
    ax_p.semilogy(sizes, [r["p0_mean"] for r in rows], "o-", label="mean p0")
    guide = [2.0 ** (-n) for n in sizes]
    ax_p.semilogy(sizes, guide, "k--", label="2^-n")
    ax_p.set_xlabel("n")
    ax_p.set_ylabel("acceptance probability")
    ax_p.set_title("postselection cost")
    ax_p.legend()
    return _finish(fig, path)


def save_noise_scan_figure(rows, path: str) -> str:
    sources = []
    for row in rows:
        if row["source"] not in sources:
            sources.append(row["source"])
    n_rows = math.ceil(len(sources) / 2)
    fig, axes = plt.subplots(n_rows, 2, figsize=(9, 3.6 * n_rows),
                             squeeze=False)
    for ax, source in zip(axes.flat, sources):
        data = [r for r in rows if r["source"] == source]
        for n in sorted({r["num_qubits"] for r in data}):
            points = [r for r in data if r["num_qubits"] == n]
            strengths = [r["strength"] for r in points]
            ax.plot(strengths, [r["hellinger"] for r in points], "o-",
                    label=f"Hellinger, n={n}")
            ax.plot(strengths, [r["state_fidelity"] for r in points], "s--",
                    label=f"state fidelity, n={n}")
        ax.set_title(source)
        ax.set_xlabel("strength")
        ax.set_ylabel("fidelity")
        ax.legend(fontsize=8)
    for ax in axes.flat[len(sources):]:
        ax.set_visible(False)
    return _finish(fig, path)


def save_feedforward_figure(rows, path: str) -> str:
    labels = [f"({r['m']},{r['l']})" for r in rows]
    fig, ax = plt.subplots(figsize=(6.5, 4))
    ax.bar(labels, [r["frequency"] for r in rows])
    ax.axhline(rows[0]["expected_frequency"], color="k", linestyle="--",
               label="1 / d^2")
    ax.set_xlabel("correction class (m, l)")
    ax.set_ylabel("frequency")
    ax.set_title("feedforward outcome classes")
    ax.legend()
    return _finish(fig, path)


FIGURE_WRITERS = {
    "swap": save_swap_figure,
    "network": save_network_figure,
    "theta-sweep": save_theta_sweep_figure,
    "random-circuits": save_random_circuits_figure,
    "noise-scan": save_noise_scan_figure,
    "feedforward-demo": save_feedforward_figure,
}
