"""Matplotlib rendering of experiment reports, saved next to the data files."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_nullifier_figure(result, path):
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    markers = {"squeeze": "o", "antisqueeze": "^"}
    for (port, kind), (vals, errs) in sorted(result.table.items()):
        ax.errorbar(
            result.steps, vals, yerr=errs, marker=markers[kind], ms=3.5,
            lw=1.0, label=f"{port} {kind}",
        )
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("step (turns)")
    ax.set_ylabel("noise power (dB)")
    ax.set_title("Nullifier and anti-squeezing noise")
    ax.legend(ncols=2, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_tomography_figure(result, path):
    names = list(result.points[0].params)
    a_vals = sorted({p.params[names[0]] for p in result.points})
    b_vals = sorted({p.params[names[1]] for p in result.points})
    grid = np.full((len(b_vals), len(a_vals)), np.nan)
    for p in result.points:
        i = b_vals.index(p.params[names[1]])
        j = a_vals.index(p.params[names[0]])
        grid[i, j] = 100.0 * p.error

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.5, 4.0))
    im = ax1.imshow(
        grid, origin="lower", aspect="auto",
        extent=(min(a_vals), max(a_vals), min(b_vals), max(b_vals)),
    )
    fig.colorbar(im, ax=ax1, label="Frobenius error (%)")
    ax1.set_xlabel(names[0])
    ax1.set_ylabel(names[1])
    ax1.set_title(
        f"{result.kind} grid: mean error "
        f"{100 * result.mean_error:.1f}% ({result.method})"
    )

    est = np.concatenate([p.s_est.ravel() for p in result.points])
    theory = np.concatenate([p.s_theory.ravel() for p in result.points])
    ax2.plot(theory, est, ".", ms=2.5, alpha=0.5)
    lim = max(1.0, np.max(np.abs(theory)))
    ax2.plot([-lim, lim], [-lim, lim], "k-", lw=0.8)
    ax2.set_xlabel("matrix entry, model")
    ax2.set_ylabel("matrix entry, estimated")
    ax2.set_title("entrywise agreement")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_teleport_figure(result, path):
    steps = np.asarray(result.steps, dtype=float)
    noise, noise_err = result.noise_summary()
    gain_x, gain_p = result.gain_arrays()

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.5, 4.0))
    ax1.errorbar(steps, 10 * np.log10(noise), marker="o", ms=4,
                 yerr=10 * noise_err / (noise * np.log(10)), lw=1.0,
                 label="simulated")
    ax1.plot(steps, 10 * np.log10(result.theory), "-", label="model e$^{-2r}$(1+m)")
    ax1.plot(steps, 10 * np.log10(result.benchmark), "k--", label="classical benchmark")
    ax1.axhline(0.0, color="k", lw=0.8)
    if steps.max() > 20 and steps.min() >= 0:
        ax1.set_xscale("symlog", linthresh=1)
    ax1.set_xlabel("teleportation steps m")
    ax1.set_ylabel("witness noise power (dB)")
    ax1.set_title(f"{result.kind} teleportation")
    ax1.legend(fontsize=8)

    ax2.plot(steps, gain_x.mean(axis=1), "o-", ms=4, label="gain x (mean over modes)")
    ax2.plot(steps, gain_p.mean(axis=1), "s-", ms=4, label="gain p (mean over modes)")
    ax2.fill_between(steps, gain_x.min(axis=1), gain_x.max(axis=1), alpha=0.2)
    ax2.axhline(1.0, color="k", lw=0.8)
    ax2.set_xlabel("teleportation steps m")
    ax2.set_ylabel("gain")
    ax2.set_ylim(0.9, 1.1)
    ax2.set_title("teleportation gains")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_route_figure(result, path):
    n = len(result.keys_sd)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.5, 4.0))
    ax1.stem(np.arange(n), result.keys_sd)
    ax1.set_xlabel("input mode")
    ax1.set_ylabel("displacement (vacuum SD)")
    ax1.set_title("inputs (random order)")

    by_position = np.empty(n)
    by_position[result.realized] = result.out_means
    ax2.errorbar(
        np.arange(n), by_position / np.sqrt(0.5),
        yerr=result.out_stderr / np.sqrt(0.5) * 3, fmt="o", ms=3,
    )
    verdict = "monotone" if result.sorted_ok else "NOT monotone"
    ax2.set_xlabel("output position")
    ax2.set_ylabel("output mean (vacuum SD)")
    ax2.set_title(f"routed {result.order}: {verdict}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
