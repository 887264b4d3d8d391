"""Static figures for a run log; decorative only, nothing reads them back."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, out: Path, name: str) -> Path:
    path = out / f"{name}.png"
    fig.tight_layout()
    fig.savefig(path, dpi=90)
    plt.close(fig)
    return path


def plot_log(log, out, scenario_id: str) -> list[Path]:
    out = Path(out)
    t = log.column("t")
    paths = []

    controls = [c for c in ("delta_th", "delta_e", "delta_a", "delta_r") if c in log]
    fig, axes = plt.subplots(len(controls), 1, sharex=True, figsize=(7, 1.8 * len(controls)))
    for ax, c in zip(np.atleast_1d(axes), controls):
        ax.plot(t, log.column(c), lw=0.8)
        ax.set_ylabel(c)
    np.atleast_1d(axes)[-1].set_xlabel("t (s)")
    paths.append(_save(fig, out, f"{scenario_id}_controls"))

    if "p" in log:
        fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7, 5))
        for ax, c in zip(axes, ("p", "q", "r")):
            ax.plot(t, np.degrees(log.column(c)), lw=0.8, label="actual")
            if f"{c}_dem" in log:
                ax.plot(t, np.degrees(log.column(f"{c}_dem")), "--", lw=0.8, label="demand")
            ax.set_ylabel(f"{c} (deg/s)")
        axes[0].legend(loc="upper right", fontsize=7)
        axes[-1].set_xlabel("t (s)")
        paths.append(_save(fig, out, f"{scenario_id}_rates"))

    nus = [c for c in log.columns if c.startswith("nu_") and not c.startswith("nu_sig_")]
    if nus:
        fig, axes = plt.subplots(len(nus), 1, sharex=True, figsize=(7, 1.6 * len(nus)))
        for ax, c in zip(np.atleast_1d(axes), nus):
            s = log.column("nu_sig_" + c[3:])
            ax.plot(t, log.column(c), lw=0.5)
            ax.plot(t, 2 * s, "r--", lw=0.6)
            ax.plot(t, -2 * s, "r--", lw=0.6)
            ax.set_ylabel(c[3:], fontsize=7)
        np.atleast_1d(axes)[-1].set_xlabel("t (s)")
        paths.append(_save(fig, out, f"{scenario_id}_innovations"))

    if "T_est" in log:
        fig, ax = plt.subplots(figsize=(7, 3))
        est, sig = log.column("T_est"), log.column("T_sig")
        ax.plot(t, log.column("thrust"), lw=0.8, label="applied")
        ax.plot(t, est, lw=0.8, label="estimate")
        ax.fill_between(t, est - 2 * sig, est + 2 * sig, alpha=0.2)
        if "thrust_upper" in log:
            ax.plot(t, log.column("thrust_upper"), ":", lw=0.8, label="ceiling")
        ax.set_ylabel("thrust (N)")
        ax.set_xlabel("t (s)")
        ax.legend(fontsize=7)
        paths.append(_save(fig, out, f"{scenario_id}_thrust"))

    fig, ax = plt.subplots(figsize=(7, 3))
    ax.plot(t, log.column("height"), lw=0.8, label="height")
    if "height_ref" in log:
        ax.plot(t, log.column("height_ref"), "--", lw=0.8, label="reference")
    ax.set_ylabel("height (m)")
    ax.set_xlabel("t (s)")
    ax.legend(fontsize=7)
    paths.append(_save(fig, out, f"{scenario_id}_height"))
    return paths
