"""Comparison figures from logs written by ``run_all.py``.

Usage: python3 scripts/reproduce_figures.py [--runs runs]
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ftcsim import aircraft as ac  # noqa: E402
from ftcsim.simkit import TimeSeriesLog  # noqa: E402


def _load(runs: Path, name: str):
    path = runs / f"{name}.csv"
    return TimeSeriesLog.read(path) if path.exists() else None


def engine_losses(runs: Path, out: Path) -> None:
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7, 7))
    for name in ("engine_65", "engine_70"):
        log = _load(runs, name)
        if log is None:
            continue
        t = log.column("t")
        axes[0].plot(t, log.column("height"), lw=0.8, label=name)
        axes[1].plot(t, log.column("V_t"), lw=0.8, label=name)
        axes[2].plot(t, log.column("T_est"), lw=0.8, label=f"{name} estimate")
        axes[2].plot(t, log.column("thrust"), "--", lw=0.6, label=f"{name} true")
    if log is not None:
        axes[0].plot(t, log.column("height_ref"), "k:", lw=0.8, label="reference")
    for ax, lab in zip(axes, ("height (m)", "V_T (m/s)", "thrust (N)")):
        ax.set_ylabel(lab)
        ax.legend(fontsize=7)
    axes[-1].set_xlabel("t (s)")
    fig.tight_layout()
    fig.savefig(out / "engine_losses.png", dpi=90)
    plt.close(fig)


def elevator_ftc(runs: Path, out: Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 3))
    for name in ("elevator_70_oracle", "elevator_70_none"):
        log = _load(runs, name)
        if log is None:
            continue
        t = log.column("t")
        ax.plot(t, np.degrees(log.column("q") - log.column("q_dem")), lw=0.8, label=name)
    ax.set_ylabel("q error (deg/s)")
    ax.set_xlabel("t (s)")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out / "elevator_ftc.png", dpi=90)
    plt.close(fig)


def observability(runs: Path, out: Path) -> None:
    log = _load(runs, "observability_30-state")
    if log is None:
        return
    t = log.column("t")
    fig, ax = plt.subplots(figsize=(7, 4))
    for name in ac.DERIVATIVE_NAMES:
        if f"{name}_est" in log:
            ax.plot(t, log.column(f"{name}_est"), lw=0.6)
    ax.axhline(1.0, color="k", lw=0.8)
    ax.set_ylabel("normalized derivative estimate")
    ax.set_xlabel("t (s)")
    fig.tight_layout()
    fig.savefig(out / "observability_30_state.png", dpi=90)
    plt.close(fig)


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--runs", default="runs")
    p.add_argument("--out", default=None)
    args = p.parse_args()
    runs = Path(args.runs)
    out = Path(args.out or runs / "figures")
    out.mkdir(parents=True, exist_ok=True)
    engine_losses(runs, out)
    elevator_ftc(runs, out)
    observability(runs, out)
    print(f"figures written to {out}")


if __name__ == "__main__":
    main()
