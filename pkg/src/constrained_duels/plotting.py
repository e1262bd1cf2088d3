"""Cumulative-reward figures (SVG by default)."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import DuelError  # noqa: E402

POLICY_STYLE = {
    "vigilant": dict(color="#1b6ca8", label="Vigilant D-EXP3"),
    "dexp3": dict(color="#d1495b", label="D-EXP3"),
    "dts": dict(color="#66a182", label="D-TS"),
    "static-lp": dict(color="#6c6c6c", label="static LP", linestyle="--"),
}

RC = {
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    # Fixed salt keeps SVG element ids stable between runs.
    "svg.hashsalt": "constrained-duels",
}


def figure_size(width: float = 5.0) -> tuple[float, float]:
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    return width, width * golden


def emit_plot(table, path: str | Path, kind: str = "borda", title: Optional[str] = None) -> None:
    """Mean cumulative reward per policy with a +-1 std band across seeds.

    Each curve runs to the latest stopping round among that policy's seeds,
    so early-stopping policies visibly end before the horizon.
    """
    if not table.traces:
        raise DuelError("cannot plot an empty results table")
    path = Path(path)
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=figure_size())
        for pol in table.traces:
            mean, std = table.curve(pol, kind)
            rounds = range(1, mean.size + 1)
            style = dict(POLICY_STYLE.get(pol, dict(label=pol)))
            line, = ax.plot(rounds, mean, lw=1.5, **style)
            ax.fill_between(rounds, mean - std, mean + std, color=line.get_color(), alpha=0.2, lw=0)
        ax.set_xlabel("round")
        ax.set_ylabel("cumulative Borda reward" if kind == "borda" else f"cumulative {kind} reward")
        ax.set_xlim(0, table.T)
        ax.set_title(title or table.instance_name)
        ax.legend(frameon=False, loc="upper left")
        fig.tight_layout()
        try:
            fig.savefig(path, metadata={"Date": None} if path.suffix == ".svg" else None)
        except OSError as exc:
            raise DuelError(f"cannot write figure to {path}: {exc}") from exc
        finally:
            plt.close(fig)


def emit_regret_plot(horizons, series: dict, path: str | Path) -> None:
    """Mean regret against horizon on log-log axes, one line per policy."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=figure_size())
        for pol, values in series.items():
            style = dict(POLICY_STYLE.get(pol, dict(label=pol)))
            ax.loglog(horizons, values, marker="o", lw=1.5, **style)
        ax.set_xlabel("horizon T")
        ax.set_ylabel("mean Borda regret")
        ax.legend(frameon=False)
        fig.tight_layout()
        try:
            fig.savefig(path, metadata={"Date": None})
        finally:
            plt.close(fig)
