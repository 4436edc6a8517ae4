"""Matplotlib rendering of the report tables, written next to the CSVs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .scenario import ScenarioConfig
from .tasks import NS_PER_S

_CLASS_COLORS = {"firm": "tab:red", "soft": "tab:blue", "nonrt": "tab:gray"}


def render_response_time(rows, rolling, config: ScenarioConfig, path: Path) -> None:
    """Per-task response scatter with the 10 s rolling combined mean overlaid."""
    fig, ax = plt.subplots(figsize=(10, 4.5))
    for start_ns, end_ns, _svc in config.edge_windows:
        ax.axvspan(start_ns / NS_PER_S, end_ns / NS_PER_S, color="0.92", zorder=0)
    for cls in ("firm", "soft", "nonrt"):
        xs = [r[0] / NS_PER_S for r in rows if r[2] == cls]
        ys = [r[4] / 1e6 for r in rows if r[2] == cls]
        if xs:
            ax.plot(xs, ys, ".", ms=2, alpha=0.4, color=_CLASS_COLORS[cls], label=cls)
    xs = [t / NS_PER_S for t, _f, _s, c in rolling if c is not None]
    ys = [c for _t, _f, _s, c in rolling if c is not None]
    if xs:
        ax.plot(xs, ys, "-", lw=1.6, color="black", label="10 s rolling mean")
    ax.axhline(config.threshold_ns / 1e6, color="tab:green", lw=1, ls="--", label="threshold")
    for start_ns, end_ns, enabled in config.phases:
        if not enabled:
            ax.axvline(start_ns / NS_PER_S, color="tab:purple", lw=1, ls=":")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("response time (ms)")
    ax.set_xlim(0, config.horizon_ns / NS_PER_S)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_traffic(rows, path: Path) -> None:
    """Traffic versus firm-task rate, one line per (strategy, ratio)."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    series: dict[tuple[str, float], tuple[list, list]] = {}
    for f, kbits, strategy, ratio in rows:
        key = (strategy.value, float(ratio))
        series.setdefault(key, ([], []))
        series[key][0].append(f)
        series[key][1].append(float(kbits))
    styles = {"dynamic": "-", "cloud_only": "--", "no_offloading": ":"}
    for (strategy, ratio), (xs, ys) in sorted(series.items()):
        ax.plot(xs, ys, styles.get(strategy, "-"), label=f"{strategy} r={ratio}")
    ax.set_xlabel("firm tasks per second")
    ax.set_ylabel("metro/core traffic (Kbit/s)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_histograms(rows, bin_width_ns: int, path: Path) -> None:
    """One bar panel per switch hop, packet count versus delay bin."""
    hops = sorted({(r[0], r[1]) for r in rows})
    if not hops:
        hops = [(0, 0)]
    fig, axes = plt.subplots(1, len(hops), figsize=(3.2 * len(hops), 3.2), squeeze=False)
    width_ms = bin_width_ns / 1e6
    for ax, hop in zip(axes[0], hops):
        bins = [(r[2] / 1e6, r[3]) for r in rows if (r[0], r[1]) == hop]
        if bins:
            ax.bar([b for b, _c in bins], [c for _b, c in bins], width=width_ms * 0.9, align="edge")
        ax.set_title(f"SW{hop[0]} to SW{hop[1]}", fontsize=9)
        ax.set_xlabel("delay (ms)")
    axes[0][0].set_ylabel("packets")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
