"""Experiment drivers: run scenarios and emit CSV tables, JSON summaries, and
figures rendered next to the delimited output.

Per-task response rows come from the telemetry records; the summary slices
them by offloading phase and by scheduled high-load window, skipping one
notification period after each window opens so the reported means describe the
converged regime. The transient before convergence is reported separately.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .scenario import ScenarioConfig
from .simnet import SimulationResult, TraceEventType, run_scenario, write_trace_csv
from .tasks import NS_PER_S, NodeKind, PacketKind, TaskClass, fmt_ms, ms_from_ns
from .telemetry import build_histograms, collect_hop_observations, publish_feed
from .traffic import Strategy, metro_core_traffic

ROLLING_WINDOW_NS = 10 * NS_PER_S

_STRATEGY_ORDER = (Strategy.DYNAMIC, Strategy.CLOUD_ONLY, Strategy.NO_OFFLOADING)


def task_classes_by_id(result: SimulationResult) -> dict[int, TaskClass]:
    """task_id -> class, recovered from the reported task-packet snapshots."""
    classes: dict[int, TaskClass] = {}
    for _telemetry_node, report in result.reports:
        snapshot = report.snapshot
        if snapshot.kind is PacketKind.TASK_UP and snapshot.task_id not in classes:
            classes[snapshot.task_id] = snapshot.task_class
    return classes


def response_rows(result: SimulationResult) -> list[tuple[int, int, str, str, int]]:
    """(completed_at_ns, task_id, class, destination, response_ns), by completion."""
    classes = task_classes_by_id(result)
    rows = [
        (
            rec.completed_at_ns,
            rec.task_id,
            classes[rec.task_id].label,
            rec.destination.label,
            rec.response_time_ns,
        )
        for rec in result.records
    ]
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows


def write_responses_csv(rows, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["completed_at_ms", "task_id", "class", "destination", "response_time_ms"])
        for completed_ns, task_id, cls, destination, response_ns in rows:
            writer.writerow([fmt_ms(completed_ns), task_id, cls, destination, fmt_ms(response_ns)])


def rolling_rows(rows, horizon_ns: int) -> list[tuple[int, float | None, float | None, float | None]]:
    """Trailing 10 s means sampled once per second: (t_ns, firm, soft, combined)."""
    def mean_ms(values):
        return ms_from_ns(round(sum(values) / len(values))) if values else None

    out = []
    low = 0
    high = 0
    window: list[tuple[int, str, int]] = [(r[0], r[2], r[4]) for r in rows]
    t = NS_PER_S
    while t <= horizon_ns:
        while high < len(window) and window[high][0] <= t:
            high += 1
        while low < high and window[low][0] <= t - ROLLING_WINDOW_NS:
            low += 1
        chunk = window[low:high]
        firm = [resp for (_t, cls, resp) in chunk if cls == "firm"]
        soft = [resp for (_t, cls, resp) in chunk if cls == "soft"]
        combined = [resp for (_t, _cls, resp) in chunk]
        out.append((t, mean_ms(firm), mean_ms(soft), mean_ms(combined)))
        t += NS_PER_S
    return out


def write_rolling_csv(rolling, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t_ms", "firm_mean_ms", "soft_mean_ms", "combined_mean_ms"])
        for t_ns, firm, soft, combined in rolling:
            writer.writerow(
                [
                    fmt_ms(t_ns),
                    "" if firm is None else f"{firm:.3f}",
                    "" if soft is None else f"{soft:.3f}",
                    "" if combined is None else f"{combined:.3f}",
                ]
            )


def _enabled_over(config: ScenarioConfig, start_ns: int, end_ns: int) -> bool | None:
    """True/False when one offloading setting covers [start, end); None if mixed."""
    states = set()
    covered = 0
    for phase_start, phase_end, enabled in config.phases:
        lo, hi = max(phase_start, start_ns), min(phase_end, end_ns)
        if lo < hi:
            states.add(enabled)
            covered += hi - lo
    if covered < end_ns - start_ns:
        states.add(False)  # uncovered time counts as offloading off
    if len(states) > 1:
        return None
    return states.pop()


def _stats(selected) -> dict:
    by_class: dict[str, list[int]] = {}
    for _t, _tid, cls, _dest, resp in selected:
        by_class.setdefault(cls, []).append(resp)
    entry: dict = {}
    for cls in ("firm", "soft", "nonrt"):
        values = by_class.get(cls, [])
        entry[f"{cls}_count"] = len(values)
        entry[f"{cls}_mean_ms"] = ms_from_ns(round(sum(values) / len(values))) if values else None
    all_values = [resp for *_rest, resp in selected]
    entry["combined_count"] = len(all_values)
    entry["combined_mean_ms"] = (
        ms_from_ns(round(sum(all_values) / len(all_values))) if all_values else None
    )
    return entry


def compute_summary(config: ScenarioConfig, result: SimulationResult, rows) -> dict:
    settle_ns = config.notify_period_ns
    phases = []
    for start_ns, end_ns, enabled in config.phases:
        selected = [r for r in rows if start_ns <= r[0] < end_ns]
        phases.append(
            {
                "start_s": start_ns / NS_PER_S,
                "end_s": end_ns / NS_PER_S,
                "offloading": enabled,
                **_stats(selected),
            }
        )

    windows = []
    enabled_pool = []
    disabled_pool = []
    transients = []
    for start_ns, end_ns, _service_ns in config.edge_windows:
        enabled = _enabled_over(config, start_ns, end_ns)
        selected = [r for r in rows if start_ns + settle_ns <= r[0] < end_ns]
        entry = {
            "start_s": start_ns / NS_PER_S,
            "end_s": end_ns / NS_PER_S,
            "offloading": enabled,
            "settle_s": settle_ns / NS_PER_S,
            **_stats(selected),
        }
        windows.append(entry)
        if enabled is True:
            enabled_pool.extend(selected)
            early_soft = [
                r for r in rows if start_ns <= r[0] < start_ns + settle_ns and r[2] == "soft"
            ]
            transients.append(
                {
                    "window_start_s": start_ns / NS_PER_S,
                    "within_s": settle_ns / NS_PER_S,
                    "soft_count": len(early_soft),
                    "max_soft_response_ms": (
                        ms_from_ns(max(r[4] for r in early_soft)) if early_soft else None
                    ),
                }
            )
        elif enabled is False:
            disabled_pool.extend(selected)

    return {
        "scenario": config.name,
        "seed": result.seed,
        "tasks_created": result.tasks_created,
        "records": len(result.records),
        "duplicate_reports": result.duplicate_reports,
        "evicted_reports": result.evicted_reports,
        "phases": phases,
        "high_load_windows": windows,
        "high_load_enabled": _stats(enabled_pool),
        "high_load_disabled": _stats(disabled_pool),
        "transients": transients,
    }


def run_fig5(
    config: ScenarioConfig,
    seed: int | None,
    out_dir: Path,
    make_plots: bool = True,
    write_trace: bool = False,
) -> tuple[SimulationResult, dict]:
    """Run a response-time scenario and emit responses.csv, rolling.csv,
    summary.json, feed.json (and optionally trace.csv plus a rendered figure)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = run_scenario(config, seed)
    rows = response_rows(result)
    write_responses_csv(rows, out_dir / "responses.csv")
    rolling = rolling_rows(rows, config.horizon_ns)
    write_rolling_csv(rolling, out_dir / "rolling.csv")
    summary = compute_summary(config, result, rows)
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    feed = publish_feed(result.records, result.metrics)
    (out_dir / "feed.json").write_text(json.dumps(feed, indent=2) + "\n", encoding="utf-8")
    if write_trace:
        write_trace_csv(result.trace, out_dir / "trace.csv")
    if make_plots:
        from . import plots

        plots.render_response_time(rows, rolling, config, out_dir / "response_time.png")
    return result, summary


def traffic_rows(config: ScenarioConfig, f_max: int = 120):
    """(f, kbits, strategy, ratio) for f = 0..f_max across strategies and ratios."""
    rows = []
    for ratio in config.traffic_ratios:
        params = config.traffic_params(ratio)
        for strategy in _STRATEGY_ORDER:
            for f in range(f_max + 1):
                rows.append((f, metro_core_traffic(strategy, f, params), strategy, ratio))
    return rows


def write_traffic_csv(rows, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["f", "traffic_kbits_per_s", "strategy", "ratio"])
        for f, kbits, strategy, ratio in rows:
            writer.writerow([f, f"{float(kbits):.3f}", strategy.value, str(float(ratio))])


def run_fig6(config: ScenarioConfig, out_dir: Path, make_plots: bool = True):
    """Emit the analytic traffic sweep as traffic.csv (plus figure)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = traffic_rows(config)
    write_traffic_csv(rows, out_dir / "traffic.csv")
    if make_plots:
        from . import plots

        plots.render_traffic(rows, out_dir / "traffic.png")
    return rows


def histogram_rows(config: ScenarioConfig, result: SimulationResult):
    """(hop_from, hop_to, bin_lower_ns, count) rows sorted by hop and bin."""
    observations = collect_hop_observations(report for _node, report in result.reports)
    histograms = build_histograms(observations, config.histogram_bin_ns)
    rows = []
    for hop in sorted(histograms):
        hist = histograms[hop]
        for index in sorted(hist.counts):
            rows.append((hop[0], hop[1], index * hist.bin_width_ns, hist.counts[index]))
    return rows


def write_histograms_csv(rows, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["hop_from", "hop_to", "bin_lower_ms", "count"])
        for hop_from, hop_to, bin_lower_ns, count in rows:
            writer.writerow([hop_from, hop_to, fmt_ms(bin_lower_ns), count])


def run_histograms(
    config: ScenarioConfig,
    seed: int | None,
    out_dir: Path,
    make_plots: bool = True,
    result: SimulationResult | None = None,
):
    """Run (or reuse) a scenario and emit per-hop delay histograms."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if result is None:
        result = run_scenario(config, seed)
    rows = histogram_rows(config, result)
    write_histograms_csv(rows, out_dir / "histograms.csv")
    if make_plots:
        from . import plots

        plots.render_histograms(rows, config.histogram_bin_ns, out_dir / "hop_delays.png")
    return rows


def measured_metro_core_kbits_per_s(result: SimulationResult) -> float:
    """Payload bits/s observed crossing into the metro/core segment (arrivals at
    switch 3 travelling away from the terminals), in Kbits/s."""
    config = result.config
    bits = 0
    for time_ns, node, event, _task_id, detail in result.trace:
        if (
            node.kind is NodeKind.SWITCH
            and node.index == 3
            and event is TraceEventType.PACKET_ARRIVED
        ):
            if detail.startswith("kind=taskup"):
                bits += config.task_bits
            elif detail.startswith("kind=sync"):
                bits += config.sync_bits
    return bits / 1000 / (config.horizon_ns / NS_PER_S)
