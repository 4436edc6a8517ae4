"""Scenario configuration: flat JSON schema, strict validation, built-in presets.

Two scenarios ship with the package: ``fig5`` (the dynamic-offloading
response-time experiment: 25 ms threshold, scheduled edge high-load windows,
offloading switched off partway through) and ``fig6`` (the parameter set for
the analytic traffic sweep). Any other name is treated as a path to a JSON
file using the same flat schema; unknown keys are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .tasks import NS_PER_S, ns_from_ms, ns_from_s
from .traffic import TrafficParams

BUILTIN_SCENARIOS = ("fig5", "fig6")


class ScenarioError(ValueError):
    pass


@dataclass(slots=True)
class ScenarioConfig:
    """Validated experiment description; all times are integer nanoseconds."""

    horizon_ns: int
    seed: int = 1
    terminals: int = 1
    arrival_mode: str = "poisson"
    firm_rate: float = 20.0
    soft_rate: float = 20.0
    nonrt_rate: float = 0.0
    edge_default_service_ns: int = ns_from_ms(1.0)
    edge_windows: tuple[tuple[int, int, int], ...] = ()
    cloud_default_service_ns: int = ns_from_ms(20.0)
    cloud_windows: tuple[tuple[int, int, int], ...] = ()
    edge_capacity: int | None = 100
    cloud_capacity: int | None = None
    edge_fifo: bool = False
    cloud_fifo: bool = False
    threshold_ns: int = ns_from_ms(25.0)
    notify_period_ns: int = ns_from_ms(500.0)
    estimator_window: int = 10
    phases: tuple[tuple[int, int, bool], ...] = ()
    sync_period_ns: int = ns_from_ms(500.0)
    task_bits: int = 10_000
    sync_bits: int = 10_000
    notify_bits: int = 1_000
    result_bits: int = 0
    traffic_ratios: tuple[float, ...] = (1.0, 0.5, 3.0)
    delay_terminal_sw1_ns: int = ns_from_ms(0.25)
    delay_sw1_sw2_ns: int = ns_from_ms(0.5)
    delay_sw2_edge_ns: int = ns_from_ms(0.1)
    delay_sw2_sw3_ns: int = ns_from_ms(2.0)
    delay_sw3_cloud_ns: int = ns_from_ms(0.1)
    histogram_bin_ns: int = ns_from_ms(0.1)
    eviction_ns: int = 10 * NS_PER_S
    name: str = "custom"

    def validate(self) -> None:
        if self.horizon_ns <= 0:
            raise ScenarioError(f"horizon must be positive, got {self.horizon_ns} ns")
        if self.terminals < 1:
            raise ScenarioError(f"terminals must be >= 1, got {self.terminals}")
        if self.arrival_mode not in ("poisson", "deterministic"):
            raise ScenarioError(f"arrival_mode must be poisson|deterministic, got {self.arrival_mode!r}")
        for name in ("firm_rate", "soft_rate", "nonrt_rate"):
            if getattr(self, name) < 0:
                raise ScenarioError(f"{name} must be >= 0")
        for name in (
            "threshold_ns",
            "notify_period_ns",
            "sync_period_ns",
            "edge_default_service_ns",
            "cloud_default_service_ns",
            "histogram_bin_ns",
            "eviction_ns",
        ):
            if getattr(self, name) <= 0:
                raise ScenarioError(f"{name} must be positive")
        for name in ("task_bits", "sync_bits", "notify_bits"):
            if getattr(self, name) <= 0:
                raise ScenarioError(f"{name} must be positive")
        if self.result_bits < 0:
            raise ScenarioError("result_bits must be >= 0")
        if self.estimator_window < 1:
            raise ScenarioError(f"estimator_window must be >= 1, got {self.estimator_window}")
        for name in ("edge_capacity", "cloud_capacity"):
            cap = getattr(self, name)
            if cap is not None and cap < 1:
                raise ScenarioError(f"{name} must be >= 1 or null, got {cap}")
        for name in (
            "delay_terminal_sw1_ns",
            "delay_sw1_sw2_ns",
            "delay_sw2_edge_ns",
            "delay_sw2_sw3_ns",
            "delay_sw3_cloud_ns",
        ):
            if getattr(self, name) < 0:
                raise ScenarioError(f"{name} must be >= 0")
        _check_windows("edge_service_windows", self.edge_windows)
        _check_windows("cloud_service_windows", self.cloud_windows)
        _check_phases(self.phases)
        if not self.traffic_ratios:
            raise ScenarioError("traffic_ratios must not be empty")
        if any(r < 0 for r in self.traffic_ratios):
            raise ScenarioError("traffic_ratios must be >= 0")

    def enabled_at(self, t_ns: int) -> bool:
        for start, end, enabled in self.phases:
            if start <= t_ns < end:
                return enabled
        return False

    def traffic_params(self, ratio: float) -> TrafficParams:
        if self.edge_capacity is None:
            raise ScenarioError("traffic model requires a bounded edge capacity")
        return TrafficParams(
            capacity_tasks_per_s=self.edge_capacity,
            task_bits=self.task_bits,
            sync_period_s=Fraction(self.sync_period_ns, NS_PER_S),
            sync_bits=self.sync_bits,
            soft_ratio=ratio,
        )


def _check_windows(name: str, windows: tuple[tuple[int, int, int], ...]) -> None:
    previous_end = None
    for i, (start, end, service) in enumerate(windows):
        if end <= start:
            raise ScenarioError(f"{name}[{i}]: end must be greater than start")
        if start < 0:
            raise ScenarioError(f"{name}[{i}]: start must be >= 0")
        if service <= 0:
            raise ScenarioError(f"{name}[{i}]: service time must be positive")
        if previous_end is not None and start < previous_end:
            raise ScenarioError(f"{name}[{i}]: windows must be sorted and non-overlapping")
        previous_end = end


def _check_phases(phases: tuple[tuple[int, int, bool], ...]) -> None:
    previous_end = None
    for i, (start, end, _enabled) in enumerate(phases):
        if end <= start:
            raise ScenarioError(f"offload_phases[{i}]: end must be greater than start")
        if start < 0:
            raise ScenarioError(f"offload_phases[{i}]: start must be >= 0")
        if previous_end is not None and start < previous_end:
            raise ScenarioError(f"offload_phases[{i}]: phases must be sorted and non-overlapping")
        previous_end = end


# JSON key -> (ScenarioConfig attribute, converter). Times carry their unit in
# the key name; converters turn them into integer nanoseconds.
_SCHEMA = {
    "horizon_s": ("horizon_ns", ns_from_s),
    "seed": ("seed", int),
    "terminals": ("terminals", int),
    "arrival_mode": ("arrival_mode", str),
    "firm_rate_per_s": ("firm_rate", float),
    "soft_rate_per_s": ("soft_rate", float),
    "nonrt_rate_per_s": ("nonrt_rate", float),
    "edge_default_service_ms": ("edge_default_service_ns", ns_from_ms),
    "edge_service_windows": ("edge_windows", lambda v: _windows_from_json("edge_service_windows", v)),
    "cloud_default_service_ms": ("cloud_default_service_ns", ns_from_ms),
    "cloud_service_windows": ("cloud_windows", lambda v: _windows_from_json("cloud_service_windows", v)),
    "edge_capacity_tasks_per_s": ("edge_capacity", lambda v: None if v is None else int(v)),
    "cloud_capacity_tasks_per_s": ("cloud_capacity", lambda v: None if v is None else int(v)),
    "edge_fifo": ("edge_fifo", bool),
    "cloud_fifo": ("cloud_fifo", bool),
    "threshold_ms": ("threshold_ns", ns_from_ms),
    "notify_period_ms": ("notify_period_ns", ns_from_ms),
    "estimator_window": ("estimator_window", int),
    "offload_phases": ("phases", lambda v: _phases_from_json(v)),
    "sync_period_ms": ("sync_period_ns", ns_from_ms),
    "task_bits": ("task_bits", int),
    "sync_bits": ("sync_bits", int),
    "notify_bits": ("notify_bits", int),
    "result_bits": ("result_bits", int),
    "traffic_ratios": ("traffic_ratios", lambda v: tuple(float(r) for r in v)),
    "delay_terminal_sw1_ms": ("delay_terminal_sw1_ns", ns_from_ms),
    "delay_sw1_sw2_ms": ("delay_sw1_sw2_ns", ns_from_ms),
    "delay_sw2_edge_ms": ("delay_sw2_edge_ns", ns_from_ms),
    "delay_sw2_sw3_ms": ("delay_sw2_sw3_ns", ns_from_ms),
    "delay_sw3_cloud_ms": ("delay_sw3_cloud_ns", ns_from_ms),
    "histogram_bin_ms": ("histogram_bin_ns", ns_from_ms),
    "report_eviction_s": ("eviction_ns", ns_from_s),
}


def _windows_from_json(name: str, value) -> tuple[tuple[int, int, int], ...]:
    windows = []
    for i, item in enumerate(value):
        if not isinstance(item, (list, tuple)) or len(item) != 3:
            raise ScenarioError(f"{name}[{i}] must be [start_s, end_s, service_ms]")
        start_s, end_s, service_ms = item
        windows.append((ns_from_s(start_s), ns_from_s(end_s), ns_from_ms(service_ms)))
    return tuple(windows)


def _phases_from_json(value) -> tuple[tuple[int, int, bool], ...]:
    phases = []
    for i, item in enumerate(value):
        if not isinstance(item, (list, tuple)) or len(item) != 3 or not isinstance(item[2], bool):
            raise ScenarioError(f"offload_phases[{i}] must be [start_s, end_s, enabled]")
        start_s, end_s, enabled = item
        phases.append((ns_from_s(start_s), ns_from_s(end_s), enabled))
    return tuple(phases)


def scenario_from_dict(data: dict, name: str = "custom") -> ScenarioConfig:
    """Build and validate a config from a flat JSON-style dict (strict keys)."""
    unknown = sorted(set(data) - set(_SCHEMA))
    if unknown:
        raise ScenarioError(f"unknown scenario keys: {', '.join(unknown)}")
    if "horizon_s" not in data:
        raise ScenarioError("scenario requires horizon_s")
    kwargs = {"name": name}
    for key, value in data.items():
        attr, convert = _SCHEMA[key]
        try:
            kwargs[attr] = convert(value)
        except ScenarioError:
            raise
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"bad value for {key}: {value!r} ({exc})") from exc
    config = ScenarioConfig(**kwargs)
    config.validate()
    return config


def scenario_to_dict(config: ScenarioConfig) -> dict:
    """Flat JSON form of a config (inverse of scenario_from_dict)."""
    ms = lambda ns: ns / 1_000_000
    s = lambda ns: ns / NS_PER_S
    return {
        "horizon_s": s(config.horizon_ns),
        "seed": config.seed,
        "terminals": config.terminals,
        "arrival_mode": config.arrival_mode,
        "firm_rate_per_s": config.firm_rate,
        "soft_rate_per_s": config.soft_rate,
        "nonrt_rate_per_s": config.nonrt_rate,
        "edge_default_service_ms": ms(config.edge_default_service_ns),
        "edge_service_windows": [[s(a), s(b), ms(svc)] for a, b, svc in config.edge_windows],
        "cloud_default_service_ms": ms(config.cloud_default_service_ns),
        "cloud_service_windows": [[s(a), s(b), ms(svc)] for a, b, svc in config.cloud_windows],
        "edge_capacity_tasks_per_s": config.edge_capacity,
        "cloud_capacity_tasks_per_s": config.cloud_capacity,
        "edge_fifo": config.edge_fifo,
        "cloud_fifo": config.cloud_fifo,
        "threshold_ms": ms(config.threshold_ns),
        "notify_period_ms": ms(config.notify_period_ns),
        "estimator_window": config.estimator_window,
        "offload_phases": [[s(a), s(b), enabled] for a, b, enabled in config.phases],
        "sync_period_ms": ms(config.sync_period_ns),
        "task_bits": config.task_bits,
        "sync_bits": config.sync_bits,
        "notify_bits": config.notify_bits,
        "result_bits": config.result_bits,
        "traffic_ratios": list(config.traffic_ratios),
        "delay_terminal_sw1_ms": ms(config.delay_terminal_sw1_ns),
        "delay_sw1_sw2_ms": ms(config.delay_sw1_sw2_ns),
        "delay_sw2_edge_ms": ms(config.delay_sw2_edge_ns),
        "delay_sw2_sw3_ms": ms(config.delay_sw2_sw3_ns),
        "delay_sw3_cloud_ms": ms(config.delay_sw3_cloud_ns),
        "histogram_bin_ms": ms(config.histogram_bin_ns),
        "report_eviction_s": s(config.eviction_ns),
    }


# Experiment presets. fig5: 25 ms threshold, edge service pinned near 40 ms in
# four scheduled windows, cloud at 20 ms, offloading active only for the first
# 408 s of the 680 s horizon. fig6: the analytic sweep parameter set.
_FIG5 = {
    "horizon_s": 680.0,
    "seed": 1,
    "terminals": 1,
    "arrival_mode": "poisson",
    "firm_rate_per_s": 20.0,
    "soft_rate_per_s": 20.0,
    "nonrt_rate_per_s": 0.0,
    "edge_default_service_ms": 1.0,
    "edge_service_windows": [
        [59.0, 127.0, 40.0],
        [249.0, 306.0, 40.0],
        [452.0, 517.0, 40.0],
        [587.0, 656.0, 40.0],
    ],
    "cloud_default_service_ms": 20.0,
    "edge_capacity_tasks_per_s": 100,
    "threshold_ms": 25.0,
    "notify_period_ms": 500.0,
    "estimator_window": 10,
    "offload_phases": [[0.0, 408.0, True], [408.0, 680.0, False]],
    "sync_period_ms": 500.0,
    "task_bits": 10000,
    "sync_bits": 10000,
}

_FIG6 = {
    "horizon_s": 10.0,
    "edge_capacity_tasks_per_s": 100,
    "task_bits": 10000,
    "sync_bits": 10000,
    "sync_period_ms": 500.0,
    "traffic_ratios": [1.0, 0.5, 3.0],
}


def load_scenario(source: str | Path) -> ScenarioConfig:
    """Load a built-in scenario by name or a JSON scenario file by path."""
    if isinstance(source, str) and source == "fig5":
        return scenario_from_dict(dict(_FIG5), name="fig5")
    if isinstance(source, str) and source == "fig6":
        return scenario_from_dict(dict(_FIG6), name="fig6")
    path = Path(source)
    if not path.exists():
        raise ScenarioError(
            f"scenario not found: {source!r} (not a file, and not one of {', '.join(BUILTIN_SCENARIOS)})"
        )
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: parse error at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: scenario must be a JSON object")
    return scenario_from_dict(data, name=path.stem)
