"""Closed-form metro/core traffic model for three offloading strategies.

With firm rate f (tasks/s), soft-to-firm ratio r, edge capacity C (tasks/s),
task size b (bits) and sync size/period, the traffic crossing the metro/core
boundary in Kbits/s is:

    cloud_only    (f + r*f) * b / 1000
    dynamic       spill(f) * b / 1000 + sync_bits / sync_period / 1000
    no_offloading 0

where spill(f) = min(r*f, max(0, f + r*f - C)): soft tasks divert to the cloud
only once total demand exceeds edge capacity; firm tasks never divert. All
arithmetic is exact rational.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

Rational = int | Fraction


def _as_fraction(value: float | int | str | Fraction, name: str) -> Fraction:
    # route floats through str() so 0.5 becomes 1/2, not its binary expansion
    if isinstance(value, float):
        value = str(value)
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad value for {name}: {value!r}") from exc


class Strategy(enum.Enum):
    DYNAMIC = "dynamic"
    CLOUD_ONLY = "cloud_only"
    NO_OFFLOADING = "no_offloading"


@dataclass(frozen=True, slots=True)
class TrafficParams:
    capacity_tasks_per_s: int = 100
    task_bits: int = 10_000
    sync_period_s: Fraction = Fraction(1, 2)
    sync_bits: int = 10_000
    soft_ratio: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        object.__setattr__(self, "sync_period_s", _as_fraction(self.sync_period_s, "sync_period_s"))
        object.__setattr__(self, "soft_ratio", _as_fraction(self.soft_ratio, "soft_ratio"))
        if self.capacity_tasks_per_s < 1:
            raise ValueError(f"capacity must be >= 1, got {self.capacity_tasks_per_s}")
        if self.task_bits <= 0:
            raise ValueError(f"task_bits must be positive, got {self.task_bits}")
        if self.sync_period_s <= 0:
            raise ValueError(f"sync_period_s must be positive, got {self.sync_period_s}")
        if self.soft_ratio < 0:
            raise ValueError(f"soft_ratio must be >= 0, got {self.soft_ratio}")

    @property
    def sync_kbits_per_s(self) -> Fraction:
        return Fraction(self.sync_bits) / self.sync_period_s / 1000


def cloud_bound_soft_rate(firm_rate: Rational, params: TrafficParams) -> Fraction:
    """Soft tasks/s diverted to the cloud at firm rate f: min(r*f, max(0, f+r*f-C))."""
    f = Fraction(firm_rate)
    if f < 0:
        raise ValueError(f"firm rate must be >= 0, got {firm_rate}")
    soft = params.soft_ratio * f
    overflow = f + soft - params.capacity_tasks_per_s
    return min(soft, max(Fraction(0), overflow))


def metro_core_traffic(strategy: Strategy, firm_rate: Rational, params: TrafficParams) -> Fraction:
    """Metro/core traffic in Kbits/s for one strategy at firm rate f."""
    f = Fraction(firm_rate)
    if f < 0:
        raise ValueError(f"firm rate must be >= 0, got {firm_rate}")
    if strategy is Strategy.NO_OFFLOADING:
        return Fraction(0)
    if strategy is Strategy.CLOUD_ONLY:
        return (f + params.soft_ratio * f) * params.task_bits / 1000
    spilled = cloud_bound_soft_rate(f, params)
    return spilled * params.task_bits / 1000 + params.sync_kbits_per_s


def sweep(
    strategy: Strategy, firm_rates: Iterable[Rational], params: TrafficParams
) -> list[tuple[Fraction, Fraction]]:
    """Pointwise (f, traffic) table over an ascending, non-empty rate range."""
    rates = [Fraction(f) for f in firm_rates]
    if not rates:
        raise ValueError("firm rate range is empty")
    if any(b <= a for a, b in zip(rates, rates[1:])):
        raise ValueError("firm rate range must be strictly ascending")
    return [(f, metro_core_traffic(strategy, f, params)) for f in rates]
