"""Minimum-commitment scheduling of support-mode units.

Offline planning works on a small table per unit: how much it can inject
(system base) and how sensitive the frequency nadir is to that injection.
Committing a set of units is predicted to lift the nadir by the sum of
injection * sensitivity, which the near-affine frequency response justifies;
the scheduler then looks for the smallest set that covers a required uplift.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

from .cosim import event_nadir_with_injection
from .errors import ConfigError, DomainError, ProbeTooLargeError
from .sfr import SfrParams
from .surge import SurgePlan

#: Above this fleet size exhaustive subset search gives way to a greedy pass.
EXHAUSTIVE_LIMIT = 20


@dataclass(frozen=True)
class UnitRecord:
    id: str
    v_w: float                  # m/s
    delta_p_max: float          # pu on the system base
    sensitivity: float          # Hz of nadir uplift per pu injected

    def __post_init__(self):
        if self.delta_p_max < 0.0:
            raise DomainError(f"unit {self.id}: delta_p_max must be >= 0")
        if self.sensitivity < 0.0:
            raise DomainError(f"unit {self.id}: sensitivity must be >= 0")

    @property
    def uplift(self) -> float:
        return self.delta_p_max * self.sensitivity


@dataclass(frozen=True)
class Schedule:
    committed: tuple[str, ...]
    predicted_uplift: float     # Hz
    required_uplift: float      # Hz
    feasible: bool
    exact: bool = True          # False when the greedy fallback was used


def unit_sensitivity(system: SfrParams, base_event: float, unit_probe: float,
                     surge_timing: SurgePlan, t_event: float = 1.0,
                     horizon: float = 60.0, dt: float = 1e-3) -> float:
    """Nadir sensitivity to one unit's injection, Hz per pu (system base).

    Central finite difference of the co-simulated nadir around zero
    injection, with the probe following the unit's surge timing.
    """
    if base_event <= 0.0:
        raise DomainError("base event size must be positive")
    if unit_probe <= 0.0:
        raise DomainError("probe must be positive")
    if unit_probe >= base_event:
        raise ProbeTooLargeError(
            f"probe {unit_probe} pu is not small against the event "
            f"{base_event} pu")
    f_plus = event_nadir_with_injection(system, base_event, surge_timing,
                                        +unit_probe, t_event, horizon, dt)
    f_minus = event_nadir_with_injection(system, base_event, surge_timing,
                                         -unit_probe, t_event, horizon, dt)
    return (f_plus - f_minus) / (2.0 * unit_probe)


def min_commitment(units: Sequence[UnitRecord], required_uplift: float) -> Schedule:
    """Smallest unit set whose predicted uplift covers the requirement.

    Exhaustive over subset cardinality for fleets up to EXHAUSTIVE_LIMIT
    units (ties broken by larger uplift, then lexicographic ids); greedy by
    uplift above that, flagged non-exact. Infeasibility is a result, not an
    exception: all units committed, feasible=False, with the achievable
    uplift reported.
    """
    if required_uplift < 0.0:
        raise DomainError("required uplift must be non-negative")
    if not units:
        raise DomainError("unit list is empty")
    ordered = sorted(units, key=lambda u: u.id)
    ids = [u.id for u in ordered]
    if len(set(ids)) != len(ids):
        raise DomainError("unit ids must be unique")

    if len(ordered) > EXHAUSTIVE_LIMIT:
        return _greedy(ordered, required_uplift)

    for k in range(len(ordered) + 1):
        best: tuple[tuple[str, ...], float] | None = None
        for combo in combinations(ordered, k):
            uplift = math.fsum(u.uplift for u in combo)
            if uplift >= required_uplift and (best is None or uplift > best[1]):
                best = (tuple(u.id for u in combo), uplift)
        if best is not None:
            return Schedule(committed=best[0], predicted_uplift=best[1],
                            required_uplift=required_uplift, feasible=True)
    total = math.fsum(u.uplift for u in ordered)
    return Schedule(committed=tuple(ids), predicted_uplift=total,
                    required_uplift=required_uplift, feasible=False)


def _greedy(ordered: Sequence[UnitRecord], required_uplift: float) -> Schedule:
    ranked = sorted(ordered, key=lambda u: (-u.uplift, u.id))
    chosen: list[UnitRecord] = []
    running = 0.0
    for u in ranked:
        if running >= required_uplift:
            break
        chosen.append(u)
        running = math.fsum(c.uplift for c in chosen)
    if running >= required_uplift:
        return Schedule(committed=tuple(sorted(u.id for u in chosen)),
                        predicted_uplift=running,
                        required_uplift=required_uplift, feasible=True,
                        exact=False)
    return Schedule(committed=tuple(sorted(u.id for u in ordered)),
                    predicted_uplift=running,
                    required_uplift=required_uplift, feasible=False,
                    exact=False)


def read_fleet_csv(path: str | Path) -> list[UnitRecord]:
    """Fleet file: header id,v_w,delta_p_max,sensitivity."""
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.DictReader(io.StringIO(text))
    expected = ["id", "v_w", "delta_p_max", "sensitivity"]
    if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != expected:
        raise ConfigError(
            f"{path}: expected header {','.join(expected)}, "
            f"got {reader.fieldnames}")
    records = []
    for line_no, row in enumerate(reader, start=2):
        try:
            records.append(UnitRecord(
                id=row["id"].strip(),
                v_w=float(row["v_w"]),
                delta_p_max=float(row["delta_p_max"]),
                sensitivity=float(row["sensitivity"]),
            ))
        except (TypeError, ValueError, DomainError) as exc:
            raise ConfigError(f"{path}:{line_no}: bad fleet row: {exc}") from exc
    if not records:
        raise ConfigError(f"{path}: no fleet rows")
    return records


def format_schedule_csv(schedule: Schedule,
                        units: Iterable[UnitRecord]) -> str:
    by_id = {u.id: u for u in units}
    lines = ["id,delta_p_max,sensitivity,uplift"]
    for uid in schedule.committed:
        u = by_id[uid]
        lines.append(f"{u.id},{u.delta_p_max:.6f},{u.sensitivity:.6f},"
                     f"{u.uplift:.6f}")
    return "\n".join(lines) + "\n"
