"""Closed-loop event harness: grid frequency model coupled to a DFIG fleet.

One scenario runs a generator-trip event against the low-order frequency
model while every turbine tracks its own rotor state. Scheduled units switch
to support mode when the frequency deviation leaves the dead-band; their
output deviations (unit base, rescaled to the system base) feed back into
the grid power imbalance every integration stage. The loop is deliberately
flat Python over floats: scenario sweeps call it thousands of steps at a
time and dataclass churn per stage would dominate the runtime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import sfr as sfr_mod
from .errors import (
    DomainError,
    IntegrationBlowupError,
    RotorSecurityError,
    StepSizeError,
)
from .sfr import SfrParams, settling_frequency
from .surge import SurgePlan, surge_reference
from .turbine import TurbineParams, _cp_raw, mppt_equilibrium, mppt_reference


@dataclass(frozen=True)
class FleetUnit:
    id: str
    turbine: TurbineParams
    v_w: float                  # m/s, held constant over the scenario
    mva: float                  # aggregated rating used for base conversion
    plan: SurgePlan
    scheduled: bool

    def __post_init__(self):
        if self.mva <= 0.0:
            raise DomainError(f"unit {self.id}: mva must be positive")
        if self.v_w <= 0.0:
            raise DomainError(f"unit {self.id}: wind speed must be positive")


@dataclass(frozen=True)
class ScenarioConfig:
    sfr: SfrParams
    fleet: tuple[FleetUnit, ...]
    t_event: float              # s
    delta_p_loss: float         # pu on the system base
    horizon: float              # s
    dt: float                   # s
    nadir_threshold: float      # Hz
    deadband: float             # Hz, arms every scheduled unit at once
    system_mva: float
    settle_band: float = 0.005  # Hz, band for time-to-settle measurements

    def __post_init__(self):
        if self.t_event < 0.0:
            raise DomainError("t_event must be non-negative")
        if self.horizon <= self.t_event:
            raise DomainError("horizon must exceed t_event")
        if self.system_mva <= 0.0:
            raise DomainError("system_mva must be positive")
        if self.deadband < 0.0 or self.settle_band <= 0.0:
            raise DomainError("deadband must be >= 0 and settle_band > 0")
        sfr_mod.check_step_size(self.sfr, self.dt)
        for u in self.fleet:
            if self.dt > u.turbine.t_g / 4.0:
                raise StepSizeError(
                    f"dt={self.dt} under-resolves the converter filter of "
                    f"unit {u.id} (t_g={u.turbine.t_g})")
        ids = [u.id for u in self.fleet]
        if len(set(ids)) != len(ids):
            raise DomainError("fleet unit ids must be unique")


@dataclass(frozen=True)
class SimTrace:
    t: np.ndarray
    f_hz: np.ndarray
    imbalance_pu: np.ndarray    # net power into the swing node, system base
    wind_total_pu: np.ndarray   # fleet deviation from pre-event output
    unit_ids: tuple[str, ...]
    omega_r: dict               # unit id -> np.ndarray, pu
    p_e: dict                   # unit id -> np.ndarray, pu on unit base
    t_activation: float | None  # dead-band crossing time, s

    def to_csv(self) -> str:
        cols = ["t", "f_hz", "imbalance_pu", "wind_total_pu"]
        cols += [f"omega_r_{u}" for u in self.unit_ids]
        cols += [f"p_e_{u}" for u in self.unit_ids]
        arrays = [self.t, self.f_hz, self.imbalance_pu, self.wind_total_pu]
        arrays += [self.omega_r[u] for u in self.unit_ids]
        arrays += [self.p_e[u] for u in self.unit_ids]
        lines = [",".join(cols)]
        for row in zip(*arrays):
            lines.append(",".join(f"{x:.6f}" for x in row))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Metrics:
    f_nadir: float              # Hz
    t_nadir: float              # s
    rocof: float                # mean df/dt over the first 0.5 s after the event
    f_settle: float | None      # Hz, mean of the last 5 s; None if unavailable
    second_dip_nadir: float | None
    min_omega_r: dict           # unit id -> pu
    energy_delivered: dict      # unit id -> pu*s over the support plateau

    def format_block(self) -> str:
        lines = [
            f"f_nadir_hz {self.f_nadir!r}",
            f"t_nadir_s {self.t_nadir!r}",
            f"rocof_hz_per_s {self.rocof!r}",
            f"f_settle_hz {'unavailable' if self.f_settle is None else repr(self.f_settle)}",
            f"second_dip_nadir_hz "
            f"{'absent' if self.second_dip_nadir is None else repr(self.second_dip_nadir)}",
        ]
        for u in sorted(self.min_omega_r):
            lines.append(f"min_omega_r_pu[{u}] {self.min_omega_r[u]!r}")
        for u in sorted(self.energy_delivered):
            lines.append(f"energy_delivered_pu_s[{u}] {self.energy_delivered[u]!r}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        cols = ["f_nadir", "t_nadir", "rocof", "f_settle", "second_dip_nadir"]
        vals = [f"{self.f_nadir:.6f}", f"{self.t_nadir:.6f}", f"{self.rocof:.6f}",
                "" if self.f_settle is None else f"{self.f_settle:.6f}",
                "" if self.second_dip_nadir is None else f"{self.second_dip_nadir:.6f}"]
        for u in sorted(self.min_omega_r):
            cols.append(f"min_omega_r_{u}")
            vals.append(f"{self.min_omega_r[u]:.6f}")
        for u in sorted(self.energy_delivered):
            cols.append(f"energy_delivered_{u}")
            vals.append(f"{self.energy_delivered[u]:.6f}")
        return ",".join(cols) + "\n" + ",".join(vals) + "\n"


def run_scenario(config: ScenarioConfig) -> tuple[SimTrace, Metrics]:
    """Simulate one event end to end and summarize it.

    Every unit starts at its tracking equilibrium and the frequency at base;
    the generation loss enters at t_event; scheduled units add their surge
    reference to the cubic tracking reference once the dead-band is crossed.
    Raises RotorSecurityError the moment any rotor drops below its floor.
    """
    p = config.sfr
    n = int(round(config.horizon / config.dt))
    dt = config.dt
    f_b = p.f_b
    km_r = p.k_m / p.r_droop
    f_h = p.f_h
    inv_tr = 1.0 / p.t_r
    inv_2h_sys = 0.5 / p.h
    d_sys = p.d
    loss = -config.delta_p_loss
    t_event = config.t_event
    deadband = config.deadband

    # Per-unit constants, unpacked to plain tuples for the inner loop.
    units = []
    for u in config.fleet:
        tp = u.turbine
        w0 = mppt_equilibrium(u.v_w, tp)
        p0 = mppt_reference(w0, tp)
        units.append((
            tp.cp_coeffs,                                   # 0 Cp surface
            tp.omega_s * tp.radius / u.v_w,                 # 1 lambda per pu speed
            0.5 * tp.rho * tp.swept_area * u.v_w ** 3 / tp.base_watts,  # 2 aero, pu
            tp.k_opt, tp.omega_r_max, tp.p_max, tp.p_lim,   # 3-6
            1.0 / tp.t_g, 0.5 / tp.h_t,                     # 7-8
            p0, u.mva / config.system_mva,                  # 9-10
            u.plan.delta_p if u.scheduled else 0.0,         # 11
            u.plan.t_del, u.plan.t_rec,                     # 12-13
            tp.omega_r_min, u.id,                           # 14-15
        ))
    n_units = len(units)

    t_arr = np.arange(n + 1) * dt
    f_arr = np.empty(n + 1)
    imb_arr = np.empty(n + 1)
    wind_arr = np.empty(n + 1)
    w_arrs = [np.empty(n + 1) for _ in range(n_units)]
    pe_arrs = [np.empty(n + 1) for _ in range(n_units)]

    ws = [mppt_equilibrium(u.v_w, u.turbine) for u in config.fleet]
    pcs = [mppt_reference(w, u.turbine) for w, u in zip(ws, config.fleet)]
    dw = 0.0
    gov = 0.0
    trig = None

    def record(i: int) -> None:
        f_arr[i] = f_b * (1.0 + dw)
        inj = 0.0
        for j in range(n_units):
            w_arrs[j][i] = ws[j]
            pe_arrs[j][i] = pcs[j]
            inj += (pcs[j] - units[j][9]) * units[j][10]
        wind_arr[i] = inj
        imb_arr[i] = (loss if t_arr[i] >= t_event else 0.0) + inj

    def derivs(dwx: float, govx: float, rest: list, tau: float, u_loss: float):
        """Stage derivatives of the joint state at stage time tau."""
        inj = 0.0
        out_rest = []
        for j in range(n_units):
            (coeffs, lam_per_w, aero, k_opt, w_cap, p_max, p_lim,
             inv_tg, inv_2h, p0, ratio, dp, t_del, t_rec, _w_min, _uid) = units[j]
            wj = rest[2 * j]
            pcj = rest[2 * j + 1]
            ref = k_opt * wj * wj * wj if wj < w_cap else p_max
            if dp != 0.0 and trig is not None:
                rel = tau - trig
                if 0.0 <= rel < t_del:
                    ref += dp
                elif t_rec > 0.0 and 0.0 <= rel - t_del < t_rec:
                    ref += dp * (1.0 - (rel - t_del) / t_rec)
            if ref > p_lim:
                ref = p_lim
            lam = wj * lam_per_w
            pm = aero * max(_cp_raw(lam, 0.0, coeffs), 0.0) if lam > 0.0 else 0.0
            out_rest.append((pm - pcj) * inv_2h)
            out_rest.append((ref - pcj) * inv_tg)
            inj += (pcj - p0) * ratio
        u_net = u_loss + inj
        p_gov = -km_r * (f_h * dwx + govx)
        d_dw = (p_gov + u_net - d_sys * dwx) * inv_2h_sys
        d_gov = ((1.0 - f_h) * dwx - govx) * inv_tr
        return d_dw, d_gov, out_rest

    record(0)
    half = 0.5 * dt
    sixth = dt / 6.0
    for i in range(n):
        t = i * dt
        u0 = loss if t >= t_event else 0.0
        u1 = loss if t + dt >= t_event else 0.0
        um = 0.5 * (u0 + u1)

        rest0 = []
        for j in range(n_units):
            rest0.append(ws[j])
            rest0.append(pcs[j])
        k1 = derivs(dw, gov, rest0, t, u0)
        r1 = [a + half * b for a, b in zip(rest0, k1[2])]
        k2 = derivs(dw + half * k1[0], gov + half * k1[1], r1, t + half, um)
        r2 = [a + half * b for a, b in zip(rest0, k2[2])]
        k3 = derivs(dw + half * k2[0], gov + half * k2[1], r2, t + half, um)
        r3 = [a + dt * b for a, b in zip(rest0, k3[2])]
        k4 = derivs(dw + dt * k3[0], gov + dt * k3[1], r3, t + dt, u1)

        dw += sixth * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        gov += sixth * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        for j in range(n_units):
            ws[j] += sixth * (k1[2][2 * j] + 2.0 * k2[2][2 * j]
                              + 2.0 * k3[2][2 * j] + k4[2][2 * j])
            pcs[j] += sixth * (k1[2][2 * j + 1] + 2.0 * k2[2][2 * j + 1]
                               + 2.0 * k3[2][2 * j + 1] + k4[2][2 * j + 1])

        t_next = (i + 1) * dt
        for j in range(n_units):
            if ws[j] <= 0.0:
                raise IntegrationBlowupError(
                    f"unit {units[j][15]}: rotor speed non-positive at "
                    f"t={t_next:.3f} s")
            if ws[j] < units[j][14]:
                raise RotorSecurityError(
                    f"unit {units[j][15]}: rotor speed {ws[j]:.6f} pu fell "
                    f"below the {units[j][14]} pu floor at t={t_next:.3f} s",
                    unit=units[j][15], time_s=t_next, omega_r=ws[j])
        record(i + 1)
        if trig is None and abs(f_arr[i + 1] - f_b) > deadband:
            trig = t_next

    trace = SimTrace(
        t=t_arr, f_hz=f_arr, imbalance_pu=imb_arr, wind_total_pu=wind_arr,
        unit_ids=tuple(u.id for u in config.fleet),
        omega_r={u.id: w_arrs[j] for j, u in enumerate(config.fleet)},
        p_e={u.id: pe_arrs[j] for j, u in enumerate(config.fleet)},
        t_activation=trig,
    )
    return trace, compute_metrics(trace, config)


def compute_metrics(trace: SimTrace, config: ScenarioConfig) -> Metrics:
    """Summary quantities of one scenario trace.

    The nadir is the global minimum before the end of the recovery window;
    ROCOF is the mean slope over the first 0.5 s after the event; the
    settling frequency averages the last 5 s of the horizon; the second dip
    is the minimum after the first local recovery maximum, when one exists.
    """
    f = trace.f_hz
    if len(f) == 0:
        raise DomainError("empty trace")
    dt = float(trace.t[1] - trace.t[0]) if len(trace.t) > 1 else 0.0

    sched_windows = [u.plan.t_del + u.plan.t_rec
                     for u in config.fleet if u.scheduled]
    if trace.t_activation is not None and sched_windows:
        t_recovery_end = trace.t_activation + max(sched_windows)
        i_end = min(int(round(t_recovery_end / dt)), len(f) - 1)
    else:
        i_end = len(f) - 1
    i_nadir = int(np.argmin(f[:i_end + 1]))
    f_nadir = float(f[i_nadir])
    t_nadir = float(trace.t[i_nadir])

    i_event = min(int(round(config.t_event / dt)), len(f) - 1)
    i_rocof = min(i_event + int(round(0.5 / dt)), len(f) - 1)
    span = trace.t[i_rocof] - trace.t[i_event]
    rocof = float((f[i_rocof] - f[i_event]) / span) if span > 0 else 0.0

    n_settle = int(round(5.0 / dt)) if dt > 0 else 0
    f_settle = float(np.mean(f[-n_settle:])) if 0 < n_settle <= len(f) else None

    second_dip = _second_dip(f, i_event)

    min_w = {u: float(arr.min()) for u, arr in trace.omega_r.items()}
    energy = {}
    for j, uid in enumerate(trace.unit_ids):
        unit = config.fleet[j]
        if trace.t_activation is None or not unit.scheduled:
            energy[uid] = 0.0
            continue
        i0 = int(round(trace.t_activation / dt))
        i1 = min(i0 + int(round(unit.plan.t_del / dt)), len(f) - 1)
        pe = trace.p_e[uid]
        energy[uid] = float(np.trapezoid(pe[i0:i1 + 1] - pe[0], dx=dt))
    return Metrics(f_nadir=f_nadir, t_nadir=t_nadir, rocof=rocof,
                   f_settle=f_settle, second_dip_nadir=second_dip,
                   min_omega_r=min_w, energy_delivered=energy)


def _second_dip(f: np.ndarray, i_event: int) -> float | None:
    """Minimum after the first local recovery maximum.

    Walks down the initial post-event descent to its first local minimum,
    climbs to the first local maximum of the recovery, and takes the minimum
    of everything after it. Absent when the trace never dips or recovers
    monotonically to the end.
    """
    n = len(f)
    i = i_event
    while i + 1 < n and f[i + 1] <= f[i]:
        i += 1
    if i == i_event or i + 1 >= n:
        return None
    j = i
    while j + 1 < n and f[j + 1] >= f[j]:
        j += 1
    if j == i or j + 1 >= n:
        return None
    return float(f[j:].min())


def time_to_settle(trace: SimTrace, config: ScenarioConfig) -> float:
    """Seconds after the event until f stays inside the settle band for good.

    The band is centred on the droop settling frequency of the loss event.
    """
    target = settling_frequency(config.sfr, config.delta_p_loss)
    outside = np.nonzero(np.abs(trace.f_hz - target) > config.settle_band)[0]
    if len(outside) == 0:
        return 0.0
    return max(float(trace.t[outside[-1]]) - config.t_event, 0.0)


def recovery_sweep(config: ScenarioConfig,
                   t_rec_values: Sequence[float]) -> list[dict]:
    """Trade-off curve: rerun the scenario for each recovery duration."""
    values = list(t_rec_values)
    if len(values) < 2:
        raise DomainError("need at least two recovery durations to sweep")
    out = []
    for t_rec in values:
        fleet = tuple(
            replace(u, plan=replace(u.plan, t_rec=float(t_rec)))
            if u.scheduled else u
            for u in config.fleet)
        cfg = replace(config, fleet=fleet)
        trace, metrics = run_scenario(cfg)
        out.append({
            "t_rec": float(t_rec),
            "second_dip_nadir": metrics.second_dip_nadir,
            "time_to_settle": time_to_settle(trace, cfg),
        })
    return out


def event_nadir_with_injection(params: SfrParams, delta_p_loss: float,
                               plan: SurgePlan, injection: float,
                               t_event: float = 1.0, horizon: float = 60.0,
                               dt: float = 1e-3) -> float:
    """Nadir of a loss event supported by one ideal fixed-trajectory surge.

    The injection follows the plan's plateau/ramp timing with the given
    magnitude (pu, system base) and arms at the plan's dead-band crossing of
    the unsupported trajectory. This is the offline planning view of a
    supported event: no rotor dynamics, just the reference trajectory.
    """
    n = int(round(horizon / dt))
    times = np.arange(n + 1) * dt
    u = np.where(times >= t_event, -delta_p_loss, 0.0)
    f_base = sfr_mod.simulate(params, u, dt)
    crossed = np.nonzero(np.abs(f_base - params.f_b) > plan.trigger_deadband)[0]
    if injection == 0.0 or len(crossed) == 0:
        return float(f_base.min())
    t_trig = times[crossed[0]]
    shape = replace(plan, delta_p=1.0)
    u = u + injection * np.array(
        [surge_reference(shape, t - t_trig) for t in times])
    return float(sfr_mod.simulate(params, u, dt).min())
