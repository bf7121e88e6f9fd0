"""Study configuration: one YAML file drives every pipeline command.

All constants that the physics does not pin down (efficiency, dead-band,
delivery/recovery windows, grid model values, fleet layout) live in a single
nested key-value file so they can be audited in one place. The loader turns
that file into the typed parameter objects used by the library.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import yaml

from .cosim import FleetUnit, ScenarioConfig
from .errors import ConfigError, DomainError
from .sfr import SfrParams, with_wind_penetration
from .surge import SurgePlan, max_injection
from .turbine import TurbineParams, optimal_tip_speed_ratio


@dataclass(frozen=True)
class StudyConfig:
    turbine: TurbineParams
    sfr_base: SfrParams         # before wind-penetration scaling
    wind_penetration: float
    sfr: SfrParams              # effective grid model
    t_del: float
    t_rec: float
    deadband: float
    table_speeds: tuple[float, ...]
    t_event: float
    delta_p_loss: float
    dt: float
    horizon: float
    nadir_threshold: float
    settle_band: float
    system_mva: float
    fleet: tuple[dict, ...]     # raw fleet entries, resolved lazily


def default_config_path() -> Path:
    return Path(resources.files("windsurge").joinpath("data/default.yaml"))


def table1_path() -> Path:
    return Path(resources.files("windsurge").joinpath("data/table1.csv"))


def _section(doc: dict, name: str, path: str) -> dict:
    try:
        sec = doc[name]
    except (KeyError, TypeError):
        raise ConfigError(f"{path}: missing section '{name}'") from None
    if not isinstance(sec, dict):
        raise ConfigError(f"{path}: section '{name}' must be a mapping")
    return sec


def _get(sec: dict, key: str, path: str, section: str, cast=float):
    if key not in sec:
        raise ConfigError(f"{path}: missing field '{section}.{key}'")
    try:
        return cast(sec[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: bad value for '{section}.{key}': {exc}") from exc


def load_study(path: str | Path) -> StudyConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")

    t = _section(doc, "turbine", str(path))
    coeffs = tuple(_get(t, "cp_coeffs", str(path), "turbine", cast=list))
    if len(coeffs) != 6:
        raise ConfigError(f"{path}: 'turbine.cp_coeffs' needs 6 entries")
    radius = _get(t, "radius", str(path), "turbine")
    area = t.get("swept_area")
    try:
        turbine = TurbineParams(
            rho=_get(t, "rho", str(path), "turbine"),
            radius=radius,
            swept_area=float(area) if area is not None else math.pi * radius ** 2,
            cp_coeffs=tuple(float(c) for c in coeffs),
            lambda_opt=optimal_tip_speed_ratio(tuple(float(c) for c in coeffs)),
            k_opt=0.0,
            h_t=_get(t, "h_t", str(path), "turbine"),
            omega_s=_get(t, "omega_s", str(path), "turbine"),
            omega_r_max=_get(t, "omega_r_max", str(path), "turbine"),
            omega_r_min=_get(t, "omega_r_min", str(path), "turbine"),
            p_max=_get(t, "p_max", str(path), "turbine"),
            eta=_get(t, "eta", str(path), "turbine"),
            t_g=_get(t, "t_g", str(path), "turbine"),
            p_lim=_get(t, "p_lim", str(path), "turbine"),
            mva_base=_get(t, "mva_base", str(path), "turbine"),
            v_cut_in=float(t.get("v_cut_in", 3.0)),
            v_cut_out=float(t.get("v_cut_out", 25.0)),
        )
        turbine = replace(turbine, k_opt=turbine.k_opt_from_geometry()).validate()
    except DomainError as exc:
        raise ConfigError(f"{path}: turbine section invalid: {exc}") from exc

    s = _section(doc, "sfr", str(path))
    try:
        sfr_base = SfrParams(
            f_b=_get(s, "f_b", str(path), "sfr"),
            h=_get(s, "h", str(path), "sfr"),
            d=_get(s, "d", str(path), "sfr"),
            r_droop=_get(s, "r_droop", str(path), "sfr"),
            k_m=_get(s, "k_m", str(path), "sfr"),
            f_h=_get(s, "f_h", str(path), "sfr"),
            t_r=_get(s, "t_r", str(path), "sfr"),
        )
        penetration = float(s.get("wind_penetration", 0.0))
        sfr_eff = with_wind_penetration(sfr_base, penetration)
    except DomainError as exc:
        raise ConfigError(f"{path}: sfr section invalid: {exc}") from exc

    g = _section(doc, "surge", str(path))
    tb = _section(doc, "table", str(path))
    v_min = _get(tb, "v_min", str(path), "table")
    v_max = _get(tb, "v_max", str(path), "table")
    v_step = _get(tb, "v_step", str(path), "table")
    if v_step <= 0.0:
        raise ConfigError(f"{path}: 'table.v_step' must be positive")
    if v_max < v_min:
        raise ConfigError(f"{path}: 'table.v_max' must not be below 'table.v_min'")
    n_speeds = int(round((v_max - v_min) / v_step))
    speeds = tuple(round(v_min + i * v_step, 9) for i in range(n_speeds + 1))

    e = _section(doc, "event", str(path))
    sim = _section(doc, "simulation", str(path))
    sys_sec = _section(doc, "system", str(path))

    fleet_raw = doc.get("fleet", [])
    if not isinstance(fleet_raw, list):
        raise ConfigError(f"{path}: 'fleet' must be a list")
    fleet = []
    for idx, entry in enumerate(fleet_raw):
        if not isinstance(entry, dict) or "id" not in entry or "v_w" not in entry:
            raise ConfigError(f"{path}: fleet[{idx}] needs at least 'id' and 'v_w'")
        fleet.append(dict(entry))

    return StudyConfig(
        turbine=turbine,
        sfr_base=sfr_base,
        wind_penetration=penetration,
        sfr=sfr_eff,
        t_del=_get(g, "t_del", str(path), "surge"),
        t_rec=_get(g, "t_rec", str(path), "surge"),
        deadband=_get(g, "deadband", str(path), "surge"),
        table_speeds=speeds,
        t_event=_get(e, "t_event", str(path), "event"),
        delta_p_loss=_get(e, "delta_p_loss", str(path), "event"),
        dt=_get(sim, "dt", str(path), "simulation"),
        horizon=_get(sim, "horizon", str(path), "simulation"),
        nadir_threshold=_get(sim, "nadir_threshold", str(path), "simulation"),
        settle_band=float(sim.get("settle_band", 0.005)),
        system_mva=_get(sys_sec, "mva", str(path), "system"),
        fleet=tuple(fleet),
    )


def build_scenario(study: StudyConfig, dt: float | None = None,
                   t_rec: float | None = None) -> ScenarioConfig:
    """Assemble the co-simulation scenario, resolving 'auto' surge sizes."""
    units = []
    for entry in study.fleet:
        uid = str(entry["id"])
        v_w = float(entry["v_w"])
        mva = float(entry.get("mva", study.turbine.mva_base))
        scheduled = bool(entry.get("scheduled", False))
        raw_dp = entry.get("delta_p", "auto")
        t_rec_eff = float(t_rec) if t_rec is not None else study.t_rec
        try:
            if isinstance(raw_dp, str):
                if raw_dp != "auto":
                    raise ConfigError(
                        f"fleet unit {uid}: delta_p must be a number or 'auto'")
                dp = max_injection(v_w, study.t_del, study.turbine)
            else:
                dp = float(raw_dp)
            plan = SurgePlan(delta_p=dp, t_del=study.t_del, t_rec=t_rec_eff,
                             trigger_deadband=study.deadband)
            units.append(FleetUnit(id=uid, turbine=study.turbine, v_w=v_w,
                                   mva=mva, plan=plan, scheduled=scheduled))
        except DomainError as exc:
            raise ConfigError(f"fleet unit {uid}: {exc}") from exc
    try:
        return ScenarioConfig(
            sfr=study.sfr,
            fleet=tuple(units),
            t_event=study.t_event,
            delta_p_loss=study.delta_p_loss,
            horizon=study.horizon,
            dt=float(dt) if dt is not None else study.dt,
            nadir_threshold=study.nadir_threshold,
            deadband=study.deadband,
            system_mva=study.system_mva,
            settle_band=study.settle_band,
        )
    except (DomainError, ConfigError) as exc:
        raise ConfigError(f"scenario invalid: {exc}") from exc
