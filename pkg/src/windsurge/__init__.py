"""Fast-frequency-response planning and simulation for DFIG wind fleets."""

__version__ = "0.1.0"

from .cosim import (
    FleetUnit,
    Metrics,
    ScenarioConfig,
    SimTrace,
    compute_metrics,
    recovery_sweep,
    run_scenario,
)
from .dispatch import Schedule, UnitRecord, min_commitment, unit_sensitivity
from .sfr import (
    SfrDerived,
    SfrParams,
    derived_constants,
    nadir_closed_form,
    settling_frequency,
    with_wind_penetration,
)
from .surge import (
    EnergyEstimate,
    OperatingPoint,
    SurgePlan,
    build_table,
    delivered_energy,
    max_injection,
    surge_reference,
)
from .turbine import (
    Mode,
    TurbineParams,
    TurbineState,
    cp_coefficient,
    mechanical_power,
    mppt_equilibrium,
    mppt_reference,
    reference_turbine,
    steady_state,
    tip_speed_ratio,
)

__all__ = [
    "__version__",
    "FleetUnit", "Metrics", "ScenarioConfig", "SimTrace",
    "compute_metrics", "recovery_sweep", "run_scenario",
    "Schedule", "UnitRecord", "min_commitment", "unit_sensitivity",
    "SfrDerived", "SfrParams", "derived_constants", "nadir_closed_form",
    "settling_frequency", "with_wind_penetration",
    "EnergyEstimate", "OperatingPoint", "SurgePlan", "build_table",
    "delivered_energy", "max_injection", "surge_reference",
    "Mode", "TurbineParams", "TurbineState", "cp_coefficient",
    "mechanical_power", "mppt_equilibrium", "mppt_reference",
    "reference_turbine", "steady_state", "tip_speed_ratio",
]
