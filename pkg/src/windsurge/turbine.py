"""Aggregated DFIG wind turbine model.

One unit is reduced to the pieces that matter for fast frequency response
studies: an analytic power-coefficient surface, the cubic MPPT reference,
a one-mass drive train and a first-order converter power-tracking filter.
All powers are per-unit on the unit MVA base, rotor speed is per-unit of
the base mechanical speed `omega_s`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache

from scipy.optimize import brentq, minimize_scalar

from .errors import (
    DomainError,
    IntegrationBlowupError,
    StepSizeError,
)

#: Widely used coefficient set for the exponential Cp(lambda, beta) surface.
DEFAULT_CP_COEFFS = (0.5176, 116.0, 0.4, 5.0, 21.0, 0.0068)

#: Betz limit; no physical rotor exceeds this power coefficient.
BETZ_LIMIT = 0.593


class Mode(Enum):
    MPPT = "mppt"
    SUPPORT = "support"
    RECOVERY = "recovery"


@dataclass(frozen=True)
class TurbineParams:
    rho: float                  # air density, kg/m^3
    radius: float               # rotor radius, m
    swept_area: float           # rotor swept area, m^2
    cp_coeffs: tuple            # (c1..c6) of the Cp surface
    lambda_opt: float           # tip-speed ratio at the Cp maximum
    k_opt: float                # MPPT cubic gain, pu power per pu speed cubed
    h_t: float                  # turbine inertia constant, s
    omega_s: float              # base rotor speed, rad/s (1.0 pu)
    omega_r_max: float          # MPPT speed cap, pu
    omega_r_min: float          # minimum allowable rotor speed, pu
    p_max: float                # rated electrical power, pu
    eta: float                  # support-mode energy efficiency factor
    t_g: float                  # converter tracking time constant, s
    p_lim: float                # converter overload ceiling, pu
    mva_base: float             # unit base power, MVA
    v_cut_in: float = 3.0       # m/s
    v_cut_out: float = 25.0     # m/s

    def __post_init__(self):
        if not (0.0 < self.omega_r_min < self.omega_r_max):
            raise DomainError("need 0 < omega_r_min < omega_r_max")
        if not (0.0 < self.eta <= 1.0):
            raise DomainError("eta must lie in (0, 1]")
        if self.t_g <= 0.0:
            raise DomainError("t_g must be positive")
        if self.p_lim < self.p_max:
            raise DomainError("p_lim must be at least p_max")
        for name in ("rho", "radius", "swept_area", "omega_s", "h_t", "mva_base"):
            if getattr(self, name) <= 0.0:
                raise DomainError(f"{name} must be positive")

    @property
    def base_watts(self) -> float:
        return self.mva_base * 1e6

    def k_opt_from_geometry(self) -> float:
        """Per-unit MPPT gain implied by the aerodynamic constants.

        Physical gain 0.5*rho*A*(R/lambda_opt)^3 * Cp(lambda_opt, 0) in
        W/(rad/s)^3, converted to pu power per pu speed cubed.
        """
        cp_opt = cp_coefficient(self.lambda_opt, 0.0, self.cp_coeffs)
        k_si = 0.5 * self.rho * self.swept_area * (self.radius / self.lambda_opt) ** 3 * cp_opt
        return k_si * self.omega_s ** 3 / self.base_watts

    def validate(self) -> "TurbineParams":
        """Full consistency check; structural bounds were already enforced."""
        k_ref = self.k_opt_from_geometry()
        if abs(self.k_opt - k_ref) > 1e-9 * abs(k_ref):
            raise DomainError(
                f"k_opt={self.k_opt!r} inconsistent with aerodynamic constants "
                f"(expected {k_ref!r})")
        return self


@dataclass(frozen=True)
class TurbineState:
    omega_r: float              # rotor speed, pu
    p_e: float                  # electrical output, pu
    p_m: float                  # aerodynamic power, pu
    p_cmd: float                # filtered converter power command, pu
    mode: Mode = Mode.MPPT

    def __post_init__(self):
        if self.omega_r <= 0.0:
            raise DomainError("rotor speed must be positive")


def cp_coefficient(lam: float, beta: float = 0.0,
                   coeffs: tuple = DEFAULT_CP_COEFFS) -> float:
    """Power coefficient Cp(lambda, beta), clamped at zero from below.

    Exponential surface with the blended inverse tip-speed ratio
    1/li = 1/(lambda + 0.08 beta) - 0.035/(beta^3 + 1).
    """
    if lam <= 0.0:
        raise DomainError(f"tip-speed ratio must be positive, got {lam}")
    if beta < 0.0:
        raise DomainError(f"pitch angle must be non-negative, got {beta}")
    return max(_cp_raw(lam, beta, coeffs), 0.0)


def _cp_raw(lam: float, beta: float, coeffs: tuple) -> float:
    c1, c2, c3, c4, c5, c6 = coeffs
    li_inv = 1.0 / (lam + 0.08 * beta) - 0.035 / (beta ** 3 + 1.0)
    return c1 * (c2 * li_inv - c3 * beta - c4) * math.exp(-c5 * li_inv) + c6 * lam


@lru_cache(maxsize=None)
def optimal_tip_speed_ratio(coeffs: tuple = DEFAULT_CP_COEFFS) -> float:
    """Locate the interior maximum of Cp(lambda, 0)."""
    res = minimize_scalar(lambda l: -_cp_raw(l, 0.0, coeffs),
                          bounds=(2.0, 14.0), method="bounded",
                          options={"xatol": 1e-12})
    return float(res.x)


def tip_speed_ratio(omega_r: float, v_w: float, params: TurbineParams) -> float:
    """lambda = omega_phys * R / V_w with omega_phys = omega_r * omega_s."""
    if v_w <= 0.0:
        raise DomainError(f"wind speed must be positive, got {v_w}")
    if omega_r <= 0.0:
        raise DomainError(f"rotor speed must be positive, got {omega_r}")
    return omega_r * params.omega_s * params.radius / v_w


def mechanical_power(v_w: float, omega_r: float, beta: float,
                     params: TurbineParams) -> float:
    """Aerodynamic power 0.5*rho*A*Cp*V^3, per-unit on the unit base."""
    lam = tip_speed_ratio(omega_r, v_w, params)
    cp = cp_coefficient(lam, beta, params.cp_coeffs)
    return 0.5 * params.rho * params.swept_area * cp * v_w ** 3 / params.base_watts


def mppt_reference(omega_r: float, params: TurbineParams) -> float:
    """Cubic tracking reference below the speed cap, rated power above."""
    if omega_r <= 0.0:
        raise DomainError(f"rotor speed must be positive, got {omega_r}")
    if omega_r >= params.omega_r_max:
        return params.p_max
    return params.k_opt * omega_r ** 3


def mppt_equilibrium(v_w: float, params: TurbineParams) -> float:
    """Steady-state rotor speed where aerodynamic power meets the reference.

    Solved by root bracketing on the drive-train balance; below rated wind
    the fixed point sits exactly at lambda_opt.
    """
    if v_w <= 0.0:
        raise DomainError(f"wind speed must be positive, got {v_w}")

    def imbalance(w: float) -> float:
        return mechanical_power(v_w, w, 0.0, params) - mppt_reference(w, params)

    scale = v_w / (params.omega_s * params.radius)   # pu speed per unit lambda
    lo, hi = 2.0 * scale, 16.0 * scale
    if imbalance(lo) <= 0.0 or imbalance(hi) >= 0.0:
        raise DomainError(f"no tracking equilibrium bracketed for v_w={v_w}")
    return float(brentq(imbalance, lo, hi, xtol=1e-14))


def step(state: TurbineState, p_ref_total: float, v_w: float, dt: float,
         params: TurbineParams) -> TurbineState:
    """Advance one fixed step: converter lag plus one-mass drive train.

    The reference is held constant over the step; the command relaxes toward
    min(p_ref_total, p_lim) with time constant t_g, and the rotor integrates
    d(omega)/dt = (P_m - P_e) / (2 H_t) with P_e = p_cmd. Classic RK4 on the
    joint (omega_r, p_cmd) state.
    """
    if dt <= 0.0 or dt > params.t_g / 4.0:
        raise StepSizeError(
            f"dt={dt} outside (0, t_g/4={params.t_g / 4.0}]; the converter "
            "filter would be under-resolved")
    w, pc = _step_core(state.omega_r, state.p_cmd, p_ref_total, v_w, dt, params)
    if w <= 0.0:
        raise IntegrationBlowupError(
            f"rotor speed became non-positive ({w}); scenario is not viable")
    return TurbineState(omega_r=w, p_e=pc, p_m=mechanical_power(v_w, w, 0.0, params),
                        p_cmd=pc, mode=state.mode)


def _step_core(w: float, pc: float, p_ref: float, v_w: float, dt: float,
               params: TurbineParams) -> tuple:
    """RK4 update of (omega_r, p_cmd) with the reference held over the step."""
    target = min(p_ref, params.p_lim)
    inv_tg = 1.0 / params.t_g
    inv_2h = 0.5 / params.h_t
    aero = 0.5 * params.rho * params.swept_area / params.base_watts * v_w ** 3
    lam_per_w = params.omega_s * params.radius / v_w
    coeffs = params.cp_coeffs

    def deriv(wx: float, pcx: float) -> tuple:
        lam = wx * lam_per_w
        pm = aero * max(_cp_raw(lam, 0.0, coeffs), 0.0) if lam > 0.0 else 0.0
        return (pm - pcx) * inv_2h, (target - pcx) * inv_tg

    k1w, k1p = deriv(w, pc)
    k2w, k2p = deriv(w + 0.5 * dt * k1w, pc + 0.5 * dt * k1p)
    k3w, k3p = deriv(w + 0.5 * dt * k2w, pc + 0.5 * dt * k2p)
    k4w, k4p = deriv(w + dt * k3w, pc + dt * k3p)
    return (w + dt * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0,
            pc + dt * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0)


def steady_state(v_w: float, params: TurbineParams) -> TurbineState:
    """Turbine state at the MPPT equilibrium for the given wind speed."""
    w = mppt_equilibrium(v_w, params)
    p = mppt_reference(w, params)
    return TurbineState(omega_r=w, p_e=p, p_m=mechanical_power(v_w, w, 0.0, params),
                        p_cmd=p, mode=Mode.MPPT)


def reference_turbine(mva_base: float = 5.8, h_t: float = 4.0,
                      eta: float = 0.95) -> TurbineParams:
    """Documented default unit: 60 m rotor, 5.8 MVA, rated near 12 m/s.

    The speed base of 1.3 rad/s puts the 7-12 m/s tracking equilibria in
    0.73-1.25 pu, so the whole study range sits on the cubic branch with the
    0.7 pu floor still clear at cut-in-side winds.
    """
    radius = 60.0
    params = TurbineParams(
        rho=1.225,
        radius=radius,
        swept_area=math.pi * radius * radius,
        cp_coeffs=DEFAULT_CP_COEFFS,
        lambda_opt=optimal_tip_speed_ratio(DEFAULT_CP_COEFFS),
        k_opt=0.0,  # patched below from the geometry
        h_t=h_t,
        omega_s=1.3,
        omega_r_max=1.25,
        omega_r_min=0.7,
        p_max=1.0,
        eta=eta,
        t_g=0.02,
        p_lim=1.2,
        mva_base=mva_base,
    )
    return replace(params, k_opt=params.k_opt_from_geometry()).validate()
