"""Maximum safe power surge from rotor kinetic energy.

The planning question: holding wind constant, how much extra electric power
can one unit export for a delivery window T_del without the rotor dropping
below its floor? Answered with an energy balance

    dE_aero - dE_e - dE_loss - dE_kic = 0

expanded to second order in the rotor-speed excursion under a constant
deceleration-rate assumption. The resulting estimate is deliberately
conservative: the real response tapers as the cubic tracking term follows
the slowing rotor, so a unit driven with the estimated surge always
under-spends the budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DomainError, RotorSecurityError
from .turbine import (
    TurbineParams,
    _cp_raw,
    mppt_equilibrium,
    mppt_reference,
    tip_speed_ratio,
)


@dataclass(frozen=True)
class OperatingPoint:
    v_w: float                  # wind speed, m/s
    omega_r: float              # rotor speed, pu
    beta: float = 0.0           # pitch angle, deg (held at zero)


@dataclass(frozen=True)
class AeroSensitivities:
    dcp_dlambda: float
    d2cp_dlambda2: float


@dataclass(frozen=True)
class EnergyTerms:
    aero: float                 # aerodynamic energy variation, pu*s
    kic: float                  # kinetic energy variation, pu*s
    loss: float                 # loss variation, pu*s


@dataclass(frozen=True)
class EnergyEstimate:
    delta_e_del: float          # deliverable electric energy, pu*s (signed)
    delta_p_del: float          # implied constant surge, pu (clamped at 0)
    delta_omega_r: float        # assumed rotor-speed drop, pu
    t_del: float                # delivery window, s
    terms: EnergyTerms


@dataclass(frozen=True)
class SurgePlan:
    delta_p: float              # surge magnitude, pu
    t_del: float                # over-production duration, s
    t_rec: float                # recovery ramp duration, s
    trigger_deadband: float     # frequency deviation that arms the surge, Hz

    def __post_init__(self):
        if self.delta_p < 0.0:
            raise DomainError("surge magnitude must be non-negative")
        if self.t_del <= 0.0:
            raise DomainError("t_del must be positive")
        if self.t_rec < 0.0:
            raise DomainError("t_rec must be non-negative")


def aero_sensitivities(op: OperatingPoint, params: TurbineParams,
                       analytic: bool = True) -> AeroSensitivities:
    """First and second lambda-derivatives of Cp at the operating point.

    Analytic differentiation of the exponential surface; central differences
    (h = 1e-5) are kept as a cross-check fallback.
    """
    lam = tip_speed_ratio(op.omega_r, op.v_w, params)
    if analytic:
        d1, d2 = _cp_lambda_derivatives(lam, op.beta, params.cp_coeffs)
    else:
        h = 1e-5
        f = lambda x: _cp_raw(x, op.beta, params.cp_coeffs)
        d1 = (f(lam + h) - f(lam - h)) / (2.0 * h)
        d2 = (f(lam + h) - 2.0 * f(lam) + f(lam - h)) / (h * h)
    return AeroSensitivities(dcp_dlambda=d1, d2cp_dlambda2=d2)


def _cp_lambda_derivatives(lam: float, beta: float, coeffs: tuple) -> tuple:
    c1, c2, c3, c4, c5, c6 = coeffs
    u = 1.0 / (lam + 0.08 * beta) - 0.035 / (beta ** 3 + 1.0)
    du = -1.0 / (lam + 0.08 * beta) ** 2
    d2u = 2.0 / (lam + 0.08 * beta) ** 3
    e = math.exp(-c5 * u)
    g = c2 * u - c3 * beta - c4          # polynomial part of the surface
    dg_du = c2
    # d/dlam [c1 * g * e] = c1 * e * (dg_du - c5 * g) * du
    inner = dg_du - c5 * g
    d1 = c1 * e * inner * du + c6
    # second derivative: product rule over (e, inner, du)
    d_inner_du = -c5 * dg_du
    d2 = c1 * e * ((d_inner_du - c5 * inner) * du * du + inner * d2u)
    return d1, d2


def energy_quadratic(op: OperatingPoint, t_del: float,
                     params: TurbineParams) -> tuple:
    """Coefficients (a, b) of dE_del = a*dw + b*dw^2 in the pu speed drop dw.

    Derived by integrating the second-order Cp expansion over the delivery
    window with a constant deceleration rate, then closing the energy
    balance with eta-scaled losses:

        dE_aero = -(1/2) K V^2 R Cp' dw_phys T + (1/6) K V R^2 Cp'' dw_phys^2 T
        dE_kic  = H ((w0 - dw)^2 - w0^2)
        dE_del  = eta * dE_aero - dE_kic
    """
    sens = aero_sensitivities(op, params)
    k_aero = 0.5 * params.rho * params.swept_area
    ws = params.omega_s
    scale = params.eta / params.base_watts
    a_aero = -0.5 * k_aero * op.v_w ** 2 * params.radius * sens.dcp_dlambda * ws * t_del
    b_aero = (k_aero * op.v_w * params.radius ** 2 * sens.d2cp_dlambda2
              * ws * ws * t_del / 6.0)
    a = scale * a_aero + 2.0 * params.h_t * op.omega_r
    b = scale * b_aero - params.h_t
    return a, b


def delivered_energy(op: OperatingPoint, delta_omega_r: float, t_del: float,
                     params: TurbineParams) -> EnergyEstimate:
    """Deliverable electric energy for a given rotor-speed drop.

    A negative balance means the unit cannot support at this point; that is
    reported as zero capability (delta_p_del = 0), not as an error.
    """
    if t_del <= 0.0:
        raise DomainError("t_del must be positive")
    margin = op.omega_r - params.omega_r_min
    if delta_omega_r < 0.0:
        raise DomainError("rotor-speed drop must be non-negative")
    if delta_omega_r > margin + 1e-12:
        raise RotorSecurityError(
            f"requested speed drop {delta_omega_r:.6f} pu exceeds the "
            f"floor margin {margin:.6f} pu")

    sens = aero_sensitivities(op, params)
    k_aero = 0.5 * params.rho * params.swept_area
    dw_phys = delta_omega_r * params.omega_s
    e_aero = (-0.5 * k_aero * op.v_w ** 2 * params.radius * sens.dcp_dlambda
              * dw_phys * t_del
              + k_aero * op.v_w * params.radius ** 2 * sens.d2cp_dlambda2
              * dw_phys * dw_phys * t_del / 6.0) / params.base_watts
    w_end = op.omega_r - delta_omega_r
    e_kic = params.h_t * (w_end * w_end - op.omega_r * op.omega_r)
    e_loss = (1.0 - params.eta) * e_aero
    e_del = e_aero - e_loss - e_kic
    return EnergyEstimate(
        delta_e_del=e_del,
        delta_p_del=max(e_del, 0.0) / t_del,
        delta_omega_r=delta_omega_r,
        t_del=t_del,
        terms=EnergyTerms(aero=e_aero, kic=e_kic, loss=e_loss),
    )


def delivered_energy_folded(op: OperatingPoint, delta_omega_r: float,
                            t_del: float, params: TurbineParams) -> float:
    """Variant with pre-folded numeric coefficients (eta/12, eta/36, eta/216).

    This closed form circulates with the kinetic term multiplied by the
    delivery time and is dimensionally inconsistent with the balance above;
    it is retained only so the two can be compared side by side. Planning
    always uses :func:`delivered_energy`.
    """
    sens = aero_sensitivities(op, params)
    k_aero = 0.5 * params.rho * params.swept_area
    j_moment = 2.0 * params.h_t * params.base_watts / params.omega_s ** 2
    eta = params.eta
    w0_phys = op.omega_r * params.omega_s
    dw_phys = delta_omega_r * params.omega_s
    lin = (eta / 12.0 * k_aero * op.v_w ** 2 * sens.dcp_dlambda
           - j_moment * w0_phys / params.omega_s ** 2 * t_del)
    quad = (eta / 36.0 * k_aero * op.v_w ** 2 * sens.dcp_dlambda
            + eta / 216.0 * k_aero * op.v_w * sens.d2cp_dlambda2
            - j_moment / (2.0 * params.omega_s ** 2) * t_del)
    return (lin * dw_phys + quad * dw_phys * dw_phys) / params.base_watts


def max_injection(v_w: float, t_del: float, params: TurbineParams) -> float:
    """Maximum safe surge at a wind speed: energy budget vs converter headroom."""
    if not (params.v_cut_in <= v_w <= params.v_cut_out):
        raise DomainError(
            f"wind speed {v_w} m/s outside the operating range "
            f"[{params.v_cut_in}, {params.v_cut_out}]")
    w0 = mppt_equilibrium(v_w, params)
    p0 = mppt_reference(w0, params)
    drop = max(w0 - params.omega_r_min, 0.0)
    est = delivered_energy(OperatingPoint(v_w=v_w, omega_r=w0), drop, t_del, params)
    return max(min(est.delta_p_del, params.p_lim - p0), 0.0)


def build_table(wind_speeds: Sequence[float], t_del: float,
                params: TurbineParams) -> list[dict]:
    """One capability row per wind speed: {v_w, p_0, delta_p_max}."""
    speeds = list(wind_speeds)
    if not speeds:
        raise DomainError("wind speed grid is empty")
    for prev, cur in zip(speeds, speeds[1:]):
        if cur <= prev:
            raise DomainError(
                f"wind speeds must be strictly increasing, got {prev} "
                f"followed by {cur}")
    rows = []
    for v in speeds:
        w0 = mppt_equilibrium(v, params)
        rows.append({
            "v_w": v,
            "p_0": mppt_reference(w0, params),
            "delta_p_max": max_injection(v, t_del, params),
        })
    return rows


def format_table_csv(rows: Iterable[dict]) -> str:
    lines = ["v_w,p_0,delta_p_max"]
    for r in rows:
        lines.append(f"{r['v_w']:.6f},{r['p_0']:.6f},{r['delta_p_max']:.6f}")
    return "\n".join(lines) + "\n"


def surge_reference(plan: SurgePlan, t_since_trigger: float) -> float:
    """Surge shape: flat plateau, then a linear ramp back to zero."""
    if t_since_trigger < 0.0:
        return 0.0
    if t_since_trigger < plan.t_del:
        return plan.delta_p
    tail = t_since_trigger - plan.t_del
    if plan.t_rec > 0.0 and tail < plan.t_rec:
        return plan.delta_p * (1.0 - tail / plan.t_rec)
    return 0.0
