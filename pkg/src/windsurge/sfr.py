"""Low-order system frequency response model.

Single aggregate inertia with damping, closed through a reheat governor
(droop R, gain K_m, reheat time constant T_R, high-pressure fraction F_H).
The block diagram reduces to a second-order underdamped system, which gives
a closed-form frequency nadir; a fixed-step state-space simulation of the
same diagram is provided for cross-validation and for arbitrary imbalance
traces in co-simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, StepSizeError, UnsupportedRegimeError


@dataclass(frozen=True)
class SfrParams:
    f_b: float                  # base frequency, Hz
    h: float                    # aggregate inertia constant, s
    d: float                    # load damping, pu
    r_droop: float              # governor droop, pu
    k_m: float                  # mechanical power gain factor, pu
    f_h: float                  # high-pressure turbine power fraction
    t_r: float                  # reheat time constant, s

    def __post_init__(self):
        if self.h <= 0.0 or self.t_r <= 0.0 or self.r_droop <= 0.0:
            raise DomainError("h, t_r and r_droop must be positive")
        if not (0.0 <= self.f_h <= 1.0):
            raise DomainError("f_h must lie in [0, 1]")
        if self.f_b <= 0.0 or self.k_m <= 0.0 or self.d < 0.0:
            raise DomainError("f_b and k_m must be positive, d non-negative")


@dataclass(frozen=True)
class SfrDerived:
    omega_n: float              # natural frequency, rad/s
    xi: float                   # damping ratio
    alpha: float                # response envelope coefficient
    omega_d: float              # damped oscillation frequency, rad/s
    phi: float                  # response phase, rad
    t_n: float                  # time of the post-event frequency minimum, s


def with_wind_penetration(params: SfrParams, wind_fraction: float) -> SfrParams:
    """Scale inertia and governor gain by the remaining synchronous fraction."""
    if not (0.0 <= wind_fraction < 1.0):
        raise DomainError("wind penetration must lie in [0, 1)")
    sync = 1.0 - wind_fraction
    return replace(params, h=params.h * sync, k_m=params.k_m * sync)


def derived_constants(params: SfrParams) -> SfrDerived:
    """Second-order constants of the closed loop.

    omega_n^2 = (D R + K_m) / (2 H R T_R)
    xi        = (2 H R + (D R + K_m F_H) T_R) / (2 (D R + K_m)) * omega_n
    alpha     = sqrt((1 - 2 T_R xi omega_n + T_R^2 omega_n^2) / (1 - xi^2))
    phi       = atan2(-sqrt(1 - xi^2), omega_n T_R - xi)
    t_n       = atan2(omega_d T_R, xi omega_n T_R - 1) / omega_d

    The damping ratio carries K_m * F_H: the high-pressure fraction only
    enters through the governor numerator K_m (1 + F_H T_R s), so its damping
    contribution is scaled by the gain. t_n is the first zero of df/dt.
    """
    h, d, r, km, fh, tr = (params.h, params.d, params.r_droop, params.k_m,
                           params.f_h, params.t_r)
    dr_km = d * r + km
    omega_n = math.sqrt(dr_km / (2.0 * h * r * tr))
    xi = (2.0 * h * r + (d * r + km * fh) * tr) / (2.0 * dr_km) * omega_n
    if xi >= 1.0:
        raise UnsupportedRegimeError(
            f"damping ratio {xi:.4f} >= 1: the oscillatory closed form does "
            "not apply to this parameter set")
    q = math.sqrt(1.0 - xi * xi)
    omega_d = omega_n * q
    alpha = math.sqrt((1.0 - 2.0 * tr * xi * omega_n + tr * tr * omega_n * omega_n)
                      / (1.0 - xi * xi))
    phi = math.atan2(-q, omega_n * tr - xi)
    t_n = math.atan2(omega_d * tr, xi * omega_n * tr - 1.0) / omega_d
    return SfrDerived(omega_n=omega_n, xi=xi, alpha=alpha, omega_d=omega_d,
                      phi=phi, t_n=t_n)


def nadir_closed_form(params: SfrParams, delta_p: float) -> tuple[float, float]:
    """Frequency minimum after a step generation loss of delta_p (pu).

    Returns (f_min in Hz, nadir time in s). The response envelope is

        f(t) = f_b (1 - R/(K_m + D R) [1 + alpha e^(-xi omega_n t)
                                        sin(omega_d t + phi)] dP)

    which is affine in the disturbance size.
    """
    der = derived_constants(params)
    bracket = 1.0 + der.alpha * math.exp(-der.xi * der.omega_n * der.t_n) \
        * math.sin(der.omega_d * der.t_n + der.phi)
    gain = params.r_droop / (params.k_m + params.d * params.r_droop)
    return params.f_b * (1.0 - gain * bracket * delta_p), der.t_n


def settling_frequency(params: SfrParams, delta_p: float) -> float:
    """Quasi-steady frequency set by droop once the transient decays."""
    gain = params.r_droop / (params.k_m + params.d * params.r_droop)
    return params.f_b * (1.0 - gain * delta_p)


def check_step_size(params: SfrParams, dt: float) -> None:
    if dt <= 0.0 or dt > params.t_r / 100.0:
        raise StepSizeError(
            f"dt={dt} outside (0, t_r/100={params.t_r / 100.0}]")


def deriv(params: SfrParams, dw: float, gov: float, u: float) -> tuple:
    """State derivatives: dw is pu frequency deviation, gov the reheat state.

    The governor branch K_m (1 + F_H T_R s) / (R (1 + T_R s)) splits into a
    direct F_H feed-through and a first-order lag state:
        p_gov = -(K_m / R) (F_H dw + gov),  d(gov)/dt = ((1-F_H) dw - gov)/T_R
    """
    p_gov = -(params.k_m / params.r_droop) * (params.f_h * dw + gov)
    d_dw = (p_gov + u - params.d * dw) / (2.0 * params.h)
    d_gov = ((1.0 - params.f_h) * dw - gov) / params.t_r
    return d_dw, d_gov


def simulate(params: SfrParams, imbalance: np.ndarray, dt: float) -> np.ndarray:
    """Integrate the frequency trace for a sampled imbalance (pu, one value
    per step boundary; generation loss is negative). Fixed-step RK4 with
    midpoint imbalance averaging; returns f in Hz, same length as the input.
    """
    check_step_size(params, dt)
    u = np.asarray(imbalance, dtype=float)
    if u.ndim != 1 or len(u) < 2:
        raise DomainError("imbalance trace must be a 1-D array of >= 2 samples")
    if not np.all(np.isfinite(u)):
        raise DomainError("imbalance trace contains non-finite values")

    n = len(u) - 1
    out = np.empty(n + 1)
    out[0] = params.f_b
    dw = 0.0
    gov = 0.0
    f_b = params.f_b
    for i in range(n):
        u0 = u[i]
        u1 = u[i + 1]
        um = 0.5 * (u0 + u1)
        k1 = deriv(params, dw, gov, u0)
        k2 = deriv(params, dw + 0.5 * dt * k1[0], gov + 0.5 * dt * k1[1], um)
        k3 = deriv(params, dw + 0.5 * dt * k2[0], gov + 0.5 * dt * k2[1], um)
        k4 = deriv(params, dw + dt * k3[0], gov + dt * k3[1], u1)
        dw += dt * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]) / 6.0
        gov += dt * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]) / 6.0
        out[i + 1] = f_b * (1.0 + dw)
    return out


def format_trace_csv(times: np.ndarray, freqs: np.ndarray) -> str:
    lines = ["t,f_hz"]
    for t, f in zip(times, freqs):
        lines.append(f"{t:.6f},{f:.6f}")
    return "\n".join(lines) + "\n"


DEFAULT_SFR = SfrParams(f_b=60.0, h=5.0, d=1.0, r_droop=0.05, k_m=0.95,
                        f_h=0.3, t_r=8.0)
