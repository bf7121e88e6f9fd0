"""Turbine aerodynamics, tracking reference and drive-train stepping."""

import math
from dataclasses import replace

import numpy as np
import pytest

from windsurge.errors import DomainError, IntegrationBlowupError, StepSizeError
from windsurge.turbine import (
    BETZ_LIMIT,
    DEFAULT_CP_COEFFS,
    Mode,
    TurbineState,
    cp_coefficient,
    mechanical_power,
    mppt_equilibrium,
    mppt_reference,
    optimal_tip_speed_ratio,
    steady_state,
    step,
    tip_speed_ratio,
)


# ---------------------------------------------------------------- Cp surface

def test_cp_vanishes_at_stall():
    # a stalled rotor extracts essentially nothing
    assert 0.0 <= cp_coefficient(1e-6, 0.0) < 1e-6


def test_cp_maximum_location_and_value():
    # independent grid search over lambda, step 1e-4
    lams = np.arange(0.1, 15.0, 1e-4)
    vals = np.array([cp_coefficient(l, 0.0) for l in lams])
    i = int(np.argmax(vals))
    lam_star = optimal_tip_speed_ratio(DEFAULT_CP_COEFFS)
    assert abs(lams[i] - lam_star) < 2e-4
    assert abs(vals[i] - 0.4800) < 1e-3
    assert abs(lam_star - 8.1) < 0.05
    # unique interior maximum: strictly unimodal around the peak
    left = vals[: i + 1]
    right = vals[i:]
    assert np.all(np.diff(left[left > 0.01]) > 0)
    assert np.all(np.diff(right) < 1e-12)


def test_pitching_sheds_power():
    lam_star = optimal_tip_speed_ratio(DEFAULT_CP_COEFFS)
    assert cp_coefficient(lam_star, 10.0) < cp_coefficient(lam_star, 0.0)


def test_cp_domain_errors():
    with pytest.raises(DomainError):
        cp_coefficient(0.0, 0.0)
    with pytest.raises(DomainError):
        cp_coefficient(-1.0, 0.0)
    with pytest.raises(DomainError):
        cp_coefficient(8.0, -2.0)


def test_betz_bound_over_grid():
    for lam in np.arange(0.1, 15.0, 0.05):
        for beta in (0.0, 5.0, 10.0, 20.0):
            c = cp_coefficient(float(lam), beta)
            assert 0.0 <= c < BETZ_LIMIT


# ----------------------------------------------------------- tip-speed ratio

def test_tsr_inverse_in_wind(params):
    lam1 = tip_speed_ratio(0.9, 8.0, params)
    lam2 = tip_speed_ratio(0.9, 16.0, params)
    assert lam2 == pytest.approx(lam1 / 2.0, rel=1e-12)


def test_tsr_hits_lambda_opt_by_construction(params):
    v = 9.0
    omega = params.lambda_opt * v / (params.omega_s * params.radius)
    assert tip_speed_ratio(omega, v, params) == pytest.approx(
        params.lambda_opt, rel=1e-12)


def test_tsr_reference_value(params):
    # 1.0 pu * 1.3 rad/s * 60 m / 10 m/s
    assert tip_speed_ratio(1.0, 10.0, params) == pytest.approx(7.8, abs=1e-12)


def test_tsr_domain_error(params):
    with pytest.raises(DomainError):
        tip_speed_ratio(1.0, 0.0, params)
    with pytest.raises(DomainError):
        tip_speed_ratio(1.0, -3.0, params)


# --------------------------------------------------------- mechanical power

def test_power_zero_when_cp_clamped(params):
    # far above the useful lambda range the raw surface goes negative
    assert cp_coefficient(14.5, 0.0) == 0.0
    omega = 14.5 * 9.0 / (params.omega_s * params.radius)
    assert mechanical_power(9.0, omega, 0.0, params) == 0.0


def test_power_cubic_at_fixed_lambda(params):
    lam = 7.0
    v1, v2 = 8.0, 10.0
    w1 = lam * v1 / (params.omega_s * params.radius)
    w2 = lam * v2 / (params.omega_s * params.radius)
    p1 = mechanical_power(v1, w1, 0.0, params)
    p2 = mechanical_power(v2, w2, 0.0, params)
    assert p2 / p1 == pytest.approx((v2 / v1) ** 3, rel=1e-12)


def test_power_matches_reference_at_equilibrium(params):
    # fixed point solved independently by bisection on the power balance
    v = 9.44
    lo, hi = 0.4, 1.3
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if (mechanical_power(v, mid, 0.0, params)
                - mppt_reference(mid, params)) > 0.0:
            lo = mid
        else:
            hi = mid
    w_eq = 0.5 * (lo + hi)
    assert abs(mechanical_power(v, w_eq, 0.0, params)
               - params.k_opt * w_eq ** 3) <= 1e-6
    assert w_eq == pytest.approx(mppt_equilibrium(v, params), abs=1e-9)


# ------------------------------------------------------------ MPPT reference

def test_mppt_capped_above_max_speed(params):
    assert mppt_reference(params.omega_r_max + 0.01, params) == params.p_max
    assert mppt_reference(params.omega_r_max, params) == params.p_max


def test_mppt_cubic_through_origin(params):
    assert mppt_reference(1e-9, params) == pytest.approx(0.0, abs=1e-24)


def test_mppt_reference_value(params):
    custom = replace(params, k_opt=0.4412)
    assert mppt_reference(0.8, custom) == pytest.approx(0.2258944, abs=1e-12)


# -------------------------------------------------------------- params checks

def test_k_opt_consistent_with_geometry(params):
    k_ref = params.k_opt_from_geometry()
    assert abs(params.k_opt - k_ref) <= 1e-9 * k_ref
    params.validate()


def test_params_validation_rejects_bad_values(params):
    with pytest.raises(DomainError):
        replace(params, omega_r_min=1.3)        # above omega_r_max
    with pytest.raises(DomainError):
        replace(params, eta=0.0)
    with pytest.raises(DomainError):
        replace(params, t_g=-0.01)
    with pytest.raises(DomainError):
        replace(params, p_lim=0.9)              # below p_max
    with pytest.raises(DomainError):
        replace(params, k_opt=0.9).validate()   # inconsistent with geometry


# ------------------------------------------------------------------- stepping

def test_step_holds_balance(params):
    state = steady_state(9.0, params)
    nxt = step(state, state.p_m, 9.0, 0.001, params)
    assert nxt.omega_r == pytest.approx(state.omega_r, abs=1e-12)


def test_step_filter_time_constant(params):
    # first-order lag: 63.21% of a reference step after t_g seconds
    state = TurbineState(omega_r=1.0, p_e=0.5, p_m=0.5, p_cmd=0.5)
    dt = 0.0005
    target = 0.7
    n = int(round(params.t_g / dt))
    s = state
    for _ in range(n):
        s = step(s, target, 9.0, dt, params)
    frac = (s.p_e - 0.5) / (target - 0.5)
    assert frac == pytest.approx(1.0 - math.exp(-1.0), rel=0.02)


def test_step_surge_against_fine_step_oracle(params):
    # independent forward-Euler integration at dt=1e-5 of the same dynamics
    v = 9.44
    state = steady_state(v, params)
    surge = 0.1
    ref = state.p_m + surge

    w, pc = state.omega_r, state.p_cmd
    dt_fine = 1e-5
    aero = 0.5 * params.rho * params.swept_area * v ** 3 / params.base_watts
    for _ in range(int(round(5.0 / dt_fine))):
        lam = w * params.omega_s * params.radius / v
        pm = aero * cp_coefficient(lam, 0.0, params.cp_coeffs)
        w += dt_fine * (pm - pc) / (2.0 * params.h_t)
        pc += dt_fine * (min(ref, params.p_lim) - pc) / params.t_g
    oracle_drop = state.omega_r - w

    s = state
    for _ in range(int(round(5.0 / 0.001))):
        s = step(s, ref, v, 0.001, params)
    assert (state.omega_r - s.omega_r) == pytest.approx(oracle_drop, abs=1e-4)


def test_step_rejects_large_dt(params):
    state = steady_state(9.0, params)
    with pytest.raises(StepSizeError):
        step(state, 0.5, 9.0, params.t_g / 2.0, params)
    with pytest.raises(StepSizeError):
        step(state, 0.5, 9.0, 0.0, params)


def test_step_blowup_detected(params):
    # almost no inertia and a huge export demand drives the speed negative
    tiny = replace(params, h_t=0.001)
    state = TurbineState(omega_r=0.05, p_e=1.2, p_m=0.0, p_cmd=1.2)
    with pytest.raises(IntegrationBlowupError):
        s = state
        for _ in range(200):
            s = step(s, 1.2, 9.0, 0.005, tiny)


def test_state_requires_positive_speed():
    with pytest.raises(DomainError):
        TurbineState(omega_r=0.0, p_e=0.0, p_m=0.0, p_cmd=0.0)


# ------------------------------------------------------- closed-loop behavior

@pytest.mark.parametrize("omega0,v_w", [(0.75, 9.0), (0.95, 10.0), (1.15, 8.0)])
def test_mppt_converges_to_lambda_opt(params, omega0, v_w):
    state = TurbineState(omega_r=omega0,
                         p_e=mppt_reference(omega0, params),
                         p_m=mechanical_power(v_w, omega0, 0.0, params),
                         p_cmd=mppt_reference(omega0, params))
    dt = 0.004
    for _ in range(int(round(120.0 / dt))):
        state = step(state, mppt_reference(state.omega_r, params), v_w, dt, params)
    lam = tip_speed_ratio(state.omega_r, v_w, params)
    assert abs(lam - params.lambda_opt) <= 0.02


def test_energy_bookkeeping(params):
    # 2H * d(omega^2/2)/dt = omega * (P_m - P_e) under the power-form swing
    # equation, so the kinetic ledger uses the speed-weighted integral.
    v = 9.0
    state = steady_state(v, params)
    dt = 0.001
    w0 = state.omega_r
    imbalance = []
    s = state
    for i in range(int(round(8.0 / dt))):
        ref = mppt_reference(s.omega_r, params) + (0.08 if i * dt < 4.0 else -0.05)
        nxt = step(s, ref, v, dt, params)
        imbalance.append(0.5 * ((s.p_m - s.p_e) * s.omega_r
                                + (nxt.p_m - nxt.p_e) * nxt.omega_r))
        s = nxt
    integral = dt * sum(imbalance)
    kinetic = params.h_t * (s.omega_r ** 2 - w0 ** 2)
    assert kinetic == pytest.approx(integral, abs=1e-3 * abs(integral))


def test_converter_ceiling_never_exceeded(params):
    rng = np.random.default_rng(42)
    state = steady_state(10.0, params)
    dt = 0.002
    for _ in range(3000):
        ref = float(rng.uniform(-0.5, 3.0))
        state = step(state, ref, 10.0, dt, params)
        assert state.p_e <= params.p_lim + 1e-12


def test_steady_state_mode(params):
    assert steady_state(9.0, params).mode is Mode.MPPT
