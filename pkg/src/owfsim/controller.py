"""Grid-forming control of one aggregated wind-turbine string.

The control chain, executed once per sample:

  measurements -> (virtual) power computation -> per-loop feedback selection
  -> power synchronization loop -> voltage magnitude reference (QV droop +
  PV control) -> alternating voltage controller (AVC) -> reverse-power
  projection -> current magnitude limit -> stationary-frame current control
  -> modulation limit.

"Virtual" active/reactive power is computed from the *unmodified* AVC current
reference instead of the measured current.  Feeding the outer loops with the
virtual quantities keeps them blind to limiter action, which is what makes
delayed black starts and power ramps survivable; each loop's feedback source
is a fixed per-run switch.

Time bases: all gains are per unit.  Bandwidths (alpha_*) and the frequency
droop are per unit of the nominal frequency; the inertia constant H and the
PV integral gain are kept in SI seconds (see README).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

from .spacevec import (
    OMEGA_BASE_50HZ,
    SpaceVector,
    complex_power,
    to_dq,
    wrap_angle,
)


@dataclass
class ControllerParams:
    km: float = 20.0              # frequency droop (pu)
    inertia_h: float = 1.0        # inertia time constant (s)
    td: float = 0.0               # damper emulation time constant (pu)
    k_qv: float = 0.05            # QV droop gain (pu)
    alpha_q: float = 0.2          # Q-feedback filter bandwidth (pu)
    k_pv: float = 0.75            # PV proportional gain (pu)
    k_pv_i: float = 5.0           # PV integral gain (1/s)
    alpha_p: float = 0.5          # P-feedback filter bandwidth (pu)
    r_a: float = 0.36             # active resistance / current P gain (pu)
    alpha_a: float = 0.01         # AVC integral bandwidth (pu)
    alpha_f: float = 2.0          # PCC voltage feedforward filter bandwidth (pu)
    i_max: float = 1.2            # current magnitude limit (pu)
    p_min: float = 0.0            # reverse power floor (pu, -inf disables)
    omega_1: float = OMEGA_BASE_50HZ  # nominal frequency, rad/s (= 1 pu)
    l_f: float = 0.18             # filter/transformer inductance (pu)
    r_f: float = 0.01             # filter/transformer resistance (pu)
    v_dc: float = 1.9754          # available DC-link voltage (pu)
    ts: float = 200e-6            # control sample period (s)
    v_ref_max: float = 1.2        # voltage reference clamp (pu)
    v_ref_floor: float = 0.05     # guard for the AVC feedforward division (pu)
    v_proj_floor: float = 0.01    # bypass threshold of the reverse-power projection (pu)

    def validate(self) -> None:
        if not self.alpha_q < 1.0:
            raise ValueError("alpha_q must be below the nominal frequency (1 pu)")
        if not self.alpha_p < 1.0:
            raise ValueError("alpha_p must be below the nominal frequency (1 pu)")
        if not self.alpha_a < 0.05:
            raise ValueError("alpha_a must be small (< 0.05 pu)")
        # non-strict: the published defaults sit exactly at alpha_f = r_a/l_f
        if self.alpha_f > self.r_a / self.l_f:
            raise ValueError("alpha_f must not exceed r_a/l_f")
        if self.i_max <= 0.0:
            raise ValueError("i_max must be positive")
        if self.ts <= 0.0 or self.inertia_h <= 0.0:
            raise ValueError("ts and inertia_h must be positive")

    @property
    def m_virtual(self) -> float:
        """Virtual inertia M in normalized time, from the swing convention M = 2 H w1."""
        return 2.0 * self.inertia_h * self.omega_1


@dataclass(frozen=True)
class FeedbackConfig:
    """Per-loop choice between virtual and measured power feedback."""

    sync_uses_virtual: bool = True
    qv_uses_virtual: bool = True
    pv_uses_virtual: bool = True


class TustinLowPass:
    """First-order low pass H_a(s) = a/(s+a), discretized with the bilinear
    transform so the DC gain stays exactly 1."""

    __slots__ = ("b", "a1", "y", "u_prev")

    def __init__(self, bandwidth_rad: float, ts: float, y0: complex = 0.0):
        x = bandwidth_rad * ts
        self.b = x / (2.0 + x)
        self.a1 = (2.0 - x) / (2.0 + x)
        self.y = y0
        self.u_prev = y0

    def step(self, u):
        self.y = self.a1 * self.y + self.b * (u + self.u_prev)
        self.u_prev = u
        return self.y


@dataclass
class ControllerState:
    phi: float = 0.0              # dq angle (rad), wrapped to (-pi, pi]
    omega: float = 1.0            # internal frequency (pu)
    sync_state: float = 0.0       # internal state of K_P(s)/(frequency offset)
    pv_integrator: float = 0.0
    avc_integrator: complex = 0.0
    # Unmodified current reference of the previous sample, stored in the dq
    # frame so the stationary-frame rotation accrued over one sample does not
    # skew the virtual power (it would leak Q into P_virt as ~omega*Ts*Q).
    i_ref0_prev: complex = 0.0
    q_filter: TustinLowPass = None
    p_filter: TustinLowPass = None
    vpcc_filter: TustinLowPass = None


@dataclass
class ControllerOutputs:
    """Actuation plus every intermediate signal worth logging."""

    v_ref_s: complex = 0.0        # converter voltage reference, stationary frame
    p: float = 0.0
    q: float = 0.0
    p_virt: float = 0.0
    q_virt: float = 0.0
    v_ref: float = 0.0            # voltage magnitude reference
    omega: float = 1.0
    phi: float = 0.0
    i_ref0: complex = 0.0         # dq
    i_ref: complex = 0.0          # dq
    lim_p_active: bool = False
    lim_i_active: bool = False


def sync_step(state: ControllerState, p_ref: float, p_bar: float,
              params: ControllerParams, dt: float) -> tuple[float, float]:
    """Advance the power synchronization loop by one sample (forward Euler).

    Realizes phi = (1/s)[w1 + K_P(s)(p_ref - p_bar)] with
    K_P(s) = (s Td + 1)/(s M + km); for Td = 0 this is the swing equation
    d(w_dev)/dt = (dP - km w_dev) / (2H) with phi' = w1 (1 + w_dev).
    Returns the updated (phi, omega).
    """
    dp = p_ref - p_bar
    m = params.m_virtual
    d_c = params.td / m  # lead feedthrough of K_P(s)
    state.sync_state += dt * ((1.0 - params.km * d_c) * dp
                              - params.km * state.sync_state) / (2.0 * params.inertia_h)
    omega_dev = state.sync_state + d_c * dp
    state.omega = 1.0 + omega_dev
    state.phi = wrap_angle(state.phi + dt * params.omega_1 * state.omega)
    return state.phi, state.omega


def voltage_ref_step(state: ControllerState, v_ext: float, q_ref: float, q_bar: float,
                     p_ref: float, p_bar: float, params: ControllerParams,
                     dt: float) -> float:
    """One sample of the voltage magnitude reference generation.

    QV branch: proportional on the low-pass-filtered Q error.  PV branch: PI on
    the filtered P error, with conditional-integration anti-windup against the
    [0, v_ref_max] clamp.
    """
    q_f = state.q_filter.step(q_bar)
    p_f = state.p_filter.step(p_bar)
    e_q = q_ref - q_f
    e_p = p_ref - p_f
    v_raw = v_ext + params.k_qv * e_q + params.k_pv * e_p + state.pv_integrator
    v_ref = min(max(v_raw, 0.0), params.v_ref_max)
    winding_in = (v_raw > params.v_ref_max and e_p > 0.0) or (v_raw < 0.0 and e_p < 0.0)
    if not winding_in:
        state.pv_integrator += dt * params.k_pv_i * e_p
    return v_ref


def avc_step(state: ControllerState, p_ref: float, q_ref: float, v_ref: float,
             v_pcc: SpaceVector, params: ControllerParams,
             dt: float) -> tuple[SpaceVector, SpaceVector]:
    """One sample of the alternating voltage controller, in the dq frame.

    i_ref0 = (p_ref - j q_ref)/v_ref + (1/R_a)(1 + alpha_a/s)[v_ref - v_pcc_f]
    where v_ref is the real-axis target vector and v_pcc_f the filtered PCC
    voltage.  The division is guarded by v_ref_floor (black start begins at
    zero volts).  Returns (i_ref0, v_pcc_f).
    """
    v_pcc_f = state.vpcc_filter.step(v_pcc)
    err = complex(v_ref, 0.0) - v_pcc_f
    v_div = max(v_ref, params.v_ref_floor)
    i_ref0 = (complex(p_ref, -q_ref) / v_div
              + err / params.r_a
              + state.avc_integrator)
    state.avc_integrator += dt * (params.alpha_a * params.omega_1 / params.r_a) * err
    return i_ref0, v_pcc_f


def limit_reverse_power(i_ref0: SpaceVector, v_pcc_f: SpaceVector, p_min: float,
                        v_floor: float = 0.01) -> SpaceVector:
    """Project the current reference so Re{v i*} >= p_min, preserving Im{v i*}.

    Bypassed when the limit is disabled (p_min = -inf) or the voltage is too
    small for the projection to be defined.
    """
    if p_min == -math.inf:
        return i_ref0
    vsq = v_pcc_f.real * v_pcc_f.real + v_pcc_f.imag * v_pcc_f.imag
    if vsq < v_floor * v_floor:
        return i_ref0
    p = (v_pcc_f * i_ref0.conjugate()).real
    excess = min(0.0, p - p_min)
    if excess == 0.0:
        return i_ref0
    return i_ref0 - v_pcc_f * (excess / vsq)


def limit_current_magnitude(i_refr: SpaceVector, i_max: float) -> SpaceVector:
    """Angle-preserving scaling onto the |i| <= i_max disc."""
    mag = abs(i_refr)
    if mag <= i_max:
        return i_refr
    return i_refr * (i_max / mag)


def virtual_power(v_pcc_s: SpaceVector, i_ref0_s: SpaceVector) -> tuple[float, float]:
    """(P, Q) computed from the unmodified current reference in the stationary frame."""
    return complex_power(v_pcc_s, i_ref0_s)


def select_feedback(cfg: FeedbackConfig, measured: tuple[float, float],
                    virtual: tuple[float, float]) -> tuple[float, float, float]:
    """Route virtual or measured power to each loop: (p_sync, p_pv, q_qv)."""
    p, q = measured
    p_v, q_v = virtual
    p_sync = p_v if cfg.sync_uses_virtual else p
    p_pv = p_v if cfg.pv_uses_virtual else p
    q_qv = q_v if cfg.qv_uses_virtual else q
    return p_sync, p_pv, q_qv


def current_control(i_ref_s: SpaceVector, i_s: SpaceVector, v_pcc_f_s: SpaceVector,
                    params: ControllerParams) -> SpaceVector:
    """Stationary-frame current controller with PCC voltage and inductor-drop
    feedforward: v_ref = R_a (i_ref - i) + j w1 L_f i_ref + v_pcc_f."""
    return (params.r_a * (i_ref_s - i_s)
            + 1j * params.l_f * i_ref_s
            + v_pcc_f_s)


def modulation_limit(v_ref_s: SpaceVector, v_dc: float) -> SpaceVector:
    """Clamp the converter voltage reference to the realizable |v| <= v_dc/2."""
    lim = 0.5 * v_dc
    mag = abs(v_ref_s)
    if mag <= lim:
        return v_ref_s
    return v_ref_s * (lim / mag)


class Controller:
    """One string controller instance: a self-contained state machine mutated
    only by step(); instances share nothing."""

    def __init__(self, params: ControllerParams | None = None,
                 feedback: FeedbackConfig | None = None):
        self.params = replace(params) if params is not None else ControllerParams()
        self.params.validate()
        self.cfg = feedback if feedback is not None else FeedbackConfig()
        p = self.params
        self.state = ControllerState(
            q_filter=TustinLowPass(p.alpha_q * p.omega_1, p.ts),
            p_filter=TustinLowPass(p.alpha_p * p.omega_1, p.ts),
            vpcc_filter=TustinLowPass(p.alpha_f * p.omega_1, p.ts),
        )
        # The actuation is applied one control sample late (computation +
        # modulator update delay); rotating the commanded vector by one sample
        # makes it meet the frame at its application instant.
        self._hold_rot = cmath.exp(1j * p.omega_1 * p.ts)

    def initialize(self, v_pcc_s: SpaceVector) -> None:
        """Preload the PCC voltage filter with the measurement at enable time,
        preventing a spurious inrush at controller enable."""
        v_pcc = to_dq(v_pcc_s, self.state.phi)
        self.state.vpcc_filter.y = v_pcc
        self.state.vpcc_filter.u_prev = v_pcc

    def step(self, p_ref: float, q_ref: float, v_ext: float,
             v_pcc_s: SpaceVector, i_s: SpaceVector) -> ControllerOutputs:
        """Execute one control sample and return actuation plus logged signals."""
        p = self.params
        st = self.state
        dt = p.ts

        p_meas, q_meas = complex_power(v_pcc_s, i_s)
        # The stored reference is one sample old; evaluate it against the PCC
        # voltage in the frame advanced by one sample of rotation, otherwise
        # ~omega*Ts of the reactive power leaks into P_virt and winds the PV
        # integrator.
        phi_pred = st.phi + dt * p.omega_1 * st.omega
        p_virt, q_virt = virtual_power(to_dq(v_pcc_s, phi_pred), st.i_ref0_prev)
        p_sync, p_pv, q_qv = select_feedback(
            self.cfg, (p_meas, q_meas), (p_virt, q_virt))

        phi, omega = sync_step(st, p_ref, p_sync, p, dt)
        v_pcc = to_dq(v_pcc_s, phi)
        v_ref = voltage_ref_step(st, v_ext, q_ref, q_qv, p_ref, p_pv, p, dt)
        i_ref0, v_pcc_f = avc_step(st, p_ref, q_ref, v_ref, v_pcc, p, dt)

        i_refr = limit_reverse_power(i_ref0, v_pcc_f, p.p_min, p.v_proj_floor)
        lim_p = i_refr is not i_ref0
        i_ref = limit_current_magnitude(i_refr, p.i_max)
        lim_i = abs(i_refr) > p.i_max

        rot = cmath.exp(1j * phi)
        st.i_ref0_prev = i_ref0
        i_ref_s = i_ref * rot
        v_pcc_f_s = v_pcc_f * rot

        # Current control with a series-resistance feedforward on top, all
        # rotated one sample ahead to compensate the actuation delay; without
        # the resistive term the proportional loop keeps a static error.
        v_out = self._hold_rot * (current_control(i_ref_s, i_s, v_pcc_f_s, p)
                                  + p.r_f * i_ref_s)
        v_out = modulation_limit(v_out, p.v_dc)

        return ControllerOutputs(
            v_ref_s=v_out, p=p_meas, q=q_meas, p_virt=p_virt, q_virt=q_virt,
            v_ref=v_ref, omega=omega, phi=phi, i_ref0=i_ref0, i_ref=i_ref,
            lim_p_active=lim_p, lim_i_active=lim_i,
        )
