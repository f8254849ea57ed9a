"""Averaged electrical model of the offshore network and the HVDC export link.

Topology, in per unit with SI time:

  per string: converter voltage source -> R_f + L_f -> PCC capacitor
              -> collector cable (series R, L with shunt halves)
  offshore bus: cable ends + switchable compensation capacitor + averaged
              24-pulse diode rectifier (AC sink)
  DC side:    rectifier EMF k_dru |v_off| behind a commutation-equivalent
              resistance -> offshore capacitor -> R-L cable -> onshore
              capacitor -> controlled current source regulating v_on

String quantities are on their own aggregation base; bus and DC quantities
on the farm base.  Rectifier, cable and link parameters are engineering
assumptions (documented in the README) since no authoritative values exist.

The state vector is a flat Python list (complex for AC, float for DC) to keep
the fixed-step integrator cheap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .spacevec import OMEGA_BASE_50HZ, SpaceVector


@dataclass
class StringElectrical:
    """Per-string circuit parameters, on the string's own base."""

    l_f: float = 0.18        # transformer stray inductance (pu)
    r_f: float = 0.01        # transformer resistance (pu)
    c_pcc: float = 0.05      # PCC shunt: WT filter bank + near cable half (pu)
    # Series impedance of the aggregated collector cable plus string
    # switchgear.  The resistive part is deliberately on the high side of the
    # plausible range: it damps the inter-string swing mode that is otherwise
    # only marginally damped by the converter controls.
    cable_r: float = 0.04    # collector cable series resistance (pu)
    cable_l: float = 0.04    # collector cable series inductance (pu)
    cable_c: float = 0.02    # collector cable far-end shunt (pu)

    def validate(self) -> None:
        if min(self.l_f, self.c_pcc, self.cable_l, self.cable_c) <= 0.0:
            raise ValueError("string inductances/capacitances must be positive")


@dataclass
class DruModel:
    """Averaged 24-pulse diode rectifier unit."""

    # AC magnitude to no-load DC voltage gain.  Chosen so conduction starts
    # when the bus reaches 0.8 pu at rated DC voltage: exporting therefore
    # never requires more converter voltage than the modulation limit allows,
    # and the no-load bus voltage has a unique, load-coupled equilibrium.
    k_dru: float = 1.25
    r_comm: float = 0.05     # commutation-equivalent (lossless) resistance (pu)
    kappa_q: float = 0.4     # reactive consumption ratio Q/P
    v_floor: float = 0.05    # AC voltage magnitude guard for the sink current


@dataclass
class HvdcLink:
    c_off: float = 0.002     # offshore DC capacitor (pu-seconds)
    r_dc: float = 0.01       # DC cable resistance (pu)
    l_dc: float = 0.1        # DC cable inductance (pu)
    c_on: float = 0.002      # onshore DC capacitor (pu-seconds)


@dataclass
class OnshoreSource:
    """Controlled current source regulating the onshore DC voltage.

    PI plus a current feedforward, both tuned to 25 Hz; when
    energize_allowed is false the source can only absorb (i_src >= 0),
    so the link can never be charged from shore.
    """

    bandwidth_hz: float = 25.0
    feedforward: bool = True
    energize_allowed: bool = False
    v_ref: float = 1.0

    @property
    def omega_bw(self) -> float:
        return 2.0 * math.pi * self.bandwidth_hz


@dataclass
class PlantParams:
    strings: list[StringElectrical] = field(default_factory=lambda: [StringElectrical(), StringElectrical()])
    n_wt: list[int] = field(default_factory=lambda: [36, 38])
    dru: DruModel = field(default_factory=DruModel)
    link: HvdcLink = field(default_factory=HvdcLink)
    onshore: OnshoreSource = field(default_factory=OnshoreSource)
    comp_cap: float = 0.1          # offshore bus compensation capacitor (farm pu)
    comp_cap_enabled: bool = True
    omega_base: float = OMEGA_BASE_50HZ
    # When set, the offshore bus is replaced by a stiff voltage of this
    # magnitude rotating at omega_base; DRU and DC side are inert.
    stiff_bus_voltage: float | None = None

    def validate(self) -> None:
        if len(self.strings) != len(self.n_wt) or not self.strings:
            raise ValueError("strings and n_wt must have equal, nonzero length")
        for s in self.strings:
            s.validate()

    @property
    def n_strings(self) -> int:
        return len(self.strings)

    @property
    def s_frac(self) -> list[float]:
        """Per-string share of the farm base (turbine ratings cancel)."""
        total = float(sum(self.n_wt))
        return [n / total for n in self.n_wt]

    @property
    def c_bus(self) -> float:
        """Total offshore bus capacitance on the farm base."""
        c = self.comp_cap if self.comp_cap_enabled else 0.0
        for s, f in zip(self.strings, self.s_frac):
            c += s.cable_c * f
        return c


# State layout: [i_conv, v_pcc, i_cable] per string (complex, string base),
# then v_off (complex, farm base), then v_dc_off, i_dc, v_on, x_on, i_ff (float).
N_DC_STATES = 5


def state_size(params: PlantParams) -> int:
    return 3 * params.n_strings + 1 + N_DC_STATES


def initial_state(params: PlantParams) -> list:
    y: list = [0j] * (3 * params.n_strings + 1)
    y += [0.0] * N_DC_STATES
    if params.stiff_bus_voltage is not None:
        # The stiff-bus harness starts pre-energized at the bus voltage
        # (zero branch currents); energizing against an already-live bus is
        # not what that mode is for and only produces a meaningless inrush.
        for k in range(params.n_strings):
            y[3 * k + 1] = complex(params.stiff_bus_voltage, 0.0)
        y[3 * params.n_strings] = complex(params.stiff_bus_voltage, 0.0)
    return y


def rectifier_current(dru: DruModel, v_off_mag: float, v_dc_off: float) -> float:
    """Algebraic rectifier DC current; the diodes block any reverse flow."""
    return max(0.0, (dru.k_dru * v_off_mag - v_dc_off) / dru.r_comm)


def dru_step(dru: DruModel, v_off: SpaceVector, i_dc: float) -> tuple[float, SpaceVector]:
    """Averaged rectifier coupling for a given DC current.

    Returns (v_rect, i_ac_sink): the DC-terminal voltage and the AC current
    drawn at the offshore bus.  The commutation drop is lossless, so the AC
    power equals v_rect * i_dc; the sink additionally draws kappa_q of that
    as reactive power (lagging).
    """
    v_mag = abs(v_off)
    if i_dc <= 0.0:
        return dru.k_dru * v_mag, 0j
    v_rect = dru.k_dru * v_mag - dru.r_comm * i_dc
    p_ac = v_rect * i_dc
    q_ac = dru.kappa_q * p_ac
    v_div = max(v_mag, dru.v_floor)
    # i such that Re{v i*} = p_ac and Im{v i*} = q_ac
    i_sink = complex(p_ac, q_ac).conjugate() * (v_off / (v_div * v_div))
    return v_rect, i_sink


def onshore_source_current(src: OnshoreSource, kp: float, v_on: float,
                           x_on: float, i_ff: float) -> float:
    """Output of the onshore regulator given its integrator and feedforward states."""
    i_raw = kp * (v_on - src.v_ref) + x_on + (i_ff if src.feedforward else 0.0)
    if not src.energize_allowed:
        return max(0.0, i_raw)
    return i_raw


def onshore_gains(params: PlantParams) -> tuple[float, float]:
    """(kp, ki) placing the v_on regulation at the configured bandwidth."""
    wb = params.onshore.omega_bw
    kp = wb * params.link.c_on
    ki = 0.25 * wb * kp
    return kp, ki


def derivatives(params: PlantParams, t: float, y: list, v_conv: list) -> list:
    """Time derivative of the full plant state.

    v_conv holds the modulation-limited converter voltage of each string
    (string base) as a phasor referenced to t = 0: between control samples the
    modulator keeps rotating it at the nominal frequency, so the instantaneous
    source voltage is v_conv[k] * exp(j w t).
    """
    w = params.omega_base
    n = params.n_strings
    frac = params.s_frac
    dy: list = [0.0] * len(y)
    rot_t = complex(math.cos(w * t), math.sin(w * t))

    if params.stiff_bus_voltage is not None:
        v_off = params.stiff_bus_voltage * complex(math.cos(w * t), math.sin(w * t))
    else:
        v_off = y[3 * n]

    # DC side first: the rectifier sink current feeds the bus equation.
    i_dc_states = y[3 * n + 1:]
    v_dc_off, i_dc, v_on, x_on, i_ff = i_dc_states
    if params.stiff_bus_voltage is None:
        dru = params.dru
        i_rect = rectifier_current(dru, abs(v_off), v_dc_off)
        _, i_dru = dru_step(dru, v_off, i_rect)

        link = params.link
        src = params.onshore
        kp, ki = onshore_gains(params)
        err = v_on - src.v_ref
        i_src_raw = kp * err + x_on + (i_ff if src.feedforward else 0.0)
        i_src = max(0.0, i_src_raw) if not src.energize_allowed else i_src_raw

        dy[3 * n + 1] = (i_rect - i_dc) / link.c_off
        d_idc = w * (v_dc_off - link.r_dc * i_dc - v_on) / link.l_dc
        if i_dc <= 0.0 and d_idc < 0.0:
            d_idc = 0.0  # diode-enforced unidirectional cable current
        dy[3 * n + 2] = d_idc
        dy[3 * n + 3] = (i_dc - i_src) / link.c_on
        # conditional integration: do not wind while clamped at zero output
        dy[3 * n + 4] = 0.0 if (i_src_raw < 0.0 and err < 0.0) else ki * err
        dy[3 * n + 5] = src.omega_bw * (i_dc - i_ff)
    else:
        i_dru = 0j

    i_bus = -i_dru  # farm base
    for k in range(n):
        s = params.strings[k]
        i_c = y[3 * k]
        v_p = y[3 * k + 1]
        i_cb = y[3 * k + 2]
        dy[3 * k] = w * (v_conv[k] * rot_t - s.r_f * i_c - v_p) / s.l_f
        dy[3 * k + 1] = w * (i_c - i_cb) / s.c_pcc
        dy[3 * k + 2] = w * (v_p - s.cable_r * i_cb - v_off) / s.cable_l
        i_bus += i_cb * frac[k]

    if params.stiff_bus_voltage is None:
        dy[3 * n] = w * i_bus / params.c_bus
    else:
        dy[3 * n] = 0j
    return dy


def clamp_state(params: PlantParams, y: list) -> None:
    """Enforce the diode clamp after an accepted integration step."""
    n = params.n_strings
    if y[3 * n + 2] < 0.0:
        y[3 * n + 2] = 0.0


def stored_energy(params: PlantParams, y: list) -> float:
    """Total stored electrical energy, farm base, in pu-seconds."""
    w = params.omega_base
    n = params.n_strings
    frac = params.s_frac
    e = 0.0
    for k in range(n):
        s = params.strings[k]
        i_c = y[3 * k]
        v_p = y[3 * k + 1]
        i_cb = y[3 * k + 2]
        e_k = (s.l_f * abs(i_c) ** 2 + s.cable_l * abs(i_cb) ** 2
               + s.c_pcc * abs(v_p) ** 2) / (2.0 * w)
        e += e_k * frac[k]
    if params.stiff_bus_voltage is None:
        v_off = y[3 * n]
        v_dc_off, i_dc, v_on = y[3 * n + 1], y[3 * n + 2], y[3 * n + 3]
        e += params.c_bus * abs(v_off) ** 2 / (2.0 * w)
        e += 0.5 * params.link.c_off * v_dc_off ** 2
        e += 0.5 * params.link.c_on * v_on ** 2
        e += params.link.l_dc * i_dc ** 2 / (2.0 * w)
    return e


def power_flows(params: PlantParams, t: float, y: list, v_conv: list) -> tuple[float, float, float]:
    """(p_in, p_dissipated, p_exported) on the farm base.

    p_in is the power injected by the converter sources, p_exported the power
    absorbed by the onshore current source.  The rectifier itself is lossless
    in this model, so together with the stored-energy derivative these close
    the balance.
    """
    n = params.n_strings
    frac = params.s_frac
    w = params.omega_base
    rot_t = complex(math.cos(w * t), math.sin(w * t))
    p_in = 0.0
    p_diss = 0.0
    for k in range(n):
        s = params.strings[k]
        i_c = y[3 * k]
        i_cb = y[3 * k + 2]
        p_in += (v_conv[k] * rot_t * i_c.conjugate()).real * frac[k]
        p_diss += (s.r_f * abs(i_c) ** 2 + s.cable_r * abs(i_cb) ** 2) * frac[k]
    p_exp = 0.0
    if params.stiff_bus_voltage is None:
        v_dc_off, i_dc, v_on, x_on, i_ff = y[3 * n + 1:]
        p_diss += params.link.r_dc * i_dc ** 2
        kp, _ = onshore_gains(params)
        i_src = onshore_source_current(params.onshore, kp, v_on, x_on, i_ff)
        p_exp = v_on * i_src
    else:
        v_off = params.stiff_bus_voltage * complex(math.cos(params.omega_base * t),
                                                   math.sin(params.omega_base * t))
        for k in range(n):
            p_exp += (v_off * y[3 * k + 2].conjugate()).real * frac[k]
    return p_in, p_diss, p_exp
