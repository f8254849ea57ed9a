"""Fixed-step simulation engine.

The plant is advanced with classical RK4 at a fine step; each string
controller executes on its own (coarser) sample grid with a one-sample
actuation delay, its output held constant between samples.  Reference start
signals pass through exact discrete delay lines on the control grid.  A run is
strictly single-threaded and deterministic: identical inputs produce
bit-identical records.

Numeric divergence (any state magnitude beyond 10^3 pu) ends the run with a
Diverged status and timestamp.  That is an expected, first-class outcome for
the deliberately unstable ablation scenarios, not a simulator failure.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from . import plant as plant_mod
from .controller import Controller
from .record import STATUS_CONVERGED, STATUS_DIVERGED, RunRecord, column_names
from .scenario import ScenarioSpec
from .spacevec import wrap_angle

DIVERGENCE_BOUND = 1e3  # pu


@dataclass
class SimConfig:
    dt_plant: float = 20e-6
    ts_control: float = 200e-6
    t_end: float | None = None   # defaults to the scenario horizon
    record_decimation: int = 2   # record every Nth control sample
    energy_audit: bool = False   # accumulate the stored-energy balance residual

    def validate(self) -> None:
        if self.dt_plant <= 0.0 or self.ts_control <= 0.0:
            raise ValueError("step sizes must be positive")
        ratio = self.ts_control / self.dt_plant
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("ts_control must be an integer multiple of dt_plant")
        if self.record_decimation < 1:
            raise ValueError("record_decimation must be >= 1")
        if self.t_end is not None and self.t_end <= 0.0:
            raise ValueError("t_end must be positive")


class DelayLine:
    """Exact integer-sample delay on the control grid: out(t) = in(t - delay)."""

    def __init__(self, delay: float, ts: float, fill: float = 0.0):
        if delay < 0.0:
            raise ValueError("delay must be nonnegative")
        self.n = int(round(delay / ts))
        self._queue = deque([fill] * self.n)

    def step(self, sample: float) -> float:
        if self.n == 0:
            return sample
        self._queue.append(sample)
        return self._queue.popleft()


def _rk4_step(params, t, y, v_conv, h):
    deriv = plant_mod.derivatives
    k1 = deriv(params, t, y, v_conv)
    y2 = [yi + 0.5 * h * ki for yi, ki in zip(y, k1)]
    k2 = deriv(params, t + 0.5 * h, y2, v_conv)
    y3 = [yi + 0.5 * h * ki for yi, ki in zip(y, k2)]
    k3 = deriv(params, t + 0.5 * h, y3, v_conv)
    y4 = [yi + h * ki for yi, ki in zip(y, k3)]
    k4 = deriv(params, t + h, y4, v_conv)
    h6 = h / 6.0
    y_new = [yi + h6 * (a + 2.0 * (b + c) + d)
             for yi, a, b, c, d in zip(y, k1, k2, k3, k4)]
    plant_mod.clamp_state(params, y_new)
    return y_new


def _diverged(y, controllers) -> bool:
    for v in y:
        if not (abs(v) < DIVERGENCE_BOUND):  # also catches NaN
            return True
    for c in controllers:
        st = c.state
        if not (abs(st.pv_integrator) < DIVERGENCE_BOUND
                and abs(st.avc_integrator) < DIVERGENCE_BOUND
                and abs(st.omega) < DIVERGENCE_BOUND):
            return True
    return False


def run(scenario: ScenarioSpec, config: SimConfig | None = None) -> RunRecord:
    """Simulate one scenario and return the sampled record."""
    cfg = config if config is not None else SimConfig()
    cfg.validate()
    scenario.validate()

    pp = scenario.plant
    n = pp.n_strings
    ts = cfg.ts_control
    t_end = cfg.t_end if cfg.t_end is not None else scenario.t_end
    n_sub = int(round(ts / cfg.dt_plant))
    h = ts / n_sub
    n_ctrl = int(round(t_end / ts))
    w = pp.omega_base

    controllers = []
    for s in scenario.strings:
        params = replace(scenario.controller, p_min=scenario.p_min,
                         i_max=scenario.i_max, ts=ts)
        controllers.append(Controller(params, s.feedback))

    v_delay = [DelayLine(s.v_ramp_delay, ts) for s in scenario.strings]
    p_delay = [DelayLine(s.p_ramp_delay, ts) for s in scenario.strings]

    y = plant_mod.initial_state(pp)
    v_conv = [0j] * n
    for k, c in enumerate(controllers):
        c.initialize(y[3 * k + 1])

    names = column_names(n)
    data: dict[str, list] = {name: [] for name in names}
    status = STATUS_CONVERGED
    diverged_at = None

    audit_residual = 0.0
    max_audit_residual = 0.0
    e_prev = plant_mod.stored_energy(pp, y) if cfg.energy_audit else 0.0

    for step in range(n_ctrl + 1):
        t = step * ts

        if _diverged(y, controllers):
            status = STATUS_DIVERGED
            diverged_at = t
            break

        outs = []
        for k, c in enumerate(controllers):
            v_ext = v_delay[k].step(scenario.v_ext.value(t))
            p_ref = p_delay[k].step(scenario.p_ref.value(t))
            outs.append(c.step(p_ref, scenario.q_ref, v_ext,
                               y[3 * k + 1], y[3 * k]))

        if step % cfg.record_decimation == 0:
            data["t"].append(t)
            for k, o in enumerate(outs, start=1):
                data[f"vpcc_mag_{k}"].append(abs(y[3 * (k - 1) + 1]))
                data[f"p_{k}"].append(o.p)
                data[f"q_{k}"].append(o.q)
                data[f"p_virt_{k}"].append(o.p_virt)
                data[f"q_virt_{k}"].append(o.q_virt)
                data[f"i_mag_{k}"].append(abs(y[3 * (k - 1)]))
                data[f"i_ref0_mag_{k}"].append(abs(o.i_ref0))
                data[f"omega_{k}"].append(o.omega)
                data[f"v_ref_{k}"].append(o.v_ref)
                data[f"phi_rel_{k}"].append(wrap_angle(o.phi - w * t))
                data[f"lim_p_{k}"].append(1.0 if o.lim_p_active else 0.0)
                data[f"lim_i_{k}"].append(1.0 if o.lim_i_active else 0.0)
            if pp.stiff_bus_voltage is None:
                data["v_on"].append(y[3 * n + 3])
                data["v_dc_off"].append(y[3 * n + 1])
                data["i_dc"].append(y[3 * n + 2])
            else:
                data["v_on"].append(0.0)
                data["v_dc_off"].append(0.0)
                data["i_dc"].append(0.0)

        if step == n_ctrl:
            break

        # One-sample actuation delay: the plant over [t, t+ts) is driven by
        # the outputs computed at the previous control instant, rotating at
        # nominal frequency within the hold interval (see plant.derivatives).
        for sub in range(n_sub):
            t_sub = t + sub * h
            if cfg.energy_audit:
                p_in, p_diss, p_exp = plant_mod.power_flows(pp, t_sub, y, v_conv)
                bal = p_in - p_diss - p_exp
            y = _rk4_step(pp, t_sub, y, v_conv, h)
            if cfg.energy_audit:
                p_in, p_diss, p_exp = plant_mod.power_flows(pp, t_sub + h, y, v_conv)
                bal2 = p_in - p_diss - p_exp
                e_now = plant_mod.stored_energy(pp, y)
                audit_residual += (e_now - e_prev) - 0.5 * h * (bal + bal2)
                e_prev = e_now
                max_audit_residual = max(max_audit_residual, abs(audit_residual))
        # v_ref_s is the stationary-frame vector intended at the start of its
        # application interval (t + ts); de-rotate to the t = 0 reference used
        # by plant.derivatives.
        derot = complex(math.cos(w * (t + ts)), -math.sin(w * (t + ts)))
        v_conv = [o.v_ref_s * derot for o in outs]

    header = {
        "scenario": {**scenario.to_dict(), "n_strings": n},
        "sim": {"dt_plant": cfg.dt_plant, "ts_control": ts, "t_end": t_end,
                "record_decimation": cfg.record_decimation},
        "bases": {"omega_base": w, "n_wt": list(pp.n_wt),
                  "note": "string base = 18 MVA x n_wt; farm base = sum of strings"},
    }
    if cfg.energy_audit:
        header["energy_audit"] = {"final_residual": audit_residual,
                                  "max_abs_residual": max_audit_residual}

    columns = {name: np.asarray(vals, dtype=float) for name, vals in data.items()}
    return RunRecord(header=header, columns=columns, status=status,
                     diverged_at=diverged_at)
