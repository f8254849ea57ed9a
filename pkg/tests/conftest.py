"""Shared fixtures: the expensive scenario runs are executed once per session
and reused by the acceptance criteria and any test that needs a real record."""
from __future__ import annotations

import time

import pytest

import owfsim as o


def _timed_run(preset: str, **cfg_kwargs):
    scenario = o.get_preset(preset)
    cfg = o.SimConfig(**cfg_kwargs) if cfg_kwargs else o.SimConfig()
    t0 = time.perf_counter()
    record = o.run(scenario, cfg)
    wall = time.perf_counter() - t0
    return record, wall


@pytest.fixture(scope="session")
def blackstart_virtual():
    """Delayed black start, every outer loop on virtual power (dt = 20 us)."""
    return _timed_run("blackstart-virtual")


@pytest.fixture(scope="session")
def blackstart_virtual_half_dt():
    """Same scenario integrated at half the plant step."""
    return _timed_run("blackstart-virtual", dt_plant=10e-6)


@pytest.fixture(scope="session")
def blackstart_measured():
    """Delayed black start with QV and PV loops on measured power."""
    return _timed_run("blackstart-measured-droop")


@pytest.fixture(scope="session")
def ramp_nopmin_measured():
    """Power ramp, reverse power unrestricted, all loops on measured power."""
    return _timed_run("ramp-nopmin-measured")


@pytest.fixture(scope="session")
def ramp_pmin_measured_pv():
    """Power ramp with a zero reverse-power floor and the PV loop on measured power."""
    return _timed_run("ramp-pmin-measured-pv")


@pytest.fixture(scope="session")
def ramp_pmin_virtual():
    """Power ramp with a zero reverse-power floor, every loop on virtual power."""
    return _timed_run("ramp-pmin-virtual")
