import csv
import time
from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from chargeuq.cccv import (GRID_DT, Protocol, SolverOptions, coulomb_error, qoi_extract,
                           simulate_cccv, violation_check)
from chargeuq.cell import F, CellModel, nominal_cell

CELL = nominal_cell()


@pytest.fixture(scope="module")
def ref():
    return simulate_cccv(CELL, Protocol())


def test_reference_run_shape(ref):
    assert ref.termination == "soc_reached"
    assert ref.censored and ref.end_time < 1500
    assert len(ref.time) == 151 and ref.time[1] - ref.time[0] == GRID_DT
    assert ref.phase[0] == "CC" and "CV" in ref.phase and ref.phase[-1] == "done"
    assert 0 < ref.switch_time < ref.end_time


def test_coulomb_counting(ref):
    assert coulomb_error(ref, CELL.const.capacity) < 1e-3


def test_lithium_balance_in_both_electrodes():
    # solid lithium gained per electrode area equals I/F in each electrode
    m = CellModel(CELL)
    y = m.initial_state(0.5)
    es_n = 1 - CELL.eps_n - CELL.const.eps_f_n
    es_p = 1 - CELL.eps_p - CELL.const.eps_f_p
    for I in (10.0, 64.3):
        d = m.derivatives(y, I, m.outputs(y, I)[0])
        assert d[0] * es_n * CELL.L_n * F == pytest.approx(I, rel=1e-12)
        assert d[1] * es_p * CELL.L_p * F == pytest.approx(-I, rel=1e-12)
        assert d[4] * 3600 * m.cap == pytest.approx(I, rel=1e-12)


def test_cv_tracks_vmax(ref):
    tr = ref.trace
    cv = tr["time"] > ref.switch_time
    assert cv.sum() > 10
    assert np.abs(tr["voltage"][cv] - 4.1).max() < 1e-4
    assert np.all(np.diff(tr["current"][cv]) <= 1e-9)  # current decays in CV
    cc = tr["time"] < ref.switch_time
    assert np.all(tr["voltage"][cc] <= 4.1 + 1e-9)


def test_deterministic(ref):
    again = simulate_cccv(CELL, Protocol())
    for k in ("voltage", "temperature", "eta_pl", "soc", "current"):
        assert np.array_equal(getattr(ref, k), getattr(again, k))
    assert ref.switch_time == again.switch_time and ref.end_time == again.end_time


def test_runtime():
    t0 = time.perf_counter()
    simulate_cccv(CELL, Protocol())
    assert time.perf_counter() - t0 < 5.0


def test_step_halving_converges(ref):
    fine = simulate_cccv(CELL, Protocol(), SolverOptions(max_step=0.5, rtol=1e-8, atol=1e-10))
    assert np.abs(fine.voltage - ref.voltage).max() < 1e-3
    assert np.abs(fine.temperature - ref.temperature).max() < 1e-2
    assert abs(fine.switch_time - ref.switch_time) < 0.5


def test_cc_phase_against_scipy_radau(ref):
    m = CellModel(CELL)
    I = 2.2 * m.cap

    def rhs(t, y):
        V, _ = m.outputs(y, I)
        return m.derivatives(y, I, V)

    sol = solve_ivp(rhs, (0, 500), m.initial_state(0.2), method="Radau", rtol=1e-10, atol=1e-10,
                    t_eval=np.arange(0, 501, 10.0))
    V = np.array([m.outputs(sol.y[:, k], I)[0] for k in range(sol.y.shape[1])])
    assert np.abs(V - ref.voltage[:51]).max() < 1e-5
    assert np.abs(sol.y[3] - ref.temperature[:51]).max() < 1e-5


def test_switch_time_decreases_with_c_rate():
    times = [simulate_cccv(CELL, Protocol(c_rate=c)).switch_time for c in (1.8, 2.0, 2.2)]
    assert times[0] > times[1] > times[2]


def test_heat_off_is_isothermal():
    r = simulate_cccv(CELL, Protocol(), SolverOptions(heat=False))
    assert np.all(r.temperature == CELL.T_amb)


def test_hold_last_after_termination(ref):
    k = int(np.searchsorted(ref.time, ref.end_time, side="right"))
    for ch in (ref.voltage, ref.temperature, ref.eta_pl):
        assert np.all(ch[k:] == ch[-1])
    assert ref.soc[-1] == pytest.approx(0.8, abs=1e-6)


def test_time_cap_is_not_censored():
    r = simulate_cccv(CELL, Protocol(time_cap=300))
    assert r.termination == "time_cap" and not r.censored and r.end_time == 300


def test_hot_ambient_hits_t_max():
    # ambient at +3 sigma pushes the peak past the limit
    hot = replace(CELL, T_amb=298.15 + 3.0)
    r = simulate_cccv(hot, Protocol())
    assert r.termination == "t_max_hit"
    assert r.temperature.max() == pytest.approx(313.15, abs=1e-3)
    st = violation_check(r, Protocol())
    assert st["temperature"].violated and st["temperature"].first_time == pytest.approx(r.end_time)
    assert not st["voltage"].violated


def test_eta_min_event():
    r = simulate_cccv(CELL, Protocol(eta_min=0.1))
    assert r.termination == "eta_min_hit"
    assert r.eta_pl[-1] == pytest.approx(0.1, abs=1e-4)
    assert violation_check(r, Protocol(eta_min=0.1))["eta_pl"].violated


def test_nominal_has_no_violation(ref):
    assert not any(s.violated for s in violation_check(ref, Protocol()).values())


def test_lower_cv_voltage_flags_degradation_limit():
    # CV at 4.12 V breaches a 4.1 V degradation limit during CC
    r = simulate_cccv(CELL, Protocol(v_max=4.12))
    st = violation_check(r, Protocol(v_max=4.12, v_limit=4.1))
    assert st["voltage"].violated and st["voltage"].first_time < r.switch_time


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        simulate_cccv(replace(CELL, eps_p=0.99), Protocol())
    with pytest.raises(ValueError):
        Protocol(soc_start=0.9, soc_target=0.8)


def test_qoi_extract_and_csv(ref, tmp_path):
    assert qoi_extract(ref, "voltage") is ref.voltage
    with pytest.raises(ValueError):
        qoi_extract(ref, "pressure")
    ref.to_csv(tmp_path / "r.csv")
    rows = list(csv.reader(open(tmp_path / "r.csv")))
    assert rows[0] == ["time", "current", "voltage", "temperature", "eta_pl", "soc", "phase", "censored"]
    assert len(rows) == 152 and rows[-1][6] == "done" and rows[-1][7] == "1"
