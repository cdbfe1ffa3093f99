"""Event-driven CC-CV charging of a :class:`~chargeuq.cell.CellModel`.

Bogacki-Shampine 3(2) stepping with embedded error control.  Steps are clamped
to land on the 10 s output grid; CC->CV switching and terminal events are
located by bisection on the step length.  In CV the current is the root of
``V(I) = v_max`` at every stage evaluation.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from .cell import CellModel, CellParameters

GRID_DT = 10.0
QOIS = ("voltage", "temperature", "eta_pl")
TERMINATIONS = ("soc_reached", "t_max_hit", "eta_min_hit", "time_cap", "solver_failure")


@dataclass(frozen=True)
class Protocol:
    c_rate: float = 2.2
    v_max: float = 4.1
    t_max: float = 313.15
    eta_min: float = 0.0
    soc_start: float = 0.2
    soc_target: float = 0.8
    time_cap: float = 1500.0
    # degradation threshold on voltage; defaults to the CV set-point
    v_limit: float | None = None

    def __post_init__(self):
        if not self.c_rate > 0:
            raise ValueError("c_rate must be > 0")
        if not 0 <= self.soc_start < self.soc_target <= 1:
            raise ValueError("need 0 <= soc_start < soc_target <= 1")
        if not (self.v_max > 0 and self.time_cap > 0):
            raise ValueError("v_max and time_cap must be positive")

    @property
    def voltage_limit(self) -> float:
        return self.v_max if self.v_limit is None else self.v_limit


@dataclass(frozen=True)
class SolverOptions:
    rtol: float = 1e-6
    atol: float = 1e-8
    max_step: float = 1.0
    min_step: float = 1e-9
    event_iters: int = 20
    cv_xtol: float = 1e-10
    heat: bool = True


@dataclass
class SimResult:
    time: np.ndarray
    voltage: np.ndarray
    temperature: np.ndarray
    eta_pl: np.ndarray
    soc: np.ndarray
    current: np.ndarray
    phase: list[str]
    switch_time: float | None
    end_time: float
    termination: str
    censored: bool
    # every accepted step, for coulomb counting and diagnostics
    trace: dict[str, np.ndarray] = field(default_factory=dict)

    def channel(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "current", "voltage", "temperature", "eta_pl", "soc", "phase", "censored"])
            for k in range(len(self.time)):
                w.writerow([f"{self.time[k]:.10g}", repr(float(self.current[k])), repr(float(self.voltage[k])),
                            repr(float(self.temperature[k])), repr(float(self.eta_pl[k])),
                            repr(float(self.soc[k])), self.phase[k], int(self.time[k] > self.end_time)])


class _Failure(RuntimeError):
    pass


class _Engine:
    def __init__(self, model: CellModel, protocol: Protocol, opts: SolverOptions):
        self.m = model
        self.p = protocol
        self.o = opts
        self.i_cc = protocol.c_rate * model.cap
        self.phase = "CC"
        self.i_guess = self.i_cc

    def current(self, y) -> tuple[float, float, float, tuple]:
        """(I, V, eta_pl, rates) for the active phase at state ``y``."""
        rates = self.m.rates(y[3])
        if self.phase == "CC":
            V, eta = self.m.outputs(y, self.i_cc, rates)
            return self.i_cc, V, eta, rates
        vmax = self.p.v_max

        def resid(I):
            return self.m.outputs(y, I, rates)[0] - vmax

        hi = self.i_cc
        I = self._secant(resid, min(max(self.i_guess, 1e-6 * hi), hi))
        if I is None:
            if resid(hi) <= 0.0:
                I = hi
            elif resid(0.0) >= 0.0:
                I = 0.0
            else:
                try:
                    I = brentq(resid, 0.0, hi, xtol=self.o.cv_xtol * hi, rtol=1e-14, maxiter=200)
                except (RuntimeError, ValueError) as exc:
                    raise _Failure(f"CV current solve failed: {exc}") from exc
        self.i_guess = I
        V, eta = self.m.outputs(y, I, rates)
        return I, V, eta, rates

    def _secant(self, resid, x0):
        """Warm-started secant on V(I) = v_max; None if it leaves [0, I_cc] or stalls."""
        hi = self.i_cc
        tol = self.o.cv_xtol * hi
        x1 = x0 * (1.0 - 1e-4)
        f0, f1 = resid(x0), resid(x1)
        for _ in range(12):
            if f1 == f0:
                return None
            x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
            if not 0.0 <= x2 <= hi:
                return None
            if abs(x2 - x1) < tol:
                return x2
            x0, f0 = x1, f1
            x1, f1 = x2, resid(x2)
        return None

    def f(self, y):
        I, V, eta, rates = self.current(y)
        return self.m.derivatives(y, I, V, rates), I, V, eta

    def step(self, y, k1, h):
        """One Bogacki-Shampine step; returns (y_new, k4, err_norm, out_new)."""
        k2 = self.f([y[i] + 0.5 * h * k1[i] for i in range(5)])[0]
        k3 = self.f([y[i] + 0.75 * h * k2[i] for i in range(5)])[0]
        y_new = [y[i] + h * (2 / 9 * k1[i] + 1 / 3 * k2[i] + 4 / 9 * k3[i]) for i in range(5)]
        k4, I, V, eta = self.f(y_new)
        err = 0.0
        for i in range(5):
            e = h * (-5 / 72 * k1[i] + 1 / 12 * k2[i] + 1 / 9 * k3[i] - 1 / 8 * k4[i])
            sc = self.o.atol + self.o.rtol * max(abs(y[i]), abs(y_new[i]))
            err = max(err, abs(e) / sc)
        return y_new, k4, err, (I, V, eta)

    def events(self, y, out) -> dict[str, float]:
        """Event functions; an event fires when its value is >= 0."""
        I, V, eta = out
        ev = {"soc_reached": y[4] - self.p.soc_target,
              "t_max_hit": y[3] - self.p.t_max,
              "eta_min_hit": self.p.eta_min - eta}
        if self.phase == "CC":
            ev["switch"] = V - self.p.v_max
        return ev


def simulate_cccv(cell: CellParameters, protocol: Protocol = Protocol(),
                  solver: SolverOptions = SolverOptions()) -> SimResult:
    """Charge ``cell`` under ``protocol``; outputs sampled on a 10 s grid up to ``time_cap``."""
    model = CellModel(cell, heat=solver.heat)
    eng = _Engine(model, protocol, solver)
    n_grid = int(math.floor(protocol.time_cap / GRID_DT + 1e-9)) + 1
    grid = GRID_DT * np.arange(n_grid)
    keys = ("time", "current", "voltage", "temperature", "eta_pl", "soc")
    tr = {k: [] for k in keys}
    rec = {k: np.empty(n_grid) for k in keys[1:]}
    phases = [""] * n_grid
    gi = 0
    t = 0.0

    def accept(t, y, out):
        nonlocal gi
        I, V, eta = out
        for key, v in zip(keys, (t, I, V, y[3], eta, y[4])):
            tr[key].append(v)
        if gi < n_grid and abs(t - grid[gi]) < 1e-9:
            for key, v in zip(keys[1:], (I, V, y[3], eta, y[4])):
                rec[key][gi] = v
            phases[gi] = eng.phase
            gi += 1

    y = model.initial_state(protocol.soc_start)
    switch_time = None
    termination = None
    error = None
    try:
        k, *out = eng.f(y)
        fired = [n for n, v in eng.events(y, out).items() if v >= 0]
        if "switch" in fired:
            switch_time = 0.0
            eng.phase = "CV"
            k, *out = eng.f(y)
        accept(t, y, out)
        termination = next((n for n in _TERMINAL if n in fired), None)
        h = min(solver.max_step, 0.1)
        while termination is None:
            if gi >= n_grid:
                termination = "time_cap"
                break
            h = min(h, solver.max_step, grid[gi] - t)
            if h < solver.min_step:
                raise _Failure("step size underflow")
            y_new, k_new, err, out_new = eng.step(y, k, h)
            if err > 1.0:
                h *= max(0.2, 0.9 * err ** (-1 / 3))
                continue
            fired = {n: v for n, v in eng.events(y_new, out_new).items() if v >= 0}
            if fired:
                h_ev, name = _locate(eng, y, k, h, fired)
                y_new = eng.step(y, k, h_ev)[0]
                t = grid[gi] if h_ev == h else t + h_ev
                y = y_new
                if name == "switch":
                    switch_time = t
                    eng.phase = "CV"
                else:
                    termination = name
                k, *out = eng.f(y)
                accept(t, y, out)
                continue
            t = grid[gi] if h == grid[gi] - t else t + h
            y, k, out = y_new, k_new, out_new
            accept(t, y, out)
            h *= 5.0 if err == 0 else min(5.0, 0.9 * err ** (-1 / 3))
    except (_Failure, ValueError, ZeroDivisionError, OverflowError) as exc:
        termination = "solver_failure"
        error = str(exc)
    end_time = t
    censored = gi < n_grid
    for g in range(gi, n_grid):
        for key in rec:
            rec[key][g] = tr[key][-1] if tr[key] else np.nan
        phases[g] = "done"
    trace = {k: np.asarray(v, dtype=float) for k, v in tr.items()}
    if error is not None:
        trace["error"] = error
    return SimResult(grid, rec["voltage"], rec["temperature"], rec["eta_pl"], rec["soc"], rec["current"],
                     phases, switch_time, end_time, termination, censored, trace)


_TERMINAL = ("t_max_hit", "eta_min_hit", "soc_reached")


def _locate(eng: _Engine, y, k, h, fired: dict) -> tuple[float, str]:
    """Earliest event time inside the step, by bisection on its length."""
    best_h, best_name = h, None
    for name in fired:
        lo, hi = 0.0, h
        for _ in range(eng.o.event_iters):
            mid = 0.5 * (lo + hi)
            y_mid, _, _, out_mid = eng.step(y, k, mid)
            val = eng.events(y_mid, out_mid)[name]
            if val >= 0:
                hi = mid
            else:
                lo = mid
            if 0 <= val < 1e-9:
                break
        if hi < best_h or best_name is None:
            best_h, best_name = hi, name
    return best_h, best_name


def qoi_extract(result: SimResult, qoi: str) -> np.ndarray:
    if result.termination == "solver_failure":
        raise ValueError("cannot extract QoI from a failed simulation")
    if qoi not in QOIS:
        raise ValueError(f"unknown QoI {qoi!r}")
    return result.channel(qoi)


@dataclass(frozen=True)
class ConstraintStatus:
    violated: bool
    first_time: float | None


def violation_check(result: SimResult, protocol: Protocol, v_tol: float = 1e-4) -> dict[str, ConstraintStatus]:
    """Per-constraint violation report over the accepted-step trace."""
    tr = result.trace
    t = tr["time"]
    end = result.end_time
    in_cc = t <= (result.switch_time if result.switch_time is not None else end)
    checks = {
        "voltage": in_cc & (tr["voltage"] > protocol.voltage_limit + v_tol),
        "temperature": tr["temperature"] >= protocol.t_max,
        "eta_pl": tr["eta_pl"] <= protocol.eta_min,
    }
    report = {}
    for name, mask in checks.items():
        if name == "temperature" and result.termination == "t_max_hit":
            mask = mask.copy()
            mask[-1] = True
        if name == "eta_pl" and result.termination == "eta_min_hit":
            mask = mask.copy()
            mask[-1] = True
        hit = np.flatnonzero(mask)
        report[name] = ConstraintStatus(bool(hit.size), float(t[hit[0]]) if hit.size else None)
    return report


def coulomb_error(result: SimResult, capacity: float) -> float:
    """Relative mismatch between the SoC change and the integrated current trace."""
    tr = result.trace
    charge = float(trapezoid(tr["current"], tr["time"]))
    dsoc = tr["soc"][-1] - tr["soc"][0]
    counted = charge / (3600.0 * capacity)
    return abs(dsoc - counted) / max(abs(dsoc), 1e-300)
