"""Reduced electrochemical-thermal model of a LiC6/LiCoO2 cell.

Single-particle kinetics with an electrolyte correction and a lumped thermal
balance.  Every uncertain input enters the equations:

* solid diffusion: ``Ds_p``, ``Ds_n``, ``Rp_p``, ``Rp_n`` (two-parameter
  polynomial particle profile)
* Butler-Volmer exchange current: ``k_p``, ``k_n``
* electrolyte polarisation and ohmic drop: ``De_*``, ``eps_*``, ``brugg_*``,
  ``L_p``, ``L_s``, ``L_n``, ``t_plus``
* solid ohmic drop: ``sigma_p``, ``sigma_n``
* thermal mass and collector resistance: ``L_a``, ``L_z``
* coolant and initial temperature: ``T_amb``

Current is positive on charge.  Concentrations in mol/m^3, lengths in m,
current density in A/m^2 of electrode area.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from math import asinh, exp, log, sqrt

import numpy as np

F = 96487.0
R_GAS = 8.314
T_REF = 298.15


@dataclass(frozen=True)
class CellConstants:
    """Fixed (non-uncertain) properties, LIONSIMBA LiC6/LiCoO2 set.

    ``soc_offset``, ``h_cell`` and ``r_contact`` are fitted so the nominal 2.2C
    run matches the reference switch time and peak temperature; see
    ``scripts/calibrate_reference.py``.
    """

    cs_max_p: float = 51554.0
    cs_max_n: float = 30555.0
    ce0: float = 1000.0
    eps_f_p: float = 0.025
    eps_f_n: float = 0.0326
    # electrode stoichiometry at 0 % and 100 % state of charge
    theta_p0: float = 0.99174
    theta_p100: float = 0.49550
    theta_n0: float = 0.0069
    theta_n100: float = 0.8228
    # stoichiometry-window position minus coulomb-counted SoC (calibrated)
    soc_offset: float = -0.09357
    # 1C current density (A/m^2); state of charge is coulomb-counted against it
    capacity: float = 29.23
    Ea_Ds_p: float = 5000.0
    Ea_Ds_n: float = 5000.0
    Ea_k_p: float = 5000.0
    Ea_k_n: float = 5000.0
    rho_a: float = 2700.0
    rho_p: float = 2500.0
    rho_s: float = 1100.0
    rho_n: float = 2500.0
    rho_z: float = 8940.0
    cp_a: float = 897.0
    cp_p: float = 700.0
    cp_s: float = 700.0
    cp_n: float = 700.0
    cp_z: float = 385.0
    h_cell: float = 0.6468  # calibrated
    sigma_a: float = 3.55e7
    sigma_z: float = 5.96e7
    # lumped tab/contact resistance (ohm m^2), outside the anode interface
    r_contact: float = 1.9335e-3  # calibrated


@dataclass(frozen=True)
class CellParameters:
    T_amb: float = 298.15
    Ds_p: float = 1.0e-14
    Ds_n: float = 3.9e-14
    k_p: float = 2.334e-11
    k_n: float = 5.031e-11
    De_p: float = 7.5e-10
    De_s: float = 7.5e-10
    De_n: float = 7.5e-10
    L_a: float = 1.0e-5
    L_p: float = 8.0e-5
    L_s: float = 2.5e-5
    L_n: float = 8.8e-5
    L_z: float = 1.0e-5
    eps_p: float = 0.385
    eps_s: float = 0.724
    eps_n: float = 0.485
    Rp_p: float = 2.0e-6
    Rp_n: float = 2.0e-6
    brugg_p: float = 4.0
    brugg_s: float = 4.0
    brugg_n: float = 4.0
    t_plus: float = 0.364
    sigma_p: float = 100.0
    sigma_n: float = 100.0
    const: CellConstants = field(default_factory=CellConstants)

    def validate(self) -> None:
        bad = []
        for f in fields(self):
            if f.name == "const":
                continue
            v = getattr(self, f.name)
            if not np.isfinite(v) or v <= 0:
                bad.append(f"{f.name}={v}")
        for name in ("eps_p", "eps_s", "eps_n", "t_plus"):
            if not 0 < getattr(self, name) < 1:
                bad.append(f"{name} outside (0, 1)")
        c = self.const
        if self.eps_p + c.eps_f_p >= 1 or self.eps_n + c.eps_f_n >= 1:
            bad.append("porosity plus filler fraction >= 1")
        if bad:
            raise ValueError("invalid cell parameters: " + ", ".join(bad))

    def with_values(self, names, values) -> "CellParameters":
        return replace(self, **{n: float(v) for n, v in zip(names, values)})

    def uncertain_values(self) -> dict[str, float]:
        d = asdict(self)
        d.pop("const")
        return d


UNCERTAIN_NAMES = tuple(f.name for f in fields(CellParameters) if f.name != "const")


def nominal_cell() -> CellParameters:
    return CellParameters()


def ocp_p(theta: float) -> float:
    """LiCoO2 open-circuit potential at 298.15 K."""
    t2 = theta * theta
    t4 = t2 * t2
    t6 = t4 * t2
    t8 = t4 * t4
    t10 = t8 * t2
    num = -4.656 + 88.669 * t2 - 401.119 * t4 + 342.909 * t6 - 462.471 * t8 + 433.434 * t10
    den = -1.0 + 18.933 * t2 - 79.532 * t4 + 37.311 * t6 - 73.083 * t8 + 95.96 * t10
    return num / den


def ocp_n(theta: float) -> float:
    """LiC6 open-circuit potential at 298.15 K."""
    return (0.7222 + 0.1387 * theta + 0.029 * sqrt(theta) - 0.0172 / theta
            + 0.0019 / theta ** 1.5 + 0.2808 * exp(0.9 - 15.0 * theta)
            - 0.7984 * exp(0.4465 * theta - 0.4108))


def dudt_p(theta: float) -> float:
    """Entropic coefficient of LiCoO2 (V/K)."""
    t = theta
    num = 0.199521039 + t * (-0.928373822 + t * (1.364550689 + t * -0.611544894))
    den = 1.0 + t * (-5.661479887 + t * (11.47636191 + t * (-9.824312136 + t * 3.048755063)))
    return -1e-3 * num / den


def dudt_n(theta: float) -> float:
    """Entropic coefficient of LiC6 (V/K)."""
    t = theta
    num = 0.005269056 + t * (3.299265709 + t * (-91.79325798 + t * (1004.911008 + t * (
        -5812.278127 + t * (19329.7549 + t * (-37147.8947 + t * (38379.18127 + t * -16515.05308)))))))
    den = 1.0 + t * (-48.09287227 + t * (1017.234804 + t * (-10481.80419 + t * (
        59431.3 + t * (-195881.6488 + t * (374577.3152 + t * (-385821.1607 + t * 165705.8597)))))))
    return 1e-3 * num / den


def kappa(c: float, T: float) -> float:
    """Electrolyte conductivity (S/m) of LiPF6 in EC/DMC."""
    inner = (-10.5 + 0.668e-3 * c + 0.494e-6 * c * c
             + (0.074 - 1.78e-5 * c - 8.86e-10 * c * c) * T
             + (-6.96e-5 + 2.8e-8 * c) * T * T)
    return 1e-4 * c * inner * inner


_THETA_FLOOR = 1e-6


def _clip(theta: float) -> float:
    if theta < _THETA_FLOOR:
        return _THETA_FLOOR
    if theta > 1.0 - _THETA_FLOOR:
        return 1.0 - _THETA_FLOOR
    return theta


class CellModel:
    """Precomputed coefficients plus the state-to-output map of one cell.

    State vector: ``[c_avg_n, c_avg_p, g_e, T, soc]`` where ``g_e`` is the lagged
    electrolyte source strength (mol m^-2 s^-1) setting the concentration profile.
    """

    def __init__(self, cell: CellParameters, heat: bool = True):
        cell.validate()
        self.cell = cell
        c = cell.const
        self.c = c
        self.heat = heat
        es_p = 1.0 - cell.eps_p - c.eps_f_p
        es_n = 1.0 - cell.eps_n - c.eps_f_n
        # particle surface area per electrode area
        self.aL_p = 3.0 * es_p / cell.Rp_p * cell.L_p
        self.aL_n = 3.0 * es_n / cell.Rp_n * cell.L_n
        self.sig_p_eff = cell.sigma_p * es_p
        self.sig_n_eff = cell.sigma_n * es_n
        self.bp = cell.eps_p ** cell.brugg_p
        self.bs = cell.eps_s ** cell.brugg_s
        self.bn = cell.eps_n ** cell.brugg_n
        Dp = cell.De_p * self.bp
        Ds = cell.De_s * self.bs
        Dn = cell.De_n * self.bn
        Ln, Ls, Lp = cell.L_n, cell.L_s, cell.L_p
        # quasi-steady electrolyte profile per unit source strength, zero at the
        # anode collector, then shifted to conserve salt
        n_avg = Ln / (6 * Dn)
        n_sep = Ln / (2 * Dn)
        s_avg = n_sep + Ls / (2 * Ds)
        s_end = n_sep + Ls / Ds
        p_avg = s_end + Lp / (3 * Dp)
        porevol = cell.eps_n * Ln + cell.eps_s * Ls + cell.eps_p * Lp
        off = -(cell.eps_n * Ln * n_avg + cell.eps_s * Ls * s_avg + cell.eps_p * Lp * p_avg) / porevol
        self.e_n_avg = n_avg + off
        self.e_n_sep = n_sep + off
        self.e_s_avg = s_avg + off
        self.e_p_avg = p_avg + off
        # first diffusion mode of the whole sandwich
        self.tau_e = porevol * (Ln / Dn + Ls / Ds + Lp / Dp) / np.pi ** 2
        self.r_col = cell.L_a / c.sigma_a + cell.L_z / c.sigma_z + c.r_contact
        self.mcp = (c.rho_a * c.cp_a * cell.L_a + c.rho_p * c.cp_p * Lp + c.rho_s * c.cp_s * Ls
                    + c.rho_n * c.cp_n * Ln + c.rho_z * c.cp_z * cell.L_z)
        self.cap = c.capacity

    def initial_state(self, soc: float) -> list[float]:
        c = self.c
        w = soc + c.soc_offset
        th_n = c.theta_n0 + w * (c.theta_n100 - c.theta_n0)
        th_p = c.theta_p0 + w * (c.theta_p100 - c.theta_p0)
        return [th_n * c.cs_max_n, th_p * c.cs_max_p, 0.0, self.cell.T_amb, soc]

    def ocv(self, y) -> float:
        c = self.c
        T = y[3]
        th_n = _clip(y[0] / c.cs_max_n)
        th_p = _clip(y[1] / c.cs_max_p)
        return (ocp_p(th_p) + (T - T_REF) * dudt_p(th_p)) - (ocp_n(th_n) + (T - T_REF) * dudt_n(th_n))

    def rates(self, T: float) -> tuple[float, float, float, float]:
        cell, c = self.cell, self.c
        arr = 1.0 / T_REF - 1.0 / T
        return (cell.Ds_n * exp(c.Ea_Ds_n / R_GAS * arr), cell.Ds_p * exp(c.Ea_Ds_p / R_GAS * arr),
                cell.k_n * exp(c.Ea_k_n / R_GAS * arr), cell.k_p * exp(c.Ea_k_p / R_GAS * arr))

    def outputs(self, y, I: float, rates=None) -> tuple[float, float]:
        """Terminal voltage and plating overpotential at state ``y`` and current ``I``."""
        cell, c = self.cell, self.c
        cn, cp, g, T = y[0], y[1], y[2], y[3]
        Dsn, Dsp, kn, kp = rates if rates is not None else self.rates(T)
        f2 = 2.0 * R_GAS * T / F
        jn = -I / (F * self.aL_n)
        jp = I / (F * self.aL_p)
        csn = cn - jn * cell.Rp_n / (5.0 * Dsn)
        csp = cp - jp * cell.Rp_p / (5.0 * Dsp)
        th_n = _clip(csn / c.cs_max_n)
        th_p = _clip(csp / c.cs_max_p)
        csn = th_n * c.cs_max_n
        csp = th_p * c.cs_max_p
        ce_n = max(c.ce0 + g * self.e_n_avg, 1.0)
        ce_sep = max(c.ce0 + g * self.e_n_sep, 1.0)
        ce_s = max(c.ce0 + g * self.e_s_avg, 1.0)
        ce_p = max(c.ce0 + g * self.e_p_avg, 1.0)
        eta_n = f2 * asinh(jn / (2.0 * kn * sqrt(ce_n * csn * (c.cs_max_n - csn))))
        eta_p = f2 * asinh(jp / (2.0 * kp * sqrt(ce_p * csp * (c.cs_max_p - csp))))
        dT = T - T_REF
        Un = ocp_n(th_n) + dT * dudt_n(th_n)
        Up = ocp_p(th_p) + dT * dudt_p(th_p)
        kap_n = kappa(ce_n, T) * self.bn
        kap_s = kappa(ce_s, T) * self.bs
        kap_p = kappa(ce_p, T) * self.bp
        diff_pot = f2 * (1.0 - cell.t_plus)
        drop_n = I * cell.L_n / (3.0 * kap_n)
        ohm_e = drop_n + I * (cell.L_s / kap_s + cell.L_p / (3.0 * kap_p))
        conc = diff_pot * log(ce_p / ce_n)
        ohm_s = I * (cell.L_n / (3.0 * self.sig_n_eff) + cell.L_p / (3.0 * self.sig_p_eff) + self.r_col)
        V = Up - Un + eta_p - eta_n + ohm_e + conc + ohm_s
        # anode solid/electrolyte potential difference at the separator interface
        eta_pl = (Un + eta_n - drop_n + I * cell.L_n / (6.0 * self.sig_n_eff)
                  - diff_pot * log(ce_sep / ce_n))
        return V, eta_pl

    def derivatives(self, y, I: float, V: float, rates=None) -> list[float]:
        cell, c = self.cell, self.c
        T = y[3]
        jn = -I / (F * self.aL_n)
        jp = I / (F * self.aL_p)
        dcn = -3.0 * jn / cell.Rp_n
        dcp = -3.0 * jp / cell.Rp_p
        dg = ((1.0 - cell.t_plus) * I / F - y[2]) / self.tau_e
        q = 0.0
        if self.heat:
            th_n = _clip(y[0] / c.cs_max_n)
            th_p = _clip(y[1] / c.cs_max_p)
            q = I * (V - self.ocv(y)) + I * T * (dudt_p(th_p) - dudt_n(th_n))
        dT = (q - c.h_cell * (T - cell.T_amb)) / self.mcp
        return [dcn, dcp, dg, dT, I / (3600.0 * self.cap)]
