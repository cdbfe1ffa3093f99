"""Campaign orchestration: sampling, simulation fan-out, per-time PCE fits,
R^2 gating, confidence bands, Sobol series, screening, MC baselines,
violation probabilities and protocol tuning."""
from __future__ import annotations

import hashlib
import logging
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import pce
from .cccv import QOIS, Protocol, SolverOptions, simulate_cccv
from .cell import UNCERTAIN_NAMES, CellParameters
from .inputs import (ParameterSpace, SampleMatrix, build_reference_space, embed, restrict,
                     sample_standard, to_physical)
from .orthopoly import BasisSet, design_matrix

log = logging.getLogger(__name__)

MAX_FAILURE_FRACTION = 0.05


class CampaignError(RuntimeError):
    pass


class RunOutput(NamedTuple):
    series: dict
    termination: str = "ok"
    switch_time: float | None = None
    end_time: float | None = None


class BatteryModel:
    """Adapter: physical parameter vector -> CC-CV QoI series."""

    def __init__(self, protocol: Protocol, solver: SolverOptions = SolverOptions(),
                 names: Sequence[str] = UNCERTAIN_NAMES):
        self.protocol = protocol
        self.solver = solver
        self.names = tuple(names)

    def __call__(self, x) -> RunOutput:
        cell = CellParameters().with_values(self.names, x)
        try:
            r = simulate_cccv(cell, self.protocol, self.solver)
        except ValueError:
            # invariant-violating parameters are rejected before integration
            return RunOutput({}, "solver_failure")
        series = {q: r.channel(q) for q in QOIS}
        return RunOutput(series, r.termination, r.switch_time, r.end_time)


class WithNoise:
    """Wraps an adapter and appends a pure-noise channel seeded by the input bytes."""

    def __init__(self, base, qoi: str = "noise", length: int | None = None):
        self.base = base
        self.qoi = qoi
        self.length = length

    def __call__(self, x) -> RunOutput:
        out = self.base(x)
        n = self.length or len(next(iter(out.series.values())))
        seed = int.from_bytes(hashlib.sha256(np.asarray(x, dtype=float).tobytes()).digest()[:8], "little")
        series = dict(out.series)
        series[self.qoi] = np.random.default_rng(seed).standard_normal(n)
        return out._replace(series=series)


def battery_factory(protocol: Protocol, solver: SolverOptions = SolverOptions()):
    return BatteryModel(protocol, solver)


@dataclass
class CampaignConfig:
    space: ParameterSpace = field(default_factory=build_reference_space)
    protocol: Protocol = field(default_factory=Protocol)
    active: tuple[str, ...] | None = None
    n_train: int = 300
    validation_fraction: float = 0.2
    degree: int = 2
    n_surrogate_samples: int = 10_000
    ci_level: float = 0.95
    seed: int = 0
    qois: tuple[str, ...] = QOIS
    r2_gate: float = 0.8
    design: str = "latin-hypercube"
    solver: SolverOptions = field(default_factory=SolverOptions)
    jobs: int = 1
    # protocol -> deterministic callable(physical vector) -> RunOutput
    model_factory: Callable | None = None

    def __post_init__(self):
        if not 0 < self.ci_level < 1:
            raise ValueError("ci_level must be in (0, 1)")
        n_train_rows = self.n_train - int(round(self.validation_fraction * self.n_train))
        if n_train_rows < self.basis().cardinality:
            raise pce.UnderdeterminedFit(
                f"{n_train_rows} training rows < basis size {self.basis().cardinality}")

    def subspace(self) -> ParameterSpace:
        return self.space if self.active is None else restrict(self.space, self.active)

    def basis(self) -> BasisSet:
        return BasisSet.total_degree(self.subspace().families, self.degree)

    def model(self):
        if self.model_factory is None:
            return BatteryModel(self.protocol, self.solver)
        return self.model_factory(self.protocol)

    def echo(self) -> dict:
        return {"protocol": asdict(self.protocol), "active": list(self.subspace().names),
                "n_train": self.n_train, "validation_fraction": self.validation_fraction,
                "degree": self.degree, "n_surrogate_samples": self.n_surrogate_samples,
                "ci_level": self.ci_level, "seed": self.seed, "qois": list(self.qois),
                "r2_gate": self.r2_gate, "design": self.design, "solver": asdict(self.solver)}


@dataclass
class QoiSeries:
    name: str
    time: np.ndarray
    nominal: np.ndarray
    coefficients: np.ndarray  # (n_time, P)
    r2: np.ndarray  # NaN where undefined
    excluded: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    median: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    sobol: np.ndarray  # (n_time, n_dim), NaN where not emitted


@dataclass
class CampaignResult:
    config: dict
    space: ParameterSpace
    basis: BasisSet
    samples: SampleMatrix
    outputs: dict
    qois: dict
    nominal: RunOutput
    terminations: dict
    failed: list
    surrogate_seed: int
    timing: dict

    @property
    def names(self) -> tuple[str, ...]:
        return self.space.names

    def model(self, qoi: str, k: int) -> pce.PceModel:
        s = self.qois[qoi]
        r2 = None if np.isnan(s.r2[k]) else float(s.r2[k])
        return pce.PceModel(self.basis, s.coefficients[k], self.names, r2)

    def summary(self, with_timing: bool = True) -> dict:
        out = {"config": self.config, "parameters": list(self.names),
               "nominal": {"termination": self.nominal.termination,
                           "switch_time": self.nominal.switch_time, "end_time": self.nominal.end_time},
               "terminations": dict(self.terminations), "failed_runs": list(self.failed),
               "excluded_points": {q: int(s.excluded.sum()) for q, s in self.qois.items()}}
        if with_timing:
            out["timing"] = dict(self.timing)
        return out


def _model_seeds(seed: int) -> tuple[int, int, int]:
    """Independent seeds for training design, train/validation split and surrogate draws."""
    a, b, c = np.random.SeedSequence(seed).generate_state(3)
    return int(a), int(b), int(c)


def run_models(model, X: np.ndarray, jobs: int = 1) -> list[RunOutput]:
    """Evaluate ``model`` on every row; results land in row order whatever the completion order."""
    X = np.atleast_2d(X)
    if jobs <= 1:
        return [model(x) for x in X]
    slots: list = [None] * len(X)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = {pool.submit(model, x): i for i, x in enumerate(X)}
        for fut, i in futures.items():
            slots[i] = fut.result()
    return slots


def _collect(outs: Sequence[RunOutput], qois: Sequence[str]) -> tuple[dict, list, Counter]:
    tally = Counter(o.termination for o in outs)
    failed = [i for i, o in enumerate(outs) if o.termination == "solver_failure"]
    if len(failed) > MAX_FAILURE_FRACTION * len(outs):
        raise CampaignError(f"{len(failed)}/{len(outs)} simulations failed (indices {failed[:10]}...)")
    if failed:
        log.warning("excluding %d failed simulations: %s", len(failed), failed)
    ok = [o for o in outs if o.termination != "solver_failure"]
    Y = {q: np.array([o.series[q] for o in ok], dtype=float) for q in qois}
    return Y, failed, tally


def run_campaign(cfg: CampaignConfig) -> CampaignResult:
    """Sample, simulate, fit one PCE per (QoI, time point), gate by R^2, then
    compute confidence bands and total Sobol series from the surviving models."""
    t_start = time.perf_counter()
    sub = cfg.subspace()
    basis = cfg.basis()
    seed_design, seed_split, seed_surr = _model_seeds(cfg.seed)
    samples = sample_standard(sub, cfg.n_train, seed_design, cfg.design)
    X = embed(cfg.space, sub, to_physical(sub, samples.points))
    model = cfg.model()

    t0 = time.perf_counter()
    outs = run_models(model, X, cfg.jobs)
    nominal = model(cfg.space.nominal)
    t_sim = time.perf_counter() - t0

    Y, failed, tally = _collect(outs, cfg.qois)
    keep = np.setdiff1d(np.arange(len(samples)), failed)
    train_samples = SampleMatrix(samples.points[keep], samples.names, "standard", samples.seed, samples.design)

    t0 = time.perf_counter()
    D_eval = design_matrix(basis, pce.surrogate_draws(sub, cfg.n_surrogate_samples, seed_surr))
    qois = {}
    fit_time = 0.0
    for q in cfg.qois:
        tf = time.perf_counter()
        models = pce.fit_many(train_samples, Y[q], basis, cfg.validation_fraction, seed_split)
        fit_time += time.perf_counter() - tf
        qois[q] = _summarise(q, models, D_eval, nominal, cfg, Y[q].shape[1])
    t_post = time.perf_counter() - t0

    timing = {"simulation_s": t_sim, "fit_s": fit_time, "surrogate_s": t_post - fit_time,
              "total_s": time.perf_counter() - t_start,
              "n_runs": len(outs) + 1, "n_surrogate_evals": cfg.n_surrogate_samples}
    return CampaignResult(cfg.echo(), sub, basis, samples, Y, qois, nominal, dict(tally), failed,
                          seed_surr, timing)


def _summarise(q, models, D_eval, nominal, cfg, n_time) -> QoiSeries:
    coef = np.array([m.coefficients for m in models])
    r2 = np.array([np.nan if m.r_squared is None else m.r_squared for m in models])
    excluded = ~(r2 >= cfg.r2_gate)
    vals = D_eval @ coef.T
    lo, med, hi = pce.quantile_bounds(vals, cfg.ci_level)
    mean = coef[:, 0].copy()
    std = np.sqrt(np.sum(coef[:, 1:] ** 2, axis=1))
    n_dim = models[0].basis.n
    sobol = np.full((n_time, n_dim), np.nan)
    for k, m in enumerate(models):
        if excluded[k]:
            continue
        try:
            sobol[k] = list(pce.sobol_total(m).values())
        except pce.ZeroVariance:
            pass
    for arr in (lo, hi, med):
        arr[excluded] = np.nan
    grid = 10.0 * np.arange(n_time)
    nom = np.asarray(nominal.series[q], dtype=float) if q in nominal.series else np.full(n_time, np.nan)
    return QoiSeries(q, grid, nom, coef, r2, excluded, lo, hi, med, mean, std, sobol)


def screen_parameters(result: CampaignResult, threshold: float = 0.1) -> set[str]:
    """Union over QoIs of inputs whose total index exceeds ``threshold`` at any kept time point."""
    chosen = set()
    for q, s in result.qois.items():
        if s.excluded.all():
            raise CampaignError(f"every time point of {q} was excluded")
        with np.errstate(invalid="ignore"):
            hit = np.nanmax(np.where(np.isnan(s.sobol), -np.inf, s.sobol), axis=0) > threshold
        chosen |= {n for n, h in zip(result.names, hit) if h}
    return chosen


@dataclass
class McBaseline:
    n_runs: int
    time: np.ndarray
    values: dict
    ci_lo: dict
    ci_hi: dict
    median: dict
    histograms: dict
    terminations: dict
    failed: list
    timing: dict


def run_mc_baseline(cfg: CampaignConfig, n_runs: int = 3000, space: ParameterSpace | None = None,
                    bins: int = 30) -> McBaseline:
    """Plain-random Monte Carlo over ``space`` (default: the full configured space)."""
    if n_runs < 100:
        raise ValueError("need at least 100 MC runs")
    t_start = time.perf_counter()
    space = cfg.space if space is None else space
    seed_design = _model_seeds(cfg.seed)[0]
    samples = sample_standard(space, n_runs, seed_design, "random")
    X = embed(cfg.space, space, to_physical(space, samples.points))
    outs = run_models(cfg.model(), X, cfg.jobs)
    Y, failed, tally = _collect(outs, cfg.qois)
    lo, hi, med, hist = {}, {}, {}, {}
    for q, y in Y.items():
        lo[q], med[q], hi[q] = pce.quantile_bounds(y, cfg.ci_level)
        hist[q] = [np.histogram(y[:, k], bins=bins) for k in range(y.shape[1])]
    n_time = next(iter(Y.values())).shape[1]
    timing = {"total_s": time.perf_counter() - t_start, "n_runs": n_runs}
    return McBaseline(n_runs, 10.0 * np.arange(n_time), Y, lo, hi, med, hist, dict(tally), failed, timing)


CONSTRAINT_QOI = {"voltage": "voltage", "temperature": "temperature", "eta_pl": "eta_pl"}


@dataclass
class ViolationReport:
    time: np.ndarray
    probability: dict  # constraint -> per-time probability
    interpolated: dict  # constraint -> bool mask of gated points filled from neighbours
    max_by_constraint: dict
    max_probability: float


def _violates(constraint: str, vals: np.ndarray, protocol: Protocol, v_tol: float) -> np.ndarray:
    if constraint == "voltage":
        return vals > protocol.voltage_limit + v_tol
    if constraint == "temperature":
        return vals >= protocol.t_max
    return vals <= protocol.eta_min


def violation_probability(result: CampaignResult, protocol: Protocol | None = None,
                          n_samples: int | None = None, v_tol: float = 1e-4) -> ViolationReport:
    """Fraction of surrogate draws breaking each constraint, per time point."""
    if protocol is None:
        protocol = Protocol(**result.config["protocol"])
    n = n_samples or result.config["n_surrogate_samples"]
    D = design_matrix(result.basis, pce.surrogate_draws(result.space, n, result.surrogate_seed))
    probs, interp, maxes = {}, {}, {}
    time_grid = None
    for constraint, q in CONSTRAINT_QOI.items():
        if q not in result.qois:
            continue
        s = result.qois[q]
        time_grid = s.time
        if s.excluded.all():
            raise CampaignError(f"constraint QoI {q} is excluded at every time point")
        vals = D @ s.coefficients.T
        p = _violates(constraint, vals, protocol, v_tol).mean(axis=0)
        keep = ~s.excluded
        p = np.where(keep, p, np.interp(s.time, s.time[keep], p[keep]))
        probs[constraint] = p
        interp[constraint] = s.excluded.copy()
        maxes[constraint] = float(p.max())
    if not probs:
        raise CampaignError("no constrained QoI in campaign")
    return ViolationReport(time_grid, probs, interp, maxes, max(maxes.values()))


@dataclass
class TuneReport:
    epsilon: float
    candidates: list
    selected: Protocol | None
    found: bool


def tune_protocol(base: Protocol, epsilon: float, c_rates: Sequence[float], v_maxes: Sequence[float],
                  cfg: CampaignConfig, exhaustive: bool = False) -> TuneReport:
    """Fastest grid protocol whose campaign-wide violation probability is below ``epsilon``.

    Candidates are tried from most to least aggressive (C-rate, then v_max,
    both descending); the voltage degradation limit stays at the base value.
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must be in (0, 1]")
    grid = sorted(((c, v) for c in c_rates for v in v_maxes), key=lambda cv: (-cv[0], -cv[1]))
    if not grid:
        raise ValueError("empty protocol grid")
    limit = base.voltage_limit
    table, selected = [], None
    for c_rate, v_max in grid:
        proto = replace(base, c_rate=c_rate, v_max=v_max, v_limit=limit)
        res = run_campaign(replace(cfg, protocol=proto))
        rep = violation_probability(res, proto)
        admissible = rep.max_probability < epsilon
        table.append({"c_rate": c_rate, "v_max": v_max, "max_probability": rep.max_probability,
                      "by_constraint": rep.max_by_constraint, "admissible": admissible,
                      "nominal_end_time": res.nominal.end_time,
                      "nominal_switch_time": res.nominal.switch_time})
        if admissible and selected is None:
            selected = proto
            if not exhaustive:
                break
    return TuneReport(epsilon, table, selected, selected is not None)


@dataclass
class BudgetReport:
    pce_seconds: float
    mc_seconds: float
    ratio: float
    pce_runs: int
    pce_surrogate_evals: int
    pce_dimension: int
    mc_runs: int


def compare_budget(pce_result: CampaignResult, mc_result: McBaseline) -> BudgetReport:
    p = pce_result.timing["total_s"]
    m = mc_result.timing["total_s"]
    return BudgetReport(p, m, p / m, pce_result.timing["n_runs"], pce_result.timing["n_surrogate_evals"],
                        pce_result.space.n, mc_result.n_runs)


def two_stage(cfg: CampaignConfig, threshold: float = 0.1, pilot_degree: int = 1):
    """Screen on a low-degree pilot over every input, then refit the screened subset."""
    pilot = run_campaign(replace(cfg, active=None, degree=pilot_degree))
    names = screen_parameters(pilot, threshold)
    ordered = tuple(n for n in cfg.space.names if n in names)
    main = run_campaign(replace(cfg, active=ordered))
    return pilot, ordered, main
