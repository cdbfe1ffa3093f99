"""Config files and result bundles.

Config (JSON or TOML) sections, all optional::

    [space]     file = "space.json", active = [...], collapse = false
    [protocol]  Protocol fields
    [pce]       n_train, validation_fraction, degree, n_surrogate_samples,
                ci_level, r2_gate, design, seed, qois
    [solver]    SolverOptions fields
    [tune]      epsilon, c_rates, v_maxes, exhaustive
"""
from __future__ import annotations

import csv
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .cccv import Protocol, SolverOptions
from .inputs import ParameterSpace, build_reference_space

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SECTIONS = ("space", "protocol", "pce", "solver", "tune")
_PCE_KEYS = ("n_train", "validation_fraction", "degree", "n_surrogate_samples", "ci_level",
             "r2_gate", "design", "seed", "qois")


@dataclass
class TuneSettings:
    epsilon: float = 0.05
    c_rates: tuple[float, ...] = (2.2, 2.0)
    v_maxes: tuple[float, ...] = (4.1, 4.08)
    exhaustive: bool = False


@dataclass
class RunConfig:
    """Everything a CLI command needs, parsed from one file."""
    space: ParameterSpace = field(default_factory=build_reference_space)
    active: tuple[str, ...] | None = None
    protocol: Protocol = field(default_factory=Protocol)
    solver: SolverOptions = field(default_factory=SolverOptions)
    pce: dict = field(default_factory=dict)
    tune: TuneSettings = field(default_factory=TuneSettings)

    def campaign(self, seed: int | None = None, jobs: int | None = None, **overrides):
        from .pipeline import CampaignConfig
        kw = dict(self.pce)
        if "qois" in kw:
            kw["qois"] = tuple(kw["qois"])
        if seed is not None:
            kw["seed"] = seed
        if jobs is not None:
            kw["jobs"] = jobs
        kw.update(overrides)
        return CampaignConfig(space=self.space, protocol=self.protocol, active=self.active,
                              solver=self.solver, **kw)


def _pick(cls, section: dict, where: str) -> dict:
    known = {f.name for f in fields(cls)}
    extra = set(section) - known
    if extra:
        raise ValueError(f"unknown keys in [{where}]: {sorted(extra)}")
    return dict(section)


def parse_config(data: dict, base_dir: Path | None = None) -> RunConfig:
    extra = set(data) - set(SECTIONS)
    if extra:
        raise ValueError(f"unknown config sections: {sorted(extra)}")
    base_dir = base_dir or Path.cwd()
    sp = dict(data.get("space", {}))
    if "parameters" in sp:
        space = ParameterSpace.from_json(json.dumps(sp.pop("parameters")))
    elif "file" in sp:
        space = ParameterSpace.from_json((base_dir / sp.pop("file")).read_text())
    else:
        space = build_reference_space()
    active = sp.pop("active", None)
    if sp.pop("collapse", False):
        space = space.collapsed()
    if sp:
        raise ValueError(f"unknown keys in [space]: {sorted(sp)}")

    pce = dict(data.get("pce", {}))
    extra = set(pce) - set(_PCE_KEYS)
    if extra:
        raise ValueError(f"unknown keys in [pce]: {sorted(extra)}")
    tune = dict(data.get("tune", {}))
    for k in ("c_rates", "v_maxes"):
        if k in tune:
            tune[k] = tuple(float(v) for v in tune[k])
    return RunConfig(space=space, active=None if active is None else tuple(active),
                     protocol=Protocol(**_pick(Protocol, data.get("protocol", {}), "protocol")),
                     solver=SolverOptions(**_pick(SolverOptions, data.get("solver", {}), "solver")),
                     pce=pce, tune=TuneSettings(**_pick(TuneSettings, tune, "tune")))


def load_config(path) -> RunConfig:
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix.lower() == ".toml":
        data = tomllib.loads(raw.decode())
    elif path.suffix.lower() == ".json":
        data = json.loads(raw)
    else:
        raise ValueError(f"config must be .json or .toml, got {path.suffix!r}")
    return parse_config(data, path.parent)


def _num(x) -> str:
    x = float(x)
    return "" if math.isnan(x) else repr(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return None if math.isnan(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def write_qoi_csv(path, series) -> None:
    """time, nominal, ci_lo, ci_hi, r2, excluded. Gated rows leave the CI cells empty."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "nominal", "ci_lo", "ci_hi", "r2", "excluded"])
        for k in range(len(series.time)):
            w.writerow([f"{series.time[k]:g}", _num(series.nominal[k]), _num(series.ci_lo[k]),
                        _num(series.ci_hi[k]), _num(series.r2[k]), int(series.excluded[k])])


def write_sobol_csv(path, result) -> None:
    """Long-ish layout: one row per (qoi, time), one column per parameter."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["qoi", "time", *result.names])
        for q, s in result.qois.items():
            for k in range(len(s.time)):
                w.writerow([q, f"{s.time[k]:g}", *(_num(v) for v in s.sobol[k])])


def read_sobol_csv(path) -> dict[str, tuple[np.ndarray, list[str], np.ndarray]]:
    out: dict = {}
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        names = header[2:]
        for row in r:
            t, vals = float(row[1]), [math.nan if v == "" else float(v) for v in row[2:]]
            out.setdefault(row[0], ([], names, []))
            out[row[0]][0].append(t)
            out[row[0]][2].append(vals)
    return {q: (np.array(t), n, np.array(v)) for q, (t, n, v) in out.items()}


def write_bundle(result, out_dir, violation=None, extra: dict | None = None,
                 with_timing: bool = True) -> Path:
    """Per-QoI CSVs, sobol.csv, summary.json and the fitted models."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for q, s in result.qois.items():
        write_qoi_csv(out / f"{q}.csv", s)
    write_sobol_csv(out / "sobol.csv", result)
    summary = result.summary(with_timing)
    if violation is not None:
        summary["violation"] = {"max_probability": violation.max_probability,
                                "max_by_constraint": violation.max_by_constraint,
                                "interpolated_points": {c: int(m.sum()) for c, m in
                                                        violation.interpolated.items()}}
    if extra:
        summary.update(extra)
    write_json(out / "summary.json", summary)
    models = {"basis": json.loads(result.basis.to_json()), "names": list(result.names),
              "qois": {q: {"coefficients": s.coefficients, "r_squared": s.r2, "excluded": s.excluded}
                       for q, s in result.qois.items()}}
    write_json(out / "models.json", models)
    (out / "space.json").write_text(result.space.to_json() + "\n")
    result.samples.to_csv(out / "samples.csv")
    return out


def write_mc(mc, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for q in mc.values:
        with open(out / f"mc_{q}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "ci_lo", "median", "ci_hi"])
            for k, t in enumerate(mc.time):
                w.writerow([f"{t:g}", _num(mc.ci_lo[q][k]), _num(mc.median[q][k]), _num(mc.ci_hi[q][k])])
    write_json(out / "mc_summary.json", {"n_runs": mc.n_runs, "terminations": mc.terminations,
                                         "failed_runs": mc.failed, "timing": mc.timing})
    return out


def config_echo(cfg: RunConfig) -> dict:
    return {"protocol": asdict(cfg.protocol), "solver": asdict(cfg.solver), "pce": cfg.pce,
            "tune": asdict(cfg.tune), "active": cfg.active}
