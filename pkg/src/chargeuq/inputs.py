"""Uncertain parameter space, standard/physical transforms and sampling designs."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import norm, qmc

log = logging.getLogger(__name__)


class RejectedSample(ValueError):
    """A physical sample fell outside the positivity domain of its parameter."""


@dataclass(frozen=True)
class Gaussian:
    mean: float
    std: float

    def __post_init__(self):
        if not self.std > 0:
            raise ValueError(f"Gaussian std must be > 0, got {self.std}")

    family = "hermite"

    def to_physical(self, z):
        return self.mean + self.std * z

    def to_standard(self, x):
        return (x - self.mean) / self.std

    def params(self) -> tuple[float, float]:
        return self.mean, self.std


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"Uniform needs lo < hi, got [{self.lo}, {self.hi}]")

    family = "legendre"

    def to_physical(self, u):
        return self.lo + (self.hi - self.lo) * (u + 1.0) / 2.0

    def to_standard(self, x):
        return 2.0 * (x - self.lo) / (self.hi - self.lo) - 1.0

    def params(self) -> tuple[float, float]:
        return self.lo, self.hi


@dataclass(frozen=True)
class PointMass:
    """Collapsed input: carries a Legendre coordinate that has no physical effect.

    Only used to switch uncertainty off while keeping the dimension layout.
    """

    value: float

    family = "legendre"

    def to_physical(self, u):
        return self.value + 0.0 * np.asarray(u, dtype=float)

    def to_standard(self, x):
        return 0.0 * np.asarray(x, dtype=float)

    def params(self) -> tuple[float, float]:
        return self.value, self.value


Distribution = Gaussian | Uniform | PointMass

_DIST_TYPES = {"gaussian": Gaussian, "uniform": Uniform, "point": PointMass}


def _dist_type(dist) -> str:
    return {Gaussian: "gaussian", Uniform: "uniform", PointMass: "point"}[type(dist)]


@dataclass(frozen=True)
class UncertainParameter:
    name: str
    unit: str
    nominal: float
    dist: Distribution
    positive: bool = False

    def __post_init__(self):
        d = self.dist
        if isinstance(d, Uniform) and not d.lo <= self.nominal <= d.hi:
            raise ValueError(f"{self.name}: nominal {self.nominal} outside [{d.lo}, {d.hi}]")
        if isinstance(d, Gaussian) and abs(self.nominal - d.mean) > 6 * d.std:
            raise ValueError(f"{self.name}: nominal more than 6 sigma from mean")


@dataclass(frozen=True)
class ParameterSpace:
    params: tuple[UncertainParameter, ...]

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValueError("parameter names must be unique")

    @property
    def n(self) -> int:
        return len(self.params)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)

    @property
    def families(self) -> tuple[str, ...]:
        return tuple(p.dist.family for p in self.params)

    @property
    def nominal(self) -> np.ndarray:
        return np.array([p.nominal for p in self.params])

    def __getitem__(self, name: str) -> UncertainParameter:
        for p in self.params:
            if p.name == name:
                return p
        raise KeyError(name)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def collapsed(self) -> "ParameterSpace":
        """Same layout with every input pinned to its nominal value."""
        return ParameterSpace(tuple(
            UncertainParameter(p.name, p.unit, p.nominal, PointMass(p.nominal), p.positive)
            for p in self.params))

    def to_json(self) -> str:
        return json.dumps([
            {"name": p.name, "unit": p.unit, "nominal": p.nominal,
             "dist": {"type": _dist_type(p.dist), "a": p.dist.params()[0], "b": p.dist.params()[1]},
             "positive": p.positive}
            for p in self.params], indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ParameterSpace":
        out = []
        for row in json.loads(text):
            d = row["dist"]
            kind = _DIST_TYPES[d["type"]]
            dist = kind(d["a"]) if kind is PointMass else kind(d["a"], d["b"])
            out.append(UncertainParameter(row["name"], row.get("unit", ""), float(row["nominal"]),
                                          dist, bool(row.get("positive", False))))
        return cls(tuple(out))


@dataclass
class SampleMatrix:
    points: np.ndarray
    names: tuple[str, ...]
    frame: str = "standard"
    seed: int | None = None
    design: str = "random"
    n_redraws: int = 0

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.frame not in ("standard", "physical"):
            raise ValueError(f"unknown coordinate frame {self.frame!r}")
        if self.points.shape[1] != len(self.names):
            raise ValueError("column count does not match parameter names")

    def __len__(self):
        return self.points.shape[0]

    def to_csv(self, path) -> None:
        np.savetxt(path, self.points, delimiter=",", header=",".join(self.names),
                   comments="", fmt="%.17g")

    @classmethod
    def from_csv(cls, path, frame: str = "physical") -> "SampleMatrix":
        with open(path) as fh:
            names = tuple(fh.readline().strip().split(","))
        pts = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(pts, names, frame)


# Table row order is the canonical coordinate order.
_REFERENCE_ROWS = [
    # name, unit, nominal, distribution, must stay positive
    ("T_amb", "K", 298.15, Gaussian(298.15, 1.0), True),
    ("Ds_p", "m^2/s", 1.0e-14, Uniform(0.9e-14, 1.1e-14), True),
    ("Ds_n", "m^2/s", 3.9e-14, Uniform(3.51e-14, 4.29e-14), True),
    ("k_p", "m^2.5/(mol^0.5 s)", 2.334e-11, Uniform(2.1e-11, 2.56e-11), True),
    ("k_n", "m^2.5/(mol^0.5 s)", 5.031e-11, Uniform(4.52e-11, 5.53e-11), True),
    ("De_p", "m^2/s", 7.5e-10, Uniform(6.75e-10, 8.25e-10), True),
    ("De_s", "m^2/s", 7.5e-10, Uniform(6.75e-10, 8.25e-10), True),
    ("De_n", "m^2/s", 7.5e-10, Uniform(6.75e-10, 8.25e-10), True),
    ("L_a", "m", 1.0e-5, Uniform(0.8e-5, 1.2e-5), True),
    ("L_p", "m", 8.0e-5, Uniform(7.7e-5, 8.3e-5), True),
    ("L_s", "m", 2.5e-5, Uniform(2.2e-5, 2.8e-5), True),
    ("L_n", "m", 8.8e-5, Uniform(8.5e-5, 9.1e-5), True),
    ("L_z", "m", 1.0e-5, Uniform(0.8e-5, 1.2e-5), True),
    ("eps_p", "-", 0.385, Uniform(0.36, 0.41), True),
    ("eps_s", "-", 0.724, Uniform(0.63, 0.81), True),
    ("eps_n", "-", 0.485, Uniform(0.46, 0.51), True),
    ("Rp_p", "m", 2.0e-6, Gaussian(2.0e-6, 0.3896e-6), True),
    ("Rp_n", "m", 2.0e-6, Gaussian(2.0e-6, 0.1354e-6), True),
    ("brugg_p", "-", 4.0, Uniform(3.8, 4.2), True),
    ("brugg_s", "-", 4.0, Uniform(3.8, 4.2), True),
    ("brugg_n", "-", 4.0, Uniform(3.8, 4.2), True),
    ("t_plus", "-", 0.364, Uniform(0.345, 0.381), True),
    ("sigma_p", "S/m", 100.0, Uniform(90.0, 110.0), True),
    ("sigma_n", "S/m", 100.0, Uniform(90.0, 110.0), True),
]

# Union of the high-sensitivity sets for voltage, temperature and plating overpotential.
SCREENED_REFERENCE = ("T_amb", "k_n", "L_p", "L_n", "eps_p", "eps_s", "eps_n",
                      "Rp_p", "Rp_n", "brugg_p", "brugg_n")


def build_reference_space() -> ParameterSpace:
    return ParameterSpace(tuple(UncertainParameter(*row) for row in _REFERENCE_ROWS))


def restrict(space: ParameterSpace, names: Iterable[str]) -> ParameterSpace:
    """Sub-space over ``names``, kept in the parent's coordinate order."""
    wanted = set(names)
    unknown = wanted - set(space.names)
    if unknown:
        raise KeyError(f"unknown parameters: {sorted(unknown)}")
    return ParameterSpace(tuple(p for p in space.params if p.name in wanted))


def to_physical(space: ParameterSpace, point) -> np.ndarray:
    """Map standard coordinates (one point or a matrix of rows) to physical values."""
    pts = np.asarray(point, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != space.n:
        raise ValueError(f"expected {space.n} coordinates, got {pts.shape[1]}")
    out = np.empty_like(pts)
    for i, p in enumerate(space.params):
        col = pts[:, i]
        if p.dist.family == "legendre" and np.any(np.abs(col) > 1.0):
            raise ValueError(f"{p.name}: uniform coordinate outside [-1, 1]")
        out[:, i] = p.dist.to_physical(col)
    return out[0] if single else out


def to_standard(space: ParameterSpace, point) -> np.ndarray:
    pts = np.asarray(point, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != space.n:
        raise ValueError(f"expected {space.n} coordinates, got {pts.shape[1]}")
    out = np.column_stack([p.dist.to_standard(pts[:, i]) for i, p in enumerate(space.params)])
    return out[0] if single else out


def _draw(families: Sequence[str], n_samples: int, rng: np.random.Generator, design: str) -> np.ndarray:
    d = len(families)
    if design == "latin-hypercube":
        probs = qmc.LatinHypercube(d=d, seed=rng).random(n_samples)
    elif design == "random":
        probs = None
    else:
        raise ValueError(f"unknown design {design!r}")
    out = np.empty((n_samples, d))
    for i, fam in enumerate(families):
        if probs is None:
            out[:, i] = rng.standard_normal(n_samples) if fam == "hermite" else rng.uniform(-1.0, 1.0, n_samples)
        else:
            out[:, i] = norm.ppf(probs[:, i]) if fam == "hermite" else 2.0 * probs[:, i] - 1.0
    return out


def check_physical(space: ParameterSpace, physical: np.ndarray) -> None:
    phys = np.atleast_2d(physical)
    for i, p in enumerate(space.params):
        if p.positive and np.any(phys[:, i] <= 0):
            raise RejectedSample(f"{p.name} sampled non-positive")


def _rejected(space: ParameterSpace, pts: np.ndarray) -> np.ndarray:
    """Row indices whose physical image breaks a positivity constraint."""
    phys = to_physical(space, pts)
    pos = np.array([p.positive for p in space.params])
    return np.flatnonzero(np.any((phys <= 0) & pos, axis=1))


def sample_standard(space: ParameterSpace, n_samples: int, seed: int,
                    design: str = "latin-hypercube") -> SampleMatrix:
    """Draw ``n_samples`` standard-frame points; reproducible per (seed, design).

    Rows whose physical image violates a positivity constraint are redrawn
    (plain random) and counted in ``n_redraws``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    pts = _draw(space.families, n_samples, rng, design)
    redraws = 0
    bad = _rejected(space, pts)
    while bad.size:
        redraws += bad.size
        pts[bad] = _draw(space.families, bad.size, rng, "random")
        bad = bad[_rejected(space, pts[bad])]
    if redraws:
        log.info("sample_standard: %d rejected rows redrawn", redraws)
    return SampleMatrix(pts, space.names, "standard", seed, design, redraws)


def physical_samples(space: ParameterSpace, samples: SampleMatrix) -> SampleMatrix:
    if samples.frame != "standard":
        raise ValueError("expected standard-frame samples")
    return SampleMatrix(to_physical(space, samples.points), samples.names, "physical",
                        samples.seed, samples.design, samples.n_redraws)


def embed(space: ParameterSpace, sub: ParameterSpace, physical_sub: np.ndarray) -> np.ndarray:
    """Full physical vectors with ``sub`` coordinates set and the rest at nominal."""
    phys = np.atleast_2d(physical_sub)
    full = np.tile(space.nominal, (phys.shape[0], 1))
    for j, name in enumerate(sub.names):
        full[:, space.index(name)] = phys[:, j]
    return full
