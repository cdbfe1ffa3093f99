"""Least-squares polynomial chaos surrogates: fit, moments, R^2, Sobol, quantiles."""
from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .inputs import ParameterSpace, SampleMatrix, sample_standard
from .orthopoly import BasisSet, design_matrix

log = logging.getLogger(__name__)

COND_WARN = 1e10
OVERSAMPLING_WARN = 1.5


class UnderdeterminedFit(ValueError):
    pass


class ZeroVariance(ValueError):
    pass


@dataclass(frozen=True)
class Moments:
    mean: float
    variance: float

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class CiEntry:
    level: float
    lower: float
    upper: float
    median: float
    n_eval_samples: int
    seed: int


@dataclass
class PceModel:
    basis: BasisSet
    coefficients: np.ndarray
    names: tuple[str, ...]
    r_squared: float | None = None
    training_meta: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (self.basis.cardinality,):
            raise ValueError("coefficient count must equal basis cardinality")

    def to_dict(self) -> dict:
        return {"basis": json.loads(self.basis.to_json()), "names": list(self.names),
                "coefficients": self.coefficients.tolist(), "r_squared": self.r_squared,
                "training_meta": self.training_meta}

    @classmethod
    def from_dict(cls, d: dict) -> "PceModel":
        return cls(BasisSet.from_json(d["basis"]), np.array(d["coefficients"]), tuple(d["names"]),
                   d.get("r_squared"), d.get("training_meta", {}))


def split_indices(n: int, validation_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle into (train, validation) row indices."""
    perm = np.random.default_rng(seed).permutation(n)
    n_val = int(round(validation_fraction * n))
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def r2_score(y, yhat) -> float | None:
    """1 - SS_res/SS_tot; ``None`` when SS_tot = 0 but residuals are not."""
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.size < 2:
        raise ValueError("need at least 2 validation points")
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else None
    return 1.0 - ss_res / ss_tot


def _r2_columns(y: np.ndarray, yhat: np.ndarray) -> list[float | None]:
    ss_res = np.sum((y - yhat) ** 2, axis=0)
    ss_tot = np.sum((y - y.mean(axis=0)) ** 2, axis=0)
    out = []
    for res, tot in zip(ss_res, ss_tot):
        if tot == 0.0:
            out.append(1.0 if res == 0.0 else None)
        else:
            out.append(float(1.0 - res / tot))
    return out


def fit_many(samples: SampleMatrix, outputs, basis: BasisSet, validation_fraction: float = 0.2,
             seed: int = 0) -> list[PceModel]:
    """Fit one model per output column against a shared design matrix.

    Coefficients come from an SVD-based least-squares solve on the training
    split; R^2 is measured on the held-out split.
    """
    y = np.asarray(outputs, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape[0] != len(samples):
        raise ValueError("output length must equal sample count")
    n_total = len(samples)
    train, val = split_indices(n_total, validation_fraction, seed)
    P = basis.cardinality
    if len(train) < P:
        raise UnderdeterminedFit(f"{len(train)} training rows < basis size {P}")
    notes = []
    if len(train) < OVERSAMPLING_WARN * P:
        notes.append(f"oversampling {len(train) / P:.2f}x below {OVERSAMPLING_WARN}x")
        warnings.warn(notes[-1])
    D = design_matrix(basis, samples)
    coef, _, rank, sv = scipy.linalg.lstsq(D[train], y[train], lapack_driver="gelsd")
    # constant columns are represented exactly; SVD round-off would leave ~1e-16 terms
    flat = np.ptp(y, axis=0) == 0.0
    if flat.any():
        coef[:, flat] = 0.0
        coef[0, flat] = y[0, flat]
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    if cond > COND_WARN or rank < P:
        notes.append(f"ill-conditioned design (cond ~ {cond:.3g}, rank {rank}/{P})")
        warnings.warn(notes[-1])
    if len(val) >= 2:
        r2 = _r2_columns(y[val], D[val] @ coef)
    else:
        r2 = [None] * y.shape[1]
    meta = {"n_train": int(len(train)), "n_val": int(len(val)), "seed": seed, "cond": cond}
    return [PceModel(basis, coef[:, j], samples.names, r2[j], dict(meta), list(notes))
            for j in range(y.shape[1])]


def fit_least_squares(samples: SampleMatrix, outputs, basis: BasisSet,
                      validation_fraction: float = 0.2, seed: int = 0) -> PceModel:
    y = np.asarray(outputs, dtype=float)
    if y.ndim != 1:
        raise ValueError("outputs must be a vector; use fit_many for several QoIs")
    return fit_many(samples, y, basis, validation_fraction, seed)[0]


def evaluate(model: PceModel, point) -> float | np.ndarray:
    """Surrogate value at one point, or at every row of a matrix."""
    x = np.asarray(point, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != model.basis.n:
        raise ValueError("dimension mismatch")
    vals = design_matrix(model.basis, x) @ model.coefficients
    return float(vals[0]) if single else vals


def moments(model: PceModel) -> Moments:
    a = model.coefficients
    return Moments(float(a[0]), float(np.sum(a[1:] ** 2)))


def r_squared(model: PceModel, val_samples, val_outputs) -> float | None:
    x = getattr(val_samples, "points", val_samples)
    return r2_score(val_outputs, evaluate(model, np.atleast_2d(x)))


def sobol_total(model: PceModel) -> dict[str, float]:
    """Total indices: share of variance carried by terms where the input appears."""
    a2 = model.coefficients[1:] ** 2
    var = float(a2.sum())
    if var <= 0.0:
        raise ZeroVariance("Sobol indices undefined for a zero-variance model")
    active = np.array(model.basis.indices[1:], dtype=int) > 0
    totals = a2 @ active / var
    return dict(zip(model.names, totals.tolist()))


def sobol_first(model: PceModel) -> dict[str, float]:
    a2 = model.coefficients[1:] ** 2
    var = float(a2.sum())
    if var <= 0.0:
        raise ZeroVariance("Sobol indices undefined for a zero-variance model")
    idx = np.array(model.basis.indices[1:], dtype=int)
    only = (idx > 0) & ((idx > 0).sum(axis=1, keepdims=True) == 1)
    return dict(zip(model.names, (a2 @ only / var).tolist()))


def quantile_bounds(values: np.ndarray, level: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    q = np.quantile(values, [(1 - level) / 2, 0.5, (1 + level) / 2], axis=0)
    return q[0], q[1], q[2]


def surrogate_draws(space: ParameterSpace, n_samples: int, seed: int) -> SampleMatrix:
    return sample_standard(space, n_samples, seed, design="random")


def surrogate_quantiles(model: PceModel, space: ParameterSpace, level: float = 0.95,
                        n_samples: int = 10_000, seed: int = 0) -> CiEntry:
    if n_samples < 100:
        raise ValueError("need at least 100 surrogate samples")
    draws = surrogate_draws(space, n_samples, seed)
    vals = evaluate(model, draws.points)
    lo, med, hi = quantile_bounds(vals, level)
    return CiEntry(level, float(lo), float(hi), float(med), n_samples, seed)
