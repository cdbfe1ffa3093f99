"""Orthonormal Hermite/Legendre polynomials and total-degree tensor bases."""
from __future__ import annotations

import json
from dataclasses import dataclass
from math import comb, factorial, sqrt
from typing import Sequence

import numpy as np

FAMILIES = ("hermite", "legendre")
MAX_DEGREE = 10
MAX_CARDINALITY = 10**6
ORDERING = "grlex-v1"


def eval_hermite_orthonormal(k: int, x):
    """He_k(x)/sqrt(k!) for probabilists' Hermite polynomials."""
    if k < 0:
        raise ValueError("degree must be >= 0")
    x = np.asarray(x, dtype=float)
    prev, cur = np.zeros_like(x), np.ones_like(x)
    for j in range(k):
        prev, cur = cur, x * cur - j * prev
    return cur / sqrt(factorial(k))


def eval_legendre_orthonormal(k: int, u):
    """P_k(u)*sqrt(2k+1), orthonormal under the density 1/2 on [-1, 1]."""
    if k < 0:
        raise ValueError("degree must be >= 0")
    u = np.asarray(u, dtype=float)
    if np.any(np.abs(u) > 1.0):
        raise ValueError("Legendre argument outside [-1, 1]")
    prev, cur = np.zeros_like(u), np.ones_like(u)
    for j in range(k):
        prev, cur = cur, ((2 * j + 1) * u * cur - j * prev) / (j + 1)
    return cur * sqrt(2 * k + 1)


def eval_univariate(family: str, k: int, x):
    if family == "hermite":
        return eval_hermite_orthonormal(k, x)
    if family == "legendre":
        return eval_legendre_orthonormal(k, x)
    raise ValueError(f"unknown polynomial family {family!r}")


def _table(family: str, p: int, x: np.ndarray) -> np.ndarray:
    """Rows 0..p of orthonormal values at x, one recurrence pass."""
    out = np.empty((p + 1,) + x.shape)
    out[0] = 1.0
    if p == 0:
        return out
    if family == "hermite":
        prev, cur = np.zeros_like(x), np.ones_like(x)
        for j in range(p):
            prev, cur = cur, x * cur - j * prev
            out[j + 1] = cur / sqrt(factorial(j + 1))
    elif family == "legendre":
        if np.any(np.abs(x) > 1.0):
            raise ValueError("Legendre argument outside [-1, 1]")
        prev, cur = np.zeros_like(x), np.ones_like(x)
        for j in range(p):
            prev, cur = cur, ((2 * j + 1) * x * cur - j * prev) / (j + 1)
            out[j + 1] = cur * sqrt(2 * j + 3)
    else:
        raise ValueError(f"unknown polynomial family {family!r}")
    return out


def _compositions(n: int, d: int):
    """All length-n non-negative vectors summing to d, descending lex order."""
    if n == 1:
        yield (d,)
        return
    for first in range(d, -1, -1):
        for rest in _compositions(n - 1, d - first):
            yield (first,) + rest


def total_degree_indices(n: int, p: int, cap: int = MAX_CARDINALITY) -> list[tuple[int, ...]]:
    """Multi-indices with |alpha| <= p in graded-lex order; count is C(n+p, p)."""
    if n < 1 or p < 0:
        raise ValueError("need n >= 1 and p >= 0")
    if comb(n + p, p) > cap:
        raise OverflowError(f"basis size C({n}+{p},{p}) exceeds cap {cap}")
    return [alpha for d in range(p + 1) for alpha in _compositions(n, d)]


@dataclass(frozen=True)
class BasisSet:
    families: tuple[str, ...]
    indices: tuple[tuple[int, ...], ...]
    p: int

    def __post_init__(self):
        object.__setattr__(self, "families", tuple(self.families))
        object.__setattr__(self, "indices", tuple(tuple(int(a) for a in alpha) for alpha in self.indices))
        for fam in self.families:
            if fam not in FAMILIES:
                raise ValueError(f"unknown polynomial family {fam!r}")
        if any(len(a) != len(self.families) for a in self.indices):
            raise ValueError("multi-index length does not match dimension")

    @classmethod
    def total_degree(cls, families: Sequence[str], p: int) -> "BasisSet":
        if p > MAX_DEGREE:
            raise ValueError(f"degree {p} above cap {MAX_DEGREE}")
        return cls(tuple(families), tuple(total_degree_indices(len(families), p)), p)

    @property
    def n(self) -> int:
        return len(self.families)

    @property
    def cardinality(self) -> int:
        return len(self.indices)

    def to_json(self) -> str:
        return json.dumps({"families": list(self.families), "p": self.p,
                           "ordering": ORDERING, "indices": [list(a) for a in self.indices]})

    @classmethod
    def from_json(cls, text: str) -> "BasisSet":
        d = json.loads(text) if isinstance(text, str) else text
        return cls(tuple(d["families"]), tuple(tuple(a) for a in d["indices"]), d["p"])


def eval_multivariate(basis: BasisSet, alpha: Sequence[int], point) -> float:
    point = np.asarray(point, dtype=float)
    if point.shape != (basis.n,) or len(alpha) != basis.n:
        raise ValueError("dimension mismatch")
    out = 1.0
    for fam, k, x in zip(basis.families, alpha, point):
        out *= float(eval_univariate(fam, k, x))
    return out


def design_matrix(basis: BasisSet, points) -> np.ndarray:
    """Entry (j, k) = Psi_{alpha_k}(point_j) for standard-frame points.

    Accepts a :class:`~chargeuq.inputs.SampleMatrix` or a raw array.
    """
    frame = getattr(points, "frame", "standard")
    if frame != "standard":
        raise ValueError("design matrix needs standard-frame samples")
    x = np.atleast_2d(np.asarray(getattr(points, "points", points), dtype=float))
    if x.shape[1] != basis.n:
        raise ValueError("dimension mismatch")
    p_eff = max((max(a) for a in basis.indices), default=0)
    tables = [_table(fam, p_eff, x[:, i]) for i, fam in enumerate(basis.families)]
    idx = np.array(basis.indices, dtype=int)
    out = np.ones((x.shape[0], len(basis.indices)))
    for i in range(basis.n):
        out *= tables[i][idx[:, i]].T
    return out
