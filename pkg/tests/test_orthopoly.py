import json
from math import comb, sqrt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial.hermite_e import hermegauss
from numpy.polynomial.legendre import leggauss

from chargeuq.orthopoly import (BasisSet, design_matrix, eval_hermite_orthonormal,
                                eval_legendre_orthonormal, eval_multivariate, total_degree_indices)


def gram(family, p=10, nodes=30):
    if family == "hermite":
        x, w = hermegauss(nodes)
        w = w / w.sum()
        f = eval_hermite_orthonormal
    else:
        x, w = leggauss(nodes)
        w = w / 2
        f = eval_legendre_orthonormal
    V = np.array([f(k, x) for k in range(p + 1)])
    return (V * w) @ V.T


@pytest.mark.parametrize("family", ["hermite", "legendre"])
def test_quadrature_orthonormal(family):
    assert np.abs(gram(family) - np.eye(11)).max() < 1e-10


def test_closed_forms():
    x = np.linspace(-2, 2, 9)
    u = np.linspace(-1, 1, 9)
    assert np.allclose(eval_hermite_orthonormal(0, x), 1)
    assert np.allclose(eval_hermite_orthonormal(1, x), x)
    assert np.allclose(eval_hermite_orthonormal(2, x), (x**2 - 1) / sqrt(2))
    assert np.allclose(eval_hermite_orthonormal(3, x), (x**3 - 3 * x) / sqrt(6))
    assert np.allclose(eval_legendre_orthonormal(1, u), sqrt(3) * u)
    assert np.allclose(eval_legendre_orthonormal(2, u), sqrt(5) * (3 * u**2 - 1) / 2)
    assert eval_legendre_orthonormal(3, 1.0) == pytest.approx(sqrt(7))


def test_legendre_domain_and_negative_degree():
    with pytest.raises(ValueError):
        eval_legendre_orthonormal(2, 1.5)
    with pytest.raises(ValueError):
        eval_hermite_orthonormal(-1, 0.0)


@pytest.mark.parametrize("n", range(1, 11))
def test_cardinality_matches_binomial(n):
    for p in range(6):
        assert len(total_degree_indices(n, p)) == comb(n + p, p)


def test_eleven_inputs_degree_two():
    assert BasisSet.total_degree(["hermite"] * 11, 2).cardinality == 78


def test_graded_lex_order():
    idx = total_degree_indices(2, 2)
    assert idx == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def test_degree_and_size_caps():
    with pytest.raises(ValueError):
        BasisSet.total_degree(["hermite"], 11)
    with pytest.raises(OverflowError):
        total_degree_indices(40, 10)


@given(st.integers(1, 5), st.integers(0, 4))
def test_indices_unique_and_bounded(n, p):
    idx = total_degree_indices(n, p)
    assert len(set(idx)) == len(idx)
    assert all(sum(a) <= p and len(a) == n for a in idx)
    degs = [sum(a) for a in idx]
    assert degs == sorted(degs)


@settings(max_examples=30)
@given(st.lists(st.floats(-0.99, 0.99), min_size=3, max_size=3))
def test_design_matrix_matches_pointwise(pt):
    b = BasisSet.total_degree(["hermite", "legendre", "legendre"], 3)
    D = design_matrix(b, np.array([pt]))
    ref = [eval_multivariate(b, a, np.array(pt)) for a in b.indices]
    assert np.allclose(D[0], ref, rtol=1e-12, atol=1e-14)


def test_multivariate_gram_identity():
    # tensor quadrature over a mixed 2-d basis
    xh, wh = hermegauss(12)
    xl, wl = leggauss(12)
    X = np.array([(a, b) for a in xh for b in xl])
    W = np.array([wa * wb for wa in wh / wh.sum() for wb in wl / 2])
    D = design_matrix(BasisSet.total_degree(["hermite", "legendre"], 4), X)
    assert np.abs((D * W[:, None]).T @ D - np.eye(D.shape[1])).max() < 1e-10


def test_json_roundtrip():
    b = BasisSet.total_degree(["legendre", "hermite"], 3)
    d = json.loads(b.to_json())
    assert d["p"] == 3 and d["families"] == ["legendre", "hermite"]
    assert BasisSet.from_json(b.to_json()) == b


def test_rejects_physical_frame():
    class Fake:
        frame = "physical"
        points = np.zeros((1, 1))
    with pytest.raises(ValueError):
        design_matrix(BasisSet.total_degree(["hermite"], 1), Fake())
