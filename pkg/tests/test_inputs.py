import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from chargeuq.inputs import (SCREENED_REFERENCE, Gaussian, ParameterSpace, PointMass, SampleMatrix,
                             Uniform, UncertainParameter, build_reference_space, embed,
                             physical_samples, restrict, sample_standard, to_physical, to_standard)

SPACE = build_reference_space()


def test_reference_layout():
    assert SPACE.n == 24
    assert SPACE.names[0] == "T_amb" and SPACE.names[-1] == "sigma_n"
    assert SPACE.families.count("hermite") == 3
    assert set(SCREENED_REFERENCE) <= set(SPACE.names)


def test_nominal_near_origin():
    # k_p, k_n, eps_s and t_plus ranges are rounded, so their nominal sits slightly off-centre
    z = to_standard(SPACE, SPACE.nominal)
    assert np.all(np.abs(z) < 0.06)
    off = {SPACE.names[i] for i in np.flatnonzero(np.abs(z) > 1e-12)}
    assert off == {"k_p", "k_n", "eps_s", "t_plus"}


@settings(max_examples=50)
@given(st.lists(st.floats(-1, 1), min_size=24, max_size=24))
def test_roundtrip(z):
    z = np.array(z)
    back = to_standard(SPACE, to_physical(SPACE, z))
    assert np.allclose(back, z, atol=1e-9)


def test_uniform_edges():
    sp = restrict(SPACE, ["eps_s"])
    assert to_physical(sp, [-1.0])[0] == pytest.approx(0.63)
    assert to_physical(sp, [1.0])[0] == pytest.approx(0.81)
    with pytest.raises(ValueError):
        to_physical(sp, [1.2])


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        to_physical(SPACE, np.zeros(3))


def test_restrict_keeps_parent_order():
    sub = restrict(SPACE, ["Rp_n", "T_amb", "eps_p"])
    assert sub.names == ("T_amb", "eps_p", "Rp_n")
    with pytest.raises(KeyError):
        restrict(SPACE, ["nope"])


def test_sampling_reproducible_and_distributed():
    a = sample_standard(SPACE, 2000, seed=3)
    b = sample_standard(SPACE, 2000, seed=3)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, sample_standard(SPACE, 2000, seed=4).points)
    # KS against the standard marginals
    assert stats.kstest(a.points[:, 0], "norm").pvalue > 1e-3
    assert stats.kstest(a.points[:, 1], stats.uniform(-1, 2).cdf).pvalue > 1e-3


def test_latin_hypercube_strata():
    s = sample_standard(restrict(SPACE, ["L_p", "eps_s"]), 50, seed=0)
    strata = np.floor((s.points + 1) / 2 * 50).astype(int)
    for col in strata.T:
        assert sorted(col) == list(range(50))


def test_positivity_redraw():
    # half the mass is negative: rows must be redrawn until positive
    sp = ParameterSpace((UncertainParameter("x", "", 0.1, Gaussian(0.0, 1.0), positive=True),))
    s = sample_standard(sp, 200, seed=1, design="random")
    assert s.n_redraws > 0
    assert np.all(to_physical(sp, s.points) > 0)


def test_collapsed_space_is_nominal():
    c = SPACE.collapsed()
    s = sample_standard(c, 10, seed=0)
    assert np.allclose(to_physical(c, s.points), SPACE.nominal)
    assert isinstance(c["T_amb"].dist, PointMass)


def test_json_and_csv_roundtrip(tmp_path):
    again = ParameterSpace.from_json(SPACE.to_json())
    assert again == SPACE
    s = physical_samples(SPACE, sample_standard(SPACE, 5, seed=2))
    path = tmp_path / "s.csv"
    s.to_csv(path)
    assert path.read_text().splitlines()[0].split(",") == list(SPACE.names)
    r = SampleMatrix.from_csv(path)
    assert np.array_equal(r.points, s.points) and r.names == SPACE.names


def test_embed_fills_nominal():
    sub = restrict(SPACE, ["eps_p"])
    full = embed(SPACE, sub, np.array([[0.4]]))
    assert full[0, SPACE.index("eps_p")] == 0.4
    mask = np.arange(24) != SPACE.index("eps_p")
    assert np.array_equal(full[0, mask], SPACE.nominal[mask])


def test_parameter_validation():
    with pytest.raises(ValueError):
        UncertainParameter("x", "", 5.0, Uniform(0.0, 1.0))
    with pytest.raises(ValueError):
        ParameterSpace((UncertainParameter("x", "", 0.5, Uniform(0, 1)),) * 2)
