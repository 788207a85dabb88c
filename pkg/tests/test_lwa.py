import warnings

import numpy as np
import pytest

from rainmrf.errors import DegenerateSeries, DegenerateThreshold, InsufficientYears, InvalidValue, ShapeError
from rainmrf.ingest import SyntheticSpec, generate_synthetic
from rainmrf.lwa import StateField, location_stats, lwa_assign, widespread_year_sets, year_sets_report

from conftest import make_dataset


def test_location_stats_examples():
    st = location_stats(make_dataset([[10, 10, 10]]))
    assert st.mu[0] == 10 and st.sigma[0] == 0
    st = location_stats(make_dataset([[8, 12]]))
    assert st.mu[0] == 10 and st.sigma[0] == 2
    st = location_stats(make_dataset([[8, 12], [8, 12]]))
    assert st.mu_aimr == 10 and st.sigma_aimr == 2


def test_location_stats_needs_two_years():
    with pytest.raises(InsufficientYears):
        location_stats(make_dataset([[1.0], [2.0]]))


def test_thresholds_are_inclusive():
    ds = make_dataset([[12.0, 8.0, 9.99, 10.0]])
    st = location_stats(ds)
    # pin mu = 10, sigma = 2 so the boundaries are exact
    st = type(st)(np.array([10.0]), np.array([2.0]), st.mu_aimr, st.sigma_aimr)
    assert lwa_assign(ds, st).z[0].tolist() == [1, 2, 3, 3]


def test_zero_variance_location_is_normal_with_warning():
    ds = make_dataset([[5, 5, 5, 5], [1, 2, 3, 9]])
    with pytest.warns(DegenerateSeries):
        z0 = lwa_assign(ds, location_stats(ds))
    assert np.all(z0.z[0] == 3)
    assert z0.z[1, 3] == 1


def test_widespread_years_hand_example():
    # N1 series [5, 5, 5, 20]: mean 8.75, std 6.495..., threshold 15.245...
    z = np.full((20, 4), 3)
    for t, n in enumerate([5, 5, 5, 20]):
        z[:n, t] = 1
    with pytest.warns(DegenerateThreshold, match="LL"):
        ys = widespread_year_sets(StateField(z, np.full(4, 3)))
    assert ys.HL == frozenset({3})
    assert ys.thresholds["HL"]["mean"] == pytest.approx(8.75)
    assert ys.thresholds["HL"]["std"] == pytest.approx(6.495, abs=5e-4)
    assert ys.thresholds["HL"]["threshold"] == pytest.approx(15.245, abs=5e-4)


def test_constant_counts_select_every_year():
    z = np.full((4, 5), 3)
    z[0, :] = 1
    with pytest.warns(DegenerateThreshold):
        ys = widespread_year_sets(StateField(z, np.full(5, 3)))
    assert ys.HL == frozenset(range(5))


def test_all_normal_field_warns_and_selects_every_year():
    with pytest.warns(DegenerateThreshold):
        ys = widespread_year_sets(StateField(np.full((3, 4), 3), np.full(4, 3)))
    assert ys.HL == ys.LL == frozenset(range(4))


def test_gaussian_background_exceedance_fraction():
    ds, _ = generate_synthetic(SyntheticSpec(30, 30, 40, seed=4))
    z0 = lwa_assign(ds, location_stats(ds))
    frac = float((z0.z == 1).mean())
    assert ds.y.size >= 10_000
    assert abs(frac - 0.1587) <= 0.02


def test_extreme_year_is_both_h_and_hl(rng):
    y = rng.normal(5, 1, size=(25, 30))
    y[:, 17] += 4.0
    ds = make_dataset(np.clip(y, 0, None), rows=5, cols=5)
    st = location_stats(ds)
    z0 = lwa_assign(ds, st)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ys = widespread_year_sets(z0, st)
    assert 17 in ys.H and 17 in ys.HL


def test_report_uses_year_labels():
    z = np.full((2, 3), 3)
    z[:, 1] = 1
    with pytest.warns(DegenerateThreshold):
        ys = widespread_year_sets(StateField(z, np.array([3, 1, 3])))
    rep = year_sets_report(ys, [1990, 1991, 1992])
    assert rep["H"] == [1991] and rep["HL"] == [1991]


def test_state_field_validation():
    with pytest.raises(InvalidValue):
        StateField(np.zeros((2, 2)), np.full(2, 3))
    with pytest.raises(ShapeError):
        StateField(np.full((2, 2), 3), np.full(3, 3))
