import math
import warnings

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rainmrf.anomaly import NEGATIVE, POSITIVE, extract_anomalies, gain_loss
from rainmrf.grid import build_grid
from rainmrf.ingest import load_csv, write_csv
from rainmrf.inference import conditional_aimr, conditional_local
from rainmrf.lwa import StateField, location_stats, lwa_assign
from rainmrf.mrf import (
    MrfConfig,
    NodePotentialScheme,
    SpatialPotentialSpec,
    TemporalPotentialSpec,
    aimr_edge_potential,
    build_model,
    estimate_emissions,
    spatial_potential,
    temporal_potential,
)

from conftest import make_dataset

FAST = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])

cells = st.sets(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=1, max_size=20)


@FAST
@given(cells)
def test_neighbour_relation_is_symmetric(coords):
    g = build_grid(sorted(coords))
    assert sum(len(n) for n in g.neighbor_table) % 2 == 0
    for s, nbs in enumerate(g.neighbor_table):
        assert s not in nbs
        assert all(s in g.neighbor_table[j] for j in nbs)


@FAST
@given(cells, st.randoms(use_true_random=False))
def test_input_order_does_not_change_the_graph(coords, rnd):
    a = sorted(coords)
    b = list(a)
    rnd.shuffle(b)
    ga, gb = build_grid(a), build_grid(b)

    def edges(g):
        return {frozenset(((g.locations[i].lat, g.locations[i].lon), (g.locations[j].lat, g.locations[j].lon)))
                for i, nbs in enumerate(g.neighbor_table) for j in nbs}
    assert edges(ga) == edges(gb)


def _field(S, T, max_state=3):
    return arrays(np.int8, (S, T), elements=st.integers(1, max_state))


@FAST
@given(arrays(np.float64, (4, 5), elements=st.floats(0, 500, allow_nan=False, width=64)))
def test_csv_round_trip(tmp_path_factory, y):
    ds = make_dataset(y, rows=2, cols=2)
    path = tmp_path_factory.mktemp("rt") / "d.csv"
    write_csv(ds, path)
    back = load_csv(path)
    assert np.array_equal(back.y, ds.y)
    assert np.array_equal(back.years, ds.years)


@FAST
@given(arrays(np.float64, (3, 8), elements=st.floats(0, 50, allow_nan=False)),
       st.floats(0.5, 4.0), st.floats(0.0, 20.0))
def test_lwa_is_invariant_to_positive_affine_maps(y, a, b):
    y = np.round(y, 3)
    ds = make_dataset(y)
    moved = make_dataset(a * y + b)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        z = lwa_assign(ds, location_stats(ds)).z
        z2 = lwa_assign(moved, location_stats(moved)).z
    # states may only differ where a value sits on a threshold up to rounding
    stats = location_stats(ds)
    dist = np.minimum(np.abs(y - stats.mu[:, None] - stats.sigma[:, None]),
                      np.abs(y - stats.mu[:, None] + stats.sigma[:, None]))
    clear = dist > 1e-9 * (1 + np.abs(y).max())
    assert np.array_equal(z[clear], z2[clear])


@FAST
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.01, 0.99), st.integers(1, 500))
def test_potentials_are_positive_with_expected_ratios(C, D, P, S):
    same, diff = spatial_potential(C, D, True), spatial_potential(C, D, False)
    assert same > 0 and diff > 0
    assert math.isclose(same / diff, math.exp(C - D), rel_tol=1e-12)
    assert math.isclose(temporal_potential(P, True) + temporal_potential(P, False), 1.0)
    assert aimr_edge_potential(S, True) > aimr_edge_potential(S, False) == 1.0


@FAST
@given(arrays(np.float64, (4, 6), elements=st.floats(0.1, 30)), _field(4, 6))
def test_mean_reestimation_is_idempotent(y, z):
    ds = make_dataset(y, rows=2, cols=2)
    f = StateField(z, np.full(6, 3))
    once = estimate_emissions(ds, f)
    twice = estimate_emissions(ds, f, once.sigma_loc, once.sigma_aimr)
    assert np.array_equal(once.mu_state, twice.mu_state)
    assert np.array_equal(once.sigma_loc, twice.sigma_loc)


configs = st.builds(
    MrfConfig,
    st.builds(SpatialPotentialSpec, st.sampled_from(["unif", "prop", "anml", "off"]), st.floats(0, 2),
              st.floats(-1, 1), st.floats(0.5, 4)),
    st.builds(TemporalPotentialSpec, st.one_of(st.none(), st.floats(0.05, 0.99))),
    st.builds(NodePotentialScheme, st.sampled_from(["NP1", "NP2", "NP3", "NP4", "NP5", "NP6", "NP7", "NP8"])),
    st.booleans(),
)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (6, 4), elements=st.floats(0.5, 20)), _field(6, 4), _field(1, 4), configs)
def test_conditionals_are_distributions(y, z, za, config):
    ds = make_dataset(y + 0.01 * np.arange(4), rows=2, cols=3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = build_model(ds, config, lwa_assign(ds, location_stats(ds)))
    params = estimate_emissions(ds, StateField(z, za[0]))
    field = StateField(z, za[0])
    for s in range(6):
        for t in range(4):
            p = conditional_local(s, t, field, model, params)
            assert np.all(p >= 0) and abs(p.sum() - 1.0) <= 1e-12
    for t in range(4):
        p = conditional_aimr(t, field, model, params)
        assert abs(p.sum() - 1.0) <= 1e-12


@FAST
@given(_field(5, 7), _field(5, 7))
def test_gain_loss_identity(z, ref):
    r = gain_loss(z, ref)
    assert r.N1 == int((ref == 1).sum()) + r.NG1 - r.NL1
    assert r.N2 == int((ref == 2).sum()) + r.NG2 - r.NL2


@FAST
@given(_field(9, 6))
def test_anomalies_partition_anomaly_states(z):
    g = build_grid([(r, c) for r in range(3) for c in range(3)])
    found = extract_anomalies(z, g)
    seen = np.zeros(z.shape, dtype=int)
    for a in found:
        s, t = a.nodes[:, 0], a.nodes[:, 1]
        assert len(set(z[s, t].tolist())) == 1
        assert z[s[0], t[0]] == (1 if a.sign == POSITIVE else 2)
        assert 1 <= a.spatial_size <= a.st_size <= a.spatial_size * a.temporal_size
        assert a.temporal_size <= a.st_size
        seen[s, t] += 1
    assert np.array_equal(seen, (z != 3).astype(int))


@FAST
@given(arrays(np.float64, (4, 10), elements=st.floats(1, 20)))
def test_intensity_sign_follows_states(y):
    ds = make_dataset(y, rows=2, cols=2)
    mu = y.mean(axis=1, keepdims=True)
    z = np.where(y > mu * (1 + 1e-9), 1, np.where(y < mu * (1 - 1e-9), 2, 3))
    for a in extract_anomalies(z, ds.grid, ds):
        if a.sign == POSITIVE:
            assert a.intensity > 1
        else:
            assert a.sign == NEGATIVE and a.intensity < 1
