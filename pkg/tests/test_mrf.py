import itertools
import math

import numpy as np
import pytest

from oracles import brute_log_likelihood
from rainmrf.errors import (
    DegenerateEmission,
    InvalidParameter,
    InvalidScheme,
    NotApplicable,
    ParseError,
    WeakModel,
)
from rainmrf.lwa import StateField, location_stats, lwa_assign
from rainmrf.mrf import (
    EmissionParams,
    MrfConfig,
    NodeContext,
    NodePotentialScheme,
    SpatialPotentialSpec,
    TemporalPotentialSpec,
    aimr_edge_potential,
    build_model,
    config_from_dict,
    estimate_emissions,
    estimate_spatial_potentials,
    log_likelihood,
    node_potential,
    spatial_potential,
    temporal_potential,
)

from conftest import make_dataset


def test_spatial_potential_examples():
    assert spatial_potential(0.8, 0.0, True) == pytest.approx(2.2255, abs=1e-4)
    assert spatial_potential(0.8, 0.0, False) == 1.0
    assert spatial_potential(2, 1, True) / spatial_potential(2, 1, False) == pytest.approx(math.e, abs=1e-4)


def test_temporal_potential_examples():
    assert temporal_potential(0.9, True) == 0.9
    assert temporal_potential(0.9, False) == pytest.approx(0.1)
    assert temporal_potential(0.5, True) == temporal_potential(0.5, False) == 0.5
    for bad in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(InvalidParameter):
            temporal_potential(bad, True)
        with pytest.raises(InvalidParameter):
            TemporalPotentialSpec(bad)


def test_aimr_edge_potential_examples():
    assert aimr_edge_potential(357, True) == pytest.approx(1.002805, abs=1e-6)
    assert aimr_edge_potential(357, False) == 1.0
    assert math.prod(aimr_edge_potential(40, True) for _ in range(40)) == pytest.approx(math.e)


def test_node_potential_fixed_schemes():
    for s, t, p in itertools.product(range(3), range(3), (1, 2, 3)):
        assert node_potential(NodePotentialScheme("NP1"), s, t, p) == 1
    assert node_potential(NodePotentialScheme("NP2"), 0, 0, 1) == 2
    assert [node_potential(NodePotentialScheme("NP4"), 0, 0, p) for p in (1, 2, 3)] == [2, 2, 1]
    with pytest.raises(InvalidScheme):
        NodePotentialScheme("NP9")


def test_node_potential_context_schemes():
    ctx = NodeContext(wet=frozenset({0}), dry=frozenset({1}), high_years=frozenset({4}), low_years=frozenset({5}))
    np7 = NodePotentialScheme("NP7")
    assert node_potential(np7, 3, 4, 2, ctx) == 1
    assert node_potential(np7, 3, 4, 1, ctx) == 2
    assert node_potential(np7, 3, 5, 2, ctx) == 2
    assert [node_potential(np7, 3, 0, p, ctx) for p in (1, 2, 3)] == [1, 1, 1]
    np5, np6 = NodePotentialScheme("NP5"), NodePotentialScheme("NP6")
    assert [node_potential(np5, 0, 0, p, ctx) for p in (1, 2, 3)] == [2, 1, 1]
    assert [node_potential(np5, 1, 0, p, ctx) for p in (1, 2, 3)] == [1, 2, 1]
    assert [node_potential(np6, 0, 0, p, ctx) for p in (1, 2, 3)] == [1, 2, 1]
    loc = NodePotentialScheme("location", 3.0, 0.5, 1.5)
    assert [node_potential(loc, 1, 0, p, ctx) for p in (1, 2, 3)] == [3.0, 0.5, 0.5]
    assert [node_potential(loc, 0, 0, p, ctx) for p in (1, 2, 3)] == [0.5, 3.0, 0.5]
    assert [node_potential(loc, 2, 0, p, ctx) for p in (1, 2, 3)] == [1.5, 1.5, 1.5]
    with pytest.raises(InvalidParameter):
        node_potential(np5, 0, 0, 4, ctx)


def test_prop_coupling_counts_phase_agreement():
    a = np.array([1, 2, 1, 2, 1, 2, 1, 2, 1, 2], dtype=float)
    b = a.copy()
    b[[0, 1]] = b[[1, 0]]          # disagree in the first two years only
    ds = make_dataset([a, b])
    c = estimate_spatial_potentials(ds, None, SpatialPotentialSpec("prop", lam=1.0))
    np.testing.assert_allclose(c, [0.8, 0.8])


def test_unif_and_anml_couplings():
    ds = make_dataset([[1, 2, 3], [3, 1, 2], [2, 2, 2]])
    z0 = StateField(np.array([[1, 3, 2], [1, 3, 2], [3, 3, 3]]), np.full(3, 3))
    assert np.all(estimate_spatial_potentials(ds, z0, SpatialPotentialSpec("unif", C=1.0)) == 1.0)
    c = estimate_spatial_potentials(ds, z0, SpatialPotentialSpec("anml", lam=2.5))
    g = ds.grid
    lo, hi = g.nb_ptr[0], g.nb_ptr[1]
    assert g.nb_idx[lo:hi].tolist() == [1]
    assert c[lo] == 2.5
    with pytest.raises(NotApplicable):
        estimate_spatial_potentials(ds, z0, SpatialPotentialSpec("off"))


def test_emission_means_and_fallback():
    ds = make_dataset([[1, 2, 3, 10]])
    z = StateField(np.array([[3, 3, 3, 1]]), np.array([3, 3, 3, 1]))
    p = estimate_emissions(ds, z, spread="total")
    mu, sd = 4.0, np.std([1, 2, 3, 10])
    assert p.mu_state[0, 0] == 10
    assert p.mu_state[0, 2] == 2
    assert p.mu_state[0, 1] == pytest.approx(mu - sd)
    assert p.sigma_loc[0] == pytest.approx(sd)
    within = estimate_emissions(ds, z, spread="within")
    assert within.sigma_loc[0] == pytest.approx(math.sqrt(0.5))
    assert np.array_equal(within.mu_state, p.mu_state)


def test_all_normal_uses_threshold_fallbacks():
    ds = make_dataset([[8, 12, 8, 12]])
    p = estimate_emissions(ds, StateField(np.full((1, 4), 3), np.full(4, 3)))
    assert p.mu_state[0].tolist() == [12.0, 8.0, 10.0]


def test_identical_locations_get_identical_parameters(rng):
    row = rng.gamma(3.0, 2.0, size=12)
    ds = make_dataset([row, row])
    z0 = lwa_assign(ds, location_stats(ds))
    p = estimate_emissions(ds, z0)
    assert np.array_equal(p.mu_state[0], p.mu_state[1]) and p.sigma_loc[0] == p.sigma_loc[1]


def test_degenerate_emission():
    ds = make_dataset([[3, 3, 3], [3, 3, 3]])
    with pytest.warns(Warning):
        z0 = lwa_assign(ds, location_stats(ds))
    model = build_model(ds, MrfConfig(), z0)
    with pytest.raises(DegenerateEmission):
        log_likelihood(model, z0, params=estimate_emissions(ds, z0))


def test_unknown_spread_rejected():
    ds = make_dataset([[1, 2, 3]])
    with pytest.raises(InvalidParameter):
        estimate_emissions(ds, StateField(np.full((1, 3), 3), np.full(3, 3)), spread="bogus")


def _brute_inputs(ds, model, params):
    coords = [(loc.lat, loc.lon) for loc in ds.grid.locations]
    C = None
    if model.spatial_on:
        lam = model.config.spatial.lam
        phase = np.sign(ds.y - ds.y.mean(axis=1, keepdims=True))
        C = {(i, j): lam * float(np.mean(phase[i] == phase[j]))
             for i in range(ds.S) for j in range(i + 1, ds.S)}
    node = np.exp(model.log_node).tolist()
    return dict(coords=coords, y=ds.y.tolist(), C=C, D=model.config.spatial.D,
                P=model.config.temporal.P, node=node, aimr_link=model.config.aimr_link,
                mu=params.mu_state.tolist(), sigma=params.sigma_loc.tolist(),
                mua=params.mu_aimr_state.tolist(), sigma_a=params.sigma_aimr)


@pytest.mark.parametrize("config", [
    MrfConfig(SpatialPotentialSpec("prop", lam=1.3, D=0.2), TemporalPotentialSpec(0.8),
              NodePotentialScheme("custom", 1.5, 0.7, 1.0)),
    MrfConfig(SpatialPotentialSpec("off"), TemporalPotentialSpec(0.6), aimr_link=False),
    MrfConfig(SpatialPotentialSpec("prop", lam=0.4), TemporalPotentialSpec(None)),
])
def test_log_likelihood_matches_brute_force_on_2x2x2(rng, config):
    ds = make_dataset(rng.gamma(4.0, 1.0, size=(4, 2)), rows=2, cols=2)
    z0 = lwa_assign(ds, location_stats(ds))
    model = build_model(ds, config, z0)
    params = estimate_emissions(ds, z0)
    kw = _brute_inputs(ds, model, params)
    combos = np.array(list(itertools.product((1, 2, 3), repeat=10)))
    zb = combos[:, :8].reshape(-1, 4, 2)
    zab = combos[:, 8:]
    fast = log_likelihood(model, zb, zab, params)
    pick = rng.choice(len(combos), size=400, replace=False)
    brute = np.array([brute_log_likelihood(z=zb[k].tolist(), za=zab[k].tolist(), **kw) for k in pick])
    # equal up to the additive constant of the Gaussian normaliser
    diff = fast[pick] - brute
    np.testing.assert_allclose(diff, diff[0], atol=1e-9)
    # every one of the 3^8 location assignments (aggregate fixed): same offset, hence same ranking
    sub = np.flatnonzero((zab == zab[0]).all(axis=1))
    assert sub.size == 3 ** 8
    brute_all = np.array([brute_log_likelihood(z=zb[k].tolist(), za=zab[k].tolist(), **kw) for k in sub])
    np.testing.assert_allclose(fast[sub] - brute_all, diff[0], atol=1e-9)
    assert np.argmax(fast[sub]) == np.argmax(brute_all)


def test_agreeing_flip_increases_edge_terms(rng):
    ds = make_dataset(rng.gamma(4.0, 1.0, size=(9, 3)), rows=3, cols=3)
    z0 = lwa_assign(ds, location_stats(ds))
    model = build_model(ds, MrfConfig(SpatialPotentialSpec("unif", C=1.0), TemporalPotentialSpec(0.9)), z0)
    params = estimate_emissions(ds, z0)
    # equalise emissions so only potentials differ
    flat = EmissionParams(np.full((9, 3), 4.0), params.sigma_loc, np.full(3, 4.0), params.sigma_aimr)
    z = np.full((9, 3), 1)
    centre = ds.grid.index_of(1, 1)
    z[centre, 1] = 2
    za = np.full(3, 1)
    before = log_likelihood(model, z, za, flat)
    z[centre, 1] = 1
    assert log_likelihood(model, z, za, flat) > before


def test_disabled_coherence_reduces_to_emissions(rng):
    ds = make_dataset(rng.gamma(4.0, 1.0, size=(4, 3)), rows=2, cols=2)
    z0 = lwa_assign(ds, location_stats(ds))
    with pytest.warns(WeakModel):
        model = build_model(ds, MrfConfig(SpatialPotentialSpec("off"), TemporalPotentialSpec(None), aimr_link=False), z0)
    params = estimate_emissions(ds, z0)
    za = np.full(3, 3)
    z1 = np.full((4, 3), 3)
    z2 = z1.copy()
    z2[0, 0] = 1
    diff = log_likelihood(model, z2, za, params) - log_likelihood(model, z1, za, params)
    sd = params.sigma_loc[0]
    y = ds.y[0, 0]
    expected = (-0.5 * ((y - params.mu_state[0, 0]) / sd) ** 2) - (-0.5 * ((y - params.mu_state[0, 2]) / sd) ** 2)
    assert diff == pytest.approx(expected, abs=1e-12)


def test_config_from_dict():
    cfg = config_from_dict({"spatial.mode": "mxd2", "temporal.P": "off", "node.scheme": "NP3", "aimr_link": "off"})
    assert (cfg.spatial.mode, cfg.spatial.C, cfg.spatial.D) == ("mxd", 5.0, 1.0)
    assert cfg.temporal.P is None and not cfg.aimr_link
    assert cfg.node.scheme == "NP3"
    default = config_from_dict({})
    assert default.temporal.P == 0.9 and default.spatial.mode == "prop"
    with pytest.raises(ParseError, match="spatial.colour"):
        config_from_dict({"spatial.colour": "x"})
    with pytest.raises(ParseError):
        config_from_dict({"temporal.P": "1.5"})
    with pytest.raises(ParseError):
        config_from_dict({"node.scheme": "NP0"})
