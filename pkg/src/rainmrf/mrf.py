"""MRF potentials, Gaussian emissions and the unnormalised log-likelihood.

Latent nodes are ``Z[s, t]`` (location-year) and ``Z_t`` (aggregate, one per
year).  Edges: spatial (8-neighbours, same year), temporal (same location,
consecutive years) and aggregate links ``Z[s, t] -- Z_t``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .config import get_bool, get_float
from .errors import (
    DegenerateEmission,
    InvalidParameter,
    InvalidScheme,
    NotApplicable,
    ParseError,
    WeakModel,
)
from .lwa import StateField, location_stats, lwa_assign

SPATIAL_MODES = ("unif", "prop", "anml", "mxd", "off")
NODE_SCHEMES = tuple(f"NP{k}" for k in range(1, 9)) + ("custom", "location", "year")
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class SpatialPotentialSpec:
    mode: str = "prop"
    C: float = 1.0
    D: float = 0.0
    lam: float = 3.0

    def __post_init__(self):
        if self.mode not in SPATIAL_MODES:
            raise InvalidParameter(f"unknown spatial mode {self.mode!r}")


@dataclass(frozen=True)
class TemporalPotentialSpec:
    P: float | None = 0.9

    def __post_init__(self):
        if self.P is not None and not 0.0 < self.P < 1.0:
            raise InvalidParameter(f"temporal P must lie in (0, 1), got {self.P}")

    @property
    def enabled(self) -> bool:
        return self.P is not None


@dataclass(frozen=True)
class NodePotentialScheme:
    scheme: str = "NP1"
    C1: float = 1.0
    C2: float = 1.0
    C3: float = 1.0

    def __post_init__(self):
        if self.scheme not in NODE_SCHEMES:
            raise InvalidScheme(f"unknown node-potential scheme {self.scheme!r}")
        if min(self.C1, self.C2, self.C3) <= 0:
            raise InvalidParameter("node potentials must be strictly positive")


@dataclass(frozen=True)
class MrfConfig:
    spatial: SpatialPotentialSpec = field(default_factory=SpatialPotentialSpec)
    temporal: TemporalPotentialSpec = field(default_factory=TemporalPotentialSpec)
    node: NodePotentialScheme = field(default_factory=NodePotentialScheme)
    aimr_link: bool = True

    def as_dict(self) -> dict:
        return {
            "spatial.mode": self.spatial.mode,
            "spatial.C": self.spatial.C,
            "spatial.D": self.spatial.D,
            "spatial.lambda": self.spatial.lam,
            "temporal.P": "off" if self.temporal.P is None else self.temporal.P,
            "node.scheme": self.node.scheme,
            "node.C1": self.node.C1,
            "node.C2": self.node.C2,
            "node.C3": self.node.C3,
            "aimr_link": "on" if self.aimr_link else "off",
        }


MXD_PRESETS = {"mxd1": (2.0, 1.0), "mxd2": (5.0, 1.0)}
_MRF_KEYS = {"spatial.mode", "spatial.C", "spatial.D", "spatial.lambda", "temporal.P",
             "node.scheme", "node.C1", "node.C2", "node.C3", "aimr_link"}


def config_from_dict(cfg: dict, allowed_extra=("gibbs.",)) -> MrfConfig:
    """Build an MrfConfig from parsed ``key = value`` pairs.

    ``spatial.mode`` also accepts the presets ``mxd1`` (C=2, D=1) and ``mxd2`` (C=5, D=1).
    """
    for key in cfg:
        if key not in _MRF_KEYS and not key.startswith(tuple(allowed_extra)):
            raise ParseError(f"unknown key {key!r}")
    mode = cfg.get("spatial.mode", "prop").strip()
    C = get_float(cfg, "spatial.C", 1.0)
    D = get_float(cfg, "spatial.D", 0.0)
    if mode in MXD_PRESETS:
        C, D = MXD_PRESETS[mode]
        mode = "mxd"
    P_raw = cfg.get("temporal.P", "0.9").strip().lower()
    try:
        spatial = SpatialPotentialSpec(mode, C, D, get_float(cfg, "spatial.lambda", 3.0))
        temporal = TemporalPotentialSpec(None if P_raw == "off" else get_float(cfg, "temporal.P", 0.9))
        node = NodePotentialScheme(cfg.get("node.scheme", "NP1").strip(), get_float(cfg, "node.C1", 1.0),
                                   get_float(cfg, "node.C2", 1.0), get_float(cfg, "node.C3", 1.0))
    except (InvalidParameter, InvalidScheme) as exc:
        raise ParseError(str(exc)) from None
    return MrfConfig(spatial, temporal, node, get_bool(cfg, "aimr_link", True))


# --- potentials -----------------------------------------------------------


def spatial_potential(C_edge: float, D: float, same_state: bool) -> float:
    return math.exp(C_edge) if same_state else math.exp(D)


def temporal_potential(P: float, same_state: bool) -> float:
    if not 0.0 < P < 1.0:
        raise InvalidParameter(f"P must lie in (0, 1), got {P}")
    return P if same_state else 1.0 - P


def aimr_edge_potential(S: int, same_state: bool) -> float:
    if S < 1:
        raise InvalidParameter("S must be >= 1")
    return math.exp(1.0 / S) if same_state else 1.0


@dataclass(frozen=True)
class NodeContext:
    """Location and year sets used by the location/year dependent schemes."""

    wet: frozenset = frozenset()
    dry: frozenset = frozenset()
    high_years: frozenset = frozenset()
    low_years: frozenset = frozenset()


def node_context(dataset, z0: StateField = None) -> NodeContext:
    stats = location_stats(dataset)
    m, sd = stats.mu.mean(), stats.mu.std()
    if z0 is None:
        z0 = lwa_assign(dataset, stats)
    return NodeContext(
        wet=frozenset(int(s) for s in np.flatnonzero(stats.mu >= m + sd)),
        dry=frozenset(int(s) for s in np.flatnonzero(stats.mu <= m - sd)),
        high_years=frozenset(int(t) for t in np.flatnonzero(z0.z_aimr == 1)),
        low_years=frozenset(int(t) for t in np.flatnonzero(z0.z_aimr == 2)),
    )


_FIXED = {"NP1": (1.0, 1.0, 1.0), "NP2": (2.0, 1.0, 1.0), "NP3": (1.0, 2.0, 1.0), "NP4": (2.0, 2.0, 1.0)}
_FAVOUR_POS = (2.0, 1.0, 1.0)
_FAVOUR_NEG = (1.0, 2.0, 1.0)
_NEUTRAL = (1.0, 1.0, 1.0)


def _node_triple(scheme: NodePotentialScheme, s: int, t: int, ctx: NodeContext) -> tuple:
    name = scheme.scheme
    if name in _FIXED:
        return _FIXED[name]
    if name == "custom":
        return (scheme.C1, scheme.C2, scheme.C3)
    if name in ("NP5", "NP6"):
        pos, neg = (_FAVOUR_POS, _FAVOUR_NEG) if name == "NP5" else (_FAVOUR_NEG, _FAVOUR_POS)
        if s in ctx.wet:
            return pos
        if s in ctx.dry:
            return neg
        return _NEUTRAL
    if name in ("NP7", "NP8"):
        pos, neg = (_FAVOUR_POS, _FAVOUR_NEG) if name == "NP7" else (_FAVOUR_NEG, _FAVOUR_POS)
        if t in ctx.high_years:
            return pos
        if t in ctx.low_years:
            return neg
        return _NEUTRAL
    c1, c2, c3 = scheme.C1, scheme.C2, scheme.C3
    if name == "location":
        low, high = s in ctx.dry, s in ctx.wet
    else:
        low, high = t in ctx.low_years, t in ctx.high_years
    if low:
        return (c1, c2, c2)
    if high:
        return (c2, c1, c2)
    return (c3, c3, c3)


def node_potential(scheme: NodePotentialScheme, s: int, t: int, state: int, ctx: NodeContext = NodeContext()) -> float:
    if not isinstance(scheme, NodePotentialScheme) or scheme.scheme not in NODE_SCHEMES:
        raise InvalidScheme(f"unknown node-potential scheme {scheme!r}")
    if state not in (1, 2, 3):
        raise InvalidParameter(f"state must be 1, 2 or 3, got {state}")
    return _node_triple(scheme, s, t, ctx)[state - 1]


def node_potential_table(scheme: NodePotentialScheme, S: int, T: int, ctx: NodeContext) -> np.ndarray:
    """Potentials for every (s, t, state) as an (S, T, 3) array."""
    if scheme.scheme in _FIXED or scheme.scheme == "custom":
        return np.broadcast_to(np.array(_node_triple(scheme, 0, 0, ctx)), (S, T, 3)).copy()
    return np.array([[_node_triple(scheme, s, t, ctx) for t in range(T)] for s in range(S)],
                    dtype=np.float64).reshape(S, T, 3)


# --- spatial edge weights -------------------------------------------------


def estimate_spatial_potentials(dataset, z0: StateField, spec: SpatialPotentialSpec) -> np.ndarray:
    """C(s, s') for every directed neighbour entry of ``dataset.grid`` (aligned with ``nb_idx``)."""
    g = dataset.grid
    src = np.repeat(np.arange(g.size), np.diff(g.nb_ptr))
    dst = g.nb_idx
    if spec.mode == "off":
        raise NotApplicable("spatial potentials are constant when spatial.mode = off")
    if spec.mode in ("unif", "mxd"):
        return np.full(dst.size, float(spec.C))
    T = dataset.T
    if spec.mode == "prop":
        phase = np.sign(dataset.y - dataset.y.mean(axis=1, keepdims=True))
        agree = (phase[src] == phase[dst]).sum(axis=1)
    else:
        agree = (z0.z[src] == z0.z[dst]).sum(axis=1)
    return spec.lam * agree / T


# --- emissions ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EmissionParams:
    mu_state: np.ndarray      # (S, 3)
    sigma_loc: np.ndarray     # (S,)
    mu_aimr_state: np.ndarray  # (3,)
    sigma_aimr: float

    def ordering_violations(self) -> int:
        """Locations where the state means are not ordered high >= normal >= low."""
        m = self.mu_state
        return int(np.sum((m[:, 0] < m[:, 2]) | (m[:, 2] < m[:, 1])))


def _state_means(y, z, mu, sd):
    """Mean of ``y`` over each state along the last axis; empty states use mu+sd, mu-sd, mu."""
    fallback = np.stack([mu + sd, mu - sd, mu], axis=-1)
    out = np.empty(fallback.shape)
    for p in range(3):
        mask = z == p + 1
        n = mask.sum(axis=-1)
        total = np.where(mask, y, 0.0).sum(axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            out[..., p] = np.where(n > 0, total / np.maximum(n, 1), fallback[..., p])
    return out


def _floor_sigma(sd):
    sd = np.array(sd, dtype=np.float64)
    pos = sd[sd > 0]
    if pos.size and pos.size < sd.size:
        sd[sd <= 0] = np.median(pos)
    return sd


SPREADS = ("within", "total")


def _within_sigma(y, z, mu_state):
    """Root-mean-square deviation of ``y`` from the mean of its assigned state."""
    fitted = np.take_along_axis(mu_state, z.astype(np.intp) - 1, axis=-1) if y.ndim == 2 \
        else mu_state[z.astype(np.intp) - 1]
    return np.sqrt(((y - fitted) ** 2).mean(axis=-1))


def estimate_emissions(dataset, z: StateField, sigma_loc=None, sigma_aimr=None,
                       spread: str = "within") -> EmissionParams:
    """State means from ``z`` plus one state-independent spread per location.

    ``spread="within"`` pools the deviations from each node's own state mean
    (the mixture estimate); ``"total"`` uses the plain population std of the
    series.  ``sigma_loc``/``sigma_aimr`` may be passed to keep spreads fixed
    while re-estimating means.  Zero-spread locations borrow the median spread
    of the other locations; a location with no within-state variation uses its
    total spread.
    """
    if spread not in SPREADS:
        raise InvalidParameter(f"unknown spread estimator {spread!r}; expected one of {SPREADS}")
    y, aimr = dataset.y, dataset.aimr
    mu_s, sd_s = y.mean(axis=1), y.std(axis=1)
    mu_a, sd_a = float(aimr.mean()), float(aimr.std())
    mu_state = _state_means(y, z.z, mu_s, sd_s)
    mu_aimr_state = _state_means(aimr, z.z_aimr, mu_a, sd_a)
    if spread == "within":
        # no within-state variation (e.g. one member per state): use the total spread
        within = _within_sigma(y, z.z, mu_state)
        sd_s = np.where(within > 0, within, sd_s)
        within_a = float(_within_sigma(aimr, z.z_aimr, mu_aimr_state))
        sd_a = within_a if within_a > 0 else sd_a
    if sigma_loc is None:
        sigma_loc = _floor_sigma(sd_s)
    if sigma_aimr is None:
        sigma_aimr = sd_a if sd_a > 0 else (float(np.median(sigma_loc)) / math.sqrt(max(dataset.S, 1)))
    return EmissionParams(mu_state, np.asarray(sigma_loc, dtype=np.float64), mu_aimr_state, float(sigma_aimr))


def check_emissions(params: EmissionParams):
    if np.any(params.sigma_loc <= 0) or not params.sigma_aimr > 0:
        raise DegenerateEmission("emission spread is zero; the dataset has no variability")


# --- assembled model ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MrfModel:
    """Data-resolved potentials in log space, ready for evaluation and sampling."""

    dataset: object
    config: MrfConfig
    c_edge: np.ndarray          # directed, aligned with grid.nb_idx
    D: float
    spatial_on: bool
    log_P: float
    log_1mP: float
    temporal_on: bool
    aimr_w: float
    log_node: np.ndarray        # (S, T, 3)
    log_node_aimr: np.ndarray   # (T, 3)
    context: NodeContext

    @property
    def S(self):
        return self.dataset.S

    @property
    def T(self):
        return self.dataset.T


def build_model(dataset, config: MrfConfig = MrfConfig(), z0: StateField = None) -> MrfModel:
    if z0 is None:
        z0 = lwa_assign(dataset, location_stats(dataset))
    spatial_on = config.spatial.mode != "off"
    temporal_on = config.temporal.enabled
    if not (spatial_on or temporal_on or config.aimr_link):
        warnings.warn("all coherence terms disabled; model reduces to per-node Gaussian classification",
                      WeakModel, stacklevel=2)
    ndir = dataset.grid.nb_idx.size
    c_edge = estimate_spatial_potentials(dataset, z0, config.spatial) if spatial_on else np.zeros(ndir)
    ctx = node_context(dataset, z0)
    log_node = np.log(node_potential_table(config.node, dataset.S, dataset.T, ctx))
    P = config.temporal.P
    return MrfModel(
        dataset=dataset,
        config=config,
        c_edge=np.ascontiguousarray(c_edge, dtype=np.float64),
        D=float(config.spatial.D) if spatial_on else 0.0,
        spatial_on=spatial_on,
        log_P=math.log(P) if temporal_on else 0.0,
        log_1mP=math.log(1.0 - P) if temporal_on else 0.0,
        temporal_on=temporal_on,
        aimr_w=1.0 / dataset.S if config.aimr_link else 0.0,
        log_node=np.ascontiguousarray(log_node),
        log_node_aimr=np.zeros((dataset.T, 3)),
        context=ctx,
    )


def with_config(model: MrfModel, **changes) -> MrfModel:
    return build_model(model.dataset, replace(model.config, **changes))


def _gauss_logpdf(x, mu, sigma):
    return -0.5 * ((x - mu) / sigma) ** 2 - np.log(sigma) - 0.5 * _LOG_2PI


def log_likelihood(model: MrfModel, z, z_aimr=None, params: EmissionParams = None) -> np.ndarray:
    """Unnormalised log L(Z) summed over all node, edge and emission factors.

    ``z`` may be a StateField or an integer array of shape (..., S, T) with a
    matching ``z_aimr`` of shape (..., T); leading axes are evaluated as a batch.
    """
    if isinstance(z, StateField):
        z, z_aimr = z.z, z.z_aimr
    z = np.asarray(z)
    za = np.asarray(z_aimr)
    check_emissions(params)
    ds = model.dataset
    S, T = ds.S, ds.T
    k = z.astype(np.intp) - 1
    ka = za.astype(np.intp) - 1
    s_idx = np.arange(S)[:, None]
    t_idx = np.arange(T)[None, :]

    total = model.log_node[s_idx, t_idx, k].sum(axis=(-2, -1))
    total = total + model.log_node_aimr[np.arange(T), ka].sum(axis=-1)

    if model.spatial_on:
        edges = ds.grid.edges()
        if edges.size:
            src = np.repeat(np.arange(S), np.diff(ds.grid.nb_ptr))
            keep = src < ds.grid.nb_idx
            c = model.c_edge[keep]
            same = z[..., edges[:, 0], :] == z[..., edges[:, 1], :]
            total = total + np.where(same, c[:, None], model.D).sum(axis=(-2, -1))
    if model.temporal_on and T > 1:
        same = z[..., :, 1:] == z[..., :, :-1]
        total = total + np.where(same, model.log_P, model.log_1mP).sum(axis=(-2, -1))
    if model.aimr_w:
        match = (z == za[..., None, :]).sum(axis=(-2, -1))
        total = total + model.aimr_w * match

    mu_sel = params.mu_state[s_idx, k]
    total = total + _gauss_logpdf(ds.y, mu_sel, params.sigma_loc[:, None]).sum(axis=(-2, -1))
    total = total + _gauss_logpdf(ds.aimr, params.mu_aimr_state[ka], params.sigma_aimr).sum(axis=-1)
    return total
