"""Gibbs sampling over the latent states, marginal-MAP extraction, and an
exhaustive enumerator used to check the sampler on small instances."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InsufficientSamples, InvalidParameter, NumericalError, TooLarge
from .lwa import StateField, location_stats, lwa_assign
from .mrf import SPREADS, EmissionParams, MrfModel, check_emissions, estimate_emissions, log_likelihood

SCANS = ("raster", "random", "colored")
# preference when counts tie: normal, then high, then low
_TIE_ORDER = np.array([2, 0, 1])
_CHUNK_VALUES = 2_000_000


@dataclass(frozen=True)
class GibbsConfig:
    sweeps: int = 2000
    burn_in: int = 500
    thin: int = 5
    seed: int = 0
    reestimate_means: bool = True
    spread: str = "within"
    scan: str = "raster"
    trace_every: int = 1
    backend: str | None = None

    def validate(self):
        if self.sweeps <= self.burn_in:
            raise InsufficientSamples(f"sweeps ({self.sweeps}) must exceed burn_in ({self.burn_in})")
        if self.burn_in < 0 or self.thin < 1:
            raise InvalidParameter("burn_in must be >= 0 and thin >= 1")
        if self.scan not in SCANS:
            raise InvalidParameter(f"unknown scan {self.scan!r}; expected one of {SCANS}")
        if self.spread not in SPREADS:
            raise InvalidParameter(f"unknown spread {self.spread!r}; expected one of {SPREADS}")
        if self.seed < 0:
            raise InvalidParameter("seed must be non-negative")

    def is_recorded(self, sweep: int) -> bool:
        return sweep >= self.burn_in and (sweep - self.burn_in) % self.thin == 0


@dataclass
class SampleAccumulator:
    counts: np.ndarray         # (S, T, 3)
    counts_aimr: np.ndarray    # (T, 3)

    @classmethod
    def empty(cls, S, T):
        return cls(np.zeros((S, T, 3), dtype=np.int64), np.zeros((T, 3), dtype=np.int64))

    @property
    def n_samples(self) -> int:
        return int(self.counts_aimr[0].sum()) if self.counts_aimr.size else 0


@dataclass(eq=False)
class PosteriorSummary:
    marginal: np.ndarray
    marginal_aimr: np.ndarray
    map_field: StateField
    trace: np.ndarray
    n_samples: int
    accumulator: SampleAccumulator
    params: EmissionParams
    max_norm_error: float = 0.0
    backend: str = ""
    trace_sweeps: np.ndarray = field(default=None)


# --- reference conditionals ----------------------------------------------


def _arrays(z):
    if isinstance(z, StateField):
        return z.z, z.z_aimr
    return z


def _normalise(logw):
    logw = np.asarray(logw, dtype=np.float64)
    m = logw.max()
    if not np.isfinite(m):
        raise NumericalError("conditional weights are not finite")
    w = np.exp(logw - m)
    return w / w.sum()


def conditional_local(s: int, t: int, z, model: MrfModel, params: EmissionParams) -> np.ndarray:
    """p(Z[s, t] = p | everything else) for p = 1, 2, 3.

    Only the Markov blanket enters: spatial neighbours in year t, the same
    location in years t-1 and t+1, the aggregate node of year t and Y[s, t].
    """
    zz, za = _arrays(z)
    ds = model.dataset
    g = ds.grid
    T = ds.T
    logw = np.empty(3)
    lo, hi = g.nb_ptr[s], g.nb_ptr[s + 1]
    nbs, cs = g.nb_idx[lo:hi], model.c_edge[lo:hi]
    for k, p in enumerate((1, 2, 3)):
        lw = model.log_node[s, t, k]
        lw += -0.5 * ((ds.y[s, t] - params.mu_state[s, k]) / params.sigma_loc[s]) ** 2
        if model.spatial_on:
            lw += np.where(zz[nbs, t] == p, cs, model.D).sum()
        if model.temporal_on:
            for tt in (t - 1, t + 1):
                if 0 <= tt < T:
                    lw += model.log_P if zz[s, tt] == p else model.log_1mP
        if za[t] == p:
            lw += model.aimr_w
        logw[k] = lw
    return _normalise(logw)


def conditional_aimr(t: int, z, model: MrfModel, params: EmissionParams) -> np.ndarray:
    """p(Z_t = q | everything else): node potential * exp(n_q / S) * emission."""
    zz, _ = _arrays(z)
    ds = model.dataset
    n = np.array([(zz[:, t] == q).sum() for q in (1, 2, 3)], dtype=np.float64)
    logw = (model.log_node_aimr[t]
            - 0.5 * ((ds.aimr[t] - params.mu_aimr_state) / params.sigma_aimr) ** 2
            + model.aimr_w * n)
    return _normalise(logw)


# --- sampler ----------------------------------------------------------------


def color_order(model: MrfModel) -> np.ndarray:
    """Node visiting order grouped into 8 colour classes.

    Colour = (row parity, col parity, year parity); no two nodes of one class
    share a spatial or temporal edge, so each class can be updated at once.
    """
    ds = model.dataset
    ij = ds.grid.ij
    T = ds.T
    color = ((ij[:, 0] % 2) * 4 + (ij[:, 1] % 2) * 2)[:, None] + (np.arange(T) % 2)[None, :]
    return np.argsort(color.ravel(), kind="stable").astype(np.int64)


def mode_states(counts) -> np.ndarray:
    """Per-node most frequent state (1..3) with ties resolved toward 3, then 1, then 2."""
    counts = np.asarray(counts)
    return (_TIE_ORDER[np.argmax(counts[..., _TIE_ORDER], axis=-1)] + 1).astype(np.int8)


def gibbs_run(model: MrfModel, gibbs: GibbsConfig = GibbsConfig(), init: StateField = None,
              params: EmissionParams = None) -> PosteriorSummary:
    """Run one chain and summarise the collected samples.

    Each sweep samples every Z[s, t] in scan order, then every Z_t, then (when
    enabled) re-estimates the state means with the spreads held fixed.
    """
    gibbs.validate()
    ds = model.dataset
    S, T = ds.S, ds.T
    if init is None:
        init = lwa_assign(ds, location_stats(ds))
    if params is None:
        params = estimate_emissions(ds, init, spread=gibbs.spread)
    check_emissions(params)
    sweep = kernels.get_sweep(gibbs.backend)
    backend = "python" if sweep is kernels.python_sweep else "compiled"

    rng = np.random.default_rng(gibbs.seed)
    z = np.ascontiguousarray(init.z - 1, dtype=np.int8)
    za = np.ascontiguousarray(init.z_aimr - 1, dtype=np.int8)
    acc = SampleAccumulator.empty(S, T)
    order = color_order(model) if gibbs.scan == "colored" else np.arange(S * T, dtype=np.int64)
    width = S * T + T
    fixed = dict(
        y=ds.y, ya=np.ascontiguousarray(ds.aimr), nb_ptr=ds.grid.nb_ptr, nb_idx=ds.grid.nb_idx,
        c_edge=model.c_edge, D=model.D, spatial_on=model.spatial_on, log_P=model.log_P,
        log_1mP=model.log_1mP, temporal_on=model.temporal_on, aimr_w=model.aimr_w,
        log_node=model.log_node, log_node_aimr=np.ascontiguousarray(model.log_node_aimr),
        counts=acc.counts, counts_a=acc.counts_aimr,
    )
    inv_sigma = 1.0 / params.sigma_loc

    per_sweep = gibbs.reestimate_means or gibbs.trace_every > 0 or gibbs.scan == "random"
    chunk = 1 if per_sweep else max(1, min(1024, _CHUNK_VALUES // width))
    trace, trace_sweeps = [], []
    max_err = 0.0
    done = 0
    while done < gibbs.sweeps:
        n = min(chunk, gibbs.sweeps - done)
        if gibbs.scan == "random":
            order = rng.permutation(S * T).astype(np.int64)
        u = rng.random((n, width))
        record = np.array([gibbs.is_recorded(done + i) for i in range(n)], dtype=np.int8)
        err = sweep(z, za, mu=np.ascontiguousarray(params.mu_state), inv_sigma=inv_sigma,
                    mua=np.ascontiguousarray(params.mu_aimr_state), inv_sigma_a=1.0 / params.sigma_aimr,
                    order=order, u=u, record=record, **fixed)
        if err < 0:
            raise NumericalError(f"non-finite conditional weights in sweep {done}")
        max_err = max(max_err, err)
        done += n
        if gibbs.reestimate_means:
            params = estimate_emissions(ds, StateField(z + 1, za + 1), params.sigma_loc, params.sigma_aimr)
        if gibbs.trace_every > 0 and done % gibbs.trace_every == 0:
            trace.append(float(log_likelihood(model, z + 1, za + 1, params)))
            trace_sweeps.append(done)

    n_samples = acc.n_samples
    if n_samples < 1:
        raise InsufficientSamples("no samples were collected")
    marginal = acc.counts / n_samples
    marginal_aimr = acc.counts_aimr / n_samples
    return PosteriorSummary(
        marginal=marginal,
        marginal_aimr=marginal_aimr,
        map_field=StateField(mode_states(acc.counts), mode_states(acc.counts_aimr)),
        trace=np.array(trace),
        n_samples=n_samples,
        accumulator=acc,
        params=params,
        max_norm_error=float(max_err),
        backend=backend,
        trace_sweeps=np.array(trace_sweeps, dtype=np.int64),
    )


def map_estimate(summary) -> StateField:
    """Marginal MAP from a PosteriorSummary or SampleAccumulator."""
    acc = summary.accumulator if isinstance(summary, PosteriorSummary) else summary
    if acc.n_samples < 1:
        raise InsufficientSamples("accumulator is empty")
    return StateField(mode_states(acc.counts), mode_states(acc.counts_aimr))


# --- exhaustive oracle ------------------------------------------------------


def exact_enumerate(model: MrfModel, params: EmissionParams, max_nodes: int = 16):
    """Exact joint MAP and per-node marginals by evaluating every joint assignment.

    Returns ``(map_field, marginal, marginal_aimr)``.
    """
    ds = model.dataset
    S, T = ds.S, ds.T
    n_nodes = S * T + T
    if n_nodes > max_nodes:
        raise TooLarge(f"{n_nodes} latent nodes; exhaustive enumeration is limited to {max_nodes}")
    total = 3 ** n_nodes
    powers = 3 ** np.arange(n_nodes, dtype=np.int64)
    chunk = 3 ** min(n_nodes, 10)

    best_ll, best_idx = -np.inf, 0
    ref = None
    marg = np.zeros((n_nodes, 3))
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = (idx[:, None] // powers[None, :]) % 3
        zb = digits[:, :S * T].reshape(-1, S, T) + 1
        zab = digits[:, S * T:] + 1
        ll = np.asarray(log_likelihood(model, zb, zab, params), dtype=np.float64)
        k = int(np.argmax(ll))
        if ll[k] > best_ll:
            best_ll, best_idx = float(ll[k]), int(idx[k])
        if ref is None:
            ref = float(ll.max())
        elif ll.max() > ref:
            marg *= np.exp(ref - ll.max())
            ref = float(ll.max())
        w = np.exp(ll - ref)
        for j in range(n_nodes):
            marg[j] += np.bincount(digits[:, j], weights=w, minlength=3)

    marg /= marg.sum(axis=1, keepdims=True)
    best = (best_idx // powers) % 3 + 1
    map_field = StateField(best[:S * T].reshape(S, T), best[S * T:])
    return map_field, marg[:S * T].reshape(S, T, 3), marg[S * T:]
