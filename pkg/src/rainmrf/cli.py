"""Command-line front end: synth, lwa, fit, detect, sweep, render.

Every command writes ``manifest.json`` into the output directory before any
other file, so a run can be repeated from its manifest alone.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import logging
import sys
import warnings
from dataclasses import asdict, replace
from pathlib import Path


from . import __version__
from .anomaly import (
    aggregate_stats,
    case_report,
    extract_anomalies,
    gain_loss,
    overlap_report,
    size_correlations,
    year_assignment_stats,
)
from .config import get_bool, get_int, read_kv
from .errors import InvalidParameter, NumericalFailure, ParseError, UsageError
from .files import (
    read_anomaly_signs,
    read_header,
    read_state_field,
    membership_to_field,
    write_anomalies,
    write_json,
    write_labels,
    write_marginals,
    write_membership,
    write_state_field,
    write_trace,
)
from .inference import GibbsConfig, gibbs_run
from .ingest import load_csv, read_synthetic_spec, synthetic_spec_to_dict, generate_synthetic, write_csv
from .lwa import location_stats, lwa_assign, widespread_year_sets, year_sets_report
from .mrf import (
    MXD_PRESETS,
    MrfConfig,
    NodePotentialScheme,
    SpatialPotentialSpec,
    TemporalPotentialSpec,
    build_model,
    config_from_dict,
)
from .render import render_pgm, render_svg

log = logging.getLogger("rainmrf")

STAT_FIELDS = ("NP", "NN", "STSP", "STSN", "SSP", "SSN", "TSP", "TSN", "IP", "IN")
SWEEP_COLUMNS = (
    ["setting", "spatial_mode", "spatial_C", "spatial_D", "spatial_lambda", "temporal_P", "node_scheme",
     "N1", "N2", "NG1", "NG2", "NL1", "NL2"]
    + list(STAT_FIELDS)
    + [f"{k}_min2" for k in STAT_FIELDS]
)
SPATIAL_VARIANTS = ("unif", "prop", "anml", "mxd1", "mxd2")
NODE_VARIANT_P = 0.99


# --- manifest ---------------------------------------------------------------


def _digest(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: Path, command: str, inputs: dict, config: dict, seed) -> dict:
    """Record inputs (with checksums), the resolved configuration and the tool version."""
    manifest = {
        "command": command,
        "inputs": {name: {"path": str(p), "sha256": _digest(p)} for name, p in inputs.items() if p is not None},
        "config": config,
        "seed": seed,
        "tool_version": __version__,
        "out_dir": str(out_dir),
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "manifest.json", manifest)
    return manifest


def _require_file(path, what):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} not found: {p}")
    return p


# --- configuration ------------------------------------------------------------


_GIBBS_KEYS = {"gibbs.sweeps", "gibbs.burn_in", "gibbs.thin", "gibbs.seed", "gibbs.reestimate_means", "gibbs.scan",
               "gibbs.spread"}


def _load_config(path) -> dict:
    return read_kv(_require_file(path, "config file")) if path else {}


def gibbs_from(cfg: dict, args) -> GibbsConfig:
    """Gibbs settings from ``gibbs.*`` config keys, overridden by command-line flags."""
    for key in cfg:
        if key.startswith("gibbs.") and key not in _GIBBS_KEYS:
            raise ParseError(f"unknown key {key!r}")
    base = GibbsConfig()
    g = GibbsConfig(
        sweeps=get_int(cfg, "gibbs.sweeps", base.sweeps),
        burn_in=get_int(cfg, "gibbs.burn_in", base.burn_in),
        thin=get_int(cfg, "gibbs.thin", base.thin),
        seed=get_int(cfg, "gibbs.seed", base.seed),
        reestimate_means=get_bool(cfg, "gibbs.reestimate_means", base.reestimate_means),
        scan=cfg.get("gibbs.scan", base.scan).strip(),
        spread=cfg.get("gibbs.spread", base.spread).strip(),
    )
    overrides = {k: getattr(args, k) for k in ("sweeps", "burn_in", "thin") if getattr(args, k, None) is not None}
    seed = getattr(args, "fit_seed", None)
    if seed is None:
        seed = args.seed
    if seed is not None:
        overrides["seed"] = seed
    g = replace(g, **overrides)
    g.validate()
    return g


# --- commands -----------------------------------------------------------------


def cmd_synth(args) -> None:
    spec = read_synthetic_spec(_require_file(args.spec, "synthetic spec"))
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    out = Path(args.out_dir)
    write_manifest(out, "synth", {"spec": args.spec}, synthetic_spec_to_dict(spec), spec.seed)
    dataset, truth = generate_synthetic(spec)
    write_csv(dataset, out / "data.csv")
    write_labels(out / "truth.csv", truth.labels, dataset.years)
    log.info("wrote %d locations x %d years to %s", dataset.S, dataset.T, out)


def cmd_lwa(args) -> None:
    data = _require_file(args.data, "data file")
    out = Path(args.out_dir)
    write_manifest(out, "lwa", {"data": data}, {"k": 1.0}, None)
    dataset = load_csv(data)
    stats = location_stats(dataset)
    z0 = lwa_assign(dataset, stats)
    write_state_field(out / "z0.csv", z0, dataset.years)
    write_json(out / "year_sets.json", year_sets_report(widespread_year_sets(z0, stats), dataset.years))
    log.info("LWA: %d high, %d low location-years", int((z0.z == 1).sum()), int((z0.z == 2).sum()))


def cmd_fit(args) -> None:
    data = _require_file(args.data, "data file")
    cfg = _load_config(args.config)
    mrf_cfg = config_from_dict(cfg)
    gibbs = gibbs_from(cfg, args)
    out = Path(args.out_dir)
    write_manifest(out, "fit", {"data": data, "config": args.config},
                   {"mrf": mrf_cfg.as_dict(), "gibbs": asdict(gibbs)}, gibbs.seed)
    dataset = load_csv(data)
    z0 = lwa_assign(dataset, location_stats(dataset))
    model = build_model(dataset, mrf_cfg, z0)
    summary = gibbs_run(model, gibbs, init=z0)
    write_state_field(out / "map.csv", summary.map_field, dataset.years)
    write_marginals(out / "marginals.csv", summary.marginal, summary.marginal_aimr, dataset.years)
    write_trace(out / "trace.csv", summary.trace_sweeps, summary.trace)
    p = summary.params
    write_json(out / "posterior.json", {
        "n_samples": summary.n_samples,
        "max_normalization_error": summary.max_norm_error,
        "backend": summary.backend,
        "mu_state": p.mu_state,
        "sigma_loc": p.sigma_loc,
        "mu_aimr_state": p.mu_aimr_state,
        "sigma_aimr": p.sigma_aimr,
    })
    log.info("fit: %d samples, %d high / %d low nodes in MAP", summary.n_samples,
             int((summary.map_field.z == 1).sum()), int((summary.map_field.z == 2).sum()))


def _load_field(path, dataset, anomalies_path=None):
    """State field from a state CSV or from an anomaly membership CSV."""
    path = _require_file(path, "field file")
    header = read_header(path)
    if header == ["anomaly_id", "location_id", "year"]:
        signs_path = Path(anomalies_path) if anomalies_path else path.with_name("anomalies.csv")
        signs = read_anomaly_signs(_require_file(signs_path, "anomaly list"))
        return membership_to_field(path, signs, dataset.S, dataset.years)
    return read_state_field(path, dataset.S, dataset.years)


def cmd_detect(args) -> None:
    data = _require_file(args.data, "data file")
    field_path = _require_file(args.field, "field file")
    if args.min_size < 1 or args.top < 0:
        raise InvalidParameter("--min-size must be >= 1 and --top >= 0")
    out = Path(args.out_dir)
    write_manifest(out, "detect", {"field": field_path, "data": data, "ref": args.ref},
                   {"min_size": args.min_size, "top": args.top}, None)
    dataset = load_csv(data)
    stats = location_stats(dataset)
    z = read_state_field(field_path, dataset.S, dataset.years)
    z0 = lwa_assign(dataset, stats)
    anomalies = extract_anomalies(z, dataset.grid, dataset, stats)
    write_anomalies(out / "anomalies.csv", anomalies)
    write_membership(out / "membership.csv", anomalies, dataset.years)

    report = {
        "stats": aggregate_stats(anomalies, args.min_size).as_dict(),
        "overlap": overlap_report(z, z0, stats).as_dict(dataset.years),
        "year_assignment": year_assignment_stats(z, widespread_year_sets(z0, stats)).as_dict(),
        "correlations": size_correlations(anomalies),
    }
    if args.ref:
        ref = read_state_field(_require_file(args.ref, "reference field"), dataset.S, dataset.years)
        report["gain_loss"] = gain_loss(z, ref).as_dict()
    write_json(out / "stats.json", report)
    top = sorted(anomalies, key=lambda a: (-a.st_size, a.id))[:args.top]
    write_json(out / "case_reports.json", [case_report(a, dataset, stats) for a in top])
    log.info("detect: %d anomalies", len(anomalies))


def parse_setting(name: str, base: MrfConfig) -> MrfConfig | None:
    """Model configuration for a named sweep setting; ``None`` stands for LWA."""
    if name == "LWA":
        return None
    if name == "MRF-SC":
        return replace(base, temporal=TemporalPotentialSpec(None))
    if name.startswith("NP") and name in {f"NP{k}" for k in range(1, 9)}:
        return replace(base, temporal=TemporalPotentialSpec(NODE_VARIANT_P), node=NodePotentialScheme(name))
    for prefix, spatial in (("MRF-TC-", SpatialPotentialSpec("off")), ("MRF-STC-", None)):
        if not name.startswith(prefix):
            continue
        tail = name[len(prefix):]
        if prefix == "MRF-STC-" and tail in SPATIAL_VARIANTS:
            if tail in MXD_PRESETS:
                C, D = MXD_PRESETS[tail]
                sp = SpatialPotentialSpec("mxd", C, D, base.spatial.lam)
            else:
                sp = replace(base.spatial, mode=tail, D=0.0)
            return replace(base, spatial=sp)
        try:
            P = float(tail)
            temporal = TemporalPotentialSpec(P)
        except (ValueError, InvalidParameter):
            break
        return replace(base, spatial=spatial or base.spatial, temporal=temporal)
    raise InvalidParameter(f"unknown sweep setting {name!r}")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def cmd_sweep(args) -> None:
    data = _require_file(args.data, "data file")
    cfg = _load_config(args.config)
    base = config_from_dict(cfg)
    gibbs = gibbs_from(cfg, args)
    names = [n.strip() for n in args.settings.split(",") if n.strip()]
    if not names:
        raise InvalidParameter("no sweep settings given")
    settings = [(n, parse_setting(n, base)) for n in names]
    out = Path(args.out_dir)
    write_manifest(out, "sweep", {"data": data, "config": args.config},
                   {"settings": names, "base": base.as_dict(), "gibbs": asdict(gibbs)}, gibbs.seed)
    dataset = load_csv(data)
    stats = location_stats(dataset)
    z0 = lwa_assign(dataset, stats)

    rows = []
    for name, mc in settings:
        if mc is None:
            z = z0
        else:
            z = gibbs_run(build_model(dataset, mc, z0), gibbs, init=z0).map_field
        anomalies = extract_anomalies(z, dataset.grid, dataset, stats)
        row = {"setting": name}
        if mc is not None:
            row.update(spatial_mode=mc.spatial.mode, spatial_C=mc.spatial.C, spatial_D=mc.spatial.D,
                       spatial_lambda=mc.spatial.lam, temporal_P=mc.temporal.P, node_scheme=mc.node.scheme)
            gl = gain_loss(z, z0)
            row.update(NG1=gl.NG1, NG2=gl.NG2, NL1=gl.NL1, NL2=gl.NL2)
        row.update(N1=int((z.z == 1).sum()), N2=int((z.z == 2).sum()))
        s1, s2 = aggregate_stats(anomalies, 1), aggregate_stats(anomalies, 2)
        for k in STAT_FIELDS:
            row[k] = getattr(s1, k)
            row[f"{k}_min2"] = getattr(s2, k)
        rows.append(row)
        log.info("sweep %s: N1=%d N2=%d", name, row["N1"], row["N2"])

    with (out / "sweep.csv").open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in SWEEP_COLUMNS])


def cmd_render(args) -> None:
    data = _require_file(args.data, "data file")
    out = Path(args.out_dir)
    write_manifest(out, "render", {"field": args.field, "data": data, "anomalies": args.anomalies},
                   {"year": args.year, "format": args.format, "cell": args.cell}, None)
    dataset = load_csv(data)
    t = dataset.year_index(args.year)
    z = _load_field(args.field, dataset, args.anomalies)
    target = out / f"map_{args.year}.{args.format}"
    if args.format == "pgm":
        target.write_bytes(render_pgm(z.z, dataset.grid, t, args.cell))
    else:
        target.write_text(render_svg(z.z, dataset.grid, t, args.cell), encoding="utf-8")
    log.info("wrote %s", target)


# --- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rainmrf", description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default=".", help="directory for all outputs (default: current)")
    ap.add_argument("--seed", type=int, default=None, help="random seed")
    ap.add_argument("--quiet", action="store_true", help="suppress progress messages and warnings")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset with planted anomalies")
    p.add_argument("spec", help="key = value synthetic spec")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("lwa", help="location-wise threshold analysis")
    p.add_argument("data")
    p.set_defaults(func=cmd_lwa)

    def gibbs_flags(p):
        p.add_argument("--config", help="key = value model configuration")
        p.add_argument("--sweeps", type=int)
        p.add_argument("--burn-in", dest="burn_in", type=int)
        p.add_argument("--thin", type=int)
        p.add_argument("--seed", dest="fit_seed", type=int, default=None)

    p = sub.add_parser("fit", help="fit the MRF by Gibbs sampling")
    p.add_argument("data")
    gibbs_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("detect", help="extract anomalies and statistics from a state field")
    p.add_argument("field", help="state CSV (location_id,year,state)")
    p.add_argument("--data", required=True)
    p.add_argument("--min-size", dest="min_size", type=int, default=1)
    p.add_argument("--ref", help="reference state field for gains/losses (normally the LWA field)")
    p.add_argument("--top", type=int, default=5, help="case reports for the K largest anomalies")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("sweep", help="run named settings and tabulate statistics")
    p.add_argument("data")
    p.add_argument("--settings", required=True,
                   help="comma-separated names: LWA, MRF-SC, MRF-TC-<P>, MRF-STC-<P>, "
                        "MRF-STC-{unif,prop,anml,mxd1,mxd2}, NP1..NP8")
    gibbs_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("render", help="draw one year of a state field")
    p.add_argument("field", help="state CSV or anomaly membership CSV")
    p.add_argument("--data", required=True, help="dataset supplying the grid coordinates")
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--format", choices=("pgm", "svg"), default="svg")
    p.add_argument("--cell", type=int, default=8, help="pixels per grid cell")
    p.add_argument("--anomalies", help="anomaly list for membership input (default: sibling anomalies.csv)")
    p.set_defaults(func=cmd_render)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    with warnings.catch_warnings():
        if args.quiet:
            warnings.simplefilter("ignore")
        try:
            args.func(args)
        except UsageError as exc:
            print(f"rainmrf: error: {exc}", file=sys.stderr)
            return 2
        except NumericalFailure as exc:
            print(f"rainmrf: numerical failure: {exc}", file=sys.stderr)
            return 1
        except OSError as exc:
            print(f"rainmrf: error: {exc}", file=sys.stderr)
            return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
