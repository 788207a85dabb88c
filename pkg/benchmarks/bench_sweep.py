"""Time the compiled Gibbs sweep against the pure-Python fallback.

    python3 benchmarks/bench_sweep.py [--rows 20 --cols 20 --years 50 --sweeps 20]

Both kernels run the same chain (same seed, same uniforms), so the benchmark
also confirms that their sample counts agree.
"""
import argparse
import time

import numpy as np

from rainmrf import kernels
from rainmrf.ingest import SyntheticSpec, generate_synthetic
from rainmrf.inference import GibbsConfig, gibbs_run
from rainmrf.mrf import MrfConfig, build_model


def run(model, backend, sweeps, repeats):
    best, result = np.inf, None
    for _ in range(repeats):
        gibbs = GibbsConfig(sweeps=sweeps, burn_in=0, thin=1, reestimate_means=False, trace_every=0, backend=backend)
        start = time.perf_counter()
        result = gibbs_run(model, gibbs)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=20)
    ap.add_argument("--cols", type=int, default=20)
    ap.add_argument("--years", type=int, default=50)
    ap.add_argument("--sweeps", type=int, default=20)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    ds, _ = generate_synthetic(SyntheticSpec(args.rows, args.cols, args.years, seed=0))
    model = build_model(ds, MrfConfig())
    nodes = ds.S * ds.T + ds.T
    print(f"{ds.S} locations x {ds.T} years ({nodes} latent nodes), {args.sweeps} sweeps, best of {args.repeats}")

    timings = {}
    results = {}
    for backend in ("python", "compiled"):
        if backend == "compiled" and kernels.compiled_sweep is None:
            print("compiled kernel not built; skipping")
            continue
        timings[backend], results[backend] = run(model, backend, args.sweeps, args.repeats)
        rate = nodes * args.sweeps / timings[backend]
        print(f"{backend:>9}: {timings[backend]:8.3f} s  ({rate:,.0f} node updates/s)")
    if len(timings) == 2:
        same = np.array_equal(results["python"].accumulator.counts, results["compiled"].accumulator.counts)
        print(f"  speedup: {timings['python'] / timings['compiled']:.1f}x, identical chains: {same}")


if __name__ == "__main__":
    main()
