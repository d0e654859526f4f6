"""Time the compiled and pure-Python search kernels on simulator-sized instances.

    python3 benchmarks/bench_kernels.py [--drops 3] [--repeat 3]
"""

import argparse
import time

import numpy as np

from cosched import kernels
from cosched.greedy import GreedyConfig, cs_greedy
from cosched.ilp import reduce_candidates, solve_exact
from cosched.pf import PfState
from cosched.sim import DropContext, SimConfig, drop_seed, generate_drop

SETUPS = {
    "macro M=3": SimConfig(num_bs=3, ues_per_bs=10, num_prb=10, mcs="unbounded", noise="noiseless"),
    "hetnet M=6": SimConfig(num_bs=6, num_pico=3, ues_per_bs=10, num_prb=10, cre_offset_db=6.0, noise="noisy"),
}


def workload(cfg, drops, seed=0):
    """(context, state) pairs with spread-out average throughputs, as after a PF warm-up."""
    rng = np.random.default_rng(seed)
    out = []
    for d in range(drops):
        ctx = DropContext(cfg, generate_drop(cfg, drop_seed(cfg, d)))
        out.append((ctx, PfState(10 ** rng.uniform(-1, 1, cfg.num_ue))))
    return out


def run_ilp(work, backend):
    total = 0.0
    for ctx, state in work:
        for l in range(ctx.reports.num_prb):
            total += solve_exact(reduce_candidates(ctx.unique, ctx.reports, state, l), backend=backend).objective
    return total


def run_greedy(work, backend):
    total = 0.0
    for ctx, state in work:
        m = ctx.conn.num_bs
        g = GreedyConfig(m, m - 1)
        for l in range(ctx.reports.num_prb):
            total += cs_greedy(ctx.reports, ctx.conn, state, l, g, backend=backend, index=ctx.index).objective
    return total


def best_of(fn, repeat):
    times, val = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        val = fn()
        times.append(time.perf_counter() - t0)
    return min(times), val


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--drops", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    names = ["python"] + (["cython"] if kernels.cython_backend is not None else [])
    if len(names) == 1:
        print("compiled kernels not built; timing the fallback only")
    print(f"{'setup':<12} {'kernel':<8} " + " ".join(f"{n:>10}" for n in names) + "   speedup")
    for label, cfg in SETUPS.items():
        work = workload(cfg, args.drops)
        for kname, fn in (("bnb", run_ilp), ("greedy", run_greedy)):
            res = {n: best_of(lambda n=n: fn(work, n), args.repeat) for n in names}
            vals = {v for _, v in res.values()}
            assert len(vals) == 1, f"backends disagree on {label}/{kname}"
            cells = " ".join(f"{res[n][0] * 1e3:8.1f}ms" for n in names)
            speed = f"{res['python'][0] / res['cython'][0]:8.1f}x" if "cython" in res else ""
            print(f"{label:<12} {kname:<8} {cells} {speed}")


if __name__ == "__main__":
    main()
