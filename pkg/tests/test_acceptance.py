"""Acceptance checks, one per criterion; each prints a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly as a script.
"""

import functools
import itertools
import time

import numpy as np
import pytest
from scipy import stats

from cosched.csi import CsiReports, scenario_sinr
from cosched.greedy import GreedyConfig, cs_ga, cs_greedy
from cosched.ilp import (
    build_subproblem,
    decode_decision,
    full_subproblem,
    inlp_oracle,
    reduce_candidates,
    solve_exact,
)
from cosched.pf import SchedulingDecision
from cosched.sim import SimConfig, compare, run_drop, summary_json
from oracles import random_instance

pytestmark = pytest.mark.slow


def _instances(count, seed, cap=None):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        m = int(rng.integers(2, 5))
        yield m, random_instance(rng, m, m_prime=m - 1, ues_per_bs=(2, 4), num_prb=1, cap=cap)


@functools.lru_cache(maxsize=None)
def equivalence_set():
    return list(_instances(200, seed=20240901))


def criterion_1():
    t0 = time.perf_counter()
    mismatches = 0
    for m, (_, conn, _, rep, state) in equivalence_set():
        sol = solve_exact(build_subproblem(rep, state, 0, conn=conn))
        if sol.objective != inlp_oracle(rep, conn, state, 0):
            mismatches += 1
    dt = time.perf_counter() - t0
    ok = mismatches == 0 and dt < 30.0
    return ok, f"200 instances, {mismatches} mismatches (zero tolerance), {dt:.2f} s (limit 30 s)"


def criterion_2():
    gg_bad = 0
    for m, (_, conn, _, rep, state) in equivalence_set():
        exact = solve_exact(build_subproblem(rep, state, 0, conn=conn)).objective
        if cs_greedy(rep, conn, state, 0, GreedyConfig(m, m - 1)).objective != exact:
            gg_bad += 1
    trace_bad = 0
    for m, (_, conn, _, rep, state) in _instances(50, seed=77):
        a = cs_greedy(rep, conn, state, 0, GreedyConfig(m, 1))
        b = cs_ga(rep, conn, state, 0)
        if a.trace_bytes() != b.trace_bytes():
            trace_bad += 1
    ok = gg_bad == 0 and trace_bad == 0
    return ok, f"m~=M-1 vs exact: {gg_bad}/200 differ; m~=1 vs CS-GA trace: {trace_bad}/50 differ"


def _subset_pairs(masks):
    for i, j in itertools.permutations(range(len(masks)), 2):
        a, b = int(masks[i]), int(masks[j])
        if a & b == a and a != b:
            yield i, j


def monotonicity(cases=500):
    rng = np.random.default_rng(101)
    p1 = c1 = 0
    for k in range(cases):
        m = int(rng.integers(2, 6))
        cap = 5.4 if k % 2 else None
        sc, conn, inter, rep, _ = random_instance(rng, m, m_prime=int(rng.integers(1, m)), num_prb=3, cap=cap, oc=True)
        s = scenario_sinr(sc, conn, inter)
        for n in range(sc.num_ue):
            for i, j in _subset_pairs(rep.masks[n]):
                p1 += int(not (s[n, :, i] < s[n, :, j]).all())
                c1 += int(not (rep.rates[n, :, i] <= rep.rates[n, :, j]).all())
    return p1, c1


def reduction_lossless(cases=500):
    rng = np.random.default_rng(303)
    bad = 0
    for _ in range(cases):
        m = int(rng.integers(2, 6))
        _, conn, _, rep, state = random_instance(rng, m, m_prime=min(2, m - 1), ues_per_bs=(1, 5), num_prb=1)
        red = solve_exact(build_subproblem(rep, state, 0, conn=conn)).objective
        full = solve_exact(full_subproblem(rep, state, 0)).objective
        bad += int(red != full)
    return bad


def _with_useless_interferer(rng, rep, conn):
    """Make one strongest interferer of some UEs irrelevant: muting it never changes the rate."""
    rates = np.array(rep.rates)
    masks = rep.masks
    touched = 0
    for n in range(rep.num_ue):
        members = rep.interferers.of(n)
        if not members or rng.random() < 0.3:
            continue
        b = 1 << int(rng.choice(members))
        pos = {int(mk): j for j, mk in enumerate(masks[n])}
        for j, mk in enumerate(masks[n]):
            if int(mk) & b:
                rates[n, :, j] = rates[n, :, pos[int(mk) & ~b]]
        touched += 1
    return CsiReports(rates, rep.interferers, conn.serving), touched


def wasted_muting(sub, sol, rep, state, prb):
    """Selected superset scenarios whose subset twin has the same rate while a freed BS could serve."""
    sel = [(int(sub.candidates[c]), int(j)) for c, j in zip(*np.nonzero(sol.x))]
    found = 0
    for n, j in sel:
        others = 0
        for n2, j2 in sel:
            if (n2, j2) != (n, j):
                others |= int(rep.masks[n2, j2])
        mj = int(rep.masks[n, j])
        for i in range(rep.num_scenarios):
            mi = int(rep.masks[n, i])
            if mi & mj != mi or mi == mj or rep.rates[n, prb, i] != rep.rates[n, prb, j]:
                continue
            freed = (mj & ~mi) & ~others
            for d in range(rep.num_bs):
                if freed >> d & 1:
                    ues = np.flatnonzero(rep.serving == d)
                    if (rep.rates[ues, prb, 0] / state.avg_throughput[ues] > 0).any():
                        found += 1
    return found


def no_wasted_muting(cases=500):
    rng = np.random.default_rng(202)
    bad = constructed = 0
    for k in range(cases):
        m = int(rng.integers(2, 5))
        cap = 5.4 if k % 3 == 0 else None
        _, conn, _, rep, state = random_instance(rng, m, num_prb=1, cap=cap)
        rep2, touched = _with_useless_interferer(rng, rep, conn)
        constructed += touched
        sub = build_subproblem(rep2, state, 0, conn=conn)
        bad += wasted_muting(sub, solve_exact(sub), rep2, state, 0)
    return bad, constructed


def criterion_3():
    p1, c1 = monotonicity()
    p3 = reduction_lossless()
    p2, constructed = no_wasted_muting()
    ok = p1 == 0 and c1 == 0 and p3 == 0 and p2 == 0
    return ok, (
        f"SINR strict monotonicity violations {p1}/500 cases, rate monotonicity {c1}/500, "
        f"reduced != full {p3}/500, "
        f"wasted muting {p2}/500 ({constructed} UEs with equal-rate scenario pairs)"
    )


BASE = SimConfig(num_bs=3, ues_per_bs=10, num_prb=10, drops=20, ttis=400, out_of_cluster="none", seed=2024)
UNBOUNDED = BASE.replace(mcs="unbounded", noise="noiseless")
BOUNDED = BASE.replace(mcs="bounded", noise="noisy")


@functools.lru_cache(maxsize=None)
def grid(kind):
    cfg = UNBOUNDED if kind == "unbounded" else BOUNDED
    t0 = time.perf_counter()
    res = compare(cfg, ["noncoop_pfs", "cs_ilp", "cs_ga", "cs_gg"])
    return res, time.perf_counter() - t0


def criterion_4():
    unb, t1 = grid("unbounded")
    bnd, t2 = grid("bounded")
    f_ilp = unb["cs_ilp"].muted_fraction
    f_ga = unb["cs_ga"].muted_fraction
    noisy = {k: bnd[k].muted_fraction for k in ("cs_ilp", "cs_ga", "cs_gg")}
    ok = abs(f_ilp - 0.67) <= 0.05 and f_ga < f_ilp and all(v <= 0.15 for v in noisy.values())
    ok = ok and t1 + t2 < 600
    noisy_txt = ", ".join(f"{k}={v:.3f}" for k, v in noisy.items())
    return ok, (
        f"unbounded+noiseless: CS-ILP {f_ilp:.3f} (0.67+-0.05), CS-GA {f_ga:.3f}; "
        f"bounded+noisy: {noisy_txt} (<=0.15); runtime {t1 + t2:.0f} s"
    )


def criterion_5():
    unb, _ = grid("unbounded")
    bnd, _ = grid("bounded")
    base = unb["noncoop_pfs"]
    r = {k: unb[k].normalized(base) for k in ("cs_ilp", "cs_gg", "cs_ga")}
    checks = []
    for metric in ("geo_mean", "cell_edge"):
        ilp, gg, ga = r["cs_ilp"][metric], r["cs_gg"][metric], r["cs_ga"][metric]
        checks.append(abs(ilp - gg) <= 1e-9 * ilp)
        checks.append(gg >= ga >= 1.0)
    # paired over drops, one-sided: CS-ILP above CS-GA in per-drop geometric mean
    a, b = unb["cs_ilp"].per_drop_geo_mean, unb["cs_ga"].per_drop_geo_mean
    p = stats.wilcoxon(a, b, alternative="greater").pvalue
    checks.append(p < 0.05)
    g_ilp, g_ga = bnd["cs_ilp"].geo_mean, bnd["cs_ga"].geo_mean
    gap = abs(g_ilp - g_ga) / g_ilp
    checks.append(gap < 0.03)
    txt = "; ".join(
        f"{m}: ILP {r['cs_ilp'][m]:.4f} GG {r['cs_gg'][m]:.4f} GA {r['cs_ga'][m]:.4f}"
        for m in ("geo_mean", "cell_edge")
    )
    return all(checks), f"{txt}; Wilcoxon p={p:.2e}; bounded+noisy ILP-GA geo gap {100 * gap:.2f}% (<3%)"


HETNET = SimConfig(
    num_bs=6, num_pico=3, ues_per_bs=10, num_prb=10, m_prime=2, cre_offset_db=6.0,
    noise="noisy", mcs="bounded", drops=5, ttis=10, seed=606,
)


def criterion_6():
    n = HETNET.num_ue
    cands, bad, cases = [], 0, 0

    def check(ctx, state):
        nonlocal bad, cases
        slices = []
        for l in range(HETNET.num_prb):
            sub = reduce_candidates(ctx.unique, ctx.reports, state, l)
            sol = solve_exact(sub)
            full = solve_exact(full_subproblem(ctx.reports, state, l))
            cands.append(sub.num_candidates)
            bad += int(sol.objective != full.objective)
            cases += 1
            slices.append(decode_decision(sol, sub, ctx.conn))
        return SchedulingDecision.from_slices(slices)

    for d in range(HETNET.drops):
        run_drop(HETNET, d, scheduler=check)
    mean_c = float(np.mean(cands))
    ok = mean_c < n and bad == 0 and cases >= 500
    return ok, f"M=6 (3 picos), N={n}: mean |N'_l| = {mean_c:.1f} < {n}; reduced != full in {bad}/{cases} cases"


def criterion_7():
    cfg = SimConfig(num_bs=3, ues_per_bs=5, num_prb=5, drops=4, ttis=60, seed=7)
    outs = []
    for w in (1, 2, 4):
        c = cfg.replace(workers=w)
        outs.append(summary_json(c, compare(c), baseline="noncoop_pfs").encode())
    ok = all(o == outs[0] for o in outs)
    return ok, f"JSON for workers 1/2/4 byte-identical: {ok} ({len(outs[0])} bytes)"


CRITERIA = [
    ("1 ILP-INLP equivalence", criterion_1),
    ("2 greedy endpoint identities", criterion_2),
    ("3 structural property suites", criterion_3),
    ("4 muted-fraction trends", criterion_4),
    ("5 scheduler ordering", criterion_5),
    ("6 candidate reduction", criterion_6),
    ("7 determinism across workers", criterion_7),
]


def _report(name, fn):
    ok, detail = fn()
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {name}: {detail}"
    return ok, line


@pytest.mark.parametrize("name, fn", CRITERIA, ids=[c[0].split()[0] for c in CRITERIA])
def test_criterion(name, fn, capsys):
    ok, line = _report(name, fn)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    for name, fn in CRITERIA:
        print(_report(name, fn)[1], flush=True)
