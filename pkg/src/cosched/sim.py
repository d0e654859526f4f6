"""Monte Carlo driver: random drops, the TTI loop, throughput metrics and result files."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelParams, DropChannel, noise_power_mw, prb_powers, synthetic_channel
from .csi import RateMapper, generate_reports
from .errors import ConfigurationError
from .greedy import GreedyConfig, bs_index, cs_greedy
from .ilp import build_unique_sets, decode_decision, reduce_candidates, solve_exact
from .network import (
    MACRO,
    PICO,
    BaseStation,
    NetworkScenario,
    associate_ues,
    load_gain_tensor,
    strongest_interferers,
)
from .pf import (
    DEFAULT_FLOOR,
    PfState,
    SchedulingDecision,
    evaluate_decision,
    noncoop_pfs,
    update_avg_throughput,
)

SCHEMA_VERSION = 1
SCHEDULERS = ("noncoop_pfs", "cs_ilp", "cs_ga", "cs_gg")
MCS_CAP = 5.4


@dataclass(frozen=True)
class SimConfig:
    scheduler: str = "cs_ilp"
    m_tilde: int | None = None  # cs_gg only; default M - 1
    m_prime: int | None = None  # default min(2, M - 1)
    num_bs: int = 3
    num_pico: int = 0
    ues_per_bs: int = 10
    num_prb: int = 10
    drops: int = 20
    ttis: int = 400
    beta: float = 0.97
    mcs: str = "unbounded"  # or "bounded"
    noise: str = "noiseless"  # or "noisy"
    noise_figure_db: float = 9.0
    noiseless_power_mw: float = 1e-20
    out_of_cluster: str = "none"  # or "ring"
    network_sites: int = 7
    cre_offset_db: float = 0.0
    seed: int = 0
    csi_refresh: int = 1
    fading: str = "static"  # or "block": new Rayleigh draw at every CSI refresh
    rate_scale: float = 1.0
    workers: int = 1
    channel: dict = field(default_factory=dict)
    gain_file: str | None = None  # "N M L" text tensor replacing the synthetic channel

    def __post_init__(self):
        if self.scheduler not in SCHEDULERS:
            raise ConfigurationError(f"unknown scheduler {self.scheduler!r}")
        for name in ("num_bs", "ues_per_bs", "num_prb", "drops", "ttis", "csi_refresh", "workers"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be at least 1")
        if not 0 <= self.num_pico < self.num_bs:
            raise ConfigurationError("num_pico must leave at least one macro site")
        if self.m_prime is not None and not 0 <= self.m_prime <= self.num_bs - 1:
            raise ConfigurationError(f"m_prime must lie in [0, {self.num_bs - 1}]")
        if self.mcs not in ("unbounded", "bounded"):
            raise ConfigurationError(f"unknown mcs mode {self.mcs!r}")
        if self.noise not in ("noiseless", "noisy"):
            raise ConfigurationError(f"unknown noise mode {self.noise!r}")
        if self.out_of_cluster not in ("none", "ring"):
            raise ConfigurationError(f"unknown out-of-cluster mode {self.out_of_cluster!r}")
        if self.fading not in ("static", "block"):
            raise ConfigurationError(f"unknown fading mode {self.fading!r}")
        if not 0.0 < self.beta < 1.0:
            raise ConfigurationError("beta must lie in (0, 1)")
        if self.noiseless_power_mw <= 0:
            raise ConfigurationError("noiseless noise power must be positive")
        if self.cre_offset_db < 0:
            raise ConfigurationError("CRE offset must be non-negative")
        try:
            ChannelParams(**self.channel)
        except TypeError as exc:
            raise ConfigurationError(f"bad channel parameters: {exc}") from None
        if self.gain_file is not None and self.fading == "block":
            raise ConfigurationError("block fading needs the synthetic channel, not a gain file")
        self.greedy_config()

    @property
    def num_macro(self) -> int:
        return self.num_bs - self.num_pico

    @property
    def num_ue(self) -> int:
        return self.ues_per_bs * self.num_bs

    @property
    def effective_m_prime(self) -> int:
        return min(2, self.num_bs - 1) if self.m_prime is None else self.m_prime

    @property
    def effective_m_tilde(self) -> int:
        if self.scheduler == "cs_ga":
            return 1
        return max(1, self.num_bs - 1) if self.m_tilde is None else self.m_tilde

    def greedy_config(self) -> GreedyConfig:
        return GreedyConfig(self.num_bs, self.effective_m_tilde)

    def channel_params(self) -> ChannelParams:
        return ChannelParams(**self.channel)

    def noise_power(self) -> float:
        if self.noise == "noiseless":
            return self.noiseless_power_mw
        return noise_power_mw(self.noise_figure_db, self.channel_params().prb_bandwidth_hz)

    def rate_mapper(self) -> RateMapper:
        return RateMapper(scale=self.rate_scale, cap=MCS_CAP if self.mcs == "bounded" else None)

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self, include_runtime: bool = True) -> dict:
        d = dataclasses.asdict(self)
        if not include_runtime:
            del d["workers"]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {unknown}")
        return cls(**d)


def load_config(path) -> SimConfig:
    """Read a JSON config; a relative ``gain_file`` is taken relative to the config."""
    with open(path) as fh:
        d = json.load(fh)
    gf = d.get("gain_file")
    if gf and not os.path.isabs(gf):
        d["gain_file"] = os.path.join(os.path.dirname(os.path.abspath(path)), gf)
    return SimConfig.from_dict(d)


@dataclass(frozen=True, eq=False)
class Drop:
    channel: DropChannel | None  # None when gains come from a file
    scenario: object  # NetworkScenario of the first fading block
    conn: object
    interferers: object


def drop_seed(config: SimConfig, drop_index: int) -> tuple[int, int]:
    return (config.seed, drop_index)


def _drop_rngs(seed):
    # keyed children: no dependence on how many streams were spawned before
    entropy = list(seed) if isinstance(seed, (tuple, list)) else seed
    geo = np.random.SeedSequence(entropy, spawn_key=(0,))
    fade = np.random.SeedSequence(entropy, spawn_key=(1,))
    return np.random.default_rng(geo), np.random.default_rng(fade)


def generate_drop(config: SimConfig, seed, _rngs=None) -> Drop:
    """Deterministic in (config, seed): geometry, gains, association and interferer sets."""
    geo_rng, fade_rng = _drop_rngs(seed) if _rngs is None else _rngs
    if config.gain_file is not None:
        return _drop_from_file(config)
    hetnet = config.num_pico > 0
    external = max(0, config.network_sites - config.num_macro) if config.out_of_cluster == "ring" else 0
    channel = synthetic_channel(
        geo_rng,
        config.num_macro,
        config.num_pico,
        config.num_ue,
        config.num_prb,
        config.noise_power(),
        config.channel_params(),
        hetnet=hetnet,
        external_sites=external,
    )
    scenario = channel.realize(fade_rng)
    conn = associate_ues(scenario, {PICO: config.cre_offset_db})
    interferers = strongest_interferers(scenario, conn, config.effective_m_prime)
    return Drop(channel, scenario, conn, interferers)


def _drop_from_file(config: SimConfig) -> Drop:
    gain = load_gain_tensor(config.gain_file)
    n, m, l = gain.shape
    if (m, l) != (config.num_bs, config.num_prb):
        raise ConfigurationError(
            f"gain file has M={m}, L={l}; config says M={config.num_bs}, L={config.num_prb}"
        )
    params = config.channel_params()
    bs = tuple(
        BaseStation(bs_class=PICO if i >= config.num_macro else MACRO) for i in range(m)
    )
    scenario = NetworkScenario(
        gain=gain,
        tx_power=prb_powers(bs, l, params),
        noise_power=config.noise_power(),
        bs_list=bs,
    )
    conn = associate_ues(scenario, {PICO: config.cre_offset_db})
    interferers = strongest_interferers(scenario, conn, config.effective_m_prime)
    return Drop(None, scenario, conn, interferers)


class DropContext:
    """Per-drop state shared by all TTIs: reports and the scheduler's precomputed indices."""

    def __init__(self, config: SimConfig, drop: Drop):
        self.config = config
        self.drop = drop
        self.conn = drop.conn
        self.interferers = drop.interferers
        self.mapper = config.rate_mapper()
        self.index = bs_index(drop.conn.serving, drop.conn.num_bs)
        self.greedy = config.greedy_config() if config.scheduler in ("cs_ga", "cs_gg") else None
        self.set_scenario(drop.scenario)
        # indicator sets depend only on I'_n, which is fixed per drop
        self.unique = build_unique_sets(self.conn, self.reports)

    def set_scenario(self, scenario):
        self.scenario = scenario
        self.reports = generate_reports(scenario, self.conn, self.interferers, self.mapper)

    def schedule(self, state: PfState):
        """Decision for one TTI and the summed candidate count (ILP only)."""
        name = self.config.scheduler
        if name == "noncoop_pfs":
            return noncoop_pfs(self.reports, self.conn, state), 0
        slices, cands = [], 0
        for l in range(self.reports.num_prb):
            if name == "cs_ilp":
                sub = reduce_candidates(self.unique, self.reports, state, l)
                cands += sub.num_candidates
                slices.append(decode_decision(solve_exact(sub), sub, self.conn))
            else:
                res = cs_greedy(self.reports, self.conn, state, l, self.greedy, index=self.index)
                slices.append(res.decision)
        return SchedulingDecision.from_slices(slices), cands


@dataclass(frozen=True, eq=False)
class DropResult:
    drop: int
    throughput: np.ndarray  # (N,) R_n after the last TTI
    serving: np.ndarray
    hotspot: np.ndarray
    muted_fraction: float
    mean_candidates: float | None
    objective_trace: np.ndarray  # (T,)


def run_drop(config: SimConfig, drop_index: int, seed=None, scheduler=None) -> DropResult:
    """Run the TTI loop on one drop.

    ``scheduler`` optionally replaces the configured one: a callable
    ``(ctx, state) -> SchedulingDecision``.
    """
    if seed is None:
        seed = drop_seed(config, drop_index)
    geo_rng, fade_rng = _drop_rngs(seed)
    drop = generate_drop(config, seed, _rngs=(geo_rng, fade_rng))
    ctx = DropContext(config, drop)
    state = PfState.initial(drop.scenario.num_ue, config.beta, DEFAULT_FLOOR)
    muted = 0
    cands = 0
    objectives = np.empty(config.ttis)
    for t in range(config.ttis):
        if t and config.fading == "block" and t % config.csi_refresh == 0:
            ctx.set_scenario(drop.channel.realize(fade_rng))
        if scheduler is None:
            decision, c = ctx.schedule(state)
        else:
            decision, c = scheduler(ctx, state), 0
        cands += c
        res = evaluate_decision(ctx.scenario, ctx.conn, ctx.reports, decision, state)
        objectives[t] = res.objective
        muted += int(decision.muting.sum())
        state = update_avg_throughput(state, res.rates)
    is_ilp = scheduler is None and config.scheduler == "cs_ilp"
    return DropResult(
        drop=drop_index,
        throughput=state.avg_throughput.copy(),
        serving=ctx.conn.serving.copy(),
        hotspot=np.array([u.hotspot for u in drop.scenario.ue_list], dtype=bool),
        muted_fraction=muted / (config.num_bs * config.num_prb * config.ttis),
        mean_candidates=cands / (config.num_prb * config.ttis) if is_ilp else None,
        objective_trace=objectives,
    )


def _run_drop_star(args):
    return run_drop(*args)


def cell_edge_throughput(per_ue) -> float:
    """Mean of the lowest ceil(5%) of the values."""
    x = np.sort(np.asarray(per_ue, dtype=float).ravel())
    if not len(x):
        raise ValueError("cell-edge throughput of an empty vector")
    k = -(-len(x) // 20)
    return float(np.mean(x[:k]))


def geometric_mean(per_ue, floor: float = DEFAULT_FLOOR) -> float:
    x = np.asarray(per_ue, dtype=float).ravel()
    if not len(x):
        raise ValueError("geometric mean of an empty vector")
    return float(np.exp(np.mean(np.log(np.maximum(x, floor)))))


def muted_fraction(decisions) -> float:
    """Mean muting indicator over (BS, PRB, TTI)."""
    decisions = list(decisions)
    if not decisions:
        raise ValueError("need at least one TTI")
    return float(np.mean([d.muting.mean() for d in decisions]))


@dataclass(frozen=True, eq=False)
class MetricsSummary:
    scheduler: str
    drops: tuple  # DropResult per drop, in drop order

    @property
    def per_ue(self) -> np.ndarray:
        return np.concatenate([d.throughput for d in self.drops])

    @property
    def cell_edge(self) -> float:
        return cell_edge_throughput(self.per_ue)

    @property
    def geo_mean(self) -> float:
        return geometric_mean(self.per_ue)

    @property
    def mean_throughput(self) -> float:
        return float(np.mean(self.per_ue))

    @property
    def muted_fraction(self) -> float:
        return float(np.mean([d.muted_fraction for d in self.drops]))

    @property
    def per_drop_geo_mean(self) -> np.ndarray:
        return np.array([geometric_mean(d.throughput) for d in self.drops])

    @property
    def per_drop_cell_edge(self) -> np.ndarray:
        return np.array([cell_edge_throughput(d.throughput) for d in self.drops])

    @property
    def mean_candidates(self) -> float | None:
        vals = [d.mean_candidates for d in self.drops]
        return None if any(v is None for v in vals) else float(np.mean(vals))

    def normalized(self, baseline: "MetricsSummary") -> dict:
        return {
            "geo_mean": self.geo_mean / baseline.geo_mean,
            "cell_edge": self.cell_edge / baseline.cell_edge,
            "mean_throughput": self.mean_throughput / baseline.mean_throughput,
        }

    def to_dict(self) -> dict:
        return {
            "scheduler": self.scheduler,
            "cell_edge": self.cell_edge,
            "geo_mean": self.geo_mean,
            "mean_throughput": self.mean_throughput,
            "muted_fraction": self.muted_fraction,
            "mean_candidates": self.mean_candidates,
            "per_drop": [
                {
                    "drop": d.drop,
                    "geo_mean": geometric_mean(d.throughput),
                    "cell_edge": cell_edge_throughput(d.throughput),
                    "muted_fraction": d.muted_fraction,
                    "mean_candidates": d.mean_candidates,
                }
                for d in self.drops
            ],
        }


def run_experiment(config: SimConfig) -> MetricsSummary:
    """All drops of one scheduler.  Results do not depend on ``config.workers``."""
    jobs = [(config, i) for i in range(config.drops)]
    if config.workers > 1 and config.drops > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_run_drop_star, jobs))
    else:
        results = [_run_drop_star(j) for j in jobs]
    results.sort(key=lambda r: r.drop)
    return MetricsSummary(config.scheduler, tuple(results))


def compare(config: SimConfig, schedulers=SCHEDULERS, baseline: str = "noncoop_pfs") -> dict:
    """Run several schedulers on identical drops; returns ``{name: MetricsSummary}``."""
    names = list(dict.fromkeys([baseline, *schedulers]))
    return {name: run_experiment(config.replace(scheduler=name)) for name in names}


def summary_json(config: SimConfig, summaries: dict, baseline: str | None = None) -> str:
    """Versioned JSON document; byte-stable for a fixed config and seed."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": config.to_dict(include_runtime=False),
        "results": {k: v.to_dict() for k, v in summaries.items()},
    }
    if baseline is not None and baseline in summaries:
        base = summaries[baseline]
        doc["baseline"] = baseline
        doc["normalized"] = {k: v.normalized(base) for k, v in summaries.items()}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def per_ue_csv(summaries: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scheduler", "drop", "ue", "serving_bs", "hotspot", "throughput"])
    for name, s in summaries.items():
        for d in s.drops:
            for n, r in enumerate(d.throughput):
                w.writerow([name, d.drop, n, int(d.serving[n]), int(d.hotspot[n]), repr(float(r))])
    return buf.getvalue()


def normalized_table(summaries: dict, baseline: str = "noncoop_pfs") -> str:
    base = summaries[baseline]
    lines = [f"{'scheduler':<12} {'geo_mean':>9} {'cell_edge':>9} {'mean':>9} {'muted':>7}"]
    for name, s in summaries.items():
        r = s.normalized(base)
        lines.append(
            f"{name:<12} {r['geo_mean']:9.4f} {r['cell_edge']:9.4f} "
            f"{r['mean_throughput']:9.4f} {s.muted_fraction:7.4f}"
        )
    return "\n".join(lines)


def write_outputs(path, config: SimConfig, summaries: dict, baseline: str | None = None):
    """Write ``<stem>.json`` and ``<stem>.csv``; returns both paths."""
    path = str(path)
    stem = path[:-5] if path.endswith(".json") else path
    jpath, cpath = stem + ".json", stem + ".csv"
    with open(jpath, "w") as fh:
        fh.write(summary_json(config, summaries, baseline))
    with open(cpath, "w", newline="") as fh:
        fh.write(per_ue_csv(summaries))
    return jpath, cpath


__all__ = [
    "SCHEDULERS",
    "SimConfig",
    "load_config",
    "Drop",
    "drop_seed",
    "generate_drop",
    "DropContext",
    "DropResult",
    "run_drop",
    "cell_edge_throughput",
    "geometric_mean",
    "muted_fraction",
    "MetricsSummary",
    "run_experiment",
    "compare",
    "summary_json",
    "per_ue_csv",
    "normalized_table",
    "write_outputs",
]
