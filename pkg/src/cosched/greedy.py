"""Greedy deflation heuristics: single-BS muting steps and the generalized variant."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .csi import CsiReports, lookup_rate_rho, mask_of
from .errors import ConfigurationError
from .network import ConnectionMatrix
from .pf import DecisionSlice, PfState, best_ue_per_bs


@dataclass(frozen=True)
class GreedyConfig:
    """``m_tilde`` bounds how many BSs one step may mute; ``pool`` lists mutable BSs."""

    num_bs: int
    m_tilde: int = 1
    pool: tuple[int, ...] | None = None

    def __post_init__(self):
        upper = max(1, self.num_bs - 1)
        if not 1 <= self.m_tilde <= upper:
            raise ConfigurationError(f"m_tilde must lie in [1, {upper}], got {self.m_tilde}")
        pool = tuple(range(self.num_bs)) if self.pool is None else tuple(sorted(set(self.pool)))
        if not pool or not all(0 <= m < self.num_bs for m in pool):
            raise ConfigurationError("candidate pool must be a nonempty subset of the cluster")
        object.__setattr__(self, "pool", pool)


def candidate_muting_sets(config: GreedyConfig) -> list[tuple[int, ...]]:
    """All subsets of the pool with 1..m_tilde members, by size then lexicographically."""
    out = []
    for size in range(1, config.m_tilde + 1):
        out.extend(itertools.combinations(config.pool, size))
    return out


@dataclass(frozen=True, eq=False)
class GreedyResult:
    decision: DecisionSlice
    muted_mask: int
    trace_masks: tuple[int, ...] = field(default=())
    trace_values: tuple[float, ...] = field(default=())

    @property
    def objective(self) -> float:
        return self.trace_values[-1]

    def trace_bytes(self) -> bytes:
        """Canonical byte form of the committed muting sequence and its values."""
        parts = [f"{m}" for m in self.trace_masks]
        parts += [v.hex() for v in self.trace_values]
        parts += ["".join(map(str, self.decision.assignment)), "".join(map(str, self.decision.muting))]
        return "|".join(parts).encode()


def bs_index(serving, num_bs):
    """CSR layout of the UEs of each BS: ``(ptr, ues)``."""
    serving = np.asarray(serving, dtype=np.int64)
    ues = np.argsort(serving, kind="stable").astype(np.int64)
    ptr = np.zeros(num_bs + 1, dtype=np.int64)
    ptr[1:] = np.cumsum(np.bincount(serving, minlength=num_bs))
    return ptr, ues


def decision_under_column(reports: CsiReports, state: PfState, prb: int, alpha: int) -> DecisionSlice:
    """Every unmuted BS serves its best UE under the column (lowest index on ties)."""
    scen = reports.scenario_under_column(alpha)
    metric = reports.rates[np.arange(reports.num_ue), prb, scen] / state.avg_throughput
    ue_idx, _ = best_ue_per_bs(metric, reports.serving, reports.num_bs)
    assignment = np.zeros(reports.num_ue, dtype=np.int8)
    muting = np.array([alpha >> m & 1 for m in range(reports.num_bs)], dtype=np.int8)
    for m in range(reports.num_bs):
        if not muting[m] and ue_idx[m] >= 0:
            assignment[ue_idx[m]] = 1
    return DecisionSlice(assignment=assignment, muting=muting)


def cs_greedy(
    reports: CsiReports,
    conn: ConnectionMatrix,
    state: PfState,
    prb: int,
    config: GreedyConfig,
    backend=None,
    index=None,
) -> GreedyResult:
    """Generalized greedy deflation on one PRB.

    Starting from no muting, each step tries every candidate set on top of
    the BSs already muted and commits the strictly best one (earliest in
    candidate order on ties).  Committed mutings are never undone.
    """
    be = kernels.get_backend(backend)
    ptr, ues = index if index is not None else bs_index(conn.serving, conn.num_bs)
    cand = np.array([mask_of(c) for c in candidate_muting_sets(config)], dtype=np.int64)
    muted, masks, values = be.greedy_search(
        np.ascontiguousarray(reports.rates[:, prb, :]),
        state.avg_throughput,
        reports.interferers.members,
        reports.lut,
        ptr,
        ues,
        conn.num_bs,
        cand,
    )
    return GreedyResult(
        decision=decision_under_column(reports, state, prb, int(muted)),
        muted_mask=int(muted),
        trace_masks=tuple(int(m) for m in masks),
        trace_values=tuple(float(v) for v in values),
    )


def cs_ga(reports: CsiReports, conn: ConnectionMatrix, state: PfState, prb: int) -> GreedyResult:
    """Single-BS greedy muting: mute one more BS per step while the PF sum grows."""
    num_bs = conn.num_bs
    groups = [list(conn.ues_of(m)) for m in range(num_bs)]
    avg = state.avg_throughput

    def value(alpha):
        total = 0.0
        for m in range(num_bs):
            if alpha >> m & 1:
                continue
            best = 0.0
            for n in groups[m]:
                met = lookup_rate_rho(reports, int(n), prb, alpha) / avg[n]
                if met > best:
                    best = met
            total += best
        return total

    muted = 0
    cur = value(0)
    masks, values = [], [cur]
    while True:
        step = None
        for m in range(num_bs):
            if muted >> m & 1:
                continue
            v = value(muted | 1 << m)
            if v > cur and (step is None or v > step[1]):
                step = (muted | 1 << m, v)
        if step is None:
            break
        muted, cur = step
        masks.append(muted)
        values.append(cur)
    return GreedyResult(
        decision=decision_under_column(reports, state, prb, muted),
        muted_mask=muted,
        trace_masks=tuple(masks),
        trace_values=tuple(float(v) for v in values),
    )
