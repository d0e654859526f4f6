"""Proportional-fair machinery shared by all schedulers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .csi import CsiReports, mask_of
from .errors import FeasibilityError
from .network import ConnectionMatrix

DEFAULT_BETA = 0.97
DEFAULT_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class PfState:
    """Exponentially averaged per-UE throughput driving the PF metric."""

    avg_throughput: np.ndarray
    beta: float = DEFAULT_BETA
    floor: float = DEFAULT_FLOOR

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError("forgetting factor must lie in (0, 1)")
        if not self.floor > 0:
            raise ValueError("throughput floor must be positive")
        r = np.maximum(np.asarray(self.avg_throughput, dtype=float), self.floor)
        r.setflags(write=False)
        object.__setattr__(self, "avg_throughput", r)

    @classmethod
    def initial(cls, num_ue: int, beta: float = DEFAULT_BETA, floor: float = DEFAULT_FLOOR):
        return cls(np.full(num_ue, floor), beta, floor)

    @property
    def num_ue(self) -> int:
        return self.avg_throughput.shape[0]

    def scaled(self, c: float) -> "PfState":
        return PfState(self.avg_throughput * c, self.beta, self.floor)


def pf_metric(rate: float, state: PfState, ue: int) -> float:
    return rate / state.avg_throughput[ue]


def update_avg_throughput(state: PfState, realized) -> PfState:
    r = np.asarray(realized, dtype=float)
    if r.shape != state.avg_throughput.shape:
        raise ValueError("realized rate vector has the wrong length")
    if (r < 0).any():
        raise ValueError("realized rates must be non-negative")
    new = state.beta * state.avg_throughput + (1.0 - state.beta) * r
    return PfState(new, state.beta, state.floor)


@dataclass(frozen=True, eq=False)
class SchedulingDecision:
    """Binary UE-to-PRB assignment ``(N, L)`` and BS muting ``(M, L)``."""

    assignment: np.ndarray
    muting: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.assignment)
        a = np.asarray(self.muting)
        if s.ndim != 2 or a.ndim != 2 or s.shape[1] != a.shape[1]:
            raise ValueError("assignment (N, L) and muting (M, L) must share L")
        if not (np.isin(s, (0, 1)).all() and np.isin(a, (0, 1)).all()):
            raise ValueError("decision matrices must be binary")
        object.__setattr__(self, "assignment", s.astype(np.int8))
        object.__setattr__(self, "muting", a.astype(np.int8))

    @classmethod
    def empty(cls, num_ue: int, num_bs: int, num_prb: int) -> "SchedulingDecision":
        return cls(np.zeros((num_ue, num_prb)), np.zeros((num_bs, num_prb)))

    @classmethod
    def from_slices(cls, slices) -> "SchedulingDecision":
        return cls(
            np.stack([s.assignment for s in slices], axis=1),
            np.stack([s.muting for s in slices], axis=1),
        )

    @property
    def num_prb(self) -> int:
        return self.assignment.shape[1]

    def check(self, conn: ConnectionMatrix) -> None:
        """Raise :class:`FeasibilityError` on the first violated (BS, PRB) pair."""
        load = conn.matrix.T.astype(np.int64) @ self.assignment.astype(np.int64)
        bad = np.argwhere(self.muting + load > 1)
        if len(bad):
            m, l = (int(v) for v in bad[0])
            raise FeasibilityError(m, l)

    def __eq__(self, other):
        return (
            isinstance(other, SchedulingDecision)
            and np.array_equal(self.assignment, other.assignment)
            and np.array_equal(self.muting, other.muting)
        )


@dataclass(frozen=True, eq=False)
class DecisionSlice:
    """One PRB column of a :class:`SchedulingDecision`."""

    assignment: np.ndarray  # (N,)
    muting: np.ndarray  # (M,)

    @property
    def muted_mask(self) -> int:
        return mask_of(np.flatnonzero(self.muting))

    def __eq__(self, other):
        return (
            isinstance(other, DecisionSlice)
            and np.array_equal(self.assignment, other.assignment)
            and np.array_equal(self.muting, other.muting)
        )


@dataclass(frozen=True, eq=False)
class TtiResult:
    rates: np.ndarray
    objective: float
    muted_fraction: float


def realized_rates(reports: CsiReports, decision: SchedulingDecision) -> np.ndarray:
    """Per-UE rate summed over PRBs, each PRB priced by the rho lookup."""
    n = reports.num_ue
    out = np.zeros(n)
    for l in range(decision.num_prb):
        sched = np.flatnonzero(decision.assignment[:, l])
        if not len(sched):
            continue
        alpha = mask_of(np.flatnonzero(decision.muting[:, l]))
        scen = reports.scenario_under_column(alpha)
        out[sched] += reports.rates[sched, l, scen[sched]]
    return out


def evaluate_decision(
    scenario,
    conn: ConnectionMatrix,
    reports: CsiReports,
    decision: SchedulingDecision,
    state: PfState,
) -> TtiResult:
    decision.check(conn)
    rates = realized_rates(reports, decision)
    objective = float(np.sum(rates / state.avg_throughput))
    return TtiResult(rates=rates, objective=objective, muted_fraction=float(decision.muting.mean()))


def best_ue_per_bs(metric: np.ndarray, serving: np.ndarray, num_bs: int):
    """Per BS, the UE with the largest metric (lowest index on ties), or -1 when empty.

    ``metric`` may be (N,) or (N, L); returns matching (M,) or (M, L) arrays
    of UE indices and metric values.
    """
    metric = np.asarray(metric, dtype=float)
    squeeze = metric.ndim == 1
    if squeeze:
        metric = metric[:, None]
    ue_idx = np.full((num_bs, metric.shape[1]), -1, dtype=np.int64)
    best = np.zeros((num_bs, metric.shape[1]))
    for m in range(num_bs):
        ues = np.flatnonzero(serving == m)
        if len(ues):
            k = np.argmax(metric[ues], axis=0)
            ue_idx[m] = ues[k]
            best[m] = metric[ues[k], np.arange(metric.shape[1])]
    if squeeze:
        return ue_idx[:, 0], best[:, 0]
    return ue_idx, best


def noncoop_pfs(reports: CsiReports, conn: ConnectionMatrix, state: PfState) -> SchedulingDecision:
    """Independent per-BS PF scheduling on the no-muting reports."""
    metric = reports.rates[:, :, 0] / state.avg_throughput[:, None]
    ue_idx, _ = best_ue_per_bs(metric, conn.serving, conn.num_bs)
    n, l = metric.shape
    assignment = np.zeros((n, l), dtype=np.int8)
    for m in range(conn.num_bs):
        cols = np.flatnonzero(ue_idx[m] >= 0)
        assignment[ue_idx[m, cols], cols] = 1
    return SchedulingDecision(assignment, np.zeros((conn.num_bs, l), dtype=np.int8))
