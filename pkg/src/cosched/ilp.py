"""Per-PRB integer linear program for coordinated scheduling with muting.

The joint scheduling/muting problem separates over PRBs.  On each PRB the
lifted variable ``s[n, j]`` means "UE n is served under its reported
scenario j", which forces every BS of the scenario's indicator set to stay
silent.  Per serving BS and per distinct indicator set only the UE with the
largest PF metric can be part of an optimum, so all other UEs are dropped
before the search (``reduce_candidates``).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .csi import CsiReports, members_of
from .errors import ConfigurationError, DecodeError
from .network import ConnectionMatrix
from .pf import DecisionSlice, PfState


def _set_key(mask: int):
    members = members_of(mask)
    return (len(members), members)


class UniqueMutingSets:
    """Distinct indicator sets reported to each BS and the UE groups sharing them."""

    def __init__(self, conn: ConnectionMatrix, masks: np.ndarray):
        masks = np.asarray(masks, dtype=np.int64)
        self.num_bs = conn.num_bs
        self.num_scenarios = masks.shape[1]
        sets, groups = [], []
        group_id = np.empty(masks.shape, dtype=np.int64)
        g = 0
        group_bs, group_mask = [], []
        for m in range(self.num_bs):
            members = conn.ues_of(m)
            uniq = sorted({int(v) for v in masks[members].ravel()}, key=_set_key)
            sets.append(tuple(uniq))
            per = {}
            for mask in uniq:
                per[mask] = []
                group_bs.append(m)
                group_mask.append(mask)
            pos = {mask: g + i for i, mask in enumerate(uniq)}
            for n in members:
                for j, mask in enumerate(masks[n]):
                    per[int(mask)].append((int(n), j))
                    group_id[n, j] = pos[int(mask)]
            groups.append({k: tuple(v) for k, v in per.items()})
            g += len(uniq)
        self.sets = tuple(sets)
        self.groups = tuple(groups)
        self.group_id = group_id
        self.group_bs = np.array(group_bs, dtype=np.int64)
        self.group_mask = np.array(group_mask, dtype=np.int64)
        # (UE, scenario) pairs sorted by group then UE, for segment reductions
        flat = np.argsort(group_id.ravel(), kind="stable")
        self._pair_ue, self._pair_scen = np.divmod(flat, self.num_scenarios)
        counts = np.bincount(group_id.ravel(), minlength=g)
        self._starts = np.concatenate(([0], np.cumsum(counts)[:-1])).astype(np.int64)

    @property
    def num_groups(self) -> int:
        return len(self.group_bs)

    def count(self, bs: int) -> int:
        """J'_m, the number of distinct indicator sets at ``bs``."""
        return len(self.sets[bs])

    def winners(self, metric: np.ndarray):
        """Per group, the winning (UE, scenario) pair and its metric.

        ``metric`` is (N, J') for one PRB.  Ties go to the lowest UE index.
        """
        vals = metric[self._pair_ue, self._pair_scen]
        p = len(vals)
        gmax = np.maximum.reduceat(vals, self._starts)
        seg = np.repeat(np.arange(len(self._starts)), np.diff(np.append(self._starts, p)))
        score = np.where(vals == gmax[seg], p - np.arange(p), 0)
        first = p - np.maximum.reduceat(score, self._starts)
        return self._pair_ue[first], self._pair_scen[first], gmax


def build_unique_sets(conn: ConnectionMatrix, reports_or_masks) -> UniqueMutingSets:
    masks = reports_or_masks.masks if isinstance(reports_or_masks, CsiReports) else reports_or_masks
    return UniqueMutingSets(conn, masks)


@dataclass(frozen=True, eq=False)
class SubproblemInstance:
    """Lifted ILP of one PRB over the candidate UEs.

    Variable ``(c, j)`` has flat index ``c * J' + j``; candidates are sorted
    by UE index so flat order is (UE, scenario) order.  Zero coefficients
    mark variables fixed to 0.
    """

    prb: int
    num_bs: int
    candidates: np.ndarray  # (C,) UE indices
    serving: np.ndarray  # (C,)
    masks: np.ndarray  # (C, J') indicator bitmasks
    interferer_masks: np.ndarray  # (C,) bitmask of each candidate's strongest interferers
    rates: np.ndarray  # (C, J'), zero where not a group winner
    avg_throughput: np.ndarray  # (C,)

    @cached_property
    def coefficients(self) -> np.ndarray:
        return self.rates / self.avg_throughput[:, None]

    @property
    def num_candidates(self) -> int:
        return len(self.candidates)

    @property
    def num_scenarios(self) -> int:
        return self.masks.shape[1]

    @cached_property
    def variables(self) -> np.ndarray:
        """Flat indices of the free variables (positive coefficient)."""
        return np.flatnonzero(self.coefficients.ravel() > 0)

    @cached_property
    def fixed_zero(self) -> np.ndarray:
        return np.flatnonzero(self.coefficients.ravel() <= 0)

    @cached_property
    def noncooperating_bs(self) -> tuple[int, ...]:
        covered = 0
        for mask in self.interferer_masks:
            covered |= int(mask)
        return tuple(m for m in range(self.num_bs) if not covered >> m & 1)

    def vars_of_bs(self, bs: int) -> np.ndarray:
        cand = np.flatnonzero(self.serving == bs)
        jp = self.num_scenarios
        return (cand[:, None] * jp + np.arange(jp)[None, :]).ravel()

    @cached_property
    def muting_constraints(self):
        """Rows ``s[v] + sum(s[k] for k in others) <= 1``, one per variable and muted BS."""
        rows = []
        jp = self.num_scenarios
        for c in range(self.num_candidates):
            for j in range(jp):
                for m in members_of(int(self.masks[c, j])):
                    rows.append((c * jp + j, m, self.vars_of_bs(m)))
        return rows

    @cached_property
    def single_user_constraints(self):
        """Rows ``sum(s[k]) <= 1`` for BSs that are nobody's strong interferer."""
        return [(m, self.vars_of_bs(m)) for m in self.noncooperating_bs]

    def is_feasible(self, x) -> bool:
        x = np.asarray(x).ravel()
        if x.shape != (self.num_candidates * self.num_scenarios,) or not np.isin(x, (0, 1)).all():
            return False
        if x[self.fixed_zero].any():
            return False
        for v, _, others in self.muting_constraints:
            if x[v] + x[others].sum() > 1:
                return False
        for _, others in self.single_user_constraints:
            if x[others].sum() > 1:
                return False
        return True

    def check_selection(self, x) -> bool:
        """Same answer as :meth:`is_feasible` without materialising the rows."""
        x = np.asarray(x).reshape(self.coefficients.shape)
        if not np.isin(x, (0, 1)).all() or (x.ravel()[self.fixed_zero] != 0).any():
            return False
        c, j = np.nonzero(x)
        bs = self.serving[c]
        if len(np.unique(bs)) != len(bs):
            # every BS carries an at-most-one row, via muting rows or group (c)
            return False
        muted = 0
        for mk in self.masks[c, j]:
            muted |= int(mk)
        return not any(muted >> int(m) & 1 for m in bs)

    def objective(self, x) -> float:
        """Sum of selected PF metrics accumulated in serving-BS order."""
        x = np.asarray(x).reshape(self.coefficients.shape)
        total = 0.0
        for m in range(self.num_bs):
            for c in np.flatnonzero(self.serving == m):
                for j in np.flatnonzero(x[c]):
                    total += float(self.coefficients[c, j])
        return total

    def dump(self, fh) -> None:
        """Plain-text listing of variables and constraints."""
        jp = self.num_scenarios
        fh.write(
            f"# prb {self.prb} bs {self.num_bs} candidates {self.num_candidates} scenarios {jp}\n"
        )
        coef = self.coefficients.ravel()
        for v in range(self.num_candidates * jp):
            c, j = divmod(v, jp)
            kind = "var" if coef[v] > 0 else "fixed0"
            fh.write(
                f"{kind} {v} ue {int(self.candidates[c])} bs {int(self.serving[c])} "
                f"scenario {j} mute {int(self.masks[c, j])} coef {float(coef[v])!r}\n"
            )
        for v, m, others in self.muting_constraints:
            fh.write(f"mute {v} bs {m} : {' '.join(map(str, others))}\n")
        for m, others in self.single_user_constraints:
            fh.write(f"single bs {m} : {' '.join(map(str, others))}\n")


def _instance(prb, reports, state, cand, rates):
    return SubproblemInstance(
        prb=prb,
        num_bs=reports.num_bs,
        candidates=cand,
        serving=reports.serving[cand],
        masks=reports.masks[cand],
        interferer_masks=reports.interferer_masks[cand],
        rates=rates,
        avg_throughput=state.avg_throughput[cand],
    )


def reduce_candidates(
    unique: UniqueMutingSets, reports: CsiReports, state: PfState, prb: int
) -> SubproblemInstance:
    """Keep, per BS and distinct indicator set, only the best PF-metric UE."""
    metric = reports.rates[:, prb, :] / state.avg_throughput[:, None]
    ue, scen, gmax = unique.winners(metric)
    keep = gmax > 0
    ue, scen = ue[keep], scen[keep]
    cand = np.unique(ue)
    rates = np.zeros((len(cand), reports.num_scenarios))
    row = np.searchsorted(cand, ue)
    rates[row, scen] = reports.rates[ue, prb, scen]
    return _instance(prb, reports, state, cand, rates)


def full_subproblem(reports: CsiReports, state: PfState, prb: int) -> SubproblemInstance:
    """The same ILP without reduction: every UE with every reported scenario."""
    cand = np.arange(reports.num_ue)
    return _instance(prb, reports, state, cand, reports.rates[:, prb, :].copy())


def build_subproblem(
    reports: CsiReports,
    state: PfState,
    prb: int,
    unique: UniqueMutingSets | None = None,
    reduce: bool = True,
    conn: ConnectionMatrix | None = None,
) -> SubproblemInstance:
    if not reduce:
        return full_subproblem(reports, state, prb)
    if unique is None:
        if conn is None:
            conn = ConnectionMatrix.from_serving(reports.serving, reports.num_bs)
        unique = build_unique_sets(conn, reports)
    return reduce_candidates(unique, reports, state, prb)


@dataclass(frozen=True, eq=False)
class LiftedSolution:
    x: np.ndarray  # (C, J') binary
    objective: float

    def selected(self, sub: SubproblemInstance):
        return [(int(sub.candidates[c]), int(j)) for c, j in zip(*np.nonzero(self.x))]


def solve_exact(sub: SubproblemInstance, exhaustive: bool = False, backend=None) -> LiftedSolution:
    """Global maximiser of the lifted per-PRB ILP.

    Depth-first branch-and-bound over BSs in index order, bounded by the
    current value plus the best coefficient of every undecided unmuted BS.
    ``exhaustive=True`` disables pruning.  Among equal optima the
    lexicographically smallest variable vector is returned.
    """
    be = kernels.get_backend(backend)
    jp = sub.num_scenarios
    v = sub.variables
    c, j = np.divmod(v, jp)
    sel, value = be.bnb_search(
        sub.serving[c], sub.masks[c, j], sub.coefficients[c, j], sub.num_bs, exhaustive
    )
    x = np.zeros(sub.coefficients.shape, dtype=np.int8)
    for s in sel:
        if s >= 0:
            x[c[s], j[s]] = 1
    return LiftedSolution(x=x, objective=float(value))


def decode_decision(
    solution: LiftedSolution, sub: SubproblemInstance, conn: ConnectionMatrix
) -> DecisionSlice:
    if not sub.check_selection(solution.x):
        raise DecodeError(f"lifted solution on PRB {sub.prb} violates the ILP constraints")
    assignment = np.zeros(conn.num_ue, dtype=np.int8)
    muted = 0
    for c, j in zip(*np.nonzero(solution.x)):
        assignment[sub.candidates[c]] = 1
        muted |= int(sub.masks[c, j])
    muting = np.array([muted >> m & 1 for m in range(conn.num_bs)], dtype=np.int8)
    return DecisionSlice(assignment=assignment, muting=muting)


def column_objective(reports: CsiReports, state: PfState, prb: int, alpha: int) -> tuple:
    """Objective of one muting column when each unmuted BS serves its best UE.

    Returns ``(value, chosen)``; ``chosen[m]`` is the UE picked at BS ``m``
    (``-1`` if muted, empty or every metric is zero).
    """
    scen = reports.scenario_under_column(alpha)
    metric = reports.rates[np.arange(reports.num_ue), prb, scen] / state.avg_throughput
    total = 0.0
    chosen = []
    for m in range(reports.num_bs):
        if alpha >> m & 1:
            chosen.append(-1)
            continue
        best, pick = 0.0, -1
        for n in np.flatnonzero(reports.serving == m):
            if metric[n] > best:
                best, pick = float(metric[n]), int(n)
        chosen.append(pick)
        total += best
    return total, chosen


MAX_ORACLE_BS = 8


def inlp_oracle(
    reports: CsiReports,
    conn: ConnectionMatrix,
    state: PfState,
    prb: int,
    max_bs: int = MAX_ORACLE_BS,
    return_column: bool = False,
):
    """Exhaustive optimum of the original non-linear per-PRB problem.

    Enumerates all ``2**M`` muting columns; for each, the unmuted BSs pick
    their best UE with rates given by the rho lookup.
    """
    if conn.num_bs > max_bs:
        raise ConfigurationError(f"oracle refuses M={conn.num_bs} > {max_bs}")
    best_val, best_alpha = -1.0, 0
    for alpha in range(1 << conn.num_bs):
        val, _ = column_objective(reports, state, prb, alpha)
        if val > best_val:
            best_val, best_alpha = val, alpha
    return (best_val, best_alpha) if return_column else best_val


def solve_prb(reports, conn, state, prb, unique=None, reduce=True, backend=None):
    sub = build_subproblem(reports, state, prb, unique=unique, reduce=reduce, conn=conn)
    sol = solve_exact(sub, backend=backend)
    return sub, sol, decode_decision(sol, sub, conn)


__all__ = [
    "UniqueMutingSets",
    "build_unique_sets",
    "SubproblemInstance",
    "reduce_candidates",
    "full_subproblem",
    "build_subproblem",
    "LiftedSolution",
    "solve_exact",
    "decode_decision",
    "column_objective",
    "inlp_oracle",
    "solve_prb",
]
