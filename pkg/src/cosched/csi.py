"""Multi-scenario CSI reports: muting indicator sets, per-scenario SINR and rates."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .network import ConnectionMatrix, NetworkScenario, StrongestInterfererSet


def mask_of(members) -> int:
    out = 0
    for m in members:
        out |= 1 << int(m)
    return out


def members_of(mask: int) -> tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


def column_mask(muting_column) -> int:
    """Accept an int bitmask or a binary per-BS vector."""
    if isinstance(muting_column, (int, np.integer)):
        return int(muting_column)
    return mask_of(i for i, v in enumerate(muting_column) if v)


@dataclass(frozen=True)
class MutingIndicatorSet:
    ue: int
    scenario_id: int  # 0-based canonical index
    members: tuple[int, ...]

    @property
    def mask(self) -> int:
        return mask_of(self.members)

    def pattern(self, num_bs: int) -> np.ndarray:
        return muting_pattern(self, num_bs)


def muting_pattern(indicator: MutingIndicatorSet, num_bs: int) -> np.ndarray:
    alpha = np.zeros(num_bs, dtype=np.int8)
    alpha[list(indicator.members)] = 1
    return alpha


def canonical_subsets(members: Sequence[int]) -> list[tuple[int, ...]]:
    """Empty set, full set, then ascending cardinality and lexicographic order."""
    base = tuple(sorted(int(m) for m in members))
    out = [()]
    if base:
        out.append(base)
    for size in range(1, len(base)):
        out.extend(itertools.combinations(base, size))
    return out


def enumerate_scenarios(interferers: StrongestInterfererSet, ue: int) -> list[MutingIndicatorSet]:
    return [
        MutingIndicatorSet(ue=ue, scenario_id=j, members=s)
        for j, s in enumerate(canonical_subsets(interferers.of(ue)))
    ]


def scenario_masks(interferers: StrongestInterfererSet) -> np.ndarray:
    """Bitmask of each indicator set, shape (N, 2**M')."""
    n = interferers.members.shape[0]
    out = np.zeros((n, 1 << interferers.m_prime), dtype=np.int64)
    for ue in range(n):
        for j, s in enumerate(canonical_subsets(interferers.of(ue))):
            out[ue, j] = mask_of(s)
    return out


@dataclass(frozen=True)
class RateMapper:
    """Capped Shannon mapping ``scale * min(log2(1 + sinr), cap)``."""

    scale: float = 1.0
    cap: float | None = None
    mode: str = "shannon_capped"

    def __call__(self, sinr):
        return map_rate(self, sinr)


def map_rate(mapper: RateMapper, sinr):
    s = np.asarray(sinr, dtype=float)
    if (s < 0).any() or np.isnan(s).any():
        raise ValueError("SINR must be non-negative")
    r = np.log2(1.0 + s)
    if mapper.cap is not None:
        r = np.minimum(r, mapper.cap)
    r = mapper.scale * r
    return float(r) if r.ndim == 0 else r


def sinr_under_scenario(
    scenario: NetworkScenario,
    conn: ConnectionMatrix,
    interferers: StrongestInterfererSet,
    ue: int,
    prb: int,
    indicator: MutingIndicatorSet,
) -> float:
    k = int(conn.serving[ue])
    strong = interferers.of(ue)
    muted = set(indicator.members)
    i_si = 0.0
    for m in strong:
        if m not in muted:
            i_si += scenario.received_power(ue, m, prb)
    i_wi = 0.0
    for m in range(scenario.num_bs):
        if m != k and m not in strong:
            i_wi += scenario.received_power(ue, m, prb)
    denom = i_si + i_wi + float(scenario.oc_interference[ue, prb]) + scenario.noise_power
    return scenario.received_power(ue, k, prb) / denom


def scenario_sinr(
    scenario: NetworkScenario, conn: ConnectionMatrix, interferers: StrongestInterfererSet
) -> np.ndarray:
    """SINR for every (UE, PRB, scenario), shape (N, L, 2**M')."""
    p = scenario.rx_power()
    n, m, l = p.shape
    idx = np.arange(n)
    serv = p[idx, conn.serving, :]
    strong = np.zeros((n, m), dtype=bool)
    strong[idx[:, None], interferers.members] = True
    weak = ~strong
    weak[idx, conn.serving] = False
    i_wi = np.einsum("nml,nm->nl", p, weak.astype(float))
    masks = scenario_masks(interferers)
    bits = (masks[:, :, None] >> np.arange(m)[None, None, :]) & 1  # (N, J', M)
    active = strong[:, None, :] & (bits == 0)
    i_si = np.einsum("nml,njm->nlj", p, active.astype(float))
    denom = i_si + i_wi[:, :, None] + scenario.oc_interference[:, :, None] + scenario.noise_power
    return serv[:, :, None] / denom


@dataclass(frozen=True)
class CsiReport:
    ue: int
    prb: int
    scenario_id: int
    indicator: MutingIndicatorSet
    pattern: np.ndarray
    rate: float


class CsiReports:
    """All reports of one reporting period, stored as dense arrays.

    ``rates[n, l, j]`` is the rate of UE ``n`` on PRB ``l`` under scenario
    ``j`` and ``masks[n, j]`` the BS bitmask of that scenario's indicator set.
    Iterating yields individual :class:`CsiReport` records.
    """

    def __init__(self, rates, interferers: StrongestInterfererSet, serving):
        self.rates = np.ascontiguousarray(rates, dtype=float)
        self.rates.setflags(write=False)
        self.interferers = interferers
        self.serving = np.asarray(serving, dtype=np.int64)
        self.masks = scenario_masks(interferers)
        self.masks.setflags(write=False)
        n, _, jp = self.rates.shape
        if self.masks.shape != (n, jp):
            raise ValueError("rates do not match the scenario enumeration")
        self.lut = self._build_lut()
        self.interferer_masks = np.array(
            [interferers.mask(ue) for ue in range(n)], dtype=np.int64
        )
        self.interferer_masks.setflags(write=False)

    def _build_lut(self) -> np.ndarray:
        # lut[n, k]: scenario whose muted members are the bits of k over members[n]
        members = self.interferers.members
        n, mp = members.shape
        lut = np.empty((n, 1 << mp), dtype=np.int64)
        for ue in range(n):
            pos = {mask: j for j, mask in enumerate(self.masks[ue])}
            for k in range(1 << mp):
                mask = 0
                for b in range(mp):
                    if k >> b & 1:
                        mask |= 1 << int(members[ue, b])
                lut[ue, k] = pos[mask]
        lut.setflags(write=False)
        return lut

    @property
    def num_ue(self) -> int:
        return self.rates.shape[0]

    @property
    def num_prb(self) -> int:
        return self.rates.shape[1]

    @property
    def num_scenarios(self) -> int:
        return self.rates.shape[2]

    @property
    def num_bs(self) -> int:
        return self.interferers.num_bs

    def __len__(self):
        return self.rates.size

    def __iter__(self) -> Iterator[CsiReport]:
        for ue in range(self.num_ue):
            inds = enumerate_scenarios(self.interferers, ue)
            for prb in range(self.num_prb):
                for ind in inds:
                    yield self.report(ue, prb, ind.scenario_id, ind)

    def report(self, ue: int, prb: int, scenario_id: int, indicator=None) -> CsiReport:
        if indicator is None:
            indicator = enumerate_scenarios(self.interferers, ue)[scenario_id]
        return CsiReport(
            ue=ue,
            prb=prb,
            scenario_id=scenario_id,
            indicator=indicator,
            pattern=muting_pattern(indicator, self.num_bs),
            rate=float(self.rates[ue, prb, scenario_id]),
        )

    def scenario_under_column(self, alpha_mask: int) -> np.ndarray:
        """Scenario index selected by the muting column for every UE, shape (N,)."""
        members = self.interferers.members
        k = np.zeros(self.num_ue, dtype=np.int64)
        for b in range(members.shape[1]):
            k |= ((alpha_mask >> members[:, b]) & 1) << b
        return self.lut[np.arange(self.num_ue), k]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["ue", "prb", "scenario", "indicator_bitmask", "rate"])
            for ue in range(self.num_ue):
                for prb in range(self.num_prb):
                    for j in range(self.num_scenarios):
                        w.writerow(
                            [ue, prb, j, int(self.masks[ue, j]), repr(float(self.rates[ue, prb, j]))]
                        )


def generate_reports(
    scenario: NetworkScenario,
    conn: ConnectionMatrix,
    interferers: StrongestInterfererSet,
    mapper: RateMapper,
) -> CsiReports:
    rates = map_rate(mapper, scenario_sinr(scenario, conn, interferers))
    return CsiReports(np.asarray(rates, dtype=float), interferers, conn.serving)


def lookup_rate_rho(reports: CsiReports, ue: int, prb: int, muting_column) -> float:
    """Rate of the reported scenario that matches the column on the UE's strongest interferers."""
    alpha = column_mask(muting_column)
    wanted = alpha & reports.interferers.mask(ue)
    for j, mask in enumerate(reports.masks[ue]):
        if int(mask) == wanted:
            return float(reports.rates[ue, prb, j])
    raise AssertionError("indicator sets do not cover the power set")  # pragma: no cover

