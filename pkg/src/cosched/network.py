"""Static network description: base stations, users, channel gains and association."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigurationError

MACRO = "macro"
PICO = "pico"


@dataclass(frozen=True)
class BaseStation:
    x: float = 0.0
    y: float = 0.0
    bs_class: str = MACRO


@dataclass(frozen=True)
class UserEquipment:
    x: float = 0.0
    y: float = 0.0
    hotspot: bool = False


@dataclass(frozen=True, eq=False)
class NetworkScenario:
    """Channel power gains and powers of one cooperation cluster.

    ``gain`` is indexed ``[ue, bs, prb]`` and ``tx_power`` ``[bs, prb]``; all
    quantities are linear (mW for powers).  ``oc_interference`` is the
    out-of-cluster interference per ``[ue, prb]``, unaffected by muting.
    """

    gain: np.ndarray
    tx_power: np.ndarray
    noise_power: float
    oc_interference: np.ndarray | None = None
    bs_list: tuple[BaseStation, ...] = ()
    ue_list: tuple[UserEquipment, ...] = ()

    def __post_init__(self):
        gain = np.ascontiguousarray(self.gain, dtype=float)
        if gain.ndim != 3:
            raise ConfigurationError("gain must have shape (N, M, L)")
        n, m, l = gain.shape
        if min(n, m, l) < 1:
            raise ConfigurationError("need at least one UE, one BS and one PRB")
        tx = np.asarray(self.tx_power, dtype=float)
        if tx.ndim == 1:
            tx = np.repeat(tx[:, None], l, axis=1)
        if tx.shape != (m, l):
            raise ConfigurationError(f"tx_power shape {tx.shape} != {(m, l)}")
        oc = self.oc_interference
        oc = np.zeros((n, l)) if oc is None else np.asarray(oc, dtype=float)
        if oc.shape != (n, l):
            raise ConfigurationError(f"oc_interference shape {oc.shape} != {(n, l)}")
        if (gain < 0).any() or (tx < 0).any() or (oc < 0).any():
            raise ConfigurationError("powers and gains must be non-negative")
        if not self.noise_power > 0:
            raise ConfigurationError("noise power must be strictly positive")
        bs_list = tuple(self.bs_list) or tuple(BaseStation() for _ in range(m))
        ue_list = tuple(self.ue_list) or tuple(UserEquipment() for _ in range(n))
        if len(bs_list) != m or len(ue_list) != n:
            raise ConfigurationError("bs_list/ue_list length does not match gain tensor")
        for name, arr in (("gain", gain), ("tx_power", tx), ("oc_interference", oc)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "noise_power", float(self.noise_power))
        object.__setattr__(self, "bs_list", bs_list)
        object.__setattr__(self, "ue_list", ue_list)

    @property
    def num_ue(self) -> int:
        return self.gain.shape[0]

    @property
    def num_bs(self) -> int:
        return self.gain.shape[1]

    @property
    def num_prb(self) -> int:
        return self.gain.shape[2]

    @property
    def bs_class(self) -> tuple[str, ...]:
        return tuple(b.bs_class for b in self.bs_list)

    def rx_power(self) -> np.ndarray:
        """All received powers p[n, m, l] at once."""
        return self.gain * self.tx_power[None, :, :]

    def received_power(self, ue: int, bs: int, prb: int) -> float:
        _check_index(ue, self.num_ue, "ue")
        _check_index(bs, self.num_bs, "bs")
        _check_index(prb, self.num_prb, "prb")
        return float(self.gain[ue, bs, prb] * self.tx_power[bs, prb])

    def total_received_power(self, ue: int, bs: int) -> float:
        _check_index(ue, self.num_ue, "ue")
        _check_index(bs, self.num_bs, "bs")
        return float(np.sum(self.gain[ue, bs, :] * self.tx_power[bs, :]))

    def total_rx_power(self) -> np.ndarray:
        """p[n, m] summed over PRBs, shape (N, M)."""
        return self.rx_power().sum(axis=2)


def _check_index(i, size, what):
    if not 0 <= i < size:
        raise IndexError(f"{what} index {i} out of range [0, {size})")


class ConnectionMatrix:
    """Binary UE-to-BS association, exactly one serving BS per UE."""

    def __init__(self, matrix):
        c = np.asarray(matrix)
        if c.ndim != 2 or not np.isin(c, (0, 1)).all():
            raise ConfigurationError("connection matrix must be a binary N x M array")
        if not (c.sum(axis=1) == 1).all():
            raise ConfigurationError("every UE must have exactly one serving BS")
        self.matrix = c.astype(np.int8)
        self.matrix.setflags(write=False)
        self.serving = np.argmax(self.matrix, axis=1).astype(np.int64)
        self.serving.setflags(write=False)

    @classmethod
    def from_serving(cls, serving: Sequence[int], num_bs: int) -> "ConnectionMatrix":
        serving = np.asarray(serving, dtype=np.int64)
        c = np.zeros((len(serving), num_bs), dtype=np.int8)
        c[np.arange(len(serving)), serving] = 1
        return cls(c)

    @property
    def num_ue(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_bs(self) -> int:
        return self.matrix.shape[1]

    def ues_of(self, bs: int) -> np.ndarray:
        return np.flatnonzero(self.serving == bs)

    def __eq__(self, other):
        return isinstance(other, ConnectionMatrix) and np.array_equal(self.matrix, other.matrix)

    def __repr__(self):
        return f"ConnectionMatrix(serving={self.serving.tolist()})"


@dataclass(frozen=True, eq=False)
class StrongestInterfererSet:
    """Per UE, the ``m_prime`` strongest non-serving BSs, strongest first."""

    members: np.ndarray  # (N, M') int
    num_bs: int
    serving: np.ndarray = field(repr=False)

    @property
    def m_prime(self) -> int:
        return self.members.shape[1]

    def of(self, ue: int) -> tuple[int, ...]:
        return tuple(int(m) for m in self.members[ue])

    def mask(self, ue: int) -> int:
        out = 0
        for m in self.members[ue]:
            out |= 1 << int(m)
        return out

    def all_interferers(self, ue: int) -> tuple[int, ...]:
        k = int(self.serving[ue])
        return tuple(m for m in range(self.num_bs) if m != k)

    def __eq__(self, other):
        return (
            isinstance(other, StrongestInterfererSet)
            and self.num_bs == other.num_bs
            and np.array_equal(self.members, other.members)
        )


def cre_offsets(scenario: NetworkScenario, cre_offset_db) -> np.ndarray:
    """Resolve a per-class (mapping) or per-BS (sequence) offset setting to an array."""
    m = scenario.num_bs
    if cre_offset_db is None:
        return np.zeros(m)
    if isinstance(cre_offset_db, Mapping):
        unknown = set(cre_offset_db) - {MACRO, PICO}
        if unknown:
            raise ConfigurationError(f"unknown BS class in CRE offsets: {sorted(unknown)}")
        if cre_offset_db.get(MACRO, 0.0) != 0.0:
            raise ConfigurationError("macro CRE offset must be 0 dB")
        off = np.array([float(cre_offset_db.get(c, 0.0)) for c in scenario.bs_class])
    else:
        off = np.asarray(cre_offset_db, dtype=float)
        if off.shape != (m,):
            raise ConfigurationError("per-BS CRE offsets must have length M")
    if (off < 0).any():
        raise ConfigurationError("CRE offsets must be >= 0 dB")
    return off


def associate_ues(scenario: NetworkScenario, cre_offset_db=None) -> ConnectionMatrix:
    """Max biased received power association; ties go to the lowest BS index."""
    off = cre_offsets(scenario, cre_offset_db)
    with np.errstate(divide="ignore"):
        biased = 10.0 * np.log10(scenario.total_rx_power()) + off[None, :]
    return ConnectionMatrix.from_serving(np.argmax(biased, axis=1), scenario.num_bs)


def strongest_interferers(
    scenario: NetworkScenario, conn: ConnectionMatrix, m_prime: int
) -> StrongestInterfererSet:
    m = scenario.num_bs
    if not 0 <= m_prime <= m - 1:
        raise ConfigurationError(f"m_prime must lie in [0, {m - 1}], got {m_prime}")
    p = scenario.total_rx_power().copy()
    n = scenario.num_ue
    p[np.arange(n), conn.serving] = -np.inf
    # stable sort on -p keeps the lowest index first among equal powers
    order = np.argsort(-p, axis=1, kind="stable")[:, :m_prime]
    members = np.ascontiguousarray(order, dtype=np.int64)
    members.setflags(write=False)
    return StrongestInterfererSet(members=members, num_bs=m, serving=conn.serving)


def save_gain_tensor(path, gain: np.ndarray) -> None:
    """Write ``N M L`` on the first line, then the row-major linear values."""
    gain = np.asarray(gain, dtype=float)
    with open(path, "w") as fh:
        fh.write("%d %d %d\n" % gain.shape)
        np.savetxt(fh, gain.reshape(-1, gain.shape[2]), fmt="%.17g")


def load_gain_tensor(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise ConfigurationError("gain file header must be 'N M L'")
        shape = tuple(int(v) for v in header)
        values = np.array(fh.read().split(), dtype=float)
    if values.size != np.prod(shape):
        raise ConfigurationError(
            f"gain file holds {values.size} values, header promises {np.prod(shape)}"
        )
    return values.reshape(shape)
