"""Synthetic drop generation: hexagonal sites, log-distance path loss, shadowing, Rayleigh fading.

Stands in for a full system-level channel model.  Parameters default to
urban macro values with 500 m inter-site distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .network import MACRO, PICO, BaseStation, NetworkScenario, UserEquipment

THERMAL_DBM_PER_HZ = -174.0


@dataclass(frozen=True)
class ChannelParams:
    isd_m: float = 500.0
    min_distance_m: float = 35.0
    macro_pl0_db: float = 128.1  # at 1 km
    macro_exponent: float = 3.76
    pico_pl0_db: float = 140.7
    pico_exponent: float = 3.67
    penetration_loss_db: float = 20.0
    macro_shadowing_db: float = 8.0
    pico_shadowing_db: float = 10.0
    rayleigh: bool = True
    macro_prb_power_dbm: float = 29.0  # 46 dBm over 50 PRBs
    pico_prb_power_dbm: float = 13.0  # 30 dBm over 50 PRBs
    prb_bandwidth_hz: float = 180e3
    pico_distance_m: float = 125.0
    hotspot_radius_m: float = 40.0
    hotspot_fraction: float = 2.0 / 3.0


def db_to_lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def noise_power_mw(noise_figure_db: float, bandwidth_hz: float = 180e3) -> float:
    return float(db_to_lin(THERMAL_DBM_PER_HZ + 10.0 * math.log10(bandwidth_hz) + noise_figure_db))


def hex_sites(count: int, isd: float) -> np.ndarray:
    """Centre first, then rings outwards; each ring in counter-clockwise order from east."""
    pts = [(0.0, 0.0)]
    ring = 1
    while len(pts) < count:
        # axial walk around ring ``ring``
        dirs = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)]
        q, r = ring, 0
        ring_pts = []
        for d in range(6):
            dq, dr = dirs[(d + 2) % 6]
            for _ in range(ring):
                ring_pts.append((q, r))
                q, r = q + dq, r + dr
        for q, r in ring_pts:
            x = isd * (q + r / 2.0)
            y = isd * (math.sqrt(3) / 2.0) * r
            pts.append((x, y))
        ring += 1
    return np.array(pts[:count])


def path_loss_db(d_m, pl0_db, exponent):
    d_km = np.maximum(np.asarray(d_m, dtype=float), 1.0) / 1000.0
    return pl0_db + 10.0 * exponent * np.log10(d_km)


def _point_in_hexagon(rng, centre, radius, min_dist):
    # pointy-top hexagon with circumradius ``radius``; rejection sampling
    while True:
        x, y = rng.uniform(-radius, radius), rng.uniform(-radius, radius)
        ax, ay = abs(x), abs(y)
        if ay > radius * math.sqrt(3) / 2.0:
            continue
        if math.sqrt(3) * ax + ay > math.sqrt(3) * radius:
            continue
        if math.hypot(x, y) < min_dist:
            continue
        return centre[0] + x, centre[1] + y


def _point_in_disc(rng, centre, radius, min_dist):
    while True:
        r = radius * math.sqrt(rng.uniform())
        if r < min_dist:
            continue
        t = rng.uniform(0.0, 2.0 * math.pi)
        return centre[0] + r * math.cos(t), centre[1] + r * math.sin(t)


def place_network(rng, num_macro, num_pico, num_ue, params: ChannelParams, hetnet: bool):
    """Return (bs_list, ue_list); UEs spread evenly over macro cells or 2/3 in pico hotspots."""
    if num_macro < 1:
        raise ConfigurationError("need at least one macro site")
    if hetnet and num_pico < 1:
        raise ConfigurationError("heterogeneous layout needs at least one pico")
    sites = hex_sites(num_macro, params.isd_m)
    bs = [BaseStation(float(x), float(y), MACRO) for x, y in sites]
    for p in range(num_pico):
        cx, cy = sites[p % num_macro]
        t = rng.uniform(0.0, 2.0 * math.pi)
        d = params.pico_distance_m
        bs.append(BaseStation(cx + d * math.cos(t), cy + d * math.sin(t), PICO))
    cell_radius = params.isd_m / math.sqrt(3)
    ues = []
    n_hot = int(round(params.hotspot_fraction * num_ue)) if hetnet else 0
    for i in range(n_hot):
        pico = bs[num_macro + i % num_pico]
        x, y = _point_in_disc(rng, (pico.x, pico.y), params.hotspot_radius_m, 1.0)
        ues.append(UserEquipment(x, y, hotspot=True))
    for i in range(num_ue - n_hot):
        x, y = _point_in_hexagon(rng, sites[i % num_macro], cell_radius, params.min_distance_m)
        ues.append(UserEquipment(x, y))
    return bs, ues


def large_scale_gains(rng, bs_list, ue_list, params: ChannelParams) -> np.ndarray:
    """Path loss, penetration loss and log-normal shadowing as linear gains (N, M)."""
    bxy = np.array([(b.x, b.y) for b in bs_list])
    uxy = np.array([(u.x, u.y) for u in ue_list])
    d = np.linalg.norm(uxy[:, None, :] - bxy[None, :, :], axis=2)
    is_pico = np.array([b.bs_class == PICO for b in bs_list])
    pl = np.where(
        is_pico[None, :],
        path_loss_db(d, params.pico_pl0_db, params.pico_exponent),
        path_loss_db(d, params.macro_pl0_db, params.macro_exponent),
    )
    sigma = np.where(is_pico, params.pico_shadowing_db, params.macro_shadowing_db)
    shadow = rng.standard_normal(d.shape) * sigma[None, :]
    return db_to_lin(-(pl + params.penetration_loss_db + shadow))


def prb_powers(bs_list, num_prb, params: ChannelParams) -> np.ndarray:
    dbm = [params.pico_prb_power_dbm if b.bs_class == PICO else params.macro_prb_power_dbm for b in bs_list]
    return np.repeat(db_to_lin(dbm)[:, None], num_prb, axis=1)


@dataclass(frozen=True, eq=False)
class DropChannel:
    """Geometry and large-scale gains of one drop; fast fading is drawn on demand."""

    bs_list: tuple
    ue_list: tuple
    large: np.ndarray  # (N, M)
    tx_power: np.ndarray  # (M, L)
    noise_power: float
    rayleigh: bool
    ext_large: np.ndarray | None = None  # (N, M_ext)
    ext_tx_power: np.ndarray | None = None  # (M_ext, L)

    @property
    def num_prb(self) -> int:
        return self.tx_power.shape[1]

    def _faded(self, rng, large):
        if not self.rayleigh:
            return np.repeat(large[:, :, None], self.num_prb, axis=2)
        return large[:, :, None] * rng.exponential(1.0, size=large.shape + (self.num_prb,))

    def realize(self, rng) -> NetworkScenario:
        """Scenario with a fresh Rayleigh draw per (UE, BS, PRB)."""
        gain = self._faded(rng, self.large)
        oc = None
        if self.ext_large is not None:
            oc = np.einsum("nml,ml->nl", self._faded(rng, self.ext_large), self.ext_tx_power)
        return NetworkScenario(
            gain=gain,
            tx_power=self.tx_power,
            noise_power=self.noise_power,
            oc_interference=oc,
            bs_list=self.bs_list,
            ue_list=self.ue_list,
        )


def synthetic_channel(
    rng,
    num_macro: int,
    num_pico: int,
    num_ue: int,
    num_prb: int,
    noise_power: float,
    params: ChannelParams = ChannelParams(),
    hetnet: bool = False,
    external_sites: int = 0,
) -> DropChannel:
    """One random drop.  ``external_sites`` extra macro sites feed the out-of-cluster term."""
    bs, ues = place_network(rng, num_macro, num_pico, num_ue, params, hetnet)
    large = large_scale_gains(rng, bs, ues, params)
    ext_large = ext_tx = None
    if external_sites > 0:
        ext_xy = hex_sites(num_macro + external_sites, params.isd_m)[num_macro:]
        ext = [BaseStation(float(x), float(y), MACRO) for x, y in ext_xy]
        ext_large = large_scale_gains(rng, ext, ues, params)
        ext_tx = prb_powers(ext, num_prb, params)
    return DropChannel(
        bs_list=tuple(bs),
        ue_list=tuple(ues),
        large=large,
        tx_power=prb_powers(bs, num_prb, params),
        noise_power=noise_power,
        rayleigh=params.rayleigh,
        ext_large=ext_large,
        ext_tx_power=ext_tx,
    )


def synthetic_scenario(rng, *args, **kwargs) -> NetworkScenario:
    """Convenience: a drop with its first fading realization."""
    return synthetic_channel(rng, *args, **kwargs).realize(rng)
