"""28 GHz urban-microcell link budget: path loss, blockage, SINR and rate."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np

from .geometry import BS_HEIGHT_M, USER_HEIGHT_M, BuildingMap, path_profile

SPEED_OF_LIGHT = 299_792_458.0
THERMAL_NOISE_DBM_HZ = -174.0
#: Path loss is evaluated no closer than this (model validity floor).
MIN_DISTANCE_M = 10.0
#: Effective environment height of the street-canyon breakpoint formula.
_ENV_HEIGHT_M = 1.0


@dataclass(frozen=True)
class ChannelConfig:
    carrier_ghz: float = 28.0
    bandwidth_hz: float = 400e6
    tx_power_dbm: float = 30.0
    tx_gain_db: float = 10.0
    rx_gain_db: float = 10.0
    noise_figure_db: float = 7.0
    shadowing_sigma_los_db: float = 4.0
    shadowing_sigma_nlos_db: float = 7.82
    wall_loss_db: float = 20.0
    indoor_loss_db_per_m: float = 0.5
    se_max: float = 7.8

    def __post_init__(self):
        if not self.carrier_ghz > 0:
            raise ValueError("carrier_ghz must be positive")
        if not self.bandwidth_hz > 0:
            raise ValueError("bandwidth_hz must be positive")
        if self.shadowing_sigma_los_db < 0 or self.shadowing_sigma_nlos_db < 0:
            raise ValueError("shadowing sigmas must be >= 0")
        if not self.se_max > 0:
            raise ValueError("se_max must be positive")

    @property
    def noise_dbm(self) -> float:
        return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(self.bandwidth_hz) + self.noise_figure_db

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class LinkState:
    """One (base station, user, band) link.  ``sinr_db``/``rate_bps`` are the
    noise-limited values; the engine recomputes them per interferer set."""

    distance_m: float
    pathloss_db: float
    shadowing_db: float
    los: bool
    penetration_db: float
    rx_dbm: float
    sinr_db: float
    rate_bps: float


def breakpoint_distance(fc_ghz, h_bs=BS_HEIGHT_M, h_ut=USER_HEIGHT_M):
    return 4.0 * (h_bs - _ENV_HEIGHT_M) * (h_ut - _ENV_HEIGHT_M) * fc_ghz * 1e9 / SPEED_OF_LIGHT


def _check_distance(d3d):
    if not d3d > 0:
        raise ValueError(f"distance must be positive, got {d3d!r}")


def pathloss_los(d3d, fc, h_bs=BS_HEIGHT_M, h_ut=USER_HEIGHT_M):
    """Street-canyon LoS path loss in dB (``fc`` in GHz, ``d3d`` in metres)."""
    _check_distance(d3d)
    dh = h_bs - h_ut
    d_bp = breakpoint_distance(fc, h_bs, h_ut)
    d2d = math.sqrt(max(d3d * d3d - dh * dh, 0.0))
    if d2d <= d_bp:
        return 32.4 + 21.0 * math.log10(d3d) + 20.0 * math.log10(fc)
    return (32.4 + 40.0 * math.log10(d3d) + 20.0 * math.log10(fc)
            - 9.5 * math.log10(d_bp * d_bp + dh * dh))


def pathloss_nlos(d3d, fc, h_bs=BS_HEIGHT_M, h_ut=USER_HEIGHT_M):
    """NLoS path loss in dB, never below the LoS value."""
    los = pathloss_los(d3d, fc, h_bs, h_ut)
    return max(los, 32.4 + 31.9 * math.log10(d3d) + 20.0 * math.log10(fc))


def free_space_pathloss(d3d, fc):
    return 20.0 * math.log10(d3d) + 20.0 * math.log10(fc * 1e9) + 20.0 * math.log10(4 * math.pi / SPEED_OF_LIGHT)


def penetration_loss(wall_crossings, indoor_distance, cfg: ChannelConfig):
    return wall_crossings * cfg.wall_loss_db + indoor_distance * cfg.indoor_loss_db_per_m


def draw_shadowing(rng: np.random.Generator, los: bool, cfg: ChannelConfig) -> float:
    sigma = cfg.shadowing_sigma_los_db if los else cfg.shadowing_sigma_nlos_db
    return float(sigma * rng.standard_normal())


def link_rng(seed: int, band: int, bs: int, user: int) -> np.random.Generator:
    """Independent stream for one link, so draws do not depend on how many
    other links exist or in which order they are evaluated."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, band, bs, user)))


def link_budget(bs, user, bmap: BuildingMap, cfg: ChannelConfig, rng) -> LinkState:
    """Received power and noise-limited rate of one link.

    ``bs`` and ``user`` are (x, y, height) positions.  ``rng`` supplies the
    single shadowing draw for this link.
    """
    bs = np.asarray(bs, dtype=float)
    user = np.asarray(user, dtype=float)
    h_bs = bs[2] if bs.shape[0] > 2 else BS_HEIGHT_M
    h_ut = user[2] if user.shape[0] > 2 else USER_HEIGHT_M
    d2d = float(np.hypot(*(bs[:2] - user[:2])))
    d3d = math.hypot(d2d, h_bs - h_ut)
    walls, indoor = path_profile(bs, user, bmap)
    los = walls == 0
    d_eff = max(d3d, MIN_DISTANCE_M)
    pl = pathloss_los(d_eff, cfg.carrier_ghz, h_bs, h_ut) if los else pathloss_nlos(d_eff, cfg.carrier_ghz, h_bs, h_ut)
    pen = penetration_loss(walls, indoor, cfg)
    shadow = draw_shadowing(rng, los, cfg)
    rx = cfg.tx_power_dbm + cfg.tx_gain_db + cfg.rx_gain_db - pl - pen - shadow
    snr = sinr(rx, (), cfg)
    return LinkState(d3d, pl, shadow, los, pen, rx, snr, achievable_rate(snr, cfg))


def dbm_to_mw(dbm):
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0)


def sinr(serving_rx_dbm, interferer_rx_dbm: Sequence[float], cfg: ChannelConfig) -> float:
    """SINR in dB; noise is thermal over the band plus the noise figure."""
    denom = 10.0 ** (cfg.noise_dbm / 10.0) + float(np.sum(dbm_to_mw(list(interferer_rx_dbm))))
    signal = 10.0 ** (serving_rx_dbm / 10.0)
    if signal == 0.0:
        return -math.inf
    return 10.0 * math.log10(signal / denom)


def achievable_rate(sinr_db, cfg: ChannelConfig) -> float:
    """Shannon rate over the band, spectral efficiency capped at ``se_max``."""
    if sinr_db == -math.inf:
        return 0.0
    se = math.log2(1.0 + 10.0 ** (sinr_db / 10.0))
    return cfg.bandwidth_hz * min(se, cfg.se_max)


def rate_table(rx_dbm: np.ndarray, cfg: ChannelConfig) -> np.ndarray:
    """Rates for every serving BS, user and co-band activity pattern.

    ``rx_dbm`` has shape ``(n_bs, n_users)``.  The result has shape
    ``(n_bs, n_users, 2**n_bs)``; entry ``[b, u, m]`` is the rate of BS ``b``
    to user ``u`` when the set bits of ``m`` mark the transmitting BSs (BS
    ``b`` itself excluded from the interference).
    """
    n_bs, n_users = rx_dbm.shape
    out = np.zeros((n_bs, n_users, 1 << n_bs))
    for b in range(n_bs):
        for u in range(n_users):
            for m in range(1 << n_bs):
                interferers = [rx_dbm[k, u] for k in range(n_bs) if k != b and (m >> k) & 1]
                out[b, u, m] = achievable_rate(sinr(rx_dbm[b, u], interferers, cfg), cfg)
    return out
