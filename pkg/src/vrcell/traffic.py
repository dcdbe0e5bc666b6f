"""Downlink video flows cut into fixed-size bitplanes."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

#: Bit rate the default flow is sized for (Advanced-phase scale), bits/s.
DEFAULT_BIT_RATE = 768e6
DEFAULT_BITPLANE_BITS = 1578
DEFAULT_DEADLINE_MS = 7.0


class TrafficKind(enum.Enum):
    VR = "VR"
    TraditionalVideo = "TraditionalVideo"


@dataclass(frozen=True)
class FlowConfig:
    """``drop_on_expiry=None`` picks the per-kind default (see
    :attr:`drops`)."""

    kind: TrafficKind = TrafficKind.VR
    bit_rate_bps: float = DEFAULT_BIT_RATE
    refresh_hz: float = 120.0
    bitplane_bits: int = DEFAULT_BITPLANE_BITS
    deadline_ms: float = DEFAULT_DEADLINE_MS
    prefetch_ms: Optional[float] = None
    drop_on_expiry: Optional[bool] = None

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", TrafficKind(self.kind))
        if not (self.bit_rate_bps > 0 and self.refresh_hz > 0 and self.bitplane_bits > 0):
            raise ValueError("bit_rate_bps, refresh_hz and bitplane_bits must be positive")
        if not self.deadline_ms > 0:
            raise ValueError("deadline_ms must be positive")
        if self.prefetch_ms is not None and self.prefetch_ms < 0:
            raise ValueError("prefetch_ms must be >= 0")
        if self.kind is TrafficKind.VR and self.prefetch_ms:
            raise ValueError("VR flows cannot prefetch")

    @property
    def prefetch_s(self) -> float:
        if self.kind is TrafficKind.VR:
            return 0.0
        return (100.0 if self.prefetch_ms is None else self.prefetch_ms) / 1e3

    @property
    def drops(self) -> bool:
        if self.drop_on_expiry is not None:
            return self.drop_on_expiry
        return True

    @property
    def frame_bits(self) -> int:
        return int(round(self.bit_rate_bps / self.refresh_hz))

    @classmethod
    def traditional(cls, **kw) -> "FlowConfig":
        return cls(kind=TrafficKind.TraditionalVideo, **kw)

    def with_kind(self, kind: TrafficKind) -> "FlowConfig":
        return replace(self, kind=kind, prefetch_ms=None if kind is TrafficKind.VR else self.prefetch_ms)


class Bitplane(NamedTuple):
    flow_id: int
    frame_index: int
    plane_index: int
    size_bits: int
    gen_time: float
    avail_time: float
    deadline: float


def frame_bitplane_count(cfg: FlowConfig) -> int:
    return math.ceil(cfg.frame_bits / cfg.bitplane_bits)


def frame_count(cfg: FlowConfig, duration: float) -> int:
    """Frames generated over ``duration`` (at least one)."""
    if not duration > 0:
        raise ValueError("duration must be positive")
    # tolerance keeps 1.0 s x 120 Hz from flooring to 119
    return max(1, math.floor(duration * cfg.refresh_hz + 1e-9))


@dataclass(frozen=True)
class FrameSchedule:
    """Per-frame arrays of one flow; every frame has the same plane layout."""

    gen_time: np.ndarray
    avail_time: np.ndarray
    deadline: np.ndarray
    frame_bits: int
    bitplane_bits: int
    n_planes: int
    drops: bool

    def __len__(self):
        return len(self.gen_time)

    @property
    def last_plane_bits(self) -> int:
        return self.frame_bits - (self.n_planes - 1) * self.bitplane_bits


def frame_schedule(cfg: FlowConfig, duration: float) -> FrameSchedule:
    k = np.arange(frame_count(cfg, duration))
    gen = k / cfg.refresh_hz
    avail = np.maximum(0.0, gen - cfg.prefetch_s)
    deadline = gen + cfg.deadline_ms / 1e3
    return FrameSchedule(gen, avail, deadline, cfg.frame_bits, cfg.bitplane_bits,
                         frame_bitplane_count(cfg), cfg.drops)


def generate(cfg: FlowConfig, duration: float, flow_id: int = 0) -> list[Bitplane]:
    """Every bitplane of the flow, ordered by (gen_time, plane_index)."""
    sched = frame_schedule(cfg, duration)
    out = []
    sizes = [cfg.bitplane_bits] * (sched.n_planes - 1) + [sched.last_plane_bits]
    for f in range(len(sched)):
        g, a, d = float(sched.gen_time[f]), float(sched.avail_time[f]), float(sched.deadline[f])
        out.extend(Bitplane(flow_id, f, j, size, g, a, d) for j, size in enumerate(sizes))
    return out
