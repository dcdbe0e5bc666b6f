"""Per-TTI downlink scheduling at one base station on one band.

Within a band every base station serves a single user per TTI (TDMA).  Each
user's queue on a band is a FIFO of frame copies; frames drain plane by
plane, and the number of completed planes of a frame is always a prefix.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

#: Lower bound of the PF moving-average throughput, bits/s.
PF_FLOOR = 1.0

PRIMARY_BAND = 0
SECONDARY_BAND = 1


class Discipline(enum.Enum):
    RoundRobin = "RR"
    ProportionalFair = "PF"


class Connectivity(enum.Enum):
    Single = "Single"
    Dual = "Dual"


@dataclass(frozen=True)
class SchedulerConfig:
    discipline: Discipline = Discipline.RoundRobin
    tti_s: float = 125e-6
    pf_time_constant_ttis: float = 100
    connectivity: Connectivity = Connectivity.Single

    def __post_init__(self):
        if isinstance(self.discipline, str):
            object.__setattr__(self, "discipline", parse_discipline(self.discipline))
        if isinstance(self.connectivity, str):
            object.__setattr__(self, "connectivity", Connectivity(self.connectivity))
        if not self.tti_s > 0:
            raise ValueError("tti_s must be positive")
        if not self.pf_time_constant_ttis >= 1:
            raise ValueError("pf_time_constant_ttis must be >= 1")


def parse_discipline(name: str) -> Discipline:
    for d in Discipline:
        if name.strip().lower() in (d.value.lower(), d.name.lower()):
            return d
    raise ValueError(f"unknown scheduler {name!r}")


@dataclass(frozen=True)
class BandPlan:
    """Band used by each base station for first copies and for duplicates.
    Bands are disjoint spectrum; interference only arises within a band."""

    primary: int = PRIMARY_BAND
    secondary: int = SECONDARY_BAND

    def __post_init__(self):
        if self.primary == self.secondary:
            raise ValueError("primary and secondary bands must differ")

    def bands(self, connectivity: Connectivity) -> tuple[int, ...]:
        if connectivity is Connectivity.Dual:
            return (self.primary, self.secondary)
        return (self.primary,)


class Copy(NamedTuple):
    bitplane: object
    bs: int
    band: int


def duplicate_for_dc(bitplane, primary_bs: int, secondary_bs: Optional[int],
                     connectivity: Connectivity = Connectivity.Dual,
                     plan: BandPlan = BandPlan()) -> list[Copy]:
    """Transmission copies of one bitplane.  Single connectivity keeps one
    copy at the primary BS."""
    copies = [Copy(bitplane, primary_bs, plan.primary)]
    if connectivity is Connectivity.Dual:
        if secondary_bs is None:
            raise ValueError("dual connectivity needs a secondary base station")
        copies.append(Copy(bitplane, secondary_bs, plan.secondary))
    return copies


def rr_pick(backlogged: Sequence[int], cursor: int):
    """Next backlogged user strictly after ``cursor`` in cyclic order.

    ``backlogged`` must be sorted.  Returns ``(user, new_cursor)``, or
    ``(None, cursor)`` when nobody is waiting.
    """
    if not backlogged:
        return None, cursor
    for u in backlogged:
        if u > cursor:
            return u, u
    return backlogged[0], backlogged[0]


def pf_pick(inst_rate: Sequence[float], avg_throughput: Sequence[float],
            backlogged: Optional[Sequence[int]] = None) -> int:
    """Index maximising ``inst_rate / avg_throughput``; ties go to the lower index."""
    candidates = range(len(inst_rate)) if backlogged is None else backlogged
    best, best_metric = None, -1.0
    for u in candidates:
        metric = inst_rate[u] / max(avg_throughput[u], PF_FLOOR)
        if metric > best_metric:
            best, best_metric = u, metric
    if best is None:
        raise ValueError("pf_pick needs at least one backlogged user")
    return best


def pf_update(avg: float, served_rate: float, tc: float) -> float:
    return (1.0 - 1.0 / tc) * avg + (1.0 / tc) * served_rate


def bits_per_tti(rate_bps: float, tti_s: float) -> int:
    """Whole bits a link carries in one TTI (a 1e-6 bit tolerance absorbs
    float error in exact products)."""
    return int(rate_bps * tti_s + 1e-6)


class UserFlow(NamedTuple):
    """Plane layout of one user's frames."""

    frame_bits: int
    bitplane_bits: int
    n_planes: int


class BandScheduler:
    """Queues and scheduler state of one base station on one band.

    ``rates[u]`` lists the rate of user ``u`` for every interferer mask.
    ``serve_tti`` returns ``(user, rate, bits, completions)`` where
    ``completions`` holds ``(frame, planes_done)`` pairs, or ``None`` when
    no user is backlogged.
    """

    def __init__(self, bs: int, band: int, users: Sequence[int], flows: Sequence[UserFlow],
                 rates: dict, cfg: SchedulerConfig, init_mask: int):
        self.bs = bs
        self.band = band
        self.users = sorted(users)
        self.flows = flows
        self.cfg = cfg
        self.tti = cfg.tti_s
        self.rates = {u: list(rates[u]) for u in self.users}
        self.caps = {u: [bits_per_tti(r, self.tti) for r in rates[u]] for u in self.users}
        self.queue = {u: deque() for u in self.users}
        self.served = {u: {} for u in self.users}
        self.n_backlogged = 0
        self.rr_cursor = -1
        self.pf = cfg.discipline is Discipline.ProportionalFair
        tc = float(cfg.pf_time_constant_ttis)
        self._c_old, self._c_new = 1.0 - 1.0 / tc, 1.0 / tc
        self.avg = {u: max(self.rates[u][init_mask], PF_FLOOR) for u in self.users}
        # bit ledger
        self.released_bits = 0
        self.served_bits = 0
        self.dropped_bits = 0
        self.cancelled_bits = 0

    # -- queue maintenance -------------------------------------------------

    def enqueue(self, u: int, frame: int):
        q = self.queue[u]
        if not q:
            self.n_backlogged += 1
        q.append(frame)
        self.served[u][frame] = 0
        self.released_bits += self.flows[u].frame_bits

    def drop_expired(self, u: int, frame: int) -> int:
        """Remove every queued copy up to and including ``frame``."""
        q = self.queue[u]
        if not q:
            return 0
        dropped = 0
        fbits = self.flows[u].frame_bits
        served = self.served[u]
        while q and q[0] <= frame:
            f = q.popleft()
            dropped += fbits - served.pop(f)
        self.dropped_bits += dropped
        if not q:
            self.n_backlogged -= 1
        return dropped

    def cancel_delivered(self, u: int, delivered_planes) -> int:
        """Skip planes already delivered over another band.

        ``delivered_planes[f]`` is the delivered prefix of frame ``f``.
        """
        q = self.queue[u]
        if not q:
            return 0
        flow = self.flows[u]
        served = self.served[u]
        cancelled = 0
        while q:
            f = q[0]
            p = delivered_planes[f]
            boundary = flow.frame_bits if p >= flow.n_planes else p * flow.bitplane_bits
            s = served[f]
            if boundary <= s:
                break
            cancelled += boundary - s
            if boundary == flow.frame_bits:
                q.popleft()
                del served[f]
            else:
                served[f] = boundary
                break
        self.cancelled_bits += cancelled
        if not q:
            self.n_backlogged -= 1
        return cancelled

    def pending_bits(self) -> int:
        total = 0
        for u in self.users:
            fbits = self.flows[u].frame_bits
            total += sum(fbits - s for s in self.served[u].values())
        return total

    # -- scheduling --------------------------------------------------------

    def _pick(self, mask: int) -> int:
        queue = self.queue
        if self.pf:
            best, best_metric = -1, -1.0
            rates, avg = self.rates, self.avg
            for u in self.users:
                if queue[u]:
                    metric = rates[u][mask] / avg[u]
                    if metric > best_metric:
                        best, best_metric = u, metric
            return best
        users = self.users
        n = len(users)
        cursor = self.rr_cursor
        # first position strictly after the cursor
        start = 0
        while start < n and users[start] <= cursor:
            start += 1
        for k in range(n):
            u = users[(start + k) % n]
            if queue[u]:
                self.rr_cursor = u
                return u
        return -1

    def serve_tti(self, mask: int):
        if not self.n_backlogged:
            if self.pf:
                self._pf_decay(None, 0)
            return None
        u = self._pick(mask)
        cap = self.caps[u][mask]
        budget = cap
        q = self.queue[u]
        served = self.served[u]
        fbits, plane_bits, n_planes = self.flows[u]
        completions = []
        while budget > 0 and q:
            f = q[0]
            s0 = served[f]
            rem = fbits - s0
            if budget < rem:
                s = s0 + budget
                budget = 0
                served[f] = s
                p = s // plane_bits
                if p > s0 // plane_bits:
                    completions.append((f, p))
            else:
                budget -= rem
                q.popleft()
                del served[f]
                completions.append((f, n_planes))
        bits = cap - budget
        self.served_bits += bits
        if not q:
            self.n_backlogged -= 1
        rate = self.rates[u][mask]
        if self.pf:
            self._pf_decay(u, rate)
        return u, rate, bits, completions

    def _pf_decay(self, scheduled, served_rate):
        c_old, c_new = self._c_old, self._c_new
        avg = self.avg
        for u in self.users:
            a = c_old * avg[u] + c_new * (served_rate if u == scheduled else 0.0)
            avg[u] = a if a > PF_FLOOR else PF_FLOOR
