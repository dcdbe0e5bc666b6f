"""TTI-clocked simulation loop and delivery metrics.

Time is kept as an integer TTI index.  A TTI ``i`` covers ``[i*tti,
(i+1)*tti)``; a frame copy may be served in TTI ``i`` once its availability
time is ``<= i*tti``, it is dropped (if its flow drops late data) at the
start of the first TTI that begins after its deadline, and a bitplane that
completes in TTI ``i`` is stamped at ``(i+1)*tti``.
"""

from __future__ import annotations

import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .channel import ChannelConfig, link_budget, link_rng, rate_table
from .geometry import BuildingMap, Scenario, campus_scenario, rank_bs
from .scheduler import (BandPlan, BandScheduler, Connectivity, SchedulerConfig,
                        UserFlow, bits_per_tti)
from .traffic import FlowConfig, FrameSchedule, frame_schedule

#: Duration of the reported transmission experiment (5 minutes).
FULL_DURATION_S = 300.0

_EPS = 1e-9


class ConfigError(ValueError):
    """Inconsistent or invalid simulation configuration.  ``key`` names the
    offending setting when there is one."""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class SimConfig:
    duration_s: float = 10.0
    warmup_s: float = 1.0
    seed: int = 0
    n_users: int = 5
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    flow: Union[FlowConfig, tuple] = field(default_factory=FlowConfig)
    scenario: Optional[Scenario] = None
    bmap: Optional[BuildingMap] = None
    bs_positions: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.duration_s > 0:
            raise ConfigError("duration_s must be positive", "duration_s")
        if not 0 <= self.warmup_s < self.duration_s:
            raise ConfigError("warmup_s must satisfy 0 <= warmup_s < duration_s", "warmup_s")
        if self.n_users < 0:
            raise ConfigError("n_users must be >= 0", "n_users")
        if self.scenario is not None and self.scenario.n_users != self.n_users:
            raise ConfigError(
                f"scenario has {self.scenario.n_users} users but n_users={self.n_users}", "n_users")
        if not isinstance(self.flow, FlowConfig) and len(self.flow) != self.n_users:
            raise ConfigError(f"{len(self.flow)} flows given for {self.n_users} users", "flow")

    def flows(self) -> list[FlowConfig]:
        if isinstance(self.flow, FlowConfig):
            return [self.flow] * self.n_users
        return list(self.flow)


@dataclass
class UserMetrics:
    generated: int = 0
    delivered_in_deadline: int = 0
    delivered_late: int = 0
    expired: int = 0
    in_flight: int = 0

    @property
    def success_pct(self) -> Optional[float]:
        return success_percentage(self)


@dataclass
class RunMetrics:
    """Bitplane counts after warmup.  ``latency_s``/``latency_count`` hold
    delivery latencies with their multiplicities."""

    generated: int
    delivered_in_deadline: int
    delivered_late: int
    expired: int
    in_flight: int
    per_user: list
    latency_s: np.ndarray
    latency_count: np.ndarray
    generated_bits: int = 0

    @property
    def success_pct(self) -> Optional[float]:
        return success_percentage(self)

    def mean_latency(self) -> Optional[float]:
        total = int(self.latency_count.sum())
        if total == 0:
            return None
        return float(np.dot(self.latency_s, self.latency_count) / total)

    def latency_quantile(self, q: float) -> Optional[float]:
        total = int(self.latency_count.sum())
        if total == 0:
            return None
        order = np.argsort(self.latency_s, kind="stable")
        cum = np.cumsum(self.latency_count[order])
        k = int(np.searchsorted(cum, q * total, side="left"))
        return float(self.latency_s[order][min(k, len(order) - 1)])


def success_percentage(metrics) -> Optional[float]:
    if metrics.generated == 0:
        return None
    return 100.0 * metrics.delivered_in_deadline / metrics.generated


class Simulation:
    """Scheduler state of a whole network, advanced one TTI per :meth:`step`.

    ``rates`` has shape ``(n_bands, n_bs, n_users, 2**n_bs)``: the rate of a
    base station to a user on a band for each pattern of co-band
    transmitters (see :func:`vrcell.channel.rate_table`).
    ``secondary_bs`` is only consulted under dual connectivity.
    """

    def __init__(self, flows: Sequence[FrameSchedule], primary_bs: Sequence[int],
                 secondary_bs: Sequence[Optional[int]], rates, sched: SchedulerConfig,
                 duration_s: float, warmup_s: float = 0.0,
                 trace: Optional[Callable] = None, plan: BandPlan = BandPlan()):
        rates = np.asarray(rates, dtype=float)
        n_users = len(flows)
        tti = sched.tti_s
        self.tti = tti
        self.n_tti = int(round(duration_s / tti))
        self.tick = 0
        self.trace = trace
        self.plan = plan
        self.dual = sched.connectivity is Connectivity.Dual
        self.flows = list(flows)
        n_bs = rates.shape[1]
        all_mask = (1 << n_bs) - 1

        # user -> [(band, bs)]; a link that cannot carry one bit per TTI even
        # without interference is out of coverage and never gets copies
        self.links = []
        self.secondary_link = []
        for u in range(n_users):
            wanted = [(plan.primary, primary_bs[u])]
            if self.dual:
                if secondary_bs[u] is None:
                    raise ConfigError("dual connectivity needs a secondary base station per user")
                wanted.append((plan.secondary, secondary_bs[u]))
            links = [(band, bs) for band, bs in wanted
                     if bits_per_tti(rates[band, bs, u, 1 << bs], tti) > 0]
            self.links.append(links)
            self.secondary_link.append(wanted[1] if self.dual and wanted[1] in links else None)

        layouts = [UserFlow(f.frame_bits, f.bitplane_bits, f.n_planes) for f in flows]
        self.bands = plan.bands(sched.connectivity)
        self.schedulers = {}
        self.band_schedulers = []
        for band in self.bands:
            row = []
            for bs in range(n_bs):
                users = [u for u in range(n_users) if (band, bs) in self.links[u]]
                if not users:
                    continue
                band_rates = {u: rates[band, bs, u] for u in users}
                sch = BandScheduler(bs, band, users, layouts, band_rates, sched, all_mask)
                self.schedulers[band, bs] = sch
                row.append(sch)
            self.band_schedulers.append(row)
        self.user_scheds = [[self.schedulers[link] for link in self.links[u]] for u in range(n_users)]
        self.secondary = [self.schedulers[link] if link else None for link in self.secondary_link]

        self.release: dict[int, list] = {}
        self.expiry: dict[int, list] = {}
        self.cancel: dict[int, set] = {}
        self.last_ok = []
        self.first_counted = []
        for u, fs in enumerate(flows):
            rel = np.ceil(fs.avail_time / tti - _EPS).astype(np.int64)
            ok = np.floor(fs.deadline / tti + _EPS).astype(np.int64)
            for f in range(len(fs)):
                self.release.setdefault(int(rel[f]), []).append((u, f))
                if fs.drops:
                    self.expiry.setdefault(int(ok[f]) + 1, []).append((u, f))
            self.last_ok.append(ok.tolist())
            self.first_counted.append(int(np.searchsorted(fs.gen_time, warmup_s - _EPS, side="left")))
        self.best_total = [[0] * len(fs) for fs in flows]
        self.best_in_time = [[0] * len(fs) for fs in flows]
        self.expired_frame = [[False] * len(fs) for fs in flows]
        self.gen_time = [fs.gen_time.tolist() for fs in flows]
        self.lat_s: list[float] = []
        self.lat_n: list[int] = []

    def step(self):
        i = self.tick
        rel = self.release.get(i)
        if rel:
            for u, f in rel:
                for sch in self.user_scheds[u]:
                    sch.enqueue(u, f)
        exp = self.expiry.get(i)
        if exp:
            for u, f in exp:
                for sch in self.user_scheds[u]:
                    sch.drop_expired(u, f)
                self.expired_frame[u][f] = True
        can = self.cancel.pop(i, None)
        if can:
            for u in sorted(can):
                self.secondary[u].cancel_delivered(u, self.best_total[u])

        trace = self.trace
        primary = self.plan.primary
        for row in self.band_schedulers:
            mask = 0
            for sch in row:
                if sch.n_backlogged:
                    mask |= 1 << sch.bs
            for sch in row:
                res = sch.serve_tti(mask)
                if res is None:
                    continue
                u, rate, bits, completions = res
                if trace is not None:
                    trace(i, sch.bs, sch.band, u, rate, bits)
                if completions:
                    bt = self.best_total[u]
                    for f, p in completions:
                        prev = bt[f]
                        if p <= prev:
                            continue
                        bt[f] = p
                        if i < self.last_ok[u][f]:
                            self.best_in_time[u][f] = p
                        if f >= self.first_counted[u]:
                            self.lat_s.append((i + 1) * self.tti - self.gen_time[u][f])
                            self.lat_n.append(p - prev)
                        if sch.band == primary and self.secondary[u] is not None:
                            self.cancel.setdefault(i + 1, set()).add(u)
        self.tick = i + 1

    def run(self) -> RunMetrics:
        step = self.step
        for _ in range(self.n_tti - self.tick):
            step()
        return self.metrics()

    def ledger(self) -> dict:
        """Bit accounting per band: released = served + dropped + cancelled + pending."""
        out = {}
        for band in self.bands:
            scheds = [s for (b, _), s in self.schedulers.items() if b == band]
            out[band] = {
                "released": sum(s.released_bits for s in scheds),
                "served": sum(s.served_bits for s in scheds),
                "dropped": sum(s.dropped_bits for s in scheds),
                "cancelled": sum(s.cancelled_bits for s in scheds),
                "pending": sum(s.pending_bits() for s in scheds),
            }
        return out

    def metrics(self) -> RunMetrics:
        per_user = []
        gen_bits = 0
        for u, fs in enumerate(self.flows):
            m = UserMetrics()
            n = fs.n_planes
            bt, bi, ex = self.best_total[u], self.best_in_time[u], self.expired_frame[u]
            for f in range(self.first_counted[u], len(fs)):
                m.generated += n
                m.delivered_in_deadline += bi[f]
                m.delivered_late += bt[f] - bi[f]
                if ex[f]:
                    m.expired += n - bt[f]
                else:
                    m.in_flight += n - bt[f]
            gen_bits += (len(fs) - self.first_counted[u]) * fs.frame_bits
            per_user.append(m)
        return RunMetrics(
            generated=sum(m.generated for m in per_user),
            delivered_in_deadline=sum(m.delivered_in_deadline for m in per_user),
            delivered_late=sum(m.delivered_late for m in per_user),
            expired=sum(m.expired for m in per_user),
            in_flight=sum(m.in_flight for m in per_user),
            per_user=per_user,
            latency_s=np.asarray(self.lat_s, dtype=float),
            latency_count=np.asarray(self.lat_n, dtype=np.int64),
            generated_bits=gen_bits,
        )


def _scenario(cfg: SimConfig) -> Scenario:
    if cfg.scenario is not None:
        return cfg.scenario
    return campus_scenario(cfg.n_users, cfg.seed, bmap=cfg.bmap, bs_positions=cfg.bs_positions)


def link_rates(scenario: Scenario, channel: ChannelConfig, seed: int,
               bands: Sequence[int]) -> np.ndarray:
    """Rate table ``(n_bands, n_bs, n_users, 2**n_bs)`` with one frozen
    shadowing draw per (band, BS, user)."""
    n_bs, n_users = scenario.n_bs, scenario.n_users
    out = np.zeros((max(bands) + 1, n_bs, n_users, 1 << n_bs))
    for band in bands:
        rx = np.empty((n_bs, n_users))
        for b in range(n_bs):
            for u in range(n_users):
                state = link_budget(scenario.bs_positions[b], scenario.user_positions[u],
                                    scenario.bmap, channel, link_rng(seed, band, b, u))
                rx[b, u] = state.rx_dbm
        out[band] = rate_table(rx, channel)
    return out


def build(cfg: SimConfig, trace: Optional[Callable] = None, plan: BandPlan = BandPlan()) -> Simulation:
    scenario = _scenario(cfg)
    dual = cfg.scheduler.connectivity is Connectivity.Dual
    if scenario.n_bs < (2 if dual else 1):
        raise ConfigError("not enough base stations for the connectivity mode", "connectivity")
    ranks = [rank_bs(p, scenario.bs_positions) for p in scenario.user_positions]
    primary = [r[0] for r in ranks]
    secondary = [r[1] if len(r) > 1 else None for r in ranks]
    bands = plan.bands(cfg.scheduler.connectivity)
    rates = link_rates(scenario, cfg.channel, cfg.seed, bands)
    flows = [frame_schedule(f, cfg.duration_s) for f in cfg.flows()]
    return Simulation(flows, primary, secondary, rates, cfg.scheduler, cfg.duration_s,
                      cfg.warmup_s, trace=trace, plan=plan)


def run(cfg: SimConfig, trace: Optional[Callable] = None) -> RunMetrics:
    return build(cfg, trace=trace).run()


@dataclass(frozen=True)
class Replication:
    mean: Optional[float]
    stddev: Optional[float]
    ci95_low: Optional[float]
    ci95_high: Optional[float]
    runs: int
    values: tuple


def summarize(values: Sequence[Optional[float]]) -> Replication:
    """Sample mean, sample standard deviation and normal-approximation 95 %
    interval; runs without traffic are left out of the statistics."""
    vals = [v for v in values if v is not None]
    if not vals:
        return Replication(None, None, None, None, len(values), tuple(values))
    mean = statistics.fmean(vals)
    sd = statistics.stdev(vals) if len(vals) > 1 else 0.0
    half = 1.959963984540054 * sd / math.sqrt(len(vals))
    return Replication(mean, sd, mean - half, mean + half, len(values), tuple(values))


def _run_seed(args):
    cfg, seed = args
    return run(replace(cfg, seed=seed)).success_pct


def replicate(cfg: SimConfig, seeds: Sequence[int], jobs: int = 1) -> Replication:
    """Independent runs (fresh placement and shadowing) per seed."""
    if not seeds:
        raise ValueError("replicate needs at least one seed")
    tasks = [(cfg, s) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(_run_seed, tasks))
    else:
        values = [_run_seed(t) for t in tasks]
    return summarize(values)
