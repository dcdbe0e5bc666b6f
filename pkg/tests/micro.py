"""Random micro-scenarios shared by the oracle-equivalence tests."""

import numpy as np

from vrcell.engine import Simulation
from vrcell.scheduler import Connectivity, Discipline, SchedulerConfig
from vrcell.traffic import FlowConfig, TrafficKind, frame_schedule, generate

from reference_sim import reference_run


def random_micro(rng: np.random.Generator):
    """At most 3 users, 2 base stations and 50 bitplanes in total."""
    n_users = int(rng.integers(1, 4))
    n_bs = int(rng.integers(1, 3))
    dual = n_bs == 2 and bool(rng.integers(0, 2))
    tti = 1e-3
    refresh = float(rng.choice([125.0, 200.0, 300.0, 400.0]))
    duration = float(rng.choice([0.01, 0.015, 0.02]))
    flows = []
    budget = 50
    for u in range(n_users):
        kind = TrafficKind.VR if rng.integers(0, 2) else TrafficKind.TraditionalVideo
        plane_bits = int(rng.integers(20, 120))
        planes = int(rng.integers(1, 4))
        frame_bits = plane_bits * planes - int(rng.integers(0, plane_bits))
        cfg = FlowConfig(
            kind=kind,
            bit_rate_bps=frame_bits * refresh,
            refresh_hz=refresh,
            bitplane_bits=plane_bits,
            deadline_ms=float(rng.choice([2.0, 3.5, 5.0, 7.0])),
            prefetch_ms=None if kind is TrafficKind.VR else float(rng.choice([0.0, 2.5, 4.0])),
            drop_on_expiry=bool(rng.integers(0, 2)),
        )
        n_frames = len(frame_schedule(cfg, duration))
        while n_frames * planes > budget // (n_users - u) and duration > 1 / refresh:
            duration -= 1 / refresh
            n_frames = len(frame_schedule(cfg, duration))
        flows.append(cfg)
        budget -= n_frames * planes
    # mask-dependent rates in bits/s; a few links without coverage
    rates = rng.integers(0, 400, size=(2, n_bs, n_users, 1 << n_bs)).astype(float) / tti
    rates[rng.random(rates.shape) < 0.1] = 0.0
    primary = [int(rng.integers(0, n_bs)) for _ in range(n_users)]
    secondary = [1 - p if n_bs == 2 else None for p in primary]
    disc = Discipline.ProportionalFair if rng.integers(0, 2) else Discipline.RoundRobin
    sched = SchedulerConfig(disc, tti_s=tti, pf_time_constant_ttis=float(rng.choice([1, 3, 10])),
                            connectivity=Connectivity.Dual if dual else Connectivity.Single)
    warmup = float(rng.choice([0.0, 0.004]))
    horizon = duration + float(rng.choice([0.0, 0.01]))
    return dict(flows=flows, duration=duration, horizon=horizon, rates=rates, primary=primary,
                secondary=secondary, sched=sched, warmup=warmup)


def engine_side(m):
    schedules = [frame_schedule(f, m["duration"]) for f in m["flows"]]
    sim = Simulation(schedules, m["primary"], m["secondary"], m["rates"], m["sched"],
                     m["horizon"], m["warmup"])
    metrics = sim.run()
    per_user = [dict(generated=x.generated, in_time=x.delivered_in_deadline, late=x.delivered_late,
                     expired=x.expired, in_flight=x.in_flight) for x in metrics.per_user]
    lat = sorted(np.repeat(metrics.latency_s, metrics.latency_count).tolist())
    return per_user, lat


def oracle_side(m):
    bitplanes = [generate(f, m["duration"], flow_id=u) for u, f in enumerate(m["flows"])]
    sched = m["sched"]
    return reference_run(
        bitplanes, [f.drops for f in m["flows"]], m["primary"], m["secondary"],
        m["rates"].tolist(), sched.discipline.value, float(sched.pf_time_constant_ttis),
        sched.tti_s, sched.connectivity is Connectivity.Dual, m["horizon"], m["warmup"])
