"""
Success rate against the number of viewers
==========================================

A short sweep over user counts for both schedulers, averaged over a few
user drops.  The acceptance suite runs the same sweep with 10 seeds and
10 s per run; here each run is 1 s to keep the script under a minute.
"""

from vrcell.engine import SimConfig, replicate
from vrcell.scheduler import SchedulerConfig
from vrcell.traffic import FlowConfig

seeds = range(3)
print(f"{'users':>5s} {'RR VR':>8s} {'PF VR':>8s} {'RR TV':>8s} {'PF dual':>8s}")
for n in (5, 10, 15, 20):
    row = []
    for disc, flow, conn in (("RR", FlowConfig(), "Single"), ("PF", FlowConfig(), "Single"),
                             ("RR", FlowConfig.traditional(), "Single"),
                             ("PF", FlowConfig(), "Dual")):
        cfg = SimConfig(duration_s=1.0, warmup_s=0.2, n_users=n, flow=flow,
                        scheduler=SchedulerConfig(disc, connectivity=conn))
        row.append(replicate(cfg, seeds).mean)
    print(f"{n:5d} " + " ".join(f"{v:8.1f}" for v in row))
