"""
Links on the synthetic campus
=============================

Three base stations sit between eight buildings.  A user's link to a base
station loses 20 dB per wall it crosses and 0.5 dB per metre spent indoors,
on top of the LoS or NLoS path loss and a log-normal shadowing draw.
"""

import numpy as np

from vrcell.channel import ChannelConfig, link_budget, link_rng
from vrcell.geometry import CAMPUS_BS, campus_scenario, path_profile, rank_bs

scen = campus_scenario(n_users=6, seed=1)
cfg = ChannelConfig()
print(f"{scen.bmap.building_fraction():.0%} of the campus is built up")
print("noise floor:", round(cfg.noise_dbm, 1), "dBm over", cfg.bandwidth_hz / 1e6, "MHz\n")

indoor = scen.bmap.indoor(scen.user_positions)
for u, pos in enumerate(scen.user_positions):
    best = rank_bs(pos, CAMPUS_BS)[0]
    walls, inside = path_profile(CAMPUS_BS[best], pos, scen.bmap)
    link = link_budget(CAMPUS_BS[best], pos, scen.bmap, cfg, link_rng(1, 0, best, u))
    print(f"user {u} at ({pos[0]:5.1f}, {pos[1]:5.1f}) {'indoor ' if indoor[u] else 'outdoor'}"
          f" -> BS{best}: {link.distance_m:5.1f} m, {walls} walls, {inside:4.1f} m inside,"
          f" SNR {link.sinr_db:6.1f} dB, {link.rate_bps / 1e9:.2f} Gbit/s")

# The VR stream needs 768 Mbit/s, so any link above that can carry one user
# alone; sharing a base station is what breaks the deadline.
rates = [link_budget(CAMPUS_BS[rank_bs(p, CAMPUS_BS)[0]], p, scen.bmap, cfg,
                     link_rng(1, 0, rank_bs(p, CAMPUS_BS)[0], u)).rate_bps
         for u, p in enumerate(scen.user_positions)]
print("\nlinks able to carry one 768 Mbit/s stream:", int(np.sum(np.array(rates) > 768e6)))
