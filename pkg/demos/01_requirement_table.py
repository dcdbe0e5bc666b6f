"""
Bit-rate requirements of the VR phases
======================================

Each phase is a display: a full 360 degree video resolution, a per-eye
field-of-view resolution, a colour depth and a refresh rate.  The raw bit
rate follows directly, and compression divides it.
"""

from vrcell.qos import PHASES, Phase, downlink_delay_budget, format_rate, phase_requirements

# The raw rate is pixels x 3 colours x bits per colour x refresh rate.
for phase in Phase:
    spec = PHASES[phase]
    req = phase_requirements(phase)
    print(f"{phase.value:18s} raw {format_rate(req.uncompressed_bps):>14s}"
          f"   20:1 {format_rate(req.full_view_compressed_bps):>11s}"
          f"   FoV 20:1 {format_rate(req.fov_compressed_bps):>11s}")

# Only the visible part of the sphere needs to be sent when the field of
# view is tracked: for the Advanced phase this halves the 20:1 rate.
adv = phase_requirements(Phase.AdvancedVR)
print("\nAdvanced VR, FoV share of the full-view rate:",
      round(adv.fov_compressed_bps / adv.full_view_compressed_bps, 3))

# Of a 10 ms motion-to-photon budget, 70 % is left for the downlink.
print("downlink deadline:", downlink_delay_budget(10.0), "ms")
