"""VR quality-of-service requirements for the five device phases.

Bit rates follow the progressive-scan rule: three colour channels per pixel,
``bits_per_color`` bits each, every pixel refreshed ``refresh_hz`` times per
second, divided by the compression ratio.  Uncompressed rates are kept as
exact Python integers; compressed rates are plain floats.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Optional

#: Minimum VR interaction latency (ms) used as the round-trip budget.
INTERACTION_LATENCY_MS = 10.0
#: Share of the round trip given to the downlink (7 ms out of 10 ms).
DOWNLINK_SHARE = 0.7
#: Foveal-acuity resolution target, pixels per degree.
HUMAN_ACUITY_PPD = 60
#: Minimum refresh rate for computer-rendered motion continuity.
MIN_REFRESH_HZ = 120
#: Target error rate for the VR video stream.
STREAM_LOSS_TARGET = 1e-6
#: Upper end of the uplink motion-information rate, bits/s.  Ignored by the simulator.
UPLINK_MOTION_BPS = 150e3

LOW_LATENCY_RATIO = 20
LOSSY_RATIO = 300


class Phase(enum.Enum):
    PreVR = "Pre-VR"
    EntryVR = "Entry-Level VR"
    AdvancedVR = "Advanced VR"
    HumanPerception = "Human Perception"
    UltimateVR = "Ultimate VR"


@dataclass(frozen=True)
class PhaseSpec:
    name: Phase
    full_view_width_px: int
    full_view_height_px: int
    eye_width_px: int
    eye_height_px: int
    fov_h_deg: float
    fov_v_deg: float
    bits_per_color: int
    refresh_hz: int
    ppd: int
    rtt_budget_ms: float
    loss_target: float
    experience_duration: str = "unspecified"
    #: True when ``bits_per_color`` was inferred rather than listed.
    bits_per_color_inferred: bool = False

    def __post_init__(self):
        positive = {
            "full_view_width_px": self.full_view_width_px,
            "full_view_height_px": self.full_view_height_px,
            "eye_width_px": self.eye_width_px,
            "eye_height_px": self.eye_height_px,
            "bits_per_color": self.bits_per_color,
            "refresh_hz": self.refresh_hz,
        }
        for key, value in positive.items():
            if not value > 0:
                raise ValueError(f"{key} must be positive, got {value!r}")
        if not 0.0 < self.loss_target < 1.0:
            raise ValueError(f"loss_target must lie in (0, 1), got {self.loss_target!r}")
        if not self.rtt_budget_ms > 0:
            raise ValueError(f"rtt_budget_ms must be positive, got {self.rtt_budget_ms!r}")


@dataclass(frozen=True)
class QosRequirement:
    uncompressed_bps: int
    uncompressed_fov_bps: int
    full_view_compressed_bps: float
    fov_compressed_bps: float
    full_view_lossy_bps: float
    fov_lossy_bps: float
    downlink_deadline_ms: float
    loss_target: float


PHASES: dict[Phase, PhaseSpec] = {
    Phase.PreVR: PhaseSpec(
        Phase.PreVR, 3840, 1920, 1080, 1080, 100, 100, 8, 60, 10, 10.0, 1e-6,
        experience_duration="less than 20 minutes",
    ),
    Phase.EntryVR: PhaseSpec(
        Phase.EntryVR, 7680, 3840, 1920, 1920, 110, 110, 8, 90, 17, 10.0, 1e-6,
        experience_duration="less than 20 minutes",
    ),
    Phase.AdvancedVR: PhaseSpec(
        Phase.AdvancedVR, 11520, 5760, 3840, 3840, 120, 120, 10, 120, 32, 5.0, 1e-6,
        experience_duration="less than an hour",
    ),
    # bits_per_color is blank in the source table; 12 is the only value that
    # reproduces its 1007.77 Gbps uncompressed rate.
    Phase.HumanPerception: PhaseSpec(
        Phase.HumanPerception, 21600, 10800, 9000, 8100, 150, 135, 12, 120, 60, 10.0, 1e-6,
        bits_per_color_inferred=True,
    ),
    Phase.UltimateVR: PhaseSpec(
        Phase.UltimateVR, 23040, 11520, 9600, 9600, 150, 150, 12, 200, 64, 5.0, 1e-6,
        experience_duration="more than an hour",
    ),
}


def uncompressed_full_view_rate(width_px, height_px, bits_per_color, refresh_hz):
    """Raw progressive rate of a full-view frame, in bits/s."""
    return width_px * height_px * 3 * bits_per_color * refresh_hz


def uncompressed_fov_rate(eye_width_px, eye_height_px, bits_per_color, refresh_hz):
    """Raw rate of the two single-eye viewports together, in bits/s."""
    return 2 * eye_width_px * eye_height_px * 3 * bits_per_color * refresh_hz


def compressed_rate(uncompressed_bps, ratio):
    if ratio < 1:
        raise ValueError(f"compression ratio must be >= 1, got {ratio!r}")
    return uncompressed_bps / ratio


def downlink_delay_budget(rtt_budget_ms, downlink_share=DOWNLINK_SHARE):
    """Part of the interaction-latency budget available to the downlink."""
    if not rtt_budget_ms > 0:
        raise ValueError(f"rtt_budget_ms must be positive, got {rtt_budget_ms!r}")
    if not 0.0 < downlink_share <= 1.0:
        raise ValueError(f"downlink_share must lie in (0, 1], got {downlink_share!r}")
    return rtt_budget_ms * downlink_share


def phase_requirements(phase, ratio=LOW_LATENCY_RATIO, lossy_ratio=LOSSY_RATIO,
                       downlink_share=DOWNLINK_SHARE) -> QosRequirement:
    """Service requirement for one phase.

    ``phase`` may be a :class:`Phase` member or any :class:`PhaseSpec`.
    ``ratio`` drives the ``*_compressed_bps`` fields and ``lossy_ratio`` the
    ``*_lossy_bps`` fields.
    """
    spec = PHASES[phase] if isinstance(phase, Phase) else phase
    full = uncompressed_full_view_rate(
        spec.full_view_width_px, spec.full_view_height_px, spec.bits_per_color, spec.refresh_hz)
    fov = uncompressed_fov_rate(
        spec.eye_width_px, spec.eye_height_px, spec.bits_per_color, spec.refresh_hz)
    return QosRequirement(
        uncompressed_bps=full,
        uncompressed_fov_bps=fov,
        full_view_compressed_bps=compressed_rate(full, ratio),
        fov_compressed_bps=compressed_rate(fov, ratio),
        full_view_lossy_bps=compressed_rate(full, lossy_ratio),
        fov_lossy_bps=compressed_rate(fov, lossy_ratio),
        downlink_deadline_ms=downlink_delay_budget(spec.rtt_budget_ms, downlink_share),
        loss_target=spec.loss_target,
    )


def format_rate(bps: float) -> str:
    """Render a rate the way the requirement table does: Gbps with two
    decimals from 1 Gbps upwards, whole Mbps below."""
    if bps >= 1e9:
        return f"{bps / 1e9:.2f} Gbps"
    return f"{bps / 1e6:.0f} Mbps"


def _format_ms(value: float) -> str:
    return f"{value:g} ms"


ROW_NAMES = (
    "Experience Duration",
    "Video Resolution",
    "Single-eye Resolution",
    "Field-of-View (Single-eye)",
    "Bit per Color (RGB)",
    "Refresh Rate",
    "Pixel per Degree",
    "Uncompressed Bit Rate (Progressive 1:1)",
    "Transmitting Bit Rate (Low-latency Compression 20:1)",
    "Transmitting Bit Rate (Lossy Compression 300:1)",
    "Typical Round Trip Time (RTT)",
    "Typical Packet Loss",
)


def qos_table(numeric: bool = False) -> list[list[str]]:
    """Rows of the requirement table, first row being the header.

    With ``numeric`` the rate cells hold exact bits/s values (``full;fov``)
    instead of display strings.
    """
    header = ["Requirement"] + [p.value for p in Phase]
    rows = [header]
    specs = [PHASES[p] for p in Phase]
    reqs = [phase_requirements(p) for p in Phase]

    def rate_pair(full, fov):
        if numeric:
            return f"{full!r};{fov!r}"
        return f"{format_rate(full)} (Full-view); {format_rate(fov)} (FoV)"

    for name in ROW_NAMES:
        cells: list[Optional[str]] = []
        for spec, req in zip(specs, reqs):
            if name == "Experience Duration":
                cell = spec.experience_duration
            elif name == "Video Resolution":
                cell = f"{spec.full_view_width_px}x{spec.full_view_height_px}"
            elif name == "Single-eye Resolution":
                cell = f"{spec.eye_width_px}x{spec.eye_height_px}"
            elif name == "Field-of-View (Single-eye)":
                cell = f"{spec.fov_h_deg:g}x{spec.fov_v_deg:g}"
            elif name == "Bit per Color (RGB)":
                cell = str(spec.bits_per_color) + (" (inferred)" if spec.bits_per_color_inferred else "")
            elif name == "Refresh Rate":
                cell = f"{spec.refresh_hz} Hz"
            elif name == "Pixel per Degree":
                cell = str(spec.ppd)
            elif name.startswith("Uncompressed"):
                cell = str(req.uncompressed_bps) if numeric else format_rate(req.uncompressed_bps)
            elif "20:1" in name:
                cell = rate_pair(req.full_view_compressed_bps, req.fov_compressed_bps)
            elif "300:1" in name:
                cell = rate_pair(req.full_view_lossy_bps, req.fov_lossy_bps)
            elif name.startswith("Typical Round"):
                cell = _format_ms(spec.rtt_budget_ms)
            else:
                cell = f"{spec.loss_target:g}"
            cells.append(cell)
        rows.append([name] + cells)
    return rows


def qos_table_csv(numeric: bool = False) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(qos_table(numeric))
    return buf.getvalue()
