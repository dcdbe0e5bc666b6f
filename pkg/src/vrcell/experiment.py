"""Sweep configuration files and CSV result writing.

A configuration is an INI file.  Every section and key is optional; an
empty file gives the default sweep.  Recognised keys::

    [experiment]
    n_users        = 5, 10, 15, 20
    schedulers     = RR, PF
    connectivity   = Single, Dual
    traffic        = VR, TraditionalVideo
    curves         = RR/VR/Single, PF/VR/Dual   ; optional, replaces the 3 axes above
    seeds          = 0-9                        ; ranges and lists, e.g. 0-4, 7
    output         = results.csv
    per_run_output = false                      ; also write <output stem>.runs.csv

    [sim]        duration_s, warmup_s
    [scheduler]  tti_s, pf_time_constant_ttis
    [flow]       bit_rate_bps, refresh_hz, bitplane_bits, deadline_ms,
                 prefetch_ms, drop_on_expiry
    [channel]    any ChannelConfig field
    [scenario]   map_file, bs_positions (``x,y,h; x,y,h; ...``)
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import itertools
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .channel import ChannelConfig
from .engine import ConfigError, SimConfig, build, summarize
from .geometry import CAMPUS_BS, BuildingMap, MapError, campus_map, load_map
from .qos import qos_table_csv
from .scheduler import Connectivity, Discipline, SchedulerConfig, parse_discipline
from .traffic import FlowConfig, TrafficKind, frame_bitplane_count

OUTPUT_DIR_ENV = "VRCELL_OUTPUT_DIR"

RESULT_COLUMNS = ["n_users", "scheduler", "connectivity", "traffic", "mean_success_pct",
                  "stddev", "ci95_low", "ci95_high", "runs"]
DETAIL_COLUMNS = ["n_users", "scheduler", "connectivity", "traffic", "seed", "success_pct",
                  "generated", "delivered_in_deadline", "delivered_late", "expired",
                  "in_flight", "generated_bits", "mean_latency_ms"]


class ConfigSyntaxError(ConfigError):
    pass


class UnknownKeyError(ConfigError):
    pass


@dataclass(frozen=True)
class Curve:
    scheduler: Discipline
    traffic: TrafficKind
    connectivity: Connectivity

    @property
    def label(self) -> str:
        return f"{self.scheduler.value}/{self.traffic.value}/{self.connectivity.value}"


@dataclass(frozen=True)
class ExperimentSpec:
    n_users: tuple = (5, 10, 15, 20)
    curves: tuple = field(default_factory=lambda: tuple(
        Curve(s, t, c) for s, t, c in itertools.product(
            (Discipline.RoundRobin, Discipline.ProportionalFair),
            (TrafficKind.VR, TrafficKind.TraditionalVideo),
            (Connectivity.Single, Connectivity.Dual))))
    seeds: tuple = tuple(range(10))
    output: str = "results.csv"
    per_run_output: bool = False
    base: SimConfig = field(default_factory=SimConfig)
    map_file: Optional[str] = None

    def __post_init__(self):
        for name in ("n_users", "curves", "seeds"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must not be empty", name)
        if any(n < 0 for n in self.n_users):
            raise ConfigError("n_users entries must be >= 0", "n_users")
        n_bs = len(CAMPUS_BS) if self.base.bs_positions is None else len(self.base.bs_positions)
        if n_bs < 2 and any(c.connectivity is Connectivity.Dual for c in self.curves):
            raise ConfigError("Dual connectivity needs at least two base stations", "connectivity")

    @property
    def planned_runs(self) -> int:
        return len(self.n_users) * len(self.curves) * len(self.seeds)

    def points(self):
        """Sweep points in output order: curve-major, then user count."""
        for curve in self.curves:
            for n in self.n_users:
                yield curve, n

    def sim_config(self, curve: Curve, n_users: int, seed: int) -> SimConfig:
        base = self.base
        flow = base.flow.with_kind(curve.traffic)
        sched = replace(base.scheduler, discipline=curve.scheduler, connectivity=curve.connectivity)
        return replace(base, n_users=n_users, seed=seed, flow=flow, scheduler=sched)

    def resolved(self) -> dict:
        """Every setting that can influence results, as plain values."""
        base = self.base
        flow = base.flow
        return {
            "experiment.n_users": list(self.n_users),
            "experiment.curves": [c.label for c in self.curves],
            "experiment.seeds": list(self.seeds),
            "sim.duration_s": base.duration_s,
            "sim.warmup_s": base.warmup_s,
            "scheduler.tti_s": base.scheduler.tti_s,
            "scheduler.pf_time_constant_ttis": base.scheduler.pf_time_constant_ttis,
            "flow.bit_rate_bps": flow.bit_rate_bps,
            "flow.refresh_hz": flow.refresh_hz,
            "flow.bitplane_bits": flow.bitplane_bits,
            "flow.deadline_ms": flow.deadline_ms,
            "flow.tv_prefetch_ms": flow.with_kind(TrafficKind.TraditionalVideo).prefetch_s * 1e3,
            "flow.drop_on_expiry": flow.drops,
            "flow.planes_per_frame": frame_bitplane_count(flow),
            **{f"channel.{k}": v for k, v in base.channel.as_dict().items()},
            "scenario.map": _map_digest(base.bmap) if self.map_file else "campus",
            "scenario.bs_positions": np.asarray(
                CAMPUS_BS if base.bs_positions is None else base.bs_positions).tolist(),
        }

    def fingerprint(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()


def _map_digest(bmap: BuildingMap) -> str:
    h = hashlib.sha256()
    h.update(np.asarray(bmap.bounds).tobytes())
    for poly in bmap.buildings:
        h.update(np.ascontiguousarray(poly).tobytes())
    return "sha256:" + h.hexdigest()[:16]


_SECTIONS = {
    "experiment": {"n_users", "schedulers", "connectivity", "traffic", "curves", "seeds",
                   "output", "per_run_output"},
    "sim": {"duration_s", "warmup_s"},
    "scheduler": {"tti_s", "pf_time_constant_ttis"},
    "flow": {"bit_rate_bps", "refresh_hz", "bitplane_bits", "deadline_ms", "prefetch_ms",
             "drop_on_expiry"},
    "channel": {f.name for f in fields(ChannelConfig)},
    "scenario": {"map_file", "bs_positions"},
}


def _split(value: str) -> list[str]:
    return [v.strip() for v in value.replace(";", ",").split(",") if v.strip()]


def _seeds(value: str, key: str) -> tuple:
    out = []
    for part in _split(value):
        try:
            if "-" in part[1:]:
                lo, hi = part.split("-", 1) if not part.startswith("-") else (part, part)
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise ConfigError(f"{key}: cannot read seed list {value!r}", key) from None
    return tuple(out)


def _bool(value: str, key: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}", key)


def _num(value: str, key: str, kind=float):
    try:
        return kind(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}", key) from None


def _enum(value: str, key: str, parse):
    try:
        return parse(value)
    except ValueError:
        raise ConfigError(f"{key}: unknown value {value!r}", key) from None


def parse_config(path) -> ExperimentSpec:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"configuration file not found: {path}", "path")
    return parse_config_text(path.read_text(), base_dir=path.parent, source=str(path))


def parse_config_text(text: str, base_dir=".", source="<string>") -> ExperimentSpec:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigSyntaxError(f"{source}: malformed configuration: {exc}", "syntax") from None
    for section in cp.sections():
        if section not in _SECTIONS:
            raise UnknownKeyError(f"{source}: unknown section [{section}]", section)
        for key in cp[section]:
            if key not in _SECTIONS[section]:
                raise UnknownKeyError(f"{source}: unknown key {section}.{key}", f"{section}.{key}")

    def get(section, key):
        if cp.has_option(section, key):
            return cp[section][key]
        return None

    kw = {}
    v = get("experiment", "n_users")
    if v is not None:
        kw["n_users"] = tuple(_num(x, "n_users", int) for x in _split(v))
    v = get("experiment", "seeds")
    if v is not None:
        kw["seeds"] = _seeds(v, "seeds")
    v = get("experiment", "output")
    if v is not None:
        kw["output"] = v.strip()
    v = get("experiment", "per_run_output")
    if v is not None:
        kw["per_run_output"] = _bool(v, "per_run_output")

    traffic = lambda s: TrafficKind("TraditionalVideo" if s in ("TV", "TraditionalVideo") else s)
    if get("experiment", "curves") is not None:
        curves = []
        for item in _split(get("experiment", "curves")):
            parts = item.split("/")
            if len(parts) != 3:
                raise ConfigError(f"curves: expected scheduler/traffic/connectivity, got {item!r}",
                                  "curves")
            curves.append(Curve(_enum(parts[0], "curves", parse_discipline),
                                _enum(parts[1], "curves", traffic),
                                _enum(parts[2], "curves", Connectivity)))
        kw["curves"] = tuple(curves)
    else:
        axes = {}
        defaults = {"schedulers": "RR, PF", "traffic": "VR, TraditionalVideo",
                    "connectivity": "Single, Dual"}
        parsers = {"schedulers": parse_discipline, "traffic": traffic,
                   "connectivity": Connectivity}
        for key in ("schedulers", "traffic", "connectivity"):
            raw = get("experiment", key)
            items = _split(defaults[key] if raw is None else raw)
            axes[key] = [_enum(x, key, parsers[key]) for x in items]
            if not axes[key]:
                raise ConfigError(f"{key} must not be empty", key)
        kw["curves"] = tuple(Curve(s, t, c) for s, t, c in itertools.product(
            axes["schedulers"], axes["traffic"], axes["connectivity"]))

    sim_kw = {}
    for key in ("duration_s", "warmup_s"):
        v = get("sim", key)
        if v is not None:
            sim_kw[key] = _num(v, key)

    sched_kw = {}
    for key in ("tti_s", "pf_time_constant_ttis"):
        v = get("scheduler", key)
        if v is not None:
            sched_kw[key] = _num(v, key)

    flow_kw = {}
    for key in ("bit_rate_bps", "refresh_hz", "deadline_ms", "prefetch_ms"):
        v = get("flow", key)
        if v is not None:
            flow_kw[key] = _num(v, key)
    v = get("flow", "bitplane_bits")
    if v is not None:
        flow_kw["bitplane_bits"] = _num(v, "bitplane_bits", int)
    v = get("flow", "drop_on_expiry")
    if v is not None:
        flow_kw["drop_on_expiry"] = _bool(v, "drop_on_expiry")

    chan_kw = {}
    for key in _SECTIONS["channel"]:
        v = get("channel", key)
        if v is not None:
            chan_kw[key] = _num(v, key)

    map_file = get("scenario", "map_file")
    bmap = None
    if map_file is not None:
        map_path = Path(base_dir) / map_file.strip()
        try:
            bmap = load_map(map_path)
        except (OSError, MapError) as exc:
            raise ConfigError(f"map_file: {exc}", "map_file") from None
    bs = None
    bs_raw = get("scenario", "bs_positions")
    if bs_raw is not None:
        try:
            rows = [[float(x) for x in r.split(",")] for r in bs_raw.split(";") if r.strip()]
            bs = np.array(rows, dtype=float)
            if bs.ndim != 2 or bs.shape[1] != 3 or len(bs) == 0:
                raise ValueError
        except ValueError:
            raise ConfigError(f"bs_positions: expected 'x,y,h; x,y,h; ...', got {bs_raw!r}",
                              "bs_positions") from None
        area = bmap if bmap is not None else campus_map()
        for p in bs:
            if not area.contains(p):
                raise ConfigError(f"bs_positions: {tuple(p[:2])} lies outside the map bounds",
                                  "bs_positions")

    def build_part(cls, kwargs, prefix):
        try:
            return cls(**kwargs)
        except ConfigError:
            raise
        except ValueError as exc:
            key = next((k for k in kwargs if k in str(exc)), prefix)
            raise ConfigError(f"{key}: {exc}", key) from None

    channel = build_part(ChannelConfig, chan_kw, "channel")
    sched = build_part(SchedulerConfig, sched_kw, "scheduler")
    # the kind is set per curve; TV here only so a prefetch setting validates
    if "prefetch_ms" in flow_kw:
        flow_kw["kind"] = TrafficKind.TraditionalVideo
    flow = build_part(FlowConfig, flow_kw, "flow")
    base = build_part(SimConfig, dict(sim_kw, channel=channel, scheduler=sched, flow=flow,
                                      bmap=bmap, bs_positions=bs), "sim")
    kw["base"] = base
    return build_part(ExperimentSpec, dict(kw, map_file=map_file), "experiment")


def _resolve_output(output: str) -> Path:
    path = Path(output)
    root = os.environ.get(OUTPUT_DIR_ENV)
    if root and not path.is_absolute():
        path = Path(root) / path
    return path


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(round(x, 6))
    return str(x)


def _one_run(args):
    spec, curve, n, seed, trace_dir = args
    cfg = spec.sim_config(curve, n, seed)
    fh = None
    trace = None
    if trace_dir is not None:
        name = f"trace_{curve.label.replace('/', '_')}_n{n}_seed{seed}.csv"
        fh = open(Path(trace_dir) / name, "w", newline="")
        writer = csv.writer(fh)
        writer.writerow(["tti", "bs", "band", "user", "rate", "bits_served"])
        trace = lambda i, bs, band, u, rate, bits: writer.writerow([i, bs, band, u, repr(rate), bits])
    try:
        sim = build(cfg, trace=trace)
        m = sim.run()
    finally:
        if fh is not None:
            fh.close()
    lat = m.mean_latency()
    return {
        "n_users": n, "scheduler": curve.scheduler.value, "connectivity": curve.connectivity.value,
        "traffic": curve.traffic.value, "seed": seed, "success_pct": m.success_pct,
        "generated": m.generated, "delivered_in_deadline": m.delivered_in_deadline,
        "delivered_late": m.delivered_late, "expired": m.expired, "in_flight": m.in_flight,
        "generated_bits": m.generated_bits,
        "mean_latency_ms": None if lat is None else lat * 1e3,
    }


def plan_runs(spec: ExperimentSpec, trace_dir=None) -> list:
    return [(spec, curve, n, seed, trace_dir) for curve, n in spec.points() for seed in spec.seeds]


def run_experiment(spec: ExperimentSpec, jobs: int = 1, output=None, trace_dir=None) -> Path:
    """Run every planned simulation and write the aggregated CSV.

    Returns the path written.  Output is written to a temporary file and
    moved into place, so an aborted sweep leaves nothing behind.
    """
    out_path = _resolve_output(output or spec.output)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if trace_dir is not None:
        Path(trace_dir).mkdir(parents=True, exist_ok=True)
    tasks = plan_runs(spec, trace_dir)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_one_run, tasks, chunksize=1))
    else:
        results = [_one_run(t) for t in tasks]

    header = [f"# vrcell {__version__}", f"# fingerprint: {spec.fingerprint()}",
              f"# planned_runs: {spec.planned_runs}"]
    for key, value in sorted(spec.resolved().items()):
        header.append(f"# {key} = {json.dumps(value, default=str)}")

    buf = io.StringIO()
    buf.write("\n".join(header) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    k = 0
    per_point = len(spec.seeds)
    for curve, n in spec.points():
        chunk = results[k:k + per_point]
        k += per_point
        s = summarize([r["success_pct"] for r in chunk])
        writer.writerow([n, curve.scheduler.value, curve.connectivity.value, curve.traffic.value,
                         _fmt(s.mean), _fmt(s.stddev), _fmt(s.ci95_low), _fmt(s.ci95_high), s.runs])
    _atomic_write(out_path, buf.getvalue())

    if spec.per_run_output:
        dbuf = io.StringIO()
        dbuf.write("\n".join(header) + "\n")
        dw = csv.writer(dbuf, lineterminator="\n")
        dw.writerow(DETAIL_COLUMNS)
        for r in results:
            dw.writerow([_fmt(r[c]) for c in DETAIL_COLUMNS])
        _atomic_write(detail_path(out_path), dbuf.getvalue())
    return out_path


def detail_path(out_path: Path) -> Path:
    return out_path.with_name(out_path.stem + ".runs.csv")


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def read_results(path) -> list[dict]:
    """Data rows of a results CSV, header comments skipped."""
    with open(path, newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


def emit_qos_table(numeric: bool = False) -> str:
    return qos_table_csv(numeric)
