"""Acceptance gate.  Each test prints one PASS/FAIL line (also repeated in
the pytest terminal summary).  The sweep for criteria 3a-3d takes a few
minutes on one core."""

import math
import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest

from geometry_oracle import brute_profile, star_polygon
from micro import engine_side, oracle_side, random_micro
from vrcell.channel import pathloss_los, pathloss_nlos
from vrcell.engine import SimConfig, build
from vrcell.geometry import BuildingMap, path_profile
from vrcell.qos import Phase, qos_table
from vrcell.scheduler import Connectivity, Discipline, SchedulerConfig
from vrcell.traffic import FlowConfig, TrafficKind

# ---------------------------------------------------------------- criterion 1

# Independent copy of the display parameters: (width, height, eye_w, eye_h, bpc, Hz).
PHASE_PARAMS = {
    Phase.PreVR: (3840, 1920, 1080, 1080, 8, 60),
    Phase.EntryVR: (7680, 3840, 1920, 1920, 8, 90),
    Phase.AdvancedVR: (11520, 5760, 3840, 3840, 10, 120),
    Phase.HumanPerception: (21600, 10800, 9000, 8100, 12, 120),
    Phase.UltimateVR: (23040, 11520, 9600, 9600, 12, 200),
}

# Displayed cells as printed in the requirement table; None = not shown.
# Per phase: uncompressed, 20:1 full-view, 20:1 FoV, 300:1 full-view, 300:1 FoV.
SHOWN = {
    Phase.PreVR: (10.62e9, 530e6, None, 35e6, None),
    Phase.EntryVR: (63.70e9, 3.18e9, 796e6, 210e6, 53e6),
    Phase.AdvancedVR: (238.89e9, 11.94e9, 5.31e9, 796e6, 354e6),
    Phase.HumanPerception: (1007.77e9, 50.39e9, 31.49e9, 3.36e9, 2.10e9),
    Phase.UltimateVR: (1911.03e9, 95.55e9, 66.36e9, 6.37e9, 4.42e9),
}


def _oracle_cells(phase):
    w, h, ew, eh, bpc, hz = PHASE_PARAMS[phase]
    full = w * h * 3 * bpc * hz
    fov = 2 * ew * eh * 3 * bpc * hz
    return (full, full / 20, fov / 20, full / 300, fov / 300)


def test_criterion_1_requirement_table(record):
    rows = {r[0]: r[1:] for r in qos_table(numeric=True)}
    exact_ok, shown_ok, worst = 0, 0, 0.0
    shown_total = 0
    for k, phase in enumerate(Phase):
        unc = float(rows["Uncompressed Bit Rate (Progressive 1:1)"][k])
        c20 = [float(x) for x in rows["Transmitting Bit Rate (Low-latency Compression 20:1)"][k].split(";")]
        c300 = [float(x) for x in rows["Transmitting Bit Rate (Lossy Compression 300:1)"][k].split(";")]
        mine = (unc, c20[0], c20[1], c300[0], c300[1])
        for value, exact, shown in zip(mine, _oracle_cells(phase), SHOWN[phase]):
            exact_ok += math.isclose(value, exact, rel_tol=1e-15)
            if shown is not None:
                shown_total += 1
                err = abs(value - shown) / shown
                worst = max(worst, err)
                shown_ok += err <= 0.02
    ok = exact_ok == 25 and shown_ok == shown_total
    assert record("1", ok, f"{exact_ok}/25 cells exact, {shown_ok}/{shown_total} displayed cells "
                           f"within 2% (worst {100 * worst:.2f}%)")


# ---------------------------------------------------------------- criterion 2

def test_criterion_2_pathloss(record):
    cases = [
        (pathloss_los(100, 28), 32.4 + 21 * math.log10(100) + 20 * math.log10(28), 103.343),
        (pathloss_los(10, 28), 32.4 + 21 * math.log10(10) + 20 * math.log10(28), 82.343),
        (pathloss_los(1, 1), 32.4, 32.4),
        (pathloss_nlos(100, 28), 32.4 + 31.9 * math.log10(100) + 20 * math.log10(28), 125.143),
    ]
    errs = [abs(got - closed) for got, closed, _ in cases]
    shown = [abs(got - disp) for got, _, disp in cases]
    ok = max(errs) <= 1e-9 and max(shown) < 5e-4
    assert record("2", ok, f"max |closed form - model| = {max(errs):.1e} dB over {len(cases)} cases")


# ------------------------------------------------------------ criterion 3a-3d

N_USERS = (5, 10, 15, 20)
SEEDS = range(10)
CURVES = [
    (Discipline.RoundRobin, TrafficKind.VR, Connectivity.Single),
    (Discipline.ProportionalFair, TrafficKind.VR, Connectivity.Single),
    (Discipline.RoundRobin, TrafficKind.TraditionalVideo, Connectivity.Single),
    (Discipline.ProportionalFair, TrafficKind.TraditionalVideo, Connectivity.Single),
    (Discipline.RoundRobin, TrafficKind.VR, Connectivity.Dual),
    (Discipline.ProportionalFair, TrafficKind.VR, Connectivity.Dual),
]


@pytest.fixture(scope="module")
def sweep():
    """(curve, n) -> list over seeds of (success_pct, best_in_time per user)."""
    base = SimConfig(duration_s=10.0, warmup_s=1.0)
    out = {}
    for curve in CURVES:
        disc, kind, conn = curve
        for n in N_USERS:
            runs = []
            for seed in SEEDS:
                cfg = replace(base, n_users=n, seed=seed, flow=FlowConfig().with_kind(kind),
                              scheduler=SchedulerConfig(disc, connectivity=conn))
                sim = build(cfg)
                m = sim.run()
                runs.append((m.success_pct, [list(b) for b in sim.best_in_time]))
            out[curve, n] = runs
    return out


def _mean(runs):
    return float(np.mean([r[0] for r in runs]))


def _label(curve):
    return "/".join(x.value for x in curve)


def test_criterion_3a_monotone_load(sweep, record):
    bad = []
    for curve in CURVES:
        means = [_mean(sweep[curve, n]) for n in N_USERS]
        for a, b, n in zip(means, means[1:], N_USERS[1:]):
            if b > a + 1.0:
                bad.append(f"{_label(curve)} rises {b - a:.2f} pp at n={n}")
    summary = "; ".join(f"{_label(c)}: " + ",".join(f"{_mean(sweep[c, n]):.1f}" for n in N_USERS)
                        for c in CURVES)
    assert record("3a", not bad, "non-increasing within 1 pp" if not bad else "; ".join(bad)), summary


def test_criterion_3b_traffic_ordering(sweep, record):
    bad, margin = [], math.inf
    for disc in (Discipline.RoundRobin, Discipline.ProportionalFair):
        for n in N_USERS:
            tv = _mean(sweep[(disc, TrafficKind.TraditionalVideo, Connectivity.Single), n])
            vr = _mean(sweep[(disc, TrafficKind.VR, Connectivity.Single), n])
            margin = min(margin, tv - vr)
            if tv < vr:
                bad.append(f"{disc.value} n={n}: TV {tv:.2f} < VR {vr:.2f}")
    assert record("3b", not bad, f"TV >= VR at all 8 points (min margin {margin:.3f} pp)"
                  if not bad else "; ".join(bad))


def test_criterion_3c_dual_superset(sweep, record):
    violations, checked, gains = 0, 0, []
    for disc in (Discipline.RoundRobin, Discipline.ProportionalFair):
        for n in N_USERS:
            single = sweep[(disc, TrafficKind.VR, Connectivity.Single), n]
            dual = sweep[(disc, TrafficKind.VR, Connectivity.Dual), n]
            for (_, s_sets), (_, d_sets) in zip(single, dual):
                checked += 1
                if any(d < s for su, du in zip(s_sets, d_sets) for s, d in zip(su, du)):
                    violations += 1
            gains.append(_mean(dual) - _mean(single))
    ok = violations == 0 and min(gains) >= 0
    assert record("3c", ok, f"{checked - violations}/{checked} seeded runs are supersets; "
                            f"mean gain {min(gains):.2f}..{max(gains):.2f} pp")


def test_criterion_3d_scheduler_similarity(sweep, record):
    worst = 0.0
    for kind, conn in ((TrafficKind.VR, Connectivity.Single),
                       (TrafficKind.TraditionalVideo, Connectivity.Single),
                       (TrafficKind.VR, Connectivity.Dual)):
        for n in N_USERS:
            rr = _mean(sweep[(Discipline.RoundRobin, kind, conn), n])
            pf = _mean(sweep[(Discipline.ProportionalFair, kind, conn), n])
            worst = max(worst, abs(pf - rr))
    assert record("3d", worst <= 5.0, f"max |PF - RR| = {worst:.2f} pp")


# ---------------------------------------------------------------- criterion 4

def test_criterion_4_oracle_equivalence(record):
    rng = np.random.default_rng(20240611)
    mismatches = 0
    for _ in range(100):
        m = random_micro(rng)
        mine, lat = engine_side(m)
        ref, lat_ref = oracle_side(m)
        if mine != ref or len(lat) != len(lat_ref) or any(
                abs(a - b) > 1e-12 for a, b in zip(lat, lat_ref)):
            mismatches += 1
    assert record("4", mismatches == 0, f"{100 - mismatches}/100 micro-scenarios identical to "
                                        f"the brute-force reference")


# ---------------------------------------------------------------- criterion 5

def test_criterion_5_conservation_and_determinism(tmp_path, record):
    cfg = SimConfig(duration_s=0.5, warmup_s=0.1, n_users=10, seed=2,
                    scheduler=SchedulerConfig("PF", connectivity="Dual"))
    sim = build(cfg)
    broken = 0
    for _ in range(sim.n_tti):
        sim.step()
        for band in sim.ledger().values():
            broken += band["released"] != (band["served"] + band["dropped"]
                                           + band["cancelled"] + band["pending"])
    ini = tmp_path / "det.ini"
    ini.write_text("[experiment]\nn_users = 3, 6\ncurves = RR/VR/Single, PF/VR/Dual, "
                   "PF/TraditionalVideo/Single\nseeds = 0-1\nper_run_output = true\n"
                   "[sim]\nduration_s = 0.3\nwarmup_s = 0.05\n")
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}.csv"
        subprocess.run([sys.executable, "-m", "vrcell", "run", str(ini), "--out", str(out)],
                       check=True, capture_output=True)
        outs.append((out.read_bytes(), out.with_name(f"run{k}.runs.csv").read_bytes()))
    identical = outs[0] == outs[1]
    ok = broken == 0 and identical
    assert record("5", ok, f"ledger balanced at {sim.n_tti} TTIs ({broken} violations); "
                           f"CSV outputs byte-identical: {identical}")


# ---------------------------------------------------------------- criterion 6

def test_criterion_6_geometry(record):
    rng = np.random.default_rng(6)
    sym = parity = agree = 0
    n = 10_000
    for _ in range(n):
        poly = star_polygon(rng)
        bmap = BuildingMap([poly], (-50, -50, 150, 150))
        a, b = rng.uniform(-20, 120, 2), rng.uniform(-20, 120, 2)
        c_ab, d_ab = path_profile(a, b, bmap)
        c_ba, d_ba = path_profile(b, a, bmap)
        sym += c_ab == c_ba and abs(d_ab - d_ba) <= 1e-7
        in_a, in_b = bmap.indoor(np.array([a, b]))
        parity += c_ab % 2 == int(in_a != in_b)
        c_ref, d_ref = brute_profile(a, b, [poly])
        agree += c_ab == c_ref and abs(d_ab - d_ref) <= 1e-6
    ok = sym == parity == agree == n
    assert record("6", ok, f"symmetry {sym}/{n}, parity {parity}/{n}, brute-force agreement "
                           f"{agree}/{n}")
