#!/usr/bin/env python3
"""Refit the MCU current model of the default calibration profile.

The platform's published results are relative savings, not current tables, so
the shipped constants cannot be transcribed from anywhere; they are fitted.
This script documents and reproduces that calibration. It drives the expcli
binary with candidate profiles and least-squares matches the headline targets:

    sleep baseline saving, 8rc vs 80pll                0.45
    poll loop saving, 24pll vs 80pll                   0.19
    poll loop extra direct-source saving at 24 MHz     0.05
    poll request window energy ratio, 24pll / 80pll    0.833
    idle superframe current ratio, 24pll / 80pll       0.48
    run current at 80 MHz pll (absolute scale anchor)  5.0 mA

plus two hinge penalties from the operating point optimizer: the compute
benchmark's energy-delay argmin must stay at 80pll and its energy argmin at
24rc. Those shape constraints pin the high-rail direct-source slope, which no
headline saving touches.

Free parameters: the two rail base currents, the four per-source slopes, and
the sleep floor. Everything else in the profile (radio table, transition
model, level grid, voltage rule) is a declared platform constant and is taken
from the template profile.

The targets do not pin all seven parameters uniquely; a valley trades base
current against slope. Any point in it reproduces every published claim (the
fitted output passes the full selftest), and the shipped default is one such
point, chosen with round anchor currents.

Usage:
    tools/fit_profile.py [--expcli build/tools/expcli]
                         [--template data/default_profile.json]
                         [--out fitted_profile.json]
"""

import argparse
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

PARAMS = [
    "mcu_base_low_ma",
    "mcu_base_high_ma",
    "mcu_slope_rc_low_ma_per_mhz",
    "mcu_slope_rc_high_ma_per_mhz",
    "mcu_slope_pll_low_ma_per_mhz",
    "mcu_slope_pll_high_ma_per_mhz",
    "lpm_current_ma",
]

TARGETS = {
    "sleep_saving": 0.45,
    "poll_slow_saving": 0.19,
    "poll_source_saving": 0.05,
    "request_ratio": 0.833,
    "dsme_rel": 0.48,
    "run_current_80_ma": 5.0,
}

HINGE_MARGIN = 1.05  # argmin wins by at least 5 percent


def run_cli(expcli, profile_path, out_dir, *args):
    subprocess.run(
        [str(expcli), "--profile", str(profile_path), "--out", str(out_dir), *args],
        check=True,
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )


def measure(expcli, profile, workdir):
    """One full observation of every fitted target for one candidate profile."""
    profile_path = workdir / "candidate.json"
    profile_path.write_text(json.dumps(profile, indent=2))

    run_cli(expcli, profile_path, workdir, "baseline", "--levels", "8rc,80pll")
    rows = json.loads((workdir / "baseline_report.json").read_text())["rows"]
    cur = {(r["radio_idle"], r["clock_gating"], r["level"]): r["average_current_ma"]
           for r in rows}

    def poll(level):
        run_cli(expcli, profile_path, workdir, "trace", "--preset", "poll-loop",
                "--levels", level)
        rep = json.loads((workdir / "trace_poll-loop_report.json").read_text())
        req = rep["per_request_j"]
        return rep["average_current_ma"], sum(req) / len(req)

    i80, e80 = poll("80pll")
    i24, e24 = poll("24")
    i24rc, _ = poll("24rc")

    run_cli(expcli, profile_path, workdir, "dsme", "--gts", "0", "--levels", "24,80")
    drows = json.loads((workdir / "dsme_report.json").read_text())["rows"]
    dsme_rel = {r["level"]: r["rel_current"] for r in drows}["24pll"]

    run_cli(expcli, profile_path, workdir, "optimize", "--builtin", "fft")
    orows = json.loads((workdir / "optimize_fft_report.json").read_text())["rows"]
    edp = {r["level"]: r["edp_js"] for r in orows}
    energy = {r["level"]: r["energy_j"] for r in orows}

    return {
        "sleep_saving": 1.0 - cur[(False, True, "8rc")] / cur[(False, True, "80pll")],
        "poll_slow_saving": 1.0 - i24 / i80,
        "poll_source_saving": (i24 - i24rc) / i80,
        "request_ratio": e24 / e80,
        "dsme_rel": dsme_rel,
        "run_current_80_ma": cur[(False, False, "80pll")],
        "edp": edp,
        "energy": energy,
    }


def unpack(x):
    """Transformed coordinates keep every candidate inside the validity rules:
    positive currents, base_high >= base_low, pll slope >= rc slope per rail."""
    b_low, d_base, s_rc_low, s_rc_high, d_pll_low, d_pll_high, lpm = x
    return {
        "mcu_base_low_ma": b_low,
        "mcu_base_high_ma": b_low + d_base,
        "mcu_slope_rc_low_ma_per_mhz": s_rc_low,
        "mcu_slope_rc_high_ma_per_mhz": s_rc_high,
        "mcu_slope_pll_low_ma_per_mhz": s_rc_low + d_pll_low,
        "mcu_slope_pll_high_ma_per_mhz": s_rc_high + d_pll_high,
        "lpm_current_ma": lpm,
    }


def residuals(x, expcli, template, workdir, trace):
    profile = dict(template)
    profile.update(unpack(x))
    try:
        m = measure(expcli, profile, workdir)
    except subprocess.CalledProcessError:
        return np.full(8, 10.0)  # rejected profile: push the optimizer back

    r = [
        m["sleep_saving"] - TARGETS["sleep_saving"],
        m["poll_slow_saving"] - TARGETS["poll_slow_saving"],
        m["poll_source_saving"] - TARGETS["poll_source_saving"],
        m["request_ratio"] - TARGETS["request_ratio"],
        m["dsme_rel"] - TARGETS["dsme_rel"],
        (m["run_current_80_ma"] - TARGETS["run_current_80_ma"])
        / TARGETS["run_current_80_ma"],
    ]
    best_other_edp = min(v for k, v in m["edp"].items() if k != "80pll")
    r.append(max(0.0, HINGE_MARGIN * m["edp"]["80pll"] / best_other_edp - 1.0))
    best_other_energy = min(v for k, v in m["energy"].items() if k != "24rc")
    r.append(max(0.0, HINGE_MARGIN * m["energy"]["24rc"] / best_other_energy - 1.0))
    if trace:
        print("  eval: " + "  ".join(f"{v:+.4f}" for v in r))
    return np.array(r)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--expcli", default="build/tools/expcli")
    ap.add_argument("--template", default="data/default_profile.json")
    ap.add_argument("--out", default="fitted_profile.json")
    ap.add_argument("--trace", action="store_true", help="print every evaluation")
    args = ap.parse_args()

    expcli = Path(args.expcli)
    if not expcli.exists():
        sys.exit(f"expcli binary not found at {expcli}; build the project first")
    template = json.loads(Path(args.template).read_text())

    # Neutral start, far from the shipped constants on purpose.
    x0 = np.array([0.40, 0.05, 0.030, 0.060, 0.015, 0.005, 0.0020])
    lower = np.array([0.05, 0.0, 0.001, 0.001, 0.0, 0.0, 1e-4])
    upper = np.array([2.00, 0.5, 0.200, 0.200, 0.2, 0.2, 5e-3])

    with tempfile.TemporaryDirectory() as tmp:
        workdir = Path(tmp)
        fit = least_squares(
            residuals,
            x0,
            bounds=(lower, upper),
            args=(expcli, template, workdir, args.trace),
            diff_step=0.05,
            x_scale=np.maximum(np.abs(x0), 1e-3),
        )
        fitted = unpack(fit.x)
        profile = dict(template)
        profile.update(fitted)
        achieved = measure(expcli, profile, workdir)

    Path(args.out).write_text(json.dumps(profile, indent=2) + "\n")

    print(f"converged: {fit.status > 0}, cost {fit.cost:.3e}\n")
    print(f"{'parameter':36s} {'fitted':>10s} {'template':>10s}")
    for name in PARAMS:
        print(f"{name:36s} {fitted[name]:10.5f} {template[name]:10.5f}")
    print(f"\n{'target':24s} {'achieved':>9s} {'goal':>9s}")
    bad = []
    for key, goal in TARGETS.items():
        got = achieved[key]
        print(f"{key:24s} {got:9.4f} {goal:9.4f}")
        if abs(got - goal) > (0.02 if goal < 1 else 0.05 * goal):
            bad.append(key)
    print(f"\nwrote {args.out}")
    if bad:
        sys.exit("targets outside tolerance: " + ", ".join(bad))


if __name__ == "__main__":
    main()
