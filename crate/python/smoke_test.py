#!/usr/bin/env python3
"""Smoke test for the `franson` extension module.

Builds nothing itself: it locates the cdylib produced by
`cargo build -p franson-py` under target/, copies it next to a temp dir as
`franson.so`, imports it, and exercises the main types and operations.
"""

import math
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def locate_cdylib():
    candidates = []
    for profile in ("debug", "release"):
        for name in ("libfranson.so", "libfranson.dylib", "franson.dll"):
            p = ROOT / "target" / profile / name
            if p.exists():
                candidates.append(p)
    if not candidates:
        sys.exit(
            "extension not found; run `cargo build -p franson-py` first "
            f"(searched under {ROOT / 'target'})"
        )
    return max(candidates, key=lambda p: p.stat().st_mtime)


def main():
    lib = locate_cdylib()
    tmp = tempfile.mkdtemp(prefix="franson-py-")
    shutil.copy2(lib, pathlib.Path(tmp) / "franson.so")
    sys.path.insert(0, tmp)
    import franson

    # Reference state round trip and basic closed-form checks.
    state = franson.GaussianBiphoton.reference()
    assert abs(state.rho + 0.9942) < 1e-12
    widths = state.spectral_widths()
    assert abs(widths["marginal_s"] - state.sigma_s) < 1e-12
    temporal = state.temporal_widths()
    assert abs(temporal["correlation"] + widths["correlation"]) < 1e-12

    # Balanced interferometer leaves the JTI unchanged.
    ident = franson.FransonSettings.identity()
    assert abs(franson.jti_after(ident, state, 0.1, -0.2) - state.jti_value(0.1, -0.2)) < 1e-12

    # A bright sum-phase fringe beats a dark one.
    omega_s0, omega_i0 = state.omega_s0, state.omega_i0
    arm_s = franson.InterferometerArm.with_fringe_phase(0.82, 0.0, omega_s0)
    bright = franson.FransonSettings(
        arm_s, franson.InterferometerArm.with_fringe_phase(0.91, 0.0, omega_i0)
    )
    dark = franson.FransonSettings(
        arm_s, franson.InterferometerArm.with_fringe_phase(0.91, math.pi, omega_i0)
    )
    assert franson.coincidence_rate(bright, state) > franson.coincidence_rate(dark, state)
    v = franson.predicted_visibility(bright, state, True)
    assert 0.9 < v <= 1.0, v
    assert franson.background_visibility(v, 5.5, 0.8) < v

    # Gated detection with the reference response blurs but keeps the fringe.
    response = franson.ResponseModel.reference()
    assert franson.gated_coincidence_rate(
        bright, state, response, -0.41, -0.455
    ) > franson.gated_coincidence_rate(dark, state, response, -0.41, -0.455)

    # Simulated fringe scan is deterministic and fits back its visibility.
    model = franson.CountModel(pair_rate_peak=67.26, background_rate=0.8, dwell=120.0, seed=1)
    phases = [(2 * math.pi * k / 24, 0.0) for k in range(24)]
    records = franson.phase_fringe_scan(state, 0.82, 0.91, phases, model, response)
    again = franson.phase_fringe_scan(state, 0.82, 0.91, phases, model, response)
    assert [r.counts_cc for r in records] == [r.counts_cc for r in again]
    fit = franson.fit_fringe([(r.phi_s + r.phi_i, float(r.counts_cc)) for r in records])
    assert 0.80 < fit["visibility"] < 0.92, fit

    # CHSH on the published count table.
    table = franson.bell_result_from_counts(franson.table2_counts())
    assert abs(table.s - 2.459) < 0.001, table.s
    assert table.violation_sigmas() > 15

    # Simulated Bell run violates the classical bound too.
    bell_model = franson.CountModel(
        pair_rate_peak=46.73, background_rate=0.479, dwell=200.0, seed=1
    )
    sim = franson.bell_result_from_records(
        franson.bell_experiment(state, 0.82, 0.91, bell_model, response)
    )
    assert sim.s > 2.0, sim.s

    # Unit conversions round trip.
    assert abs(franson.angfreq_to_wavelength(franson.wavelength_to_angfreq(827.4)) - 827.4) < 1e-9

    print("smoke test passed:", lib)


if __name__ == "__main__":
    main()
