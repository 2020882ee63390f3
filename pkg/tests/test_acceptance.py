"""Acceptance suite: the eight exit criteria, one pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as the
criteria complete.  Every tolerance is pinned here; nothing is deferred to
later calibration.
"""

import math
import time

import numpy as np
import pytest

from otsim import Netlist, Dc, Triangle, default_params, dynamic_iv, transient
from otsim.gates import GateKind, LogicEncoding, truth_table
from otsim.imaging import BinaryImage, GrayImage, binarize, reference_edges
from otsim.pipeline import StreamSettings, detect_edges, fit_linear, mismatch_report, sweep_gradient, xor_stream_circuit
from otsim.energy import OTS_FEATURE_SIZE, ScalingLaw, scale_energy, sobel_op_count, table1_report, xor_op_count
from otsim.rig import C_PAR, R_BIAS, R_SERIES, measurement_netlist, rate_sweep, run_oscillator

DT_LOGIC = 50e-9
DT_DEVICE = 10e-9


def report(criterion: int, ok: bool, detail: str) -> None:
    print(f"[criterion {criterion}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


def test_c1_truth_tables_within_60s():
    t0 = time.perf_counter()
    kinds = [GateKind.AND, GateKind.OR, GateKind.NAND, GateKind.NOR, GateKind.XOR,
             GateKind.HALF_ADDER, GateKind.FULL_ADDER]
    mismatches = []
    rows_total = 0
    for kind in kinds:
        table = truth_table(kind, dt=DT_LOGIC)
        rows_total += len(table.rows)
        mismatches += [
            (kind.value, r.inputs, r.expected, r.measured) for r in table.rows if not r.ok
        ]
    elapsed = time.perf_counter() - t0
    ok = not mismatches and elapsed < 60.0
    report(1, ok, f"{rows_total} truth-table rows, {len(mismatches)} mismatches, "
                  f"{elapsed:.1f} s (< 60 s) {mismatches if mismatches else ''}")


def test_c2_dcaap_cascade():
    table = truth_table(GateKind.DCAAP_CASCADE, dt=DT_LOGIC)
    rows = {r.inputs: r.measured for r in table.rows}
    cascade_ok = all(
        rows[(e1, e2, i)] == (e1 ^ e2, (e1 ^ e2) ^ i)
        for e1 in (0, 1) for e2 in (0, 1) for i in (0, 1)
    )
    quoted_ok = (
        rows[(1, 1, 0)] == (0, 0) and rows[(1, 0, 1)] == (1, 0) and rows[(0, 1, 1)] == (1, 0)
    )
    report(2, cascade_ok and quoted_ok,
           f"8/8 rows satisfy y1 = ex1^ex2, y2 = y1^inh; quoted tuples hold: {quoted_ok}")


def _oracle_period(v_in: float, p) -> float:
    r_path = p.r_on + R_SERIES
    v_reset = p.v_hold + p.i_hold * r_path
    t_charge = R_BIAS * C_PAR * math.log((v_in - v_reset) / (v_in - p.v_th))
    g_d, g_on = 1.0 / R_BIAS, 1.0 / r_path
    v_eq = (v_in * g_d + p.v_hold * g_on) / (g_d + g_on)
    t_disc = (C_PAR / (g_d + g_on)) * math.log((p.v_th - v_eq) / (v_reset - v_eq))
    return t_charge + t_disc + p.tau_on + p.tau_off


def test_c3_oscillator_period_and_rate_coding():
    p = default_params()
    res = run_oscillator(4.0, 300e-6, p=p, dt=DT_DEVICE)
    periods = np.diff(res.spikes.spike_times)
    sim_period = float(np.mean(periods))
    oracle = _oracle_period(4.0, p)
    period_err = abs(sim_period - oracle) / oracle
    periodic = np.ptp(periods) / sim_period < 0.05
    rates = [r for _, r in rate_sweep((3.3, 3.8, 4.3, 4.8, 5.3), 300e-6, p=p, dt=DT_DEVICE)]
    increasing = all(b > a for a, b in zip(rates, rates[1:]))
    ok = res.spikes.count >= 10 and period_err <= 0.15 and periodic and increasing
    report(3, ok,
           f"{res.spikes.count} spikes (>= 10), period {sim_period * 1e6:.2f} us vs oracle "
           f"{oracle * 1e6:.2f} us ({period_err * 100:.1f}% <= 15%), "
           f"rates strictly increasing over 5-point sweep: {increasing}")


def test_c4_ndr_snapback():
    p = default_params()
    net = measurement_netlist(0.0, p)
    pts = dynamic_iv(net, Triangle(2.0 * p.v_th, 50e-6, 50e-6), "OTS1", dt=DT_DEVICE)
    snap = [
        k for k in range(1, len(pts))
        if pts[k][1] - pts[k - 1][1] > 1e-5 and pts[k][0] - pts[k - 1][0] < -1e-3
    ]
    report(4, bool(snap),
           f"triangular ramp to {2 * p.v_th:.1f} V: {len(snap)} consecutive sample pair(s) "
           f"with di > 0 and dv < 0")


def _gradient_image_32() -> GrayImage:
    # deterministic photo-like blend of smooth blobs and a diagonal ramp
    y, x = np.indices((32, 32)).astype(np.float64)
    v = 127.5 + 70.0 * np.sin(2 * np.pi * x / 16.0) * np.cos(2 * np.pi * y / 16.0) + 1.5 * (x + y - 31.0)
    return GrayImage(np.clip(np.round(v), 0, 255).astype(np.uint8))


def test_c5_edge_detection_zero_errors_within_5min():
    t0 = time.perf_counter()
    settings = StreamSettings(dt=DT_LOGIC)
    cases = {
        "uniform 16x16": BinaryImage(np.ones((16, 16), dtype=np.uint8)),
        "checkerboard 8x8": BinaryImage((np.indices((8, 8)).sum(axis=0) % 2).astype(np.uint8)),
        "gradient 32x32 @128": binarize(_gradient_image_32(), 128),
    }
    totals = {}
    for label, img in cases.items():
        edges = detect_edges(img, settings=settings)
        totals[label] = mismatch_report(edges, reference_edges(img))["total"]
    elapsed = time.perf_counter() - t0
    ok = all(v == 0 for v in totals.values()) and elapsed < 300.0
    report(5, ok, f"mismatched pixels {totals}, {elapsed:.1f} s (< 300 s)")


def test_c6_gradient_rate_coding():
    deltas = list(range(0, 256, 16)) + [255]
    samples = sweep_gradient(deltas, window=1e-3, dt=DT_LOGIC)
    rates = [s.rate for s in samples]
    nondecreasing = all(b >= a for a, b in zip(rates, rates[1:]))
    floor_exists = rates[0] == 0.0 and any(r == 0.0 for r in rates[1:]) and rates[-1] > 0.0
    fit = fit_linear(samples)
    ok = nondecreasing and floor_exists and fit.r2 >= 0.95 and fit.floor > 0.0
    report(6, ok,
           f"rates nondecreasing: {nondecreasing}; detection floor at fit {fit.floor:.1f} "
           f"contrast units (slope {fit.slope / 1e3:.2f} kHz/unit, reported not asserted); "
           f"R^2 = {fit.r2:.4f} >= 0.95")


def test_c7_energy_arithmetic():
    report7 = table1_report(512, 512, node=16e-9, exponent=1.6)
    totals = {r.label.split(" ")[0]: r.total * 1e6 for r in report7.rows if r.source == "PaperTable"}
    expected = {"K20": 1368.0, "V100": 354.0, "H100": 94.0, "Xeon": 9772.0, "OTS-XOR": 245.0}
    totals_ok = all(abs(totals[k] - v) <= 1.0 for k, v in expected.items())
    counts_ok = sobel_op_count(512, 512) == 4_718_592 and xor_op_count(512, 512) == 524_288
    per_op_ok = {r.label.split(" ")[0]: r.energy_per_op for r in report7.rows if r.source == "PaperTable"} == {
        "K20": 290e-12, "V100": 75e-12, "H100": 20e-12, "Xeon": 2071e-12, "OTS-XOR": 467e-12,
    }
    identity_ok = scale_energy(ScalingLaw(), OTS_FEATURE_SIZE) == pytest.approx(467e-12, rel=1e-12)
    note_ok = any("0.356" in n and "0.0032" in n for n in report7.annotations)
    ok = totals_ok and counts_ok and per_op_ok and identity_ok and note_ok
    report(7, ok,
           f"per-op energies exact: {per_op_ok}; totals within 1 uJ: "
           f"{ {k: round(v, 2) for k, v in totals.items()} }; op counts exact: {counts_ok}; "
           f"scaling identity exact: {identity_ok}; 16 nm inconsistency annotated: {note_ok}")


def test_c8_solver_validation():
    # RC analytic accuracy at dt = 10 ns
    net = Netlist()
    net.add_source("VIN", "in", "0", Dc(1.0))
    net.add_resistor("R1", "in", "out", 1e3)
    net.add_capacitor("C1", "out", "0", 1e-9)
    tr = transient(net, 5e-6, DT_DEVICE)
    idx = np.searchsorted(tr.times, 1e-6)
    rc_err = abs(tr.voltage("out")[idx] - (1 - math.exp(-1))) / (1 - math.exp(-1))

    # Kirchhoff residual across representative acceptance runs (the engine
    # aborts any step above 1e-9 A, so completing is itself the guarantee;
    # the recorded maxima make it visible)
    residuals = [tr.kcl_residual]
    osc = run_oscillator(4.0, 100e-6, dt=DT_DEVICE)
    residuals.append(osc.trace.kcl_residual)

    # bit determinism across repeated invocations
    a = transient(net, 2e-6, DT_DEVICE)
    b = transient(net, 2e-6, DT_DEVICE)
    deterministic = np.array_equal(a.voltages, b.voltages) and all(
        np.array_equal(a.currents[k], b.currents[k]) for k in a.currents
    )

    # and across parallelism degrees
    t1 = truth_table(GateKind.XOR, dt=DT_LOGIC, n_jobs=1).to_json()
    t2 = truth_table(GateKind.XOR, dt=DT_LOGIC, n_jobs=3).to_json()
    rng = np.random.default_rng(8)
    sa = rng.integers(0, 2, 16).tolist()
    sb = rng.integers(0, 2, 16).tolist()
    s1 = xor_stream_circuit(sa, sb, settings=StreamSettings(segment_clocks=4, n_jobs=1))
    s2 = xor_stream_circuit(sa, sb, settings=StreamSettings(segment_clocks=4, n_jobs=4))
    parallel_ok = t1 == t2 and s1 == s2

    ok = rc_err < 0.01 and max(residuals) < 1e-9 and deterministic and parallel_ok
    report(8, ok,
           f"RC error {rc_err * 100:.2f}% (< 1%); max nodal residual "
           f"{max(residuals):.2e} A (< 1e-9); bit-deterministic repeats: {deterministic}; "
           f"parallelism-invariant: {parallel_ok}")
