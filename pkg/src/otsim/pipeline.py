"""Image edge detection through the XOR circuit, and rate-coded gradient
estimation.

A binary image and its one-pixel-shifted opponent are flattened row-major
and streamed as synchronized pulse trains into the XOR gate.  The switch
conducts only while the two pulses disagree, so counting conduction bursts
per clock period recovers the XOR of the two bit streams; capacitive feed-
through from coincident pulse edges carries no device current and is
therefore invisible to the counter.

Long streams are simulated in independent segments with the circuit state
reset at segment boundaries; boundaries fall between clock periods so no
pixel pair ever straddles a reset.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .device import OtsParams, default_params
from .engine import count_crossings, transient
from .gates import GateKind, LogicEncoding, build_gate
from .imaging import BinaryImage, ShiftDirection, reference_edges, shift
from .netlist import Netlist
from .waveforms import Dc


@dataclass(frozen=True)
class PulseTrain:
    """Return-to-zero pulse encoding of a bit sequence: one clock period per
    bit, pulsing to v_high for `width` when the bit is 1."""

    bits: tuple[int, ...]
    width: float = 5e-6
    period: float = 10e-6
    v_high: float = 5.0
    v_low: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 < self.width < self.period):
            raise ValueError("require 0 < width < period")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("bits must be 0/1")
        object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))

    @property
    def duration(self) -> float:
        return len(self.bits) * self.period

    def __call__(self, t: float) -> float:
        k = int(t // self.period)
        if k < 0 or k >= len(self.bits):
            return self.v_low
        if self.bits[k] and (t - k * self.period) < self.width:
            return self.v_high
        return self.v_low


@dataclass(frozen=True)
class GradientSample:
    delta_c: float  # contrast difference, 0..255
    rate: float     # firing rate, Hz

    def __post_init__(self) -> None:
        if self.delta_c < 0 or self.rate < 0:
            raise ValueError("delta_c and rate must be non-negative")


@dataclass(frozen=True)
class LinearFit:
    slope: float      # Hz per contrast unit
    intercept: float  # Hz
    floor: float      # contrast units, clamped >= 0
    r2: float


@dataclass(frozen=True)
class StreamSettings:
    """Knobs of the circuit stream decoder."""

    pulse_width: float = 5e-6
    clock_period: float = 10e-6
    dt: float = 50e-9
    count_threshold: int = 1       # spikes per clock period for an output 1
    segment_clocks: int = 256      # state reset between segments (<= 4096)
    current_threshold: float = 3e-4  # conduction-burst detection level, A
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if not (0 < self.segment_clocks <= 4096):
            raise ValueError("segment_clocks must be in 1..4096")
        if self.count_threshold < 1:
            raise ValueError("count_threshold must be >= 1")


def _xor_stream_netlist(spec_a, spec_b, p: OtsParams) -> Netlist:
    """The XOR gate template driven by arbitrary source waveforms."""
    circuit = build_gate(GateKind.XOR, p)
    net = circuit.net
    from .engine import _with_source_spec  # same element set, swapped drive

    net = _with_source_spec(net, "S_S1", spec_a)
    net = _with_source_spec(net, "S_S2", spec_b)
    return net


def _count_bursts_per_clock(times: np.ndarray, current: np.ndarray,
                            n_clocks: int, settings: StreamSettings) -> list[int]:
    events = count_crossings(times, np.abs(current), settings.current_threshold,
                             max(4.0 * settings.dt, 2e-7))
    counts = [0] * n_clocks
    for ts in events:
        k = int(ts // settings.clock_period)
        if 0 <= k < n_clocks:
            counts[k] += 1
        elif k == n_clocks:  # event exactly at the final sample
            counts[-1] += 1
    return counts


def _run_segment(bits_a: tuple[int, ...], bits_b: tuple[int, ...],
                 enc: LogicEncoding, p: OtsParams,
                 settings: StreamSettings) -> list[int]:
    spec_a = PulseTrain(bits_a, settings.pulse_width, settings.clock_period, enc.v_high)
    spec_b = PulseTrain(bits_b, settings.pulse_width, settings.clock_period, enc.v_high)
    net = _xor_stream_netlist(spec_a, spec_b, p)
    tr = transient(net, spec_a.duration, settings.dt)
    counts = _count_bursts_per_clock(tr.times, tr.currents["OTS1"], len(bits_a), settings)
    return [1 if c >= settings.count_threshold else 0 for c in counts]


def xor_stream_circuit(bits_a, bits_b, enc: LogicEncoding | None = None,
                       p: OtsParams | None = None,
                       settings: StreamSettings | None = None) -> list[int]:
    """Bitwise XOR of two equal-length bit sequences, computed by streaming
    them as pulse trains through the XOR circuit and counting conduction
    bursts in each clock period."""
    bits_a = tuple(int(b) for b in bits_a)
    bits_b = tuple(int(b) for b in bits_b)
    if len(bits_a) != len(bits_b):
        raise ValueError(f"input lengths differ: {len(bits_a)} vs {len(bits_b)}")
    if not bits_a:
        return []
    enc = enc or LogicEncoding()
    p = p or default_params()
    settings = settings or StreamSettings()

    seg = settings.segment_clocks
    chunks = [(bits_a[i : i + seg], bits_b[i : i + seg]) for i in range(0, len(bits_a), seg)]
    if settings.n_jobs > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=settings.n_jobs) as pool:
            parts = list(pool.map(lambda ab: _run_segment(ab[0], ab[1], enc, p, settings), chunks))
    else:
        parts = [_run_segment(a, b, enc, p, settings) for a, b in chunks]
    out: list[int] = []
    for part in parts:
        out.extend(part)
    return out


def detect_edges(img: BinaryImage, enc: LogicEncoding | None = None,
                 p: OtsParams | None = None,
                 settings: StreamSettings | None = None) -> BinaryImage:
    """Circuit-driven edge map: XOR against the horizontal and vertical
    opponents, then a pixel-wise OR of the two directional edge maps."""
    if img.width < 2 or img.height < 2:
        raise ValueError("edge detection needs at least a 2x2 image")
    x0 = img.flatten()
    xh = shift(img, ShiftDirection.HORIZONTAL).flatten()
    xv = shift(img, ShiftDirection.VERTICAL).flatten()
    e_h = xor_stream_circuit(x0, xh, enc, p, settings)
    e_v = xor_stream_circuit(x0, xv, enc, p, settings)
    shape = (img.height, img.width)
    eh = np.array(e_h, dtype=np.uint8).reshape(shape)
    ev = np.array(e_v, dtype=np.uint8).reshape(shape)
    return BinaryImage(eh | ev)


def mismatch_report(result: BinaryImage, reference: BinaryImage) -> dict:
    """Pixel coordinates where the circuit output differs from the oracle."""
    if result.bits.shape != reference.bits.shape:
        raise ValueError("image shapes differ")
    ys, xs = np.nonzero(result.bits != reference.bits)
    return {
        "total": int(len(xs)),
        "mismatches": [(int(x), int(y)) for x, y in zip(xs, ys)],
    }


def verify_against_oracle(img: BinaryImage, enc: LogicEncoding | None = None,
                          p: OtsParams | None = None,
                          settings: StreamSettings | None = None) -> dict:
    """Run both detectors and report their disagreement (must be empty)."""
    circuit = detect_edges(img, enc, p, settings)
    oracle = reference_edges(img)
    return mismatch_report(circuit, oracle)


# ---------------------------------------------------------------------------
# gradient estimation
# ---------------------------------------------------------------------------


def gradient_rate(c_a: float, c_b: float, window: float = 1e-3,
                  p: OtsParams | None = None,
                  enc: LogicEncoding | None = None, *,
                  dt: float = 50e-9,
                  settle: float = 50e-6,
                  current_threshold: float = 3e-4) -> GradientSample:
    """Firing rate of the XOR circuit when the two pixels are applied as
    sustained analog levels v_high*(c/255); the rate encodes the contrast
    difference."""
    for c in (c_a, c_b):
        if not (0 <= c <= 255):
            raise ValueError(f"contrast {c} outside [0, 255]")
    if window <= settle:
        raise ValueError("window must exceed the settle interval")
    enc = enc or LogicEncoding()
    p = p or default_params()
    net = _xor_stream_netlist(Dc(enc.v_high * c_a / 255.0), Dc(enc.v_high * c_b / 255.0), p)
    tr = transient(net, window, dt)
    mask = tr.times >= settle
    events = count_crossings(tr.times[mask], np.abs(tr.currents["OTS1"][mask]),
                             current_threshold, max(4.0 * dt, 2e-7))
    rate = len(events) / (window - settle)
    return GradientSample(abs(c_a - c_b), rate)


def sweep_gradient(deltas, window: float = 1e-3, p: OtsParams | None = None,
                   enc: LogicEncoding | None = None, **kw) -> list[GradientSample]:
    return [gradient_rate(float(d), 0.0, window, p, enc, **kw) for d in deltas]


def fit_linear(samples: list[GradientSample]) -> LinearFit:
    """Least-squares line through the nonzero-rate samples; the detection
    floor is the x-intercept clamped to zero."""
    pts = [(s.delta_c, s.rate) for s in samples if s.rate > 0.0]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 nonzero-rate samples, got {len(pts)}")
    x = np.array([q[0] for q in pts])
    y = np.array([q[1] for q in pts])
    if np.ptp(x) == 0.0:
        raise ValueError("degenerate sweep: all samples at one contrast difference")
    a = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(a, y, rcond=None)
    pred = a @ np.array([slope, intercept])
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    floor = max(0.0, -intercept / slope) if slope != 0 else 0.0
    if not math.isfinite(floor):
        floor = 0.0
    return LinearFit(float(slope), float(intercept), float(floor), float(r2))
