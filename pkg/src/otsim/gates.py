"""Gate circuit templates and the truth-table harness.

Every template realizes one operating principle: the voltage across its
threshold switch exceeds the switching threshold only for input
combinations where the gate's spiking output should be active.  The switch
is ambipolar, so a difference of either polarity fires it; that single
property yields XOR in one device and, referenced against a supply rail,
the inverting gates.

Topology notes (component values from the published circuit captions):

* AND   - plain resistive input divider; a lone high input divides down to
          half the logic swing and stays below threshold, both inputs high
          drive the full swing.  Fired bursts appear across the 5 kOhm
          ground-side sense resistor.
* OR    - same skeleton with a series diode per input; a low input is
          disconnected instead of loading the divider, so a single high
          input keeps nearly the full swing.
* NOR   - the input divider opposes a 5 V rail through the switch; only
          the all-low row leaves a full rail's difference across it.
* NAND  - inputs couple through reverse-oriented (catching) diodes that
          clamp the summing node low whenever any input is low, while the
          switch's far side is fed from the rail; both-high floats the
          summing node to the rail and quenches the difference.
* XOR   - the switch bridges the two input branches; a 1 nF capacitor
          tracks the second branch so only an instantaneous input
          difference fires it, and a 10 kOhm restore path recycles the
          stored charge, producing sustained relaxation spiking while the
          inputs differ.
* Half adder - an XOR branch (sum) and an AND branch (carry) share the
          input sources.
* dCaAP cascade / full adder - XOR/AND/OR cores chained through
          comparator buffers: a comparator pair converts the bipolar
          output kicks of a stage to rail pulses, a diode into an RC node
          holds their envelope, and (where the next stage needs a stiff
          drive) a second comparator regenerates clean logic levels.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .device import OtsParams, default_params
from .engine import Trace, count_crossings, transient
from .netlist import Netlist
from .waveforms import Dc


class GateKind(enum.Enum):
    AND = "and"
    OR = "or"
    NOR = "nor"
    NAND = "nand"
    XOR = "xor"
    HALF_ADDER = "halfadder"
    FULL_ADDER = "fulladder"
    DCAAP_CASCADE = "dcaap"

    @classmethod
    def parse(cls, name: str) -> "GateKind":
        key = name.strip().lower().replace("_", "").replace("-", "")
        for kind in cls:
            if kind.value == key:
                return kind
        raise ValueError(f"unknown gate kind {name!r} (choose from {[k.value for k in cls]})")


@dataclass(frozen=True)
class LogicEncoding:
    """Input drive levels and evaluation timing for one truth-table row."""

    v_high: float = 5.0
    v_low: float = 0.0        # logic 0 is ground by construction
    bit_width: float = 50e-6  # decode window length
    settle: float = 50e-6     # guard time before the decode window opens

    def __post_init__(self) -> None:
        if self.v_high <= 0.0:
            raise ValueError("v_high must be positive")
        if self.v_low != 0.0:
            raise ValueError("logic low level is fixed at 0 V")
        if self.bit_width <= 0.0 or self.settle < 0.0:
            raise ValueError("bit_width must be positive and settle non-negative")

    @property
    def window(self) -> tuple[float, float]:
        return (self.settle, self.settle + self.bit_width)


class DecodeMode(enum.Enum):
    SPIKE_COUNT = "spike_count"
    MEAN_LEVEL = "mean_level"


@dataclass(frozen=True)
class OutputSpec:
    """How one gate output is read from the simulated waveforms.

    SPIKE_COUNT outputs count threshold crossings of the node's deviation
    from its windowed mean, in both polarities (the oscilloscope-style AC
    trigger); MEAN_LEVEL outputs compare the windowed mean itself against
    the threshold.
    """

    name: str
    node: str
    mode: DecodeMode
    threshold: float


@dataclass
class GateCircuit:
    kind: GateKind
    net: Netlist
    input_sources: list[str]       # source element names, in input order
    input_nodes: list[str]
    outputs: list[OutputSpec]


_GATE_INPUTS: dict[GateKind, tuple[str, ...]] = {
    GateKind.AND: ("s1", "s2"),
    GateKind.OR: ("s1", "s2"),
    GateKind.NOR: ("s1", "s2"),
    GateKind.NAND: ("s1", "s2"),
    GateKind.XOR: ("s1", "s2"),
    GateKind.HALF_ADDER: ("a", "b"),
    GateKind.FULL_ADDER: ("a", "b", "cin"),
    GateKind.DCAAP_CASCADE: ("ex1", "ex2", "inh"),
}


def expected_bits(kind: GateKind, bits: tuple[int, ...]) -> tuple[int, ...]:
    """Boolean reference for each gate (the truth-table oracle)."""
    if kind is GateKind.AND:
        return (bits[0] & bits[1],)
    if kind is GateKind.OR:
        return (bits[0] | bits[1],)
    if kind is GateKind.NOR:
        return (1 - (bits[0] | bits[1]),)
    if kind is GateKind.NAND:
        return (1 - (bits[0] & bits[1]),)
    if kind is GateKind.XOR:
        return (bits[0] ^ bits[1],)
    if kind is GateKind.HALF_ADDER:
        return (bits[0] ^ bits[1], bits[0] & bits[1])
    if kind is GateKind.FULL_ADDER:
        a, b, c = bits
        return (a ^ b ^ c, (a & b) | ((a ^ b) & c))
    a, b, c = bits  # dCaAP: two excitatory, one inhibitory
    return (a ^ b, (a ^ b) ^ c)


def gate_arity(kind: GateKind) -> int:
    return len(_GATE_INPUTS[kind])


def output_names(kind: GateKind) -> tuple[str, ...]:
    if kind in (GateKind.HALF_ADDER, GateKind.FULL_ADDER):
        return ("sum", "carry")
    if kind is GateKind.DCAAP_CASCADE:
        return ("y_xor1", "y_xor2")
    return ("y",)


# ---------------------------------------------------------------------------
# circuit cores (shared between gate templates and the composed circuits)
# ---------------------------------------------------------------------------


def _and_core(net: Netlist, tag: str, in_a: str, in_b: str, p: OtsParams,
              r_in: float = 900.0, r_sense: float = 5e3, c: float = 100e-12) -> str:
    m, x = f"m{tag}", f"x{tag}"
    net.add_resistor(f"R1{tag}", in_a, m, r_in)
    net.add_resistor(f"R2{tag}", in_b, m, r_in)
    net.add_capacitor(f"C1{tag}", m, "0", c)
    net.add_ots(f"OTS{tag}", m, x, p)
    net.add_resistor(f"R3{tag}", x, "0", r_sense)
    return x


def _or_core(net: Netlist, tag: str, in_a: str, in_b: str, p: OtsParams) -> str:
    m, x = f"m{tag}", f"x{tag}"
    net.add_diode(f"D1{tag}", in_a, f"da{tag}")
    net.add_resistor(f"R1{tag}", f"da{tag}", m, 900.0)
    net.add_diode(f"D2{tag}", in_b, f"db{tag}")
    net.add_resistor(f"R2{tag}", f"db{tag}", m, 900.0)
    net.add_capacitor(f"C1{tag}", m, "0", 100e-12)
    net.add_ots(f"OTS{tag}", m, x, p)
    net.add_resistor(f"R3{tag}", x, "0", 5e3)
    return x


def _xor_core(net: Netlist, tag: str, in_a: str, in_b: str, p: OtsParams,
              r_in: float = 1e3) -> tuple[str, str]:
    """Returns (kick output node, switch element name)."""
    a, b, k, out = f"a{tag}", f"b{tag}", f"k{tag}", f"out{tag}"
    net.add_resistor(f"R1{tag}", in_a, a, r_in)
    net.add_resistor(f"R2{tag}", in_b, b, r_in)
    net.add_ots(f"OTS{tag}", a, k, p)
    net.add_capacitor(f"C1{tag}", k, b, 1e-9)
    net.add_resistor(f"R4{tag}", k, b, 10e3)
    net.add_capacitor(f"C2{tag}", k, out, 100e-12)
    net.add_resistor(f"R3{tag}", out, "0", 50e3)
    return out, f"OTS{tag}"


def _hold(net: Netlist, tag: str, pulse_nodes: list[str]) -> str:
    """Diode-OR rail pulses into an RC envelope that bridges spike gaps but
    forgets stale activity well before the decode window."""
    e = f"env{tag}"
    for i, pn in enumerate(pulse_nodes):
        net.add_diode(f"DH{tag}{i}", pn, e)
    net.add_capacitor(f"CE{tag}", e, "0", 1e-9)
    net.add_resistor(f"RE{tag}", e, "0", 10e3)
    return e


def _xor_buffered(net: Netlist, tag: str, in_a: str, in_b: str, p: OtsParams) -> str:
    """XOR core whose bipolar kicks are rectified by a comparator pair into
    a held envelope node; returns the envelope node."""
    out, _ = _xor_core(net, tag, in_a, in_b, p)
    net.add_comparator(f"CMPP{tag}", out, "refp", f"pp{tag}")
    net.add_comparator(f"CMPN{tag}", "refn", out, f"pn{tag}")
    return _hold(net, tag, [f"pp{tag}", f"pn{tag}"])


def _spike_buffered(net: Netlist, tag: str, x_node: str) -> str:
    """Envelope of the unipolar sense-node bursts of an AND/OR core."""
    net.add_comparator(f"CMPA{tag}", x_node, "refa", f"pa{tag}")
    return _hold(net, tag, [f"pa{tag}"])


def _add_refs(net: Netlist, *, mid: bool) -> None:
    net.add_source("REFP", "refp", "0", Dc(0.4))
    net.add_source("REFN", "refn", "0", Dc(-0.4))
    net.add_source("REFA", "refa", "0", Dc(1.2))
    if mid:
        net.add_source("REFM", "refm", "0", Dc(2.0))


# ---------------------------------------------------------------------------
# templates
# ---------------------------------------------------------------------------


def build_gate(kind: GateKind, p: OtsParams | None = None,
               enc: LogicEncoding | None = None,
               bits: tuple[int, ...] | None = None) -> GateCircuit:
    """Construct the netlist for one gate with its inputs driven at the DC
    levels for `bits` (all zero when omitted).  Input and output nodes are
    labeled; outputs carry their decode rule."""
    p = p or default_params()
    enc = enc or LogicEncoding()
    names = _GATE_INPUTS[kind]
    if bits is None:
        bits = tuple(0 for _ in names)
    if len(bits) != len(names) or any(b not in (0, 1) for b in bits):
        raise ValueError(f"{kind.value} takes {len(names)} bits, got {bits!r}")

    net = Netlist()
    sources = []
    for nm, b in zip(names, bits):
        src = f"S_{nm.upper()}"
        net.add_source(src, nm, "0", Dc(enc.v_high * b))
        sources.append(src)

    if kind is GateKind.AND:
        net.add_resistor("R1", names[0], "m", 900.0)
        net.add_resistor("R2", names[1], "m", 900.0)
        net.add_capacitor("C1", "m", "0", 100e-12)
        net.add_ots("OTS1", "m", "x", p)
        net.add_resistor("R3", "x", "0", 5e3)
        outputs = [OutputSpec("y", "x", DecodeMode.SPIKE_COUNT, 1.2)]

    elif kind is GateKind.OR:
        net.add_diode("D1", names[0], "da")
        net.add_resistor("R1", "da", "m", 900.0)
        net.add_diode("D2", names[1], "db")
        net.add_resistor("R2", "db", "m", 900.0)
        net.add_capacitor("C1", "m", "0", 100e-12)
        net.add_ots("OTS1", "m", "x", p)
        net.add_resistor("R3", "x", "0", 5e3)
        outputs = [OutputSpec("y", "x", DecodeMode.SPIKE_COUNT, 1.2)]

    elif kind is GateKind.NOR:
        net.add_resistor("R1", names[0], "m", 900.0)
        net.add_resistor("R2", names[1], "m", 900.0)
        net.add_capacitor("C1", "m", "0", 100e-12)
        net.add_resistor("R3", "m", "mp", 900.0)
        net.add_ots("OTS1", "q", "mp", p)
        net.add_source("VDD", "vdd", "0", Dc(5.0))
        net.add_resistor("R4", "vdd", "q", 5e3)
        net.add_capacitor("C2", "q", "0", 100e-12)
        outputs = [OutputSpec("y", "mp", DecodeMode.SPIKE_COUNT, 0.6)]

    elif kind is GateKind.NAND:
        net.add_source("VDD", "vdd", "0", Dc(5.0))
        net.add_resistor("R3", "vdd", "x1", 900.0)
        net.add_resistor("R4", "x1", "t", 5e3)
        net.add_capacitor("C2", "t", "0", 100e-12)
        net.add_ots("OTS1", "t", "m", p)
        net.add_capacitor("C1", "m", "0", 100e-12)
        net.add_diode("D1", "m", "a1")
        net.add_resistor("R1", "a1", names[0], 900.0)
        net.add_diode("D2", "m", "b1")
        net.add_resistor("R2", "b1", names[1], 900.0)
        outputs = [OutputSpec("y", "m", DecodeMode.SPIKE_COUNT, 0.3)]

    elif kind is GateKind.XOR:
        net.add_resistor("R1", names[0], "a", 1e3)
        net.add_resistor("R2", names[1], "b", 1e3)
        net.add_ots("OTS1", "a", "k", p)
        net.add_capacitor("C1", "k", "b", 1e-9)
        net.add_resistor("R4", "k", "b", 10e3)
        net.add_capacitor("C2", "k", "out", 100e-12)
        net.add_resistor("R3", "out", "0", 50e3)
        outputs = [OutputSpec("y", "out", DecodeMode.SPIKE_COUNT, 0.4)]

    elif kind is GateKind.HALF_ADDER:
        # sum: XOR branch, 3 kOhm inputs; the conduction bursts are read as
        # the current bounce across the second input resistor (node xb).
        net.add_resistor("R1", names[0], "xa", 3e3)
        net.add_resistor("R2", names[1], "xb", 3e3)
        net.add_ots("OTS1", "xa", "k", p)
        net.add_capacitor("C1", "k", "xb", 1e-9)
        net.add_resistor("R5", "k", "xb", 1e3)
        net.add_capacitor("C2", "k", "0", 100e-12)
        # carry: AND branch; latches on (1,1), read as a level.
        net.add_resistor("R3", names[0], "mc", 1e3)
        net.add_resistor("R4", names[1], "mc", 1e3)
        net.add_capacitor("C3", "mc", "0", 500e-12)
        net.add_ots("OTS2", "mc", "xc", p)
        net.add_resistor("R6", "xc", "0", 200.0)
        outputs = [
            OutputSpec("sum", "xb", DecodeMode.SPIKE_COUNT, 0.04),
            OutputSpec("carry", "xc", DecodeMode.MEAN_LEVEL, 0.5),
        ]

    elif kind is GateKind.DCAAP_CASCADE:
        _add_refs(net, mid=True)
        e1 = _xor_buffered(net, "x1", names[0], names[1], p)
        net.add_comparator("CMPB1", e1, "refm", "y1")
        e2 = _xor_buffered(net, "x2", "y1", names[2], p)
        outputs = [
            OutputSpec("y_xor1", e1, DecodeMode.MEAN_LEVEL, 1.0),
            OutputSpec("y_xor2", e2, DecodeMode.MEAN_LEVEL, 1.0),
        ]

    elif kind is GateKind.FULL_ADDER:
        _add_refs(net, mid=True)
        e_x1 = _xor_buffered(net, "x1", names[0], names[1], p)
        net.add_comparator("CMPB1", e_x1, "refm", "y1")
        e_sum = _xor_buffered(net, "x2", "y1", names[2], p)
        xa1 = _and_core(net, "a1", names[0], names[1], p)
        e_a1 = _spike_buffered(net, "a1", xa1)
        net.add_comparator("CMPB2", e_a1, "refm", "ya1")
        xa2 = _and_core(net, "a2", "y1", names[2], p)
        e_a2 = _spike_buffered(net, "a2", xa2)
        net.add_comparator("CMPB3", e_a2, "refm", "ya2")
        x_or = _or_core(net, "or", "ya1", "ya2", p)
        e_cout = _spike_buffered(net, "or", x_or)
        outputs = [
            OutputSpec("sum", e_sum, DecodeMode.MEAN_LEVEL, 1.0),
            OutputSpec("carry", e_cout, DecodeMode.MEAN_LEVEL, 1.0),
        ]
    else:  # pragma: no cover
        raise ValueError(f"unhandled gate kind {kind}")

    net.validate()
    return GateCircuit(kind, net, sources, list(names), outputs)


# ---------------------------------------------------------------------------
# decoding and evaluation
# ---------------------------------------------------------------------------


def decode_output(tr: Trace, out: OutputSpec, enc: LogicEncoding) -> tuple[int, float]:
    """Decoded bit and its raw measurement (event count or mean level)."""
    lo, hi = enc.window
    t = tr.times
    mask = (t >= lo) & (t <= hi)
    if not np.any(mask):
        raise ValueError("decode window lies outside the trace")
    v = tr.voltage(out.node)[mask]
    if out.mode is DecodeMode.MEAN_LEVEL:
        mean = float(v.mean())
        return (1 if mean > out.threshold else 0, mean)
    x = v - v.mean()
    tt = t[mask]
    refractory = max(4.0 * tr.dt, 2e-7)
    n = len(count_crossings(tt, x, out.threshold, refractory))
    n += len(count_crossings(tt, -x, out.threshold, refractory))
    return (1 if n >= 1 else 0, float(n))


def evaluate(kind: GateKind, bits: tuple[int, ...],
             enc: LogicEncoding | None = None,
             p: OtsParams | None = None, *,
             dt: float = 50e-9,
             with_detail: bool = False):
    """Simulate one input combination and decode every output bit."""
    enc = enc or LogicEncoding()
    circuit = build_gate(kind, p, enc, bits)
    tr = transient(circuit.net, enc.settle + enc.bit_width, dt)
    decoded = [decode_output(tr, out, enc) for out in circuit.outputs]
    bits_out = tuple(b for b, _ in decoded)
    if with_detail:
        return bits_out, tuple(m for _, m in decoded), tr
    return bits_out


@dataclass
class TruthRow:
    inputs: tuple[int, ...]
    expected: tuple[int, ...]
    measured: tuple[int, ...]
    detail: tuple[float, ...]

    @property
    def ok(self) -> bool:
        return self.expected == self.measured


@dataclass
class TruthTable:
    kind: GateKind
    rows: list[TruthRow] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": self.kind.value,
                "ok": self.ok,
                "rows": [
                    {
                        "in": list(r.inputs),
                        "expected": list(r.expected),
                        "measured": list(r.measured),
                        "spikes": list(r.detail),
                    }
                    for r in self.rows
                ],
            },
            indent=2,
        )


def truth_table(kind: GateKind, enc: LogicEncoding | None = None,
                p: OtsParams | None = None, *, dt: float = 50e-9,
                n_jobs: int = 1) -> TruthTable:
    """Exhaustive evaluation over all input combinations.

    Rows are independent transients (state fully reset between rows), so
    they may be computed in parallel; the row order of the result is fixed
    regardless of scheduling."""
    arity = gate_arity(kind)
    combos = [tuple((i >> (arity - 1 - k)) & 1 for k in range(arity)) for i in range(2 ** arity)]

    def run(bits: tuple[int, ...]) -> TruthRow:
        measured, detail, _ = evaluate(kind, bits, enc, p, dt=dt, with_detail=True)
        return TruthRow(bits, expected_bits(kind, bits), measured, detail)

    if n_jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            rows = list(pool.map(run, combos))
    else:
        rows = [run(c) for c in combos]
    return TruthTable(kind, rows)
