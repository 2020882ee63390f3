"""The measurement rig: input bias through a bias resistor, a capacitor in
parallel with the switch, and a ground-side series resistor for current
sensing.  Biased above threshold it behaves as a relaxation oscillator whose
spike rate encodes the input bias."""

from __future__ import annotations

from dataclasses import dataclass

from .device import OtsParams, default_params
from .engine import SpikeTrain, Trace, extract_spikes, firing_rate, transient
from .netlist import Netlist
from .waveforms import Dc, SourceSpec

R_BIAS = 9.1e3    # bias resistor
C_PAR = 1e-9      # capacitor in parallel with the switch
R_SERIES = 100.0  # ground-side series resistor

IN_NODE = "in"
TOP_NODE = "top"   # switch + capacitor node
MID_NODE = "mid"   # series-resistor sense node
OTS_NAME = "OTS1"


def measurement_netlist(source: SourceSpec | float,
                        p: OtsParams | None = None) -> Netlist:
    """Bias source -> R_d -> (C_p parallel OTS) -> R_s -> ground."""
    p = p or default_params()
    spec = Dc(source) if isinstance(source, (int, float)) else source
    net = Netlist()
    net.add_source("VIN", IN_NODE, "0", spec)
    net.add_resistor("RD", IN_NODE, TOP_NODE, R_BIAS)
    net.add_capacitor("CP", TOP_NODE, "0", C_PAR)
    net.add_ots(OTS_NAME, TOP_NODE, MID_NODE, p)
    net.add_resistor("RS", MID_NODE, "0", R_SERIES)
    return net


@dataclass(frozen=True)
class OscillationResult:
    v_in: float
    spikes: SpikeTrain
    rate: float
    trace: Trace


def run_oscillator(v_in: float, duration: float = 300e-6, *,
                   p: OtsParams | None = None, dt: float = 10e-9,
                   detect_threshold: float = 0.5,
                   refractory: float = 1e-6,
                   skip: float = 20e-6) -> OscillationResult:
    """Constant-bias run; spikes are upward crossings at the sense node
    after an initial charge-up interval is skipped."""
    net = measurement_netlist(v_in, p)
    tr = transient(net, duration, dt)
    st = extract_spikes(tr, MID_NODE, detect_threshold, refractory, window=(skip, duration))
    return OscillationResult(v_in, st, firing_rate(st), tr)


def rate_sweep(v_values, duration: float = 300e-6, *,
               p: OtsParams | None = None, dt: float = 10e-9) -> list[tuple[float, float]]:
    return [(v, run_oscillator(v, duration, p=p, dt=dt).rate) for v in v_values]
