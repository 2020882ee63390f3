"""Line-oriented netlist text format.

One element per line; `#` starts a comment.  Node names are arbitrary
tokens, `0` is ground.  All numeric fields accept SI suffixes
(f p n u m k M G, case-sensitive where it matters: m = milli, M = mega).

    R   <name> <n+> <n-> <ohms>
    C   <name> <n+> <n-> <farads> [ic=<volts>]
    V   <name> <n+> <n-> dc <volts>
    V   <name> <n+> <n-> pwl <t1> <v1> [<t2> <v2> ...]
    V   <name> <n+> <n-> pulse <v_low> <v_high> <delay> <width> <period> [<repeat>]
    V   <name> <n+> <n-> tri <v_peak> <t_rise> <t_fall>
    D   <name> <anode> <cathode> [vf=<V>] [vz=<V>] [rs=<ohms>]
    OTS <name> <n+> <n-> [vth=] [vhold=] [ron=] [goff=] [ihold=] [tauon=] [tauoff=]
    CMP <name> <v+> <v-> <out> [vhigh=] [vlow=] [rout=]
"""

from __future__ import annotations

import re
from dataclasses import replace

from .device import OtsParams, default_params
from .netlist import Capacitor, Comparator, Diode, Element, Netlist, Ots, Resistor, VoltageSource
from .waveforms import Dc, PiecewiseLinear, Pulse, Triangle

_SI = {
    "f": 1e-15, "p": 1e-12, "n": 1e-9, "u": 1e-6, "m": 1e-3,
    "k": 1e3, "K": 1e3, "M": 1e6, "G": 1e9,
}

_NUM_RE = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)([fpnumkKMG]?)$")


class NetlistParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


def parse_si(token: str) -> float:
    """Parse a number with an optional SI magnitude suffix."""
    m = _NUM_RE.match(token.strip())
    if not m:
        raise ValueError(f"cannot parse quantity {token!r}")
    value = float(m.group(1))
    suffix = m.group(2)
    return value * _SI[suffix] if suffix else value


def format_si(value: float) -> str:
    """Compact engineering rendering used by the netlist writer."""
    if value == 0.0:
        return "0"
    for suffix, scale in (("G", 1e9), ("M", 1e6), ("k", 1e3)):
        if abs(value) >= scale:
            return f"{value / scale:.6g}{suffix}"
    if abs(value) >= 1.0:
        return f"{value:.6g}"
    for suffix, scale in (("m", 1e-3), ("u", 1e-6), ("n", 1e-9), ("p", 1e-12), ("f", 1e-15)):
        if abs(value) >= scale:
            return f"{value / scale:.6g}{suffix}"
    return f"{value:.6g}"


def _parse_kv(tokens: list[str], allowed: dict[str, str], line_no: int) -> dict[str, float]:
    out: dict[str, float] = {}
    for tok in tokens:
        if "=" not in tok:
            raise NetlistParseError(line_no, f"expected key=value, got {tok!r}")
        key, _, raw = tok.partition("=")
        key = key.lower()
        if key not in allowed:
            raise NetlistParseError(line_no, f"unknown option {key!r} (allowed: {sorted(allowed)})")
        try:
            out[allowed[key]] = parse_si(raw)
        except ValueError as exc:
            raise NetlistParseError(line_no, str(exc)) from None
    return out


def parse_netlist(text: str, *, default_ots: OtsParams | None = None) -> Netlist:
    """Build a netlist from its text form; errors carry the line number."""
    base = default_ots or default_params()
    net = Netlist()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        kind = tokens[0].upper()
        try:
            if kind == "R":
                _expect(tokens, 5, 5, line_no)
                net.add_resistor(tokens[1], tokens[2], tokens[3], _num(tokens[4], line_no))
            elif kind == "C":
                _expect(tokens, 5, 6, line_no)
                kv = _parse_kv(tokens[5:], {"ic": "ic"}, line_no)
                net.add_capacitor(tokens[1], tokens[2], tokens[3], _num(tokens[4], line_no),
                                  ic=kv.get("ic", 0.0))
            elif kind == "V":
                _expect(tokens, 5, None, line_no)
                net.add_source(tokens[1], tokens[2], tokens[3], _parse_source(tokens[4:], line_no))
            elif kind == "D":
                _expect(tokens, 4, 7, line_no)
                kv = _parse_kv(tokens[4:], {"vf": "v_f", "vz": "v_z", "rs": "r_series"}, line_no)
                net.add_diode(tokens[1], tokens[2], tokens[3], **kv)
            elif kind == "OTS":
                _expect(tokens, 4, 11, line_no)
                kv = _parse_kv(
                    tokens[4:],
                    {"vth": "v_th", "vhold": "v_hold", "ron": "r_on", "goff": "g_off",
                     "ihold": "i_hold", "tauon": "tau_on", "tauoff": "tau_off"},
                    line_no,
                )
                net.add_ots(tokens[1], tokens[2], tokens[3], replace(base, **kv) if kv else base)
            elif kind == "CMP":
                _expect(tokens, 5, 8, line_no)
                kv = _parse_kv(tokens[5:], {"vhigh": "v_out_high", "vlow": "v_out_low",
                                            "rout": "r_out"}, line_no)
                net.add_comparator(tokens[1], tokens[2], tokens[3], tokens[4], **kv)
            else:
                raise NetlistParseError(line_no, f"unknown element kind {tokens[0]!r}")
        except NetlistParseError:
            raise
        except ValueError as exc:
            raise NetlistParseError(line_no, str(exc)) from None
    net.validate()
    return net


def _expect(tokens: list[str], lo: int, hi: int | None, line_no: int) -> None:
    if len(tokens) < lo or (hi is not None and len(tokens) > hi):
        want = f"{lo}" if hi == lo else f"{lo}..{hi or 'n'}"
        raise NetlistParseError(line_no, f"expected {want} fields, got {len(tokens)}")


def _num(token: str, line_no: int) -> float:
    try:
        return parse_si(token)
    except ValueError as exc:
        raise NetlistParseError(line_no, str(exc)) from None


def _parse_source(tokens: list[str], line_no: int):
    mode = tokens[0].lower()
    args = [_num(t, line_no) for t in tokens[1:]]
    if mode == "dc":
        if len(args) != 1:
            raise NetlistParseError(line_no, "dc source takes one value")
        return Dc(args[0])
    if mode == "pwl":
        if len(args) < 2 or len(args) % 2:
            raise NetlistParseError(line_no, "pwl source takes time/value pairs")
        return PiecewiseLinear(tuple(zip(args[0::2], args[1::2])))
    if mode == "pulse":
        if len(args) not in (5, 6):
            raise NetlistParseError(line_no, "pulse takes v_low v_high delay width period [repeat]")
        repeat = int(args[5]) if len(args) == 6 else None
        return Pulse(args[0], args[1], args[2], args[3], args[4], repeat)
    if mode == "tri":
        if len(args) != 3:
            raise NetlistParseError(line_no, "tri takes v_peak t_rise t_fall")
        return Triangle(args[0], args[1], args[2])
    raise NetlistParseError(line_no, f"unknown source mode {mode!r}")


# ---------------------------------------------------------------------------
# writer
# ---------------------------------------------------------------------------


def _source_text(spec) -> str:
    if isinstance(spec, Dc):
        return f"dc {format_si(spec.value)}"
    if isinstance(spec, PiecewiseLinear):
        return "pwl " + " ".join(f"{format_si(t)} {format_si(v)}" for t, v in spec.points)
    if isinstance(spec, Pulse):
        parts = [format_si(x) for x in (spec.v_low, spec.v_high, spec.delay, spec.width, spec.period)]
        if spec.repeat is not None:
            parts.append(str(spec.repeat))
        return "pulse " + " ".join(parts)
    if isinstance(spec, Triangle):
        return f"tri {format_si(spec.v_peak)} {format_si(spec.t_rise)} {format_si(spec.t_fall)}"
    raise TypeError(f"cannot serialize source waveform {type(spec).__name__}")


def netlist_to_text(net: Netlist, header: str = "") -> str:
    """Serialize a netlist to the text format (device parameters written
    explicitly so the file is self-contained)."""
    lines = [f"# {ln}" if ln else "#" for ln in header.splitlines()] if header else []
    names = net.node_names
    for el in net.elements:
        k = el.kind
        t = [names[i] for i in el.terminals]
        if isinstance(k, Resistor):
            lines.append(f"R {k.name} {t[0]} {t[1]} {format_si(k.ohms)}")
        elif isinstance(k, Capacitor):
            suffix = f" ic={format_si(k.ic)}" if k.ic else ""
            lines.append(f"C {k.name} {t[0]} {t[1]} {format_si(k.farads)}{suffix}")
        elif isinstance(k, VoltageSource):
            lines.append(f"V {k.name} {t[0]} {t[1]} {_source_text(k.spec)}")
        elif isinstance(k, Diode):
            lines.append(
                f"D {k.name} {t[0]} {t[1]} vf={format_si(k.v_f)} vz={format_si(k.v_z)} "
                f"rs={format_si(k.r_series)}"
            )
        elif isinstance(k, Ots):
            p = k.params
            lines.append(
                f"OTS {k.name} {t[0]} {t[1]} vth={format_si(p.v_th)} vhold={format_si(p.v_hold)} "
                f"ron={format_si(p.r_on)} goff={format_si(p.g_off)} ihold={format_si(p.i_hold)} "
                f"tauon={format_si(p.tau_on)} tauoff={format_si(p.tau_off)}"
            )
        elif isinstance(k, Comparator):
            lines.append(
                f"CMP {k.name} {t[0]} {t[1]} {t[2]} vhigh={format_si(k.v_out_high)} "
                f"vlow={format_si(k.v_out_low)} rout={format_si(k.r_out)}"
            )
    return "\n".join(lines) + "\n"
