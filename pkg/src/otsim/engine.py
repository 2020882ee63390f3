"""Fixed-step transient simulation by modified nodal analysis.

Unknowns are the non-ground node voltages plus one branch current per
voltage source.  Integration is backward Euler (capacitors become Norton
companions), so switching discontinuities cannot destabilize the step.

All nonlinear elements are piecewise linear, which makes the Newton
iteration a segment-pinning loop: pick a conduction segment per element,
solve the resulting linear system exactly, re-derive the segments from the
solution, and repeat until the choice is stable (at most a fixed number of
re-selections per step).  The system matrix depends only on the segment
choice, so LU factorizations are cached and most steps reduce to a single
back-substitution.

OTS phases are device *state*, not a solver segment: they advance once per
accepted step from the converged device voltage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .device import OtsState, Phase, ots_current, ots_step
from .netlist import Capacitor, Comparator, Diode, Element, Netlist, NetlistError, Ots, Resistor, VoltageSource
from .waveforms import SourceSpec, Triangle


class SimulationError(RuntimeError):
    pass


class ConvergenceError(SimulationError):
    """Segment selection failed to settle within the iteration budget."""

    def __init__(self, step: int, t: float, element: str):
        self.step = step
        self.t = t
        self.element = element
        super().__init__(f"no stable segment assignment at step {step} (t={t:.6g} s), last flip: {element}")


class SingularSystemError(SimulationError):
    def __init__(self, node: str):
        self.node = node
        super().__init__(f"singular system matrix; node {node!r} has no defined voltage")


# Conduction segments, encoded as small ints for cheap cache keys.
_SEG_OFF = 0        # diode blocking / OTS off-phase leakage
_SEG_FWD = 1        # diode forward / OTS positive branch
_SEG_REV = 2        # diode breakdown / OTS negative branch
_SEG_DEAD = 3       # OTS on-phase dead zone |v| < v_hold
_CMP_LOW = 0
_CMP_HIGH = 1


@dataclass
class Trace:
    """Sampled node voltages and element currents of one transient run."""

    dt: float
    times: np.ndarray                      # (n_samples,)
    node_names: list[str]
    voltages: np.ndarray                   # (n_samples, n_nodes), column 0 is ground
    currents: dict[str, np.ndarray]        # element name -> (n_samples,), positive from n+ to n-
    ots_on: dict[str, np.ndarray]          # OTS name -> (n_samples,) bool, phase after the step
    kcl_residual: float                    # max |node current sum| over all accepted steps

    def node_index(self, node: str | int) -> int:
        if isinstance(node, int):
            if not (0 <= node < len(self.node_names)):
                raise IndexError(f"node index {node} out of range")
            return node
        try:
            return self.node_names.index(str(node))
        except ValueError:
            raise IndexError(f"no node named {node!r}") from None

    def voltage(self, node: str | int) -> np.ndarray:
        return self.voltages[:, self.node_index(node)]

    def to_csv(self, path: str, branches: list[str] | None = None) -> None:
        names = [n for n in self.node_names if n != "0"]
        branches = list(self.currents) if branches is None else branches
        header = "t," + ",".join(names + branches)
        cols = [self.times] + [self.voltage(n) for n in names] + [self.currents[b] for b in branches]
        np.savetxt(path, np.column_stack(cols), delimiter=",", header=header, comments="", fmt="%.12g")


@dataclass(frozen=True)
class SpikeTrain:
    spike_times: tuple[float, ...]
    detect_threshold: float
    window: tuple[float, float]

    def __post_init__(self) -> None:
        if any(b <= a for a, b in zip(self.spike_times, self.spike_times[1:])):
            raise ValueError("spike times must be strictly increasing")

    @property
    def count(self) -> int:
        return len(self.spike_times)


def firing_rate(st: SpikeTrain) -> float:
    """Spike count divided by the observation window length, in hertz."""
    t0, t1 = st.window
    if t1 <= t0:
        raise ValueError("window length must be positive")
    return st.count / (t1 - t0)


def count_crossings(times: np.ndarray, values: np.ndarray, threshold: float,
                    refractory: float) -> list[float]:
    """Times of upward crossings of `threshold`, suppressing events closer
    than `refractory` to the previous accepted one."""
    above = values >= threshold
    rising = np.flatnonzero(~above[:-1] & above[1:]) + 1
    out: list[float] = []
    last = -math.inf
    for idx in rising:
        t = float(times[idx])
        if t - last > refractory:
            out.append(t)
            last = t
    return out


def extract_spikes(tr: Trace, node: str | int, threshold: float, refractory: float,
                   window: tuple[float, float] | None = None) -> SpikeTrain:
    """One spike per upward threshold crossing of a node voltage."""
    if refractory < 2.0 * tr.dt:
        raise ValueError(f"refractory must be at least 2*dt = {2 * tr.dt:g} s")
    v = tr.voltage(node)
    t = tr.times
    if window is None:
        window = (float(t[0]), float(t[-1]))
    lo, hi = window
    mask = (t >= lo) & (t <= hi)
    spikes = count_crossings(t[mask], v[mask], threshold, refractory)
    return SpikeTrain(tuple(spikes), threshold, window)


class _System:
    """Pre-indexed MNA structures for one netlist."""

    def __init__(self, net: Netlist, dt: float, ots_states: dict[str, OtsState]):
        net.validate()
        self.net = net
        self.dt = dt
        nv = net.node_count - 1  # non-ground voltages
        self.sources = [el for el in net.elements if isinstance(el.kind, VoltageSource)]
        self.n = nv + len(self.sources)
        self.nv = nv

        self.g_static = np.zeros((self.n, self.n))
        self.caps: list[tuple[Element, float, int, int]] = []       # (el, g, a, b) 0-based rows, -1 = ground
        self.dynamic: list[Element] = []
        self.ots_states = ots_states

        for el in net.elements:
            k = el.kind
            if isinstance(k, Resistor):
                self._stamp_g(self.g_static, el.terminals[0] - 1, el.terminals[1] - 1, 1.0 / k.ohms)
            elif isinstance(k, Capacitor):
                g = k.farads / dt
                a, b = el.terminals[0] - 1, el.terminals[1] - 1
                self._stamp_g(self.g_static, a, b, g)
                self.caps.append((el, g, a, b))
            elif isinstance(k, (Diode, Ots, Comparator)):
                self.dynamic.append(el)

        for j, el in enumerate(self.sources):
            r = nv + j
            a, b = el.terminals[0] - 1, el.terminals[1] - 1
            if a >= 0:
                self.g_static[a, r] += 1.0
                self.g_static[r, a] += 1.0
            if b >= 0:
                self.g_static[b, r] -= 1.0
                self.g_static[r, b] -= 1.0

        self._lu_cache: dict[tuple, tuple] = {}

    @staticmethod
    def _stamp_g(mat: np.ndarray, a: int, b: int, g: float) -> None:
        if a >= 0:
            mat[a, a] += g
        if b >= 0:
            mat[b, b] += g
        if a >= 0 and b >= 0:
            mat[a, b] -= g
            mat[b, a] -= g

    # -- per-step assembly --------------------------------------------------

    def initial_segments(self, volts: np.ndarray) -> tuple[int, ...]:
        return tuple(self._desired_segment(el, volts) for el in self.dynamic)

    def _branch_v(self, volts: np.ndarray, el: Element) -> float:
        a, b = el.terminals[0], el.terminals[1]
        va = volts[a - 1] if a > 0 else 0.0
        vb = volts[b - 1] if b > 0 else 0.0
        return float(va - vb)

    def _desired_segment(self, el: Element, volts: np.ndarray) -> int:
        k = el.kind
        if isinstance(k, Diode):
            v = self._branch_v(volts, el)
            if v > k.v_f:
                return _SEG_FWD
            if v < -k.v_z:
                return _SEG_REV
            return _SEG_OFF
        if isinstance(k, Ots):
            st = self.ots_states[el.name]
            if st.phase is Phase.OFF:
                return _SEG_OFF
            v = self._branch_v(volts, el)
            if v > k.params.v_hold:
                return _SEG_FWD
            if v < -k.params.v_hold:
                return _SEG_REV
            return _SEG_DEAD
        # comparator
        p, q = el.terminals[0], el.terminals[1]
        vp = volts[p - 1] if p > 0 else 0.0
        vq = volts[q - 1] if q > 0 else 0.0
        return _CMP_HIGH if vp > vq else _CMP_LOW

    def _stamp_dynamic(self, mat: np.ndarray, z: np.ndarray, el: Element, seg: int) -> None:
        k = el.kind
        if isinstance(k, Comparator):
            out = el.terminals[2] - 1
            g = 1.0 / k.r_out
            e = k.v_out_high if seg == _CMP_HIGH else k.v_out_low
            if out >= 0:
                mat[out, out] += g
                z[out] += g * e
            return
        a, b = el.terminals[0] - 1, el.terminals[1] - 1
        if isinstance(k, Diode):
            if seg == _SEG_OFF:
                return
            g = 1.0 / k.r_series
            offset = -k.v_f if seg == _SEG_FWD else k.v_z
        else:  # Ots
            p = k.params
            if seg == _SEG_OFF:
                g, offset = p.g_off, 0.0
            elif seg == _SEG_DEAD:
                return
            else:
                g = 1.0 / p.r_on
                offset = -p.v_hold if seg == _SEG_FWD else p.v_hold
        self._stamp_g(mat, a, b, g)
        # element current i = g*(v + offset); the constant part moves to the RHS
        c = g * offset
        if a >= 0:
            z[a] -= c
        if b >= 0:
            z[b] += c

    def factorized(self, segments: tuple[int, ...]):
        """LU factorization (cached) plus the matrix for residual checks and
        the constant dynamic RHS contribution for this segment set."""
        hit = self._lu_cache.get(segments)
        if hit is not None:
            return hit
        mat = self.g_static.copy()
        z_dyn = np.zeros(self.n)
        for el, seg in zip(self.dynamic, segments):
            self._stamp_dynamic(mat, z_dyn, el, seg)
        try:
            lu = lu_factor(mat)
        except Exception:
            self._raise_singular(mat)
        if not np.all(np.isfinite(lu[0])):
            self._raise_singular(mat)
        diag = np.abs(lu[0].diagonal())
        if diag.min() <= diag.max() * 1e-14:
            self._raise_singular(mat)
        entry = (lu, mat, z_dyn)
        self._lu_cache[segments] = entry
        return entry

    def _raise_singular(self, mat: np.ndarray):
        rows = np.flatnonzero(~(np.abs(mat).sum(axis=1) > 0.0))
        bad = rows[0] if rows.size else int(np.argmin(np.abs(mat).sum(axis=1)))
        if bad < self.nv:
            raise SingularSystemError(self.net.node_names[bad + 1])
        raise SingularSystemError(self.sources[bad - self.nv].name)

    def element_current(self, el: Element, seg: int, volts: np.ndarray, x: np.ndarray,
                        vcap_prev: dict[str, float]) -> float:
        k = el.kind
        if isinstance(k, VoltageSource):
            return float(x[self.nv + self.sources.index(el)])
        if isinstance(k, Comparator):
            out = el.terminals[2]
            vout = volts[out - 1] if out > 0 else 0.0
            e = k.v_out_high if seg == _CMP_HIGH else k.v_out_low
            return (e - vout) / k.r_out
        v = self._branch_v(volts, el)
        if isinstance(k, Resistor):
            return v / k.ohms
        if isinstance(k, Capacitor):
            return (k.farads / self.dt) * (v - vcap_prev[el.name])
        if isinstance(k, Diode):
            if seg == _SEG_FWD:
                return (v - k.v_f) / k.r_series
            if seg == _SEG_REV:
                return (v + k.v_z) / k.r_series
            return 0.0
        # Ots
        return ots_current(k.params, self.ots_states[el.name], v)


def transient(net: Netlist, t_stop: float, dt: float, *,
              ots_states: dict[str, OtsState] | None = None,
              max_reselections: int = 8,
              residual_tol: float = 1e-9) -> Trace:
    """Integrate the netlist from its initial conditions to t_stop.

    Capacitors start at their declared initial voltages and OTS devices in
    the given (default off) states.  Raises ConvergenceError if the segment
    iteration does not settle, SingularSystemError for defective topologies,
    and SimulationError if any accepted step violates the nodal-current
    residual tolerance.
    """
    if dt <= 0.0 or t_stop < dt:
        raise ValueError("require 0 < dt <= t_stop")
    states = dict(ots_states) if ots_states else {}
    for el in net.ots_elements():
        states.setdefault(el.name, OtsState())
    sys = _System(net, dt, states)

    n_steps = int(round(t_stop / dt))
    times = np.arange(n_steps + 1) * dt
    volts_hist = np.zeros((n_steps + 1, net.node_count))
    currents = {el.name: np.zeros(n_steps + 1) for el in net.elements}
    ots_on = {el.name: np.zeros(n_steps + 1, dtype=bool) for el in net.ots_elements()}

    vcap_prev = {el.name: el.kind.ic for el, _, _, _ in sys.caps}

    volts = np.zeros(net.node_count - 1)
    segments = sys.initial_segments(volts)
    max_residual = 0.0

    # step 0 initializes node voltages consistently with the capacitor ICs by
    # pinning each capacitor branch with a stiff companion (g scaled 1e6 up).
    for step in range(n_steps + 1):
        t = float(times[step])
        pin = 1e6 if step == 0 else 1.0

        z_base = np.zeros(sys.n)
        for j, el in enumerate(sys.sources):
            z_base[sys.nv + j] = el.kind.spec(t)
        for el, g, a, b in sys.caps:
            hist = pin * g * vcap_prev[el.name]
            if a >= 0:
                z_base[a] += hist
            if b >= 0:
                z_base[b] -= hist

        if step == 0:
            g_extra = np.zeros((sys.n, sys.n))
            for el, g, a, b in sys.caps:
                sys._stamp_g(g_extra, a, b, (pin - 1.0) * g)
        else:
            g_extra = None

        last_flip = ""
        for attempt in range(max_reselections + 1):
            if g_extra is None:
                lu, mat, z_dyn = sys.factorized(segments)
                z = z_base + z_dyn
                x = lu_solve(lu, z)
            else:
                mat0 = sys.g_static + g_extra
                z_dyn = np.zeros(sys.n)
                for el, seg in zip(sys.dynamic, segments):
                    sys._stamp_dynamic(mat0, z_dyn, el, seg)
                z = z_base + z_dyn
                try:
                    x = np.linalg.solve(mat0, z)
                except np.linalg.LinAlgError:
                    sys._raise_singular(mat0)
                mat = mat0
            volts = x[: sys.nv]
            desired = tuple(sys._desired_segment(el, volts) for el in sys.dynamic)
            if desired == segments:
                break
            flips = [el.name for el, a, b in zip(sys.dynamic, segments, desired) if a != b]
            last_flip = flips[-1] if flips else ""
            segments = desired
        else:
            raise ConvergenceError(step, t, last_flip)

        residual = float(np.max(np.abs(mat @ x - z)[: sys.nv])) if sys.nv else 0.0
        max_residual = max(max_residual, residual)
        if residual > residual_tol:
            raise SimulationError(f"nodal residual {residual:.3g} A exceeds {residual_tol:g} A at step {step}")

        volts_hist[step, 1:] = volts
        for el, seg in zip(net.elements, _full_segments(sys, segments)):
            currents[el.name][step] = sys.element_current(el, seg, volts, x, vcap_prev)

        # advance integrator history and device states using converged values
        for el, g, a, b in sys.caps:
            vcap_prev[el.name] = sys._branch_v(volts, el)
        new_segments = list(segments)
        for el in net.ots_elements():
            v_dev = sys._branch_v(volts, el)
            if step > 0:  # step 0 only establishes the initial operating point
                st = ots_step(el.kind.params, states[el.name], v_dev, dt)
                if st.phase is not states[el.name].phase:
                    states[el.name] = st
                    new_segments[sys.dynamic.index(el)] = sys._desired_segment(el, volts)
                else:
                    states[el.name] = st
            ots_on[el.name][step] = states[el.name].phase is Phase.ON
        segments = tuple(new_segments)

    return Trace(
        dt=dt,
        times=times,
        node_names=net.node_names,
        voltages=volts_hist,
        currents=currents,
        ots_on=ots_on,
        kcl_residual=max_residual,
    )


def _full_segments(sys: _System, segments: tuple[int, ...]):
    """Per-element segment list aligned with net.elements (0 for linear ones)."""
    seg_map = dict(zip((id(el) for el in sys.dynamic), segments))
    return [seg_map.get(id(el), 0) for el in sys.net.elements]


def dynamic_iv(net: Netlist, ramp: SourceSpec, ots_name: str, *,
               dt: float = 10e-9) -> list[tuple[float, float]]:
    """Device voltage/current trajectory under a triangular input ramp,
    sampled without waiting for steady state at any bias point."""
    if not isinstance(ramp, Triangle):
        raise ValueError("dynamic_iv requires a Triangle ramp")
    ots = [el for el in net.ots_elements()]
    if len(ots) != 1:
        raise NetlistError(f"dynamic_iv needs exactly one OTS, found {len(ots)}")
    if not any(el.name == ots_name for el in ots):
        raise NetlistError(f"no OTS named {ots_name!r}")
    sources = [el for el in net.elements if isinstance(el.kind, VoltageSource)]
    if len(sources) != 1:
        raise NetlistError("dynamic_iv needs exactly one input source")

    driven = _with_source_spec(net, sources[0].name, ramp)
    tr = transient(driven, ramp.duration, dt)
    el = driven.element(ots_name)
    a, b = el.terminals
    v = tr.voltages[:, a] - tr.voltages[:, b]
    i = tr.currents[ots_name]
    return list(zip(v.tolist(), i.tolist()))


def _with_source_spec(net: Netlist, source_name: str, spec: SourceSpec) -> Netlist:
    """Copy of the netlist with one source's waveform replaced."""
    out = Netlist()
    for name in net.node_names[1:]:
        out.node(name)
    for el in net.elements:
        k = el.kind
        terms = [net.node_names[t] for t in el.terminals]
        if isinstance(k, VoltageSource) and k.name == source_name:
            out.add_source(k.name, terms[0], terms[1], spec)
        elif isinstance(k, VoltageSource):
            out.add_source(k.name, terms[0], terms[1], k.spec)
        elif isinstance(k, Resistor):
            out.add_resistor(k.name, terms[0], terms[1], k.ohms)
        elif isinstance(k, Capacitor):
            out.add_capacitor(k.name, terms[0], terms[1], k.farads, k.ic)
        elif isinstance(k, Diode):
            out.add_diode(k.name, terms[0], terms[1], v_f=k.v_f, v_z=k.v_z, r_series=k.r_series)
        elif isinstance(k, Ots):
            out.add_ots(k.name, terms[0], terms[1], k.params)
        elif isinstance(k, Comparator):
            out.add_comparator(k.name, terms[0], terms[1], terms[2],
                               v_out_high=k.v_out_high, v_out_low=k.v_out_low, r_out=k.r_out)
    return out
