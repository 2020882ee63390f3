"""Behavioral two-state model of an Ovonic threshold switch (OTS).

The switch is volatile and ambipolar: it turns on when the magnitude of the
applied voltage reaches the threshold, conducts symmetrically in either
polarity referenced to the holding voltage, and drops back to the insulating
state once the sustained current falls below the holding current.  Switching
delays are first-order: a transition condition must hold continuously for
tau_on / tau_off before the phase actually changes.

All state is carried in immutable values; stepping returns a new state, so
instances can be shared freely between concurrent simulations.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace


class Phase(enum.Enum):
    OFF = "off"
    ON = "on"


class Pending(enum.Enum):
    SWITCHING_ON = "switching_on"
    SWITCHING_OFF = "switching_off"


@dataclass(frozen=True)
class OtsParams:
    """Device parameters.  Voltages in volts, resistance in ohms,
    conductance in siemens, current in amperes, times in seconds."""

    v_th: float = 3.0        # threshold voltage (turn-on at |v| >= v_th)
    v_hold: float = 1.0      # holding voltage of the on-state conduction law
    r_on: float = 100.0      # on-state differential resistance
    g_off: float = 1e-8      # off-state leakage conductance
    i_hold: float = 0.9e-3   # minimum sustaining current of the on state
    tau_on: float = 50e-9    # turn-on delay
    tau_off: float = 50e-9   # turn-off delay

    def __post_init__(self) -> None:
        if not (self.v_th > self.v_hold > 0.0):
            raise ValueError(f"require v_th > v_hold > 0, got v_th={self.v_th}, v_hold={self.v_hold}")
        if self.r_on <= 0.0 or self.g_off < 0.0:
            raise ValueError("r_on must be positive and g_off non-negative")
        if self.r_on * self.g_off >= 1e-3:
            raise ValueError(
                f"on/off contrast too small: r_on*g_off = {self.r_on * self.g_off:g} (must be < 1e-3)"
            )
        if self.i_hold <= 0.0:
            raise ValueError("i_hold must be positive")
        if self.tau_on < 0.0 or self.tau_off < 0.0:
            raise ValueError("switching delays must be non-negative")


@dataclass(frozen=True)
class OtsState:
    """Phase plus bookkeeping for a pending delayed transition."""

    phase: Phase = Phase.OFF
    pending: Pending | None = None
    elapsed: float = 0.0

    def __post_init__(self) -> None:
        if self.pending is Pending.SWITCHING_ON and self.phase is not Phase.OFF:
            raise ValueError("SWITCHING_ON is only valid in the OFF phase")
        if self.pending is Pending.SWITCHING_OFF and self.phase is not Phase.ON:
            raise ValueError("SWITCHING_OFF is only valid in the ON phase")
        if self.elapsed < 0.0:
            raise ValueError("elapsed must be non-negative")


OFF_STATE = OtsState(Phase.OFF)
ON_STATE = OtsState(Phase.ON)


def ots_current(p: OtsParams, s: OtsState, v: float) -> float:
    """Device current for voltage v (positive terminal minus negative).

    Off phase: ohmic leakage.  On phase: conduction referenced to the
    holding voltage, odd in v, zero inside the |v| < v_hold dead zone.
    """
    if not math.isfinite(v):
        raise ValueError(f"non-finite device voltage: {v!r}")
    if s.phase is Phase.OFF:
        return p.g_off * v
    return math.copysign(max(0.0, abs(v) - p.v_hold), v) / p.r_on


def ots_step(p: OtsParams, s: OtsState, v: float, dt: float) -> OtsState:
    """Advance the switching state by dt under applied voltage v.

    A transition condition (|v| >= v_th when off, |i| < i_hold when on)
    accumulates elapsed time while it holds; the phase flips once elapsed
    reaches the corresponding delay.  If the condition lapses the pending
    transition is cancelled.  With a zero delay the flip completes within
    the same step.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if not math.isfinite(v):
        raise ValueError(f"non-finite device voltage: {v!r}")

    if s.phase is Phase.OFF:
        if abs(v) >= p.v_th:
            elapsed = s.elapsed + dt if s.pending is Pending.SWITCHING_ON else dt
            if elapsed >= p.tau_on:
                return ON_STATE
            return OtsState(Phase.OFF, Pending.SWITCHING_ON, elapsed)
        return OFF_STATE if s.pending is not None or s.elapsed else s

    if abs(ots_current(p, s, v)) < p.i_hold:
        elapsed = s.elapsed + dt if s.pending is Pending.SWITCHING_OFF else dt
        if elapsed >= p.tau_off:
            return OFF_STATE
        return OtsState(Phase.ON, Pending.SWITCHING_OFF, elapsed)
    return ON_STATE if s.pending is not None or s.elapsed else s


def default_params(**overrides: float) -> OtsParams:
    """The calibrated default parameter set.

    The defaults are a calibration, not a measurement: they are chosen so
    that the captioned measurement circuit (9.1 kOhm bias resistor, 1 nF
    parallel capacitor, 100 Ohm series resistor) self-oscillates over a wide
    bias range and every gate template resolves its truth table at 5 V
    logic levels with >= 0.25 V static margin under +/-10 % input amplitude
    variation.
    """
    return replace(OtsParams(), **overrides) if overrides else OtsParams()
