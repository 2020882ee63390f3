"""Run configuration: a flat key=value file merged under command-line
flags, covering device overrides, solver settings, logic encoding, pipeline
knobs, and the scaling exponent.  Unknown keys are rejected."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .device import OtsParams, default_params
from .gates import LogicEncoding
from .netlist_io import parse_si
from .pipeline import StreamSettings


@dataclass(frozen=True)
class RunConfig:
    # device parameter overrides (None = calibrated default)
    v_th: float | None = None
    v_hold: float | None = None
    r_on: float | None = None
    g_off: float | None = None
    i_hold: float | None = None
    tau_on: float | None = None
    tau_off: float | None = None
    # solver
    dt_device: float = 10e-9   # device-physics runs (I-V, oscillator)
    dt_logic: float = 50e-9    # logic and pipeline runs
    max_newton: int = 8
    residual_tol: float = 1e-9
    # logic encoding
    v_high: float = 5.0
    bit_width: float = 50e-6
    settle: float = 50e-6
    # pipeline
    binarize_threshold: int = 128
    otsu: bool = False
    count_threshold: int = 1
    segment_clocks: int = 256
    n_jobs: int = 1
    gradient_window: float = 1e-3
    # energy scaling
    exponent: float = 1.6

    _FLOAT_KEYS = {
        "v_th", "v_hold", "r_on", "g_off", "i_hold", "tau_on", "tau_off",
        "dt_device", "dt_logic", "residual_tol", "v_high", "bit_width",
        "settle", "gradient_window", "exponent",
    }
    _INT_KEYS = {"max_newton", "binarize_threshold", "count_threshold",
                 "segment_clocks", "n_jobs"}
    _BOOL_KEYS = {"otsu"}

    def device_params(self) -> OtsParams:
        overrides = {
            f.name: getattr(self, f.name)
            for f in fields(OtsParams)
            if getattr(self, f.name, None) is not None
        }
        return replace(default_params(), **overrides) if overrides else default_params()

    def encoding(self) -> LogicEncoding:
        return LogicEncoding(v_high=self.v_high, bit_width=self.bit_width, settle=self.settle)

    def stream_settings(self) -> StreamSettings:
        return StreamSettings(
            dt=self.dt_logic,
            count_threshold=self.count_threshold,
            segment_clocks=self.segment_clocks,
            n_jobs=self.n_jobs,
        )

    def merged(self, **overrides) -> "RunConfig":
        clean = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **clean) if clean else self


class ConfigError(ValueError):
    pass


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), origin=path)


def parse_config(text: str, origin: str = "<config>") -> RunConfig:
    values: dict[str, object] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{line_no}: expected key=value, got {line!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key in RunConfig._FLOAT_KEYS:
            try:
                values[key] = parse_si(val)
            except ValueError as exc:
                raise ConfigError(f"{origin}:{line_no}: {exc}") from None
        elif key in RunConfig._INT_KEYS:
            try:
                values[key] = int(val)
            except ValueError:
                raise ConfigError(f"{origin}:{line_no}: {key} must be an integer") from None
        elif key in RunConfig._BOOL_KEYS:
            if val.lower() not in ("0", "1", "true", "false", "yes", "no"):
                raise ConfigError(f"{origin}:{line_no}: {key} must be a boolean")
            values[key] = val.lower() in ("1", "true", "yes")
        else:
            raise ConfigError(f"{origin}:{line_no}: unknown key {key!r}")
    try:
        return RunConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{origin}: {exc}") from None
