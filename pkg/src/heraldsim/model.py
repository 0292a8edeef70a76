"""Configuration and value types shared by every other module.

All times are SI seconds and all counts are plain integers. Config objects
are frozen dataclasses, so they can be handed to worker processes as-is.
"""
from __future__ import annotations

import enum
import math
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    """Raised for unparsable, unknown or out-of-range configuration."""


@dataclass(frozen=True)
class SourceConfig:
    pair_rate: float = 87257.6  # pairs/s; paper_config() swaps in the exact back-solved value
    duration: float = 0.2
    signal_channel_efficiency: float = 0.38
    wavelength_signal_nm: float = 792.0
    wavelength_idler_nm: float = 824.0


@dataclass(frozen=True)
class SampleConfig:
    transmission: float = 1.0


@dataclass(frozen=True)
class IdlerChannelConfig:
    # eta_source * eta_det; the idler detector's own efficiency field is an
    # additional factor on top of this and defaults to 1
    setup_efficiency: float = 0.38
    delay_s: float = 1.0e-6


@dataclass(frozen=True)
class SwitchConfig:
    enabled: bool = True
    electronic_latency_s: float = 0.6e-6
    gate_width_s: float = 1.0e-6
    off_state_leakage: float = 0.0366
    on_state_transmission: float = 1.0


@dataclass(frozen=True)
class DetectorConfig:
    efficiency: float = 1.0
    dark_rate: float = 100.0
    dead_time_s: float = 0.0


@dataclass(frozen=True)
class CoincidenceConfig:
    window_s: float = 30e-9
    nominal_offset_s: float = 1.0e-6


@dataclass(frozen=True)
class ExperimentConfig:
    source: SourceConfig = field(default_factory=SourceConfig)
    sample: SampleConfig = field(default_factory=SampleConfig)
    idler_channel: IdlerChannelConfig = field(default_factory=IdlerChannelConfig)
    switch: SwitchConfig = field(default_factory=SwitchConfig)
    herald_detector: DetectorConfig = field(default_factory=DetectorConfig)
    idler_detector: DetectorConfig = field(default_factory=DetectorConfig)
    coincidence: CoincidenceConfig = field(default_factory=CoincidenceConfig)
    repetitions: int = 3000
    master_seed: Optional[int] = 20170601
    hbt_mode: bool = False
    jitter_std: float = 0.0

    def with_transmission(self, eta: float) -> "ExperimentConfig":
        return replace(self, sample=SampleConfig(transmission=float(eta)))

    def with_switch(self, enabled: bool) -> "ExperimentConfig":
        return replace(self, switch=replace(self.switch, enabled=bool(enabled)))

    def with_seed(self, seed: Optional[int]) -> "ExperimentConfig":
        return replace(self, master_seed=seed)


class Channel(enum.Enum):
    HERALD = "herald"
    IDLER = "idler"
    IDLER_B = "idler_b"


@dataclass(frozen=True)
class TimeTagStream:
    """Detection timestamps of one channel, strictly ascending."""

    channel_id: Channel
    timestamps: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.float64)
        if ts.ndim != 1:
            raise ValueError("timestamps must be one-dimensional")
        if ts.size > 1 and not np.all(np.diff(ts) > 0):
            raise ValueError("timestamps must be strictly increasing")
        object.__setattr__(self, "timestamps", ts)

    def __len__(self):
        return self.timestamps.size


@dataclass(frozen=True)
class TrialCounts:
    """Per-trial tallies.

    ``n_coincidence`` is N_C, the one-to-one matched herald/idler count (the
    idler channel is splitter output A in HBT mode). The ``n_coinc_herald_*``
    and ``n_triple`` fields are per-herald window counts for the g2
    measurement and stay zero outside HBT mode. ``dark_estimate`` is the
    expected number of idler dark clicks landing in herald coincidence
    windows.
    """

    n_herald: int
    n_idler: int
    n_idler_b: int
    n_coincidence: int
    n_coinc_herald_a: int
    n_coinc_herald_b: int
    n_triple: int
    dark_estimate: float = 0.0

    def __post_init__(self):
        counts = (self.n_herald, self.n_idler, self.n_idler_b, self.n_coincidence,
                  self.n_coinc_herald_a, self.n_coinc_herald_b, self.n_triple)
        if any(c < 0 for c in counts):
            raise ValueError("counts must be nonnegative")
        if self.n_coincidence > min(self.n_herald, self.n_idler):
            raise ValueError("n_coincidence exceeds min(n_herald, n_idler)")
        if self.n_triple > min(self.n_coinc_herald_a, self.n_coinc_herald_b):
            raise ValueError("n_triple exceeds min(n_coinc_herald_a, n_coinc_herald_b)")


@dataclass(frozen=True)
class CurvePoint:
    eta: float
    r_analytic: float
    r_simulated: Optional[float] = None
    stderr: Optional[float] = None
    n_trials: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta={self.eta} out of [0,1]")
        if self.stderr is not None and not self.stderr >= 0:
            raise ValueError("stderr must be >= 0")


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()
    warnings: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations


def _unit(value, name, out):
    if not (isinstance(value, (int, float)) and 0.0 <= value <= 1.0):
        out.append(f"{name} out of [0,1]")


def validate(config: ExperimentConfig) -> ValidationReport:
    """Check every config invariant; never raises.

    Returns the violated invariants (empty means runnable) plus warnings
    for settings that are legal but physically odd.
    """
    bad: list = []
    warn: list = []
    src, sw, ch = config.source, config.switch, config.idler_channel

    if not src.pair_rate > 0:
        bad.append("source.pair_rate must be > 0")
    if not src.duration > 0:
        bad.append("source.duration must be > 0")
    _unit(src.signal_channel_efficiency, "source.signal_channel_efficiency", bad)
    _unit(config.sample.transmission, "sample.transmission", bad)
    _unit(ch.setup_efficiency, "idler_channel.setup_efficiency", bad)
    if not ch.delay_s >= 0:
        bad.append("idler_channel.delay_s must be >= 0")
    if sw.enabled and not sw.gate_width_s > 0:
        bad.append("switch.gate_width_s must be > 0 when enabled")
    if not sw.electronic_latency_s >= 0:
        bad.append("switch.electronic_latency_s must be >= 0")
    _unit(sw.off_state_leakage, "switch.off_state_leakage", bad)
    _unit(sw.on_state_transmission, "switch.on_state_transmission", bad)
    for name in ("herald_detector", "idler_detector"):
        det = getattr(config, name)
        _unit(det.efficiency, f"{name}.efficiency", bad)
        if not det.dark_rate >= 0:
            bad.append(f"{name}.dark_rate must be >= 0")
        if not det.dead_time_s >= 0:
            bad.append(f"{name}.dead_time_s must be >= 0")
    if not config.coincidence.window_s > 0:
        bad.append("coincidence.window_s must be > 0")
    if not (isinstance(config.repetitions, int) and config.repetitions >= 2):
        bad.append("repetitions must be an integer >= 2")
    if config.master_seed is None:
        bad.append("master_seed missing")
    elif not isinstance(config.master_seed, int) or config.master_seed < 0:
        bad.append("master_seed must be a nonnegative integer")
    if not config.jitter_std >= 0:
        bad.append("jitter_std must be >= 0")

    if sw.enabled and sw.gate_width_s > 0:
        if ch.delay_s < sw.electronic_latency_s:
            warn.append("heralded photon precedes gate opening")
        elif ch.delay_s >= sw.electronic_latency_s + sw.gate_width_s:
            warn.append("heralded photon arrives after gate closes")
        if sw.off_state_leakage > sw.on_state_transmission:
            warn.append("switch leaks more when closed than it transmits when open")
        lam = src.pair_rate * src.signal_channel_efficiency + config.herald_detector.dark_rate
        if lam * sw.gate_width_s > 0.5:
            warn.append("gate duty cycle above 50%: switch barely filters unheralded photons")
    if abs(config.coincidence.nominal_offset_s - ch.delay_s) > config.coincidence.window_s / 2:
        warn.append("coincidence offset misses the idler delay; N_C will be accidentals only")
    return ValidationReport(tuple(bad), tuple(warn))


def gate_duty_cycle(config: ExperimentConfig) -> float:
    """Fraction of time a merged gate is open for Poisson herald clicks."""
    lam = (config.source.pair_rate * config.source.signal_channel_efficiency
           * config.herald_detector.efficiency + config.herald_detector.dark_rate)
    return -math.expm1(-lam * config.switch.gate_width_s)


def predicted_heralding_fidelity(config: ExperimentConfig) -> float:
    """Expected fraction of detected idler photons that were heralded (eta_S).

    Ignores dead time and accidental herald/idler overlap; both are small at
    the rates this toolkit targets.
    """
    a = config.source.signal_channel_efficiency * config.herald_detector.efficiency
    sw = config.switch
    if not sw.enabled:
        return a
    d = gate_duty_cycle(config)
    captured = sw.electronic_latency_s <= config.idler_channel.delay_s < (
        sw.electronic_latency_s + sw.gate_width_s)
    stray = d * sw.on_state_transmission + (1.0 - d) * sw.off_state_leakage
    own = sw.on_state_transmission if captured else stray
    heralded = a * own
    total = heralded + (1.0 - a) * stray
    return heralded / total if total > 0 else 0.0


def solve_operating_point(idler_rate: float, eta_s: float, *,
                          signal_efficiency: float, setup_efficiency: float,
                          gate_width_s: float, on_state_transmission: float = 1.0,
                          idler_detector_efficiency: float = 1.0,
                          herald_detector_efficiency: float = 1.0,
                          herald_dark_rate: float = 0.0) -> tuple:
    """Back-solve (pair_rate, off_state_leakage) from a detected idler rate at eta=1
    and a target heralding fidelity, with the switch enabled."""
    a = signal_efficiency * herald_detector_efficiency
    t = setup_efficiency * on_state_transmission * idler_detector_efficiency
    if a <= 0 or t <= 0 or not 0 < eta_s <= 1:
        raise ConfigError("operating point needs positive efficiencies and 0 < eta_s <= 1")
    pair_rate = eta_s * idler_rate / (a * t)
    d = -math.expm1(-(pair_rate * a + herald_dark_rate) * gate_width_s)
    # heralded : stray = a*on : (1-a)*(d*on + (1-d)*leak)
    stray = a * on_state_transmission * (1.0 - eta_s) / (eta_s * (1.0 - a))
    leak = (stray - d * on_state_transmission) / (1.0 - d)
    if not 0.0 <= leak <= 1.0:
        raise ConfigError(f"no off-state leakage in [0,1] reaches eta_s={eta_s} (needs {leak:.4g})")
    return pair_rate, leak


PAPER_IDLER_RATE = 14e3
PAPER_ETA_S = 0.90
DESK_DURATION = 0.02


def paper_config(master_seed: Optional[int] = 20170601, **overrides) -> ExperimentConfig:
    """Operating point of the switch-on experiment at the full 0.2 s integration time.

    The pair rate and off-state leakage are back-solved so that the detected
    idler rate is 14 k/s and the emergent heralding fidelity is 0.90 at
    sample transmission 1.
    """
    base = ExperimentConfig(master_seed=master_seed)
    pair_rate, leak = solve_operating_point(
        PAPER_IDLER_RATE, PAPER_ETA_S,
        signal_efficiency=base.source.signal_channel_efficiency,
        setup_efficiency=base.idler_channel.setup_efficiency,
        gate_width_s=base.switch.gate_width_s,
        on_state_transmission=base.switch.on_state_transmission,
        idler_detector_efficiency=base.idler_detector.efficiency,
        herald_detector_efficiency=base.herald_detector.efficiency,
        herald_dark_rate=base.herald_detector.dark_rate,
    )
    cfg = replace(base,
                  source=replace(base.source, pair_rate=pair_rate),
                  switch=replace(base.switch, off_state_leakage=leak))
    return replace(cfg, **overrides) if overrides else cfg


def desk_config(master_seed: Optional[int] = 20170601, **overrides) -> ExperimentConfig:
    """Reference operating point with a 10x shorter integration per trial.

    Rates are left untouched so the emergent leakage (which scales with the
    pair rate) keeps the target heralding fidelity.
    """
    cfg = paper_config(master_seed)
    cfg = replace(cfg, source=replace(cfg.source, duration=DESK_DURATION))
    return replace(cfg, **overrides) if overrides else cfg


PROFILES = {"paper": paper_config, "desk": desk_config}


# ---------------------------------------------------------------- TOML I/O

_SECTIONS = {
    "source": SourceConfig,
    "sample": SampleConfig,
    "idler_channel": IdlerChannelConfig,
    "switch": SwitchConfig,
    "herald_detector": DetectorConfig,
    "idler_detector": DetectorConfig,
    "coincidence": CoincidenceConfig,
}
_TOP_LEVEL = {"repetitions": int, "master_seed": int, "hbt_mode": bool, "jitter_std": float}


def _coerce(value: Any, kind: type, where: str):
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if kind is int:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return int(value)
    return float(value)


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build a config from a nested mapping; missing keys keep their defaults.

    Unknown sections or keys raise :class:`ConfigError`.
    """
    kwargs: dict = {}
    for key, value in data.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"[{key}] must be a table")
            cls = _SECTIONS[key]
            known = {f.name: f for f in fields(cls)}
            sub = {}
            for k, v in value.items():
                if k not in known:
                    raise ConfigError(f"unknown key {key}.{k}")
                kind = bool if known[k].type in ("bool", bool) else float
                sub[k] = _coerce(v, kind, f"{key}.{k}")
            kwargs[key] = cls(**sub)
        elif key in _TOP_LEVEL:
            kwargs[key] = _coerce(value, _TOP_LEVEL[key], key)
        else:
            raise ConfigError(f"unknown key {key}")
    kwargs.setdefault("master_seed", None)
    return ExperimentConfig(**kwargs)


def config_to_dict(config: ExperimentConfig) -> dict:
    data = asdict(config)
    if data["master_seed"] is None:
        del data["master_seed"]
    # top-level scalars first so the TOML document is valid
    ordered = {k: data[k] for k in _TOP_LEVEL if k in data}
    ordered.update({k: data[k] for k in _SECTIONS})
    return ordered


def loads_config(text: str) -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    return config_from_dict(data)


def dumps_config(config: ExperimentConfig) -> str:
    return tomli_w.dumps(config_to_dict(config))


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads_config(text)


def save_config(config: ExperimentConfig, path) -> None:
    Path(path).write_text(dumps_config(config))
