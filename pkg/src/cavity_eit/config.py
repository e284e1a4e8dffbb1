"""Run configuration in laboratory units (MHz, um, mm, us, cm^-3).

Configurations are YAML (or JSON) documents.  Every value is converted to
SI / rad/s exactly once, in :meth:`RunConfig.to_simulation`.  A summary
record written by the CLI embeds the resolved configuration under a
``config`` key and can be fed straight back to :func:`load_config`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .core import CrystalGeometry, ModeKind, ModeProfile, SystemRates, default_n_shells
from .dynamics import SAMPLES_PER_DECAY, SimulationConfig
from .pulses import PulseSchedule


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class RatesSection:
    g_mhz: float = 0.37
    kappa_mhz: float = 1.5
    gamma_mhz: float = 11.3
    gamma0_mhz: float = 0.0


@dataclass(frozen=True)
class GeometrySection:
    density_cm3: float = 6.1e8
    length_mm: float = 3.0
    radius_um: float = 100.0


@dataclass(frozen=True)
class ProbeSection:
    mode: str = "TEM00"
    waist_um: float = 37.0


@dataclass(frozen=True)
class ControlSection:
    mode: str = "same-as-probe"


@dataclass(frozen=True)
class ScheduleSection:
    duration_us: float = 2.0
    A_w: float = 1.0
    A_r: float | None = None
    start_us: float | None = None
    write_end_us: float | None = None
    read_start_us: float | None = None
    end_us: float | None = None


@dataclass(frozen=True)
class NumericsSection:
    n_shells: int | None = None
    rtol: float = 1e-8
    atol: float = 1e-10
    samples_per_decay: int = SAMPLES_PER_DECAY


@dataclass(frozen=True)
class SweepSection:
    radius_ratios: tuple = tuple(round(0.1 * k, 1) for k in range(1, 31))
    length_mm: tuple = (1.0, 2.0, 3.0, 4.0, 5.0)
    grid_radius_ratios: tuple = (0.25, 0.5, 0.75, 0.95, 1.25, 1.75, 2.5, 3.0)
    density_radius_ratios: tuple = (0.5, 0.95, 2.7)
    A_bounds: tuple = (0.2, 8.0)
    tol_A: float = 0.02


@dataclass(frozen=True)
class OutputSection:
    dir: str = "out"


_SECTIONS = {
    "rates": RatesSection,
    "geometry": GeometrySection,
    "probe": ProbeSection,
    "control": ControlSection,
    "schedule": ScheduleSection,
    "numerics": NumericsSection,
    "sweep": SweepSection,
    "output": OutputSection,
}

CONTROL_MODES = ("same-as-probe", "uniform", "off")


@dataclass(frozen=True)
class RunConfig:
    rates: RatesSection = field(default_factory=RatesSection)
    geometry: GeometrySection = field(default_factory=GeometrySection)
    probe: ProbeSection = field(default_factory=ProbeSection)
    control: ControlSection = field(default_factory=ControlSection)
    schedule: ScheduleSection = field(default_factory=ScheduleSection)
    numerics: NumericsSection = field(default_factory=NumericsSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    output: OutputSection = field(default_factory=OutputSection)

    def to_dict(self) -> dict:
        out = {}
        for name in _SECTIONS:
            out[name] = {k: list(v) if isinstance(v, tuple) else v
                         for k, v in asdict(getattr(self, name)).items()}
        return out

    @classmethod
    def from_dict(cls, doc) -> "RunConfig":
        return _validate(doc)

    def probe_profile(self) -> ModeProfile:
        return ModeProfile(self.probe.mode, self.probe.waist_um * 1e-6)

    def control_profile(self) -> ModeProfile:
        if self.control.mode == "uniform":
            return ModeProfile.uniform()
        return self.probe_profile()

    def to_simulation(self) -> SimulationConfig:
        s = self.schedule
        us = 1e-6
        sched = PulseSchedule(
            T=s.duration_us * us, A_w=s.A_w, A_r=s.A_r,
            t_start=s.start_us * us, T_w=s.write_end_us * us,
            T_r=s.read_start_us * us, t_end=s.end_us * us,
        )
        r = self.rates
        g = self.geometry
        return SimulationConfig(
            rates=SystemRates.from_mhz(r.g_mhz, r.kappa_mhz, r.gamma_mhz, r.gamma0_mhz),
            geometry=CrystalGeometry(rho=g.density_cm3 * 1e6, length=g.length_mm * 1e-3,
                                     radius=g.radius_um * 1e-6),
            probe=self.probe_profile(),
            control=self.control_profile(),
            schedule=sched,
            n_shells=self.numerics.n_shells,
            rtol=self.numerics.rtol,
            atol=self.numerics.atol,
            samples_per_decay=self.numerics.samples_per_decay,
            control_enabled=self.control.mode != "off",
        )


def _number(section, key, value, *, integer=False, optional=False):
    where = f"{section}.{key}"
    if value is None:
        if optional:
            return None
        raise ConfigError(f"{where} is required")
    if isinstance(value, bool):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    if isinstance(value, str):
        # PyYAML reads exponent forms without a dot, e.g. 1e-8, as strings
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(f"{where} must be a number, got {value!r}") from None
    if not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{where} must be a finite number, got {value!r}")
    if integer:
        if int(value) != value:
            raise ConfigError(f"{where} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _check(cond, message):
    if not cond:
        raise ConfigError(message)


def _section(doc, name):
    raw = doc.get(name)
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{name} must be a mapping, got {type(raw).__name__}")
    allowed = {f.name for f in fields(_SECTIONS[name])}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {name}: {', '.join(unknown)}")
    return raw


def _validate(doc) -> RunConfig:
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a mapping of sections")
    unknown = sorted(set(doc) - set(_SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")

    raw = _section(doc, "rates")
    rates = {}
    for f in fields(RatesSection):
        v = _number("rates", f.name, raw.get(f.name, f.default))
        _check(v >= 0, f"rates.{f.name} >= 0 violated: {v!r}")
        rates[f.name] = v
    _check(rates["kappa_mhz"] > 0, "rates.kappa_mhz > 0 violated")
    _check(rates["gamma_mhz"] > 0, "rates.gamma_mhz > 0 violated")

    raw = _section(doc, "geometry")
    geom = {f.name: _number("geometry", f.name, raw.get(f.name, f.default))
            for f in fields(GeometrySection)}
    _check(geom["density_cm3"] > 0, "geometry.density_cm3 > 0 violated")
    _check(geom["length_mm"] > 0, "geometry.length_mm > 0 violated")
    _check(geom["radius_um"] >= 0, "geometry.radius_um >= 0 violated")

    raw = _section(doc, "probe")
    mode = raw.get("mode", ProbeSection.mode)
    kinds = [k.value for k in ModeKind if k is not ModeKind.UNIFORM]
    _check(mode in kinds, f"probe.mode must be one of {kinds}, got {mode!r}")
    waist = _number("probe", "waist_um", raw.get("waist_um", ProbeSection.waist_um))
    _check(waist > 0, "probe.waist_um > 0 violated")
    probe = ProbeSection(mode, waist)

    raw = _section(doc, "control")
    cmode = raw.get("mode", ControlSection.mode)
    _check(cmode in CONTROL_MODES, f"control.mode must be one of {list(CONTROL_MODES)}, got {cmode!r}")

    raw = _section(doc, "schedule")
    T = _number("schedule", "duration_us", raw.get("duration_us", ScheduleSection.duration_us))
    _check(T > 0, "schedule.duration_us > 0 violated")
    A_w = _number("schedule", "A_w", raw.get("A_w", ScheduleSection.A_w))
    _check(A_w > 0, "schedule.A_w > 0 violated")
    A_r = _number("schedule", "A_r", raw.get("A_r"), optional=True)
    A_r = A_w if A_r is None else A_r
    _check(A_r > 0, "schedule.A_r > 0 violated")
    default = PulseSchedule.default(T=T * 1e-6)
    times = {}
    for key, attr in (("start_us", "t_start"), ("write_end_us", "T_w"),
                      ("read_start_us", "T_r"), ("end_us", "t_end")):
        v = _number("schedule", key, raw.get(key), optional=True)
        times[key] = getattr(default, attr) * 1e6 if v is None else v
    if raw.get("read_start_us") is None and raw.get("write_end_us") is not None:
        times["read_start_us"] = times["write_end_us"] + (default.T_r - default.T_w) * 1e6
    if raw.get("end_us") is None:
        store = times["read_start_us"] - times["write_end_us"]
        times["end_us"] = times["read_start_us"] + store + (default.t_end - default.T_r - default.T_s) * 1e6
    _check(times["start_us"] < times["write_end_us"] < times["read_start_us"] < times["end_us"],
           "schedule must satisfy start_us < write_end_us < read_start_us < end_us")
    schedule = ScheduleSection(T, A_w, A_r, **times)

    raw = _section(doc, "numerics")
    rtol = _number("numerics", "rtol", raw.get("rtol", NumericsSection.rtol))
    _check(1e-12 <= rtol <= 1e-4, "numerics.rtol in [1e-12, 1e-4] violated")
    atol = _number("numerics", "atol", raw.get("atol", NumericsSection.atol))
    _check(atol > 0, "numerics.atol > 0 violated")
    spd = _number("numerics", "samples_per_decay",
                  raw.get("samples_per_decay", NumericsSection.samples_per_decay), integer=True)
    _check(spd >= 20, "numerics.samples_per_decay >= 20 violated")
    n_shells = _number("numerics", "n_shells", raw.get("n_shells"), integer=True, optional=True)
    probe_profile = ModeProfile(probe.mode, probe.waist_um * 1e-6)
    control_profile = ModeProfile.uniform() if cmode == "uniform" else probe_profile
    if n_shells is None:
        n_shells = default_n_shells(geom["radius_um"] * 1e-6, probe_profile, control_profile)
    _check(n_shells >= 1, "numerics.n_shells >= 1 violated")
    numerics = NumericsSection(n_shells, rtol, atol, spd)

    raw = _section(doc, "sweep")
    sweep = {}
    for f in fields(SweepSection):
        if f.name == "tol_A":
            v = _number("sweep", "tol_A", raw.get("tol_A", f.default))
            _check(v > 0, "sweep.tol_A > 0 violated")
            sweep["tol_A"] = v
            continue
        values = raw.get(f.name, f.default)
        if not isinstance(values, (list, tuple)) or not values:
            raise ConfigError(f"sweep.{f.name} must be a nonempty list")
        values = tuple(_number("sweep", f.name, v) for v in values)
        _check(all(v > 0 for v in values), f"sweep.{f.name} entries > 0 violated")
        _check(list(values) == sorted(values), f"sweep.{f.name} must be sorted")
        sweep[f.name] = values
    _check(len(sweep["A_bounds"]) == 2, "sweep.A_bounds must have two entries")

    raw = _section(doc, "output")
    out_dir = raw.get("dir", OutputSection.dir)
    _check(isinstance(out_dir, str) and out_dir, "output.dir must be a nonempty string")

    return RunConfig(
        rates=RatesSection(**rates),
        geometry=GeometrySection(**geom),
        probe=probe,
        control=ControlSection(cmode),
        schedule=schedule,
        numerics=numerics,
        sweep=SweepSection(**sweep),
        output=OutputSection(out_dir),
    )


def load_config(path) -> RunConfig:
    """Read and validate a configuration file or a CLI summary record."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"configuration file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() == ".json":
            doc = json.loads(text)
        else:
            doc = yaml.safe_load(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"{path}: parse error{where}: {getattr(exc, 'problem', exc)}") from None
    if isinstance(doc, dict) and "config" in doc and isinstance(doc["config"], dict):
        doc = doc["config"]
    return _validate(doc)
