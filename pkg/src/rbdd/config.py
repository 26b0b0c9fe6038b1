"""Run configuration: YAML files with explicit units, presets and overrides.

Every physical quantity is written with a unit, e.g. ``dt: 100 ns``,
``t2_fid: 360 us``, ``sigma: 4600 rad/s``.  Bare numbers are rejected for
those fields, so a missing unit can never silently mean seconds.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

import yaml

from .engine import DEFAULT_DT, DEFAULT_M_VALUES, SimConfig, default_workers
from .errors import InvalidInputError
from .noise import AmplitudeErrorModel, OUParams, RelaxationParams, calibrate
from .pulses import T_PI_DEFAULT, SchemeId, SchemeParams

EXPERIMENTS = ("rb", "coherence", "calibrate", "table1", "fig2", "fig3", "fig4")

_TIME = {"ns": 1e-9, "us": 1e-6, "µs": 1e-6, "ms": 1e-3, "s": 1.0}
_RATE = {"rad/s": 1.0, "Hz": 2 * math.pi, "kHz": 2e3 * math.pi, "MHz": 2e6 * math.pi}
_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-zµ/]+)\s*$")


class ConfigError(InvalidInputError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def parse_quantity(text, units: dict, field_name: str) -> float:
    if isinstance(text, bool) or not isinstance(text, str):
        raise ConfigError(field_name, f"expected a value with a unit ({', '.join(units)}), got {text!r}")
    match = _QUANTITY.match(text)
    if not match or match.group(2) not in units:
        raise ConfigError(field_name, f"cannot parse {text!r}; allowed units: {', '.join(units)}")
    return float(match.group(1)) * units[match.group(2)]


def parse_time(text, field_name: str) -> float:
    return parse_quantity(text, _TIME, field_name)


def parse_rate(text, field_name: str) -> float:
    """Angular rate in rad/s; Hz-type units are converted with 2 pi."""
    return parse_quantity(text, _RATE, field_name)


def format_time(seconds: float) -> str:
    # repr in seconds round-trips exactly, which keeps config echoes bit-exact
    return f"{seconds!r} s"


def format_rate(rad_per_s: float) -> str:
    return f"{rad_per_s!r} rad/s"


def parse_m_values(spec, field_name: str = "m_values") -> tuple[int, ...]:
    """``"1..80"`` (every integer), ``"1,2,4"``, ``"paper"`` or a list."""
    try:
        if isinstance(spec, str):
            s = spec.strip()
            if s == "paper":
                return DEFAULT_M_VALUES
            if ".." in s:
                lo, hi = (int(v) for v in s.split(".."))
                values = tuple(range(lo, hi + 1))
            else:
                values = tuple(int(v) for v in s.split(","))
        else:
            values = tuple(int(v) for v in spec)
    except (TypeError, ValueError):
        raise ConfigError(field_name, f"cannot parse {spec!r}") from None
    if not values or any(v < 1 for v in values) or list(values) != sorted(set(values)):
        raise ConfigError(field_name, "must be a strictly increasing list of positive integers")
    return values


def parse_eps(spec, field_name: str = "eps") -> AmplitudeErrorModel:
    """``none``, ``gaussian:0.05``, ``uniform:0.1`` or ``fixed:0.02``."""
    if spec is None or str(spec).strip() == "none":
        return AmplitudeErrorModel()
    kind, _, value = str(spec).partition(":")
    try:
        return AmplitudeErrorModel(kind.strip(), float(value))
    except (ValueError, InvalidInputError):
        raise ConfigError(field_name, f"expected none, gaussian:<sd>, uniform:<half-width> or fixed:<value>, "
                                      f"got {spec!r}") from None


def format_eps(m: AmplitudeErrorModel) -> str:
    return "none" if m.kind == "none" else f"{m.kind}:{m.value!r}"


@dataclass
class RunConfig:
    """Everything a run needs; :meth:`to_dict` round-trips through :func:`from_dict`."""

    experiment: str = "rb"
    scheme: str = "bare_bb1"
    m_values: tuple[int, ...] = DEFAULT_M_VALUES
    n_sequences: int = 32
    n_noise: int = 32
    seed: int = 0
    workers: int = field(default_factory=default_workers)
    dt: float = DEFAULT_DT
    t_pi: float = T_PI_DEFAULT
    noise: str = "off"  # off | paper | calibrated | explicit
    t2_fid: float = 360e-6
    t2_hahn: float = 740e-6
    sigma: float | None = None
    tau_c: float | None = None
    eps: AmplitudeErrorModel = field(default_factory=AmplitudeErrorModel)
    t1: float | None = None
    t2_limit: float = 760e-6
    t2_limit_long: float = 50e-3
    coherence_kind: str = "fid"
    coherence_points: tuple[float, ...] = ()
    dd_kind: str = "XY16"
    pulse_style: str = "rect"
    tau_delay: float = 0.0
    out_dir: str = "rbdd-out"

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError("experiment", f"must be one of {', '.join(EXPERIMENTS)}")
        try:
            SchemeId.parse(self.scheme)
        except InvalidInputError as exc:
            raise ConfigError("scheme", str(exc)) from None
        for name in ("n_sequences", "n_noise", "workers"):
            if not isinstance(getattr(self, name), int) or getattr(self, name) < 1:
                raise ConfigError(name, "must be a positive integer")
        for name in ("dt", "t_pi", "t2_fid", "t2_hahn", "t2_limit", "t2_limit_long"):
            if not getattr(self, name) > 0:
                raise ConfigError(name, "must be > 0")
        if self.noise not in ("off", "paper", "calibrated", "explicit"):
            raise ConfigError("noise", "must be off, paper, calibrated or explicit")
        if self.noise == "explicit" and (self.sigma is None or self.tau_c is None):
            raise ConfigError("noise", "explicit noise needs sigma and tau_c")
        if self.t1 is not None and not self.t1 > 0:
            raise ConfigError("t1", "must be > 0")
        if self.coherence_kind not in ("fid", "hahn", "dd"):
            raise ConfigError("coherence.kind", "must be fid, hahn or dd")
        if self.dd_kind not in ("XY4", "XY8", "XY16"):
            raise ConfigError("coherence.dd_kind", "must be XY4, XY8 or XY16")
        if self.pulse_style not in ("rect", "bb1"):
            raise ConfigError("coherence.pulse_style", "must be rect or bb1")
        if self.tau_delay < 0:
            raise ConfigError("coherence.tau_delay", "must be >= 0")
        return self

    def noise_params(self) -> OUParams | None:
        if self.noise == "off":
            return None
        if self.noise == "explicit":
            return OUParams(self.sigma, self.tau_c)
        if self.noise == "paper":
            return calibrate(360e-6, 740e-6)
        return calibrate(self.t2_fid, self.t2_hahn)

    def sim_config(self, noise: OUParams | None = None, **overrides) -> SimConfig:
        kw = dict(dt=self.dt, n_noise=self.n_noise, n_sequences=self.n_sequences, m_values=self.m_values,
                  scheme=self.scheme, noise=noise, eps_model=self.eps, relaxation=RelaxationParams(self.t1),
                  master_seed=self.seed, scheme_params=SchemeParams(omega1=math.pi / self.t_pi),
                  workers=self.workers)
        kw.update(overrides)
        return SimConfig(**kw)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "scheme": self.scheme,
            "m_values": list(self.m_values),
            "n_sequences": self.n_sequences,
            "n_noise": self.n_noise,
            "seed": self.seed,
            "workers": self.workers,
            "dt": format_time(self.dt),
            "t_pi": format_time(self.t_pi),
            "noise": {
                "mode": self.noise,
                "t2_fid": format_time(self.t2_fid),
                "t2_hahn": format_time(self.t2_hahn),
                "sigma": None if self.sigma is None else format_rate(self.sigma),
                "tau_c": None if self.tau_c is None else format_time(self.tau_c),
            },
            "eps": format_eps(self.eps),
            "t1": None if self.t1 is None else format_time(self.t1),
            "t2_limit": format_time(self.t2_limit),
            "t2_limit_long": format_time(self.t2_limit_long),
            "coherence": {
                "kind": self.coherence_kind,
                "points": [format_time(p) if self.coherence_kind != "dd" else p for p in self.coherence_points],
                "dd_kind": self.dd_kind,
                "pulse_style": self.pulse_style,
                "tau_delay": format_time(self.tau_delay),
            },
            "out_dir": self.out_dir,
        }


_TOP_KEYS = {"experiment", "scheme", "m_values", "n_sequences", "n_noise", "seed", "workers", "dt", "t_pi",
             "noise", "eps", "t1", "t2_limit", "t2_limit_long", "coherence", "out_dir", "preset"}
_NOISE_KEYS = {"mode", "t2_fid", "t2_hahn", "sigma", "tau_c"}
_COH_KEYS = {"kind", "points", "dd_kind", "pulse_style", "tau_delay"}

PRESETS = {
    "paper-noise": dict(noise="paper", eps=AmplitudeErrorModel("gaussian", 0.05), t1=1.52,
                        n_sequences=32, m_values=DEFAULT_M_VALUES, t_pi=T_PI_DEFAULT),
    "ideal": dict(noise="off", eps=AmplitudeErrorModel(), t1=None),
}


def apply_preset(cfg: RunConfig, name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return replace(cfg, **PRESETS[name])


def _int(value, name):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(name, f"expected an integer, got {value!r}")
    return value


def from_dict(data: dict, base: RunConfig | None = None) -> RunConfig:
    """Build a RunConfig from parsed YAML, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "configuration must be a mapping")
    if "config" in data and isinstance(data["config"], dict):
        # A run summary: reuse its config echo.
        data = data["config"]
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    cfg = base or RunConfig()
    if "preset" in data:
        cfg = apply_preset(cfg, data["preset"])
    kw: dict = {}
    for name in ("experiment", "scheme", "out_dir"):
        if name in data:
            kw[name] = str(data[name])
    if "m_values" in data:
        kw["m_values"] = parse_m_values(data["m_values"])
    for name in ("n_sequences", "n_noise", "seed", "workers"):
        if name in data:
            kw[name] = _int(data[name], name)
    for name in ("dt", "t_pi", "t2_limit", "t2_limit_long"):
        if name in data:
            kw[name] = parse_time(data[name], name)
    if "t1" in data:
        kw["t1"] = None if data["t1"] is None else parse_time(data["t1"], "t1")
    if "eps" in data:
        kw["eps"] = parse_eps(data["eps"])
    noise = data.get("noise")
    if isinstance(noise, str) or noise is None:
        if noise is not None:
            kw["noise"] = noise
    elif isinstance(noise, dict):
        unknown = set(noise) - _NOISE_KEYS
        if unknown:
            raise ConfigError(f"noise.{sorted(unknown)[0]}", "unknown key")
        if "mode" in noise:
            kw["noise"] = str(noise["mode"])
        for name in ("t2_fid", "t2_hahn", "tau_c"):
            if noise.get(name) is not None:
                kw[name] = parse_time(noise[name], f"noise.{name}")
        if noise.get("sigma") is not None:
            kw["sigma"] = parse_rate(noise["sigma"], "noise.sigma")
    else:
        raise ConfigError("noise", "expected a mode string or a mapping")
    coh = data.get("coherence")
    if coh is not None:
        if not isinstance(coh, dict):
            raise ConfigError("coherence", "expected a mapping")
        unknown = set(coh) - _COH_KEYS
        if unknown:
            raise ConfigError(f"coherence.{sorted(unknown)[0]}", "unknown key")
        for name, key in (("kind", "coherence_kind"), ("dd_kind", "dd_kind"), ("pulse_style", "pulse_style")):
            if name in coh:
                kw[key] = str(coh[name])
        if "tau_delay" in coh:
            kw["tau_delay"] = parse_time(coh["tau_delay"], "coherence.tau_delay")
        if "points" in coh:
            kind = kw.get("coherence_kind", cfg.coherence_kind)
            if kind == "dd":
                kw["coherence_points"] = tuple(_int(p, "coherence.points") for p in coh["points"])
            else:
                kw["coherence_points"] = tuple(parse_time(p, "coherence.points") for p in coh["points"])
    return replace(cfg, **kw).validate()


def load_config(path: str, base: RunConfig | None = None) -> RunConfig:
    """Read a YAML (or JSON) configuration file; a run summary is accepted too."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError("<file>", f"not valid YAML: {exc}") from None
    return from_dict(data or {}, base)
