"""Run configuration: defaults, INI-style config files and ``key=value``
overrides, with precedence override > file > default."""
import configparser
from dataclasses import dataclass, fields, replace

from .errors import InvalidInput
from .model import BufferParams, ModelParams
from .numerics.integrate import IntegratorConfig


def _floats(text):
    return tuple(float(x) for x in str(text).replace(";", ",").split(",") if x.strip())


@dataclass(frozen=True)
class RunConfig:
    # model
    kappa: float = 20.0
    K: float = 13.0
    gamma1: float = 380.0
    gamma2: float = 1000.0
    gamma3: float = 1672.0
    # scan
    mu_lo: float = 0.0
    mu_hi: float = 30.0
    steady_points: int = 100
    hopf_scan_points: int = 512
    # orbits
    orbit_points: int = 50
    # integrator (orbit work)
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    # buffer
    p1: float = 10.0
    p2: float = 1.0
    map_mu_points: int = 61
    map_p1: tuple = (0.0, 0.5, 1.0, 1.1, 2.0, 5.0, 10.0, 100.0, 1000.0)
    map_p2: tuple = (0.01, 0.05, 0.09, 0.1, 0.5, 1.0, 10.0, 100.0)
    # bode
    mu0: float = 1.0
    bode_p2: float = 1.0
    bode_p1: tuple = (0.0, 0.5, 1.1, 10.0, 1000.0)
    omega_min: float = 1e-2
    omega_max: float = 1e3
    omega_points: int = 400
    # report
    report_orbits: bool = True
    # output
    out: str = "."
    format: str = "both"

    def __post_init__(self):
        try:
            self.model_params()
            BufferParams(self.p1, self.p2)
            self.integrator()
        except ValueError as exc:
            raise InvalidInput(str(exc)) from exc
        if not 0.0 <= self.mu_lo < self.mu_hi:
            raise InvalidInput("need 0 <= mu_lo < mu_hi")
        for name in ("steady_points", "hopf_scan_points", "orbit_points",
                     "map_mu_points", "omega_points"):
            if getattr(self, name) < 1:
                raise InvalidInput(f"{name} must be positive")
        if self.hopf_scan_points < 8:
            raise InvalidInput("hopf_scan_points must be at least 8")
        if not 0 < self.omega_min < self.omega_max:
            raise InvalidInput("need 0 < omega_min < omega_max")
        if not self.mu0 > 0:
            raise InvalidInput("mu0 must be positive")
        if self.bode_p2 < 0 or any(p < 0 for p in self.bode_p1 + self.map_p1 + self.map_p2):
            raise InvalidInput("buffer parameters must be non-negative")
        if self.format not in ("csv", "json", "both"):
            raise InvalidInput(f"format must be csv, json or both, got {self.format!r}")

    def model_params(self):
        return ModelParams(self.kappa, self.K, self.gamma1, self.gamma2, self.gamma3)

    def integrator(self):
        return IntegratorConfig(abs_tol=self.abs_tol, rel_tol=self.rel_tol, h_init=1e-4, h_max=1.0)

    def as_dict(self):
        return {f.name: (list(v) if isinstance(v := getattr(self, f.name), tuple) else v)
                for f in fields(self)}


SECTIONS = {
    "model": ("kappa", "K", "gamma1", "gamma2", "gamma3"),
    "scan": ("mu_lo", "mu_hi", "steady_points", "hopf_scan_points"),
    "orbits": ("orbit_points",),
    "integrator": ("abs_tol", "rel_tol"),
    "buffer": ("p1", "p2", "map_mu_points", "map_p1", "map_p2"),
    "bode": ("mu0", "bode_p2", "bode_p1", "omega_min", "omega_max", "omega_points"),
    "report": ("report_orbits",),
    "output": ("out", "format"),
}
_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key, text):
    kind = _TYPES[key]
    text = str(text).strip()
    try:
        if kind is tuple or kind == "tuple":
            return _floats(text)
        if kind is bool or kind == "bool":
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind is int or kind == "int":
            return int(text)
        if kind is float or kind == "float":
            return float(text)
    except ValueError as exc:
        raise InvalidInput(f"bad value for {key}: {text!r}") from exc
    return text


def _resolve(key, section=None):
    """Map ``key`` or ``section.key`` to a field name."""
    if "." in key and section is None:
        section, key = key.split(".", 1)
    if section is not None:
        if section not in SECTIONS:
            raise InvalidInput(f"unknown section [{section}]")
        if key not in SECTIONS[section]:
            raise InvalidInput(f"unknown key {key!r} in section [{section}]")
    elif key not in _TYPES:
        raise InvalidInput(f"unknown parameter {key!r}")
    return key


def read_config_file(path):
    """``key = value`` lines grouped under ``[section]`` headers; ``#`` and
    ``;`` start comments."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                       interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise InvalidInput(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise InvalidInput(f"malformed config file {path}: {exc}") from exc
    values = {}
    for section in parser.sections():
        for key, text in parser.items(section):
            name = _resolve(key, section)
            values[name] = _convert(name, text)
    return values


def parse_overrides(items):
    values = {}
    for item in items or ():
        if "=" not in item:
            raise InvalidInput(f"--param expects key=value, got {item!r}")
        key, text = item.split("=", 1)
        name = _resolve(key.strip())
        values[name] = _convert(name, text)
    return values


def build_config(config_file=None, overrides=(), **flags):
    """Defaults, then the config file, then ``--param`` overrides, then
    dedicated flags (``out``, ``format``) that are not None."""
    values = {}
    if config_file:
        values.update(read_config_file(config_file))
    values.update(parse_overrides(overrides))
    values.update({k: v for k, v in flags.items() if v is not None})
    return replace(RunConfig(), **values) if values else RunConfig()
