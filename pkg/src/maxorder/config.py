"""Run configuration: an INI-style file with fixed sections and keys.

Grammar (see docs/config.md)::

    [system]           kind, N, fallback
    [system.table]     "p,nu = d1,d2,..."   admissible exponent overrides
    [function]         kind, default
    [function.table]   "p,nu = value"       prime-power values
    [analysis]         cutoff, scan_limit, x_grid, eps, exclude, declared_thin,
                       route, bound, n_max, p, nu_max, n_list, j_max,
                       prime_bound, nu_ceiling, heights, literal_base
    [output]           path, format

Every key has an explicit default that ``--print-effective-config`` shows.
Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field

from .divisors import DivisorSystem, builtin_system, pathological_two_power_system, table_system
from .extremal import ROUTES, PrimeSetFilter
from .functions import MultFn, id_over_phi, sigma_over_id, table_function

SYSTEM_KINDS = ("standard", "unitary", "exponential", "pathological", "table")
FUNCTION_KINDS = ("sigma", "phi", "table")
FORMATS = ("auto", "csv", "json")

# module ceilings for numeric bounds
CEILINGS = {
    "cutoff": 10**7,
    "scan_limit": 4096,
    "bound": 10**6,
    "n_max": 10**7,
    "nu_max": 10**4,
    "j_max": 64,
    "prime_bound": 10**8,
    "nu_ceiling": 10**9,
}


class ConfigError(ValueError):
    pass


def _ints(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    out = []
    for tok in text.split(","):
        tok = tok.strip().replace("_", "")
        if "^" in tok:
            b, e = tok.split("^")
            out.append(int(b) ** int(e))
        elif "e" in tok.lower():
            out.append(int(float(tok)))
        else:
            out.append(int(tok))
    return tuple(out)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    system: str = "standard"
    system_N: tuple[int, ...] = ()
    system_fallback: str = "standard"
    system_table: dict = field(default_factory=dict)
    function: str = "sigma"
    function_default: str = "1"
    function_table: dict = field(default_factory=dict)
    cutoff: int = 10**4
    scan_limit: int = 64
    x_grid: tuple[int, ...] = (10**4, 10**5, 10**6)
    eps: float = 1e-2
    exclude: str = ""
    declared_thin: bool = True
    route: str = "unconditional-convergence"
    bound: int = 100
    n_max: int = 10**4
    p: tuple[int, ...] = (2,)
    nu_max: int = 10
    n_list: tuple[int, ...] = ()
    j_max: int = 8
    prime_bound: int = 10**7
    nu_ceiling: int = 10**6
    heights: tuple[int, ...] = (10**2, 10**3, 10**4, 10**5, 10**6)
    literal_base: bool = False
    out: str = "-"
    format: str = "auto"

    # --- validation and construction --------------------------------------

    def validate(self) -> None:
        if self.system not in SYSTEM_KINDS:
            raise ConfigError(f"system.kind must be one of {SYSTEM_KINDS}")
        if self.system == "pathological" and not self.system_N:
            raise ConfigError("system.N is required for the pathological system")
        if self.function not in FUNCTION_KINDS:
            raise ConfigError(f"function.kind must be one of {FUNCTION_KINDS}")
        if self.route not in ROUTES:
            raise ConfigError(f"analysis.route must be one of {ROUTES}")
        if self.format not in FORMATS:
            raise ConfigError(f"output.format must be one of {FORMATS}")
        if not 0 < self.eps < 1:
            raise ConfigError("analysis.eps must lie in (0, 1)")
        for key, cap in CEILINGS.items():
            v = getattr(self, key)
            if v < 0 or v > cap:
                raise ConfigError(f"analysis.{key} = {v} outside [0, {cap}]")
        if any(b <= a for a, b in zip(self.x_grid, self.x_grid[1:])):
            raise ConfigError("analysis.x_grid must be increasing")
        self.prime_filter()

    def build_system(self) -> DivisorSystem:
        if self.system == "pathological":
            return pathological_two_power_system(self.system_N)
        if self.system == "table":
            return table_system("table", self.system_table, self.system_fallback)
        return builtin_system(self.system)

    def build_function(self) -> MultFn:
        if self.function == "sigma":
            return sigma_over_id(self.build_system())
        if self.function == "phi":
            return id_over_phi(self.build_system())
        text = self.function_default.strip()
        if text in ("1+1/p", "one_plus_inverse"):
            default = lambda p, nu: 1.0 + 1.0 / p
        else:
            default = float(text)
        return table_function("table", self.function_table, default)

    def prime_filter(self) -> PrimeSetFilter | None:
        text = self.exclude.strip()
        if not text:
            return None
        if text.startswith("mod"):
            try:
                m, r = text[3:].strip().split(":")
                flt = PrimeSetFilter.residue_class(int(m), int(r))
            except ValueError:
                raise ConfigError(f"analysis.exclude: cannot parse {text!r}; use 'mod M:R'")
            if self.declared_thin:
                raise ConfigError("a residue class has divergent sum of 1/p; set declared_thin = false")
            return flt
        try:
            return PrimeSetFilter.finite(_ints(text))
        except ValueError:
            raise ConfigError(f"analysis.exclude: cannot parse {text!r}")

    # --- (de)serialization -------------------------------------------------

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp["system"] = {"kind": self.system, "N": _fmt(self.system_N),
                        "fallback": self.system_fallback}
        cp["system.table"] = {f"{p},{nu}": _fmt(v) for (p, nu), v in sorted(self.system_table.items())}
        cp["function"] = {"kind": self.function, "default": self.function_default}
        cp["function.table"] = {f"{p},{nu}": repr(v) for (p, nu), v in sorted(self.function_table.items())}
        cp["analysis"] = {k: _fmt(getattr(self, k)) for k in _ANALYSIS_KEYS}
        cp["output"] = {"path": self.out, "format": self.format}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


_ANALYSIS_KEYS = ("cutoff", "scan_limit", "x_grid", "eps", "exclude", "declared_thin", "route",
                  "bound", "n_max", "p", "nu_max", "n_list", "j_max", "prime_bound",
                  "nu_ceiling", "heights", "literal_base")
_INT_KEYS = {"cutoff", "scan_limit", "bound", "n_max", "nu_max", "j_max", "prime_bound", "nu_ceiling"}
_LIST_KEYS = {"x_grid", "p", "n_list", "heights"}
_BOOL_KEYS = {"declared_thin", "literal_base"}


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (tuple, list)):
        return ",".join(str(x) for x in v)
    return str(v)


def set_value(cfg: RunConfig, section: str, key: str, value: str) -> None:
    """Apply one ``section.key = value`` assignment."""
    try:
        if section == "system":
            if key == "kind":
                cfg.system = value.strip()
            elif key == "N":
                cfg.system_N = _ints(value)
            elif key == "fallback":
                cfg.system_fallback = value.strip()
            else:
                raise ConfigError(f"unknown key system.{key}")
        elif section == "system.table":
            p, nu = _ints(key)
            cfg.system_table[(p, nu)] = _ints(value)
        elif section == "function":
            if key == "kind":
                cfg.function = value.strip()
            elif key == "default":
                cfg.function_default = value.strip()
            else:
                raise ConfigError(f"unknown key function.{key}")
        elif section == "function.table":
            p, nu = _ints(key)
            cfg.function_table[(p, nu)] = float(value)
        elif section == "analysis":
            if key not in _ANALYSIS_KEYS:
                raise ConfigError(f"unknown key analysis.{key}")
            if key in _INT_KEYS:
                (v,) = _ints(value)
                setattr(cfg, key, v)
            elif key in _LIST_KEYS:
                setattr(cfg, key, _ints(value))
            elif key in _BOOL_KEYS:
                setattr(cfg, key, _bool(value))
            elif key == "eps":
                cfg.eps = float(value)
            else:
                setattr(cfg, key, value.strip())
        elif section == "output":
            if key == "path":
                cfg.out = value.strip()
            elif key == "format":
                cfg.format = value.strip()
            else:
                raise ConfigError(f"unknown key output.{key}")
        else:
            raise ConfigError(f"unknown section [{section}]")
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{section}.{key}: cannot parse {value!r} ({exc})")


def parse_config(text: str, cfg: RunConfig | None = None) -> RunConfig:
    cfg = cfg or RunConfig()
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc))
    for section in cp.sections():
        for key, value in cp[section].items():
            set_value(cfg, section, key, value)
    return cfg


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")


__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "set_value"]
