"""Run configuration: a flat key = value grammar and its validated record.

The file format is deliberately plain: one `key = value` per line, `#`
starts a comment, lists are comma separated. Unknown keys are rejected
with the offending line number so typos fail fast instead of silently
running a default.
"""

from dataclasses import dataclass, field, fields

from .errors import ConfigError

__all__ = ["RunConfig", "parse_config", "load_config", "EXPERIMENTS"]

EXPERIMENTS = ("survival", "wpd", "work-scan", "phases", "basis-dump")


def _parse_bool(s):
    t = s.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(s)


def _parse_float_list(s):
    return tuple(float(tok) for tok in s.replace(",", " ").split())


def _parse_int_list(s):
    return tuple(int(tok) for tok in s.replace(",", " ").split())


@dataclass
class RunConfig:
    experiment: str = ""
    # geometry and quench
    L: float = 4.0
    L_initial: float = 0.0          # nonzero switches survival to the box expansion
    from_level: int = 1
    to_level: int = 2
    N: int = 10
    K: int = 0                      # 0: chosen from N (and occupations at T > 0)
    M: int = 0                      # 0: adaptive truncation
    # thermal ensemble and time grid
    temperatures: tuple = (0.0,)    # units of the Fermi temperature
    t_max: float = 2.0              # units of the revival time
    t_points: int = 401
    include_quarters: bool = True
    t_over_tr: tuple = (0.25,)      # sample times for the phases experiment
    # truncation and enumeration controls
    max_order: int = 3
    max_order_initial: int = 2
    max_order_final: int = 3
    threshold: float = 1e-8
    defect_tolerance: float = 1e-8
    mass_tolerance: float = 5e-6
    m_cap: int = 16000
    candidate_cap: int = 6_000_000_000
    # work-scan range
    alpha_list: tuple = (2, 3, 4)
    N_min: int = 1
    N_max: int = 50
    # basis-dump controls
    level: int = 2
    n_states: int = 6
    x_points: int = 201
    # output
    out: str = "."
    format: str = "csv"
    cache: bool = False

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"experiment must be one of {', '.join(EXPERIMENTS)} (got '{self.experiment}')"
            )
        if self.L <= 0:
            raise ConfigError("L must be positive")
        if self.L_initial < 0:
            raise ConfigError("L_initial must be positive when given")
        if self.L_initial > 0:
            if not self.L_initial <= self.L:
                raise ConfigError("the box can only expand: need L_initial <= L")
            if self.from_level != 1 or self.to_level != 1:
                raise ConfigError("the box expansion uses bare boxes on both sides")
        elif self.experiment in ("survival", "wpd", "phases"):
            if self.from_level == self.to_level:
                raise ConfigError("trivial quench: from_level equals to_level")
            if self.from_level < 1 or self.to_level < 1:
                raise ConfigError("hierarchy levels are 1-based")
        if self.N < 1:
            raise ConfigError("N must be at least 1")
        if any(T < 0 for T in self.temperatures):
            raise ConfigError("temperatures must be non-negative")
        if self.t_points < 1:
            raise ConfigError("t_points must be at least 1")
        if self.t_max <= 0:
            raise ConfigError("t_max must be positive")
        if not 0 <= self.max_order <= 4:
            raise ConfigError("max_order must lie in 0..4")
        if not 0 <= self.max_order_initial <= 2:
            raise ConfigError("max_order_initial must lie in 0..2")
        if not 0 <= self.max_order_final <= 4:
            raise ConfigError("max_order_final must lie in 0..4")
        if self.threshold <= 0 or self.defect_tolerance <= 0:
            raise ConfigError("threshold and defect_tolerance must be positive")
        if self.experiment == "work-scan":
            if not self.alpha_list or any(a not in (2, 3, 4) for a in self.alpha_list):
                raise ConfigError("alpha_list entries must be in 2..4")
            if not 1 <= self.N_min <= self.N_max:
                raise ConfigError("need 1 <= N_min <= N_max")
            if self.N_max > 100:
                raise ConfigError("work-scan is sized for N_max <= 100")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.experiment == "basis-dump":
            if self.level < 1:
                raise ConfigError("level must be at least 1")
            if self.n_states < 1 or self.x_points < 2:
                raise ConfigError("need n_states >= 1 and x_points >= 2")
        return self


_LIST_FIELDS = {
    "temperatures": _parse_float_list,
    "t_over_tr": _parse_float_list,
    "alpha_list": _parse_int_list,
}

_CASTS = {}
for _f in fields(RunConfig):
    if _f.name in _LIST_FIELDS:
        _CASTS[_f.name] = _LIST_FIELDS[_f.name]
    elif _f.type is bool:
        _CASTS[_f.name] = _parse_bool
    elif _f.type is int:
        _CASTS[_f.name] = lambda s: int(float(s)) if float(s) == int(float(s)) else int(s)
    elif _f.type is float:
        _CASTS[_f.name] = float
    else:
        _CASTS[_f.name] = str


def parse_config(text, overrides=None):
    """Parse `key = value` text into a validated RunConfig."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _CASTS:
            raise ConfigError(f"unknown key '{key}'", line=lineno)
        if not val:
            raise ConfigError(f"empty value for '{key}'", line=lineno)
        try:
            values[key] = _CASTS[key](val)
        except ValueError:
            raise ConfigError(f"bad value for '{key}': {val!r}", line=lineno)
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    cfg = RunConfig(**values)
    return cfg.validate()


def load_config(path, overrides=None):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides=overrides)
