"""
Flat ``key = value`` run configuration with dotted keys.

Example::

    family.kind = intro_oscillation
    family.gamma = 0.5
    run.r = 3
    grid.lo = -1.5
    grid.hi = 1.5
    grid.count = 11
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .density import LADDER
from .errors import ConfigError
from .families import FamilySpec, _validate


def _floats(v):
    return tuple(float(t) for t in v.split(",") if t.strip())


def _ints(v):
    return tuple(int(t) for t in v.split(",") if t.strip())


def _strs(v):
    return tuple(t.strip() for t in v.split(",") if t.strip())


# key -> (attribute, parser, formatter); family.* keys go to FamilySpec
_FAMILY_KEYS = {
    "family.kind": ("kind", str.strip, str),
    "family.N": ("N", int, str),
    "family.alpha": ("alpha", _floats, lambda t: ",".join(repr(v) for v in t)),
    "family.beta": ("beta", _floats, lambda t: ",".join(repr(v) for v in t)),
    "family.gamma": ("gamma", float, repr),
    "family.tau": ("tau", float, repr),
    "family.amp_a": ("amp_a", float, repr),
    "family.amp_b": ("amp_b", float, repr),
    "family.kappa": ("kappa", float, repr),
    "family.a_expr": ("a_expr", str.strip, str),
    "family.b_expr": ("b_expr", str.strip, str),
}

_RUN_KEYS = {
    "run.i": ("i", int, str),
    "run.r": ("r", int, str),
    "grid.lo": ("x_lo", float, repr),
    "grid.hi": ("x_hi", float, repr),
    "grid.count": ("grid_count", int, str),
    "numerics.n_max": ("n_max", int, str),
    "numerics.tol": ("tol", float, repr),
    "numerics.window": ("window", int, str),
    "numerics.delta_min": ("delta_min", float, repr),
    "numerics.delta_guard": ("delta_guard", float, repr),
    "ladder.k": ("ladder", _ints, lambda t: ",".join(str(v) for v in t)),
    "fit.rms_fraction": ("rms_fraction", float, repr),
    "bounds.angles": ("angles", int, str),
    "diagnose.span": ("span", int, str),
    "diagnose.orders": ("stolz_orders", _ints, lambda t: ",".join(str(v) for v in t)),
    "output.dir": ("out_dir", str.strip, str),
    "output.formats": ("formats", _strs, lambda t: ",".join(t)),
    "seed": ("seed", int, str),
}


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration."""

    family: FamilySpec = field(default_factory=FamilySpec)
    i: int = 0
    r: int = 1
    x_lo: float = -1.5
    x_hi: float = 1.5
    grid_count: int = 31
    n_max: int = 10_000
    tol: float = 1e-6
    window: int = 32
    delta_min: float = 1e-9
    delta_guard: float = 1e-6
    ladder: tuple = LADDER
    rms_fraction: float = 0.05
    angles: int = 8
    span: int = 1000
    stolz_orders: tuple = ()
    out_dir: str = "."
    formats: tuple = ("csv", "json")
    seed: int = 0

    @property
    def grid(self):
        return np.linspace(self.x_lo, self.x_hi, self.grid_count)

    @property
    def period(self):
        return self.family.period

    @property
    def orders(self):
        return self.stolz_orders or (self.r,)

    def to_dict(self):
        """Flat string mapping of every key; parsing it reproduces the config."""
        out = {}
        for key, (attr, _, fmt) in _FAMILY_KEYS.items():
            out[key] = fmt(getattr(self.family, attr))
        for key, (attr, _, fmt) in _RUN_KEYS.items():
            out[key] = fmt(getattr(self, attr))
        return out

    def to_text(self):
        return "".join(f"{k} = {v}\n" for k, v in self.to_dict().items())


def validate(cfg):
    """Raise :class:`ConfigError` on any invalid field."""
    try:
        _validate(cfg.family)
    except ValueError as exc:
        raise ConfigError(f"family: {exc}") from exc
    if not cfg.x_lo < cfg.x_hi:
        raise ConfigError("grid.lo must be below grid.hi")
    if cfg.grid_count < 3:
        raise ConfigError("grid.count must be at least 3")
    if cfg.r < 1 or any(o < 1 for o in cfg.stolz_orders):
        raise ConfigError("Stolz orders must be >= 1")
    if not 0 <= cfg.i < cfg.period:
        raise ConfigError(f"run.i must lie in [0, {cfg.period})")
    if cfg.window < 2 or cfg.tol <= 0:
        raise ConfigError("numerics.window >= 2 and numerics.tol > 0 required")
    if cfg.n_max < (cfg.window + 4) * cfg.period + cfg.i + 16:
        raise ConfigError("numerics.n_max too small for the window")
    if cfg.delta_min <= 0 or cfg.delta_guard <= 0:
        raise ConfigError("delta thresholds must be positive")
    if any(k < 1 for k in cfg.ladder):
        raise ConfigError("ladder rungs must be positive")
    if cfg.angles < 1 or cfg.span < 1:
        raise ConfigError("bounds.angles and diagnose.span must be positive")
    bad = set(cfg.formats) - {"csv", "json"}
    if bad or not cfg.formats:
        raise ConfigError(f"unsupported output formats {sorted(bad)}")
    return cfg


def parse_mapping(mapping, base=None):
    """Build a validated :class:`RunConfig` from a flat key/value mapping."""
    base = base or RunConfig()
    fam, run = {}, {}
    for key, raw in mapping.items():
        raw = str(raw)
        try:
            if key in _FAMILY_KEYS:
                attr, parse, _ = _FAMILY_KEYS[key]
                fam[attr] = parse(raw)
            elif key in _RUN_KEYS:
                attr, parse, _ = _RUN_KEYS[key]
                run[attr] = parse(raw)
            else:
                raise ConfigError(f"unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    family = replace(base.family, **fam)
    return validate(replace(base, family=family, **run))


def parse_text(text):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    mapping = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (t.strip() for t in line.split("=", 1))
        if key in mapping:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        mapping[key] = value
    return parse_mapping(mapping)


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
