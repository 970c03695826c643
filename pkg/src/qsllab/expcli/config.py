"""Run configuration: ``key = value`` text files plus command-line overrides.

Blank lines and ``#`` comments are ignored. Lists are comma separated.
Example::

    experiment = fig2-scaling
    N_list = 128, 182, 256
    T = 1000
    out = results/scaling
"""
from dataclasses import dataclass, field, fields, replace

from ..errors import ConfigError

EXPERIMENTS = (
    "fig1-traces", "fig1-scatter", "fig1-tsweep",
    "fig2-trace", "fig2-scaling", "fig2-protocols", "fig2-tsweep",
    "fig3-quench", "custom",
)
PROTOCOLS = ("linear", "boundary_flat", "boundary_steep", "random")
MODELS = ("two_level", "tfim", "quench")
EMITS = ("csv", "svg", "both")

# per-experiment defaults layered under the file and the flags
DEFAULTS = {
    "fig1-traces": {"T": 50.0, "protocol": None},
    "fig1-scatter": {"T": 50.0, "n_seeds": 500, "seed": 0},
    "fig1-tsweep": {"T_list": (10.0, 30.0, 100.0, 300.0, 1000.0), "protocol": "boundary_flat"},
    "fig2-trace": {"N": 1000, "T": 1000.0, "protocol": "linear"},
    "fig2-scaling": {"N_list": (128, 182, 256, 362, 512, 724, 1024, 1448, 2048), "T": 1000.0,
                     "protocol": "linear", "fit_top": 5},
    "fig2-protocols": {"N": 1000, "T": 1000.0, "protocol": None},
    "fig2-tsweep": {"N": 200, "T_list": (250.0, 500.0, 1000.0, 2000.0), "protocol": "linear"},
    "fig3-quench": {"N": 2000, "J": 1.0, "h_field": 1.0, "t_max": 3.0, "steps": 601},
    "custom": {},
}


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "custom"
    model: str = None
    N: int = None
    T: float = None
    steps: int = None
    substeps: int = None
    seed: int = None
    n_seeds: int = None
    h: float = 1.0
    J: float = None
    h_field: float = None
    t_max: float = None
    protocol: str = None
    N_list: tuple = ()
    T_list: tuple = ()
    fit_top: int = 5
    out: str = "results"
    emit: str = "csv"
    workers: int = 1
    tol: float = 1e-8
    precision: str = "auto"
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def emit_csv(self):
        return self.emit in ("csv", "both")

    @property
    def emit_svg(self):
        return self.emit in ("svg", "both")


_INT = {"N", "steps", "substeps", "seed", "n_seeds", "fit_top", "workers"}
_FLOAT = {"T", "h", "J", "h_field", "t_max", "tol"}
_STR = {"experiment", "model", "protocol", "out", "emit", "precision"}
_LIST = {"N_list": int, "T_list": float}
KEYS = _INT | _FLOAT | _STR | set(_LIST)
_ALIASES = {"h-field": "h_field", "n-list": "N_list", "t-list": "T_list", "N-list": "N_list", "T-list": "T_list", "n-seeds": "n_seeds",
            "t-max": "t_max", "fit-top": "fit_top"}


def _convert(key, raw):
    try:
        if key in _INT:
            v = float(raw)
            if v != int(v):
                raise ValueError
            return int(v)
        if key in _FLOAT:
            return float(raw)
        if key in _LIST:
            items = [x for x in str(raw).replace(";", ",").split(",") if x.strip()]
            return tuple(_LIST[key](float(x)) for x in items)
        return str(raw).strip()
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None


def parse_text(text, source="<config>"):
    """Parse key = value lines into a dict of typed values."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        out[key] = _convert(key, raw)
    return out


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_text(fh.read(), str(path))
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None


def build(file_values=None, overrides=None):
    """Layer experiment defaults, file values and overrides, then validate."""
    merged = dict(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    exp = merged.get("experiment", "custom")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"experiment: unknown {exp!r}; choose from {', '.join(EXPERIMENTS)}")
    values = dict(DEFAULTS[exp])
    values.update(merged)
    values = {k: (_convert(k, v) if k in KEYS and isinstance(v, str) and k not in _STR else v)
              for k, v in values.items()}
    cfg = replace(RunConfig(), **{k: v for k, v in values.items() if k in {f.name for f in fields(RunConfig)}})
    validate(cfg)
    return cfg


def _positive(cfg, name):
    v = getattr(cfg, name)
    if v is not None and not v > 0:
        raise ConfigError(f"{name}: must be positive, got {v}")


def validate(cfg):
    for name in ("N", "T", "steps", "substeps", "n_seeds", "h", "t_max", "workers", "tol", "fit_top"):
        _positive(cfg, name)
    if cfg.h_field is not None and cfg.h_field < 0:
        raise ConfigError("h_field: must be non-negative")
    if cfg.emit not in EMITS:
        raise ConfigError(f"emit: choose from {', '.join(EMITS)}")
    if cfg.precision not in ("auto", "double", "mp"):
        raise ConfigError("precision: choose from auto, double, mp")
    if cfg.protocol is not None and cfg.protocol not in PROTOCOLS:
        raise ConfigError(f"protocol: choose from {', '.join(PROTOCOLS)}")
    if cfg.steps is not None and cfg.steps < 2:
        raise ConfigError("steps: need at least 2 grid points")
    if any(n <= 0 for n in cfg.N_list) or any(t <= 0 for t in cfg.T_list):
        raise ConfigError("N_list/T_list: entries must be positive")
    tfim_n = [cfg.N] if cfg.N is not None else []
    if cfg.experiment.startswith("fig2") or cfg.model == "tfim":
        for n in tfim_n + list(cfg.N_list):
            if n % 2:
                raise ConfigError(f"N: the Ising chain needs even N, got {n}")
    if cfg.experiment == "fig1-scatter" and cfg.seed is None:
        raise ConfigError("seed: required for randomized experiments")
    if cfg.protocol == "random" and cfg.seed is None:
        raise ConfigError("seed: required for the random protocol")
    if cfg.experiment == "fig2-scaling" and len(cfg.N_list) < 4:
        raise ConfigError("N_list: a power-law fit needs at least 4 sizes")
    if cfg.experiment == "custom":
        if cfg.model not in MODELS:
            raise ConfigError(f"model: custom runs need one of {', '.join(MODELS)}")
        need = {"two_level": ("T",), "tfim": ("N", "T"), "quench": ("N", "J", "h_field", "t_max")}[cfg.model]
        for name in need:
            if getattr(cfg, name) is None:
                raise ConfigError(f"{name}: required for a custom {cfg.model} run")
    return cfg


def dumps(cfg):
    """Canonical text form of a config (written next to the outputs)."""
    lines = []
    for f in fields(RunConfig):
        if f.name == "extra":
            continue
        v = getattr(cfg, f.name)
        if v is None or v == ():
            continue
        if isinstance(v, tuple):
            v = ", ".join(repr(x) for x in v)
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
