from .config import RunConfig
from .emit import emit_csv, read_csv
from .fit import FitResult, powerlaw_fit
from .svg import emit_svg

__all__ = ["RunConfig", "emit_csv", "read_csv", "FitResult", "powerlaw_fit", "emit_svg", "run"]


def run(config):
    from .cli import run as _run
    return _run(config)
