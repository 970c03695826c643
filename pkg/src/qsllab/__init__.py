"""Quantum speed limits for driven and quenched quantum systems."""
from ._accel import backend_name
from .errors import QslError

__version__ = "0.1.0"
__all__ = ["backend_name", "QslError", "__version__"]
