from .quench import QuenchModel, quench_e0, quench_run
from .tfim import TfimModel, tfim_mode, tfim_run
from .two_level import TwoLevelModel, two_level_run

__all__ = [
    "QuenchModel", "quench_e0", "quench_run",
    "TfimModel", "tfim_mode", "tfim_run",
    "TwoLevelModel", "two_level_run",
]
