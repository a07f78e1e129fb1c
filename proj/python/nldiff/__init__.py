from ._nldiff import *  # noqa: F401,F403
from ._nldiff import NldiffError, run_scenario

__version__ = "0.1.0"
