"""Five-dimensional off-shell gauge fields of accelerated and uniformly moving point sources."""
from .core import (FiveVector, Hyperbolic, KernelState, O32, O41, RetardationKernel, Signature,
                   Static, Uniform, kernel_consistency_check, kernel_state, worldline_state)
from .errors import *  # noqa: F401,F403

__version__ = "0.1.0"
