"""Spectral Galerkin simulator for slow-fast stochastic neuron models."""

try:
    from ._core import *  # noqa: F401,F403
    from ._core import __doc__  # noqa: F401
except ImportError:  # in-tree runs: extension lives on sys.path, not in the package
    from _core import *  # noqa: F401,F403

__version__ = "0.1.0"
