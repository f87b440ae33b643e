"""Residual-action model of gravitational wave-function collapse.

Submodules: :mod:`.hilbert` (states and operators), :mod:`.residual`
(residual, energy gauge, action), :mod:`.paths` (candidate evolutions),
:mod:`.born` (path statistic, race, weak measurement), :mod:`.gravity`
(potentials, estimates, self-energy), :mod:`.sn` (Schrodinger-Newton
solver) and :mod:`.cli`.
"""
from . import born, gravity, hilbert, paths, residual, sn, units
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["born", "gravity", "hilbert", "paths", "residual", "sn", "units", "BACKEND"]
