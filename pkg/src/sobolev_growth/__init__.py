"""Spectral toolkit for the linear Schrodinger equation on the circle.

Modules:

* :mod:`~sobolev_growth.torus` -- Fourier fields, Sobolev norms, multipliers
* :mod:`~sobolev_growth.potential` -- potentials, Gevrey periodization, truncation
* :mod:`~sobolev_growth.flow` -- unitary integrator and a priori estimates
* :mod:`~sobolev_growth.floquet` -- lattice Floquet operator and localization
* :mod:`~sobolev_growth.growth` -- growth runs, band diagnostics, exponent fits
"""
from .torus import SpaceTimeField, TorusField, hs_norm

__version__ = "0.1.0"

__all__ = ["TorusField", "SpaceTimeField", "hs_norm", "__version__"]
