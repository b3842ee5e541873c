"""ldthermo: exact numerics for work extraction from Gibbs states.

The package builds n-fold densities of states on an exact integer energy
grid, measures their large-deviation tails, and executes the randomized
energy-preserving block-permutation protocol that converts one family of
Gibbs states into another while banking the energy difference on a flat
work-storage ladder.
"""

from .spectrum import (DiagonalState, EnergyHistogram, SiteSpectrum,
                       ThermoPotentials, convolve_n, diagonal_state,
                       gibbs_state, potentials, site_spectrum_new)

__all__ = [
    "DiagonalState", "EnergyHistogram", "SiteSpectrum", "ThermoPotentials",
    "convolve_n", "diagonal_state", "gibbs_state", "potentials",
    "site_spectrum_new",
]

__version__ = "0.1.0"
