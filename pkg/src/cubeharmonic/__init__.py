"""Harmonic analysis on the discrete cube and Gauss space: influences, heat
semigroups, Talagrand-type inequalities of higher order."""

from .cube import BooleanFunction, RealCubeFunction, discrete_derivative, influence, pair_influence
from .spectral import FourierSpectrum, bonami_beckner, fwht, inverse_fwht

__all__ = [
    "BooleanFunction",
    "RealCubeFunction",
    "FourierSpectrum",
    "bonami_beckner",
    "discrete_derivative",
    "fwht",
    "influence",
    "inverse_fwht",
    "pair_influence",
]
