"""Exact p-adic witness points for injective evaluation of power-series subspaces."""

from .errors import (
    DependentBasis,
    DomainError,
    InputError,
    ModeError,
    NotIndependent,
    RegionError,
    SchemaError,
    TruncationTooShallow,
)
from .field_tower import INFINITY, FieldElement, PrimeContext, lift_ramification, make_element, valuation
from .series import TruncatedSeries, evaluate, recenter, scale_to_integral, truncate_below
from .witness import SubspaceBasis, TorusRegion, WitnessCertificate, analyze, solve, solve_r1

__version__ = "0.1.0"
