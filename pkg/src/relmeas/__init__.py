"""Measurement schemes, instruments and relational state bookkeeping for
finite-dimensional quantum systems."""

__version__ = "0.1.0"

from .errors import RelmeasError, InputError
from .linalg import DEFAULT_TOL, Tolerances, load_tolerances
from .qstructs import DiscreteObservable, Effect, ReadingScale, State, probability, distribution
from .schemes import (
    MeasurementScheme,
    Instrument,
    build_lueders_scheme,
    build_naimark_scheme,
    induced_observable,
    instrument_of,
    is_first_kind,
    is_repeatable,
    is_nondegenerate,
    is_d_ideal,
)
from .correl import schmidt, strongly_correlated_observables
from .rqm import (
    CollapseSemantics,
    CollapseSampler,
    PerspectiveLedger,
    apply_interaction,
    cpl_match_probability,
    relative_state,
)
from .lattice import Subspace, meet, join, ortho, is_relevant

__all__ = [
    "__version__",
    "RelmeasError",
    "InputError",
    "DEFAULT_TOL",
    "Tolerances",
    "load_tolerances",
    "DiscreteObservable",
    "Effect",
    "ReadingScale",
    "State",
    "probability",
    "distribution",
    "MeasurementScheme",
    "Instrument",
    "build_lueders_scheme",
    "build_naimark_scheme",
    "induced_observable",
    "instrument_of",
    "is_first_kind",
    "is_repeatable",
    "is_nondegenerate",
    "is_d_ideal",
    "schmidt",
    "strongly_correlated_observables",
    "CollapseSemantics",
    "CollapseSampler",
    "PerspectiveLedger",
    "apply_interaction",
    "cpl_match_probability",
    "relative_state",
    "Subspace",
    "meet",
    "join",
    "ortho",
    "is_relevant",
]
