"""Discretized sum-product measure lab."""

from ._impl import (
    BudgetError,
    ConfigError,
    DomainError,
    FormatError,
    GridMeasure,
    ModeError,
    additive_convolve,
    decay_sup,
    exact_energy,
    flattening,
    mix,
    multiplicative_convolve,
    nonconcentration,
    point_mass,
    reflect,
    run_experiment,
    schedule,
    sumset_size,
    symmetrize,
    synth,
    total_variation,
    transform_at,
)

__version__ = "0.1.0"
