"""Exact boson-sampling simulation through linear-optical networks."""

__version__ = "0.1.0"

from .core import (
    ComplexMatrix,
    FockConfiguration,
    InvalidInputError,
    OutputDistribution,
    ResourceLimitError,
    UnitaryMatrix,
    enumerate_configurations,
    standard_input,
    total_variation_distance,
)
from .interferometer import (
    BeamSplitter,
    FourPhaseBS,
    OpticalNetlist,
    PhaseShifter,
    element_unitary,
    haar_unitary,
    netlist_unitary,
    reck_decompose,
    timebin_netlist,
)
from .permanent import PermanentResult, determinant, permanent, permanent_naive, permanent_ryser
from .sampler import (
    ClickPattern,
    SamplingRun,
    amplitude,
    bucket_projection,
    collision_free_fraction,
    fermion_distribution,
    output_distribution,
    sample_outputs,
    scattering_submatrix,
)
