"""Grids, sampled functions, quadrature norms and Hamiltonians."""

from .functions import (
    SampledFunction,
    SampledVectorField,
    gradient,
    integrate,
    interpolate,
    max_slope,
    norm_l1,
    norm_l1_field,
    norm_w11,
)
from .grid import Box, Grid, unit_ball_volume
from .hamiltonian import (
    PRESETS,
    HamiltonianSpec,
    cosh_separable,
    make_hamiltonian,
    quadratic,
    quartic,
)
from .io import from_bytes, from_csv, load, save, to_bytes, to_csv
from .params import ClassParams

__all__ = [
    "Box",
    "ClassParams",
    "Grid",
    "HamiltonianSpec",
    "PRESETS",
    "SampledFunction",
    "SampledVectorField",
    "cosh_separable",
    "from_bytes",
    "from_csv",
    "gradient",
    "integrate",
    "interpolate",
    "load",
    "make_hamiltonian",
    "max_slope",
    "norm_l1",
    "norm_l1_field",
    "norm_w11",
    "quadratic",
    "quartic",
    "save",
    "to_bytes",
    "to_csv",
    "unit_ball_volume",
]
