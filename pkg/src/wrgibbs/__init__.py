"""Gibbs / non-Gibbs analysis of the Widom-Rowlinson model under spin-flip dynamics.

Mean-field, lattice, continuum and tree geometries. See the README for an
overview of the submodules.
"""

__version__ = "0.1.0"

from .measures import (
    FieldCoords,
    ModelParams,
    OccCoords,
    SpinMeasure,
    field_coords,
    from_occ_coords,
    occ_entropy,
    relative_entropy,
    spin_entropy,
    symmetric_alpha,
    to_occ_coords,
)

__all__ = [
    "FieldCoords",
    "ModelParams",
    "OccCoords",
    "SpinMeasure",
    "field_coords",
    "from_occ_coords",
    "occ_entropy",
    "relative_entropy",
    "spin_entropy",
    "symmetric_alpha",
    "to_occ_coords",
]
