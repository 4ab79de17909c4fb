"""Persistent homology of covered filtered complexes via the Mayer-Vietoris spectral sequence."""
from .barcode import INF, BarcodeBasis, BarcodeVector, Interval, apply_step, bar_sum, make_vector
from .complexes import (CoverAssignment, FilteredComplex, Nerve, boundary_matrix, cech_differential,
                        cover_from_vertex_sets, cubical_cover, nerve, restrict, vietoris_rips)
from .errors import ConfigError, CoverViolationError, InternalConsistencyError, MVSSError, UsageError
from .oracle import standard_reduction_ph
from .persistence import (ImageKernel, PersistenceMatrix, chain_homology, image_kernel, quotient_basis)
from .runtime import TaskError, parallel_map_deterministic
from .spectral import SpectralSequence, persistent_homology, run_spectral_sequence, zero_page

__all__ = [
    "INF", "BarcodeBasis", "BarcodeVector", "Interval", "apply_step", "bar_sum", "make_vector",
    "CoverAssignment", "FilteredComplex", "Nerve", "boundary_matrix", "cech_differential",
    "cover_from_vertex_sets", "cubical_cover", "nerve", "restrict", "vietoris_rips",
    "ConfigError", "CoverViolationError", "InternalConsistencyError", "MVSSError", "UsageError",
    "standard_reduction_ph", "ImageKernel", "PersistenceMatrix", "chain_homology", "image_kernel",
    "quotient_basis", "TaskError", "parallel_map_deterministic", "SpectralSequence",
    "persistent_homology", "run_spectral_sequence", "zero_page",
]
__version__ = "0.1.0"
