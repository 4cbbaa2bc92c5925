"""Matrix permanents for boson-sampling transition amplitudes.

Hot loops live in the compiled ``_kernels`` extension; ``_fallback`` provides
the same functions in numpy and is used when the extension is not built.
``BACKEND`` names the active one.
"""

from ._backend import BACKEND, available_backends
from .banded import (
    BandedMatrix,
    band_mask,
    circulant_coefficients,
    permanent,
    permanent_banded,
    permanent_circulant_banded,
)
from .dense import PermanentError, PermanentResult, permanent_dense, permanent_naive
from .fock import (
    FockState,
    fiducial_input,
    occupation_factorials,
    transition_probability,
    transition_submatrix,
)

__all__ = [
    "BACKEND",
    "BandedMatrix",
    "FockState",
    "PermanentError",
    "PermanentResult",
    "available_backends",
    "band_mask",
    "circulant_coefficients",
    "fiducial_input",
    "occupation_factorials",
    "permanent",
    "permanent_banded",
    "permanent_circulant_banded",
    "permanent_dense",
    "permanent_naive",
    "transition_probability",
    "transition_submatrix",
]
