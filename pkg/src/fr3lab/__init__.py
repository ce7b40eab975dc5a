"""Numerical laboratory for integrated sensing and communication across the 7-24 GHz band."""

__version__ = "0.1.0"

from .array import ArrayGeometry, FieldPoint, beampattern, build_ula, pointing_weights  # noqa: E402
from .estimation import CrbResult, SnrSpec, crb, crb_sweep, fisher_matrix  # noqa: E402
from .squint import SquintReport, apparent_angle, intra_band_spread, squint_snr_loss  # noqa: E402

__all__ = [
    "ArrayGeometry",
    "CrbResult",
    "FieldPoint",
    "SnrSpec",
    "SquintReport",
    "apparent_angle",
    "beampattern",
    "build_ula",
    "crb",
    "crb_sweep",
    "fisher_matrix",
    "intra_band_spread",
    "pointing_weights",
    "squint_snr_loss",
]
