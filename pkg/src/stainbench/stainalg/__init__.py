"""Traditional stain transfer: colour statistics, Macenko and Vahadane."""
from .colorstat import apply_colorstat, fit_colorstat, stats_lab
from .deconvolution import (
    canonical_stain_matrix,
    compute_concentrations,
    nnls_two_columns,
    pseudo_max_concentration,
    reconstruct_od,
)
from .estimators import NORMALIZERS, ColorStatNormalizer, MacenkoNormalizer, VahadaneNormalizer
from .macenko import estimate_stain_matrix_macenko
from .profiles import (
    ColorStatProfile,
    StainProfile,
    dumps_profile,
    load_profile,
    profile_from_dict,
    save_profile,
)
from .transfer import (
    StainParams,
    apply_stain_transfer,
    estimate_stain_profile,
    fit_stain_profile,
    transfer_od,
)
from .vahadane import fit_vahadane_dictionary

__all__ = [
    "ColorStatNormalizer",
    "ColorStatProfile",
    "MacenkoNormalizer",
    "NORMALIZERS",
    "StainParams",
    "StainProfile",
    "VahadaneNormalizer",
    "apply_colorstat",
    "apply_stain_transfer",
    "canonical_stain_matrix",
    "compute_concentrations",
    "dumps_profile",
    "estimate_stain_matrix_macenko",
    "estimate_stain_profile",
    "fit_colorstat",
    "fit_stain_profile",
    "fit_vahadane_dictionary",
    "load_profile",
    "nnls_two_columns",
    "profile_from_dict",
    "pseudo_max_concentration",
    "reconstruct_od",
    "save_profile",
    "stats_lab",
    "transfer_od",
]
