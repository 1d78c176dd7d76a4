from .cost import (
    FEET,
    dynamic_ism_flops,
    fdn_flops,
    flops_estimate,
    ism_flops,
    memory_bound,
    overlap_add_flops,
    sdn_flops,
)
from .decay import (
    BandDecay,
    DecayAnalysis,
    InsufficientDecayError,
    measure_t60,
    octave_band_t60,
    schroeder_edc,
    t60_from_edc,
)
from .echo_density import GAUSSIAN_OUTLIER_FRACTION, NEDCurve, ned_profile
from .modes import (
    ModeDensity,
    cubic_mode_density,
    min_cube_edge,
    mode_density,
    mode_density_monte_carlo,
)
from .predictors import eyring_t60, iso_min_distance, sabine_t60, sabine_t60_filter

__all__ = [
    "FEET",
    "BandDecay",
    "DecayAnalysis",
    "GAUSSIAN_OUTLIER_FRACTION",
    "InsufficientDecayError",
    "ModeDensity",
    "NEDCurve",
    "cubic_mode_density",
    "dynamic_ism_flops",
    "eyring_t60",
    "fdn_flops",
    "flops_estimate",
    "ism_flops",
    "iso_min_distance",
    "measure_t60",
    "memory_bound",
    "min_cube_edge",
    "mode_density",
    "mode_density_monte_carlo",
    "ned_profile",
    "octave_band_t60",
    "overlap_add_flops",
    "sabine_t60",
    "sabine_t60_filter",
    "schroeder_edc",
    "sdn_flops",
    "t60_from_edc",
]
