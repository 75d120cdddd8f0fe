"""Staircase true-time-delay codebooks for sub-band-specific multi-user beams."""

from .analysis import (BeamMap, SubArrayView, beam_centres, extract_beam_map, factorized_gain,
                       filter_centre, filter_response, mapping_discrepancy, on_target_gain,
                       subarray_gain)
from .codebook import (DesignResult, DesignSpec, Formulation, PreconditionError, StaircaseParams,
                       build_modulo, build_uniform, integer_design, rotate_mapping, two_stage_design)
from .linksim import IdealBound, LinkConfig, SweepSpec, run_sweep, spectral_efficiency
from .wavefield import ArrayConfig, DelayPhaseProfile, OfdmGrid, gain, gain_grid

__all__ = [
    "ArrayConfig", "BeamMap", "DelayPhaseProfile", "DesignResult", "DesignSpec", "Formulation",
    "IdealBound", "LinkConfig", "OfdmGrid", "PreconditionError", "StaircaseParams", "SubArrayView",
    "SweepSpec", "beam_centres", "build_modulo", "build_uniform", "extract_beam_map",
    "factorized_gain", "filter_centre", "filter_response", "gain", "gain_grid", "integer_design",
    "mapping_discrepancy", "on_target_gain", "rotate_mapping", "run_sweep", "spectral_efficiency",
    "subarray_gain", "two_stage_design",
]
