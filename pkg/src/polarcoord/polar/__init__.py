"""Binary polar transform, successive-cancellation engines, per-index
conditional-entropy profiles, and the index-set algebra built on them."""

from polarcoord.polar.engines import ScSequencer, genie_pass, layer_weights
from polarcoord.polar.profile import (
    CONTEXTS,
    EntropyProfile,
    estimate_entropy_profile,
    exact_entropy_profile,
    sample_design,
)
from polarcoord.polar.sets import (
    AlignmentReport,
    DecodabilityError,
    PolarSets,
    SetThresholds,
    derive_sets,
    sets_from_json,
    sets_to_json,
    validate_alignment,
)
from polarcoord.polar.transform import polar_transform

__all__ = [
    "AlignmentReport",
    "CONTEXTS",
    "DecodabilityError",
    "EntropyProfile",
    "PolarSets",
    "ScSequencer",
    "SetThresholds",
    "derive_sets",
    "estimate_entropy_profile",
    "exact_entropy_profile",
    "genie_pass",
    "layer_weights",
    "polar_transform",
    "sample_design",
    "sets_from_json",
    "sets_to_json",
    "validate_alignment",
]
