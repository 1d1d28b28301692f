"""Hopf hypersurfaces in complex hyperbolic space CH^2 from contact curves in S^3.

Frames live in U(2,1) acting on C^3 with a Hermitian form of signature
(2,1). Two Legendrian curves in S^3 and an angle phi determine a family
of frames whose base points sweep out a Hopf hypersurface with Hopf
principal curvature alpha = (2/r) sin(phi); :mod:`hopfch2.verify` checks
the defining identities numerically.
"""

from .config import CorruptDataError, DegenerateError, PreconditionError, RunConfig, Tolerances, load_config
from .curves import (ContactCurve, contact_defect, great_circle_curve, horizontal_lift, hopf_map,
                     twisted_circle_curve, validate)
from .frames import ModelParams, UnitaryFrame, adapted_frame, extract_forms, gauss_borderline, gauss_minus, gauss_plus
from .horosphere import horosphere_patch, run_oracle
from .reconstruction import GridSpec, HopfPatch, build_patch, frame_from_null_pair, immersion_check
from .verify import verify_patch

__version__ = "0.1.0"

__all__ = [
    "ContactCurve", "CorruptDataError", "DegenerateError", "GridSpec", "HopfPatch", "ModelParams",
    "PreconditionError", "RunConfig", "Tolerances", "UnitaryFrame", "adapted_frame", "build_patch",
    "contact_defect", "extract_forms", "frame_from_null_pair", "gauss_borderline", "gauss_minus",
    "gauss_plus", "great_circle_curve", "hopf_map", "horizontal_lift", "horosphere_patch",
    "immersion_check", "load_config", "run_oracle", "twisted_circle_curve", "validate", "verify_patch",
]
