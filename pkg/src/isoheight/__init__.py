"""Exact height bounds for symplectic bases, polarised isogenies and Siegel reduction."""
from .errors import (
    CertificateViolation,
    DimensionError,
    NotIntegralError,
    NotInSiegelSpaceError,
    NotPerfectError,
    NotSymmetricPositiveError,
    PrecisionExhaustedError,
    ReductionFailedError,
    SingularActionError,
    SingularMatrixError,
)
from .exact import ExactMatrix, det, height, hnf, mat_mul
from .symplectic import (
    BasisMatrix,
    HeightCertificate,
    SymplecticForm,
    exponent_budget,
    gsp_multiplier,
    random_perfect_form,
    random_sp,
    standard_J,
    symplectic_basis,
)
from .isogeny import (
    IsogenyRep,
    bounded_rep_pipeline,
    degree,
    generate_polarized_isogeny,
    is_polarized,
    opposite_isogeny,
)
from .siegel import (
    SiegelPoint,
    fundamental_preimage,
    in_fundamental_domain,
    mobius_apply,
    reduce_to_fundamental,
)
from .endred import EndRingDesc, RingElem, fundamental_unit, is_symmetric_positive, norm, reduce_symmetric
from .lab import ExperimentConfig, TrialRecord, fit_exponent, run_experiment

__version__ = "0.1.0"
