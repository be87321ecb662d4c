"""simlaw: numerical toolkit for similarity laws of sensitivity functions.

The package verifies, classifies and fits the structure

    xi_s(lambda * x) = gamma(lambda, s) * xi_{eta(lambda, s)}(x)

relating a family of sensitivity functions xi_s across stimulus scalings
lambda and state changes eta.  It ships a catalog of closed-form families,
the state-change and gain map algebra (multiplicatively translational maps
and their conjugate normal form), residual checkers for the named special
laws, psychophysical representations with psychometric simulation, fitting
routines, and a deterministic command-line front end.
"""

from .errors import (
    ConfigError,
    ConstraintError,
    DivergenceError,
    DomainError,
    EmptyGridError,
    GridSymmetryError,
    InsufficientDataError,
    IoError,
    LinkRangeError,
    NonConvergenceError,
    NonMonotoneError,
    NonPositiveError,
    NotInvertibleError,
    ParamError,
    RangeError,
    SimlawError,
    TooManyExclusionsError,
)
from .scales import (
    ComposedCurve,
    Constant,
    InverseScale,
    ScaleFunction,
    TableCurve,
    affine,
    exp_scale,
    identity_scale,
    log_scale,
    power_scale,
    scale_from_spec,
    table_scale,
)
from .grids import Grid, ResidualAccumulator, ResidualReport, merge_reports
from .maps import (
    EtaMap,
    GammaMap,
    additive_log_eta,
    affine_shift_eta,
    check_exponent_invariance,
    check_mult_translational,
    conjugate_eta,
    derive_gamma,
    eta_from_spec,
    extract_conjugator,
    gamma_from_spec,
    identity_eta,
    lambda_identity,
    lambda_power,
    lambda_power_in_s,
    log_blend_eta,
    power_scale_eta,
    ratio_gamma,
    s_only_eta,
    tabulated_eta,
    tabulated_gamma,
)
from .families import (
    SensitivityFamily,
    canonical_companions,
    eval_xi,
    family_from_spec,
    make_family,
    tabulated_family_from_csv,
)
from .laws import (
    LawClassification,
    LundbergCase,
    classify_laws,
    iverson_residual,
    lundberg_residual,
    make_lundberg_case,
    power_law_residual,
    shift_invariance_residual,
    weber_residual,
)
from .representations import (
    PsychometricFamily,
    Representation,
    balanced_parallel_rep,
    check_family_properties,
    decompose_balanced_parallel,
    export_psychometric_csv,
    fechnerian,
    gain_control,
    logistic_table,
    make_psychometric,
    parallel,
    representation_from_spec,
    representation_residual,
    sensitivity_from_psychometric,
    subtractive,
    xi_from_representation,
)
from .fitting import (
    FitResult,
    PowerPerS,
    SampleSet,
    TemplateParts,
    extract_template,
    fit_family,
    fit_power_per_s,
    fit_scales_subtractive,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "SimlawError",
    "ConfigError",
    "ConstraintError",
    "DivergenceError",
    "DomainError",
    "EmptyGridError",
    "GridSymmetryError",
    "InsufficientDataError",
    "IoError",
    "LinkRangeError",
    "NonConvergenceError",
    "NonMonotoneError",
    "NonPositiveError",
    "NotInvertibleError",
    "ParamError",
    "RangeError",
    "TooManyExclusionsError",
    # scales
    "ScaleFunction",
    "Constant",
    "TableCurve",
    "InverseScale",
    "ComposedCurve",
    "affine",
    "log_scale",
    "power_scale",
    "exp_scale",
    "identity_scale",
    "table_scale",
    "scale_from_spec",
    # grids
    "Grid",
    "ResidualReport",
    "ResidualAccumulator",
    "merge_reports",
    # maps
    "EtaMap",
    "GammaMap",
    "power_scale_eta",
    "conjugate_eta",
    "identity_eta",
    "s_only_eta",
    "affine_shift_eta",
    "log_blend_eta",
    "additive_log_eta",
    "tabulated_eta",
    "lambda_power",
    "lambda_power_in_s",
    "lambda_identity",
    "ratio_gamma",
    "tabulated_gamma",
    "check_mult_translational",
    "extract_conjugator",
    "derive_gamma",
    "check_exponent_invariance",
    "eta_from_spec",
    "gamma_from_spec",
    # families
    "SensitivityFamily",
    "make_family",
    "eval_xi",
    "canonical_companions",
    "family_from_spec",
    "tabulated_family_from_csv",
    # laws
    "iverson_residual",
    "weber_residual",
    "power_law_residual",
    "shift_invariance_residual",
    "LundbergCase",
    "make_lundberg_case",
    "lundberg_residual",
    "LawClassification",
    "classify_laws",
    # representations
    "Representation",
    "fechnerian",
    "subtractive",
    "gain_control",
    "parallel",
    "balanced_parallel_rep",
    "xi_from_representation",
    "representation_residual",
    "logistic_table",
    "PsychometricFamily",
    "make_psychometric",
    "sensitivity_from_psychometric",
    "check_family_properties",
    "decompose_balanced_parallel",
    "export_psychometric_csv",
    "representation_from_spec",
    # fitting
    "SampleSet",
    "FitResult",
    "PowerPerS",
    "fit_power_per_s",
    "fit_family",
    "fit_scales_subtractive",
    "TemplateParts",
    "extract_template",
]
