"""Numerical laboratory for Wiener-Hopf operators with continuous symbols of
bounded variation: symbols, function-space norms, discretized operators and
Fredholm index checks."""

from whlab.errors import (
    AliasWarning,
    BracketFailure,
    CrossValidationFailure,
    DivergentTail,
    InfiniteVariation,
    LogBranchFailure,
    NonClosing,
    NonElliptic,
    PathEllipticityFailure,
    SchemaError,
    SingularPoint,
    TransversalityFailure,
    Unsupported,
    WHLabError,
)
from whlab.fredholm import (
    AnalyzeOptions,
    FredholmReport,
    KernelBasis,
    analyze,
    homotopy_verify,
    kernel_basis,
    perturbation_experiment,
)
from whlab.grids import Circle, HalfLine, Line
from whlab.operator import (
    OperatorMatrix,
    SingularValueProfile,
    adjoint,
    cauchy_singular_circle,
    cauchy_singular_line,
    compactness_evidence,
    fourier_convolution,
    inverse_mobius_transform,
    mobius_transform,
    riesz_projection,
    semi_commutator,
    semi_commutator_identity,
    toeplitz_section,
    wiener_hopf,
)
from whlab.symbol import (
    Constant,
    PiecewiseLinear,
    PLData,
    Power,
    Product,
    Rational,
    Scaled,
    Sum,
    Symbol,
    ellipticity_margin,
    pl_approximate,
    variation,
    winding_number,
)

__version__ = "0.1.0"
