"""Numerical workbench for frame theory in lp semi-inner-product spaces.

The package is organized around concrete representations: vectors by
coordinates, functionals by action coefficients, operators by dense arrays.
Quantities that the theory defines variationally (frame bounds, atomic
constants, perturbation margins) are estimated by deterministic multi-start
optimization and, where the dimension allows, cross-validated against
exhaustive grid oracles.
"""

from .config import DEFAULT_TOLS, Tolerances
from .spaces import (
    DimensionMismatch,
    DualVector,
    SipSpace,
    Vector,
    axiom_suite,
    dual_norm,
    dual_sip,
    dualize,
    norm,
    sip,
    undualize,
)
from .frames import (
    AdjointReport,
    CoeffDualVector,
    CoeffVector,
    FrameFamily,
    LinearOperator,
    adjoint_check,
    analyze,
    bessel_bound,
    coeff_duality_map,
    frame_operator,
    synthesize,
)
from .certify import (
    CertificationReport,
    OptResult,
    TransformedFamilyReport,
    bounded_below_margin,
    certify_k_frame,
    extremize_ratio,
    grid_oracle,
    operator_norm_analysis,
    operator_norm_dual,
    operator_norm_primal,
    operator_norm_synthesis,
    transformed_family_checks,
)
from .atomic import (
    DualFamily,
    EquivalenceReport,
    FactorizationError,
    InfeasibleError,
    LocalAtomFamily,
    LocalAtomReport,
    MinNormInfo,
    atomic_constant,
    check_local_atoms,
    construct_dual_family,
    equivalence_harness,
    min_lp_norm_solution,
    min_norm_coeffs,
)
from .perturb import (
    ConclusionReport,
    PerturbationInstance,
    PremiseReport,
    PseudoInverse,
    frame_operator_inequalities,
    pseudo_inverse,
    smallness_condition,
    verify_conclusion,
    verify_premise,
)
from .rkbs import (
    DiscreteRkbs,
    SamplingPattern,
    eval_functional,
    kernel_G,
    kernel_k,
    reconstruct_from_samples,
    sampled_frame_certify,
    sampling_family,
    sampling_operator,
)

__version__ = "0.1.0"
