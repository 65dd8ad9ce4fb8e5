"""Centralized tolerance defaults for the whole workbench.

Every numerical gate in the package reads its threshold from a single
:class:`Tolerances` record so that tolerance policy lives in one place and can
be overridden per run (e.g. from a CLI problem spec).
"""

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    # duality-map roundtrips and isometry
    roundtrip_rel: float = 1e-10
    # generic semi-inner-product identities (linearity, norm compatibility)
    sip_rel: float = 1e-9
    # finite-difference check of the norm derivative
    gateaux_abs: float = 1e-5
    gateaux_step: float = 1e-6
    # adjoint pairing analyze(f*).c == f*(synthesize(c))
    adjoint_rel: float = 1e-9
    # frame-operator identity f*(S f*) == ||T f*||^2
    frame_identity_rel: float = 1e-8
    # span membership for atomic-system feasibility
    span_rel: float = 1e-8
    # ratio below this (with ||K* f*|| > 0) refutes the lower frame bound
    refute_ratio: float = 1e-8
    # dual-family reconstruction residual
    reconstruction_rel: float = 1e-7
    # first-order optimality of minimum-norm coefficients
    min_norm_optimality: float = 1e-6
    # optimizer convergence: stop when the ratio changes less than this
    opt_ratio_change: float = 1e-10
    # agreement between independently computed operator norms
    opt_agreement_rel: float = 1e-6
    # pseudo-inverse defining identities K K+ K = K, K+ K K+ = K+
    pinv_residual: float = 1e-10

    def with_overrides(self, **kwargs) -> "Tolerances":
        return replace(self, **kwargs)


DEFAULT_TOLS = Tolerances()
