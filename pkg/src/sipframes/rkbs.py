"""Discrete reproducing kernel Banach spaces via feature maps.

The smallest faithful model: a finite point set Omega, a full-column-rank
feature array V, and functions f(t) = sum_k a_k V[t,k] normed by the lp norm
of the coefficient vector a.  Point evaluation at t is then the functional
with action coefficients V[t,:], its primal representer G(t,.) is obtained by
undualizing, and the kernel satisfies k(s,t) = [G(s,.), G(t,.)] so that the
relationship k(.,t) = (G(t,.))* is structural rather than asserted.

Sampling a subset Z of points is analysis against the family {k(t_j, .)};
reconstruction goes through the dual-family machinery of
:mod:`sipframes.atomic`.
"""

from dataclasses import dataclass
from typing import Hashable, Optional, Sequence, Tuple, Union

import numpy as np

from .config import DEFAULT_TOLS, Tolerances
from .certify import CertificationReport, certify_k_frame
from .atomic import construct_dual_family
from .frames import CoeffDualVector, FrameFamily, LinearOperator, analyze
from .spaces import DualVector, SipSpace, Vector, sip, undualize

__all__ = [
    "DiscreteRkbs",
    "SamplingPattern",
    "kernel_G",
    "kernel_k",
    "sampling_operator",
    "sampling_family",
    "sampled_frame_certify",
    "reconstruct_from_samples",
    "eval_functional",
]


@dataclass(frozen=True, eq=False)
class DiscreteRkbs:
    """Functions on a finite point set, normed through their coefficients."""

    points: Tuple[Hashable, ...]
    features: np.ndarray  # m x n, full column rank
    coeff_space: SipSpace

    def __post_init__(self):
        pts = tuple(self.points)
        if len(set(pts)) != len(pts):
            raise ValueError("point labels must be distinct")
        V = np.asarray(self.features, dtype=complex)
        if V.shape != (len(pts), self.coeff_space.dim):
            raise ValueError(
                f"feature array must be {len(pts)} x {self.coeff_space.dim}, "
                f"got {V.shape}"
            )
        if np.linalg.matrix_rank(V) < self.coeff_space.dim:
            raise ValueError("feature array must have full column rank")
        V = V.copy()
        V.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "features", V)

    def point_index(self, t: Hashable) -> int:
        try:
            return self.points.index(t)
        except ValueError:
            raise KeyError(f"unknown point {t!r}") from None

    def evaluate(self, f: Vector, t: Hashable) -> complex:
        """f(t) through the feature map."""
        return complex(np.dot(self.features[self.point_index(t)], f.coords))


@dataclass(frozen=True)
class SamplingPattern:
    indices: Tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise ValueError("a sampling pattern must be nonempty")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def full(cls, space: DiscreteRkbs) -> "SamplingPattern":
        return cls(tuple(range(len(space.points))))


def kernel_G(space: DiscreteRkbs, t: Hashable) -> Vector:
    """G(t, .): the element of X whose dual functional is evaluation at t."""
    i = space.point_index(t)
    return undualize(space.coeff_space, space.features[i])


def kernel_k(space: DiscreteRkbs, s: Hashable, t: Hashable) -> complex:
    """k(s, t) = [G(s,.), G(t,.)]; k(., t) is the dual element of G(t,.)."""
    return sip(space.coeff_space, kernel_G(space, s), kernel_G(space, t))


def eval_functional(space: DiscreteRkbs, fstar: DualVector, t: Hashable) -> complex:
    """Value of a functional at a point: f*(t) = f*(k(t, .))."""
    return fstar(kernel_G(space, t))


def sampling_family(
    space: DiscreteRkbs,
    Z: SamplingPattern,
    coeff_exponent: Optional[float] = None,
) -> FrameFamily:
    """The family K_Z = {k(t_j, .)} indexed by the sampling pattern."""
    p_d = space.coeff_space.exponent if coeff_exponent is None else coeff_exponent
    members = tuple(kernel_G(space, space.points[i]) for i in Z.indices)
    return FrameFamily(space.coeff_space, members, p_d)


def sampling_operator(
    space: DiscreteRkbs,
    Z: SamplingPattern,
    fstar: DualVector,
    coeff_exponent: Optional[float] = None,
) -> CoeffDualVector:
    """I_Z(f*) = {f*(t_j)}, computed as analysis against K_Z."""
    return analyze(sampling_family(space, Z, coeff_exponent), fstar)


def sampled_frame_certify(
    space: DiscreteRkbs,
    Z: SamplingPattern,
    K: LinearOperator,
    coeff_exponent: Optional[float] = None,
    seed: int = 0,
    restarts: int = 64,
    oracle_resolution: Optional[int] = None,
    tols: Tolerances = DEFAULT_TOLS,
) -> CertificationReport:
    """Certify K_Z as a K-frame; with K = I this decides stable sampling."""
    fam = sampling_family(space, Z, coeff_exponent)
    return certify_k_frame(
        fam,
        K,
        seed=seed,
        restarts=restarts,
        oracle_resolution=oracle_resolution,
        tols=tols,
    )


def reconstruct_from_samples(
    space: DiscreteRkbs,
    Z: SamplingPattern,
    K: LinearOperator,
    samples: Union[CoeffDualVector, Sequence[complex], np.ndarray],
) -> DualVector:
    """sum_j f*(t_j) g_j* with the dual family built from K_Z.

    Recovers K* f* exactly when the sampled values come from f*; with K = I
    this is full reconstruction of the functional.
    """
    fam = sampling_family(space, Z)
    dual_fam = construct_dual_family(fam, K)
    vals = samples.values if isinstance(samples, CoeffDualVector) else np.asarray(
        samples, dtype=complex
    )
    if vals.shape != (len(Z.indices),):
        raise ValueError(
            f"expected {len(Z.indices)} sample values, got shape {vals.shape}"
        )
    return DualVector(dual_fam.provenance @ vals, space.coeff_space)
