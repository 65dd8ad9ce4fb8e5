"""Frame families and their analysis / synthesis / frame operators.

A family ``{f_j}`` in a :class:`~sipframes.spaces.SipSpace` comes with a
coefficient space ``X_d = l^{p_d}`` over the index set.  Functionals on X and
on X_d are held by their action-coefficient lists, so both operators become
plain matrices:

* analysis ``T``: action coefficients of f* -> ``{f*(f_j)}`` (rows are the
  member coordinates, no conjugation),
* synthesis ``U``: ``{c_j} -> sum_j c_j f_j`` (columns are the members).

``T`` is literally ``U`` transposed in this encoding, which is the adjoint
relation at finite dimension.  The frame operator ``S = U . Phi . T`` routes
through the duality map Phi of the coefficient dual space and is nonlinear
unless ``p_d = 2``.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .config import DEFAULT_TOLS, Tolerances
from .spaces import (
    DimensionMismatch,
    DualVector,
    SipSpace,
    Vector,
)

__all__ = [
    "FrameFamily",
    "LinearOperator",
    "CoeffVector",
    "CoeffDualVector",
    "analyze",
    "synthesize",
    "adjoint_check",
    "AdjointReport",
    "coeff_duality_map",
    "frame_operator",
    "bessel_bound",
]


@dataclass(frozen=True, eq=False)
class FrameFamily:
    """Ordered finite family {f_j} in ``space`` with coefficient exponent p_d."""

    space: SipSpace
    members: Tuple[Vector, ...]
    coeff_exponent: float

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("a frame family needs at least one member")
        for f in members:
            if f.space != self.space:
                raise DimensionMismatch("family member outside the given space")
        object.__setattr__(self, "members", members)
        p_d = float(self.coeff_exponent)
        if not np.isfinite(p_d) or p_d <= 1.0:
            raise ValueError(f"coeff_exponent must satisfy 1 < p_d < inf, got {p_d}")
        object.__setattr__(self, "coeff_exponent", p_d)

    @property
    def count(self) -> int:
        return len(self.members)

    @property
    def coeff_dual_exponent(self) -> float:
        p_d = self.coeff_exponent
        return p_d / (p_d - 1.0)

    @property
    def synthesis_matrix(self) -> np.ndarray:
        """n x J array with the members as columns."""
        return np.column_stack([f.coords for f in self.members])

    @property
    def analysis_matrix(self) -> np.ndarray:
        """J x n array acting on action coefficients of functionals."""
        return self.synthesis_matrix.T

    @classmethod
    def from_coords(cls, space: SipSpace, rows: Sequence[Sequence[complex]],
                    coeff_exponent: float) -> "FrameFamily":
        return cls(space, tuple(space.vector(r) for r in rows), coeff_exponent)


@dataclass(frozen=True, eq=False)
class LinearOperator:
    """Dense operator between SipSpaces, acting on coordinates.

    The adjoint acts on action coefficients by the plain (non-conjugated)
    transpose, so that ``(K* f*)(g) = f*(K g)`` holds exactly.
    """

    entries: np.ndarray
    domain: SipSpace
    codomain: Optional[SipSpace] = None

    def __post_init__(self):
        codomain = self.codomain if self.codomain is not None else self.domain
        entries = np.asarray(self.entries, dtype=complex)
        if entries.shape != (codomain.dim, self.domain.dim):
            raise DimensionMismatch(
                f"operator array has shape {entries.shape}, expected "
                f"({codomain.dim}, {self.domain.dim})"
            )
        entries = entries.copy()
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "codomain", codomain)

    @classmethod
    def identity(cls, space: SipSpace) -> "LinearOperator":
        return cls(np.eye(space.dim, dtype=complex), space)

    @classmethod
    def from_adjoint_entries(cls, adjoint_entries, space: SipSpace) -> "LinearOperator":
        """Build K from the array of K* (as it acts on action coefficients)."""
        return cls(np.asarray(adjoint_entries, dtype=complex).T, space)

    def apply(self, f: Vector) -> Vector:
        if f.space != self.domain:
            raise DimensionMismatch("operator applied outside its domain")
        return Vector(self.entries @ f.coords, self.codomain)

    def apply_adjoint(self, fstar: DualVector) -> DualVector:
        if fstar.space != self.codomain:
            raise DimensionMismatch("adjoint applied outside the codomain dual")
        return DualVector(self.entries.T @ fstar.action, self.domain)


@dataclass(frozen=True)
class CoeffVector:
    """Element of X_d; its norm is the plain l^p norm of ``values``."""

    values: np.ndarray
    exponent: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.values) ** self.exponent) ** (1 / self.exponent))


@dataclass(frozen=True)
class CoeffDualVector:
    """Functional on X_d by its action coefficients; norm is l^q, q conjugate."""

    values: np.ndarray
    exponent: float  # the dual exponent q_d

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.values) ** self.exponent) ** (1 / self.exponent))


def _fstar_action(fam: FrameFamily, fstar: Union[DualVector, np.ndarray]) -> np.ndarray:
    if isinstance(fstar, DualVector):
        if fstar.space != fam.space:
            raise DimensionMismatch("functional belongs to another space")
        return fstar.action
    a = np.asarray(fstar, dtype=complex)
    if a.shape != (fam.space.dim,):
        raise DimensionMismatch(f"functional has shape {a.shape}")
    return a


def analyze(fam: FrameFamily, fstar: Union[DualVector, np.ndarray]) -> CoeffDualVector:
    """T f* = {f*(f_j)} as a functional on X_d."""
    a = _fstar_action(fam, fstar)
    return CoeffDualVector(fam.analysis_matrix @ a, fam.coeff_dual_exponent)


def synthesize(fam: FrameFamily, c: Union[CoeffVector, np.ndarray]) -> Vector:
    """U c = sum_j c_j f_j."""
    vals = c.values if isinstance(c, CoeffVector) else np.asarray(c, dtype=complex)
    if vals.shape != (fam.count,):
        raise DimensionMismatch(
            f"coefficient vector has shape {vals.shape}, expected ({fam.count},)"
        )
    return Vector(fam.synthesis_matrix @ vals, fam.space)


@dataclass(frozen=True)
class AdjointReport:
    passed: bool
    max_residual: float
    trials: int


def adjoint_check(
    fam: FrameFamily,
    seed: int = 0,
    trials: int = 50,
    tols: Tolerances = DEFAULT_TOLS,
    analysis_override: Optional[np.ndarray] = None,
) -> AdjointReport:
    """Verify (U* f*)(c) = f*(U c) on random pairs; U* is realized by analyze.

    ``analysis_override`` substitutes a (possibly corrupted) analysis array and
    exists so negative controls can be run through the same code path.
    """
    rng = np.random.default_rng(seed)
    T = fam.analysis_matrix if analysis_override is None else np.asarray(analysis_override)
    worst = 0.0
    for _ in range(trials):
        d = rng.standard_normal(fam.space.dim) + 1j * rng.standard_normal(fam.space.dim)
        c = rng.standard_normal(fam.count) + 1j * rng.standard_normal(fam.count)
        lhs = np.dot(T @ d, c)
        rhs = np.dot(d, fam.synthesis_matrix @ c)
        scale = max(abs(lhs), abs(rhs), 1.0)
        worst = max(worst, abs(lhs - rhs) / scale)
    return AdjointReport(worst <= tols.adjoint_rel, worst, trials)


def coeff_duality_map(fam: FrameFamily, c: Union[CoeffDualVector, np.ndarray]) -> CoeffVector:
    """Duality map Phi of X_d*: functional coefficients -> element of X_d.

    ``Phi(c)_j = conj(c_j) |c_j|^(q_d - 2) ||c||_{q_d}^(2 - q_d)``; it is
    norm-preserving and pairs with c to ``||c||^2``.
    """
    vals = c.values if isinstance(c, CoeffDualVector) else np.asarray(c, dtype=complex)
    q_d = fam.coeff_dual_exponent
    nc = float(np.sum(np.abs(vals) ** q_d) ** (1 / q_d))
    out = np.zeros_like(vals)
    if nc > 0.0:
        mag = np.abs(vals)
        nz = mag > 0
        out[nz] = np.conj(vals[nz]) * mag[nz] ** (q_d - 2.0) * nc ** (2.0 - q_d)
    return CoeffVector(out, fam.coeff_exponent)


def frame_operator(fam: FrameFamily, fstar: Union[DualVector, np.ndarray]) -> Vector:
    """S f* = U Phi T f*; satisfies f*(S f*) = ||T f*||^2."""
    return synthesize(fam, coeff_duality_map(fam, analyze(fam, fstar)))


def bessel_bound(
    fam: FrameFamily,
    seed: int = 0,
    restarts: int = 64,
    tols: Tolerances = DEFAULT_TOLS,
) -> float:
    """Optimal Bessel bound sup ||T f*|| / ||f*||.

    Computed twice: as the analysis-operator norm and as the synthesis-operator
    norm sup ||U c|| / ||c||; the two must agree within optimizer tolerance.
    """
    from .certify import operator_norm_analysis, operator_norm_synthesis

    b_analysis = operator_norm_analysis(fam, seed=seed, restarts=restarts)
    b_synthesis = operator_norm_synthesis(fam, seed=seed + 1, restarts=restarts)
    scale = max(b_analysis, b_synthesis, 1e-30)
    if abs(b_analysis - b_synthesis) / scale > max(tols.opt_agreement_rel, 1e-6) * 100:
        raise ArithmeticError(
            f"analysis/synthesis Bessel bounds disagree: {b_analysis} vs {b_synthesis}"
        )
    return max(b_analysis, b_synthesis)
