"""Finite-dimensional weighted lp spaces with a compatible semi-inner product.

The space ``X`` is C^n normed by ``||f|| = (sum_j w_j |f_j|^p)^(1/p)`` with
``1 < p < inf`` and strictly positive weights ``w``.  Strict convexity of these
norms makes the duality mapping single-valued and bijective, which is what the
rest of the package relies on: every functional is stored concretely as its
action-coefficient list and can be pulled back to a unique vector.

Conventions:

* ``sip(g, h) = ||h||^(2-p) * sum_j w_j g_j conj(h_j) |h_j|^(p-2)``.  The
  normalization sits on the *second* argument; this is the unique choice that
  is conjugate-homogeneous in the second slot and reproduces ``sip(f, f) =
  ||f||^2``.
* terms with ``h_j = 0`` contribute zero (forced by continuity for p > 1).
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

__all__ = [
    "DimensionMismatch",
    "SipSpace",
    "Vector",
    "DualVector",
    "norm",
    "sip",
    "dualize",
    "undualize",
    "dual_norm",
    "dual_sip",
    "axiom_suite",
]

_CONJUGATE_EXPONENT_TOL = 1e-12


class DimensionMismatch(ValueError):
    """A vector or functional does not live in the space it was used with."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=complex if np.iscomplexobj(arr) else arr.dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SipSpace:
    """A weighted lp space on C^dim with exponent ``1 < p < inf``."""

    dim: int
    exponent: float
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        p = float(self.exponent)
        if not np.isfinite(p) or p <= 1.0:
            raise ValueError(
                f"exponent must satisfy 1 < p < inf, got {self.exponent!r}"
            )
        object.__setattr__(self, "exponent", p)
        w = self.weights
        if w is None:
            w = np.ones(self.dim)
        w = np.asarray(w, dtype=float)
        if w.shape != (self.dim,):
            raise ValueError(f"weights must have shape ({self.dim},), got {w.shape}")
        if not np.all(w > 0):
            raise ValueError("all weights must be strictly positive")
        object.__setattr__(self, "weights", _freeze(w))
        q = self.conjugate_exponent
        if abs(1.0 / p + 1.0 / q - 1.0) > _CONJUGATE_EXPONENT_TOL:
            raise ValueError("conjugate exponent inconsistent")  # pragma: no cover

    @property
    def conjugate_exponent(self) -> float:
        """q with 1/p + 1/q = 1."""
        p = self.exponent
        return p / (p - 1.0)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SipSpace)
            and self.dim == other.dim
            and self.exponent == other.exponent
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash((self.dim, self.exponent, self.weights.tobytes()))

    def vector(self, coords: Sequence[complex]) -> "Vector":
        return Vector(np.asarray(coords, dtype=complex), self)

    def dual_vector(self, action: Sequence[complex]) -> "DualVector":
        return DualVector(np.asarray(action, dtype=complex), self)

    def basis_vector(self, j: int) -> "Vector":
        coords = np.zeros(self.dim, dtype=complex)
        coords[j] = 1.0
        return Vector(coords, self)


def _check_member(space: SipSpace, coords: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(coords, dtype=complex)
    if arr.shape != (space.dim,):
        raise DimensionMismatch(
            f"{what} has shape {arr.shape}, expected ({space.dim},)"
        )
    return arr


@dataclass(frozen=True, eq=False)
class Vector:
    """An element of ``X``, stored by coordinates."""

    coords: np.ndarray
    space: SipSpace

    def __post_init__(self):
        object.__setattr__(
            self, "coords", _freeze(_check_member(self.space, self.coords, "vector"))
        )


@dataclass(frozen=True, eq=False)
class DualVector:
    """A functional on ``X`` acting by ``f*(g) = sum_j action_j g_j``."""

    action: np.ndarray
    space: SipSpace

    def __post_init__(self):
        object.__setattr__(
            self,
            "action",
            _freeze(_check_member(self.space, self.action, "dual vector")),
        )

    def __call__(self, g: Vector) -> complex:
        if g.space != self.space:
            raise DimensionMismatch("functional applied to vector of another space")
        return complex(np.dot(self.action, g.coords))


def _coords(space: SipSpace, f: Union[Vector, np.ndarray]) -> np.ndarray:
    if isinstance(f, Vector):
        if f.space != space:
            raise DimensionMismatch("vector belongs to a different space")
        return f.coords
    return _check_member(space, f, "vector")


def _action(space: SipSpace, d: Union[DualVector, np.ndarray]) -> np.ndarray:
    if isinstance(d, DualVector):
        if d.space != space:
            raise DimensionMismatch("dual vector belongs to a different space")
        return d.action
    return _check_member(space, d, "dual vector")


def norm(space: SipSpace, f: Union[Vector, np.ndarray]) -> float:
    """Weighted lp norm ``(sum_j w_j |f_j|^p)^(1/p)``."""
    x = _coords(space, f)
    return float(
        np.sum(space.weights * np.abs(x) ** space.exponent) ** (1.0 / space.exponent)
    )


def _second_slot_factor(space: SipSpace, h: np.ndarray) -> np.ndarray:
    """conj(h_j) |h_j|^(p-2) with the zero-coordinate convention."""
    mag = np.abs(h)
    out = np.zeros_like(h)
    nz = mag > 0
    out[nz] = np.conj(h[nz]) * mag[nz] ** (space.exponent - 2.0)
    return out


def sip(
    space: SipSpace,
    g: Union[Vector, np.ndarray],
    h: Union[Vector, np.ndarray],
) -> complex:
    """Semi-inner product ``[g, h]``; additive in g, conjugate-homogeneous in h."""
    gx = _coords(space, g)
    hx = _coords(space, h)
    nh = norm(space, hx)
    if nh == 0.0:
        return 0.0 + 0.0j
    return complex(
        nh ** (2.0 - space.exponent)
        * np.sum(space.weights * gx * _second_slot_factor(space, hx))
    )


def dualize(space: SipSpace, f: Union[Vector, np.ndarray]) -> DualVector:
    """The dual element f* of f: the functional g -> sip(g, f).

    Satisfies ``dual_norm(dualize(f)) == norm(f)`` exactly in real arithmetic.
    """
    x = _coords(space, f)
    nf = norm(space, x)
    if nf == 0.0:
        return DualVector(np.zeros(space.dim, dtype=complex), space)
    action = space.weights * _second_slot_factor(space, x) * nf ** (2.0 - space.exponent)
    return DualVector(action, space)


def dual_norm(space: SipSpace, d: Union[DualVector, np.ndarray]) -> float:
    """Norm of a functional: ``(sum_j w_j^(1-q) |d_j|^q)^(1/q)``."""
    a = _action(space, d)
    q = space.conjugate_exponent
    return float(np.sum(space.weights ** (1.0 - q) * np.abs(a) ** q) ** (1.0 / q))


def undualize(space: SipSpace, d: Union[DualVector, np.ndarray]) -> Vector:
    """Inverse of the duality map: the unique f with dualize(f) = d."""
    a = _action(space, d)
    nd = dual_norm(space, a)
    if nd == 0.0:
        return Vector(np.zeros(space.dim, dtype=complex), space)
    q = space.conjugate_exponent
    mag = np.abs(a)
    coords = np.zeros(space.dim, dtype=complex)
    nz = mag > 0
    coords[nz] = (
        (np.conj(a[nz]) / mag[nz])
        * (mag[nz] / space.weights[nz]) ** (q - 1.0)
        * nd ** (2.0 - q)
    )
    return Vector(coords, space)


def axiom_suite(space: SipSpace, seed: int = 0, draws: int = 200) -> dict:
    """Worst-case residuals of the s.i.p. axioms over random draws.

    Returns a mapping property-name -> worst relative residual; used by the
    CLI ``axioms`` task and by the acceptance tests.
    """
    rng = np.random.default_rng(seed)
    n = space.dim

    def rand_vec() -> np.ndarray:
        return rng.standard_normal(n) + 1j * rng.standard_normal(n)

    worst = {
        "norm_compatibility": 0.0,
        "cauchy_schwarz": 0.0,
        "first_slot_linearity": 0.0,
        "second_slot_conj_homogeneity": 0.0,
        "duality_roundtrip": 0.0,
        "duality_isometry": 0.0,
    }
    for _ in range(draws):
        f, g, h = rand_vec(), rand_vec(), rand_vec()
        lam = complex(rng.standard_normal(), rng.standard_normal())
        nf = norm(space, f)
        worst["norm_compatibility"] = max(
            worst["norm_compatibility"],
            abs(sip(space, f, f) - nf**2) / max(1.0, nf**2),
        )
        cs = abs(sip(space, g, h)) ** 2 - sip(space, g, g).real * sip(space, h, h).real
        worst["cauchy_schwarz"] = max(
            worst["cauchy_schwarz"],
            cs / max(1.0, (norm(space, g) * norm(space, h)) ** 2),
        )
        lin = sip(space, lam * f + g, h) - lam * sip(space, f, h) - sip(space, g, h)
        worst["first_slot_linearity"] = max(
            worst["first_slot_linearity"],
            abs(lin) / max(1.0, abs(sip(space, f, h)) + abs(sip(space, g, h))),
        )
        hom = sip(space, f, lam * h) - np.conj(lam) * sip(space, f, h)
        worst["second_slot_conj_homogeneity"] = max(
            worst["second_slot_conj_homogeneity"],
            abs(hom) / max(1.0, abs(sip(space, f, h))),
        )
        d = dualize(space, f)
        back = undualize(space, d)
        worst["duality_roundtrip"] = max(
            worst["duality_roundtrip"],
            float(np.linalg.norm(back.coords - f)) / max(1.0, float(np.linalg.norm(f))),
        )
        worst["duality_isometry"] = max(
            worst["duality_isometry"],
            abs(dual_norm(space, d) - nf) / max(1.0, nf),
        )
    return worst


def dual_sip(
    space: SipSpace,
    fstar: Union[DualVector, np.ndarray],
    gstar: Union[DualVector, np.ndarray],
) -> complex:
    """Compatible s.i.p. on X*: ``[f*, g*]_* = [g, f]`` with f, g the pullbacks."""
    f = undualize(space, fstar)
    g = undualize(space, gstar)
    return sip(space, g.coords, f.coords)
