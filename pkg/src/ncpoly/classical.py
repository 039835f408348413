"""Scalar (commutative) polymorphisms on finite product spaces.

A joint measure on ``X1 x X2`` is stored as a weight per product atom. Its
marginals, conditionals and the disintegration identity

    nu(A x B) = sum_{x1 in A} mu1(x1) nu(B | x1)
              = sum_{x2 in B} mu2(x2) nu(A | x2)

are computed directly by finite summation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .linalg import DEFAULT_TOL, Tolerance
from .spaces import Event, FiniteSpace, ProductSpace, all_events, product

__all__ = [
    "FiniteMeasure",
    "JointMeasure",
    "DisintegrationReport",
    "marginals",
    "conditional",
    "disintegration_check",
    "is_polymorphism",
    "product_measure",
]


def _weights(w, n, what):
    arr = np.array(w, dtype=float).reshape(-1)
    if arr.size != n:
        raise DomainError(f"{what} needs {n} weights, got {arr.size}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError(f"{what} weights must be finite and nonnegative")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FiniteMeasure:
    """Nonnegative weights on the atoms of a finite space."""

    space: FiniteSpace
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _weights(self.weights, len(self.space), "measure"))

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def is_probability(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return abs(self.total - 1.0) <= tol.abs

    def __call__(self, A: Event) -> float:
        if A.space != self.space:
            raise DomainError("event is not on this measure's space")
        return float(self.weights[list(A.members)].sum())

    def normalized(self) -> "FiniteMeasure":
        if self.total <= 0:
            raise DomainError("cannot normalize a zero measure")
        return FiniteMeasure(self.space, self.weights / self.total)

    def to_json(self) -> dict:
        return {
            "space": self.space.to_json(),
            "weights": {a: float(w) for a, w in zip(self.space.atoms, self.weights)},
        }


@dataclass(frozen=True, eq=False)
class JointMeasure:
    """Nonnegative weights on a product space, in its lexicographic atom order."""

    space: ProductSpace
    weights: np.ndarray

    def __post_init__(self):
        if not isinstance(self.space, ProductSpace):
            raise DomainError("a joint measure lives on a product space")
        object.__setattr__(self, "weights", _weights(self.weights, len(self.space), "joint measure"))

    @classmethod
    def from_table(cls, left: FiniteSpace, right: FiniteSpace, table) -> "JointMeasure":
        table = np.asarray(table, dtype=float)
        if table.shape != (len(left), len(right)):
            raise DomainError(f"table shape {table.shape} does not match {len(left)}x{len(right)}")
        return cls(product(left, right), table.reshape(-1))

    @property
    def table(self) -> np.ndarray:
        """Weights as an ``(|X1|, |X2|)`` array."""
        return self.weights.reshape(self.space.shape)

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def __call__(self, E: Event) -> float:
        if E.space != self.space:
            raise DomainError("event is not on this measure's space")
        return float(self.weights[list(E.members)].sum())

    def swapped(self) -> "JointMeasure":
        return JointMeasure(self.space.swapped(), self.table.T.reshape(-1))

    def to_json(self) -> dict:
        return {
            "space": self.space.to_json(),
            "weights": {a: float(w) for a, w in zip(self.space.atoms, self.weights)},
        }


def product_measure(mu1: FiniteMeasure, mu2: FiniteMeasure) -> JointMeasure:
    return JointMeasure.from_table(mu1.space, mu2.space, np.outer(mu1.weights, mu2.weights))


def marginals(nu: JointMeasure) -> tuple[FiniteMeasure, FiniteMeasure]:
    """Pushforwards of ``nu`` under the two coordinate projections."""
    t = nu.table
    return (
        FiniteMeasure(nu.space.left, t.sum(axis=1)),
        FiniteMeasure(nu.space.right, t.sum(axis=0)),
    )


def conditional(nu: JointMeasure, given: int, atom: int) -> FiniteMeasure:
    """Conditional probability measure on the other factor given one coordinate.

    ``given=1`` returns ``nu(. | x1=atom)`` on ``X2``; ``given=2`` returns
    ``nu(. | x2=atom)`` on ``X1``.
    """
    t = nu.table
    if given == 1:
        row, other = t[atom, :], nu.space.right
    elif given == 2:
        row, other = t[:, atom], nu.space.left
    else:
        raise DomainError(f"given must be 1 or 2, got {given!r}")
    mass = row.sum()
    if mass <= 0:
        raise DomainError(f"conditioning atom {atom} has zero marginal mass")
    return FiniteMeasure(other, row / mass)


@dataclass(frozen=True)
class DisintegrationReport:
    max_violation_left: float
    max_violation_right: float
    rectangles_checked: int
    exhaustive: bool
    skipped_left: tuple[int, ...]
    skipped_right: tuple[int, ...]

    @property
    def max_violation(self) -> float:
        return max(self.max_violation_left, self.max_violation_right)

    def passed(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return self.max_violation <= tol.abs

    def to_json(self) -> dict:
        return {
            "max_violation": self.max_violation,
            "max_violation_left": self.max_violation_left,
            "max_violation_right": self.max_violation_right,
            "rectangles_checked": self.rectangles_checked,
            "exhaustive": self.exhaustive,
        }


def _rectangles(space: ProductSpace, exhaustive_atoms: int, n_samples: int, rng):
    left, right = space.left, space.right
    if len(left) <= exhaustive_atoms and len(right) <= exhaustive_atoms:
        return itertools.product(all_events(left), all_events(right)), True
    rng = np.random.default_rng(0) if rng is None else rng
    pairs = [
        (
            Event(left, np.flatnonzero(rng.random(len(left)) < 0.5)),
            Event(right, np.flatnonzero(rng.random(len(right)) < 0.5)),
        )
        for _ in range(n_samples)
    ]
    return pairs, False


def disintegration_check(
    nu: JointMeasure,
    tol: Tolerance = DEFAULT_TOL,
    exhaustive_atoms: int = 6,
    n_samples: int = 256,
    rng: np.random.Generator | None = None,
) -> DisintegrationReport:
    """Check both disintegration identities on product events ``A x B``.

    The sweep is exhaustive when both factors have at most
    ``exhaustive_atoms`` atoms and sampled otherwise. Zero-mass atoms have no
    conditional and are skipped; they carry no mass on either side.
    """
    mu1, mu2 = marginals(nu)
    n1, n2 = nu.space.shape
    cond1 = {a: conditional(nu, 1, a) for a in range(n1) if mu1.weights[a] > 0}
    cond2 = {b: conditional(nu, 2, b) for b in range(n2) if mu2.weights[b] > 0}

    rects, exhaustive = _rectangles(nu.space, exhaustive_atoms, n_samples, rng)
    worst1 = worst2 = 0.0
    count = 0
    for A, B in rects:
        direct = nu(nu.space.rectangle(A, B))
        via1 = sum(mu1.weights[a] * cond1[a](B) for a in A.members if a in cond1)
        via2 = sum(mu2.weights[b] * cond2[b](A) for b in B.members if b in cond2)
        worst1 = max(worst1, abs(via1 - direct))
        worst2 = max(worst2, abs(via2 - direct))
        count += 1
    return DisintegrationReport(
        max_violation_left=worst1,
        max_violation_right=worst2,
        rectangles_checked=count,
        exhaustive=exhaustive,
        skipped_left=tuple(a for a in range(n1) if a not in cond1),
        skipped_right=tuple(b for b in range(n2) if b not in cond2),
    )


def is_polymorphism(
    nu: JointMeasure, mu1: FiniteMeasure, mu2: FiniteMeasure, tol: Tolerance = DEFAULT_TOL
) -> bool:
    """True when the marginals of ``nu`` are ``(mu1, mu2)`` atom-wise within ``tol.abs``."""
    if mu1.space != nu.space.left or mu2.space != nu.space.right:
        raise DomainError("claimed marginals live on the wrong spaces")
    m1, m2 = marginals(nu)
    return bool(
        np.all(np.abs(m1.weights - mu1.weights) <= tol.abs)
        and np.all(np.abs(m2.weights - mu2.weights) <= tol.abs)
    )
