"""Positive operator-valued measures on finite spaces.

A :class:`Povm` stores one effect per atom; the value on any event is the sum
of its atoms' effects, so finite additivity holds by construction and
validation concentrates on positivity and completeness.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .classical import FiniteMeasure, JointMeasure
from .errors import DimensionError, DomainError
from .linalg import DEFAULT_TOL, Tolerance, as_matrix, is_psd, max_abs, min_eigenvalue
from .spaces import Event, FiniteSpace, ProductSpace, preimage

__all__ = [
    "Povm",
    "Pvm",
    "VectorField",
    "AxiomReport",
    "validate_povm",
    "validate_pvm",
    "evaluate",
    "marginal_povm",
    "covariance_operator",
    "classical_povm",
]


def _effects_array(space, dim, effects):
    if isinstance(effects, dict):
        effects = [effects[a] for a in space.atoms]
    arr = np.array([as_matrix(E, "effect") for E in effects], dtype=np.complex128)
    if arr.shape != (len(space), dim, dim):
        raise DimensionError(
            f"expected {len(space)} effects of size {dim}x{dim}, got array of shape {arr.shape}"
        )
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Povm:
    """Effects ``E_j`` (one ``dim x dim`` matrix per atom) on a finite space.

    Construction checks shapes only; use :func:`validate_povm` for the axioms.
    """

    space: FiniteSpace
    dim: int
    effects: np.ndarray
    kind: str = field(default="povm", init=False)

    def __post_init__(self):
        if int(self.dim) < 1:
            raise DomainError("POVM dimension must be positive")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "effects", _effects_array(self.space, self.dim, self.effects))

    def __call__(self, A: Event) -> np.ndarray:
        return evaluate(self, A)

    def effect(self, label: str) -> np.ndarray:
        return self.effects[self.space.index(label)]

    def conjugated(self, U) -> "Povm":
        """``U* E_j U`` for every effect (a unitary relabeling of the Hilbert space)."""
        U = as_matrix(U)
        return type(self)(self.space, self.dim, [U.conj().T @ E @ U for E in self.effects])

    def as_povm(self) -> "Povm":
        return Povm(self.space, self.dim, self.effects)


class Pvm(Povm):
    """A POVM whose atom effects are mutually orthogonal projections."""

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "kind", "pvm")


@dataclass(frozen=True, eq=False)
class VectorField:
    """One ``dim``-vector per atom of ``space``."""

    space: FiniteSpace
    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=np.complex128)
        if v.ndim != 2 or v.shape[0] != len(self.space):
            raise DimensionError(f"need one vector per atom, got array of shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("vector field has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@dataclass
class AxiomReport:
    """Per-axiom verdicts with the worst residual seen for each."""

    kind: str
    checks: dict = field(default_factory=dict)

    def record(self, name: str, passed: bool, residual: float, detail: str = ""):
        prev = self.checks.get(name)
        if prev is not None:
            passed = passed and prev["pass"]
            residual = max(residual, prev["residual"])
            detail = detail or prev["detail"]
        self.checks[name] = {"pass": bool(passed), "residual": float(residual), "detail": detail}

    @property
    def ok(self) -> bool:
        return all(c["pass"] for c in self.checks.values())

    @property
    def failures(self) -> list[str]:
        return [name for name, c in self.checks.items() if not c["pass"]]

    def to_json(self) -> dict:
        return {"kind": self.kind, "pass": self.ok, "checks": self.checks}


def evaluate(Q: Povm, A: Event) -> np.ndarray:
    """``Q(A)``: the sum of the effects of the atoms in ``A``."""
    if A.space != Q.space:
        raise DomainError("event is not on the POVM's space")
    if not A.members:
        return np.zeros((Q.dim, Q.dim), dtype=np.complex128)
    return Q.effects[list(A.members)].sum(axis=0)


def _disjoint_families(space, n_families, rng):
    n = len(space)
    for _ in range(n_families):
        labels = rng.integers(0, 4, size=n)
        yield [Event(space, np.flatnonzero(labels == k)) for k in range(4)]


def validate_povm(
    Q: Povm,
    tol: Tolerance = DEFAULT_TOL,
    n_families: int = 16,
    rng: np.random.Generator | None = None,
) -> AxiomReport:
    """Check normalization, positivity of every effect, and finite additivity.

    Additivity is tested on ``n_families`` random partitions of random events
    into four disjoint pieces.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    report = AxiomReport(kind="povm")
    d = Q.dim
    eye = np.eye(d)

    empty = max_abs(evaluate(Q, Q.space.empty))
    report.record("empty_is_zero", empty <= tol.abs, empty)
    total = max_abs(evaluate(Q, Q.space.full) - eye)
    report.record(
        "completeness",
        total <= tol.abs * max(1, len(Q.space)),
        total,
        "" if total <= tol.abs * max(1, len(Q.space)) else "sum of effects differs from the identity",
    )

    worst_neg = 0.0
    bad = []
    for label, E in zip(Q.space.atoms, Q.effects):
        if not is_psd(E, tol):
            bad.append(label)
        worst_neg = max(worst_neg, -min_eigenvalue(E))
    report.record("positivity", not bad, worst_neg, f"non-PSD effects: {bad}" if bad else "")

    worst_add = 0.0
    for parts in _disjoint_families(Q.space, n_families, rng):
        union = parts[0]
        for p in parts[1:]:
            union = union | p
        lhs = evaluate(Q, union)
        rhs = sum(evaluate(Q, p) for p in parts)
        worst_add = max(worst_add, max_abs(lhs - rhs))
    report.record("additivity", worst_add <= tol.abs * max(1, len(Q.space)), worst_add)
    return report


def validate_pvm(
    P: Povm,
    tol: Tolerance = DEFAULT_TOL,
    n_pairs: int = 16,
    rng: np.random.Generator | None = None,
) -> AxiomReport:
    """All POVM checks plus idempotence, self-adjointness and multiplicativity."""
    rng = np.random.default_rng(0) if rng is None else rng
    report = validate_povm(P, tol, rng=rng)
    report.kind = "pvm"
    n = len(P.space)
    scale = tol.abs * max(1, n)

    idem = max((max_abs(E @ E - E) for E in P.effects), default=0.0)
    report.record("idempotence", idem <= scale, idem)
    adj = max((max_abs(E - E.conj().T) for E in P.effects), default=0.0)
    report.record("self_adjoint", adj <= scale, adj)
    orth = 0.0
    for i, j in itertools.combinations(range(n), 2):
        orth = max(orth, max_abs(P.effects[i] @ P.effects[j]))
    report.record("orthogonality", orth <= scale, orth)

    mult = 0.0
    for _ in range(n_pairs):
        A = Event(P.space, np.flatnonzero(rng.random(n) < 0.5))
        B = Event(P.space, np.flatnonzero(rng.random(n) < 0.5))
        mult = max(mult, max_abs(evaluate(P, A & B) - evaluate(P, A) @ evaluate(P, B)))
    report.record("multiplicativity", mult <= scale, mult)
    return report


def marginal_povm(Q: Povm, coordinate: int) -> Povm:
    """``Q o pi_i^{-1}`` on the left (1) or right (2) factor of a product space."""
    if not isinstance(Q.space, ProductSpace):
        raise DomainError("marginal_povm needs a POVM on a product space")
    if coordinate not in (1, 2):
        raise DomainError(f"coordinate must be 1 or 2, got {coordinate!r}")
    factor = Q.space.left if coordinate == 1 else Q.space.right
    effects = [evaluate(Q, preimage(Q.space, coordinate, factor.atom(i))) for i in range(len(factor))]
    return type(Q)(factor, Q.dim, effects)


def classical_povm(nu: JointMeasure | FiniteMeasure) -> Povm:
    """The dimension-1 POVM whose effects are the atom weights."""
    return Povm(nu.space, 1, np.asarray(nu.weights, dtype=float).reshape(-1, 1, 1))


def covariance_operator(F: VectorField, G: VectorField, mu: FiniteMeasure):
    """Covariance operator ``C = sum_s mu(s) |G(s)><F(s)|`` and its trace formula.

    Returns
    -------
    C : ndarray, shape (d, d)
    trace : complex
        ``sum_s mu(s) <F(s), G(s)>`` with the inner product conjugate-linear
        in its first slot. Equals ``np.trace(C)`` up to rounding.
    """
    if F.space != G.space or F.space != mu.space:
        raise DomainError("F, G and mu must share one space")
    if F.dim != G.dim:
        raise DimensionError(f"F has dimension {F.dim} but G has {G.dim}")
    w = mu.weights
    C = np.einsum("s,si,sj->ij", w, G.vectors, F.vectors.conj())
    trace = complex(np.sum(w * np.einsum("si,si->s", F.vectors.conj(), G.vectors)))
    return C, trace
