"""Operator-valued positive-definite kernels over finite index sets.

A kernel ``K(s, t)`` on ``n`` indices with ``d x d`` values is handled through
its block Gram matrix ``G[(s, p), (t, q)] = K(s, t)[p, q]`` of size ``n*d``.
Positivity, the ordering ``L <= K`` and the factorization ``K(s, t) = V_s* V_t``
are all statements about that one matrix.

The Radon-Nikodym derivative ``Gamma = dL/dK`` lives on the ``r``-dimensional
factor space (the row space of the global factor ``W``), where it is unique.
It solves ``G_L = W* Gamma W`` in one shot with two pseudo-inverses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    AxiomViolation,
    DimensionError,
    DomainError,
    InternalConsistencyError,
    NotPSDError,
    OrderingViolationError,
    TheoremViolationError,
)
from .linalg import (
    DEFAULT_TOL,
    Tolerance,
    as_matrix,
    hermitize,
    is_psd,
    max_abs,
    min_eigenvalue,
    pinv,
    psd_factor,
)
from .povm import Povm
from .spaces import Event, all_events

__all__ = [
    "OperatorKernel",
    "KernelFactorization",
    "RadonNikodymDerivative",
    "is_pd",
    "factor",
    "leq",
    "rn_derivative",
    "solve_gamma",
    "povm_kernel",
    "event_kernel",
    "event_label",
    "compression_map",
    "RN_TOL",
    "FACTOR_TOL",
    "MAX_EVENT_ATOMS",
]

FACTOR_TOL = 1e-8
RN_TOL = 1e-7
MAX_EVENT_ATOMS = 8


@dataclass(frozen=True, eq=False)
class OperatorKernel:
    """``n x n`` grid of ``dim x dim`` blocks, Hermitian: ``K(t, s) = K(s, t)*``."""

    labels: tuple[str, ...]
    dim: int
    blocks: np.ndarray

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        if len(set(labels)) != len(labels):
            raise DomainError("kernel index labels must be unique")
        n, d = len(labels), int(self.dim)
        b = np.array(self.blocks, dtype=np.complex128)
        if b.shape != (n, n, d, d):
            raise DimensionError(f"expected blocks of shape {(n, n, d, d)}, got {b.shape}")
        if not np.all(np.isfinite(b)):
            raise DomainError("kernel has non-finite entries")
        asym = max_abs(b - b.transpose(1, 0, 3, 2).conj())
        if asym > 1e-9 * max(1.0, max_abs(b)):
            raise AxiomViolation(f"kernel is not Hermitian (asymmetry {asym:.3e})")
        b.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "blocks", b)

    @classmethod
    def from_gram(cls, labels: Sequence[str], dim: int, G) -> "OperatorKernel":
        n = len(labels)
        G = as_matrix(G, "gram")
        if G.shape != (n * dim, n * dim):
            raise DimensionError(f"gram of shape {G.shape} does not fit {n} indices of dim {dim}")
        return cls(tuple(labels), dim, G.reshape(n, dim, n, dim).transpose(0, 2, 1, 3))

    @classmethod
    def from_function(cls, labels: Sequence[str], dim: int, fn: Callable) -> "OperatorKernel":
        """Tabulate ``fn(i, j)`` (index positions) over all pairs."""
        n = len(labels)
        return cls(tuple(labels), dim, [[as_matrix(fn(i, j)) for j in range(n)] for i in range(n)])

    @property
    def n(self) -> int:
        return len(self.labels)

    def __call__(self, s: str, t: str) -> np.ndarray:
        return self.blocks[self.labels.index(s), self.labels.index(t)]

    def gram(self) -> np.ndarray:
        n, d = self.n, self.dim
        return self.blocks.transpose(0, 2, 1, 3).reshape(n * d, n * d)

    def _same_shape(self, other: "OperatorKernel"):
        if self.labels != other.labels or self.dim != other.dim:
            raise DomainError("kernels have different index sets or dimensions")

    def __add__(self, other):
        self._same_shape(other)
        return OperatorKernel(self.labels, self.dim, self.blocks + other.blocks)

    def __sub__(self, other):
        self._same_shape(other)
        return OperatorKernel(self.labels, self.dim, self.blocks - other.blocks)

    def __mul__(self, c):
        c = float(c)
        return OperatorKernel(self.labels, self.dim, c * self.blocks)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class KernelFactorization:
    """Global factor ``W`` (``r x n*dim``); ``V_s`` is the column block of index ``s``."""

    kernel: OperatorKernel
    W: np.ndarray
    residual: float

    @property
    def rank(self) -> int:
        return self.W.shape[0]

    def factor_at(self, i: int) -> np.ndarray:
        d = self.kernel.dim
        return self.W[:, i * d : (i + 1) * d]

    def factor_of(self, label: str) -> np.ndarray:
        return self.factor_at(self.kernel.labels.index(label))

    @property
    def factors(self) -> list[np.ndarray]:
        return [self.factor_at(i) for i in range(self.kernel.n)]


@dataclass(frozen=True, eq=False)
class RadonNikodymDerivative:
    """``Gamma`` on the factor space of ``with_respect_to``, with ``L(s,t) = V_s* Gamma V_t``."""

    gamma: np.ndarray
    with_respect_to: KernelFactorization
    residual: float
    spectrum: np.ndarray

    def reconstruct(self) -> np.ndarray:
        W = self.with_respect_to.W
        return W.conj().T @ self.gamma @ W


def is_pd(K: OperatorKernel, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Positive definiteness in the kernel sense: the block Gram matrix is PSD."""
    return is_psd(K.gram(), tol)


def factor(K: OperatorKernel, tol: Tolerance = DEFAULT_TOL) -> KernelFactorization:
    """Factor ``K(s, t) = V_s* V_t`` through the block Gram matrix.

    Raises
    ------
    DomainError
        If ``K`` is not positive definite.
    """
    G = K.gram()
    try:
        W = psd_factor(G, tol)
    except NotPSDError as exc:
        raise NotPSDError(f"kernel is not positive definite: {exc}", exc.min_eigenvalue) from None
    if W.shape[0] == 0:
        W = np.zeros((0, G.shape[0]), dtype=np.complex128)
    residual = max_abs(G - W.conj().T @ W)
    if residual > FACTOR_TOL * max(1.0, max_abs(G)):
        raise TheoremViolationError("kernel factorization lost accuracy", {"reconstruction": residual})
    return KernelFactorization(K, W, residual)


def leq(L: OperatorKernel, K: OperatorKernel, tol: Tolerance = DEFAULT_TOL) -> bool:
    """``L <= K``: the block Gram matrix of ``K - L`` is PSD."""
    L._same_shape(K)
    return is_psd(K.gram() - L.gram(), tol)


def solve_gamma(G_L, W, tol: Tolerance = DEFAULT_TOL):
    """Solve ``G_L = W* Gamma W`` for ``Gamma`` on the row space of ``W``.

    Returns ``(gamma, residual, spectrum)`` without judging them.
    """
    Wp = pinv(W, tol)
    gamma, _ = hermitize(Wp.conj().T @ G_L @ Wp) if W.shape[0] else (np.zeros((0, 0), complex), 0.0)
    residual = max_abs(G_L - W.conj().T @ gamma @ W)
    spectrum = np.linalg.eigvalsh(gamma) if gamma.size else np.zeros(0)
    return gamma, residual, spectrum


def rn_derivative(
    L: OperatorKernel,
    K: OperatorKernel,
    tol: Tolerance = DEFAULT_TOL,
    factorization: KernelFactorization | None = None,
) -> RadonNikodymDerivative:
    """Radon-Nikodym derivative ``dL/dK``.

    ``Gamma`` is accepted when it reproduces ``G_L`` to within
    ``RN_TOL * max(1, |G_L|)`` and its spectrum lies in
    ``[-RN_TOL, 1 + RN_TOL]``. That verdict is then cross-checked against the
    independent test :func:`leq`; the two must agree.

    Raises
    ------
    OrderingViolationError
        If ``L <= K`` fails. Carries the most negative eigenvalue of ``K - L``.
    InternalConsistencyError
        If the solved ``Gamma`` and :func:`leq` disagree.
    """
    L._same_shape(K)
    if not is_pd(L, tol):
        raise DomainError("L is not positive definite")
    fac = factor(K, tol) if factorization is None else factorization
    if fac.W.shape[1] != K.n * K.dim:
        raise DimensionError("factorization does not match the index space of K")
    G_L = L.gram()
    gamma, residual, spectrum = solve_gamma(G_L, fac.W, tol)
    solved = residual <= RN_TOL * max(1.0, max_abs(G_L)) and (
        spectrum.size == 0 or (spectrum[0] >= -RN_TOL and spectrum[-1] <= 1.0 + RN_TOL)
    )
    dominated = leq(L, K, tol)
    if solved and dominated:
        gamma.setflags(write=False)
        return RadonNikodymDerivative(gamma, fac, residual, spectrum)
    if not solved and not dominated:
        gap = min_eigenvalue(K.gram() - G_L)
        raise OrderingViolationError(f"L <= K fails (min eigenvalue of K - L: {gap:.3e})", gap)
    raise InternalConsistencyError(
        f"leq says {dominated} but the solved Gamma says {solved} "
        f"(residual {residual:.3e}, spectrum [{spectrum.min() if spectrum.size else 0:.6g}, "
        f"{spectrum.max() if spectrum.size else 0:.6g}])"
    )


def compression_map(fac: KernelFactorization, sections) -> np.ndarray:
    """Isometry from the factor space onto the span of a second factorization.

    ``sections`` is any ``D x n*dim`` matrix with ``sections* sections = G_K``.
    The map ``U = sections @ pinv(W)`` satisfies ``U W = sections`` and
    ``U* U = I_r``, so ``U* M U`` is the compression of an operator ``M`` on
    ``C^D`` to the factor space.
    """
    S = as_matrix(sections, "sections")
    if S.shape[1] != fac.W.shape[1]:
        raise DimensionError("sections and factorization disagree on the index space")
    return S @ pinv(fac.W)


def event_label(A: Event) -> str:
    return "{" + ",".join(A.labels) + "}"


def event_kernel(effects: np.ndarray, events: Sequence[Event], labels=None) -> OperatorKernel:
    """``K(A, B) = sum_{j in A n B} E_j`` for an atom-indexed stack of effects."""
    effects = np.asarray(effects, dtype=np.complex128)
    X = np.array([A.indicator() for A in events]).reshape(len(events), -1)
    blocks = np.einsum("ia,ja,apq->ijpq", X, X, effects)
    labels = [event_label(A) for A in events] if labels is None else labels
    return OperatorKernel(tuple(labels), effects.shape[1], blocks)


def povm_kernel(Q: Povm, events: Sequence[Event] | None = None) -> OperatorKernel:
    """Event-indexed kernel ``K(A, B) = Q(A n B)``.

    With ``events=None`` the index set is every event when the space has at
    most ``MAX_EVENT_ATOMS`` atoms, otherwise the atoms alone. Supplied events
    are appended to the atoms on large spaces and used as given on small ones.
    """
    space = Q.space
    for A in events or ():
        if A.space != space:
            raise DomainError("event is outside the POVM's space")
    if events is None:
        if len(space) <= MAX_EVENT_ATOMS:
            events = all_events(space)
        else:
            events = [space.atom(j) for j in range(len(space))]
    elif len(space) > MAX_EVENT_ATOMS:
        atoms = [space.atom(j) for j in range(len(space))]
        seen = {A.members for A in atoms}
        events = atoms + [A for A in events if A.members not in seen]
    return event_kernel(Q.effects, list(events))
