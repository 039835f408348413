"""Constructive Naimark dilation of a finite POVM.

The isometry stacks square roots of the effects, ``V = [E_1^{1/2}; ...; E_n^{1/2}]``,
and the dilating PVM projects onto the blocks, so ``V* P(A) V = sum_{j in A} E_j``.
With ``compress=True`` each block is shrunk to ``rank(E_j)`` rows using a PSD
factor ``W_j`` with ``W_j* W_j = E_j``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, TheoremViolationError
from .linalg import DEFAULT_TOL, Tolerance, max_abs, psd_factor, psd_sqrt
from .povm import Povm, Pvm, evaluate, validate_povm
from .spaces import Event, ProductSpace, all_events, preimage

__all__ = [
    "NaimarkDilation",
    "ProductDilationSplit",
    "dilate",
    "apply_pvm",
    "split_product",
    "RECONSTRUCTION_TOL",
]

RECONSTRUCTION_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class NaimarkDilation:
    """Isometry ``V`` into ``C^big_dim`` with one diagonal block per atom."""

    source: Povm
    big_dim: int
    V: np.ndarray
    blocks: tuple[tuple[int, int], ...]
    compressed: bool = False

    def block(self, label: str) -> tuple[int, int]:
        return self.blocks[self.source.space.index(label)]

    def projection(self, A: Event) -> np.ndarray:
        return apply_pvm(self, A)

    def mask(self, A: Event) -> np.ndarray:
        """0/1 diagonal of ``P(A)`` as a boolean vector."""
        if A.space != self.source.space:
            raise DomainError("event is not on the dilated POVM's space")
        m = np.zeros(self.big_dim, dtype=bool)
        for j in A.members:
            s, e = self.blocks[j]
            m[s:e] = True
        return m

    def compress(self, A: Event) -> np.ndarray:
        """``V* P(A) V``, computed from the block mask."""
        Vm = self.V[self.mask(A)]
        return Vm.conj().T @ Vm

    def isometry_residual(self) -> float:
        return max_abs(self.V.conj().T @ self.V - np.eye(self.source.dim))

    def reconstruction_residual(self, events=None) -> float:
        """Max over ``events`` of ``|V* P(A) V - Q(A)|_max``; all events by default."""
        if events is None:
            events = all_events(self.source.space)
        return max((max_abs(self.compress(A) - evaluate(self.source, A)) for A in events), default=0.0)

    def pvm(self) -> Pvm:
        """The dilating projection-valued measure on ``C^big_dim``."""
        sp = self.source.space
        return Pvm(sp, self.big_dim, [apply_pvm(self, sp.atom(j)) for j in range(len(sp))])

    def to_json(self) -> dict:
        from .linalg import matrix_to_json

        return {
            "big_dim": self.big_dim,
            "V": matrix_to_json(self.V),
            "blocks": {a: list(b) for a, b in zip(self.source.space.atoms, self.blocks)},
        }


def dilate(Q: Povm, compress: bool = False, tol: Tolerance = DEFAULT_TOL) -> NaimarkDilation:
    """Naimark dilation of a valid POVM.

    Raises
    ------
    DomainError
        If ``Q`` fails :func:`~ncpoly.povm.validate_povm`.
    """
    report = validate_povm(Q, tol)
    if not report.ok:
        raise DomainError(f"cannot dilate an invalid POVM (failed: {', '.join(report.failures)})")
    pieces = [psd_factor(E, tol) if compress else psd_sqrt(E, tol) for E in Q.effects]
    blocks, start = [], 0
    for W in pieces:
        blocks.append((start, start + W.shape[0]))
        start += W.shape[0]
    V = np.vstack(pieces) if start else np.zeros((0, Q.dim), dtype=np.complex128)
    V.setflags(write=False)
    return NaimarkDilation(Q, start, V, tuple(blocks), compressed=compress)


def apply_pvm(dil: NaimarkDilation, A: Event) -> np.ndarray:
    """The block projection ``P(A)`` on ``C^big_dim``."""
    return np.diag(dil.mask(A).astype(np.complex128))


@dataclass(frozen=True, eq=False)
class ProductDilationSplit:
    """Commuting coordinate PVMs ``P1(A) = P(A x X2)``, ``P2(B) = P(X1 x B)``."""

    dilation: NaimarkDilation
    rectangle_residual: float
    commutator_residual: float
    rectangles_checked: int

    @property
    def space(self) -> ProductSpace:
        return self.dilation.source.space

    def P1(self, A: Event) -> np.ndarray:
        return apply_pvm(self.dilation, preimage(self.space, 1, A))

    def P2(self, B: Event) -> np.ndarray:
        return apply_pvm(self.dilation, preimage(self.space, 2, B))

    def mask(self, coordinate: int, A: Event) -> np.ndarray:
        return self.dilation.mask(preimage(self.space, coordinate, A))


def _rectangle_pairs(space: ProductSpace, max_pairs: int, rng):
    n1, n2 = space.shape
    if (1 << (n1 + n2)) <= max_pairs:
        return list(itertools.product(all_events(space.left), all_events(space.right)))
    rng = np.random.default_rng(0) if rng is None else rng
    return [
        (
            Event(space.left, np.flatnonzero(rng.random(n1) < 0.5)),
            Event(space.right, np.flatnonzero(rng.random(n2) < 0.5)),
        )
        for _ in range(max_pairs)
    ]


def split_product(
    dil: NaimarkDilation,
    tol: Tolerance = DEFAULT_TOL,
    max_pairs: int = 4096,
    rng: np.random.Generator | None = None,
) -> ProductDilationSplit:
    """Split a product-space dilation into its two commuting coordinate PVMs.

    Verifies ``Q(A x B) = V* P1(A) P2(B) V`` and ``[P1(A), P2(B)] = 0`` on every
    rectangle (or ``max_pairs`` sampled rectangles when the sweep is too large).
    """
    space = dil.source.space
    if not isinstance(space, ProductSpace):
        raise DomainError("split_product needs a dilation over a product space")
    V = dil.V
    rect_worst = comm_worst = 0.0
    pairs = _rectangle_pairs(space, max_pairs, rng)
    for A, B in pairs:
        P1 = apply_pvm(dil, preimage(space, 1, A))
        P2 = apply_pvm(dil, preimage(space, 2, B))
        lhs = V.conj().T @ P1 @ P2 @ V
        rect_worst = max(rect_worst, max_abs(lhs - evaluate(dil.source, space.rectangle(A, B))))
        comm_worst = max(comm_worst, max_abs(P1 @ P2 - P2 @ P1))
    if rect_worst > RECONSTRUCTION_TOL or comm_worst > tol.abs:
        raise TheoremViolationError(
            "rectangle factorization failed",
            {"rectangle": rect_worst, "commutator": comm_worst},
        )
    return ProductDilationSplit(dil, rect_worst, comm_worst, len(pairs))
