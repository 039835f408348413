"""Density operators, partial-trace marginals, and scalar/operator kernel links.

Membership in ``poly(s1, s2)`` is decided by partial traces: a bipartite state
belongs when its two reduced states are ``s1`` and ``s2``. This is the
quantum counterpart of a coupling with prescribed marginals. It is one
possible reading among several, and channel-based couplings are not modeled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classical import JointMeasure
from .errors import AxiomViolation, DimensionError, DomainError, NotPSDError
from .linalg import DEFAULT_TOL, Tolerance, as_matrix, is_psd, max_abs, min_eigenvalue, partial_trace
from .opkernels import OperatorKernel

__all__ = [
    "DensityOperator",
    "ScalarKernel",
    "partial_traces",
    "in_poly",
    "classical_embed",
    "link_kernels",
    "slice_kernel",
    "product_state",
]


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """PSD, unit-trace matrix, optionally split as ``C^d1 (x) C^d2``."""

    matrix: np.ndarray
    split: tuple[int, int] | None = None
    tol: Tolerance = DEFAULT_TOL

    def __post_init__(self):
        M = as_matrix(self.matrix, "density matrix")
        if M.shape[0] != M.shape[1]:
            raise DimensionError("a density matrix must be square")
        if not is_psd(M, self.tol):
            raise NotPSDError("density matrix is not positive semidefinite", min_eigenvalue(M))
        tr = np.trace(M)
        if abs(tr - 1.0) > self.tol.abs * max(1, M.shape[0]):
            raise AxiomViolation(f"density matrix has trace {tr.real:.12g}, not 1")
        if self.split is not None:
            d1, d2 = (int(x) for x in self.split)
            if d1 < 1 or d2 < 1 or d1 * d2 != M.shape[0]:
                raise DimensionError(f"split {self.split} does not factor dimension {M.shape[0]}")
            object.__setattr__(self, "split", (d1, d2))
        M = M.copy()
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, psi, split=None) -> "DensityOperator":
        psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), split)

    @classmethod
    def maximally_mixed(cls, d: int, split=None) -> "DensityOperator":
        return cls(np.eye(d) / d, split)


def product_state(s1: DensityOperator, s2: DensityOperator) -> DensityOperator:
    return DensityOperator(np.kron(s1.matrix, s2.matrix), (s1.dim, s2.dim))


def partial_traces(rho: DensityOperator) -> tuple[DensityOperator, DensityOperator]:
    """Reduced states on the first and second tensor factor."""
    if rho.split is None:
        raise DomainError("partial traces need a density operator with a d1 x d2 split")
    d1, d2 = rho.split
    return (
        DensityOperator(partial_trace(rho.matrix, d1, d2, "second"), tol=rho.tol),
        DensityOperator(partial_trace(rho.matrix, d1, d2, "first"), tol=rho.tol),
    )


def in_poly(rho: DensityOperator, s1: DensityOperator, s2: DensityOperator, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True when the reduced states of ``rho`` equal ``(s1, s2)`` entry-wise within ``tol.abs``."""
    if rho.split is None:
        rho = DensityOperator(rho.matrix, (s1.dim, s2.dim), rho.tol)
    if rho.split != (s1.dim, s2.dim):
        raise DimensionError(f"rho is split as {rho.split} but the marginals have dimensions {(s1.dim, s2.dim)}")
    r1, r2 = partial_traces(rho)
    return max_abs(r1.matrix - s1.matrix) <= tol.abs and max_abs(r2.matrix - s2.matrix) <= tol.abs


def classical_embed(nu: JointMeasure, normalize: bool = False, tol: Tolerance = DEFAULT_TOL) -> DensityOperator:
    """Diagonal state on ``C^|X1| (x) C^|X2|`` carrying the joint weights."""
    total = nu.total
    if total <= 0:
        raise DomainError("cannot embed a joint measure of zero total mass")
    w = nu.weights / total if normalize else nu.weights
    if not normalize and abs(total - 1.0) > tol.abs:
        raise DomainError(f"joint measure has total mass {total:.12g}; pass normalize=True")
    return DensityOperator(np.diag(w.astype(np.complex128)), nu.space.shape, tol)


@dataclass(frozen=True, eq=False)
class ScalarKernel:
    """Hermitian ``n x n`` complex kernel on labeled indices."""

    labels: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        v = as_matrix(self.values, "kernel values")
        if v.shape != (len(labels), len(labels)):
            raise DimensionError(f"kernel on {len(labels)} indices needs a square grid, got {v.shape}")
        if max_abs(v - v.conj().T) > 1e-9 * max(1.0, max_abs(v)):
            raise AxiomViolation("scalar kernel is not Hermitian")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "values", v)

    def is_pd(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return is_psd(self.values, tol)


def link_kernels(
    c1: ScalarKernel, c2: ScalarKernel, dim: int = 2, tol: Tolerance = DEFAULT_TOL
) -> tuple[OperatorKernel, DensityOperator, DensityOperator]:
    """Operator kernel ``K = c1 rho1 + c2 rho2`` whose slices by ``rho1``, ``rho2`` are ``c1``, ``c2``.

    ``rho1`` and ``rho2`` project onto the first two standard basis vectors.
    """
    if c1.labels != c2.labels:
        raise DomainError("c1 and c2 must share an index set")
    if dim < 2:
        raise DomainError("linking needs dim >= 2 to fit two orthogonal unit vectors")
    for name, c in (("c1", c1), ("c2", c2)):
        if not c.is_pd(tol):
            raise DomainError(f"{name} is not positive definite")
    a = np.zeros(dim)
    a[0] = 1.0
    b = np.zeros(dim)
    b[1] = 1.0
    rho1 = DensityOperator(np.outer(a, a))
    rho2 = DensityOperator(np.outer(b, b))
    blocks = (
        c1.values[:, :, None, None] * rho1.matrix[None, None]
        + c2.values[:, :, None, None] * rho2.matrix[None, None]
    )
    return OperatorKernel(c1.labels, dim, blocks), rho1, rho2


def slice_kernel(K: OperatorKernel, rho: DensityOperator) -> ScalarKernel:
    """``c(s, t) = trace(rho K(s, t))``."""
    if rho.dim != K.dim:
        raise DimensionError(f"state of dimension {rho.dim} cannot slice a kernel of dimension {K.dim}")
    values = np.einsum("pq,stqp->st", rho.matrix, K.blocks)
    return ScalarKernel(K.labels, values)
