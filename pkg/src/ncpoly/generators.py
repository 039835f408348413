"""Seeded random instances for tests, demos and the property suite.

POVM effects are drawn as ``A_j* A_j`` with complex Gaussian ``A_j`` of random
rank, then conjugated by ``S^{-1/2}`` where ``S = sum_j A_j* A_j``. This hits
the whole effect simplex (including rank-deficient effects) without
rejection sampling.
"""

from __future__ import annotations

import numpy as np

from .classical import FiniteMeasure, JointMeasure
from .opkernels import OperatorKernel
from .povm import Povm, Pvm, VectorField
from .spaces import Event, FiniteSpace, ProductSpace, product
from .states import DensityOperator, ScalarKernel


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_space(n: int, prefix: str = "s") -> FiniteSpace:
    return FiniteSpace(f"{prefix}{i}" for i in range(n))


def random_product_space(n1: int, n2: int) -> ProductSpace:
    return product(random_space(n1, "a"), random_space(n2, "b"))


def random_event(space: FiniteSpace, rng: np.random.Generator) -> Event:
    return Event(space, np.flatnonzero(rng.random(len(space)) < 0.5))


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR with phase correction."""
    Z = complex_gaussian(rng, (d, d))
    Qm, R = np.linalg.qr(Z)
    phases = np.diag(R) / np.abs(np.diag(R))
    return Qm * phases


def _inv_sqrt(S):
    w, U = np.linalg.eigh((S + S.conj().T) / 2)
    return (U / np.sqrt(w)) @ U.conj().T


def random_povm(space: FiniteSpace, dim: int, rng: np.random.Generator, full_rank: bool = False) -> Povm:
    ranks = [dim if full_rank else int(rng.integers(1, dim + 1)) for _ in space.atoms]
    # the effects must jointly span C^dim before normalization
    while sum(ranks) < dim:
        j = int(rng.integers(len(ranks)))
        ranks[j] = min(dim, ranks[j] + 1)
    A = [complex_gaussian(rng, (k, dim)) for k in ranks]
    E = [a.conj().T @ a for a in A]
    S_inv_half = _inv_sqrt(sum(E))
    effects = [S_inv_half @ e @ S_inv_half for e in E]
    return Povm(space, dim, [(e + e.conj().T) / 2 for e in effects])


def random_pvm(space: FiniteSpace, dim: int, rng: np.random.Generator) -> Pvm:
    """Rotated diagonal PVM: basis vectors are dealt to atoms at random."""
    U = random_unitary(dim, rng)
    owner = rng.integers(0, len(space), size=dim)
    effects = []
    for j in range(len(space)):
        cols = U[:, owner == j]
        effects.append(cols @ cols.conj().T)
    return Pvm(space, dim, effects)


def random_joint(n1: int, n2: int, rng: np.random.Generator, zero_rows: bool = False) -> JointMeasure:
    """Random probability table; with ``zero_rows`` some rows and columns are emptied."""
    t = rng.random((n1, n2))
    if zero_rows:
        if n1 > 1:
            t[rng.integers(n1)] = 0.0
        if n2 > 1:
            t[:, rng.integers(n2)] = 0.0
        if t.sum() == 0:
            t[0, 0] = 1.0
    t /= t.sum()
    sp = random_product_space(n1, n2)
    return JointMeasure(sp, t.reshape(-1))


def random_measure(space: FiniteSpace, rng: np.random.Generator) -> FiniteMeasure:
    return FiniteMeasure(space, rng.random(len(space)))


def random_vector_field(space: FiniteSpace, dim: int, rng: np.random.Generator) -> VectorField:
    return VectorField(space, complex_gaussian(rng, (len(space), dim)))


def random_gram_kernel(n: int, dim: int, rng: np.random.Generator, rank: int | None = None):
    """Kernel ``V_s* V_t`` from random factors; also returns the factor ``W`` (``rank x n*dim``)."""
    r = int(rng.integers(1, n * dim + 1)) if rank is None else rank
    W = complex_gaussian(rng, (r, n * dim))
    labels = tuple(f"s{i}" for i in range(n))
    return OperatorKernel.from_gram(labels, dim, W.conj().T @ W), W


def random_contraction(r: int, rng: np.random.Generator) -> np.ndarray:
    """Hermitian ``Gamma`` with spectrum uniform in ``[0, 1]``."""
    U = random_unitary(r, rng) if r else np.zeros((0, 0), dtype=np.complex128)
    return (U * rng.random(r)) @ U.conj().T


def random_density(d: int, rng: np.random.Generator, rank: int | None = None, split=None) -> DensityOperator:
    k = int(rng.integers(1, d + 1)) if rank is None else rank
    A = complex_gaussian(rng, (d, k))
    rho = A @ A.conj().T
    rho /= np.trace(rho).real
    return DensityOperator((rho + rho.conj().T) / 2, split)


def random_pd_scalar_kernel(n: int, rng: np.random.Generator, rank: int | None = None) -> ScalarKernel:
    k = int(rng.integers(1, n + 1)) if rank is None else rank
    F = complex_gaussian(rng, (k, n))
    G = F.conj().T @ F
    return ScalarKernel(tuple(f"s{i}" for i in range(n)), (G + G.conj().T) / 2)
