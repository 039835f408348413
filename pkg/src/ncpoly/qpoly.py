"""Quantum polymorphisms: a product-space POVM with its two marginal POVMs.

The disintegration routines build the two event-indexed kernels

    L(A1, A2) = Q((A1 n A2) x B),        K(A1, A2) = Q1(A1 n A2)

over the events of the left factor, solve ``Gamma = dL/dK`` numerically, and
compare it with the coordinate projection ``P2(B)`` of the Naimark dilation,
compressed to the factor space of ``K``. The two routes share no code beyond
the dilation itself, so agreement is a genuine check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError, TheoremViolationError
from .dilation import (
    NaimarkDilation,
    ProductDilationSplit,
    RECONSTRUCTION_TOL,
    apply_pvm,
    dilate,
    split_product,
)
from .linalg import DEFAULT_TOL, Tolerance, max_abs, min_eigenvalue, pinv
from .opkernels import (
    MAX_EVENT_ATOMS,
    RN_TOL,
    KernelFactorization,
    OperatorKernel,
    compression_map,
    event_kernel,
    factor,
    leq,
    povm_kernel,
    rn_derivative,
)
from .povm import Povm, Pvm, evaluate, marginal_povm, validate_povm
from .spaces import Event, ProductSpace, all_events, event_family, preimage, product

__all__ = [
    "QuantumPolymorphism",
    "DisintegrationResult",
    "TensorReport",
    "ContractionReport",
    "make_qpoly",
    "disintegrate",
    "disintegrate_left",
    "tensor_povm",
    "tensor_rn_check",
    "rkhs_pullback_contraction",
    "swap_povm",
    "FAMILY_EXHAUSTIVE_ATOMS",
]

FAMILY_EXHAUSTIVE_ATOMS = 6


@dataclass(frozen=True, eq=False)
class QuantumPolymorphism:
    """``Q1 <- Q -> Q2`` with ``Qi = Q o pi_i^{-1}``."""

    Q: Povm
    Q1: Povm
    Q2: Povm
    tol: Tolerance = field(default=DEFAULT_TOL, repr=False)

    @property
    def space(self) -> ProductSpace:
        return self.Q.space

    @cached_property
    def dilation(self) -> NaimarkDilation:
        return dilate(self.Q, compress=False, tol=self.tol)

    @cached_property
    def split(self) -> ProductDilationSplit:
        return split_product(self.dilation, self.tol)

    def marginal(self, coordinate: int) -> Povm:
        return self.Q1 if coordinate == 1 else self.Q2


def make_qpoly(Q: Povm, tol: Tolerance = DEFAULT_TOL) -> QuantumPolymorphism:
    if not isinstance(Q.space, ProductSpace):
        raise DomainError("a quantum polymorphism needs a POVM on a product space")
    report = validate_povm(Q, tol)
    if not report.ok:
        raise DomainError(f"invalid POVM (failed: {', '.join(report.failures)})")
    return QuantumPolymorphism(Q, marginal_povm(Q, 1), marginal_povm(Q, 2), tol)


def swap_povm(Q: Povm) -> Povm:
    """Relabel ``X1 x X2`` as ``X2 x X1``; effects are unchanged."""
    sp = Q.space
    n1, n2 = sp.shape
    order = [sp.pair_index(a, b) for b in range(n2) for a in range(n1)]
    return type(Q)(sp.swapped(), Q.dim, Q.effects[order])


@dataclass(frozen=True, eq=False)
class DisintegrationResult:
    """Outcome of one disintegration ``dQ(. x B)/dQ1`` (or its mirror).

    Attributes
    ----------
    side : str
        ``"right"`` when conditioning on a right-factor event ``B``,
        ``"left"`` for the mirror identity.
    gamma : ndarray
        Solved Radon-Nikodym derivative on the factor space of ``K``.
    projection : ndarray
        The coordinate projection (``P2(B)`` or ``P1(A)``) on the dilation space.
    compression : ndarray
        Isometry ``U`` from the factor space into the dilation space.
    residuals : dict
        ``reconstruction`` (``G_L`` vs ``W* Gamma W``), ``projection_match``
        (``Gamma`` vs ``U* P U``), ``sections`` (``U W`` vs the dilation
        sections) and ``domination_margin`` (min eigenvalue of ``K - L``).
    """

    side: str
    event: Event
    family: tuple[Event, ...]
    L: OperatorKernel
    K: OperatorKernel
    factorization: KernelFactorization
    gamma: np.ndarray
    projection: np.ndarray
    compression: np.ndarray
    residuals: dict
    gamma_spectrum: np.ndarray

    @property
    def compressed_projection(self) -> np.ndarray:
        U = self.compression
        return U.conj().T @ self.projection @ U

    def atom_frame(self):
        """``Gamma`` in an orthonormal frame adapted to the conditioning atoms.

        For each atom ``a`` of the conditioning factor the frame contains an
        orthonormal basis of the range of ``V_{a}``. These ranges are mutually
        orthogonal and span the factor space, and ``Gamma`` is block diagonal
        in this frame. For one-dimensional POVMs the diagonal holds the
        classical conditional masses ``nu(B | a)``.

        Returns
        -------
        atoms : list of (atom index, slice)
        matrix : ndarray
        """
        fac = self.factorization
        index = {A.members: i for i, A in enumerate(self.family)}
        cols, atoms, start = [], [], 0
        n_atoms = len(self.family[0].space)
        for a in range(n_atoms):
            Va = fac.factor_at(index[(a,)])
            if Va.shape[0] == 0:
                continue
            U, s, _ = np.linalg.svd(Va, full_matrices=False)
            keep = s > 1e-12 * max(1.0, s.max(initial=0.0))
            if not keep.any():
                continue
            cols.append(U[:, keep])
            atoms.append((a, slice(start, start + int(keep.sum()))))
            start += int(keep.sum())
        F = np.hstack(cols) if cols else np.zeros((fac.rank, 0), dtype=np.complex128)
        return atoms, F.conj().T @ self.gamma @ F

    def to_json(self) -> dict:
        return {
            "check": "disintegration",
            "side": self.side,
            "event": self.event.labels,
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "gamma_spectrum": [float(x) for x in self.gamma_spectrum],
            "pass": bool(
                self.residuals["projection_match"] <= RN_TOL
                and self.residuals["domination_margin"] >= -DEFAULT_TOL.abs
            ),
        }


def _disintegrate(qp: QuantumPolymorphism, coordinate: int, event: Event, tol, rng):
    # coordinate = the factor carrying the fixed event; kernels are indexed by the other one
    sp = qp.space
    other = 1 if coordinate == 2 else 2
    fixed_space = sp.right if coordinate == 2 else sp.left
    index_space = sp.left if other == 1 else sp.right
    if event.space != fixed_space:
        raise DomainError("event is not on the expected factor")
    family = tuple(event_family(index_space, FAMILY_EXHAUSTIVE_ATOMS, 20, rng))

    def rect(i, E):
        return sp.rectangle(i, E) if other == 1 else sp.rectangle(E, i)

    # effects of {x} x B (or A x {y}) per index atom
    sliced = np.array([evaluate(qp.Q, rect(index_space.atom(x), event)) for x in range(len(index_space))])
    L = event_kernel(sliced, family)
    K = event_kernel(qp.marginal(other).effects, family)

    margin = min_eigenvalue(K.gram() - L.gram())
    dominated = leq(L, K, tol)
    fac = factor(K, tol)
    rn = rn_derivative(L, K, tol, factorization=fac)

    split = qp.split
    index_pvm = split.P1 if other == 1 else split.P2
    fixed_pvm = split.P2 if coordinate == 2 else split.P1
    V = split.dilation.V
    sections = np.hstack([index_pvm(A) @ V for A in family])
    U = compression_map(fac, sections)
    P = fixed_pvm(event)
    target = U.conj().T @ P @ U
    residuals = {
        "reconstruction": rn.residual,
        "projection_match": max_abs(rn.gamma - target),
        "sections": max_abs(U @ fac.W - sections),
        "isometry": max_abs(U.conj().T @ U - np.eye(fac.rank)),
        "domination_margin": margin,
    }
    if not dominated or residuals["projection_match"] > RN_TOL or residuals["sections"] > RN_TOL:
        raise TheoremViolationError("disintegration identity failed", residuals)
    return DisintegrationResult(
        side="right" if coordinate == 2 else "left",
        event=event,
        family=family,
        L=L,
        K=K,
        factorization=fac,
        gamma=rn.gamma,
        projection=P,
        compression=U,
        residuals=residuals,
        gamma_spectrum=rn.spectrum,
    )


def disintegrate(
    qp: QuantumPolymorphism,
    B: Event,
    tol: Tolerance = DEFAULT_TOL,
    rng: np.random.Generator | None = None,
) -> DisintegrationResult:
    """``dQ(. x B) / dQ1 = P2(B)`` for an event ``B`` of the right factor.

    Raises
    ------
    TheoremViolationError
        If domination fails or the solved derivative differs from the
        compressed ``P2(B)`` by more than ``RN_TOL``.
    """
    return _disintegrate(qp, 2, B, tol, rng)


def disintegrate_left(
    qp: QuantumPolymorphism,
    A: Event,
    tol: Tolerance = DEFAULT_TOL,
    rng: np.random.Generator | None = None,
) -> DisintegrationResult:
    """``dQ(A x .) / dQ2 = P1(A)`` for an event ``A`` of the left factor."""
    return _disintegrate(qp, 1, A, tol, rng)


def tensor_povm(Q1: Povm, Q2: Povm) -> Povm:
    """``(Q1 (x) Q2)({(a, b)}) = E1_a (x) E2_b`` on ``H1 (x) H2``."""
    cls = Pvm if isinstance(Q1, Pvm) and isinstance(Q2, Pvm) else Povm
    effects = [np.kron(E, F) for E in Q1.effects for F in Q2.effects]
    return cls(product(Q1.space, Q2.space), Q1.dim * Q2.dim, effects)


@dataclass
class TensorReport:
    residuals: dict
    gamma_spectra: dict
    rectangles_checked: int

    @property
    def passed(self) -> bool:
        r = self.residuals
        return (
            r["rectangle"] <= RECONSTRUCTION_TOL
            and r["rectangle_joint"] <= RECONSTRUCTION_TOL
            and r["right_derivative"] <= RN_TOL
            and r["left_derivative"] <= RN_TOL
        )

    def to_json(self) -> dict:
        return {
            "check": "tensor",
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "gamma_spectrum": {k: [float(x) for x in v] for k, v in self.gamma_spectra.items()},
            "pass": self.passed,
        }


def _tensor_side(Q1, Q2, D1, D2, Vt, coordinate, event, tol, rng):
    # coordinate = factor carrying the fixed event
    if coordinate == 2:
        fixed_value = evaluate(Q2, event)
        family = event_family(Q1.space, FAMILY_EXHAUSTIVE_ATOMS, 20, rng)
        sliced = np.array([np.kron(E, fixed_value) for E in Q1.effects])
        whole = np.array([np.kron(E, np.eye(Q2.dim)) for E in Q1.effects])
        I_other = np.eye(D2.big_dim)
        sections = np.hstack([np.kron(apply_pvm(D1, A), I_other) @ Vt for A in family])
        P = np.kron(np.eye(D1.big_dim), apply_pvm(D2, event))
    else:
        fixed_value = evaluate(Q1, event)
        family = event_family(Q2.space, FAMILY_EXHAUSTIVE_ATOMS, 20, rng)
        sliced = np.array([np.kron(fixed_value, F) for F in Q2.effects])
        whole = np.array([np.kron(np.eye(Q1.dim), F) for F in Q2.effects])
        I_other = np.eye(D1.big_dim)
        sections = np.hstack([np.kron(I_other, apply_pvm(D2, B)) @ Vt for B in family])
        P = np.kron(apply_pvm(D1, event), np.eye(D2.big_dim))
    L = event_kernel(sliced, family)
    K = event_kernel(whole, family)
    fac = factor(K, tol)
    rn = rn_derivative(L, K, tol, factorization=fac)
    U = compression_map(fac, sections)
    target = U.conj().T @ P @ U
    return max_abs(rn.gamma - target), rn, max_abs(U @ fac.W - sections)


def tensor_rn_check(
    Q1: Povm,
    Q2: Povm,
    A: Event,
    B: Event,
    tol: Tolerance = DEFAULT_TOL,
    rng: np.random.Generator | None = None,
    max_rectangles: int = 4096,
) -> TensorReport:
    """Verify the tensor-product identities for ``Q1 (x) Q2``.

    * ``rectangle``: every rectangle value equals ``(V1 (x) V2)* (P1(A) (x) P2(B)) (V1 (x) V2)``
      built from separate dilations of the factors.
    * ``rectangle_joint``: the same rectangles through an independent dilation of
      the tensor POVM itself and its coordinate split.
    * ``right_derivative``: ``d(Q1 (x) Q2)(. x B) / d(Q1 (x) Q2)(. x X2)`` matches ``I (x) P2(B)``.
    * ``left_derivative``: the mirror identity with ``P1(A) (x) I``.
    """
    for Q, name in ((Q1, "Q1"), (Q2, "Q2")):
        if not validate_povm(Q, tol).ok:
            raise DomainError(f"{name} is not a valid POVM")
    if A.space != Q1.space or B.space != Q2.space:
        raise DomainError("A must be an event of Q1's space and B of Q2's space")
    T = tensor_povm(Q1, Q2)
    D1, D2 = dilate(Q1, tol=tol), dilate(Q2, tol=tol)
    Vt = np.kron(D1.V, D2.V)

    n1, n2 = len(Q1.space), len(Q2.space)
    if (1 << (n1 + n2)) <= max_rectangles:
        rects = list(itertools.product(all_events(Q1.space), all_events(Q2.space)))
    else:
        g = np.random.default_rng(0) if rng is None else rng
        rects = [
            (Event(Q1.space, np.flatnonzero(g.random(n1) < 0.5)), Event(Q2.space, np.flatnonzero(g.random(n2) < 0.5)))
            for _ in range(max_rectangles)
        ]
    rect_res = 0.0
    for A_, B_ in rects:
        lhs = evaluate(T, T.space.rectangle(A_, B_))
        rhs = Vt.conj().T @ np.kron(apply_pvm(D1, A_), apply_pvm(D2, B_)) @ Vt
        rect_res = max(rect_res, max_abs(lhs - rhs))
    joint = split_product(dilate(T, tol=tol), tol, max_pairs=max_rectangles, rng=rng)

    right, rn7, s7 = _tensor_side(Q1, Q2, D1, D2, Vt, 2, B, tol, rng)
    left, rn8, s8 = _tensor_side(Q1, Q2, D1, D2, Vt, 1, A, tol, rng)
    return TensorReport(
        residuals={
            "rectangle": rect_res,
            "rectangle_joint": joint.rectangle_residual,
            "right_derivative": right,
            "left_derivative": left,
            "right_reconstruction": rn7.residual,
            "left_reconstruction": rn8.residual,
            "right_sections": s7,
            "left_sections": s8,
        },
        gamma_spectra={"right": rn7.spectrum, "left": rn8.spectrum},
        rectangles_checked=len(rects),
    )


@dataclass
class ContractionReport:
    coordinate: int
    samples: int
    violations: int
    worst_excess: float
    max_range_residual: float
    max_norm_mismatch: float
    compatibility_residual: float
    norms: list = field(default_factory=list, repr=False)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_json(self) -> dict:
        return {
            "check": "pullback_contraction",
            "coordinate": self.coordinate,
            "residuals": {
                "worst_excess": self.worst_excess,
                "range": self.max_range_residual,
                "source_norm_mismatch": self.max_norm_mismatch,
                "compatibility": self.compatibility_residual,
            },
            "samples": self.samples,
            "violations": self.violations,
            "pass": self.passed,
        }


def rkhs_pullback_contraction(
    Q: Povm,
    coordinate: int,
    samples: int = 50,
    tol: Tolerance = DEFAULT_TOL,
    rng: np.random.Generator | None = None,
    max_terms: int = 4,
) -> ContractionReport:
    """Check that pulling RKHS functions back along preimages does not increase norm.

    Elements of the RKHS of ``K(E, F) = Q(E n F)`` are sampled as finite sums
    ``f = sum_j K(., E_j) h_j``. The pullback ``g(A) = f(pi_i^{-1} A)`` is a
    function on the factor's events; its norm in the RKHS of
    ``K_i(A, B) = K(pi_i^{-1} A, pi_i^{-1} B)`` is computed through the
    pseudo-inverse of that kernel's block Gram matrix. The first two samples
    are ``f = 0`` and a single kernel section at a pulled-back event, where
    the two norms coincide.
    """
    sp = Q.space
    if not isinstance(sp, ProductSpace):
        raise DomainError("the contraction check needs a POVM on a product space")
    if coordinate not in (1, 2):
        raise DomainError(f"coordinate must be 1 or 2, got {coordinate!r}")
    rng = np.random.default_rng(0) if rng is None else rng
    fac_space = sp.left if coordinate == 1 else sp.right
    fac_events = event_family(fac_space, FAMILY_EXHAUSTIVE_ATOMS, 20, rng)
    pulled = [preimage(sp, coordinate, A) for A in fac_events]
    src_events = event_family(sp, MAX_EVENT_ATOMS, 20, rng, extra=pulled)
    d = Q.dim

    K_src = event_kernel(Q.effects, src_events)
    K_i = event_kernel(Q.effects, pulled)
    G_src, G_i = K_src.gram(), K_i.gram()
    Gi_pinv = pinv(G_i, tol)
    Gs_pinv = pinv(G_src, tol)
    compat = max_abs(G_i - povm_kernel(marginal_povm(Q, coordinate), fac_events).gram())

    X_src = np.array([E.indicator() for E in src_events])
    X_pull = np.array([E.indicator() for E in pulled])
    pulled_index = {E.members: i for i, E in enumerate(src_events)}

    violations, worst, worst_range, worst_mismatch = 0, 0.0, 0.0, 0.0
    norms = []
    for k in range(samples):
        if k == 0:
            idx, H = [0], np.zeros((1, d), dtype=np.complex128)
        elif k == 1:
            E = pulled[int(rng.integers(len(pulled)))]
            idx = [pulled_index[E.members]]
            H = rng.standard_normal((1, d)) + 1j * rng.standard_normal((1, d))
        else:
            m = int(rng.integers(1, min(max_terms, len(src_events)) + 1))
            idx = list(rng.choice(len(src_events), size=m, replace=False))
            H = rng.standard_normal((m, d)) + 1j * rng.standard_normal((m, d))
        coeff = np.zeros((len(src_events), d), dtype=np.complex128)
        for i, h in zip(idx, H):
            coeff[i] += h
        c = coeff.reshape(-1)
        norm_f = float(np.sqrt(max(np.real(c.conj() @ G_src @ c), 0.0)))

        # values f(E) = sum_j Q(E n E_j) h_j on the source family and on the pulled-back family
        f_src = (G_src @ c).reshape(-1)
        blocks = np.einsum("ia,ja,apq->ijpq", X_pull, X_src, Q.effects)
        g = np.einsum("ijpq,jq->ip", blocks, coeff).reshape(-1)

        norm_f_pinv = float(np.sqrt(max(np.real(f_src.conj() @ Gs_pinv @ f_src), 0.0)))
        norm_g = float(np.sqrt(max(np.real(g.conj() @ Gi_pinv @ g), 0.0)))
        range_res = max_abs(G_i @ (Gi_pinv @ g) - g)
        excess = norm_g - norm_f
        if excess > RN_TOL * max(1.0, norm_f):
            violations += 1
        worst = max(worst, excess)
        worst_range = max(worst_range, range_res)
        worst_mismatch = max(worst_mismatch, abs(norm_f_pinv - norm_f) / max(1.0, norm_f))
        norms.append((norm_g, norm_f))
    return ContractionReport(coordinate, samples, violations, worst, worst_range, worst_mismatch, compat, norms)
