"""Small end-to-end fixtures that print each verified identity with its residual.

Each demo returns a report ``{"demo", "checks", "notes", "pass"}`` where a
check is ``{"identity", "residual", "tolerance", "pass"}``.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import classical, dilation, povm, qpoly, states
from .generators import random_povm
from .linalg import max_abs
from .spaces import FiniteSpace, all_events, product

__all__ = ["DEMOS", "run_demo"]


class _Report:
    def __init__(self, name: str):
        self.name = name
        self.checks: list[dict] = []
        self.notes: list[str] = []

    def check(self, identity: str, residual: float, tolerance: float):
        residual = float(residual)
        self.checks.append(
            {"identity": identity, "residual": residual, "tolerance": tolerance, "pass": residual <= tolerance}
        )

    def note(self, text: str):
        self.notes.append(text)

    def to_json(self) -> dict:
        return {
            "demo": self.name,
            "checks": self.checks,
            "notes": self.notes,
            "pass": all(c["pass"] for c in self.checks),
        }


def _fmt(A) -> str:
    return "{" + ",".join(A.labels) + "}"


def trine_povm() -> povm.Povm:
    """Three symmetric qubit effects ``(2/3)|psi_k><psi_k|`` at 120 degrees."""
    sp = FiniteSpace(["t0", "t1", "t2"])
    effects = []
    for k in range(3):
        psi = np.array([np.cos(2 * np.pi * k / 3), np.sin(2 * np.pi * k / 3)])
        effects.append(2 / 3 * np.outer(psi, psi))
    return povm.Povm(sp, 2, effects)


def demo_classical_bayes() -> dict:
    rep = _Report("classical-bayes")
    x1, x2 = FiniteSpace(["rain", "dry"]), FiniteSpace(["umbrella", "coat", "none"])
    nu = classical.JointMeasure.from_table(x1, x2, [[0.20, 0.08, 0.02], [0.05, 0.15, 0.50]])
    mu1, mu2 = classical.marginals(nu)
    rep.note(f"mu1 = {dict(zip(x1.atoms, mu1.weights.round(6).tolist()))}")
    rep.note(f"mu2 = {dict(zip(x2.atoms, mu2.weights.round(6).tolist()))}")
    t = nu.table
    for a, b in itertools.product(range(len(x1)), range(len(x2))):
        cond = classical.conditional(nu, 1, a).weights[b]
        rep.check(
            f"nu({x1.atoms[a]},{x2.atoms[b]}) = mu1({x1.atoms[a]}) nu({x2.atoms[b]}|{x1.atoms[a]})",
            abs(t[a, b] - mu1.weights[a] * cond),
            1e-12,
        )
    sweep = classical.disintegration_check(nu)
    rep.check(
        f"nu(A x B) = sum_a mu1(a) nu(B|a) over all {sweep.rectangles_checked} rectangles",
        sweep.max_violation_left,
        1e-12,
    )
    rep.check("nu(A x B) = sum_b mu2(b) nu(A|b) over all rectangles", sweep.max_violation_right, 1e-12)
    return rep.to_json()


def demo_naimark() -> dict:
    rep = _Report("naimark")
    Q = trine_povm()
    D = dilation.dilate(Q)
    rep.note(f"trine POVM on C^2 with {len(Q.space)} outcomes dilates to C^{D.big_dim}")
    rep.check("V* V = I", D.isometry_residual(), 1e-9)
    for A in all_events(Q.space):
        rep.check(f"V* P({_fmt(A)}) V = Q({_fmt(A)})", max_abs(D.compress(A) - povm.evaluate(Q, A)), 1e-8)
    Dc = dilation.dilate(Q, compress=True)
    rep.note(f"compressed dilation uses rank(E_j) blocks: big_dim = {Dc.big_dim}")
    rep.check("compressed dilation reconstructs every event", Dc.reconstruction_residual(), 1e-8)
    return rep.to_json()


def demo_disintegration() -> dict:
    rep = _Report("disintegration")
    sp = product(FiniteSpace(["x0", "x1"]), FiniteSpace(["y0", "y1", "y2"]))
    Q = random_povm(sp, 2, np.random.default_rng(7))
    qp = qpoly.make_qpoly(Q)
    rep.note(f"random product-space POVM on {len(sp.left)} x {len(sp.right)} atoms, dim {Q.dim}")
    rep.check("Q(A x B) = V* P1(A) P2(B) V on all rectangles", qp.split.rectangle_residual, 1e-8)
    for B in all_events(sp.right):
        r = qpoly.disintegrate(qp, B)
        spec = ", ".join(f"{x:.4f}" for x in r.gamma_spectrum)
        rep.note(f"B = {_fmt(B)}: spectrum of dQ(. x B)/dQ1 = [{spec}]")
        rep.check(f"dQ(. x {_fmt(B)})/dQ1 = compressed P2({_fmt(B)})", r.residuals["projection_match"], 1e-7)
        rep.check(f"Q(. x {_fmt(B)}) <= Q1 (margin >= -1e-9)", max(0.0, -r.residuals["domination_margin"]), 1e-9)
    for A in all_events(sp.left):
        r = qpoly.disintegrate_left(qp, A)
        rep.check(f"dQ({_fmt(A)} x .)/dQ2 = compressed P1({_fmt(A)})", r.residuals["projection_match"], 1e-7)
    return rep.to_json()


def demo_tensor() -> dict:
    rep = _Report("tensor")
    Q1 = trine_povm()
    Q2 = random_povm(FiniteSpace(["u", "v"]), 2, np.random.default_rng(3))
    rep.note("Q = Q1 (x) Q2 for the trine POVM and a random two-outcome qubit POVM")
    for A, B in [(Q1.space.event(["t0"]), Q2.space.event(["u"])), (Q1.space.event(["t0", "t2"]), Q2.space.full)]:
        r = qpoly.tensor_rn_check(Q1, Q2, A, B, rng=np.random.default_rng(0))
        rep.check(f"Q({_fmt(A)} x {_fmt(B)}) = V* P1(A) P2(B) V with V = V1 (x) V2", r.residuals["rectangle"], 1e-8)
        rep.check(f"dQ(. x {_fmt(B)})/dQ1 = compressed I (x) P2({_fmt(B)})", r.residuals["right_derivative"], 1e-7)
        rep.check(f"dQ({_fmt(A)} x .)/dQ2 = compressed P1({_fmt(A)}) (x) I", r.residuals["left_derivative"], 1e-7)
    return rep.to_json()


def demo_link_kernels() -> dict:
    rep = _Report("link-kernels")
    pts = np.array([0.0, 0.5, 1.3, 2.0])
    labels = tuple(f"x{i}" for i in range(len(pts)))
    c1 = states.ScalarKernel(labels, np.exp(-((pts[:, None] - pts[None, :]) ** 2)))
    c2 = states.ScalarKernel(labels, np.outer(pts, pts) + 1.0)
    K, rho1, rho2 = states.link_kernels(c1, c2, dim=2)
    rep.note("c1 is a Gaussian kernel, c2 = 1 + x y; both on four points")
    rep.check("K = c1 rho1 + c2 rho2 is positive definite (min eigenvalue >= -tol)",
              max(0.0, -np.linalg.eigvalsh(K.gram())[0]), 1e-12)
    rep.check("trace(rho1 K) = c1", max_abs(states.slice_kernel(K, rho1).values - c1.values), 1e-12)
    rep.check("trace(rho2 K) = c2", max_abs(states.slice_kernel(K, rho2).values - c2.values), 1e-12)
    return rep.to_json()


def demo_entangled_marginals() -> dict:
    rep = _Report("entangled-marginals")
    bell = states.DensityOperator.pure(np.array([1, 0, 0, 1]) / np.sqrt(2), split=(2, 2))
    half = states.DensityOperator.maximally_mixed(2)
    r1, r2 = states.partial_traces(bell)
    rep.note("Bell state (|00> + |11>)/sqrt(2)")
    rep.check("Tr_2 |Bell><Bell| = I/2", max_abs(r1.matrix - half.matrix), 1e-12)
    rep.check("Tr_1 |Bell><Bell| = I/2", max_abs(r2.matrix - half.matrix), 1e-12)
    prod = states.product_state(half, half)
    p1, p2 = states.partial_traces(prod)
    rep.check("Tr_2 (I/2 (x) I/2) = I/2", max_abs(p1.matrix - half.matrix), 1e-12)
    rep.check("Tr_1 (I/2 (x) I/2) = I/2", max_abs(p2.matrix - half.matrix), 1e-12)
    rep.check("Bell state and product state differ", 0.0 if max_abs(bell.matrix - prod.matrix) > 0.1 else 1.0, 0.0)
    both = states.in_poly(bell, half, half) and states.in_poly(prod, half, half)
    rep.note(f"both states lie in poly(I/2, I/2): {both}")
    rep.check("Bell and product states both in poly(I/2, I/2)", 0.0 if both else 1.0, 0.0)
    return rep.to_json()


DEMOS = {
    "classical-bayes": demo_classical_bayes,
    "naimark": demo_naimark,
    "disintegration": demo_disintegration,
    "tensor": demo_tensor,
    "link-kernels": demo_link_kernels,
    "entangled-marginals": demo_entangled_marginals,
}


def run_demo(name: str) -> dict:
    try:
        fn = DEMOS[name]
    except KeyError:
        raise KeyError(f"unknown demo {name!r}; available: {', '.join(DEMOS)}") from None
    return fn()
