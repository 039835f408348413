"""Acceptance criteria, one test per criterion, each at its stated tolerance and runtime budget."""

import json
import time

import numpy as np

from ncpoly.classical import FiniteMeasure, conditional, marginals
from ncpoly.dilation import dilate
from ncpoly.errors import OrderingViolationError
from ncpoly.generators import (
    random_contraction,
    random_event,
    random_gram_kernel,
    random_joint,
    random_pd_scalar_kernel,
    random_povm,
    random_product_space,
    random_space,
    random_vector_field,
)
from ncpoly.opkernels import OperatorKernel, compression_map, is_pd, leq, rn_derivative
from ncpoly.povm import classical_povm, covariance_operator
from ncpoly.qpoly import disintegrate, disintegrate_left, make_qpoly, tensor_rn_check
from ncpoly.spaces import all_events
from ncpoly.states import classical_embed, link_kernels, partial_traces, slice_kernel
from ncpoly.cli import main


def test_criterion_1_dilation(acceptance):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    recon = iso = 0.0
    for i in range(200):
        n, d = int(rng.integers(1, 6)), int(rng.integers(1, 5))
        D = dilate(random_povm(random_space(n), d, rng), compress=bool(i % 2))
        recon = max(recon, D.reconstruction_residual())
        iso = max(iso, D.isometry_residual())
    dt = time.perf_counter() - t0
    ok = recon <= 1e-8 and iso <= 1e-9 and dt <= 10
    assert acceptance(1, ok, f"200 POVMs, reconstruction {recon:.1e}, isometry {iso:.1e}, {dt:.1f}s"), (recon, iso, dt)


def test_criterion_2_rn_equivalence(acceptance):
    rng = np.random.default_rng(202)
    t0 = time.perf_counter()
    agree = planted = 0
    worst = 0.0
    trials = 240
    for i in range(trials):
        n, d = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        rank = None if rng.random() < 0.7 else int(rng.integers(1, n * d + 1))
        K, W0 = random_gram_kernel(n, d, rng, rank=rank)
        G0 = None
        if i % 2 == 0:
            G0 = random_contraction(W0.shape[0], rng)
            L = OperatorKernel.from_gram(K.labels, d, W0.conj().T @ G0 @ W0)
        else:
            L, _ = random_gram_kernel(n, d, rng)
            L = L * float(rng.uniform(0.01, 1.0))
        try:
            rn = rn_derivative(L, K)
            solved = True
        except OrderingViolationError:
            solved = False
        agree += solved == leq(L, K)
        if G0 is not None and solved:
            planted += 1
            U = compression_map(rn.with_respect_to, W0)
            worst = max(worst, np.max(np.abs(rn.gamma - U.conj().T @ G0 @ U)))
    dt = time.perf_counter() - t0
    ok = agree == trials and planted == trials // 2 and worst <= 1e-7 and dt <= 20
    assert acceptance(
        2, ok, f"{agree}/{trials} agree, {planted} planted recovered, worst {worst:.1e}, {dt:.1f}s"
    ), (agree, planted, worst, dt)


def test_criterion_3_disintegration(acceptance):
    rng = np.random.default_rng(303)
    t0 = time.perf_counter()
    match, margin, events = 0.0, 0.0, 0
    for _ in range(100):
        n1, n2, d = (int(x) for x in rng.integers(1, 4, size=3))
        qp = make_qpoly(random_povm(random_product_space(n1, n2), d, rng))
        for B in all_events(qp.space.right):
            r = disintegrate(qp, B)
            match = max(match, r.residuals["projection_match"])
            margin = min(margin, r.residuals["domination_margin"])
            events += 1
        for A in all_events(qp.space.left):
            margin = min(margin, disintegrate_left(qp, A).residuals["domination_margin"])
    dt = time.perf_counter() - t0
    ok = match <= 1e-7 and margin >= -1e-9 and dt <= 60
    assert acceptance(
        3, ok, f"{events} right events, match {match:.1e}, domination margin {margin:.1e}, {dt:.1f}s"
    ), (match, margin, dt)


def test_criterion_4_tensor(acceptance):
    rng = np.random.default_rng(404)
    t0 = time.perf_counter()
    rect = deriv = 0.0
    for _ in range(50):
        Q1 = random_povm(random_space(int(rng.integers(2, 4)), "a"), int(rng.integers(1, 3)), rng)
        Q2 = random_povm(random_space(int(rng.integers(2, 4)), "b"), int(rng.integers(1, 3)), rng)
        rep = tensor_rn_check(Q1, Q2, random_event(Q1.space, rng), random_event(Q2.space, rng), rng=rng)
        rect = max(rect, rep.residuals["rectangle"], rep.residuals["rectangle_joint"])
        deriv = max(deriv, rep.residuals["right_derivative"], rep.residuals["left_derivative"])
    dt = time.perf_counter() - t0
    ok = rect <= 1e-8 and deriv <= 1e-7 and dt <= 30
    assert acceptance(4, ok, f"50 pairs, rectangle {rect:.1e}, derivatives {deriv:.1e}, {dt:.1f}s"), (rect, deriv, dt)


def test_criterion_5_classical_consistency(acceptance):
    rng = np.random.default_rng(505)
    cond_err = embed_err = 0.0
    for i in range(100):
        n1, n2 = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        nu = random_joint(n1, n2, rng, zero_rows=i % 3 == 0)
        qp = make_qpoly(classical_povm(nu))
        for side, events in ((2, all_events(nu.space.right)), (1, all_events(nu.space.left))):
            for E in events:
                res = disintegrate(qp, E) if side == 2 else disintegrate_left(qp, E)
                atoms, G = res.atom_frame()
                given = 1 if side == 2 else 2
                expected = [conditional(nu, given, a)(E) for a, _ in atoms]
                cond_err = max(cond_err, np.max(np.abs(np.diag(G) - expected), initial=0.0))
                cond_err = max(cond_err, np.max(np.abs(G - np.diag(np.diag(G))), initial=0.0))
        r1, r2 = partial_traces(classical_embed(nu))
        m1, m2 = marginals(nu)
        embed_err = max(embed_err, np.max(np.abs(r1.matrix - np.diag(m1.weights))),
                        np.max(np.abs(r2.matrix - np.diag(m2.weights))))
    ok = cond_err <= 1e-10 and embed_err <= 1e-12
    assert acceptance(5, ok, f"100 tables, conditionals {cond_err:.1e}, embed/trace {embed_err:.1e}"), (cond_err, embed_err)


def test_criterion_6_covariance_trace(acceptance):
    rng = np.random.default_rng(606)
    worst = 0.0
    for _ in range(100):
        sp = random_space(int(rng.integers(1, 8)))
        d = int(rng.integers(1, 5))
        F, G = random_vector_field(sp, d, rng), random_vector_field(sp, d, rng)
        mu = FiniteMeasure(sp, rng.random(len(sp)))
        C, tr = covariance_operator(F, G, mu)
        direct = sum(mu.weights[s] * np.vdot(F.vectors[s], G.vectors[s]) for s in range(len(sp)))
        scale = max(1.0, abs(direct))
        worst = max(worst, abs(np.trace(C) - direct) / scale, abs(tr - direct) / scale)
    ok = worst <= 1e-10
    assert acceptance(6, ok, f"100 triples, relative error {worst:.1e}"), worst


def test_criterion_7_link_kernels(acceptance):
    rng = np.random.default_rng(707)
    worst, all_pd = 0.0, True
    for _ in range(100):
        n = int(rng.integers(1, 7))
        c1, c2 = random_pd_scalar_kernel(n, rng), random_pd_scalar_kernel(n, rng)
        K, rho1, rho2 = link_kernels(c1, c2, dim=int(rng.integers(2, 4)))
        all_pd &= is_pd(K)
        worst = max(worst, np.max(np.abs(slice_kernel(K, rho1).values - c1.values)),
                    np.max(np.abs(slice_kernel(K, rho2).values - c2.values)))
    ok = all_pd and worst <= 1e-12
    assert acceptance(7, ok, f"100 pairs, all p.d. {all_pd}, slice error {worst:.1e}"), (all_pd, worst)


def test_criterion_8_suite_determinism(acceptance, tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    t0 = time.perf_counter()
    code_a = main(["suite", "--seed", "8", "--out", str(a)])
    dt = time.perf_counter() - t0
    code_b = main(["suite", "--seed", "8", "--workers", "1", "--out", str(b)])
    capsys.readouterr()
    same = a.read_bytes() == b.read_bytes()
    report = json.loads(a.read_text())
    ok = same and code_a == code_b == 0 and dt < 180
    assert acceptance(
        8, ok, f"{len(report['properties'])} properties x 200 trials, byte-identical reports {same}, "
        f"{report['total_failures']} failures, {dt:.1f}s"
    ), (same, code_a, code_b, dt)
