import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncpoly.errors import (
    AxiomViolation,
    DomainError,
    InternalConsistencyError,
    NotPSDError,
    OrderingViolationError,
)
from ncpoly.generators import random_contraction, random_gram_kernel, random_povm, random_pvm, random_space
from ncpoly.opkernels import (
    OperatorKernel,
    compression_map,
    factor,
    is_pd,
    leq,
    povm_kernel,
    rn_derivative,
)
from ncpoly.spaces import all_events

from conftest import crandn


def constant_kernel(n, d):
    return OperatorKernel(tuple(f"s{i}" for i in range(n)), d, np.broadcast_to(np.eye(d), (n, n, d, d)))


def planted_pair(rng, n=3, d=2):
    K, W0 = random_gram_kernel(n, d, rng)
    G0 = random_contraction(W0.shape[0], rng)
    L = OperatorKernel.from_gram(K.labels, d, W0.conj().T @ G0 @ W0)
    return L, K, G0, W0


def test_gram_layout(rng):
    K, W = random_gram_kernel(3, 2, rng)
    V1, V2 = W[:, 2:4], W[:, 4:6]
    assert np.allclose(K("s1", "s2"), V1.conj().T @ V2)
    assert np.allclose(OperatorKernel.from_gram(K.labels, 2, K.gram()).blocks, K.blocks)


def test_non_hermitian_kernel_rejected():
    blocks = np.zeros((2, 2, 1, 1))
    blocks[0, 1] = 1.0
    with pytest.raises(AxiomViolation):
        OperatorKernel(("a", "b"), 1, blocks)


def test_is_pd_examples(rng):
    assert is_pd(constant_kernel(4, 2))
    K, _ = random_gram_kernel(4, 2, rng)
    assert is_pd(K)
    b = np.array(K.blocks)
    b[1, 1] *= -1
    assert not is_pd(OperatorKernel(K.labels, 2, b))


def test_factor_examples(rng):
    zero = OperatorKernel(("a", "b"), 2, np.zeros((2, 2, 2, 2)))
    assert factor(zero).rank == 0
    fac = factor(constant_kernel(5, 3))
    assert fac.rank == 3
    assert np.allclose(fac.factor_at(0), fac.factor_at(4))
    K, _ = random_gram_kernel(4, 3, rng)
    assert factor(K).residual <= 1e-8


def test_factor_rejects_non_pd():
    with pytest.raises(NotPSDError):
        factor(OperatorKernel(("a",), 1, [[[[-1.0]]]]))


def test_leq_examples(rng):
    K, _ = random_gram_kernel(3, 2, rng)
    assert leq(0.5 * K, K)
    assert leq(K, K)
    v = crandn(rng, 2)
    b = np.array(K.blocks)
    b[1, 1] += np.outer(v, v.conj())
    assert not leq(OperatorKernel(K.labels, 2, b), K)


def test_rn_identity_and_scalar(rng):
    K, _ = random_gram_kernel(3, 2, rng)
    rn = rn_derivative(K, K)
    r = rn.with_respect_to.rank
    assert np.allclose(rn.gamma, np.eye(r), atol=1e-9)
    for c in (0.0, 0.3, 1.0):
        rn = rn_derivative(c * K, K)
        assert np.allclose(rn.gamma, c * np.eye(r), atol=1e-9)


def test_rn_plant_and_recover(rng):
    for _ in range(20):
        L, K, G0, W0 = planted_pair(rng, n=int(rng.integers(1, 5)), d=int(rng.integers(1, 4)))
        rn = rn_derivative(L, K)
        U = compression_map(rn.with_respect_to, W0)
        assert np.allclose(U.conj().T @ U, np.eye(rn.with_respect_to.rank), atol=1e-9)
        assert np.max(np.abs(rn.gamma - U.conj().T @ G0 @ U)) <= 1e-7
        assert np.allclose(rn.reconstruct(), L.gram(), atol=1e-8)


def test_rn_low_rank_plant(rng):
    # rank-deficient K: recovered Gamma lives on the r-dimensional factor space
    K, W0 = random_gram_kernel(4, 2, rng, rank=3)
    G0 = random_contraction(3, rng)
    L = OperatorKernel.from_gram(K.labels, 2, W0.conj().T @ G0 @ W0)
    rn = rn_derivative(L, K)
    assert rn.gamma.shape == (3, 3)
    U = compression_map(rn.with_respect_to, W0)
    assert np.max(np.abs(rn.gamma - U.conj().T @ G0 @ U)) <= 1e-7


def test_rn_ordering_violation(rng):
    K, _ = random_gram_kernel(3, 2, rng)
    with pytest.raises(OrderingViolationError) as info:
        rn_derivative(2.0 * K, K)
    assert info.value.min_eigenvalue < 0


def test_rn_outside_range_is_violation(rng):
    # L not supported on range(K): no Gamma can reproduce it
    K, _ = random_gram_kernel(3, 1, rng, rank=1)
    L, _ = random_gram_kernel(3, 1, rng, rank=1)
    with pytest.raises(OrderingViolationError):
        rn_derivative(0.01 * L, K)


def test_rn_inconsistent_verdicts_raise(rng, monkeypatch):
    import ncpoly.opkernels as ok

    K, _ = random_gram_kernel(2, 2, rng)
    monkeypatch.setattr(ok, "leq", lambda L, K, tol=None: False)
    with pytest.raises(InternalConsistencyError):
        ok.rn_derivative(0.5 * K, K)


def test_rn_requires_pd_L(rng):
    K, _ = random_gram_kernel(2, 1, rng)
    with pytest.raises(DomainError):
        rn_derivative(-1.0 * K, K)


def test_povm_kernel_examples(rng):
    Q = random_povm(random_space(3), 2, rng)
    K = povm_kernel(Q, [Q.space.full])
    assert K.n == 1 and np.allclose(K.blocks[0, 0], np.eye(2))
    P = random_pvm(random_space(2), 3, rng)
    A, B = P.space.event(["s0"]), P.space.event(["s1"])
    Kp = povm_kernel(P, [A, B])
    assert not np.any(Kp.blocks[0, 1])
    Q4 = random_povm(random_space(4), 2, rng)
    K4 = povm_kernel(Q4)
    assert K4.n == 16 and is_pd(K4)


def test_povm_kernel_large_space_uses_atoms(rng):
    Q = random_povm(random_space(9), 1, rng)
    assert povm_kernel(Q).n == 9
    extra = [Q.space.event(["s0", "s1"])]
    assert povm_kernel(Q, extra).n == 10


def test_povm_kernel_entries(rng):
    Q = random_povm(random_space(3), 2, rng)
    evs = all_events(Q.space)
    K = povm_kernel(Q)
    for i, A in enumerate(evs):
        for j, B in enumerate(evs):
            assert np.allclose(K.blocks[i, j], Q(A & B))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 4), d=st.integers(1, 3), planted=st.booleans(), seed=st.integers(0, 2**32 - 1))
def test_rn_success_iff_leq(n, d, planted, seed):
    rng = np.random.default_rng(seed)
    if planted:
        L, K, _, _ = planted_pair(rng, n, d)
    else:
        K, _ = random_gram_kernel(n, d, rng)
        L, _ = random_gram_kernel(n, d, rng)
        L = L * float(rng.uniform(0.01, 1.0))
    try:
        rn_derivative(L, K)
        solved = True
    except OrderingViolationError:
        solved = False
    assert solved == leq(L, K)
