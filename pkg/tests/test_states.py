import numpy as np
import pytest

from ncpoly.classical import FiniteMeasure, JointMeasure, marginals, product_measure
from ncpoly.errors import AxiomViolation, DimensionError, DomainError, NotPSDError
from ncpoly.generators import random_density, random_gram_kernel, random_joint, random_pd_scalar_kernel
from ncpoly.opkernels import OperatorKernel, is_pd
from ncpoly.spaces import FiniteSpace
from ncpoly.states import (
    DensityOperator,
    ScalarKernel,
    classical_embed,
    in_poly,
    link_kernels,
    partial_traces,
    product_state,
    slice_kernel,
)

BELL = DensityOperator.pure([1, 0, 0, 1], split=(2, 2))
HALF = DensityOperator.maximally_mixed(2)
ZERO = DensityOperator.pure([1, 0])


def test_density_axioms():
    with pytest.raises(NotPSDError):
        DensityOperator(np.diag([1.5, -0.5]))
    with pytest.raises(AxiomViolation):
        DensityOperator(np.eye(2))
    with pytest.raises(DimensionError):
        DensityOperator(np.eye(6) / 6, split=(2, 2))


def test_partial_traces_product(rng):
    s1, s2 = random_density(2, rng), random_density(3, rng)
    r1, r2 = partial_traces(product_state(s1, s2))
    assert np.allclose(r1.matrix, s1.matrix) and np.allclose(r2.matrix, s2.matrix)


def test_partial_traces_bell():
    r1, r2 = partial_traces(BELL)
    assert np.allclose(r1.matrix, np.eye(2) / 2) and np.allclose(r2.matrix, np.eye(2) / 2)


def test_partial_traces_unit_trace(rng):
    for _ in range(10):
        rho = random_density(6, rng, split=(3, 2))
        for r in partial_traces(rho):
            assert np.trace(r.matrix) == pytest.approx(1.0)


def test_partial_traces_need_split(rng):
    with pytest.raises(DomainError):
        partial_traces(random_density(4, rng))


def test_in_poly_examples(rng):
    s1, s2 = random_density(2, rng), random_density(2, rng)
    assert in_poly(product_state(s1, s2), s1, s2)
    assert in_poly(BELL, HALF, HALF)
    assert not in_poly(BELL, ZERO, HALF)


def test_in_poly_infers_split(rng):
    rho = DensityOperator(random_density(6, rng).matrix)
    s1, s2 = partial_traces(DensityOperator(rho.matrix, (2, 3)))
    assert in_poly(rho, s1, s2)


def test_classical_embed_examples(rng):
    X = FiniteSpace("ab")
    uniform = JointMeasure.from_table(X, X, np.full((2, 2), 0.25))
    assert np.allclose(classical_embed(uniform).matrix, np.eye(4) / 4)
    mu1, mu2 = FiniteMeasure(X, [0.3, 0.7]), FiniteMeasure(X, [0.6, 0.4])
    rho = classical_embed(product_measure(mu1, mu2))
    assert np.allclose(rho.matrix, np.kron(np.diag(mu1.weights), np.diag(mu2.weights)))


def test_embed_commutes_with_marginals(rng):
    nu = random_joint(3, 4, rng)
    r1, r2 = partial_traces(classical_embed(nu))
    m1, m2 = marginals(nu)
    assert np.max(np.abs(r1.matrix - np.diag(m1.weights))) <= 1e-12
    assert np.max(np.abs(r2.matrix - np.diag(m2.weights))) <= 1e-12


def test_embed_requires_probability(rng):
    X = FiniteSpace("ab")
    nu = JointMeasure.from_table(X, X, np.ones((2, 2)))
    with pytest.raises(DomainError):
        classical_embed(nu)
    assert np.allclose(classical_embed(nu, normalize=True).matrix, np.eye(4) / 4)


def test_link_all_ones():
    ones = ScalarKernel(("a", "b"), np.ones((2, 2)))
    K, rho1, rho2 = link_kernels(ones, ones)
    assert np.allclose(K("a", "b"), rho1.matrix + rho2.matrix)
    assert is_pd(K)


def test_link_zero_second(rng):
    c1 = random_pd_scalar_kernel(3, rng)
    zero = ScalarKernel(c1.labels, np.zeros((3, 3)))
    K, rho1, rho2 = link_kernels(c1, zero, dim=3)
    assert np.allclose(K.blocks, c1.values[:, :, None, None] * rho1.matrix)
    assert not np.any(slice_kernel(K, rho2).values)


def test_link_roundtrip(rng):
    c1, c2 = random_pd_scalar_kernel(4, rng), random_pd_scalar_kernel(4, rng)
    K, rho1, rho2 = link_kernels(c1, c2, dim=2)
    assert is_pd(K)
    assert np.max(np.abs(slice_kernel(K, rho1).values - c1.values)) <= 1e-12
    assert np.max(np.abs(slice_kernel(K, rho2).values - c2.values)) <= 1e-12


def test_link_rejects_bad_inputs(rng):
    c = random_pd_scalar_kernel(2, rng)
    with pytest.raises(DomainError):
        link_kernels(c, c, dim=1)
    neg = ScalarKernel(c.labels, -np.eye(2))
    with pytest.raises(DomainError):
        link_kernels(c, neg)


def test_slice_normalized_trace(rng):
    c = random_pd_scalar_kernel(3, rng)
    K = OperatorKernel(c.labels, 3, c.values[:, :, None, None] * np.eye(3))
    assert np.allclose(slice_kernel(K, DensityOperator.maximally_mixed(3)).values, c.values)


def test_slice_preserves_pd(rng):
    for _ in range(10):
        K, _ = random_gram_kernel(4, 3, rng)
        assert slice_kernel(K, random_density(3, rng)).is_pd()


def test_slice_dimension_mismatch(rng):
    K, _ = random_gram_kernel(2, 2, rng)
    with pytest.raises(DimensionError):
        slice_kernel(K, DensityOperator.maximally_mixed(3))
