import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncpoly.classical import (
    FiniteMeasure,
    JointMeasure,
    conditional,
    disintegration_check,
    is_polymorphism,
    marginals,
    product_measure,
)
from ncpoly.errors import DomainError
from ncpoly.generators import random_joint
from ncpoly.spaces import FiniteSpace, all_events

X1, X2 = FiniteSpace(["a", "b"]), FiniteSpace(["u", "v"])


def test_uniform_marginals():
    nu = JointMeasure.from_table(X1, X2, np.full((2, 2), 0.25))
    m1, m2 = marginals(nu)
    assert np.allclose(m1.weights, 0.5) and np.allclose(m2.weights, 0.5)


def test_product_marginals_exact():
    mu1 = FiniteMeasure(FiniteSpace("xyz"), [0.2, 0.3, 0.5])
    mu2 = FiniteMeasure(X2, [0.6, 0.4])
    m1, m2 = marginals(product_measure(mu1, mu2))
    assert np.allclose(m1.weights, mu1.weights, atol=1e-15)
    assert np.allclose(m2.weights, mu2.weights, atol=1e-15)


def test_mass_conservation(rng):
    nu = random_joint(3, 4, rng)
    m1, m2 = marginals(nu)
    assert m1.total == pytest.approx(nu.total) and m2.total == pytest.approx(nu.total)


def test_conditional_of_product_is_factor():
    mu1 = FiniteMeasure(X1, [0.3, 0.7])
    mu2 = FiniteMeasure(X2, [2.0, 6.0])
    nu = product_measure(mu1, mu2)
    for a in range(2):
        assert np.allclose(conditional(nu, 1, a).weights, [0.25, 0.75])


def test_conditional_diagonal_coupling():
    nu = JointMeasure.from_table(X1, X2, np.diag([0.5, 0.5]))
    assert np.array_equal(conditional(nu, 1, 0).weights, [1.0, 0.0])
    assert np.array_equal(conditional(nu, 2, 1).weights, [0.0, 1.0])


def test_conditional_normalized(rng):
    nu = random_joint(4, 3, rng, zero_rows=True)
    m1, _ = marginals(nu)
    for a in range(4):
        if m1.weights[a] > 0:
            assert conditional(nu, 1, a).total == pytest.approx(1.0)
        else:
            with pytest.raises(DomainError):
                conditional(nu, 1, a)


def test_conditional_matches_direct_division(rng):
    nu = random_joint(3, 3, rng)
    t = nu.table
    for a in range(3):
        assert np.allclose(conditional(nu, 1, a).weights, t[a] / t[a].sum())
        assert np.allclose(conditional(nu, 2, a).weights, t[:, a] / t[:, a].sum())


def test_disintegration_product_and_diagonal():
    mu = FiniteMeasure(X1, [0.4, 0.6])
    assert disintegration_check(product_measure(mu, FiniteMeasure(X2, [0.1, 0.9]))).max_violation < 1e-15
    diag = JointMeasure.from_table(X1, X2, np.diag([0.5, 0.5]))
    assert disintegration_check(diag).max_violation == 0.0


def test_disintegration_zero_rows_skipped(rng):
    nu = random_joint(4, 4, rng, zero_rows=True)
    rep = disintegration_check(nu)
    assert rep.exhaustive and rep.rectangles_checked == 16 * 16
    assert rep.max_violation <= 1e-12
    assert len(rep.skipped_left) == 1 and len(rep.skipped_right) == 1


def test_disintegration_sum_oracle(rng):
    # brute-force sum over cells, independent of the module's rectangle loop
    nu = random_joint(3, 2, rng)
    t = nu.table
    m1 = t.sum(axis=1)
    for A, B in itertools.product(all_events(nu.space.left), all_events(nu.space.right)):
        direct = sum(t[a, b] for a in A.members for b in B.members)
        via = sum(m1[a] * sum(t[a, b] / m1[a] for b in B.members) for a in A.members)
        assert direct == pytest.approx(via, abs=1e-14)
        assert nu(nu.space.rectangle(A, B)) == pytest.approx(direct, abs=1e-14)


def test_disintegration_sampled_on_large_spaces(rng):
    nu = random_joint(8, 7, rng)
    rep = disintegration_check(nu, rng=rng)
    assert not rep.exhaustive and rep.rectangles_checked == 256
    assert rep.max_violation <= 1e-12


def test_is_polymorphism_examples(rng):
    mu1, mu2 = FiniteMeasure(X1, [0.3, 0.7]), FiniteMeasure(X2, [0.5, 0.5])
    assert is_polymorphism(product_measure(mu1, mu2), mu1, mu2)
    uniform = JointMeasure.from_table(X1, X2, np.full((2, 2), 0.25))
    assert not is_polymorphism(uniform, mu1, mu2)
    nu = random_joint(3, 3, rng)
    assert is_polymorphism(nu, *marginals(nu))


def test_negative_weights_rejected():
    with pytest.raises(DomainError):
        FiniteMeasure(X1, [0.5, -0.1])


def test_swapped_transposes(rng):
    nu = random_joint(2, 3, rng)
    assert np.array_equal(nu.swapped().table, nu.table.T)


@settings(max_examples=50, deadline=None)
@given(n1=st.integers(1, 5), n2=st.integers(1, 5), seed=st.integers(0, 2**32 - 1))
def test_reconstruction_from_conditionals(n1, n2, seed):
    nu = random_joint(n1, n2, np.random.default_rng(seed), zero_rows=True)
    m1, _ = marginals(nu)
    rebuilt = np.zeros((n1, n2))
    for a in range(n1):
        if m1.weights[a] > 0:
            rebuilt[a] = m1.weights[a] * conditional(nu, 1, a).weights
    assert np.allclose(rebuilt, nu.table, atol=1e-12)
