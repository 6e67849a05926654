import math
from fractions import Fraction

import numpy as np
import pytest

from essgd.problems import (
    InconsistentInfimaError,
    delta_inf,
    make_pl_quadratic,
    make_prop1_counterexample,
    make_quadratic_sum,
    make_regularized_linreg,
    make_regularized_logreg,
)


def central_diff(fun, x, h=1e-6):
    g = np.zeros_like(x)
    for j in range(x.size):
        step = h * max(1.0, abs(x[j]))
        e = np.zeros_like(x)
        e[j] = step
        g[j] = (fun(x + e) - fun(x - e)) / (2 * step)
    return g


def _fixtures():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((6, 4))
    y = rng.standard_normal(6)
    h = np.stack([np.diag(rng.uniform(0.5, 3.0, 4)) for _ in range(6)])
    return {
        "linreg": make_regularized_linreg(a, y, 0.3),
        "logreg": make_regularized_logreg(a, 0.3),
        "quadratic": make_quadratic_sum(h, linear=rng.standard_normal((6, 4))),
        "pl": make_pl_quadratic(4, np.array([1.0, 2.0, 5.0, 10.0]), shifts=rng.standard_normal((6, 4))),
    }


FIXTURES = _fixtures()


def test_linreg_examples():
    p = make_regularized_linreg(np.array([[1.0]]), np.array([0.0]), 0.0)
    assert p.component_value(0, np.array([3.0])) == 9.0
    assert p.component_grad(0, np.array([3.0]))[0] == 6.0
    p = make_regularized_linreg(np.array([[0.0]]), np.array([0.0]), 1.0)
    assert p.value(np.array([1.0])) == pytest.approx(0.5, abs=1e-15)
    assert p.grad(np.array([1.0]))[0] == pytest.approx(0.5, abs=1e-15)


def test_linreg_dimension_mismatch():
    with pytest.raises(ValueError):
        make_regularized_linreg(np.ones((3, 2)), np.ones(4), 0.1)


def test_logreg_examples():
    a = np.array([[1.0, -2.0], [2.0, 2.0]])
    p = make_regularized_logreg(a, 0.0)
    for i in range(2):
        assert p.component_value(i, np.zeros(2)) == pytest.approx(math.log(2), abs=1e-15)
        np.testing.assert_allclose(p.component_grad(i, np.zeros(2)), -a[i] / 2, atol=1e-15)
    p = make_regularized_logreg(a, 0.5)
    assert p.l_components[1] == pytest.approx(8 / 4 + 1)
    assert p.l_global == pytest.approx(np.mean(p.l_components))


@pytest.mark.parametrize("name", list(FIXTURES))
def test_component_gradients_match_finite_differences(name):
    p = FIXTURES[name]
    rng = np.random.default_rng(1)
    for _ in range(20):
        x = rng.standard_normal(p.d) * 2
        for i in range(p.n):
            fd = central_diff(lambda z: p.component_value(i, z), x)
            g = p.component_grad(i, x)
            assert np.linalg.norm(g - fd) <= 1e-5 * max(1.0, np.linalg.norm(fd))


@pytest.mark.parametrize("name", list(FIXTURES))
def test_aggregates_match_components(name):
    p = FIXTURES[name]
    x = np.random.default_rng(2).standard_normal(p.d)
    vals = [p.component_value(i, x) for i in range(p.n)]
    grads = np.stack([p.component_grad(i, x) for i in range(p.n)])
    assert p.value(x) == pytest.approx(math.fsum(vals) / p.n, abs=1e-12 * p.n * max(1, abs(p.value(x))))
    np.testing.assert_allclose(p.grad(x), grads.mean(axis=0), atol=1e-12 * p.n)
    np.testing.assert_allclose(p.component_grads(x), grads, atol=1e-12)
    f, gsq, avg = p.snapshot(x)
    g = grads.mean(axis=0)
    assert gsq == pytest.approx(g @ g, rel=1e-10)
    assert avg == pytest.approx(np.mean(np.sum(grads**2, axis=1)), rel=1e-10)


@pytest.mark.parametrize("name", list(FIXTURES))
def test_weighted_grad(name):
    p = FIXTURES[name]
    x = np.random.default_rng(3).standard_normal(p.d)
    idx = np.array([0, 2, 3])
    w = np.array([0.5, 2.0, 1.5])
    expect = sum(wi * p.component_grad(i, x) for i, wi in zip(idx, w)) / p.n
    np.testing.assert_allclose(p.weighted_grad(idx, w, x), expect, atol=1e-12)


@pytest.mark.parametrize("name", list(FIXTURES))
def test_component_smoothness(name):
    p = FIXTURES[name]
    rng = np.random.default_rng(4)
    for _ in range(50):
        x, y = rng.standard_normal((2, p.d)) * 3
        for i in range(p.n):
            lhs = np.linalg.norm(p.component_grad(i, x) - p.component_grad(i, y))
            assert lhs <= p.l_components[i] * np.linalg.norm(x - y) * (1 + 1e-8)


@pytest.mark.parametrize("name", ["linreg", "quadratic", "pl"])
def test_lemma1(name):
    p = FIXTURES[name]
    rng = np.random.default_rng(5)
    for _ in range(50):
        x = rng.standard_normal(p.d) * 3
        assert p.lemma1_gap(x) >= -1e-9


def test_global_smoothness_of_linreg_bound():
    p = FIXTURES["linreg"]
    rng = np.random.default_rng(6)
    for _ in range(50):
        x, y = rng.standard_normal((2, p.d)) * 3
        assert np.linalg.norm(p.grad(x) - p.grad(y)) <= p.l_global * np.linalg.norm(x - y) * (1 + 1e-8)


def test_linreg_exact_infimum_without_regularizer():
    rng = np.random.default_rng(7)
    a, y = rng.standard_normal((10, 3)), rng.standard_normal(10)
    p = make_regularized_linreg(a, y, 0.0)
    z = np.linalg.lstsq(a, y, rcond=None)[0]
    assert p.f_inf == pytest.approx(p.value(z), rel=1e-12)
    assert delta_inf(p) >= 0


def test_quadratic_infima_are_exact():
    p = FIXTURES["quadratic"]
    z = p.minimizer()
    assert p.f_inf == pytest.approx(p.value(z), abs=1e-12)
    for i in range(p.n):
        zi = np.linalg.solve(p.hessians[i], p.linear[i])
        assert p.f_inf_components[i] == pytest.approx(p.component_value(i, zi), abs=1e-12)
    assert delta_inf(p) > 0


def test_pl_quadratic_examples():
    p = make_pl_quadratic(2, np.array([1.0, 1.0]))
    x = np.ones(2)
    assert p.value(x) == pytest.approx(1.0)
    g = p.grad(x)
    assert g @ g == pytest.approx(2 * p.mu * (p.value(x) - p.f_inf))
    p = make_pl_quadratic(2, np.array([1.0, 4.0]))
    assert (p.mu, p.l_global) == (1.0, 4.0)


@pytest.mark.parametrize("shifts", [None, np.random.default_rng(8).standard_normal((5, 3))])
def test_pl_inequality(shifts):
    p = make_pl_quadratic(3, np.array([1.0, 3.0, 7.0]), shifts=shifts)
    assert p.f_inf == pytest.approx(p.value(p.minimizer()), abs=1e-12)
    rng = np.random.default_rng(9)
    for _ in range(100):
        x = rng.standard_normal(3) * 4
        g = p.grad(x)
        assert 0.5 * g @ g >= p.mu * (p.value(x) - p.f_inf) - 1e-12


def test_pl_quadratic_rejects_nonpositive():
    with pytest.raises(ValueError):
        make_pl_quadratic(2, np.array([1.0, 0.0]))


def test_pl_shifts_keep_objective():
    eigs = np.array([1.0, 2.0])
    plain = make_pl_quadratic(2, eigs)
    shifted = make_pl_quadratic(2, eigs, shifts=np.random.default_rng(10).standard_normal((4, 2)))
    x = np.array([0.3, -1.2])
    assert shifted.value(x) == pytest.approx(plain.value(x), abs=1e-12)
    assert delta_inf(shifted) > 0 and delta_inf(plain) == 0


def test_delta_inf_examples():
    p = make_quadratic_sum(np.ones((2, 1, 1)))
    assert delta_inf(p) == 0
    q = p.with_infima(1.0, [0.0, 0.0])
    assert delta_inf(q) == 1.0
    assert p.f_inf == 0.0  # the original is untouched
    with pytest.raises(InconsistentInfimaError):
        delta_inf(p.with_infima(-1.0))
    assert delta_inf(p.with_infima(-1e-12)) == 0.0


def test_counterexample_closed_form_matches_enumeration():
    ce = make_prop1_counterexample()
    for x in np.linspace(-5, 5, 41):
        outs = ce.outcomes(x)
        mean = sum(p * v[0] for p, v in outs)
        second = sum(p * v[0] ** 2 for p, v in outs)
        assert mean == pytest.approx(float(ce.grad(x)), abs=1e-12)
        assert second == pytest.approx(float(ce.second_moment(x)), rel=1e-12, abs=1e-12)


def test_counterexample_examples():
    ce = make_prop1_counterexample()
    assert ce.second_moment(0) == 0
    assert ce.second_moment(Fraction(4)) == 5
    assert ce.value(Fraction(4)) == Fraction(7, 2)
    assert 2 * Fraction(1, 2) * ce.value(Fraction(4)) + 2 == Fraction(11, 2)
    assert ce.second_moment(Fraction(1, 2)) == Fraction(3, 4)
    assert ce.value(0.5) == 0.125 and ce.value(-3.0) == 2.5
