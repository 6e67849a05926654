import math

import numpy as np
import pytest

from essgd import compression
from essgd.estimation import verify_es_bound
from essgd.problems import NodeSumProblem, make_quadratic_sum
from essgd.sampling import SampledGradient, TooManyOutcomes, tau_nice


def exact_moments(c, x):
    outs = compression.compress_outcomes(c, x)
    total = math.fsum(p for p, _ in outs)
    mean = sum(p * v for p, v in outs)
    var = math.fsum(p * float((v - x) @ (v - x)) for p, v in outs)
    return total, mean, var


def test_identity():
    c = compression.identity(3)
    x = np.array([1.0, -2.0, 0.5])
    np.testing.assert_array_equal(compression.compress(c, x, np.random.default_rng(0)), x)
    assert c.omega == 0.0


@pytest.mark.parametrize("d,k", [(4, 2), (6, 2), (6, 3), (5, 5), (3, 1)])
def test_rand_k_exact(d, k):
    c = compression.rand_k(d, k)
    rng = np.random.default_rng(d * 10 + k)
    for x in (rng.standard_normal(d), np.ones(d), np.eye(d)[0]):
        total, mean, var = exact_moments(c, x)
        assert total == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(mean, x, atol=1e-12)
        # rand_k attains its omega exactly
        assert var == pytest.approx(c.omega * float(x @ x), rel=1e-12, abs=1e-15)
    assert c.omega == d / k - 1


def test_rand_k_examples():
    c = compression.rand_k(2, 1)
    outs = compression.compress_outcomes(c, np.array([1.0, 1.0]))
    got = sorted(tuple(v) for _, v in outs)
    assert got == [(0.0, 2.0), (2.0, 0.0)]
    full = compression.rand_k(3, 3)
    x = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(compression.compress(full, x, np.random.default_rng(0)), x)


@pytest.mark.parametrize("c", [compression.identity(3), compression.rand_k(3, 1), compression.dithering(3, 2)])
def test_zero_preserved(c):
    z = compression.compress(c, np.zeros(3), np.random.default_rng(0))
    assert np.all(z == 0)


@pytest.mark.parametrize("d,s", [(4, 1), (4, 2), (5, 3)])
def test_dithering_exact_enumeration(d, s):
    c = compression.dithering(d, s)
    rng = np.random.default_rng(d + s)
    for x in (rng.standard_normal(d), np.ones(d), np.eye(d)[1]):
        total, mean, var = exact_moments(c, x)
        assert total == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(mean, x, atol=1e-12)
        assert var <= c.omega * float(x @ x) * (1 + 1e-12)


@pytest.mark.parametrize("d,s", [(10, 1), (10, 3), (30, 2)])
def test_dithering_monte_carlo(d, s):
    c = compression.dithering(d, s)
    rng = np.random.default_rng(d * s)
    trials = 400
    for _ in range(100):
        x = rng.standard_normal(d) * rng.exponential()
        qs = np.array([compression.compress(c, x, rng) for _ in range(trials)])
        # unbiasedness is covered exactly by enumeration; here only the variance
        ratio = np.sum((qs - x) ** 2, axis=1) / float(x @ x)
        assert ratio.mean() <= c.omega + 4 * ratio.std(ddof=1) / math.sqrt(trials)


def test_dithering_omega_formula():
    assert compression.dithering(16, 1).omega == 4.0
    assert compression.dithering(16, 8).omega == 0.25


def test_validation():
    with pytest.raises(ValueError):
        compression.rand_k(3, 0)
    with pytest.raises(ValueError):
        compression.rand_k(3, 4)
    with pytest.raises(ValueError):
        compression.dithering(3, 0)
    with pytest.raises(ValueError):
        compression.compress(compression.identity(3), np.ones(4), np.random.default_rng(0))


def test_outcome_guard():
    with pytest.raises(TooManyOutcomes):
        compression.compress_outcomes(compression.rand_k(30, 15), np.ones(30))


def two_node(rng, d=2, m=2):
    nodes = []
    for _ in range(2):
        h = rng.uniform(0.5, 3.0, m)[:, None, None] * np.eye(d)
        nodes.append(make_quadratic_sum(h, linear=rng.standard_normal((m, d))))
    everything = make_quadratic_sum(np.concatenate([p.hessians for p in nodes]),
                                    linear=np.concatenate([p.linear for p in nodes]))
    return nodes, everything


def test_composed_identity_is_exact():
    rng = np.random.default_rng(0)
    nodes, _ = two_node(rng)
    est = compression.compose_nodes(nodes, [compression.identity(2)] * 2)
    x = rng.standard_normal(2)
    g, cost = compression.composed_gradient(est, x, rng)
    np.testing.assert_allclose(g, est.problem.grad(x), atol=1e-14)
    assert cost == 2


def test_composed_single_node_rand_k():
    rng = np.random.default_rng(1)
    nodes, _ = two_node(rng)
    est = compression.compose_nodes(nodes[:1], [compression.rand_k(2, 1)])
    x = rng.standard_normal(2)
    g = nodes[0].grad(x)
    outs = est.outcomes(x)
    got = sorted(tuple(v) for _, v in outs)
    assert got == sorted([(2 * g[0], 0.0), (0.0, 2 * g[1])])
    np.testing.assert_allclose(sum(p * v for p, v in outs), g, atol=1e-14)


def test_composed_constants_examples():
    p1 = make_quadratic_sum(np.array([[[3.0]]]))
    est = compression.compose_nodes([p1], [compression.identity(1)])
    assert est.es_constants().as_tuple() == (3.0, 1.0, 0.0)
    # omega = 1 on both nodes, L = (2, 4): a = max(2*2, 2*4)/2
    nodes = [make_quadratic_sum(np.stack([2 * np.eye(2)])), make_quadratic_sum(np.stack([4 * np.eye(2)]))]
    est = compression.compose_nodes(nodes, [compression.rand_k(2, 1)] * 2)
    assert est.es_constants().as_tuple() == pytest.approx((4.0, 1.0, 0.0))


@pytest.mark.parametrize("seed", range(4))
def test_composed_bound_holds_exactly(seed):
    rng = np.random.default_rng(seed)
    nodes, everything = two_node(rng)
    total = NodeSumProblem(nodes, f_inf=everything.f_inf)
    inner = [SampledGradient(p, tau_nice(p.n, 1)) for p in nodes]
    for comp in (compression.rand_k(2, 1), compression.identity(2), compression.dithering(2, 1)):
        est = compression.ComposedEstimator(total, [comp] * 2, inner)
        rep = verify_es_bound(est, rng.standard_normal((50, 2)) * 3)
        assert rep.passed and all(c.exact for c in rep.checks)


def test_composed_monte_carlo_unbiased():
    rng = np.random.default_rng(5)
    nodes, _ = two_node(rng, d=4)
    est = compression.compose_nodes(nodes, [compression.dithering(4, 2), compression.rand_k(4, 1)],
                                    schemes=[tau_nice(2, 1), tau_nice(2, 1)])
    x = rng.standard_normal(4)
    gs = np.array([est.sample(x, rng)[0] for _ in range(20_000)])
    se = gs.std(axis=0, ddof=1) / math.sqrt(len(gs))
    assert np.all(np.abs(gs.mean(axis=0) - est.problem.grad(x)) <= 4 * se)
