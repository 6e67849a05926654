"""Sampling vectors for the stochastic reformulation of a finite sum.

A scheme is a distribution over ``v in R^n`` with ``E[v_i] = 1``; the
stochastic gradient is ``(1/n) sum_i v_i grad f_i(x)``. Four kinds are
supported: full, with replacement (``tau`` dice rolls with face
probabilities ``q``), independent (``i`` kept with probability ``p_i``)
and tau-nice (uniform subset of size ``tau``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .model import EsConstants
from .problems import FiniteSumProblem, delta_inf

__all__ = [
    "SamplingScheme",
    "SamplingDraw",
    "SampledGradient",
    "TooManyOutcomes",
    "full",
    "with_replacement",
    "independent",
    "tau_nice",
    "uniform_with_replacement",
    "draw",
    "draw_many",
    "outcomes",
    "stochastic_gradient",
    "es_constants",
    "es_constants_generic",
    "second_moments",
    "second_moment_matrix",
    "optimal_importance",
    "optimal_minibatch",
]

KINDS = ("full", "with_replacement", "independent", "tau_nice")
MAX_ATOMS = 10_000


class TooManyOutcomes(ValueError):
    """The outcome space is too large to enumerate."""


@dataclass(frozen=True, eq=False)
class SamplingScheme:
    kind: str
    n: int
    tau: int = 1
    q: np.ndarray | None = field(default=None, repr=False)
    p: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sampling kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.kind == "with_replacement":
            q = self.q
            if q is None or q.shape != (self.n,):
                raise ValueError("with_replacement needs q of length n")
            if np.any(q <= 0) or abs(q.sum() - 1.0) > 1e-12:
                raise ValueError("q must be a strictly positive probability vector")
            if self.tau < 1:
                raise ValueError("tau must be positive")
        elif self.kind == "independent":
            p = self.p
            if p is None or p.shape != (self.n,):
                raise ValueError("independent needs p of length n")
            if np.any(p <= 0) or np.any(p > 1):
                raise ValueError("p_i must lie in (0, 1]")
        elif self.kind == "tau_nice":
            if not 1 <= self.tau <= self.n:
                raise ValueError(f"tau must lie in [1, n], got {self.tau}")


def full(n) -> SamplingScheme:
    return SamplingScheme("full", int(n), tau=int(n))


def with_replacement(tau, q) -> SamplingScheme:
    q = np.array(q, dtype=float)
    return SamplingScheme("with_replacement", q.shape[0], tau=int(tau), q=q)


def uniform_with_replacement(n, tau) -> SamplingScheme:
    return with_replacement(tau, np.full(int(n), 1.0 / n))


def independent(p) -> SamplingScheme:
    p = np.array(p, dtype=float)
    return SamplingScheme("independent", p.shape[0], p=p)


def tau_nice(n, tau) -> SamplingScheme:
    return SamplingScheme("tau_nice", int(n), tau=int(tau))


@dataclass(frozen=True)
class SamplingDraw:
    """Nonzero entries of one sampling vector and its oracle cost."""

    indices: np.ndarray
    weights: np.ndarray
    cost: int

    def as_dict(self):
        return {int(i): float(w) for i, w in zip(self.indices, self.weights)}

    def dense(self, n):
        v = np.zeros(n)
        v[self.indices] = self.weights
        return v


def draw(scheme: SamplingScheme, rng: np.random.Generator) -> SamplingDraw:
    n = scheme.n
    if scheme.kind == "full":
        return SamplingDraw(np.arange(n), np.ones(n), n)
    if scheme.kind == "with_replacement":
        rolls = rng.choice(n, size=scheme.tau, p=scheme.q)
        idx, counts = np.unique(rolls, return_counts=True)
        return SamplingDraw(idx, counts / (scheme.tau * scheme.q[idx]), scheme.tau)
    if scheme.kind == "independent":
        idx = np.flatnonzero(rng.random(n) < scheme.p)
        return SamplingDraw(idx, 1.0 / scheme.p[idx], int(idx.size))
    # tau_nice
    if scheme.tau == 1:
        idx = np.array([rng.integers(n)])
    else:
        idx = np.sort(rng.choice(n, size=scheme.tau, replace=False))
    return SamplingDraw(idx, np.full(scheme.tau, n / scheme.tau), scheme.tau)


def draw_many(scheme: SamplingScheme, rng: np.random.Generator, m: int) -> np.ndarray:
    """``m`` independent dense sampling vectors as an ``m x n`` array."""
    n = scheme.n
    if scheme.kind == "full":
        return np.ones((m, n))
    if scheme.kind == "with_replacement":
        rolls = rng.choice(n, size=(m, scheme.tau), p=scheme.q)
        counts = np.zeros((m, n))
        np.add.at(counts, (np.repeat(np.arange(m), scheme.tau), rolls.ravel()), 1.0)
        return counts / (scheme.tau * scheme.q)
    if scheme.kind == "independent":
        return (rng.random((m, n)) < scheme.p) / scheme.p
    keys = rng.random((m, n))
    chosen = np.argpartition(keys, scheme.tau - 1, axis=1)[:, : scheme.tau]
    v = np.zeros((m, n))
    np.put_along_axis(v, chosen, n / scheme.tau, axis=1)
    return v


def _count_atoms(scheme):
    n, tau = scheme.n, scheme.tau
    if scheme.kind == "full":
        return 1
    if scheme.kind == "with_replacement":
        return math.comb(n + tau - 1, tau)
    if scheme.kind == "independent":
        return 2**n
    return math.comb(n, tau)


def outcomes(scheme: SamplingScheme, max_atoms=MAX_ATOMS):
    """Exact outcome list ``[(probability, SamplingDraw), ...]``.

    Raises :class:`TooManyOutcomes` when the support exceeds ``max_atoms``.
    """
    atoms = _count_atoms(scheme)
    if atoms > max_atoms:
        raise TooManyOutcomes(f"{scheme.kind} with n={scheme.n} has {atoms} outcomes")
    n = scheme.n
    out = []
    if scheme.kind == "full":
        out.append((1.0, SamplingDraw(np.arange(n), np.ones(n), n)))
    elif scheme.kind == "with_replacement":
        tau, q = scheme.tau, scheme.q
        for combo in itertools.combinations_with_replacement(range(n), tau):
            idx, counts = np.unique(combo, return_counts=True)
            # multinomial probability of this count vector
            prob = math.factorial(tau)
            for i, c in zip(idx, counts):
                prob = prob * q[i] ** c / math.factorial(c)
            out.append((float(prob), SamplingDraw(idx, counts / (tau * q[idx]), tau)))
    elif scheme.kind == "independent":
        p = scheme.p
        for mask in itertools.product((False, True), repeat=n):
            mask = np.array(mask)
            prob = float(np.prod(np.where(mask, p, 1.0 - p)))
            if prob == 0.0:
                continue
            idx = np.flatnonzero(mask)
            out.append((prob, SamplingDraw(idx, 1.0 / p[idx], int(idx.size))))
    else:
        prob = 1.0 / math.comb(n, scheme.tau)
        for combo in itertools.combinations(range(n), scheme.tau):
            out.append((prob, SamplingDraw(np.array(combo), np.full(scheme.tau, n / scheme.tau), scheme.tau)))
    return out


def stochastic_gradient(p: FiniteSumProblem, scheme: SamplingScheme, x, rng):
    """Return ``(g, cost)`` with ``g = (1/n) sum_i v_i grad f_i(x)``."""
    if scheme.n != p.n:
        raise ValueError(f"scheme has n={scheme.n}, problem has n={p.n}")
    s = draw(scheme, rng)
    return p.weighted_grad(s.indices, s.weights, x), s.cost


def second_moments(scheme: SamplingScheme) -> np.ndarray:
    """Diagonal ``E[v_i^2]`` in closed form."""
    n, tau = scheme.n, scheme.tau
    if scheme.kind == "full":
        return np.ones(n)
    if scheme.kind == "with_replacement":
        return 1.0 - 1.0 / tau + 1.0 / (tau * scheme.q)
    if scheme.kind == "independent":
        return 1.0 / scheme.p
    return np.full(n, n / tau)


def second_moment_matrix(scheme: SamplingScheme) -> np.ndarray:
    """``E[v_i v_j]`` in closed form."""
    n, tau = scheme.n, scheme.tau
    if scheme.kind == "full":
        return np.ones((n, n))
    if scheme.kind == "with_replacement":
        off = 1.0 - 1.0 / tau
    elif scheme.kind == "independent":
        off = 1.0
    else:
        # P(i, j both in S) = tau (tau - 1) / (n (n - 1)), each v = n / tau
        off = n * (tau - 1) / (tau * (n - 1)) if n > 1 else 1.0
    m = np.full((n, n), off)
    np.fill_diagonal(m, second_moments(scheme))
    return m


def es_constants(scheme: SamplingScheme, p: FiniteSumProblem) -> EsConstants:
    """Scheme-specific expected-smoothness constants."""
    n, tau = scheme.n, scheme.tau
    lc = np.asarray(p.l_components, dtype=float)
    if scheme.kind == "full" or (scheme.kind == "tau_nice" and (tau == n or n == 1)):
        return EsConstants(0.0, 1.0, 0.0)
    if scheme.kind == "with_replacement":
        a = float(np.max(lc / (tau * n * scheme.q)))
        b = 1.0 - 1.0 / tau
    elif scheme.kind == "independent":
        a = float(np.max((1.0 - scheme.p) * lc / (scheme.p * n)))
        b = 1.0
    else:
        a = (n - tau) / (tau * (n - 1)) * float(lc.max())
        b = n * (tau - 1) / (tau * (n - 1))
    return EsConstants(a, b, 2.0 * a * delta_inf(p))


def es_constants_generic(scheme: SamplingScheme, p: FiniteSumProblem) -> EsConstants:
    """Constants valid for any sampling with finite ``E[v_i^2]`` (``b = 0``)."""
    a = float(np.max(np.asarray(p.l_components) * second_moments(scheme)))
    return EsConstants(a, 0.0, 2.0 * a * delta_inf(p))


def optimal_importance(p: FiniteSumProblem) -> np.ndarray:
    """Face probabilities ``q_i = L_i / sum_j L_j``."""
    lc = np.asarray(p.l_components, dtype=float)
    if np.any(lc <= 0):
        raise ValueError("all component smoothness constants must be positive")
    return lc / lc.sum()


def optimal_minibatch(delta0, p: FiniteSumProblem, eps) -> int:
    """Largest useful minibatch ``1 + floor(D L_bar / eps^2)``, capped at ``n``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if delta0 < 0:
        raise ValueError("delta0 must be nonnegative")
    dd = max(12.0 * delta0, 4.0 * delta_inf(p))
    l_bar = float(np.mean(p.l_components))
    return int(min(p.n, 1 + math.floor(dd * l_bar / eps**2)))


class SampledGradient:
    """Gradient source ``(1/n) sum_i v_i grad f_i`` for a problem and scheme."""

    def __init__(self, problem: FiniteSumProblem, scheme: SamplingScheme):
        if scheme.n != problem.n:
            raise ValueError(f"scheme has n={scheme.n}, problem has n={problem.n}")
        self.problem = problem
        self.scheme = scheme

    def sample(self, x, rng):
        return stochastic_gradient(self.problem, self.scheme, x, rng)

    def outcomes(self, x, max_atoms=MAX_ATOMS):
        return [(prob, self.problem.weighted_grad(s.indices, s.weights, x))
                for prob, s in outcomes(self.scheme, max_atoms)]

    def es_constants(self):
        return es_constants(self.scheme, self.problem)

    def __repr__(self):
        return f"SampledGradient({self.problem!r}, {self.scheme!r})"
