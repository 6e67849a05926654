"""Unbiased compression operators and the compressed distributed estimator.

An omega-compressor ``Q`` satisfies ``E[Q(x)] = x`` and
``E||Q(x) - x||^2 <= omega ||x||^2``. The distributed estimator averages
independently compressed per-node stochastic gradients.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .model import EsConstants
from .problems import FiniteSumProblem, NodeSumProblem, delta_inf
from .sampling import MAX_ATOMS, SampledGradient, TooManyOutcomes

__all__ = [
    "Compressor",
    "identity",
    "rand_k",
    "dithering",
    "compress",
    "compress_outcomes",
    "certify_omega",
    "ExactComponent",
    "ComposedEstimator",
    "compose_nodes",
    "composed_gradient",
    "composed_es_constants",
]


@dataclass(frozen=True)
class Compressor:
    kind: str
    d: int
    k: int = 0
    levels: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be positive")
        if self.kind == "rand_k" and not 1 <= self.k <= self.d:
            raise ValueError(f"k must lie in [1, d], got {self.k}")
        if self.kind == "dithering" and self.levels < 1:
            raise ValueError("dithering needs at least one level")
        if self.kind not in ("identity", "rand_k", "dithering"):
            raise ValueError(f"unknown compressor kind {self.kind!r}")

    @property
    def omega(self):
        return certify_omega(self)


def identity(d) -> Compressor:
    return Compressor("identity", int(d))


def rand_k(d, k) -> Compressor:
    return Compressor("rand_k", int(d), k=int(k))


def dithering(d, levels) -> Compressor:
    return Compressor("dithering", int(d), levels=int(levels))


def certify_omega(c: Compressor) -> float:
    if c.kind == "identity":
        return 0.0
    if c.kind == "rand_k":
        return c.d / c.k - 1.0
    s = c.levels
    return min(c.d / s**2, math.sqrt(c.d) / s)


def _dither_parts(x, s):
    norm = float(np.linalg.norm(x))
    u = s * np.abs(x) / norm
    lower = np.floor(u)
    return norm, lower, u - lower


def compress(c: Compressor, x, rng) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (c.d,):
        raise ValueError(f"expected a vector of length {c.d}, got shape {x.shape}")
    if c.kind == "identity":
        return x.copy()
    if c.kind == "rand_k":
        keep = rng.choice(c.d, size=c.k, replace=False)
        out = np.zeros(c.d)
        out[keep] = x[keep] * (c.d / c.k)
        return out
    if not np.any(x):
        return np.zeros(c.d)
    norm, lower, frac = _dither_parts(x, c.levels)
    level = lower + (rng.random(c.d) < frac)
    return norm * np.sign(x) * level / c.levels


def compress_outcomes(c: Compressor, x, max_atoms=MAX_ATOMS):
    """Exact ``[(probability, Q(x)), ...]`` for a fixed input ``x``."""
    x = np.asarray(x, dtype=float)
    if c.kind == "identity":
        return [(1.0, x.copy())]
    if c.kind == "rand_k":
        atoms = math.comb(c.d, c.k)
        if atoms > max_atoms:
            raise TooManyOutcomes(f"rand_k(d={c.d}, k={c.k}) has {atoms} outcomes")
        out = []
        for keep in itertools.combinations(range(c.d), c.k):
            v = np.zeros(c.d)
            v[list(keep)] = x[list(keep)] * (c.d / c.k)
            out.append((1.0 / atoms, v))
        return out
    if not np.any(x):
        return [(1.0, np.zeros(c.d))]
    norm, lower, frac = _dither_parts(x, c.levels)
    random_coords = np.flatnonzero(frac > 0)
    if 2 ** random_coords.size > max_atoms:
        raise TooManyOutcomes(f"dithering outcome space has 2^{random_coords.size} atoms")
    out = []
    for ups in itertools.product((False, True), repeat=random_coords.size):
        level = lower.copy()
        prob = 1.0
        for j, up in zip(random_coords, ups):
            level[j] += up
            prob *= frac[j] if up else 1.0 - frac[j]
        out.append((prob, norm * np.sign(x) * level / c.levels))
    return out


class ExactComponent:
    """Node source returning the exact component gradient (constants ``(0, 1, 0)``)."""

    def __init__(self, problem: FiniteSumProblem, i: int):
        self.problem, self.i = problem, i

    def sample(self, x, rng):
        return self.problem.component_grad(self.i, x), 1

    def outcomes(self, x, max_atoms=MAX_ATOMS):
        return [(1.0, self.problem.component_grad(self.i, x))]

    def es_constants(self):
        return EsConstants(0.0, 1.0, 0.0)


class ComposedEstimator:
    """``g(x) = (1/n) sum_i Q_i(g_i(x))`` over the components of ``problem``.

    ``inner[i]`` is a gradient source for component ``i`` whose
    expected-smoothness constants are stated relative to that component
    and its infimum ``problem.f_inf_components[i]``.
    """

    def __init__(self, problem: FiniteSumProblem, compressors, inner=None):
        compressors = list(compressors)
        if len(compressors) != problem.n:
            raise ValueError(f"need {problem.n} compressors, got {len(compressors)}")
        if any(c.d != problem.d for c in compressors):
            raise ValueError("compressor dimensions must match the problem dimension")
        if inner is None:
            inner = [ExactComponent(problem, i) for i in range(problem.n)]
        inner = list(inner)
        if len(inner) != problem.n:
            raise ValueError(f"need {problem.n} inner sources, got {len(inner)}")
        self.problem = problem
        self.compressors = compressors
        self.inner = inner

    def sample(self, x, rng):
        return composed_gradient(self, x, rng)

    def node_outcomes(self, i, x, max_atoms=MAX_ATOMS):
        out = []
        for p_in, g in self.inner[i].outcomes(x, max_atoms):
            for p_c, qg in compress_outcomes(self.compressors[i], g, max_atoms):
                out.append((p_in * p_c, qg))
                if len(out) > max_atoms:
                    raise TooManyOutcomes(f"node {i} has more than {max_atoms} outcomes")
        return out

    def outcomes(self, x, max_atoms=MAX_ATOMS):
        per_node = [self.node_outcomes(i, x, max_atoms) for i in range(self.problem.n)]
        if math.prod(len(o) for o in per_node) > max_atoms:
            raise TooManyOutcomes("composed outcome space too large")
        n = self.problem.n
        out = []
        for combo in itertools.product(*per_node):
            prob = math.prod(c[0] for c in combo)
            out.append((prob, sum(c[1] for c in combo) / n))
        return out

    def es_constants(self):
        return composed_es_constants(self)


def composed_gradient(e: ComposedEstimator, x, rng):
    """Return ``(g, cost)``; node compressors are sampled independently."""
    n = e.problem.n
    g = np.zeros(e.problem.d)
    cost = 0
    for i in range(n):
        gi, ci = e.inner[i].sample(x, rng)
        g += compress(e.compressors[i], gi, rng)
        cost += ci
    return g / n, cost


def composed_es_constants(e: ComposedEstimator) -> EsConstants:
    n = e.problem.n
    omegas = np.array([certify_omega(c) for c in e.compressors])
    inner = [src.es_constants() for src in e.inner]
    lc = np.asarray(e.problem.l_components, dtype=float)
    a = max((1.0 + omegas[i]) * (inner[i].a + inner[i].b * lc[i]) for i in range(n)) / n
    c = 2.0 * a * delta_inf(e.problem) + sum((1.0 + omegas[i]) * inner[i].c for i in range(n)) / n**2
    return EsConstants(float(a), 1.0, float(c))


def compose_nodes(node_problems, compressors, schemes=None) -> ComposedEstimator:
    """Build the estimator over whole per-node problems.

    With ``schemes`` each node subsamples its own finite sum; otherwise
    nodes send exact local gradients.
    """
    total = NodeSumProblem(node_problems)
    if schemes is None:
        inner = None
    else:
        inner = [SampledGradient(p, s) for p, s in zip(node_problems, schemes)]
    return ComposedEstimator(total, compressors, inner)
