"""Finite-sum objectives with smoothness and infimum metadata.

A problem is ``f(x) = (1/n) sum_i f_i(x)`` together with the global
smoothness constant ``l_global``, per-component constants
``l_components``, (estimates of) the infima ``f_inf`` and
``f_inf_components``, and optionally a PL constant ``mu``.

Problems are treated as immutable; :meth:`FiniteSumProblem.with_infima`
returns an updated copy.
"""

from __future__ import annotations

import copy
import math
from fractions import Fraction

import numpy as np

from . import kernels
from .model import EsConstants

__all__ = [
    "FiniteSumProblem",
    "QuadraticSum",
    "RegularizedLinReg",
    "RegularizedLogReg",
    "NodeSumProblem",
    "ScalarStochasticProblem",
    "InconsistentInfimaError",
    "make_regularized_linreg",
    "make_regularized_logreg",
    "make_quadratic_sum",
    "make_pl_quadratic",
    "make_prop1_counterexample",
    "delta_inf",
]


class InconsistentInfimaError(ValueError):
    """Infimum estimates violate ``f_inf >= mean(f_inf_components)``."""


class FiniteSumProblem:
    """Base class for ``f = (1/n) sum_i f_i``.

    Subclasses implement :meth:`component_value` and
    :meth:`component_grad`; the aggregate methods have generic (slow)
    defaults that data-backed subclasses override with kernels.
    """

    n: int
    d: int
    l_global: float
    l_components: np.ndarray
    f_inf: float
    f_inf_components: np.ndarray
    mu: float | None = None

    def component_value(self, i, x):
        raise NotImplementedError

    def component_grad(self, i, x):
        raise NotImplementedError

    def value(self, x):
        return math.fsum(self.component_value(i, x) for i in range(self.n)) / self.n

    def grad(self, x):
        return self.component_grads(x).mean(axis=0)

    def component_grads(self, x):
        """All component gradients stacked as an ``n x d`` array."""
        return np.stack([self.component_grad(i, x) for i in range(self.n)])

    def weighted_grad(self, idx, w, x):
        """``(1/n) sum_k w[k] grad f_{idx[k]}(x)``."""
        g = np.zeros(self.d)
        for i, wi in zip(idx, w):
            g += wi * self.component_grad(int(i), x)
        return g / self.n

    def snapshot(self, x):
        """Return ``(f(x), ||grad f(x)||^2, (1/n) sum_i ||grad f_i(x)||^2)``."""
        grads = self.component_grads(x)
        g = grads.mean(axis=0)
        return self.value(x), float(g @ g), float(np.mean(np.sum(grads * grads, axis=1)))

    def component_gd_minima(self, iters):
        """Smallest value along ``iters`` GD steps (stepsize ``1/L_i``) from 0, per component."""
        out = np.empty(self.n)
        for i in range(self.n):
            x = np.zeros(self.d)
            best = math.inf
            step = 1.0 / self.l_components[i]
            for _ in range(iters + 1):
                best = min(best, self.component_value(i, x))
                x = x - step * self.component_grad(i, x)
            out[i] = best
        return out

    def with_infima(self, f_inf, f_inf_components=None):
        new = copy.copy(self)
        new.f_inf = float(f_inf)
        if f_inf_components is not None:
            comps = np.asarray(f_inf_components, dtype=float)
            if comps.shape != (self.n,):
                raise ValueError(f"expected {self.n} component infima, got shape {comps.shape}")
            new.f_inf_components = comps
        return new

    def lemma1_gap(self, x):
        """``2 L (f(x) - f_inf) - ||grad f(x)||^2``, nonnegative for valid metadata."""
        g = self.grad(x)
        return 2.0 * self.l_global * (self.value(x) - self.f_inf) - float(g @ g)

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, d={self.d}, l_global={self.l_global:.6g})"


def delta_inf(p: FiniteSumProblem, tol=1e-9) -> float:
    """``(1/n) sum_i (f_inf - f_inf_i)``, clamped at zero within ``tol``."""
    comps = np.asarray(p.f_inf_components, dtype=float)
    value = float(p.f_inf - np.mean(comps))
    if value < -tol:
        raise InconsistentInfimaError(
            f"f_inf={p.f_inf!r} is below the mean component infimum ({np.mean(comps)!r})"
        )
    return max(value, 0.0)


# ---------------------------------------------------------------------------
# quadratics


class QuadraticSum(FiniteSumProblem):
    """Components ``f_i(x) = 0.5 x^T H_i x - b_i^T x + e_i`` with exact metadata."""

    def __init__(self, hessians, linear, offsets, mu=None):
        h = np.asarray(hessians, dtype=float)
        if h.ndim != 3 or h.shape[1] != h.shape[2]:
            raise ValueError("hessians must have shape (n, d, d)")
        self.n, self.d = h.shape[0], h.shape[1]
        b = np.asarray(linear, dtype=float).reshape(self.n, self.d)
        e = np.asarray(offsets, dtype=float).reshape(self.n)
        if not np.allclose(h, np.transpose(h, (0, 2, 1))):
            raise ValueError("hessians must be symmetric")
        self.hessians, self.linear, self.offsets = h, b, e

        eig = np.linalg.eigvalsh(h)
        if eig.min() < -1e-12 * max(1.0, eig.max()):
            raise ValueError("hessians must be positive semidefinite")
        self.l_components = np.maximum(eig[:, -1], 0.0)
        self.f_inf_components = np.array([_quadratic_min(h[i], b[i], e[i]) for i in range(self.n)])

        hbar, bbar = h.mean(axis=0), b.mean(axis=0)
        ebar = float(e.mean())
        eig_bar = np.linalg.eigvalsh(hbar)
        self.l_global = float(eig_bar[-1])
        self.f_inf = _quadratic_min(hbar, bbar, ebar)
        self.mu = float(eig_bar[0]) if mu is None else mu
        self._hbar, self._bbar, self._ebar = hbar, bbar, ebar

    def component_value(self, i, x):
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.hessians[i] @ x - self.linear[i] @ x + self.offsets[i])

    def component_grad(self, i, x):
        return self.hessians[i] @ np.asarray(x, dtype=float) - self.linear[i]

    def component_grads(self, x):
        return np.einsum("ijk,k->ij", self.hessians, np.asarray(x, dtype=float)) - self.linear

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self._hbar @ x - self._bbar @ x + self._ebar)

    def grad(self, x):
        return self._hbar @ np.asarray(x, dtype=float) - self._bbar

    def minimizer(self):
        return np.linalg.lstsq(self._hbar, self._bbar, rcond=None)[0]


def _quadratic_min(h, b, e):
    z, *_ = np.linalg.lstsq(h, b, rcond=None)
    if not np.allclose(h @ z, b, atol=1e-9 * max(1.0, np.abs(b).max())):
        raise ValueError("quadratic component is unbounded below")
    return float(e - 0.5 * b @ z)


def make_quadratic_sum(hessians, linear=None, offsets=None, mu=None) -> QuadraticSum:
    h = np.asarray(hessians, dtype=float)
    n, d = h.shape[0], h.shape[1]
    b = np.zeros((n, d)) if linear is None else linear
    e = np.zeros(n) if offsets is None else offsets
    return QuadraticSum(h, b, e, mu=mu)


def make_pl_quadratic(d, eigs, *, shifts=None) -> QuadraticSum:
    """Diagonal quadratic ``f(x) = 0.5 sum_j eigs[j] x_j^2``, PL with ``mu = min(eigs)``.

    Without ``shifts`` the objective is split into ``n = d`` components,
    ``f_j(x) = (d/2) eigs[j] x_j^2``, which share the minimizer 0. With an
    ``(n, d)`` array of ``shifts`` (centred internally) the components are
    ``0.5 (x - s_i)^T diag(eigs) (x - s_i)`` minus a constant, so ``f`` is
    unchanged while the components disagree and ``delta_inf > 0``.
    """
    eigs = np.asarray(eigs, dtype=float)
    if eigs.shape != (d,):
        raise ValueError(f"expected {d} eigenvalues, got {eigs.shape}")
    if np.any(eigs <= 0):
        raise ValueError("eigenvalues must be positive")
    if shifts is None:
        h = np.zeros((d, d, d))
        for j in range(d):
            h[j, j, j] = d * eigs[j]
        p = QuadraticSum(h, np.zeros((d, d)), np.zeros(d))
    else:
        s = np.asarray(shifts, dtype=float)
        if s.ndim != 2 or s.shape[1] != d:
            raise ValueError("shifts must have shape (n, d)")
        s = s - s.mean(axis=0)
        n = s.shape[0]
        h = np.broadcast_to(np.diag(eigs), (n, d, d)).copy()
        quad = 0.5 * np.sum(eigs * s * s, axis=1)
        p = QuadraticSum(h, eigs * s, quad - quad.mean())
    p.mu = float(eigs.min())
    p.l_global = float(eigs.max())
    p.f_inf = 0.0
    return p


# ---------------------------------------------------------------------------
# data-backed problems with the nonconvex regularizer lam * sum_j x_j^2/(1+x_j^2)


def _reg_value(x):
    x2 = x * x
    return float(np.sum(x2 / (1.0 + x2)))


def _reg_grad(x):
    return 2.0 * x / (1.0 + x * x) ** 2


class _DataProblem(FiniteSumProblem):
    def __init__(self, a_rows, lam):
        a = np.ascontiguousarray(a_rows, dtype=float)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("a_rows must be a nonempty 2-d array")
        if lam < 0:
            raise ValueError("lambda must be nonnegative")
        self.a = a
        self.lam = float(lam)
        self.n, self.d = a.shape
        self.row_sq = np.einsum("ij,ij->i", a, a)


class RegularizedLinReg(_DataProblem):
    """``f_i(x) = (<a_i, x> - y_i)^2 + lam * sum_j x_j^2 / (1 + x_j^2)``."""

    def __init__(self, a_rows, y, lam):
        super().__init__(a_rows, lam)
        y = np.ascontiguousarray(y, dtype=float)
        if y.shape != (self.n,):
            raise ValueError(f"y has shape {y.shape}, expected ({self.n},)")
        self.y = y
        self.l_components = 2.0 * self.row_sq + 2.0 * self.lam
        self.l_global = 2.0 * np.linalg.norm(self.a, 2) ** 2 / self.n + 2.0 * self.lam
        # each component is >= 0, and >= y_i^2 when a_i = 0
        self.f_inf_components = np.where(self.row_sq > 0, 0.0, self.y**2)
        if self.lam == 0.0:
            z, *_ = np.linalg.lstsq(self.a, self.y, rcond=None)
            r = self.a @ z - self.y
            self.f_inf = max(float(r @ r) / self.n, float(self.f_inf_components.mean()))
        else:
            self.f_inf = float(self.f_inf_components.mean())

    def component_value(self, i, x):
        x = np.asarray(x, dtype=float)
        r = self.a[i] @ x - self.y[i]
        return float(r * r) + self.lam * _reg_value(x)

    def component_grad(self, i, x):
        x = np.asarray(x, dtype=float)
        r = self.a[i] @ x - self.y[i]
        return 2.0 * r * self.a[i] + self.lam * _reg_grad(x)

    def component_grads(self, x):
        x = np.asarray(x, dtype=float)
        r = self.a @ x - self.y
        return 2.0 * r[:, None] * self.a + self.lam * _reg_grad(x)

    def value(self, x):
        return self.snapshot(x)[0]

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        r = self.a @ x - self.y
        return (2.0 / self.n) * (r @ self.a) + self.lam * _reg_grad(x)

    def weighted_grad(self, idx, w, x):
        return kernels.active.linreg_minibatch_grad(
            self.a, self.y, np.asarray(x, dtype=float), np.asarray(idx, dtype=np.int64),
            np.asarray(w, dtype=float), self.lam, self.n,
        )

    def snapshot(self, x):
        f, gsq, avg = kernels.active.linreg_snapshot(
            self.a, self.y, self.row_sq, np.asarray(x, dtype=float), self.lam
        )
        return float(f), float(gsq), float(avg)

    def component_gd_minima(self, iters):
        return kernels.active.linreg_component_gd(self.a, self.y, self.lam, self.l_components, int(iters))


class RegularizedLogReg(_DataProblem):
    """``f_i(x) = log(1 + exp(-<a_i, x>)) + lam * sum_j x_j^2 / (1 + x_j^2)``.

    Labels are expected to be folded into the rows (``a_i <- y_i a_i``).
    """

    def __init__(self, a_rows, lam):
        super().__init__(a_rows, lam)
        self.l_components = self.row_sq / 4.0 + 2.0 * self.lam
        self.l_global = float(self.l_components.mean())
        self.f_inf_components = np.zeros(self.n)
        self.f_inf = 0.0

    def component_value(self, i, x):
        x = np.asarray(x, dtype=float)
        return float(np.logaddexp(0.0, -(self.a[i] @ x))) + self.lam * _reg_value(x)

    def component_grad(self, i, x):
        x = np.asarray(x, dtype=float)
        z = self.a[i] @ x
        return -0.5 * (1.0 - np.tanh(0.5 * z)) * self.a[i] + self.lam * _reg_grad(x)

    def component_grads(self, x):
        x = np.asarray(x, dtype=float)
        s = -0.5 * (1.0 - np.tanh(0.5 * (self.a @ x)))
        return s[:, None] * self.a + self.lam * _reg_grad(x)

    def value(self, x):
        return self.snapshot(x)[0]

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        s = -0.5 * (1.0 - np.tanh(0.5 * (self.a @ x)))
        return (s @ self.a) / self.n + self.lam * _reg_grad(x)

    def weighted_grad(self, idx, w, x):
        return kernels.active.logreg_minibatch_grad(
            self.a, np.asarray(x, dtype=float), np.asarray(idx, dtype=np.int64),
            np.asarray(w, dtype=float), self.lam, self.n,
        )

    def snapshot(self, x):
        f, gsq, avg = kernels.active.logreg_snapshot(self.a, self.row_sq, np.asarray(x, dtype=float), self.lam)
        return float(f), float(gsq), float(avg)

    def component_gd_minima(self, iters):
        return kernels.active.logreg_component_gd(self.a, self.lam, self.l_components, int(iters))


def make_regularized_linreg(a_rows, y, lam) -> RegularizedLinReg:
    return RegularizedLinReg(a_rows, y, lam)


def make_regularized_logreg(a_rows, lam) -> RegularizedLogReg:
    return RegularizedLogReg(a_rows, lam)


class NodeSumProblem(FiniteSumProblem):
    """Average of whole problems, one per node (the distributed setting).

    Component ``i`` is ``nodes[i].value``; its smoothness constant and
    infimum are the node's ``l_global`` and ``f_inf``.
    """

    def __init__(self, nodes, l_global=None, f_inf=None):
        self.nodes = list(nodes)
        if not self.nodes:
            raise ValueError("need at least one node")
        dims = {p.d for p in self.nodes}
        if len(dims) != 1:
            raise ValueError(f"node dimensions disagree: {sorted(dims)}")
        self.n, self.d = len(self.nodes), dims.pop()
        self.l_components = np.array([p.l_global for p in self.nodes], dtype=float)
        self.f_inf_components = np.array([p.f_inf for p in self.nodes], dtype=float)
        self.l_global = float(self.l_components.mean()) if l_global is None else float(l_global)
        self.f_inf = float(self.f_inf_components.mean()) if f_inf is None else float(f_inf)

    def component_value(self, i, x):
        return self.nodes[i].value(x)

    def component_grad(self, i, x):
        return self.nodes[i].grad(x)


# ---------------------------------------------------------------------------
# scalar counterexample to relaxed growth


def _as_scalar(x):
    if isinstance(x, np.ndarray):
        return float(x.reshape(-1)[0])
    return x


class ScalarStochasticProblem:
    """Huber-type ``f`` with noise ``+-sqrt(|x|)`` added to the gradient.

    Satisfies expected smoothness with ``(a, b, c) = (1/2, 0, 2)`` but no
    relaxed-growth bound. ``value``, ``grad`` and ``second_moment`` avoid
    square roots so ``Fraction`` inputs give exact results.
    """

    n = 1
    d = 1
    l_global = 1.0
    f_inf = 0
    mu = None

    def value(self, x):
        x = _as_scalar(x)
        ax = abs(x)
        if ax < 1:
            return x * x / 2
        return ax - (0.5 if isinstance(ax, float) else Fraction(1, 2))

    def grad(self, x):
        x = _as_scalar(x)
        if abs(x) < 1:
            return x
        return 1 if x > 0 else -1

    def stochastic_grad(self, x, coin):
        """``grad(x) + sqrt(|x|)`` for a true coin, ``grad(x) - sqrt(|x|)`` otherwise."""
        x = _as_scalar(x)
        noise = math.sqrt(abs(float(x)))
        return float(self.grad(x)) + (noise if coin else -noise)

    def second_moment(self, x):
        """Closed-form ``E g(x)^2``."""
        x = _as_scalar(x)
        ax = abs(x)
        if ax <= 1:
            return x * x + ax
        return 1 + ax

    def es_constants(self):
        return EsConstants(0.5, 0.0, 2.0)

    # gradient-source protocol

    @property
    def problem(self):
        return self

    def sample(self, x, rng):
        coin = bool(rng.integers(2))
        return np.array([self.stochastic_grad(x, coin)]), 1

    def outcomes(self, x, max_atoms=2):
        return [(0.5, np.array([self.stochastic_grad(x, True)])),
                (0.5, np.array([self.stochastic_grad(x, False)]))]

    def snapshot(self, x):
        g = float(self.grad(x))
        return float(self.value(x)), g * g, float(self.second_moment(x))


def make_prop1_counterexample() -> ScalarStochasticProblem:
    return ScalarStochasticProblem()
