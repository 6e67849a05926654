"""Empirical diagnostics for second-moment assumptions.

Fits expected-smoothness and relaxed-growth constants to run traces by
nonnegative least squares, estimates the infima the constants depend on,
and checks stated bounds against exact or sampled second moments.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import nnls as _scipy_nnls

from .model import EsConstants
from .optimizer import RunTrace, constant_plan, run_sgd
from .problems import FiniteSumProblem, delta_inf
from .sampling import MAX_ATOMS, TooManyOutcomes

__all__ = [
    "NnlsSolution",
    "FitResult",
    "PointCheck",
    "BoundReport",
    "nnls_solve",
    "nnls_enumerate",
    "nnls_kkt_violation",
    "assemble_design",
    "fit_trace",
    "predicted_es",
    "estimate_infima",
    "verify_es_bound",
    "rg_violation_witness",
]


class NnlsSolution(NamedTuple):
    z: np.ndarray
    degenerate: bool


def _objective(w, z, b):
    r = w @ z - b
    return float(r @ r)


def nnls_solve(w, b) -> NnlsSolution:
    """``argmin_{z >= 0} ||W z - b||^2``.

    Lawson-Hanson active set (scipy) followed by an exact least-squares
    re-solve on the detected support. ``degenerate`` is set when the
    columns of that support are rank deficient, in which case the
    minimum-norm solution of the subsystem is returned.
    """
    w = np.atleast_2d(np.asarray(w, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    m, p = w.shape
    if m < 1 or b.shape[0] != m:
        raise ValueError(f"design is {w.shape}, rhs has length {b.shape[0]}")
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
        raise ValueError("design and rhs must be finite")
    z, _ = _scipy_nnls(w, b, maxiter=50 * max(p, 1))
    support = np.flatnonzero(z > 0)
    degenerate = False
    if support.size:
        sub = w[:, support]
        zs, _, rank, _ = np.linalg.lstsq(sub, b, rcond=None)
        degenerate = rank < support.size
        if np.all(zs >= 0):
            polished = np.zeros(p)
            polished[support] = zs
            if _objective(w, polished, b) <= _objective(w, z, b):
                z = polished
    return NnlsSolution(z, bool(degenerate))


def nnls_enumerate(w, b):
    """Exact NNLS by trying every support set (small ``p`` only).

    For each subset of free columns solve the unconstrained least-squares
    problem and keep the best nonnegative candidate.
    """
    w = np.atleast_2d(np.asarray(w, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    p = w.shape[1]
    best_z, best_obj = np.zeros(p), _objective(w, np.zeros(p), b)
    for size in range(1, p + 1):
        for support in itertools.combinations(range(p), size):
            cols = list(support)
            zs, *_ = np.linalg.lstsq(w[:, cols], b, rcond=None)
            if np.any(zs < 0):
                continue
            z = np.zeros(p)
            z[cols] = zs
            obj = _objective(w, z, b)
            if obj < best_obj:
                best_z, best_obj = z, obj
    return best_z


def nnls_kkt_violation(w, b, z):
    """Largest KKT violation, relative to ``||W^T b||`` (0 at an exact optimum)."""
    w = np.atleast_2d(np.asarray(w, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    grad = 2.0 * w.T @ (w @ z - b)
    scale = max(1.0, float(np.linalg.norm(2.0 * w.T @ b)))
    on_support = np.abs(grad[z > 0]).max(initial=0.0)
    at_bound = np.maximum(-grad[z <= 0], 0.0).max(initial=0.0)
    neg = np.maximum(-z, 0.0).max(initial=0.0)
    return max(on_support, at_bound) / scale + neg


# ---------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class FitResult:
    """Fitted (or predicted) constants for one model.

    ``coefficients`` is ``(2A, B, C)`` for ``es`` and ``(alpha, beta)`` for
    ``rg``; ``residual`` is the mean squared error over snapshots.
    """

    model: str
    coefficients: tuple
    residual: float
    label: str = ""
    degenerate: bool = False

    def __post_init__(self):
        want = {"es": 3, "rg": 2}.get(self.model)
        if want is None:
            raise ValueError(f"unknown model {self.model!r}")
        if len(self.coefficients) != want:
            raise ValueError(f"{self.model} needs {want} coefficients")
        if any(c < 0 for c in self.coefficients):
            raise ValueError("coefficients must be nonnegative")

    def table_row(self):
        """Coefficients in ``(2A, B, C)`` column order; RG has no ``2A``."""
        if self.model == "es":
            return self.coefficients
        return (None,) + tuple(self.coefficients)

    def es_constants(self):
        if self.model == "es":
            two_a, b, c = self.coefficients
            return EsConstants(two_a / 2.0, b, c)
        alpha, beta = self.coefficients
        return EsConstants(0.0, alpha, beta)


def assemble_design(trace: RunTrace, f_inf, model, tol=1e-9):
    """Design matrix and target for fitting a trace.

    ``es`` columns are ``(f - f_inf, ||grad f||^2, 1)``; ``rg`` columns are
    ``(||grad f||^2, 1)``. The target is the average component-gradient
    norm at each snapshot.
    """
    if len(trace) == 0:
        raise ValueError("trace is empty")
    f = trace.f
    if f_inf > f.min() + tol * max(1.0, abs(f.min())):
        raise ValueError(f"f_inf={f_inf!r} exceeds the smallest recorded loss {f.min()!r}")
    g = trace.grad_sq
    ones = np.ones_like(f)
    if model == "es":
        w = np.column_stack([f - f_inf, g, ones])
    elif model == "rg":
        w = np.column_stack([g, ones])
    else:
        raise ValueError(f"unknown model {model!r}")
    return w, trace.avg_stoch_grad_sq


def _mse(w, z, b):
    return _objective(w, z, b) / w.shape[0]


def fit_trace(trace: RunTrace, model, f_inf=None, label="") -> FitResult:
    """NNLS fit of ``model`` to ``trace``; ``f_inf`` defaults to the running minimum."""
    if f_inf is None:
        if len(trace) == 0:
            raise ValueError("trace is empty")
        f_inf = float(trace.f.min())
    w, b = assemble_design(trace, f_inf, model)
    sol = nnls_solve(w, b)
    return FitResult(model, tuple(float(v) for v in sol.z), _mse(w, sol.z, b),
                     label=label or f"{model}_fit", degenerate=sol.degenerate)


def predicted_es(trace: RunTrace, es: EsConstants, f_inf=None, label="es_predicted") -> FitResult:
    """Score theoretical constants on the same design as the ES fit."""
    if f_inf is None:
        f_inf = float(trace.f.min())
    w, b = assemble_design(trace, f_inf, "es")
    z = np.array([2.0 * es.a, es.b, es.c])
    return FitResult("es", tuple(float(v) for v in z), _mse(w, z, b), label=label)


def estimate_infima(p: FiniteSumProblem, iters: int, reference: RunTrace | None = None):
    """Estimate ``(f_inf, f_inf_components)``.

    ``f_inf`` is the smallest loss in ``reference`` (or along ``iters`` GD
    steps with stepsize ``1/L`` when no trace is given). Each component
    infimum is the smallest value along its own GD path with stepsize
    ``1/L_i``.
    """
    if iters < 1:
        raise ValueError("iters must be at least 1")
    comps = np.asarray(p.component_gd_minima(int(iters)), dtype=float)
    if not np.all(np.isfinite(comps)):
        raise FloatingPointError("component gradient descent diverged")
    if reference is None:
        from .sampling import SampledGradient, full

        reference = run_sgd(p, SampledGradient(p, full(p.n)), constant_plan(1.0 / p.l_global),
                            np.zeros(p.d), iters, snapshot_every=1)
    return float(reference.f.min()), comps


# ---------------------------------------------------------------------------
# bound checks


@dataclass(frozen=True)
class PointCheck:
    x: np.ndarray
    lhs: float
    rhs: float
    stderr: float
    exact: bool

    @property
    def slack(self):
        return self.rhs - self.lhs

    @property
    def passed(self):
        if self.exact:
            return self.slack >= -1e-12 * max(1.0, abs(self.rhs))
        return self.slack >= -4.0 * self.stderr


@dataclass
class BoundReport:
    es: EsConstants
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def min_slack(self):
        return min(c.slack for c in self.checks)


def verify_es_bound(source, points, es: EsConstants | None = None, trials=10_000, rng=None,
                    max_atoms=MAX_ATOMS, f_inf=None) -> BoundReport:
    """Compare ``E||g(x)||^2`` with the expected-smoothness bound at each point.

    Uses exact enumeration when the source's outcome space has at most
    ``max_atoms`` atoms, otherwise ``trials`` Monte Carlo draws.
    """
    if es is None:
        es = source.es_constants()
    problem = source.problem
    if f_inf is None:
        f_inf = problem.f_inf
    rng = np.random.default_rng(rng)
    report = BoundReport(es)
    for x in points:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        g = np.atleast_1d(problem.grad(x))
        rhs = es.rhs(float(problem.value(x)) - f_inf, float(g @ g))
        try:
            outs = source.outcomes(x, max_atoms)
            lhs = math.fsum(prob * float(v @ v) for prob, v in outs)
            report.checks.append(PointCheck(x, lhs, rhs, 0.0, True))
        except TooManyOutcomes:
            sq = np.empty(trials)
            for t in range(trials):
                v, _ = source.sample(x, rng)
                sq[t] = float(v @ v)
            report.checks.append(PointCheck(x, float(sq.mean()), rhs, float(sq.std(ddof=1) / math.sqrt(trials)), False))
    return report


def rg_violation_witness(alpha, beta) -> float:
    """A point where the counterexample's second moment exceeds ``alpha |f'|^2 + beta``."""
    if alpha < 0 or beta < 0:
        raise ValueError("alpha and beta must be nonnegative")
    return 2 * max(1, 2 * (alpha + beta))
