"""SGD iteration, stepsize schedules, complexity planners and bound calculators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .model import EsConstants

__all__ = [
    "StepsizePlan",
    "Snapshot",
    "RunTrace",
    "DivergenceError",
    "constant_plan",
    "lemma3_plan",
    "stepsize_at",
    "corollary1_stepsize",
    "corollary1_iterations",
    "corollary2_iterations",
    "sqrt_lak_stepsize",
    "theorem3_plan",
    "theorem4_plan",
    "theorem2_bound",
    "theorem3_bound",
    "theorem4_bound",
    "theorem4_rate_constant",
    "corollary3_rate_constant",
    "corollary3_iterations",
    "run_sgd",
]


@dataclass(frozen=True)
class StepsizePlan:
    """Either a constant stepsize or the two-phase decreasing schedule.

    The decreasing schedule uses ``1/b`` for the first ``k0 = ceil(K/2)``
    steps and ``2 / (a (s + t - k0))`` with ``s = 2b/a`` afterwards, unless
    ``K <= b/a`` in which case it stays at ``1/b``.
    """

    kind: str
    gamma: float = 0.0
    a: float = 0.0
    b: float = 0.0
    horizon: int = 0

    def __post_init__(self):
        if self.kind == "constant":
            if not self.gamma > 0:
                raise ValueError("constant stepsize must be positive")
        elif self.kind == "lemma3":
            if not (self.a > 0 and self.b > 0):
                raise ValueError("lemma3 needs a > 0 and b > 0")
            if self.a > self.b:
                raise ValueError(f"lemma3 needs a <= b, got a={self.a}, b={self.b}")
            if self.horizon < 1:
                raise ValueError("lemma3 horizon must be positive")
        else:
            raise ValueError(f"unknown plan kind {self.kind!r}")

    @property
    def k0(self):
        return math.ceil(self.horizon / 2)

    @property
    def s(self):
        return 2.0 * self.b / self.a


def constant_plan(gamma) -> StepsizePlan:
    return StepsizePlan("constant", gamma=float(gamma))


def lemma3_plan(a, b, horizon) -> StepsizePlan:
    return StepsizePlan("lemma3", a=float(a), b=float(b), horizon=int(horizon))


def stepsize_at(plan: StepsizePlan, t: int) -> float:
    if plan.kind == "constant":
        return plan.gamma
    if not 0 <= t < plan.horizon:
        raise IndexError(f"t={t} outside the horizon [0, {plan.horizon})")
    if plan.horizon <= plan.b / plan.a or t < plan.k0:
        return 1.0 / plan.b
    # t == k0 gives 2/(a s) = 1/b, so the schedule is continuous there
    return 2.0 / (plan.a * (plan.s + t - plan.k0))


def _inv(x):
    return math.inf if x == 0 else 1.0 / x


def corollary1_stepsize(es: EsConstants, l, k, eps) -> float:
    """``min{1/sqrt(L A K), 1/(L B), eps/(2 L C)}`` with zero-constant terms dropped."""
    if not (l > 0 and k >= 1 and eps > 0):
        raise ValueError("need l > 0, k >= 1, eps > 0")
    if es.a == 0 and es.b == 0 and es.c == 0:
        raise ValueError("all expected-smoothness constants are zero; the stepsize is unbounded")
    gamma = min(_inv(math.sqrt(l * es.a * k)), _inv(l * es.b), eps * _inv(2.0 * l * es.c))
    return gamma


def sqrt_lak_stepsize(es: EsConstants, l, k, scale=1.0) -> float:
    """``scale / sqrt(L A K)`` as used in the experiments (``A > 0`` required)."""
    if not es.a > 0:
        raise ValueError("sqrt(LAK) stepsize needs A > 0")
    return scale / math.sqrt(l * es.a * k)


def corollary1_iterations(es: EsConstants, l, delta0, eps) -> int:
    if not (l > 0 and eps > 0):
        raise ValueError("need l > 0 and eps > 0")
    if delta0 < 0:
        raise ValueError("delta0 must be nonnegative")
    e2 = eps * eps
    k = (12.0 * delta0 * l / e2) * max(es.b, 12.0 * delta0 * es.a / e2, 2.0 * es.c / e2)
    return max(1, math.ceil(k))


def theorem3_plan(es: EsConstants, l, mu, k) -> StepsizePlan:
    """Decreasing schedule with ``a = mu``, ``b = max{2 kappa_f A, 2 L B}``."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    kappa_f = l / mu
    b = max(2.0 * kappa_f * es.a, 2.0 * l * es.b)
    if b == 0:
        b = max(l, mu)
    return lemma3_plan(mu, max(b, mu), k)


def theorem4_plan(es: EsConstants, l, mu, k) -> StepsizePlan:
    """Decreasing schedule with ``a = mu/2``, ``b = max{4L, 4(BL + A)}``."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    b = max(4.0 * l, 4.0 * (es.b * l + es.a))
    return lemma3_plan(mu / 2.0, max(b, mu / 2.0), k)


def theorem2_bound(es: EsConstants, l, delta0, gamma, k) -> float:
    """``L C gamma + 2 (1 + L gamma^2 A)^K delta0 / (gamma K)``."""
    if es.b > 0 and gamma > 1.0 / (l * es.b) * (1 + 1e-12):
        raise ValueError(f"stepsize {gamma} exceeds 1/(L B) = {1.0 / (l * es.b)}")
    growth = math.exp(k * math.log1p(l * gamma * gamma * es.a))
    return l * es.c * gamma + 2.0 * growth * delta0 / (gamma * k)


def theorem3_bound(es: EsConstants, l, mu, delta0, k) -> float:
    """``9 kappa_f C / (2 mu K) + exp(-K / (2 kappa_f max{kappa_S, B})) delta0``."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    kappa_f, kappa_s = l / mu, es.a / mu
    denom = 2.0 * kappa_f * max(kappa_s, es.b)
    decay = 0.0 if denom == 0 else math.exp(-k / denom)
    return 9.0 * kappa_f * es.c / (2.0 * mu * k) + decay * delta0


def theorem4_rate_constant(es: EsConstants, l, mu) -> float:
    """``M = 8 max{4 kappa_f, 4 B kappa_f + kappa_S}`` from the bound statement."""
    kappa_f, kappa_s = l / mu, es.a / mu
    return 8.0 * max(4.0 * kappa_f, 4.0 * es.b * kappa_f + kappa_s)


def corollary3_rate_constant(es: EsConstants, l, mu) -> float:
    """``M = 32 B kappa_f + 8 kappa_S`` as written for the iteration count.

    Differs from :func:`theorem4_rate_constant`; both are kept as stated.
    """
    return 32.0 * es.b * l / mu + 8.0 * es.a / mu


def theorem4_bound(es: EsConstants, l, mu, r0, k) -> float:
    """``18 kappa_f C / (mu K) + (kappa_f / 2) exp(-K / M) r0``."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    kappa_f = l / mu
    m = theorem4_rate_constant(es, l, mu)
    return 18.0 * kappa_f * es.c / (mu * k) + 0.5 * kappa_f * math.exp(-k / m) * r0


def corollary2_iterations(es: EsConstants, l, mu, r0, eps) -> int:
    kappa_f, kappa_s = l / mu, es.a / mu
    log_term = math.log(2.0 * r0 / eps) if r0 > 0 else 0.0
    k = kappa_f * max(2.0 * kappa_s * log_term, 2.0 * es.b * log_term, 9.0 * es.c / (2.0 * mu * eps))
    return max(1, math.ceil(k))


def corollary3_iterations(es: EsConstants, l, mu, r0, eps) -> int:
    kappa_f = l / mu
    m = corollary3_rate_constant(es, l, mu)
    log_term = math.log(4.0 * kappa_f * r0 / eps) if r0 > 0 else 0.0
    return max(1, math.ceil(max(36.0 * kappa_f * es.c / (mu * eps), m * log_term)))


# ---------------------------------------------------------------------------
# runs


class Snapshot(NamedTuple):
    k: int
    f_value: float
    grad_norm_sq: float
    avg_stoch_grad_sq: float
    gamma: float


@dataclass
class RunTrace:
    snapshots: list = field(default_factory=list)
    seed: int | None = None
    total_oracle_calls: int = 0
    final_x: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        ks = [s.k for s in self.snapshots]
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValueError("snapshot iterations must be strictly increasing")

    def __len__(self):
        return len(self.snapshots)

    def column(self, name):
        return np.array([getattr(s, name) for s in self.snapshots], dtype=float)

    @property
    def k(self):
        return np.array([s.k for s in self.snapshots], dtype=int)

    @property
    def f(self):
        return self.column("f_value")

    @property
    def grad_sq(self):
        return self.column("grad_norm_sq")

    @property
    def avg_stoch_grad_sq(self):
        return self.column("avg_stoch_grad_sq")

    @property
    def gamma(self):
        return self.column("gamma")

    def __eq__(self, other):
        if not isinstance(other, RunTrace):
            return NotImplemented
        return (self.seed == other.seed and self.total_oracle_calls == other.total_oracle_calls
                and [tuple(s) for s in self.snapshots] == [tuple(s) for s in other.snapshots])


class DivergenceError(RuntimeError):
    def __init__(self, message, last_snapshot=None, trace=None):
        super().__init__(message)
        self.last_snapshot = last_snapshot
        self.trace = trace


def run_sgd(problem, source, plan: StepsizePlan, x0, k: int, snapshot_every: int = 1, seed=0,
            include_final=True):
    """Run ``x_{t+1} = x_t - gamma_t g(x_t)`` for ``k`` iterations.

    ``source`` provides ``sample(x, rng) -> (g, cost)``. Snapshots of
    ``problem.snapshot(x)`` are taken at iteration 0, every
    ``snapshot_every`` iterations and (with ``include_final``) at ``k``.
    Snapshot evaluations do not count as oracle calls.
    """
    if k < 1 or snapshot_every < 1:
        raise ValueError("k and snapshot_every must be positive")
    if plan.kind == "lemma3" and plan.horizon < k:
        raise ValueError(f"plan horizon {plan.horizon} shorter than k={k}")
    rng = np.random.default_rng(seed)
    x = np.array(x0, dtype=float).reshape(-1)
    if x.shape[0] != problem.d:
        raise ValueError(f"x0 has dimension {x.shape[0]}, problem has {problem.d}")

    trace = RunTrace(seed=seed)

    def record(t):
        gamma = stepsize_at(plan, min(t, k - 1))
        # overflow is reported as divergence below, not as a warning
        with np.errstate(over="ignore", invalid="ignore"):
            snap = Snapshot(t, *problem.snapshot(x), gamma)
        if not all(math.isfinite(v) for v in snap[1:4]):
            raise DivergenceError(f"non-finite snapshot at iteration {t}",
                                  trace.snapshots[-1] if trace.snapshots else None, trace)
        trace.snapshots.append(snap)

    record(0)
    for t in range(k):
        with np.errstate(over="ignore", invalid="ignore"):
            g, cost = source.sample(x, rng)
            x = x - stepsize_at(plan, t) * g
        trace.total_oracle_calls += int(cost)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"iterate became non-finite at iteration {t + 1}",
                                  trace.snapshots[-1] if trace.snapshots else None, trace)
        done = t + 1
        if done % snapshot_every == 0 or (include_final and done == k):
            record(done)
    trace.final_x = x
    return trace
