"""Second-moment assumption records and conversions between them.

Every bound in the package is written in the expected-smoothness form

    E||g(x)||^2 <= 2 a (f(x) - f_inf) + b ||grad f(x)||^2 + c

and the weaker assumptions (relaxed growth, bounded variance, strong
growth, gradient confusion, sure smoothness) are mapped into it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "EsConstants",
    "RgConstants",
    "BvConstant",
    "GcConstant",
    "rg_to_es",
    "bv_to_rg",
    "gc_to_rg",
    "strong_growth_to_es",
    "sure_smooth_to_es",
    "es_rhs",
    "satisfies_es",
    "satisfies_rg",
]


def _check_nonneg(name, value):
    if not math.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be finite and nonnegative, got {value!r}")


@dataclass(frozen=True)
class EsConstants:
    """Constants ``(a, b, c)`` of the expected-smoothness bound."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        _check_nonneg("a", self.a)
        _check_nonneg("b", self.b)
        _check_nonneg("c", self.c)

    def rhs(self, f_gap, grad_sq):
        return es_rhs(self, f_gap, grad_sq)

    def as_tuple(self):
        return (self.a, self.b, self.c)


@dataclass(frozen=True)
class RgConstants:
    """Relaxed growth: ``E||g||^2 <= alpha ||grad f||^2 + beta``."""

    alpha: float
    beta: float

    def __post_init__(self):
        _check_nonneg("alpha", self.alpha)
        _check_nonneg("beta", self.beta)


@dataclass(frozen=True)
class BvConstant:
    """Bounded variance: ``E||g - grad f||^2 <= sigma_sq``."""

    sigma_sq: float

    def __post_init__(self):
        _check_nonneg("sigma_sq", self.sigma_sq)


@dataclass(frozen=True)
class GcConstant:
    """Gradient confusion: ``<grad f_i, grad f_j> >= -eta`` for ``i != j``."""

    eta: float
    n: int

    def __post_init__(self):
        _check_nonneg("eta", self.eta)
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")


def rg_to_es(rg: RgConstants) -> EsConstants:
    return EsConstants(0.0, rg.alpha, rg.beta)


def bv_to_rg(bv: BvConstant) -> RgConstants:
    # unbiasedness turns the variance bound into a second-moment bound
    return RgConstants(1.0, bv.sigma_sq)


def gc_to_rg(gc: GcConstant) -> RgConstants:
    """Relaxed-growth constants implied by gradient confusion.

    Holds for uniform single-element sampling over ``n`` summands.
    """
    return RgConstants(float(gc.n), gc.eta * (gc.n - 1))


def strong_growth_to_es(alpha: float) -> EsConstants:
    """Expected (or maximal) strong growth is relaxed growth with ``beta = 0``."""
    return rg_to_es(RgConstants(alpha, 0.0))


def sure_smooth_to_es(l: float, f_inf: float) -> EsConstants:
    """Constants implied by almost-sure ``L``-smoothness of nonnegative ``f_xi``.

    Returns ``a = 2L`` and ``c = 2L f_inf``; ``a = L`` already suffices, the
    larger value keeps the bound valid under either reading.
    """
    if not l > 0:
        raise ValueError(f"l must be positive, got {l!r}")
    if f_inf < 0:
        raise ValueError("sure smoothness requires nonnegative f_xi, so f_inf >= 0")
    return EsConstants(2.0 * l, 0.0, 2.0 * l * f_inf)


def es_rhs(es: EsConstants, f_gap, grad_sq):
    """Right-hand side ``2 a f_gap + b grad_sq + c``.

    Written with plain arithmetic so exact types such as ``Fraction`` pass
    through unchanged when the constants are rational.
    """
    return 2 * es.a * f_gap + es.b * grad_sq + es.c


def satisfies_es(es: EsConstants, f_gap, grad_sq, second_moment, tol=0.0) -> bool:
    return second_moment <= es_rhs(es, f_gap, grad_sq) + tol


def satisfies_rg(rg: RgConstants, grad_sq, second_moment, tol=0.0) -> bool:
    return second_moment <= rg.alpha * grad_sq + rg.beta + tol
