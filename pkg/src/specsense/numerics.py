"""Special functions and a monotone root solver used by the strategy modules."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from scipy import integrate


class NumericalError(RuntimeError):
    """Quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, partial: float, error_estimate: float):
        super().__init__(message)
        self.partial = partial
        self.error_estimate = error_estimate


class BracketError(ValueError):
    def __init__(self, message: str, f_lo: float, f_hi: float):
        super().__init__(message)
        self.f_lo = f_lo
        self.f_hi = f_hi


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-13
    rel_tol: float = 1e-11
    max_subdivisions: int = 200

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be positive")


@dataclass(frozen=True)
class RootBracket:
    lo: float
    hi: float
    tol: float = 1e-12

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"bracket requires lo < hi, got [{self.lo}, {self.hi}]")
        if self.tol <= 0:
            raise ValueError("bracket tolerance must be positive")


DEFAULT_QUADRATURE = QuadratureConfig()


def phi(t: float, a: float, b: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Integral of exp(-h - t / (a + b h)) over h in [0, inf).

    The integrand is bounded by exp(-h), so the tail beyond
    h_max = -ln(abs_tol / 10) contributes less than abs_tol / 10 and is dropped.
    """
    if t < 0 or a <= 0 or b < 0:
        raise ValueError(f"phi requires t >= 0, a > 0, b >= 0 (got t={t}, a={a}, b={b})")
    if t == 0:
        return 1.0
    if b == 0:
        return math.exp(-t / a)
    h_max = -math.log(cfg.abs_tol / 10.0)

    def integrand(h):
        return math.exp(-h - t / (a + b * h))

    value, err = integrate.quad(integrand, 0.0, h_max, epsabs=cfg.abs_tol,
                                epsrel=cfg.rel_tol, limit=cfg.max_subdivisions)
    if err > max(cfg.abs_tol, cfg.rel_tol * abs(value)) * 10:
        raise NumericalError(
            f"phi({t}, {a}, {b}) did not converge: estimate {value}, error {err}", value, err)
    return value


def erlang_survival(n: int, x: float) -> float:
    """P(Gamma(n, 1) > x) = exp(-x) * sum_{k<n} x^k / k!.

    Terms are accumulated in log space so large n*x neither overflows nor
    underflows prematurely.
    """
    if n < 1 or int(n) != n:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x!r}")
    if x == 0:
        return 1.0
    log_x = math.log(x)
    log_terms = [k * log_x - math.lgamma(k + 1) - x for k in range(int(n))]
    peak = max(log_terms)
    return min(1.0, math.exp(peak) * math.fsum(math.exp(v - peak) for v in log_terms))


def binomial_tail_exceeds_half(n: int, p: float) -> float:
    """P(Binomial(n, p) > floor(n / 2)); ties on even n count as no detection."""
    if n < 0 or int(n) != n:
        raise ValueError(f"n must be a nonnegative integer, got {n!r}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    n = int(n)
    if n == 0:
        return 0.0
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    q = 1.0 - p
    total = math.fsum(math.comb(n, k) * p ** k * q ** (n - k) for k in range(n // 2 + 1, n + 1))
    return min(1.0, max(0.0, total))


def solve_monotone_decreasing(f: Callable[[float], float], target: float,
                              bracket: RootBracket, max_iter: int = 400) -> float:
    """Bisection for f(x) = target with f strictly decreasing on the bracket."""
    lo, hi = bracket.lo, bracket.hi
    f_lo, f_hi = f(lo), f(hi)
    if f_lo < target or f_hi > target:
        raise BracketError(
            f"target {target} not bracketed: f({lo})={f_lo}, f({hi})={f_hi}", f_lo, f_hi)
    for _ in range(max_iter):
        if hi - lo <= bracket.tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def expanding_bracket(f: Callable[[float], float], target: float, lo: float = 0.0,
                      hi: float = 1.0, tol: float = 1e-12, limit: float = 1e8) -> RootBracket:
    """Grow `hi` geometrically until f(hi) <= target."""
    while f(hi) > target:
        hi *= 2.0
        if hi > limit:
            raise BracketError(f"no upper bracket below {limit} for target {target}",
                               f(lo), f(hi))
    return RootBracket(lo, hi, tol)
