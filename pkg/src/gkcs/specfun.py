"""Special functions and semi-infinite quadrature.

Everything here is a pure function of its arguments. The log-domain
variants (``log_pochhammer``, ``log_hyp1f1_1_eta``) exist because the
weights ``rho(n) = kappa**n * (3/2)_n`` overflow a double near n = 170.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_genlaguerre

__all__ = [
    "ConvergenceError",
    "QuadratureRule",
    "log_gamma",
    "pochhammer",
    "log_pochhammer",
    "hyp1f1_1_eta",
    "hyp1f1_1_eta_series",
    "hyp1f1_1_eta_asymptotic",
    "log_hyp1f1_1_eta",
    "laguerre",
    "gauss_laguerre",
    "integrate_semiaxis",
    "integrate_interval",
]

HYP1F1_SWITCH = 30.0
_LOG_DBL_MAX = math.log(np.finfo(float).max)


class ConvergenceError(ArithmeticError):
    """A quadrature or series ran out of budget before meeting its tolerance.

    The best available estimate and its error bound travel with the
    exception so callers can decide whether it is good enough anyway.
    """

    def __init__(self, message, estimate=float("nan"), error=float("inf")):
        super().__init__(f"{message} (estimate={estimate!r}, error bound={error!r})")
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights of a 1-D quadrature rule."""

    nodes: np.ndarray
    weights: np.ndarray
    kind: str

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ValueError("nodes and weights must be 1-D arrays of equal length")
        if nodes.size > 1 and np.any(np.diff(nodes) <= 0):
            raise ValueError("quadrature nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be strictly positive")
        if self.kind not in ("gauss-laguerre", "trapezoid", "adaptive-panel"):
            raise ValueError(f"unknown quadrature kind {self.kind!r}")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return self.nodes.size

    def apply(self, values):
        return np.dot(self.weights, values)


def log_gamma(x):
    """ln Gamma(x) for x > 0."""
    if not x > 0:
        raise ValueError(f"log_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def log_pochhammer(a, n):
    """ln |(a)_n|; requires a > 0 when n is large enough to need logs."""
    n = _check_order(n)
    if n == 0:
        return 0.0
    if a > 0:
        return math.lgamma(a + n) - math.lgamma(a)
    return math.log(abs(_product(a, n)))


def pochhammer(a, n):
    """Rising factorial a (a+1) ... (a+n-1); 1 for n = 0.

    Short products are multiplied out directly. Long ones with a > 0 go
    through ``log_pochhammer`` and raise ``OverflowError`` when the value
    is not representable.
    """
    n = _check_order(n)
    if n <= 64 or a <= 0:
        return _product(a, n)
    log_value = log_pochhammer(a, n)
    if log_value > _LOG_DBL_MAX:
        raise OverflowError(f"({a})_{n} exceeds the double range; use log_pochhammer")
    return math.exp(log_value)


def _product(a, n):
    out = 1.0
    for k in range(n):
        out *= a + k
    return out


def _check_order(n):
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise ValueError(f"order must be a nonnegative integer, got {n!r}")
    return int(n)


def hyp1f1_1_eta_series(eta, x, rtol=1e-17, max_terms=10000):
    """Direct power series sum_k x**k / (eta)_k.

    All terms are positive for x >= 0, so there is no cancellation; the
    only cost is that terms grow until k ~ x.
    """
    total = 1.0
    term = 1.0
    for k in range(max_terms):
        term *= x / (eta + k)
        total += term
        if term <= rtol * total and k + eta > x:
            return total
    raise ConvergenceError("1F1(1; eta; x) series did not converge", total, term)


def _asymptotic_parts(eta, x):
    # 1F1(1; eta; x) = Gamma(eta) e^x x^(1-eta) - (eta-1)/x * sum_k c_k x^-k,
    # c_k = (eta-2)(eta-3)...(eta-1-k); the sum is divergent, so stop at its
    # smallest term.
    tail = 0.0
    term = 1.0
    previous = math.inf
    for k in range(200):
        if abs(term) >= previous:
            break
        tail += term
        previous = abs(term)
        term *= (eta - 2.0 - k) / x
        if term == 0.0:
            break
    correction = -(eta - 1.0) / x * tail
    log_leading = math.lgamma(eta) + x + (1.0 - eta) * math.log(x)
    return log_leading, correction


def hyp1f1_1_eta_asymptotic(eta, x):
    """Large-x expansion of 1F1(1; eta; x), usable for x >~ 20."""
    if x <= 0:
        raise ValueError("the asymptotic branch needs x > 0")
    log_leading, correction = _asymptotic_parts(eta, x)
    if log_leading > _LOG_DBL_MAX:
        raise OverflowError(f"1F1(1; {eta}; {x}) exceeds the double range")
    return math.exp(log_leading) + correction


def hyp1f1_1_eta(eta, x):
    """Confluent hypergeometric 1F1(1; eta; x) for eta > 0, x >= 0.

    Uses the power series up to x = 30 and the large-argument expansion
    beyond. Raises ``OverflowError`` once the result leaves the double
    range (x >~ 700); use ``log_hyp1f1_1_eta`` there.
    """
    _check_hyp_args(eta, x)
    if x <= HYP1F1_SWITCH:
        return hyp1f1_1_eta_series(eta, x)
    return hyp1f1_1_eta_asymptotic(eta, x)


def log_hyp1f1_1_eta(eta, x):
    """ln 1F1(1; eta; x), finite for every x >= 0."""
    _check_hyp_args(eta, x)
    if x <= HYP1F1_SWITCH:
        return math.log(hyp1f1_1_eta_series(eta, x))
    log_leading, correction = _asymptotic_parts(eta, x)
    return log_leading + math.log1p(correction * math.exp(-log_leading))


def _check_hyp_args(eta, x):
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta!r}")
    if not x >= 0:
        raise ValueError(f"x must be nonnegative, got {x!r}")


def laguerre(n, a, x):
    """Generalized Laguerre polynomial L_n^a(x) by the three-term recurrence.

    ``x`` may be a scalar or an array; the result has the same shape.
    """
    n = _check_order(n)
    x = np.asarray(x, dtype=float)
    previous = np.ones_like(x)
    if n == 0:
        return previous if x.ndim else float(previous)
    current = 1.0 + a - x
    for k in range(1, n):
        previous, current = current, ((2 * k + 1 + a - x) * current - (k + a) * previous) / (k + 1)
    return current if x.ndim else float(current)


@lru_cache(maxsize=64)
def gauss_laguerre(order, alpha=0.0):
    """Gauss rule for the weight x**alpha e**-x on (0, inf).

    Exact for polynomials of degree <= 2*order - 1. Weights that
    underflow to zero (far tail, order >~ 150) are dropped.
    """
    if order < 1:
        raise ValueError("quadrature order must be >= 1")
    nodes, weights = roots_genlaguerre(int(order), float(alpha))
    keep = weights > 0
    return QuadratureRule(nodes[keep], weights[keep], "gauss-laguerre")


_GL15_NODES, _GL15_WEIGHTS = np.polynomial.legendre.leggauss(15)


def _panel(f, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return half * np.dot(_GL15_WEIGHTS, f(mid + half * _GL15_NODES))


def _vectorized(f):
    def wrapped(x):
        try:
            out = f(x)
        except TypeError:
            # scalar-only callables such as math.exp
            out = 0.0
        if np.ndim(out) == 0:
            return np.array([f(xi) for xi in x], dtype=float)
        return np.asarray(out, dtype=float)

    return wrapped


def _adaptive(f, a, b, tol, budget):
    """Bisect 15-point panels on [a, b] until each panel's halves agree.

    Returns (estimate, error bound, panels used).
    """
    whole = _panel(f, a, b)
    stack = [(a, b, whole, tol)]
    total = 0.0
    error = 0.0
    used = 1
    while stack:
        lo, hi, estimate, local_tol = stack.pop()
        mid = 0.5 * (lo + hi)
        left = _panel(f, lo, mid)
        right = _panel(f, mid, hi)
        used += 2
        diff = abs(left + right - estimate)
        if diff <= local_tol or hi - lo < 1e-12 * max(1.0, abs(hi)):
            total += left + right
            error += diff
            continue
        if used > budget:
            raise ConvergenceError("adaptive quadrature exceeded its panel budget",
                                   total + left + right, error + diff)
        stack.append((lo, mid, left, 0.5 * local_tol))
        stack.append((mid, hi, right, 0.5 * local_tol))
    return total, error, used


def integrate_interval(f, a, b, tol=1e-10, budget=4000):
    """Adaptive Gauss-Legendre integral of ``f`` over the finite [a, b]."""
    f = _vectorized(f)
    rough = abs(_panel(f, a, b))
    value, error, _ = _adaptive(f, a, b, tol * max(rough, 1e-300), budget)
    if error > tol * abs(value) and error > 1e-300:
        # the rough scale was an overestimate; one refinement pass
        value, error, _ = _adaptive(f, a, b, tol * abs(value), budget)
    return value


def integrate_semiaxis(f, tol=1e-10, *, rate=None, budget=4000, max_order=256):
    """Integral of ``f`` over (0, inf).

    Parameters
    ----------
    f : callable
        Vectorized (or scalar) integrand.
    tol : float
        Target relative error.
    rate : float, optional
        Declares the integrand to be ``f(x) * exp(-rate * x)``. In that
        case ``f`` is only the smooth factor and Gauss-Laguerre rules of
        doubling order are used until two successive estimates agree.
        Without ``rate`` the axis is split into [0,1], [1,2], [2,4], ...
        and each segment is integrated with bisected 15-point panels.
    budget : int
        Panel budget for the adaptive branch.

    Raises
    ------
    ConvergenceError
        When the tolerance is not met within the budget; carries the best
        estimate and its error bound.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    f = _vectorized(f)
    if rate is not None:
        return _gauss_laguerre_integral(f, tol, rate, max_order)
    return _panel_integral(f, tol, budget)


def _gauss_laguerre_integral(f, tol, rate, max_order):
    if not rate > 0:
        raise ValueError("rate must be positive")
    previous = None
    change = math.inf
    order = 16
    while order <= max_order:
        rule = gauss_laguerre(order)
        estimate = rule.apply(f(rule.nodes / rate)) / rate
        if previous is not None:
            change = abs(estimate - previous)
            if change <= tol * abs(estimate) or estimate == previous == 0.0:
                return estimate
        previous = estimate
        order *= 2
    raise ConvergenceError("Gauss-Laguerre orders did not settle", previous, change)


def _panel_integral(f, tol, budget):
    total = 0.0
    error = 0.0
    used = 0
    quiet = 0
    lo, hi = 0.0, 1.0
    while True:
        rough = abs(_panel(f, lo, hi))
        scale = max(rough, abs(total), 1e-300)
        value, seg_error, seg_used = _adaptive(f, lo, hi, 0.25 * tol * scale, budget - used)
        total += value
        error += seg_error
        used += seg_used
        if abs(value) <= 0.05 * tol * abs(total) and hi >= 8.0:
            quiet += 1
            if quiet >= 2:
                break
        else:
            quiet = 0
        if used >= budget or hi > 1e6:
            raise ConvergenceError("semi-axis integral did not settle", total, error + abs(value))
        lo, hi = hi, 2.0 * hi
    if error > tol * abs(total) and abs(total) > 0:
        raise ConvergenceError("semi-axis integral missed its tolerance", total, error)
    return total
