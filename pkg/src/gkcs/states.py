"""Gazeau-Klauder coherent states on the Landau + drift spectrum.

A combined state is

    f(K, theta) |J, gamma; J', gamma'; l>  +  exp(-i beta) g(J, J') |K, theta>

with a discrete part over the Fock index that runs (``n`` with ``l``
fixed, or ``l`` with ``n`` fixed) and a continuous part sampled on a grid
in ``eps >= 0`` (the negated drift label).

Sign conventions, used everywhere in this package:

* the running Fock index ``n`` carries ``exp(-i n gamma)``, the fixed or
  running ``l`` carries ``exp(+i l gamma')``; in unshifted mode the
  integers are replaced by the level energies ``kappa (k + 1/2)``;
* the continuous samples carry ``exp(-i eps theta)`` (``convention="paper"``)
  or ``exp(+i eps theta)`` (``convention="conjugate"``);
* time evolution is ``exp(-i H t / hbar)`` with ``H = H_D + (H_C - Omega)``.
"""

import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, xlogy

from . import specfun
from .model import SpectrumMode, discrete_energy
from .specfun import ConvergenceError

__all__ = [
    "CutoffError",
    "IncompatibleStatesError",
    "RhoContinuous",
    "GAMMA_RHO",
    "EpsilonGrid",
    "DiscreteCS",
    "ContinuousCS",
    "CombinedCS",
    "StateConfig",
    "rho_discrete",
    "log_rho_discrete",
    "norm_const_discrete",
    "log_norm_const_discrete",
    "norm_const_partial",
    "epsilon_grid",
    "norm_const_continuous",
    "norm_const_continuous_exact",
    "discrete_coefficients",
    "build_discrete_cs",
    "build_continuous_cs",
    "log_nu_density",
    "envelope_normalizers",
    "envelopes",
    "build_combined_cs",
    "overlap",
    "distance",
    "evolve",
    "time_evolve",
    "evolved_labels",
    "default_omega",
    "state_to_dict",
    "state_from_dict",
    "dumps_state",
    "loads_state",
]


class CutoffError(ValueError):
    """The requested Fock cutoff leaves too much norm in the series tail."""


class IncompatibleStatesError(ValueError):
    pass


# -- discrete weights ---------------------------------------------------------

def log_rho_discrete(mode, n, kappa=1.0):
    """ln rho(n): ln n! (shifted) or n ln kappa + ln (3/2)_n (unshifted)."""
    mode = SpectrumMode(mode)
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise ValueError("index must be nonnegative")
    if mode is SpectrumMode.SHIFTED:
        out = gammaln(n + 1.0)
    else:
        if not kappa > 0:
            raise ValueError("kappa must be positive")
        out = n * math.log(kappa) + gammaln(n + 1.5) - gammaln(1.5)
    return out if out.ndim else float(out)


def rho_discrete(mode, n, kappa=1.0):
    """Product of the first ``n`` level energies (in units where the shifted
    spectrum is 1, 2, 3, ...): ``n!`` or ``kappa**n (3/2)_n``."""
    log_value = log_rho_discrete(mode, n, kappa)
    if np.any(np.asarray(log_value) > 709.78):
        raise OverflowError("rho(n) exceeds the double range; use log_rho_discrete")
    return np.exp(log_value) if np.ndim(log_value) else math.exp(log_value)


def log_norm_const_discrete(mode, J, kappa=1.0):
    """ln N(J): J (shifted, N = e^J) or ln 1F1(1; 3/2; J/kappa)."""
    mode = SpectrumMode(mode)
    J_arr = np.asarray(J, dtype=float)
    if np.any(J_arr < 0):
        raise ValueError("J must be nonnegative")
    if mode is SpectrumMode.SHIFTED:
        out = J_arr.copy()
    else:
        out = np.array([specfun.log_hyp1f1_1_eta(1.5, x / kappa) for x in J_arr.ravel()])
        out = out.reshape(J_arr.shape)
    return out if out.ndim else float(out)


def norm_const_discrete(mode, J, kappa=1.0):
    """N(J) = sum_n J**n / rho(n) in closed form."""
    mode = SpectrumMode(mode)
    if J < 0:
        raise ValueError("J must be nonnegative")
    if mode is SpectrumMode.SHIFTED:
        if J > 709.78:
            raise OverflowError("e**J overflows; use log_norm_const_discrete")
        return math.exp(J)
    return specfun.hyp1f1_1_eta(1.5, J / kappa)


def _term_ratio(mode, k, kappa):
    # rho(k+1) / rho(k)
    return (k + 1.0) if SpectrumMode(mode) is SpectrumMode.SHIFTED else kappa * (k + 1.5)


def norm_const_partial(mode, J, kappa, cutoff):
    """Partial sum of N(J) over ``n < cutoff`` and a bound on the rest.

    The bound is the geometric majorant from the ratio test: once the
    term ratio ``J / (rho(k+1)/rho(k))`` drops below one it only decreases.
    """
    n = np.arange(cutoff)
    terms = np.exp(xlogy(n, J) - log_rho_discrete(mode, n, kappa))
    partial = float(np.sum(terms))
    return partial, _tail_bound(mode, J, kappa, cutoff)


def _tail_bound(mode, J, kappa, cutoff):
    if J == 0:
        return 0.0
    ratio = J / _term_ratio(mode, cutoff, kappa)
    if ratio >= 1.0:
        return math.inf
    log_first = cutoff * math.log(J) - log_rho_discrete(mode, cutoff, kappa)
    return math.exp(log_first) / (1.0 - ratio)


# -- continuous weights -------------------------------------------------------

@dataclass(frozen=True)
class RhoContinuous:
    """Moment pair: rho(eps) = integral of K**eps sigma(K) dK.

    Only the Gamma pair rho(eps) = Gamma(eps + 1), sigma(K) = e**-K is
    built in; it solves the moment problem exactly.
    """

    kind: str = "gamma"

    def __post_init__(self):
        if self.kind != "gamma":
            raise ValueError(f"unsupported continuous rho {self.kind!r}")

    def log_rho(self, eps):
        return gammaln(np.asarray(eps, dtype=float) + 1.0)

    def log_sigma(self, K):
        return -np.asarray(K, dtype=float)

    def sigma(self, K):
        return np.exp(self.log_sigma(K))


GAMMA_RHO = RhoContinuous()


@dataclass(frozen=True)
class EpsilonGrid:
    """Trapezoid nodes on [0, eps_max] for the continuous label."""

    eps_max: float
    n_nodes: int = 2000
    kind: str = "trapezoid"
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.eps_max > 0:
            raise ValueError("eps_max must be positive")
        if self.n_nodes < 3:
            raise ValueError("an epsilon grid needs at least 3 nodes")
        if self.kind != "trapezoid":
            raise ValueError(f"unsupported grid kind {self.kind!r}")
        nodes = np.linspace(0.0, self.eps_max, self.n_nodes)
        h = nodes[1] - nodes[0]
        weights = np.full(self.n_nodes, h)
        weights[0] = weights[-1] = 0.5 * h
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def as_rule(self):
        return specfun.QuadratureRule(self.nodes, self.weights, "trapezoid")


def _log_continuous_integrand(K, eps, rho):
    return eps * math.log(K) - rho.log_rho(eps)


def _required_eps_max(K, rho, floor):
    # the integrand K**eps / rho(eps) is unimodal; walk past the peak until
    # it drops below floor * peak
    log_floor = math.log(floor)
    peak = -math.inf
    eps = 0.0
    step = 0.5
    while True:
        value = float(_log_continuous_integrand(K, eps, rho))
        peak = max(peak, value)
        if value < peak + log_floor:
            return eps
        eps += step
        if eps > 1e5:
            raise ConvergenceError(f"continuous integrand for K={K} does not decay", eps)


def epsilon_grid(K_max, rho=GAMMA_RHO, n_nodes=2000, floor=1e-16):
    """Grid wide enough that K**eps / rho(eps) < floor * peak at the far end
    for every K <= K_max."""
    if not K_max > 0:
        raise ValueError("K must be positive")
    return EpsilonGrid(_required_eps_max(K_max, rho, floor), n_nodes)


def norm_const_continuous(K, rho=GAMMA_RHO, grid=None, floor=1e-16):
    """N_rho(K) = integral over eps >= 0 of K**eps / rho(eps), on the grid.

    Without a grid one is chosen for this K. A supplied grid must reach
    far enough into the tail; otherwise ``ConvergenceError`` is raised.
    """
    if not K > 0:
        raise ValueError(f"K must be positive, got {K!r}")
    if grid is None:
        grid = epsilon_grid(K, rho, floor=floor)
    return _norm_const_on_grid(float(K), rho, grid, floor)


@lru_cache(maxsize=4096)
def _norm_const_on_grid(K, rho, grid, floor):
    log_f = _log_continuous_integrand(K, grid.nodes, rho)
    if log_f[-1] > log_f.max() + math.log(floor):
        raise ConvergenceError(
            f"epsilon grid ending at {grid.eps_max} truncates the K={K} integrand")
    return float(np.dot(grid.weights, np.exp(log_f)))


@lru_cache(maxsize=4096)
def norm_const_continuous_exact(K, rho=GAMMA_RHO, tol=1e-12):
    """N_rho(K) by adaptive quadrature, independent of any epsilon grid."""
    if not K > 0:
        raise ValueError(f"K must be positive, got {K!r}")
    return specfun.integrate_semiaxis(
        lambda e: np.exp(_log_continuous_integrand(K, e, rho)), tol)


# -- states -------------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteCS:
    """Discrete-sector state; ``coeffs[k]`` multiplies the basis vector with
    running index k and the fixed index held at ``fixed_value``.

    ``fixed`` is "l" (sum over n) or "n" (sum over l, the mirrored
    construction). ``full_norm_sq`` is the squared norm of the untruncated
    state and ``full_norm_sq - norm_sq <= tail_bound``.
    """

    mode: SpectrumMode
    J: float
    gamma: float
    Jp: float
    gammap: float
    fixed: str
    fixed_value: int
    kappa: float
    coeffs: np.ndarray = field(repr=False)
    tail_bound: float = 0.0
    full_norm_sq: float = 1.0

    @property
    def cutoff(self):
        return self.coeffs.size

    @property
    def norm_sq(self):
        return float(np.vdot(self.coeffs, self.coeffs).real)

    def labels(self):
        return {"J": self.J, "gamma": self.gamma, "Jp": self.Jp, "gammap": self.gammap}

    def mean_index(self):
        """Mean of the running index under |c_k|^2 (normalized)."""
        prob = np.abs(self.coeffs) ** 2
        return float(np.dot(np.arange(prob.size), prob) / prob.sum())


@dataclass(frozen=True)
class ContinuousCS:
    """Continuous-sector state sampled on ``grid``:
    c(eps) = N_rho(K)**-1/2 K**(eps/2) exp(-+ i eps theta) / sqrt(rho(eps))."""

    K: float
    theta: float
    grid: EpsilonGrid
    values: np.ndarray = field(repr=False)
    rho: RhoContinuous = GAMMA_RHO
    convention: str = "paper"

    @property
    def norm_sq(self):
        return float(np.dot(self.grid.weights, np.abs(self.values) ** 2))


@dataclass(frozen=True)
class CombinedCS:
    discrete: DiscreteCS
    continuous: ContinuousCS
    beta: float
    f_value: float
    g_value: float

    @property
    def norm_sq(self):
        return (self.f_value ** 2 * self.discrete.norm_sq
                + self.g_value ** 2 * self.continuous.norm_sq)


def _phase_energy(mode, k, kappa):
    # what multiplies the angle label in the phase: k, or kappa (k + 1/2)
    k = np.asarray(k, dtype=float)
    return k if SpectrumMode(mode) is SpectrumMode.SHIFTED else kappa * (k + 0.5)


def discrete_coefficients(mode, J, gamma, Jp, gammap, fixed, fixed_value, cutoff, kappa=1.0,
                          normalized=True):
    """Coefficient array for broadcastable label arrays.

    Returns shape ``broadcast(J, gamma, Jp, gammap).shape + (cutoff,)``.
    Everything is assembled in the log domain, so large J is safe.
    ``normalized=False`` drops the factor (N(J) N(J'))**-1/2.
    """
    mode = SpectrumMode(mode)
    if fixed not in ("l", "n"):
        raise ValueError("fixed must be 'l' or 'n'")
    J, gamma, Jp, gammap = np.broadcast_arrays(*(np.asarray(v, dtype=float)
                                                 for v in (J, gamma, Jp, gammap)))
    k = np.arange(cutoff)
    log_rho_k = log_rho_discrete(mode, k, kappa)
    log_rho_fixed = log_rho_discrete(mode, fixed_value, kappa)
    if normalized:
        log_norms = log_norm_const_discrete(mode, J, kappa) + log_norm_const_discrete(mode, Jp, kappa)
    else:
        log_norms = np.zeros(J.shape)
    if fixed == "l":
        run_J, run_angle, run_sign = J, gamma, -1.0
        fix_J, fix_angle, fix_sign = Jp, gammap, 1.0
    else:
        run_J, run_angle, run_sign = Jp, gammap, 1.0
        fix_J, fix_angle, fix_sign = J, gamma, -1.0
    log_fixed = 0.5 * (xlogy(fixed_value, fix_J) - log_rho_fixed - log_norms)
    log_mod = log_fixed[..., None] + 0.5 * (xlogy(k, run_J[..., None]) - log_rho_k)
    phase = (fix_sign * _phase_energy(mode, fixed_value, kappa) * fix_angle)[..., None] \
        + run_sign * _phase_energy(mode, k, kappa) * run_angle[..., None]
    return np.exp(log_mod + 1j * phase)


def _choose_cutoff(mode, J, kappa, tail_tol, start=2, limit=100000):
    cutoff = start
    while _tail_bound(mode, J, kappa, cutoff) > tail_tol:
        cutoff += 1
        if cutoff > limit:
            raise CutoffError(f"no cutoff below {limit} meets tail tolerance {tail_tol}")
    return cutoff


def build_discrete_cs(mode, J, gamma, Jp, gammap, fixed="l", fixed_value=0,
                      cutoff=None, kappa=1.0, tail_tol=1e-12):
    """Discrete coherent state with the running Fock index truncated.

    With ``cutoff=None`` the smallest cutoff whose tail bound is within
    ``tail_tol`` is used. An explicit cutoff that misses ``tail_tol``
    raises ``CutoffError``; pass ``tail_tol=None`` to accept any cutoff.
    """
    mode = SpectrumMode(mode)
    if J < 0 or Jp < 0:
        raise ValueError("J and J' must be nonnegative")
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    if fixed_value < 0 or int(fixed_value) != fixed_value:
        raise ValueError("fixed index must be a nonnegative integer")
    fixed_value = int(fixed_value)
    run_J, fix_J = (J, Jp) if fixed == "l" else (Jp, J)
    if cutoff is None:
        if tail_tol is None:
            raise ValueError("either cutoff or tail_tol must be given")
        cutoff = _choose_cutoff(mode, run_J, kappa, tail_tol)
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    coeffs = discrete_coefficients(mode, J, gamma, Jp, gammap, fixed, fixed_value, cutoff, kappa)
    full_norm_sq = math.exp(xlogy(fixed_value, fix_J) - log_rho_discrete(mode, fixed_value, kappa)
                            - log_norm_const_discrete(mode, fix_J, kappa))
    tail_fraction = _tail_bound(mode, run_J, kappa, cutoff)
    if math.isfinite(tail_fraction):
        tail_fraction *= math.exp(-log_norm_const_discrete(mode, run_J, kappa))
    tail = full_norm_sq * tail_fraction
    if tail_tol is not None and tail > tail_tol:
        raise CutoffError(f"cutoff {cutoff} leaves tail bound {tail:.3g} > {tail_tol:.3g}")
    coeffs.setflags(write=False)
    return DiscreteCS(mode, float(J), float(gamma), float(Jp), float(gammap), fixed,
                      fixed_value, float(kappa), coeffs, tail, full_norm_sq)


def _continuous_values(K, theta, grid, rho, convention, log_norm):
    eps = grid.nodes
    sign = -1.0 if convention == "paper" else 1.0
    log_mod = 0.5 * (eps * math.log(K) - rho.log_rho(eps) - log_norm)
    return np.exp(log_mod + 1j * sign * eps * theta)


def build_continuous_cs(K, theta, rho=GAMMA_RHO, grid=None, convention="paper"):
    """Continuous coherent state normalized in the grid's own quadrature."""
    if convention not in ("paper", "conjugate"):
        raise ValueError("convention must be 'paper' or 'conjugate'")
    if not K > 0:
        raise ValueError(f"K must be positive, got {K!r}")
    if grid is None:
        grid = epsilon_grid(K, rho)
    log_norm = math.log(norm_const_continuous(K, rho, grid))
    values = _continuous_values(K, theta, grid, rho, convention, log_norm)
    values.setflags(write=False)
    return ContinuousCS(float(K), float(theta), grid, values, rho, convention)


# -- envelopes and measures ---------------------------------------------------

def log_nu_density(measure, J, kappa=1.0):
    """Log density of the J-measure closing the discrete moment problem.

    ``exp``: e**-J (solves rho(n) = n!); ``gamma32``:
    J**(1/2) e**(-J/kappa) / (kappa**(3/2) Gamma(3/2)) (solves
    rho(n) = kappa**n (3/2)_n).
    """
    J = np.asarray(J, dtype=float)
    if measure == "exp":
        out = -J
    elif measure == "gamma32":
        out = 0.5 * np.log(J) - J / kappa - 1.5 * math.log(kappa) - gammaln(1.5)
    else:
        raise ValueError(f"unknown measure {measure!r}")
    return out if out.ndim else float(out)


def default_measure(mode):
    return "exp" if SpectrumMode(mode) is SpectrumMode.SHIFTED else "gamma32"


@lru_cache(maxsize=64)
def envelope_normalizers(mode, kappa=1.0, rho=GAMMA_RHO, measure=None):
    """(N_f, N_g) making the two envelope conditions hold.

    N_f**-2 = integral |e^{-(K^2+theta^2)/2}|^2 N_rho(K) sigma(K) dK dtheta/2pi
    N_g**-2 = [integral e^{-J^2} N(J) dnu(J)]**2 (Bohr averages of 1 are 1).
    """
    mode = SpectrumMode(mode)
    measure = measure or default_measure(mode)
    theta_factor = math.sqrt(math.pi) / (2.0 * math.pi)

    def k_integrand(K):
        return np.array([math.exp(-k * k + float(rho.log_sigma(k))) * norm_const_continuous_exact(float(k), rho)
                         if k > 0 else 0.0 for k in np.atleast_1d(K)])

    k_integral = specfun.integrate_semiaxis(k_integrand, 1e-11)
    n_f = 1.0 / math.sqrt(theta_factor * k_integral)

    def j_integrand(J):
        J = np.atleast_1d(J)
        out = np.zeros_like(J)
        pos = J > 0
        out[pos] = np.exp(-J[pos] ** 2 + log_norm_const_discrete(mode, J[pos], kappa)
                          + log_nu_density(measure, J[pos], kappa))
        return out

    j_integral = specfun.integrate_semiaxis(j_integrand, 1e-12)
    return n_f, 1.0 / j_integral


def envelopes(K, theta, J, Jp, normalizers=(1.0, 1.0)):
    """Gaussian envelope values (f, g); g does not depend on the angles."""
    n_f, n_g = normalizers
    f = n_f * math.exp(-0.5 * (K * K + theta * theta))
    g = n_g * math.exp(-0.5 * (J * J + Jp * Jp))
    return f, g


@dataclass(frozen=True)
class StateConfig:
    """Everything a combined-state build needs besides the labels."""

    mode: SpectrumMode = SpectrumMode.UNSHIFTED
    kappa: float = 1.0
    fixed: str = "l"
    fixed_value: int = 0
    cutoff: int = None
    tail_tol: float = 1e-12
    rho: RhoContinuous = GAMMA_RHO
    grid: EpsilonGrid = None
    convention: str = "paper"
    measure: str = None

    def __post_init__(self):
        object.__setattr__(self, "mode", SpectrumMode(self.mode))

    def normalizers(self):
        return envelope_normalizers(self.mode, self.kappa, self.rho, self.measure)


def build_combined_cs(J, gamma, Jp, gammap, K, theta, beta, config=StateConfig()):
    if not 0.0 <= beta < 2.0 * math.pi:
        raise ValueError(f"beta must lie in [0, 2 pi), got {beta!r}")
    discrete = build_discrete_cs(config.mode, J, gamma, Jp, gammap, config.fixed,
                                 config.fixed_value, config.cutoff, config.kappa, config.tail_tol)
    continuous = build_continuous_cs(K, theta, config.rho, config.grid, config.convention)
    f, g = envelopes(K, theta, J, Jp, config.normalizers())
    return CombinedCS(discrete, continuous, float(beta), f, g)


# -- inner products -----------------------------------------------------------

def _check_discrete_pair(a, b):
    if (a.mode, a.fixed, a.fixed_value, a.cutoff, a.kappa) != \
            (b.mode, b.fixed, b.fixed_value, b.cutoff, b.kappa):
        raise IncompatibleStatesError(
            "discrete states differ in mode, fixed index, cutoff or kappa")


def _check_continuous_pair(a, b):
    if a.grid != b.grid:
        raise IncompatibleStatesError("continuous states live on different epsilon grids")


def overlap(a, b):
    """Hermitian inner product <a|b> (antilinear in ``a``)."""
    if type(a) is not type(b):
        raise IncompatibleStatesError(f"cannot overlap {type(a).__name__} with {type(b).__name__}")
    if isinstance(a, DiscreteCS):
        _check_discrete_pair(a, b)
        return complex(np.vdot(a.coeffs, b.coeffs))
    if isinstance(a, ContinuousCS):
        _check_continuous_pair(a, b)
        return complex(np.dot(a.grid.weights, np.conj(a.values) * b.values))
    if isinstance(a, CombinedCS):
        return (a.f_value * b.f_value * overlap(a.discrete, b.discrete)
                + a.g_value * b.g_value * np.exp(1j * (a.beta - b.beta))
                * overlap(a.continuous, b.continuous))
    raise TypeError(f"not a coherent state: {type(a).__name__}")


def distance(a, b):
    """||a - b||, computed from the coefficient difference (no cancellation)."""
    if isinstance(a, DiscreteCS):
        _check_discrete_pair(a, b)
        return float(np.linalg.norm(a.coeffs - b.coeffs))
    if isinstance(a, ContinuousCS):
        _check_continuous_pair(a, b)
        diff = a.values - b.values
        return math.sqrt(float(np.dot(a.grid.weights, np.abs(diff) ** 2)))
    _check_discrete_pair(a.discrete, b.discrete)
    _check_continuous_pair(a.continuous, b.continuous)
    d = a.f_value * a.discrete.coeffs - b.f_value * b.discrete.coeffs
    c = (a.g_value * np.exp(-1j * a.beta) * a.continuous.values
         - b.g_value * np.exp(-1j * b.beta) * b.continuous.values)
    return math.sqrt(float(np.vdot(d, d).real)
                     + float(np.dot(a.continuous.grid.weights, np.abs(c) ** 2)))


# -- time evolution -----------------------------------------------------------

def default_omega(p, cutoff):
    """kappa (cutoff + 1): bounds the shifted discrete energies kept."""
    return p.kappa * (cutoff + 1)


def _check_kappa(cs_kappa, p):
    if not math.isclose(cs_kappa, p.kappa, rel_tol=1e-12):
        raise ValueError(f"state built with kappa={cs_kappa} but params give kappa={p.kappa}")


def evolve(cs, t, p, omega=None):
    """Apply exp(-i H t / hbar) coefficientwise.

    H_D acts on the running index with the level energies of the state's
    mode; H_C multiplies the sample at eps by hbar omega_c eps; ``omega``
    is subtracted from H_C (``None`` picks ``default_omega``).
    """
    if isinstance(cs, DiscreteCS):
        _check_kappa(cs.kappa, p)
        energies = discrete_energy(cs.mode, np.arange(cs.cutoff), p)
        coeffs = cs.coeffs * np.exp(-1j * energies * t / p.hbar)
        coeffs.setflags(write=False)
        return replace(cs, coeffs=coeffs)
    if isinstance(cs, ContinuousCS):
        values = cs.values * np.exp(-1j * p.omega_c * cs.grid.nodes * t)
        values.setflags(write=False)
        return replace(cs, values=values)
    if isinstance(cs, CombinedCS):
        if omega is None:
            omega = default_omega(p, cs.discrete.cutoff)
        continuous = evolve(cs.continuous, t, p)
        # the e^{+i omega t / hbar} from (H_C - omega) is folded into the
        # continuous samples so the stored beta stays the construction label
        values = continuous.values * np.exp(1j * omega * t / p.hbar)
        values.setflags(write=False)
        return replace(cs, discrete=evolve(cs.discrete, t, p),
                       continuous=replace(continuous, values=values))
    raise TypeError(f"not a coherent state: {type(cs).__name__}")


def evolved_labels(cs, t, p, omega=None):
    """Label shifts equivalent to ``evolve``.

    Returns a dict with the keys that change: for the n-running
    construction gamma -> gamma + s, for the l-running one
    gammap -> gammap - s, with s = omega_c t (shifted) or t / hbar
    (unshifted); theta -> theta + omega_c t ("paper" convention, minus for
    "conjugate"); beta -> beta - omega t / hbar.
    """
    out = {}
    if isinstance(cs, (DiscreteCS, CombinedCS)):
        d = cs if isinstance(cs, DiscreteCS) else cs.discrete
        step = p.omega_c * t if d.mode is SpectrumMode.SHIFTED else t / p.hbar
        if d.fixed == "l":
            out["gamma"] = d.gamma + step
        else:
            out["gammap"] = d.gammap - step
    if isinstance(cs, (ContinuousCS, CombinedCS)):
        c = cs if isinstance(cs, ContinuousCS) else cs.continuous
        sign = 1.0 if c.convention == "paper" else -1.0
        out["theta"] = c.theta + sign * p.omega_c * t
    if isinstance(cs, CombinedCS):
        if omega is None:
            omega = default_omega(p, cs.discrete.cutoff)
        out["beta"] = cs.beta - omega * t / p.hbar
    return out


def time_evolve(cs, t, p, omega=None):
    """The evolved state rebuilt from shifted labels.

    Envelope values f, g are carried over unchanged: the evolution acts on
    the sector states, not on the scalar weights. ``beta`` is not wrapped
    into [0, 2 pi).
    """
    shifts = evolved_labels(cs, t, p, omega)
    if isinstance(cs, DiscreteCS):
        return _rebuild_discrete(cs, shifts)
    if isinstance(cs, ContinuousCS):
        return _rebuild_continuous(cs, shifts["theta"])
    return replace(cs, discrete=_rebuild_discrete(cs.discrete, shifts),
                   continuous=_rebuild_continuous(cs.continuous, shifts["theta"]),
                   beta=shifts["beta"])


def _rebuild_discrete(d, shifts):
    gamma = shifts.get("gamma", d.gamma)
    gammap = shifts.get("gammap", d.gammap)
    coeffs = discrete_coefficients(d.mode, d.J, gamma, d.Jp, gammap, d.fixed,
                                   d.fixed_value, d.cutoff, d.kappa)
    coeffs.setflags(write=False)
    return replace(d, gamma=float(gamma), gammap=float(gammap), coeffs=coeffs)


def _rebuild_continuous(c, theta):
    return build_continuous_cs(c.K, theta, c.rho, c.grid, c.convention)


# -- JSON export --------------------------------------------------------------

def _pairs(z):
    return [[float(v.real), float(v.imag)] for v in z]


def _complex_array(pairs):
    arr = np.array([complex(re, im) for re, im in pairs], dtype=complex)
    arr.setflags(write=False)
    return arr


def state_to_dict(cs):
    """JSON-ready dict of a combined state. Floats survive ``json`` exactly."""
    if not isinstance(cs, CombinedCS):
        raise TypeError("only combined states are exported")
    d, c = cs.discrete, cs.continuous
    return {
        "mode": d.mode.value,
        "labels": {"J": d.J, "gamma": d.gamma, "Jp": d.Jp, "gammap": d.gammap,
                   "K": c.K, "theta": c.theta},
        "fixed": d.fixed,
        "fixed_value": d.fixed_value,
        "kappa": d.kappa,
        "tail_bound": d.tail_bound,
        "full_norm_sq": d.full_norm_sq,
        "coeffs": _pairs(d.coeffs),
        "grid": {"kind": c.grid.kind, "eps_max": c.grid.eps_max,
                 "nodes": [float(x) for x in c.grid.nodes],
                 "weights": [float(w) for w in c.grid.weights]},
        "rho": c.rho.kind,
        "convention": c.convention,
        "values": _pairs(c.values),
        "beta": cs.beta,
        "f": cs.f_value,
        "g": cs.g_value,
    }


def state_from_dict(doc):
    grid = EpsilonGrid(doc["grid"]["eps_max"], len(doc["grid"]["nodes"]), doc["grid"]["kind"])
    if list(grid.nodes) != doc["grid"]["nodes"] or list(grid.weights) != doc["grid"]["weights"]:
        raise ValueError("stored grid does not match the grid its parameters generate")
    labels = doc["labels"]
    discrete = DiscreteCS(SpectrumMode(doc["mode"]), labels["J"], labels["gamma"], labels["Jp"],
                          labels["gammap"], doc["fixed"], doc["fixed_value"], doc["kappa"],
                          _complex_array(doc["coeffs"]), doc["tail_bound"], doc["full_norm_sq"])
    continuous = ContinuousCS(labels["K"], labels["theta"], grid, _complex_array(doc["values"]),
                              RhoContinuous(doc["rho"]), doc["convention"])
    return CombinedCS(discrete, continuous, doc["beta"], doc["f"], doc["g"])


def dumps_state(cs):
    return json.dumps(state_to_dict(cs), sort_keys=True, indent=1)


def loads_state(text):
    return state_from_dict(json.loads(text))
