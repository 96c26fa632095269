"""Numerical certificates for the coherent-state properties.

Each ``check_*`` returns a :class:`VerificationReport` whose ``passed`` flag
is exactly ``residual <= tolerance``. Checks are deterministic: fixed
quadrature orders, no random sampling.
"""

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.special import erfc, gammaln

from . import specfun
from .model import (
    SpectrumMode,
    derive_params,
    ladder_matrix,
    osc_hamiltonian_from_ladders,
    osc_hamiltonian_from_quadratures,
    osc_hamiltonian_matrix,
    quadrature_matrices,
    tensor_operator,
)
from .specfun import ConvergenceError
from .states import (
    GAMMA_RHO,
    StateConfig,
    build_combined_cs,
    build_discrete_cs,
    default_measure,
    discrete_coefficients,
    distance,
    epsilon_grid,
    evolve,
    log_rho_discrete,
    time_evolve,
)

__all__ = [
    "Tolerances",
    "VerificationReport",
    "SuiteSettings",
    "CHECK_GROUPS",
    "check_moment_discrete",
    "check_laguerre_identity",
    "check_laguerre_grid",
    "laguerre_grid_points",
    "check_resolution_discrete",
    "check_resolution_convergence",
    "continuous_kernel",
    "check_resolution_continuous",
    "check_continuous_sinc_oracle",
    "check_cross_term",
    "check_temporal_stability",
    "printed_label_map_deviation",
    "check_commutators",
    "check_continuity",
    "check_poisson_mean",
    "run_suite",
    "reports_to_json",
]


@dataclass(frozen=True)
class Tolerances:
    moments: float = 1e-10
    laguerre: float = 1e-7
    resolution_shifted: float = 1e-9
    resolution_unshifted: float = 1e-8
    resolution_offdiag: float = 1e-12
    resolution_floor: float = 1e-13
    convergence_ratio: float = 1.0
    continuous: float = 1e-2
    sinc_oracle: float = 1e-3
    crossterm: float = 1e-12
    temporal: float = 1e-12
    commutators: float = 1e-14
    continuity: float = 1e-6
    poisson: float = 1e-9

    def override(self, **values):
        unknown = set(values) - set(asdict(self))
        if unknown:
            raise KeyError(f"unknown tolerance name(s): {', '.join(sorted(unknown))}")
        return replace(self, **{k: float(v) for k, v in values.items()})


@dataclass
class VerificationReport:
    check_name: str
    parameters: dict
    residual: float
    tolerance: float
    runtime_ms: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(self.residual <= self.tolerance)

    def to_dict(self, include_timing=False):
        out = {
            "check_name": self.check_name,
            "parameters": _plain(self.parameters),
            "residual": _json_float(self.residual),
            "tolerance": _json_float(self.tolerance),
            "pass": bool(self.passed),
            "details": _plain(self.details),
        }
        if include_timing:
            out["runtime_ms"] = self.runtime_ms
        return out

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.check_name}: residual={self.residual:.3e} tol={self.tolerance:.1e}"


def _json_float(x):
    x = float(x)
    return x if math.isfinite(x) else repr(x)


def _plain(obj):
    # numpy scalars and arrays to builtins; non-finite floats become strings
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _json_float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_json_float(obj.real), _json_float(obj.imag)]
    return obj


def _timed(fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        report = fn(*args, **kwargs)
        report.runtime_ms = 1e3 * (time.perf_counter() - start)
        return report

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# -- moment problems ----------------------------------------------------------

def _moment_rule(measure, order, kappa):
    # nodes in J and weights already containing the measure density
    if measure == "exp":
        rule = specfun.gauss_laguerre(order, 0.0)
        return rule.nodes, np.log(rule.weights)
    if measure == "gamma32":
        rule = specfun.gauss_laguerre(order, 0.5)
        return kappa * rule.nodes, np.log(rule.weights) - gammaln(1.5)
    raise ValueError(f"no Gauss rule for measure {measure!r}")


def paper_laguerre_density(J, n, kappa, mu, sigma, eta=1.5):
    """The J-measure density of the unshifted construction, taken literally
    for index ``n``."""
    J = np.atleast_1d(np.asarray(J, dtype=float))
    # 1F1 e**(-J/kappa) formed in the log domain; it decays only like a power
    log_hyp = np.array([specfun.log_hyp1f1_1_eta(eta, x / kappa) for x in J])
    prefactor = math.exp(2 * math.lgamma(n + 1) - eta * math.log(kappa) - math.lgamma(eta))
    scale = (1.0 / kappa + mu - sigma) ** n
    return (prefactor * np.exp(log_hyp - J / kappa) * J ** (eta - 1.0 - n) / scale
            * specfun.laguerre(n, eta - 1.0, (mu - sigma) * J))


@_timed
def check_moment_discrete(mode, measure, n, kappa=1.0, order=64, mu=0.0, sigma=0.0,
                          tolerance=Tolerances.moments):
    """|integral of J**n / rho(n) dnu(J) - 1| for one moment index."""
    mode = SpectrumMode(mode)
    params = {"mode": mode.value, "measure": measure, "n": n, "kappa": kappa}
    log_rho = log_rho_discrete(mode, n, kappa)
    if measure in ("exp", "gamma32"):
        params["order"] = order
        nodes, log_w = _moment_rule(measure, order, kappa)
        value = float(np.sum(np.exp(n * np.log(nodes) - log_rho + log_w)))
        return VerificationReport("moment_discrete", params, abs(value - 1.0), tolerance)
    if measure != "paper_laguerre":
        raise ValueError(f"unknown measure {measure!r}")
    params.update(mu=mu, sigma=sigma)
    rho_n = math.exp(log_rho)

    def integrand(J):
        J = np.atleast_1d(J)
        return J ** n / rho_n * paper_laguerre_density(J, n, kappa, mu, sigma)

    try:
        value = specfun.integrate_semiaxis(integrand, 1e-10, budget=600)
    except ConvergenceError as exc:
        return VerificationReport("moment_discrete", params, math.inf, tolerance,
                                  details={"diverges": True, "partial_estimate": float(exc.estimate)})
    return VerificationReport("moment_discrete", params, abs(value - 1.0), tolerance,
                              details={"value": value})


# -- Laguerre-Laplace identity ------------------------------------------------

def laguerre_identity_rhs(n, nu, mu, sigma, s, form="printed"):
    """Closed form of n! * integral t**(nu-n) e**(mu t) L_n^(nu-n)[(mu-sigma) t] e**(-s t) dt.

    ``printed``: Gamma(nu+1) (s - sigma)**n (s - mu)**(-nu-1).
    ``corrected``: Gamma(nu+1) (s - 2 mu + sigma)**n (s - mu)**(-nu-1), which is
    what the integral actually equals; the two agree when sigma = mu or n = 0.
    """
    if form == "printed":
        base = s - sigma
    elif form == "corrected":
        base = s - 2.0 * mu + sigma
    else:
        raise ValueError(f"unknown identity form {form!r}")
    return math.gamma(nu + 1.0) * base ** n * (s - mu) ** (-nu - 1.0)


def laguerre_identity_lhs(n, nu, mu, sigma, s, tol=1e-11):
    if not s > mu:
        raise ValueError(f"integral diverges: need s > mu, got s={s}, mu={mu}")
    if not nu > n - 1:
        raise ValueError(f"integral diverges at 0: need nu > n - 1, got nu={nu}, n={n}")

    def integrand(t):
        t = np.atleast_1d(t)
        return t ** (nu - n) * np.exp((mu - s) * t) * specfun.laguerre(n, nu - n, (mu - sigma) * t)

    return math.factorial(n) * specfun.integrate_semiaxis(integrand, tol, budget=20000)


@_timed
def check_laguerre_identity(n, nu, mu, sigma, s, form="printed", tolerance=Tolerances.laguerre):
    lhs = laguerre_identity_lhs(n, nu, mu, sigma, s)
    rhs = laguerre_identity_rhs(n, nu, mu, sigma, s, form)
    scale = abs(rhs) if rhs != 0 else 1.0
    return VerificationReport(
        "laguerre_identity",
        {"n": n, "nu": nu, "mu": mu, "sigma": sigma, "s": s, "form": form},
        abs(lhs - rhs) / scale, tolerance, details={"lhs": lhs, "rhs": rhs})


def laguerre_grid_points(kappa=1.0, ns=(0, 2, 5), mus=(0.0, 0.15, 0.3), eta=1.5):
    """(n, nu, mu, sigma, s) with sigma in {-0.2, 0, mu}, s = 1/kappa + mu,
    nu = n + eta - 1."""
    points = []
    for n in ns:
        for mu in mus:
            for sigma in (-0.2, 0.0, mu):
                points.append((n, n + eta - 1.0, mu, sigma, 1.0 / kappa + mu))
    return points


@_timed
def check_laguerre_grid(kappa=1.0, form="printed", tolerance=Tolerances.laguerre):
    """Worst relative residual of the identity over ``laguerre_grid_points``."""
    rows = []
    for point in laguerre_grid_points(kappa):
        rep = check_laguerre_identity(*point, form=form, tolerance=tolerance)
        rows.append({**rep.parameters, "residual": rep.residual})
    worst = max(r["residual"] for r in rows)
    failing = sum(r["residual"] > tolerance for r in rows)
    return VerificationReport("laguerre_grid", {"kappa": kappa, "form": form, "points": len(rows)},
                              worst, tolerance, details={"failing_points": failing, "points": rows})


# -- resolution of the identity -----------------------------------------------

def _phase_rule(mode, kappa, frequencies):
    # M >= 2 * frequencies + 1 equispaced nodes over one period average
    # exp(i k x) exactly for every integer |k| < M
    count = 2 * frequencies + 1
    period = 2.0 * math.pi if SpectrumMode(mode) is SpectrumMode.SHIFTED else 2.0 * math.pi / kappa
    return np.arange(count) * (period / count), np.full(count, 1.0 / count)


def assemble_discrete_resolution(mode, fixed_value=0, cutoff=20, order=64, kappa=1.0,
                                 measure=None, fixed="l", phase_nodes=None):
    """Integral of |D><D| N(J) N(J') dnu(J) dnu(J') dmu_B(gamma) dmu_B(gamma')
    over the discrete labels, as a cutoff x cutoff matrix.

    Bohr means are finite equispaced phase averages (exact for the uniformly
    spaced frequencies involved); J integrals use Gauss-Laguerre rules.
    """
    mode = SpectrumMode(mode)
    measure = measure or default_measure(mode)
    nodes, log_w = _moment_rule(measure, order, kappa)
    run_phase, run_pw = _phase_rule(mode, kappa, phase_nodes or cutoff)
    fix_phase, fix_pw = _phase_rule(mode, kappa, 1)
    if fixed == "l":
        J, gamma = nodes[:, None], run_phase[None, :]
        log_weight_run = log_w[:, None] + np.log(run_pw)[None, :]
    else:
        J, gamma = nodes[:, None], fix_phase[None, :]
        log_weight_run = log_w[:, None] + np.log(fix_pw)[None, :]
    out = np.zeros((cutoff, cutoff), dtype=complex)
    other_phases, other_pw = (fix_phase, fix_pw) if fixed == "l" else (run_phase, run_pw)
    # with fixed="n" the vectorized (J, gamma) are the fixed-index labels
    # and the loop runs over the running labels (J', gamma')
    # the N(J) N(J') factor of the measure cancels the coefficient normalization
    for Jp, log_wp in zip(nodes, log_w):
        for gp, pw in zip(other_phases, other_pw):
            c = discrete_coefficients(mode, J, gamma, Jp, gp, fixed, fixed_value, cutoff, kappa,
                                      normalized=False)
            scale = np.exp(0.5 * (log_weight_run + log_wp + math.log(pw)))
            c = (c * scale[..., None]).reshape(-1, cutoff)
            out += c.T @ c.conj()
    return out


@_timed
def check_resolution_discrete(mode, fixed_value=0, cutoff=20, order=64, kappa=1.0, measure=None,
                              fixed="l", reduction="fixed", l_cutoff=3, tolerance=None):
    """Max |T - I| of the assembled discrete resolution operator.

    ``reduction="fixed"`` checks the identity on the subspace with the fixed
    index at ``fixed_value``; ``"summed"`` assembles the fixed-index values
    0..l_cutoff-1 into one block-diagonal operator and checks it against the
    identity on the whole truncated discrete space.
    """
    mode = SpectrumMode(mode)
    measure = measure or default_measure(mode)
    if tolerance is None:
        tolerance = (Tolerances.resolution_shifted if mode is SpectrumMode.SHIFTED
                     else Tolerances.resolution_unshifted)
    values = [fixed_value] if reduction == "fixed" else list(range(l_cutoff))
    if reduction not in ("fixed", "summed"):
        raise ValueError("reduction must be 'fixed' or 'summed'")
    blocks = [assemble_discrete_resolution(mode, v, cutoff, order, kappa, measure, fixed)
              for v in values]
    residual = 0.0
    off_diag = 0.0
    for block in blocks:
        residual = max(residual, float(np.abs(block - np.eye(cutoff)).max()))
        off_diag = max(off_diag, float(np.abs(block - np.diag(np.diag(block))).max()))
    params = {"mode": mode.value, "measure": measure, "fixed": fixed, "fixed_value": fixed_value,
              "cutoff": cutoff, "order": order, "kappa": kappa, "reduction": reduction}
    if reduction == "summed":
        params["l_cutoff"] = l_cutoff
    return VerificationReport("resolution_discrete", params, residual, tolerance,
                              details={"max_off_diagonal": off_diag})


@_timed
def check_resolution_convergence(mode, orders=(32, 64, 128), cutoff=20, kappa=1.0,
                                 floor=Tolerances.resolution_floor,
                                 tolerance=Tolerances.convergence_ratio):
    """Residual must at least halve per doubling of the Gauss order, unless it
    already sits below the roundoff ``floor``.

    The reported residual is the worst ratio r(2q) / max(r(q) / 2, floor),
    to be compared with 1.
    """
    residuals = [check_resolution_discrete(mode, cutoff=cutoff, order=q, kappa=kappa).residual
                 for q in orders]
    ratios = [new / max(old / 2.0, floor) for old, new in zip(residuals, residuals[1:])]
    return VerificationReport(
        "resolution_convergence", {"mode": SpectrumMode(mode).value, "orders": list(orders),
                                   "cutoff": cutoff, "kappa": kappa, "floor": floor},
        max(ratios), tolerance, details={"residuals": residuals})


def continuous_kernel(eps, window, rho=GAMMA_RHO):
    """T_W(e, e') = rho((e+e')/2) / sqrt(rho(e) rho(e')) * sin(W (e-e')) / (pi (e-e')).

    The rho ratio is the K integral of K**((e+e')/2) sigma(K); the sinc is
    the theta average of exp(-i (e-e') theta) over [-W, W] with dtheta/2pi.
    """
    e1 = eps[:, None]
    e2 = eps[None, :]
    log_rho = rho.log_rho(eps)
    ratio = np.exp(rho.log_rho(0.5 * (e1 + e2)) - 0.5 * (log_rho[:, None] + log_rho[None, :]))
    delta = e1 - e2
    with np.errstate(invalid="ignore", divide="ignore"):
        window_delta = np.where(delta == 0, window / math.pi,
                                np.sin(window * delta) / (math.pi * np.where(delta == 0, 1.0, delta)))
    return ratio * window_delta


def _windowed_residuals(center, width, windows, eps_max, step, rho):
    n = int(round(eps_max / step)) + 1
    eps = np.linspace(0.0, eps_max, n)
    w = np.full(n, eps[1] - eps[0])
    w[0] = w[-1] = 0.5 * w[1]
    psi = np.exp(-0.5 * ((eps - center) / width) ** 2)
    norm = float(np.dot(w, psi * psi))
    wpsi = w * psi
    residuals = []
    for window in windows:
        form = float(wpsi @ continuous_kernel(eps, window, rho) @ wpsi)
        residuals.append(abs(form / norm - 1.0))
    return eps, residuals


@_timed
def check_resolution_continuous(windows=(0.5, 1.0, 2.0, 4.0, 8.0), center=2.0, width=0.5,
                                eps_max=8.0, step=0.01, rho=GAMMA_RHO,
                                tolerance=Tolerances.continuous):
    """Windowed reconstruction of delta(e - e') on a Gaussian test function.

    Residual is |<psi, T_W psi> / <psi, psi> - 1| at the largest window;
    ``details`` carries the whole sequence, whether it decreases, and the
    largest deviation of the kernel's diagonal rho factor from 1.
    """
    eps, residuals = _windowed_residuals(center, width, windows, eps_max, step, rho)
    log_rho = rho.log_rho(eps)
    diagonal = float(np.abs(np.exp(rho.log_rho(0.5 * (eps + eps)) - 0.5 * (log_rho + log_rho)) - 1.0).max())
    increases = [max(0.0, b - a) for a, b in zip(residuals, residuals[1:])]
    return VerificationReport(
        "resolution_continuous",
        {"windows": list(windows), "center": center, "width": width, "eps_max": eps_max, "step": step},
        residuals[-1], tolerance,
        details={"residuals": residuals, "monotone": not any(increases),
                 "max_increase": max(increases, default=0.0), "diagonal_factor_error": diagonal})


@_timed
def check_continuous_sinc_oracle(center=0.46, width=0.05, window=20.0, eps_max=2.0, step=0.002,
                                 rho=GAMMA_RHO, tolerance=Tolerances.sinc_oracle):
    """Near the minimum of rho the kernel is almost a pure sinc, whose
    quadratic form on a Gaussian is erf(W width); compare residuals."""
    _, (residual,) = _windowed_residuals(center, width, (window,), eps_max, step, rho)
    oracle = float(erfc(window * width))
    return VerificationReport(
        "continuous_sinc_oracle",
        {"center": center, "width": width, "window": window},
        abs(residual - oracle), tolerance, details={"residual": residual, "oracle": oracle})


# -- cross term ---------------------------------------------------------------

@_timed
def check_cross_term(config=None, labels=(1.0, 0.3, 0.5, 0.2, 1.0, 0.4), beta_nodes=64,
                     average=True, tolerance=Tolerances.crossterm):
    """Norm of the beta-averaged off-diagonal block f g e^{i beta} |D><C|.

    ``labels`` is (J, gamma, J', gamma', K, theta). With ``average=False``
    only beta = 0 is used and the residual is the block norm itself, which
    must then be large: ``details["ratio_to_fg"]`` reports it in units of f g.
    """
    config = config or StateConfig(mode=SpectrumMode.SHIFTED)
    J, gamma, Jp, gammap, K, theta = labels
    betas = np.arange(beta_nodes) * (2.0 * math.pi / beta_nodes) if average else np.array([0.0])
    weights = np.full(betas.size, 1.0 / betas.size)
    block = None
    fg = None
    for beta, w in zip(betas, weights):
        cs = build_combined_cs(J, gamma, Jp, gammap, K, theta, float(beta), config)
        # the |D><C| part of |psi><psi| is f g e^{+i beta} |D><C|
        c_bra = np.conj(np.exp(-1j * beta) * cs.continuous.values) * np.sqrt(cs.continuous.grid.weights)
        term = w * cs.f_value * cs.g_value * np.outer(cs.discrete.coeffs, c_bra)
        block = term if block is None else block + term
        fg = cs.f_value * cs.g_value
    block_norm = float(np.linalg.norm(block))
    beta_mean = abs(complex(np.dot(weights, np.exp(1j * betas))))
    residual = max(block_norm, beta_mean) if average else block_norm
    return VerificationReport(
        "cross_term", {"labels": list(labels), "beta_nodes": int(betas.size), "average": average},
        residual, tolerance if average else math.inf,
        details={"block_norm": block_norm, "beta_mean": beta_mean, "fg": fg,
                 "ratio_to_fg": block_norm / fg})


# -- temporal stability -------------------------------------------------------

def _max_coeff_deviation(a, b):
    d = np.abs(a.f_value * a.discrete.coeffs - b.f_value * b.discrete.coeffs).max()
    c = np.abs(a.g_value * np.exp(-1j * a.beta) * a.continuous.values
               - b.g_value * np.exp(-1j * b.beta) * b.continuous.values).max()
    return float(max(d, c))


@_timed
def check_temporal_stability(cs, times, p, omega=None, tolerance=Tolerances.temporal):
    """Max coefficient deviation between exp(-iHt) applied coefficientwise
    and the state rebuilt from shifted labels."""
    deviations = [_max_coeff_deviation(evolve(cs, t, p, omega), time_evolve(cs, t, p, omega))
                  for t in times]
    return VerificationReport(
        "temporal_stability",
        {"fixed": cs.discrete.fixed, "mode": cs.discrete.mode.value, "times": list(times),
         "omega": omega},
        max(deviations), tolerance, details={"deviations": deviations})


def printed_label_map_deviation(cs, t, p, omega):
    """Deviation of the exact evolution from the label map
    gamma + w t (n running) or gamma' + w t (l running), theta + w t,
    beta + omega t, i.e. with a plus sign on every shift."""
    d = cs.discrete
    step = p.omega_c * t if d.mode is SpectrumMode.SHIFTED else t / p.hbar
    gamma, gammap = (d.gamma + step, d.gammap) if d.fixed == "l" else (d.gamma, d.gammap + step)
    coeffs = discrete_coefficients(d.mode, d.J, gamma, d.Jp, gammap, d.fixed, d.fixed_value,
                                   d.cutoff, d.kappa)
    shifted = time_evolve(cs, t, p, omega)
    shifted = replace(shifted, discrete=replace(shifted.discrete, coeffs=coeffs),
                      beta=cs.beta + omega * t / p.hbar)
    return _max_coeff_deviation(evolve(cs, t, p, omega), shifted)


# -- operator algebra ---------------------------------------------------------

@_timed
def check_commutators(N=40, p=None, l_dim=None, tolerance=Tolerances.commutators):
    """Canonical commutators on the trustworthy blocks, the exact corner
    artifact of the truncated [b', b'^dagger], and commuting oscillators.

    Ladder products are formed in extended precision so that the integer
    diagonal entries round back exactly.
    """
    p = p or derive_params()
    if N < 3:
        raise ValueError("commutator checks need N >= 3")
    l_dim = l_dim or N
    ext = np.clongdouble
    a = ladder_matrix("b_prime", N, dtype=ext)
    ad = ladder_matrix("b_prime_dag", N, dtype=ext)
    unit = (a @ ad - ad @ a).astype(complex)
    b = ladder_matrix("b", N, p, dtype=ext)
    bd = ladder_matrix("b_dag", N, p, dtype=ext)
    scale = 2.0 * p.m * p.hbar * p.omega_c
    scaled = (b @ bd - bd @ b).astype(complex)
    inner = np.eye(N - 1)
    residuals = {
        "b_prime": float(np.abs(unit[:N - 1, :N - 1] - inner).max()),
        "b_scaled": float(np.abs(scaled[:N - 1, :N - 1] / scale - inner).max()),
    }
    corner = unit[N - 1, N - 1]
    corner_exact = corner == complex(1 - N)

    q, pm = quadrature_matrices(N, p, ext)
    residuals["q_p"] = float(np.abs((q @ pm - pm @ q).astype(complex)[:N - 1, :N - 1] - 1j * inner).max())
    h = osc_hamiltonian_matrix(N, p)
    h_ladder = osc_hamiltonian_from_ladders(N, p, ext).astype(complex)
    h_quad = osc_hamiltonian_from_quadratures(N, p, ext).astype(complex)
    residuals["h_ladder"] = float(np.abs((h_ladder - h)[:N - 1, :N - 1]).max()) / p.kappa
    residuals["h_quadrature"] = float(np.abs((h_quad - h)[:N - 2, :N - 2]).max()) / p.kappa
    q, pm = q.astype(complex), pm.astype(complex)

    dims = (N, l_dim)
    h1 = tensor_operator(h, 0, dims)
    h2 = tensor_operator(osc_hamiltonian_matrix(l_dim, p), 1, dims)
    q2, p2 = quadrature_matrices(l_dim, p)
    q1t, p1t = tensor_operator(q, 0, dims), tensor_operator(pm, 0, dims)
    q2t, p2t = tensor_operator(q2, 1, dims), tensor_operator(p2, 1, dims)
    cross = 0.0
    for x, y in ((h1, h2), (q1t, p2t), (q2t, p1t), (q1t, q2t), (p1t, p2t)):
        comm = (x @ y - y @ x)
        cross = max(cross, float(np.abs(comm.data).max()) if comm.nnz else 0.0)
    residuals["tensor_cross"] = cross

    worst = max(residuals.values())
    return VerificationReport(
        "commutators", {"N": N, "l_dim": l_dim},
        worst if corner_exact else math.inf, tolerance,
        details={"residuals": residuals, "corner": corner.real, "corner_expected": 1 - N,
                 "corner_exact": bool(corner_exact)})


# -- continuity and sanity ----------------------------------------------------

@_timed
def check_continuity(config=None, labels=(1.0, 0.3, 0.5, 0.2, 1.0, 0.4), beta=0.7,
                     step=(0.1, 0.1, 0.1, 0.1, 0.1, 0.1), halvings=20,
                     tolerance=Tolerances.continuity):
    """||CS(labels + step / 2**k) - CS(labels)|| for k = 0..halvings.

    Residual is the final distance, or ``inf`` when the sequence fails to
    decrease strictly.
    """
    config = config or StateConfig(mode=SpectrumMode.SHIFTED)
    labels = np.asarray(labels, dtype=float)
    step = np.asarray(step, dtype=float)
    K_max = labels[4] + abs(step[4])
    grid = epsilon_grid(K_max, config.rho)
    cutoff = config.cutoff or _cutoff_for(config, labels + np.abs(step))
    config = replace(config, grid=grid, cutoff=cutoff, tail_tol=None)
    base = build_combined_cs(*labels, beta, config)
    distances = []
    for k in range(halvings + 1):
        other = build_combined_cs(*(labels + step / 2.0 ** k), beta, config)
        distances.append(distance(other, base))
    decreasing = all(b < a for a, b in zip(distances, distances[1:]))
    return VerificationReport(
        "continuity", {"labels": labels.tolist(), "step": step.tolist(), "halvings": halvings},
        distances[-1] if decreasing else math.inf, tolerance,
        details={"distances": distances, "decreasing": decreasing})


def _cutoff_for(config, labels):
    J, _, Jp, *_ = labels
    run_J = J if config.fixed == "l" else Jp
    return build_discrete_cs(config.mode, run_J, 0.0, 0.0, 0.0, "l", 0, None, config.kappa,
                             config.tail_tol or 1e-12).cutoff


@_timed
def check_poisson_mean(J, tolerance=Tolerances.poisson):
    """Shifted states have |c_n|^2 proportional to J**n / n!: mean index J."""
    d = build_discrete_cs(SpectrumMode.SHIFTED, J, 0.0, 0.0, 0.0, tail_tol=1e-16)
    mean = d.mean_index()
    return VerificationReport("poisson_mean", {"J": J, "cutoff": d.cutoff}, abs(mean - J), tolerance,
                              details={"mean": mean})


# -- suite --------------------------------------------------------------------

CHECK_GROUPS = ("moments", "identity", "temporal", "crossterm", "commutators", "laguerre",
                "continuity", "poisson")


@dataclass(frozen=True)
class SuiteSettings:
    params: object = None
    kappa_values: tuple = (0.5, 1.0, 2.0)
    moment_max: int = 40
    moment_order: int = 64
    commutator_cutoff: int = 40
    resolution_cutoff: int = 20
    resolution_orders: tuple = (32, 64, 128)
    laguerre_form: str = "corrected"
    temporal_times: tuple = (0.1, 1.0, 10.0)
    tolerances: Tolerances = Tolerances()
    # (mu, sigma): also run the literal unshifted measure for n = 0..5
    paper_measure: tuple = None
    # constant subtracted from the drift Hamiltonian; None picks default_omega
    omega: float = None


def _suite_jobs(which, settings):
    p = settings.params or derive_params()
    tol = settings.tolerances
    jobs = []
    if "moments" in which:
        for n in range(settings.moment_max + 1):
            jobs.append((f"moments/exp/{n}", check_moment_discrete,
                         ("shifted", "exp", n), {"order": settings.moment_order, "tolerance": tol.moments}))
        for kappa in settings.kappa_values:
            for n in range(settings.moment_max + 1):
                jobs.append((f"moments/gamma32/{kappa}/{n}", check_moment_discrete,
                             ("unshifted", "gamma32", n),
                             {"kappa": kappa, "order": settings.moment_order, "tolerance": tol.moments}))
        if settings.paper_measure is not None:
            mu, sigma = settings.paper_measure
            for n in range(6):
                jobs.append((f"moments/paper_laguerre/{n}", check_moment_discrete,
                             ("unshifted", "paper_laguerre", n),
                             {"kappa": p.kappa, "mu": mu, "sigma": sigma, "tolerance": tol.moments}))
    if "identity" in which:
        for mode, t in (("shifted", tol.resolution_shifted), ("unshifted", tol.resolution_unshifted)):
            jobs.append((f"identity/discrete/{mode}", check_resolution_discrete, (mode,),
                         {"cutoff": settings.resolution_cutoff, "kappa": p.kappa, "tolerance": t}))
            jobs.append((f"identity/convergence/{mode}", check_resolution_convergence, (mode,),
                         {"orders": settings.resolution_orders, "cutoff": settings.resolution_cutoff,
                          "kappa": p.kappa, "floor": tol.resolution_floor,
                          "tolerance": tol.convergence_ratio}))
        jobs.append(("identity/continuous", check_resolution_continuous, (),
                     {"tolerance": tol.continuous}))
        jobs.append(("identity/sinc_oracle", check_continuous_sinc_oracle, (),
                     {"tolerance": tol.sinc_oracle}))
    if "temporal" in which:
        times = tuple(t / p.omega_c for t in settings.temporal_times)
        for mode in SpectrumMode:
            for fixed in ("l", "n"):
                config = StateConfig(mode=mode, kappa=p.kappa, fixed=fixed)
                cs = build_combined_cs(1.0, 0.3, 0.8, 0.2, 1.0, 0.4, 0.5, config)
                jobs.append((f"temporal/{mode.value}/{fixed}", check_temporal_stability,
                             (cs, times, p), {"omega": settings.omega, "tolerance": tol.temporal}))
    if "crossterm" in which:
        config = StateConfig(mode=SpectrumMode.SHIFTED, kappa=p.kappa)
        jobs.append(("crossterm", check_cross_term, (config,), {"tolerance": tol.crossterm}))
    if "commutators" in which:
        jobs.append(("commutators", check_commutators, (settings.commutator_cutoff, p),
                     {"tolerance": tol.commutators}))
    if "laguerre" in which:
        jobs.append(("laguerre", check_laguerre_grid, (1.0, settings.laguerre_form),
                     {"tolerance": tol.laguerre}))
    if "continuity" in which:
        config = StateConfig(mode=SpectrumMode.SHIFTED, kappa=p.kappa)
        jobs.append(("continuity", check_continuity, (config,), {"tolerance": tol.continuity}))
    if "poisson" in which:
        for J in (0.5, 2.0, 4.0):
            jobs.append((f"poisson/{J}", check_poisson_mean, (J,), {"tolerance": tol.poisson}))
    return jobs


def run_suite(which="all", settings=SuiteSettings(), workers=1):
    """Run the selected check groups; reports come back in job order."""
    if which == "all":
        selected = set(CHECK_GROUPS)
    else:
        selected = {which} if isinstance(which, str) else set(which)
        unknown = selected - set(CHECK_GROUPS)
        if unknown:
            raise ValueError(f"unknown check group(s): {', '.join(sorted(unknown))}")
    jobs = _suite_jobs(selected, settings)

    def run(job):
        name, fn, args, kwargs = job
        report = fn(*args, **kwargs)
        report.check_name = name
        return report

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, jobs))
    return [run(job) for job in jobs]


def reports_to_json(reports, include_timing=False):
    return json.dumps([r.to_dict(include_timing) for r in reports], indent=1, sort_keys=True)
