"""Electron on a plane in crossed uniform fields: parameters, spectra, operators.

Two symmetric gauges are supported. In each, the Hamiltonian splits into a
harmonic part (Landau levels, built from ladder operators ``b``, ``b'``)
and a part linear in ``d + d^dagger`` whose eigenfunctions ``phi_alpha``
carry a continuous label ``alpha``.

Operators live on a truncated Fock basis ``|0>, ..., |N-1>``. Truncation
corrupts products such as ``b b^dagger`` in the last row/column only;
functions here say which block is trustworthy instead of hiding that.
"""

import cmath
import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

__all__ = [
    "Gauge",
    "SpectrumMode",
    "PhysicalParams",
    "TruncatedBasis",
    "derive_params",
    "discrete_energy",
    "continuous_energy",
    "epsilon_of_alpha",
    "alpha_bound",
    "ladder_matrix",
    "osc_hamiltonian_matrix",
    "osc_hamiltonian_from_ladders",
    "quadrature_matrices",
    "osc_hamiltonian_from_quadratures",
    "tensor_operator",
    "commutator",
    "phi_alpha",
    "tensor_energy",
]


class Gauge(str, enum.Enum):
    """``GAUGE1``: A = (B/2 y, -B/2 x), potential -E y.
    ``GAUGE2``: A = (-B/2 y, B/2 x), potential -E x."""

    GAUGE1 = "gauge1"
    GAUGE2 = "gauge2"


class SpectrumMode(str, enum.Enum):
    """Whether ground-state energies are subtracted (``SHIFTED``) or kept."""

    SHIFTED = "shifted"
    UNSHIFTED = "unshifted"


@dataclass(frozen=True)
class PhysicalParams:
    m: float = 1.0
    hbar: float = 1.0
    e_charge: float = 1.0
    B: float = 1.0
    c: float = 1.0
    E_field: float = 0.0
    omega_c: float = field(init=False)
    lam: float = field(init=False)
    kappa: float = field(init=False)

    def __post_init__(self):
        for name in ("m", "hbar", "e_charge", "B", "c"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value!r}")
        if not self.E_field >= 0:
            raise ValueError(f"E_field must be nonnegative, got {self.E_field!r}")
        omega_c = self.e_charge * self.B / (self.m * self.c)
        object.__setattr__(self, "omega_c", omega_c)
        object.__setattr__(self, "lam", self.m * self.c * self.E_field / self.B)
        object.__setattr__(self, "kappa", self.hbar * omega_c)

    @property
    def ladder_scale(self):
        """sqrt(2 m hbar omega_c), the factor between ``b`` and ``b'``."""
        return np.sqrt(2.0 * self.m * self.hbar * self.omega_c)


def derive_params(m=1.0, hbar=1.0, e_charge=1.0, B=1.0, c=1.0, E_field=0.0):
    return PhysicalParams(m=m, hbar=hbar, e_charge=e_charge, B=B, c=c, E_field=E_field)


@dataclass(frozen=True)
class TruncatedBasis:
    """Fock cutoffs for the two oscillator indices ``n`` and ``l``."""

    N_max: int
    L_max: int

    def __post_init__(self):
        if self.N_max < 2:
            raise ValueError(f"N_max must be >= 2, got {self.N_max}")
        if self.L_max < 1:
            raise ValueError(f"L_max must be >= 1, got {self.L_max}")

    @property
    def dim(self):
        return self.N_max * self.L_max


def discrete_energy(mode, n, p):
    """Landau level energy: kappa*n when shifted, kappa*(n + 1/2) otherwise.

    Works elementwise when ``n`` is an array.
    """
    mode = SpectrumMode(mode)
    if np.any(np.asarray(n) < 0):
        raise ValueError("level index must be nonnegative")
    offset = 0.0 if mode is SpectrumMode.SHIFTED else 0.5
    return p.kappa * (np.asarray(n) + offset) if np.ndim(n) else p.kappa * (n + offset)


def epsilon_of_alpha(mode, alpha, p):
    """Dimensionless continuous label; the states use eps_minus = -epsilon >= 0."""
    mode = SpectrumMode(mode)
    eps = p.lam * alpha / (p.m * p.omega_c)
    if mode is SpectrumMode.UNSHIFTED:
        eps = eps + p.lam ** 2 / (2.0 * p.m * p.hbar * p.omega_c)
    return eps


def continuous_energy(mode, alpha, p):
    """Energy contributed by the drift sector, -hbar omega_c epsilon(alpha).

    Nonnegative exactly when ``alpha <= alpha_bound(mode, p)``.
    """
    return -p.kappa * epsilon_of_alpha(mode, alpha, p)


def alpha_bound(mode, p):
    """Largest admissible ``alpha`` for which the drift energy is nonnegative."""
    mode = SpectrumMode(mode)
    if mode is SpectrumMode.SHIFTED:
        return 0.0
    if p.lam == 0:
        raise ValueError("unshifted alpha bound is degenerate when lam = 0 (E_field = 0)")
    return -p.lam / (2.0 * p.hbar)


_LADDER_KINDS = ("b", "b_dag", "b_prime", "b_prime_dag")


def ladder_matrix(kind, N, p=None, dtype=complex):
    """Dense annihilation/creation matrix on ``N`` Fock states.

    ``b_prime`` has ``<n-1|b'|n> = sqrt(n)``; ``b`` is ``b'`` times
    ``p.ladder_scale``. The ``_dag`` kinds are conjugate transposes.
    Pass ``dtype=np.clongdouble`` when products must round back to exact
    integers (sqrt(n)**2 == n fails for some n in double precision).
    """
    if kind not in _LADDER_KINDS:
        raise ValueError(f"unknown ladder kind {kind!r}; expected one of {_LADDER_KINDS}")
    if N < 2:
        raise ValueError(f"cutoff must be >= 2, got {N}")
    real = np.longdouble if np.dtype(dtype) == np.clongdouble else float
    a = np.diag(np.sqrt(np.arange(1, N, dtype=real)), k=1).astype(dtype)
    if kind in ("b", "b_dag"):
        if p is None:
            raise ValueError("scaled ladder operators need PhysicalParams")
        a = a * np.sqrt(real(2.0) * real(p.m) * real(p.hbar) * real(p.omega_c))
    if kind.endswith("_dag"):
        a = a.conj().T
    a.setflags(write=False)
    return a


def osc_hamiltonian_matrix(N, p):
    """diag(kappa (n + 1/2)) for n < N."""
    if N < 2:
        raise ValueError(f"cutoff must be >= 2, got {N}")
    h = np.diag(p.kappa * (np.arange(N) + 0.5)).astype(complex)
    h.setflags(write=False)
    return h


def osc_hamiltonian_from_ladders(N, p, dtype=complex):
    """(b^dag b + b b^dag) / (4m); exact on indices 0..N-2 only."""
    b = ladder_matrix("b", N, p, dtype)
    bd = ladder_matrix("b_dag", N, p, dtype)
    return (bd @ b + b @ bd) / _real(dtype)(4.0 * p.m)


def _real(dtype):
    return np.longdouble if np.dtype(dtype) == np.clongdouble else float


def quadrature_matrices(N, p, dtype=complex):
    """Dimensionless position/momentum quadratures built from ``b``.

    Q = (b^dag + b) / (2 sqrt(m omega_c hbar)), P = i (b^dag - b) / (same),
    so that [Q, P] = i away from the truncation corner.
    """
    b = ladder_matrix("b", N, p, dtype)
    bd = ladder_matrix("b_dag", N, p, dtype)
    real = _real(dtype)
    scale = 2 * np.sqrt(real(p.m) * real(p.omega_c) * real(p.hbar))
    return (bd + b) / scale, 1j * (bd - b) / scale


def osc_hamiltonian_from_quadratures(N, p, dtype=complex):
    """hbar omega_c / 2 (Q^2 + P^2); trustworthy on indices 0..N-3."""
    q, pm = quadrature_matrices(N, p, dtype)
    return _real(dtype)(0.5 * p.kappa) * (q @ q + pm @ pm)


def tensor_operator(op, factor, dims):
    """Embed ``op`` into the (n, l) product space as a sparse Kronecker product.

    ``factor`` 0 acts on n (first gauge's oscillator), 1 on l. Basis order
    is row-major: |n, l> sits at index n * dims[1] + l.
    """
    n_dim, l_dim = dims
    op = sparse.csr_array(op)
    if factor == 0:
        return sparse.kron(op, sparse.eye_array(l_dim), format="csr")
    if factor == 1:
        return sparse.kron(sparse.eye_array(n_dim), op, format="csr")
    raise ValueError("factor must be 0 (n index) or 1 (l index)")


def commutator(a, b):
    return a @ b - b @ a


def phi_alpha(gauge, alpha, x, y, p):
    """Plane eigenfunction of the drift operator, a pure phase.

    gauge1: exp(i (alpha x + m omega_c x y / (2 hbar)))
    gauge2: exp(i (alpha y + m omega_c x y / (2 hbar)))
    """
    gauge = Gauge(gauge)
    linear = x if gauge is Gauge.GAUGE1 else y
    phase = alpha * linear + p.m * p.omega_c * x * y / (2.0 * p.hbar)
    if np.ndim(phase):
        return np.exp(1j * phase)
    return cmath.exp(1j * phase)


def tensor_energy(n, l, p):
    """Eigenvalues of the two commuting oscillator Hamiltonians on |n, l>."""
    if n < 0 or l < 0:
        raise ValueError("indices must be nonnegative")
    return p.kappa * (n + 0.5), p.kappa * (l + 0.5)
