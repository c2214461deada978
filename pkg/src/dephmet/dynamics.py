"""States, probes, and exact time evolution under commuting dephasing.

For a Hamiltonian and Lindblad operators that are all diagonal in the same
basis, every density-matrix entry evolves independently:

    rho_ij(t) = rho_ij(0) * exp((-i*x1*eps_ij/hbar - x2*lambda2_ij/2) * t)

which is what ``evolve_dephasing`` applies.  ``two_level_state`` is the
closed-form 2x2 restriction used by the max-variance probes.
"""

import math
from dataclasses import dataclass

import numpy as np

from .basis import DiagonalOperatorSet, PairRates, SpinBasis
from .errors import DegenerateProbeError

__all__ = [
    "DensityMatrix",
    "MaxVariance",
    "Ghz",
    "Product",
    "IsingMaxVariance",
    "ProbeSpec",
    "TwoLevelProbe",
    "make_probe",
    "evolve_dephasing",
    "two_level_state",
    "fidelity",
    "purity",
]


class DensityMatrix:
    """Dense Hermitian unit-trace matrix.

    Hermiticity and trace are checked at construction; positivity is a
    runtime property of the dynamics and is asserted where tests need it
    (``min_eigenvalue``), not on every construction.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix: np.ndarray, check: bool = True,
                 herm_tol: float = 1e-10, trace_tol: float = 1e-12):
        m = np.asarray(matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        if check:
            scale = max(1.0, float(np.abs(m).max()))
            herm_dev = float(np.abs(m - m.conj().T).max())
            if herm_dev > herm_tol * scale:
                raise ValueError(f"matrix is not Hermitian (max deviation {herm_dev:.3e})")
            tr_dev = abs(m.trace() - 1.0)
            if tr_dev > trace_tol:
                raise ValueError(f"trace deviates from 1 by {tr_dev:.3e}")
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(self.matrix.trace().real)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues()[0])

    @classmethod
    def from_state_vector(cls, psi: np.ndarray) -> "DensityMatrix":
        v = np.asarray(psi, dtype=np.complex128)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()), check=False)


# --------------------------------------------------------------------------
# Probe specifications
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MaxVariance:
    """Equal superposition of the extremal eigenstates of the Hamiltonian."""


@dataclass(frozen=True)
class Ghz:
    """Equal superposition of the all-down and all-up product states."""


@dataclass(frozen=True)
class Product:
    """Site-wise cos(phi)|+> + sin(phi)|->, so <sigma^z> = cos(2*phi).

    phi = pi/4 is allowed but the variance scaling degrades there; the
    ``is_singular`` flag is surfaced in reports.
    """

    phi: float

    def __post_init__(self):
        if not 0.0 < self.phi < math.pi / 2:
            raise ValueError(f"phi={self.phi} outside (0, pi/2)")

    @property
    def is_singular(self) -> bool:
        return abs(self.phi - math.pi / 4) < 1e-12


@dataclass(frozen=True)
class IsingMaxVariance:
    """Superposition of |v_0> and |v_{floor(N/2)}>, the pair that maximizes
    the energy difference within the reference family for pair couplings
    with degenerate aligned ground states."""


ProbeSpec = MaxVariance | Ghz | Product | IsingMaxVariance


def make_probe(spec: ProbeSpec, basis: SpinBasis, diag: DiagonalOperatorSet) -> DensityMatrix:
    """Build the pure probe state as a density matrix."""
    dim = basis.dim
    h = diag.hamiltonian_diag
    psi = np.zeros(dim, dtype=np.complex128)

    if isinstance(spec, Ghz):
        i0, i1 = 0, dim - 1
        if abs(h[i0] - h[i1]) <= 1e-12 * max(1.0, abs(h[i0])):
            raise DegenerateProbeError(
                "the two GHZ branches have equal energy; use an "
                "IsingMaxVariance-style construction instead"
            )
        psi[i0] = psi[i1] = 1.0 / math.sqrt(2.0)
    elif isinstance(spec, MaxVariance):
        i0 = int(np.argmin(h))
        i1 = int(np.argmax(h))
        if abs(h[i1] - h[i0]) <= 1e-12 * max(1.0, abs(h[i1])):
            raise DegenerateProbeError(
                "Hamiltonian spectrum is flat (E_min = E_max); no variance to "
                "maximize. Use an IsingMaxVariance-style construction."
            )
        psi[i0] = psi[i1] = 1.0 / math.sqrt(2.0)
    elif isinstance(spec, IsingMaxVariance):
        i0 = basis.reference_state(0)
        i1 = basis.reference_state(basis.n_sites // 2)
        psi[i0] = psi[i1] = 1.0 / math.sqrt(2.0)
    elif isinstance(spec, Product):
        q = basis.plus_counts()
        amp = (math.cos(spec.phi) ** q) * (math.sin(spec.phi) ** (basis.n_sites - q))
        psi = amp.astype(np.complex128)
    else:
        raise TypeError(f"unknown probe spec {spec!r}")

    return DensityMatrix.from_state_vector(psi)


def evolve_dephasing(rho0: DensityMatrix, rates: PairRates, x1: float, x2: float,
                     t: float, hbar: float = 1.0) -> DensityMatrix:
    """Exact entrywise evolution under the commuting dephasing generator."""
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    if x2 < 0:
        raise ValueError(f"dissipative coupling must be nonnegative, got {x2}")
    if rho0.dim != rates.dim:
        raise ValueError(f"state dim {rho0.dim} does not match rates dim {rates.dim}")
    kernel = np.exp((-1j * (x1 / hbar) * rates.eps - 0.5 * x2 * rates.lambda_sq) * t)
    return DensityMatrix(rho0.matrix * kernel, check=False)


# --------------------------------------------------------------------------
# Reduced two-level picture of a max-variance probe
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TwoLevelProbe:
    """Effective two-level data of a max-variance probe.

    eps is the energy seminorm E_max - E_min of the generator; lambda_sq
    is sum_nu (lambda_max^nu - lambda_min^nu)^2.  tau_z and tau_d follow
    the standard definitions; tau_d is +inf when nothing dephases.
    """

    eps: float
    lambda_sq: float
    x1: float = 1.0
    x2: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if self.eps < 0 or self.lambda_sq < 0:
            raise ValueError("eps and lambda_sq must be nonnegative")
        if self.x2 < 0:
            raise ValueError("x2 must be nonnegative")

    @property
    def tau_z(self) -> float:
        if self.x1 == 0 or self.eps == 0:
            return math.inf
        return self.hbar / (self.x1 * self.eps)

    @property
    def tau_d(self) -> float:
        if self.x2 == 0 or self.lambda_sq == 0:
            return math.inf
        return 4.0 / (self.x2 * self.lambda_sq)


def two_level_state(probe: TwoLevelProbe, t: float) -> DensityMatrix:
    """rho(t) on the (|E_min>, |E_max>) block.

    With row order (min, max) the coherence carries phase +eps*t*x1/hbar
    and magnitude exp(-2t/tau_d); eigenvalues are (1 +- exp(-2t/tau_d))/2.
    """
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    exponent = (1j * probe.x1 * probe.eps / probe.hbar - 0.5 * probe.x2 * probe.lambda_sq) * t
    off = 0.5 * np.exp(exponent)
    m = np.array([[0.5, off], [np.conj(off), 0.5]], dtype=np.complex128)
    return DensityMatrix(m, check=False)


def fidelity(rho_t: DensityMatrix, rho0: DensityMatrix) -> float:
    """Trace overlap tr(rho_t rho_0)."""
    if rho_t.dim != rho0.dim:
        raise ValueError(f"dimension mismatch: {rho_t.dim} vs {rho0.dim}")
    return float(np.tensordot(rho_t.matrix, rho0.matrix.T, axes=2).real)


def purity(rho_t: DensityMatrix) -> float:
    """tr(rho^2)."""
    m = rho_t.matrix
    return float(np.tensordot(m, m.T, axes=2).real)
