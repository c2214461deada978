"""Quantum Fisher information: spectral sum, bound sandwich, closed forms.

The spectral sum runs over eigenpairs of rho with the nearly-null pairs
excluded (they carry no information and would divide by ~0):

    F = sum_{n,n'} 4 * xi_n * |<xi_n| drho |xi_n'>|^2 / (xi_n + xi_n')^2

The sandwich coefficients c_m, c_M multiply 4 t^2 Var(H) / hbar^2.  When
the spectrum of rho is degenerate the generic lower coefficient collapses
to zero; in that case a sharper bound built from the top eigenvector is
substituted (see ``qfi_bounds``) and flagged in the result.
"""

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import DensityMatrix, TwoLevelProbe

__all__ = [
    "EIG_PAIR_CUTOFF",
    "QfiBounds",
    "QfiReport",
    "spectral_qfi",
    "qfi_bounds",
    "analytic_qfi",
    "qcrb",
    "qfi_offdiagonal",
]

EIG_PAIR_CUTOFF = 1e-12
_DEGENERACY_RTOL = 1e-9


def _check_hermitian_traceless(drho: np.ndarray, name: str) -> np.ndarray:
    m = np.asarray(drho, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max()))
    if float(np.abs(m - m.conj().T).max()) > 1e-10 * scale:
        raise ValueError(f"{name} must be Hermitian")
    if abs(m.trace()) > 1e-10 * scale:
        raise ValueError(f"{name} must be traceless (it is a derivative of a unit-trace state)")
    return m


def spectral_qfi(rho: DensityMatrix, drho: np.ndarray,
                 eig_cutoff: float = EIG_PAIR_CUTOFF) -> float:
    """QFI of the parameter whose state derivative is ``drho``."""
    m = _check_hermitian_traceless(drho, "drho")
    if m.shape[0] != rho.dim:
        raise ValueError(f"drho dim {m.shape[0]} does not match state dim {rho.dim}")
    xi, vecs = np.linalg.eigh(rho.matrix)
    xi = np.clip(xi, 0.0, None)
    elems = vecs.conj().T @ m @ vecs
    pair_sum = xi[:, None] + xi[None, :]
    mask = pair_sum > eig_cutoff
    weights = np.where(mask, 4.0 * xi[:, None] / np.where(mask, pair_sum, 1.0) ** 2, 0.0)
    return float(np.sum(weights * np.abs(elems) ** 2))


@dataclass(frozen=True)
class QfiBounds:
    """Sandwich around the QFI of the Hamiltonian coupling.

    c_gap is the (unsquared) contrast of the positive spectrum, zero modes
    dropped: (xi_max - xi_min+)/(xi_max + xi_min+).  It is not part of the
    sandwich; its late-time log-slope equals minus the slowest dephasing
    rate gamma*Lambda_1^2/2, the decay law the degenerate-case analysis
    assigns to the coefficients.
    """

    lower: float
    upper: float
    c_m: float
    c_M: float
    variance_h: float
    c_gap: float = 1.0
    improved_lower: bool = False        # degenerate spectrum, top-row bound used


def _diag_variance(h_diag: np.ndarray, populations: np.ndarray) -> float:
    mean = float(np.dot(populations, h_diag))
    mean_sq = float(np.dot(populations, h_diag ** 2))
    return max(mean_sq - mean ** 2, 0.0)


def qfi_bounds(rho: DensityMatrix, h_diag: np.ndarray, x1: float, t: float,
               hbar: float = 1.0, eig_cutoff: float = EIG_PAIR_CUTOFF) -> QfiBounds:
    """Lower/upper bounds c * 4 t^2 Var_rho(H) / hbar^2 on the QFI of x1.

    ``h_diag`` is the eigenvalue table of the (diagonal) Hamiltonian in the
    computational basis; ``x1`` is accepted for interface symmetry but the
    bound itself does not depend on it.

    Both bound routes are exact minorants/majorants of the spectral sum:
    the generic lower coefficient multiplies the variance with the
    eigenbasis-diagonal weight removed (that weight never contributes to
    the QFI), and when the spectrum is degenerate the top-eigenvector row
    of the spectral sum is evaluated directly instead of being loosened
    through a next-distinct-eigenvalue coefficient.
    """
    h = np.asarray(h_diag, dtype=np.float64)
    if h.shape != (rho.dim,):
        raise ValueError(f"h_diag has shape {h.shape}, state dim is {rho.dim}")
    del x1

    populations = np.clip(np.diagonal(rho.matrix).real, 0.0, None)
    variance_h = _diag_variance(h, populations)
    base = 4.0 * t * t * variance_h / (hbar * hbar)
    prefactor = 4.0 * t * t / (hbar * hbar)

    xi, vecs = np.linalg.eigh(rho.matrix)
    xi = np.clip(xi, 0.0, None)
    xi_min, xi_max = float(xi[0]), float(xi[-1])
    c_upper = ((xi_max - xi_min) / (xi_max + xi_min)) ** 2 if xi_max > 0 else 0.0

    # shifted Hamiltonian in the eigenbasis of rho
    mean_h = float(np.dot(populations, h))
    centered = h - mean_h
    diag_elems = np.einsum("in,i,in->n", vecs.conj(), centered, vecs).real
    diag_weight = float(np.dot(xi, diag_elems ** 2))
    variance_off = max(variance_h - diag_weight, 0.0)

    positive = xi[xi > eig_cutoff]
    c_gap = 1.0
    if positive.size >= 2 and positive[-1] > 0:
        c_gap = (positive[-1] - positive[0]) / (positive[-1] + positive[0])

    if positive.size < 2:
        # effectively pure: every contributing pair has ratio 0
        lower = prefactor * variance_off
        return QfiBounds(lower=lower, upper=c_upper * base,
                         c_m=lower / base if base > 0 else 1.0,
                         c_M=c_upper, variance_h=variance_h, c_gap=c_gap)

    r = float(np.max(positive[:-1] / positive[1:]))
    if r < 1.0 - _DEGENERACY_RTOL:
        c_ratio = ((1.0 - r) / (1.0 + r)) ** 2
        lower = c_ratio * prefactor * variance_off
        c_lower = lower / base if base > 0 else 0.0
        return QfiBounds(lower=lower, upper=c_upper * base,
                         c_m=c_lower, c_M=c_upper, variance_h=variance_h, c_gap=c_gap)

    # Degenerate positive spectrum: evaluate the top-eigenvector row of the
    # spectral sum exactly,
    #   F >= xi_max * sum_n ((xi_max - xi_n)/(xi_max + xi_n))^2 |<xi_max|H - <H>|xi_n>|^2
    # which stays valid however the H-weight distributes over the spectrum.
    top_col = centered * vecs[:, -1]
    amps = vecs.conj().T @ top_col
    pair_sum = xi_max + xi
    factors = np.where(pair_sum > eig_cutoff, ((xi_max - xi) / np.where(pair_sum > 0, pair_sum, 1.0)) ** 2, 0.0)
    lower = prefactor * xi_max * float(np.dot(factors, np.abs(amps) ** 2))
    c_lower = lower / base if base > 0 else 0.0
    return QfiBounds(lower=lower, upper=c_upper * base, c_m=min(c_lower, 1.0),
                     c_M=c_upper, variance_h=variance_h, c_gap=c_gap,
                     improved_lower=True)


def analytic_qfi(probe: TwoLevelProbe, which: str, t: float) -> float:
    """Closed-form QFI of the two-level max-variance probe.

    which = "x1": (t/(x1 tau_z))^2 exp(-4t/tau_d)
    which = "x2": (2t/(x2 tau_d))^2 / (exp(4t/tau_d) - 1), which tends to
    t/(x2^2 tau_d) for t << tau_d and to 0 at t = 0.  (The coherence decays
    as exp(-x2 lambda^2 t / 2), so the log-derivative rate per unit x2 is
    lambda^2 t / 2 = 2t/(x2 tau_d); squaring it fixes the prefactor.)
    """
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    if which == "x1":
        phase_rate = probe.eps / probe.hbar           # = 1/(x1 tau_z) per unit x1
        decay = 0.0 if probe.tau_d == math.inf else 4.0 * t / probe.tau_d
        return (t * phase_rate) ** 2 * math.exp(-decay)
    if which == "x2":
        if t == 0.0:
            return 0.0
        damp_rate = 0.5 * probe.lambda_sq             # = 2/(x2 tau_d) per unit x2
        if damp_rate == 0.0:
            return 0.0
        if probe.x2 == 0.0:
            return math.inf
        return (t * damp_rate) ** 2 / math.expm1(4.0 * t / probe.tau_d)
    raise ValueError(f"which must be 'x1' or 'x2', got {which!r}")


def qcrb(qfi: float, repetitions: int) -> float:
    """Cramer-Rao error bound 1/sqrt(nu * F); +inf when F = 0."""
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    if qfi < 0:
        raise ValueError(f"QFI must be nonnegative, got {qfi}")
    if qfi == 0.0:
        return math.inf
    return 1.0 / math.sqrt(repetitions * qfi)


def qfi_offdiagonal(rho: DensityMatrix, drho1: np.ndarray, drho2: np.ndarray,
                    eig_cutoff: float = EIG_PAIR_CUTOFF) -> float:
    """Off-diagonal QFI-matrix element for two parameters.

    F_12 = sum_{k,l} 2 Re[<xi_k|d1 rho|xi_l><xi_l|d2 rho|xi_k>] / (xi_k + xi_l)
    over pairs with xi_k + xi_l above the cutoff.
    """
    m1 = _check_hermitian_traceless(drho1, "drho1")
    m2 = _check_hermitian_traceless(drho2, "drho2")
    xi, vecs = np.linalg.eigh(rho.matrix)
    xi = np.clip(xi, 0.0, None)
    e1 = vecs.conj().T @ m1 @ vecs
    e2 = vecs.conj().T @ m2 @ vecs
    pair_sum = xi[:, None] + xi[None, :]
    mask = pair_sum > eig_cutoff
    weights = np.where(mask, 2.0 / np.where(mask, pair_sum, 1.0), 0.0)
    return float(np.sum(weights * (e1 * e2.T).real))


@dataclass(frozen=True)
class QfiReport:
    """Bundle of QFI, sandwich, and Cramer-Rao bound for one state."""

    qfi: float
    lower_bound: float
    upper_bound: float
    c_m: float
    c_M: float
    variance_h: float
    repetitions: int
    improved_lower: bool = False

    @property
    def qcrb(self) -> float:
        return qcrb(self.qfi, self.repetitions) if self.qfi > 0 else math.inf
