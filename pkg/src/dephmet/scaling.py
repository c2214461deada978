"""Timescales, optimal interrogation, sensitivity bounds, and scaling fits.

The per-repetition error bounds evaluated here are

    dx1 >= (x1/kappa1) * tau_z / sqrt(T * tau_d)
    dx2 >= (x2/kappa2) * sqrt(tau_d / T)

with kappa1 = sqrt(mu1) exp(-2 mu1), kappa2 = sqrt(mu2)/sqrt(exp(4 mu2)-1)
and the interrogation-time fractions mu1 = 1/2 (exact) and mu2 the root of
exp(-4 mu) = 1 - 2 mu.  Long-range pair couplings get their seminorm from
an exhaustive scan over the reference-state family, with Euler-Maclaurin
style asymptotics kept only as a diagnostic ratio.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from .basis import DiagonalOperatorSet
from .combinatorics import binomial, gap_spectrum_from_reference
from .dynamics import DensityMatrix
from .errors import DegenerateProbeError, SamplingError, UnsupportedConfigurationError

__all__ = [
    "TimescaleReport",
    "ScalingSeries",
    "probe_timescales",
    "ghz_timescales",
    "optimal_interrogation",
    "kappa_constant",
    "sensitivity_bound",
    "ising_seminorm_exact",
    "ising_seminorm_asymptotic",
    "ising_product_variance",
    "IsingVarianceReport",
    "ising_dephasing_variance_sum",
    "product_chain_variance",
    "product_envelope_qcrb",
    "collective_noise_tau_d",
    "fit_scaling_exponent",
    "ghz_bound_sweep",
    "ising_bound_sweep",
    "collective_bound_sweep",
]


@dataclass(frozen=True)
class TimescaleReport:
    """Phase and dephasing timescales of a two-level-support probe."""

    tau_z: float
    tau_d: float
    variance_h: float
    sum_variance_l: float


@dataclass(frozen=True)
class ScalingSeries:
    """(n, value) samples with the fitted log-log slope."""

    samples: tuple[tuple[int, float], ...]
    fitted_slope: float
    slope_stderr: float
    fit_window: tuple[int, int]

    @classmethod
    def fit(cls, ns: Sequence[int], values: Sequence[float]) -> "ScalingSeries":
        slope, stderr = fit_scaling_exponent(ns, values)
        return cls(
            samples=tuple(zip([int(n) for n in ns], [float(v) for v in values])),
            fitted_slope=slope,
            slope_stderr=stderr,
            fit_window=(int(min(ns)), int(max(ns))),
        )


def probe_timescales(rho: DensityMatrix, diag: DiagonalOperatorSet, x1: float,
                     x2: float, hbar: float = 1.0) -> TimescaleReport:
    """tau_z = hbar/(2 x1 dH), tau_d = 1/(x2 sum_nu dL_nu^2) on the given probe."""
    if diag.dim != rho.dim:
        raise ValueError(f"operator dim {diag.dim} does not match state dim {rho.dim}")
    populations = np.clip(np.diagonal(rho.matrix).real, 0.0, None)

    def variance(table: np.ndarray) -> float:
        mean = float(np.dot(populations, table))
        return max(float(np.dot(populations, table ** 2)) - mean ** 2, 0.0)

    var_h = variance(diag.hamiltonian_diag)
    if var_h <= 0:
        raise DegenerateProbeError("probe has zero energy variance; timescales undefined")
    sum_var_l = sum(variance(lv) for lv in diag.lindblad_diags)
    tau_z = hbar / (2.0 * x1 * math.sqrt(var_h)) if x1 > 0 else math.inf
    tau_d = 1.0 / (x2 * sum_var_l) if x2 > 0 and sum_var_l > 0 else math.inf
    return TimescaleReport(tau_z=tau_z, tau_d=tau_d, variance_h=var_h,
                           sum_variance_l=sum_var_l)


def ghz_timescales(n: int, k: int, p: int, x1: float, x2: float, eps: float,
                   lambda_sq: float, hbar: float = 1.0) -> TimescaleReport:
    """Exact binomial evaluation of the GHZ-probe timescales.

    eps is the single-tuple energy seminorm, lambda_sq the per-operator
    squared eigenvalue gap; both enter multiplied by C(n,k) resp. C(n,p).
    """
    if not 1 <= k <= n or not 1 <= p <= n:
        raise ValueError(f"body orders (k={k}, p={p}) must lie in 1..{n}")
    if eps < 0 or lambda_sq < 0:
        raise ValueError("eps and lambda_sq must be nonnegative")
    c_k = float(binomial(n, k))
    c_p = float(binomial(n, p))
    tau_z = hbar / (x1 * eps * c_k) if x1 > 0 and eps > 0 else math.inf
    tau_d = 4.0 / (x2 * lambda_sq * c_p) if x2 > 0 and lambda_sq > 0 else math.inf
    return TimescaleReport(
        tau_z=tau_z,
        tau_d=tau_d,
        variance_h=(0.5 * eps * c_k) ** 2,
        sum_variance_l=0.25 * lambda_sq * c_p,
    )


@lru_cache(maxsize=None)
def optimal_interrogation(which: str) -> float:
    """Interrogation time in units of tau_d maximizing the analytic QFI.

    mu1 = 1/2 exactly; mu2 solves exp(-4 mu) = 1 - 2 mu on (0, 1/2),
    obtained by bisection to 1e-12 (lands near 0.398, i.e. 0.40(1)).
    """
    if which == "x1":
        return 0.5
    if which != "x2":
        raise ValueError(f"which must be 'x1' or 'x2', got {which!r}")

    def residual(mu: float) -> float:
        return math.exp(-4.0 * mu) - (1.0 - 2.0 * mu)

    lo, hi = 1e-6, 0.5 - 1e-12
    if not (residual(lo) < 0 < residual(hi)):
        raise RuntimeError("bisection bracket lost")  # pragma: no cover
    while hi - lo > 1e-14:
        mid = 0.5 * (lo + hi)
        if residual(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def kappa_constant(which: str) -> float:
    """kappa1 = sqrt(mu1) e^{-2 mu1}; kappa2 = sqrt(mu2) (e^{4 mu2}-1)^{-1/2}."""
    if which == "x1":
        mu = optimal_interrogation("x1")
        return math.sqrt(mu) * math.exp(-2.0 * mu)
    if which == "x2":
        mu = optimal_interrogation("x2")
        return math.sqrt(mu) / math.sqrt(math.expm1(4.0 * mu))
    raise ValueError(f"which must be 'x1' or 'x2', got {which!r}")


def sensitivity_bound(report: TimescaleReport, total_time: float, which: str,
                      x_value: float) -> float:
    """Best achievable error over a protocol of total duration T."""
    if total_time <= 0:
        raise ValueError(f"total time must be positive, got {total_time}")
    if not math.isfinite(report.tau_d) or report.tau_d <= 0:
        raise UnsupportedConfigurationError(
            "sensitivity bounds assume a finite decoherence time; got "
            f"tau_d={report.tau_d}"
        )
    if which == "x1":
        return (x_value / kappa_constant("x1")) * report.tau_z / math.sqrt(total_time * report.tau_d)
    if which == "x2":
        return (x_value / kappa_constant("x2")) * math.sqrt(report.tau_d / total_time)
    raise ValueError(f"which must be 'x1' or 'x2', got {which!r}")


# --------------------------------------------------------------------------
# Long-range pair couplings
# --------------------------------------------------------------------------

def _crossing_sums(n: int, alpha: float) -> np.ndarray:
    """S(a) = sum_d min(d, a, n-d) d^-alpha for a = 1..n//2, via prefix sums."""
    d = np.arange(1, n, dtype=np.float64)
    w = d ** (-alpha)
    a0 = np.concatenate(([0.0], np.cumsum(w)))          # a0[m] = sum_{d<=m} w
    a1 = np.concatenate(([0.0], np.cumsum(d * w)))      # a1[m] = sum_{d<=m} d*w
    out = np.empty(n // 2)
    for a in range(1, n // 2 + 1):
        head = a1[a - 1]
        mid = a * (a0[n - a] - a0[a - 1])
        tail = n * (a0[n - 1] - a0[n - a]) - (a1[n - 1] - a1[n - a])
        out[a - 1] = head + mid + tail
    return out


def ising_seminorm_exact(n: int, alpha: float) -> tuple[float, int]:
    """Max over q of the energy gap between |v_q> and the aligned state.

    The gap is twice the sum of couplings crossing the cut after site n-q;
    all q are scanned (the sum depends on q only through min(q, n-q)) and
    ties break toward floor(n/2).  Returns (seminorm, argmax_q).
    """
    if n < 2:
        raise ValueError(f"need at least two sites, got n={n}")
    if alpha < 0:
        raise ValueError(f"alpha={alpha} must be >= 0")
    sums = _crossing_sums(n, alpha)
    half = n // 2
    best_q = 1
    best = -math.inf
    for q in range(1, n):
        value = sums[min(q, n - q) - 1]
        if value > best or (value == best and abs(q - half) < abs(best_q - half)):
            best = value
            best_q = q
    return 2.0 * best, best_q


def ising_seminorm_asymptotic(n: int, alpha: float) -> float:
    """Large-N form of the seminorm, for use as a diagnostic ratio only.

    Piecewise in alpha: ~N^(2-alpha) below 1, N ln 2 at 1, ln N at 2,
    constant above 2; the window 1 < alpha < 2 evaluates the crossing-sum
    double integral by adaptive quadrature (abs tol 1e-10).
    """
    if n < 2:
        raise ValueError(f"need at least two sites, got n={n}")
    if alpha < 0:
        raise ValueError(f"alpha={alpha} must be >= 0")
    if math.isclose(alpha, 1.0, abs_tol=1e-12):
        return 2.0 * n * math.log(2.0)
    if math.isclose(alpha, 2.0, abs_tol=1e-12):
        return 2.0 * math.log(n)
    if alpha < 1.0:
        return 2.0 * (1.0 - 2.0 ** (alpha - 1.0)) / ((2.0 - alpha) * (1.0 - alpha)) * n ** (2.0 - alpha)
    if alpha > 2.0:
        return 2.0 * (1.0 + 1.0 / ((alpha - 2.0) * (alpha - 1.0)))

    # 1 < alpha < 2: integrate the crossing sum over the q = floor(n/2) cut
    m = n - n // 2

    def inner(y: float) -> float:
        return ((y - 1.0) ** (1.0 - alpha) - (y - m) ** (1.0 - alpha)) / (1.0 - alpha)

    integral, _ = quad(inner, m + 1.0, float(n), epsabs=1e-10, limit=200)
    return 2.0 * (1.0 + integral)


@dataclass(frozen=True)
class IsingVarianceReport:
    """Energy variance of the site-wise tilted product state."""

    variance: float
    pair_sum: float            # sum_{i<j} w_ij^2
    triple_sum: float          # sum over pair-of-pairs sharing one site
    leading_coefficient: float  # sin^2(4 phi), maximal at phi = pi/8
    at_optimal_angle: bool


def ising_product_variance(n: int, alpha: float, phi: float) -> IsingVarianceReport:
    """Exact variance of the long-range coupling Hamiltonian on the product
    probe with per-site <sigma^z> = cos(2 phi)."""
    if n < 2:
        raise ValueError(f"need at least two sites, got n={n}")
    if alpha < 0:
        raise ValueError(f"alpha={alpha} must be >= 0")
    if not 0.0 < phi < math.pi / 2:
        raise ValueError(f"phi={phi} outside (0, pi/2)")

    d = np.arange(1, n, dtype=np.float64)
    w = d ** (-alpha)
    w2 = d ** (-2.0 * alpha)
    pair_sum = float(np.dot(n - d, w2))

    pre_w = np.concatenate(([0.0], np.cumsum(w)))
    pre_w2 = np.concatenate(([0.0], np.cumsum(w2)))
    j = np.arange(1, n + 1)
    row_sum = pre_w[j - 1] + pre_w[n - j]      # r_j = sum_{i != j} w_|i-j|
    row_sq = pre_w2[j - 1] + pre_w2[n - j]
    shared = float(np.sum(row_sum ** 2 - row_sq))  # = 2 * triple_sum

    c2 = math.cos(2.0 * phi) ** 2
    variance = (1.0 - c2 * c2) * pair_sum + (c2 - c2 * c2) * shared
    return IsingVarianceReport(
        variance=variance,
        pair_sum=pair_sum,
        triple_sum=0.5 * shared,
        leading_coefficient=math.sin(4.0 * phi) ** 2,
        at_optimal_angle=math.isclose(phi, math.pi / 8, abs_tol=1e-12),
    )


def ising_dephasing_variance_sum(n: int, p: int) -> float:
    """sum_nu dL_nu^2 on the |v_0>, |v_{n//2}> probe under p-body dephasing.

    Each p-tuple straddling the flipped block an odd number of times
    contributes 1; that count is the q = floor(n/2) gap-spectrum entry / 4.
    """
    q = n // 2
    total = 0
    for j in range(1, min(q, p) + 1, 2):
        total += binomial(q, j) * binomial(n - q, p - j)
    return float(total)


def product_chain_variance(n: int, k: int, phi: float) -> float:
    """Exact variance of the uniform k-body chain on the tilted product state.

    With c = cos(2 phi) the per-site expectation, a pair of k-tuples reduces
    to the product over their symmetric difference, so
    <H^2> = C(n,k) sum_j C(k,j) C(n-k,k-j) c^(2(k-j))  and  <H> = C(n,k) c^k.
    """
    if not 1 <= k <= n:
        raise ValueError(f"body order k={k} outside 1..{n}")
    if not 0.0 < phi < math.pi / 2:
        raise ValueError(f"phi={phi} outside (0, pi/2)")
    c = math.cos(2.0 * phi)
    total = float(binomial(n, k))
    mean = total * c ** k
    mean_sq = total * sum(binomial(k, j) * binomial(n - k, k - j) * c ** (2 * (k - j))
                          for j in range(k + 1))
    return max(mean_sq - mean * mean, 0.0)


def product_envelope_qcrb(n: int, k: int, p: int, gamma: float, total_time: float,
                          phi: float = math.pi / 8, interrogation_factor: float = 1.0,
                          hbar: float = 1.0) -> float:
    """Coupling-amplitude error bound for the product probe via the
    coefficient envelope.

    The probe is interrogated for t = factor * n * tau_d (the decoherence
    time of the probe itself), where the envelope of the bound coefficients
    decays at the slowest dephasing rate gamma*Lambda_1^2/2; the effective
    QFI is 4 t^2 Var(H) exp(-gamma Lambda_1^2 t / 2) and the error bound is
    the Cramer-Rao expression with nu = T/t repetitions.  This is a bound
    statement: the exact spectral QFI of the dephased product state is not
    guaranteed to attain it.
    """
    if total_time <= 0 or gamma <= 0 or interrogation_factor <= 0:
        raise ValueError("total_time, gamma, interrogation_factor must be positive")
    var_h = product_chain_variance(n, k, phi)
    if var_h <= 0:
        raise DegenerateProbeError("product probe has zero energy variance")
    c = math.cos(2.0 * phi)
    var_l = 1.0 - c ** (2 * p)
    tau_d = 1.0 / (gamma * float(binomial(n, p)) * var_l)
    lam1 = min(lam for _, lam in gap_spectrum_from_reference(n, p) if lam > 0)
    t = interrogation_factor * n * tau_d
    qfi = 4.0 * t * t * var_h * math.exp(-0.5 * gamma * lam1 * t) / (hbar * hbar)
    repetitions = total_time / t
    return 1.0 / math.sqrt(repetitions * qfi)


def collective_noise_tau_d(n: int, k: int, gamma: float) -> float:
    """Decoherence time of a GHZ probe under the single symmetrized k-body
    Lindblad operator: tau_d = 1/(gamma * C(n,k)^2), k odd only.

    For k even the two GHZ branches share the collective eigenvalue
    +C(n,k), the operator variance vanishes, and no finite tau_d exists.
    """
    if not 1 <= k <= n:
        raise ValueError(f"body order k={k} outside 1..{n}")
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if k % 2 == 0:
        raise UnsupportedConfigurationError(
            f"k={k} is even: both GHZ branches have collective eigenvalue "
            f"+C({n},{k}), the gap is degenerate and the probe does not dephase"
        )
    return 1.0 / (gamma * float(binomial(n, k)) ** 2)


def fit_scaling_exponent(ns: Sequence[int], values: Sequence[float]) -> tuple[float, float]:
    """Ordinary least squares slope of ln(value) vs ln(n), with its stderr."""
    ns = list(ns)
    values = list(values)
    if len(ns) < 5:
        raise SamplingError(f"need at least 5 samples, got {len(ns)}")
    if len(set(ns)) != len(ns):
        raise ValueError("sample sizes n must be distinct")
    if any(v <= 0 for v in values):
        raise ValueError("values must be positive for a log-log fit")
    x = np.log(np.asarray(ns, dtype=np.float64))
    y = np.log(np.asarray(values, dtype=np.float64))
    x_c = x - x.mean()
    sxx = float(np.dot(x_c, x_c))
    slope = float(np.dot(x_c, y) / sxx)
    resid = y - y.mean() - slope * x_c
    ssr = float(np.dot(resid, resid))
    stderr = math.sqrt(max(ssr, 0.0) / (len(ns) - 2) / sxx)
    return slope, stderr


# --------------------------------------------------------------------------
# Sweep row builders
# --------------------------------------------------------------------------

def ghz_bound_sweep(k: int, p: int, ns: Sequence[int], x1: float = 1.0,
                    x2: float = 1.0, total_time: float = 1.0, eps: float = 2.0,
                    lambda_sq: float = 4.0, hbar: float = 1.0) -> list[dict]:
    """Per-N GHZ timescales and both sensitivity bounds."""
    rows = []
    for n in ns:
        report = ghz_timescales(n, k, p, x1, x2, eps, lambda_sq, hbar)
        rows.append({
            "n": int(n),
            "tau_z": report.tau_z,
            "tau_d": report.tau_d,
            "bound_x1": sensitivity_bound(report, total_time, "x1", x1),
            "bound_x2": sensitivity_bound(report, total_time, "x2", x2),
        })
    return rows


def ising_bound_sweep(alpha: float, p: int, ns: Sequence[int], x1: float = 1.0,
                      x2: float = 1.0, total_time: float = 1.0,
                      hbar: float = 1.0) -> list[dict]:
    """Per-N bounds for the long-range coupling amplitude, exact sums."""
    rows = []
    for n in ns:
        seminorm, argmax_q = ising_seminorm_exact(n, alpha)
        var_h = (0.5 * seminorm) ** 2
        sum_var_l = ising_dephasing_variance_sum(n, p)
        report = TimescaleReport(
            tau_z=hbar / (x1 * seminorm),
            tau_d=1.0 / (x2 * sum_var_l),
            variance_h=var_h,
            sum_variance_l=sum_var_l,
        )
        rows.append({
            "n": int(n),
            "seminorm": seminorm,
            "argmax_q": argmax_q,
            "seminorm_asymptotic": ising_seminorm_asymptotic(n, alpha),
            "tau_z": report.tau_z,
            "tau_d": report.tau_d,
            "bound_x1": sensitivity_bound(report, total_time, "x1", x1),
            "bound_x2": sensitivity_bound(report, total_time, "x2", x2),
        })
    return rows


def collective_bound_sweep(k: int, ns: Sequence[int], gamma: float = 1.0,
                           total_time: float = 1.0,
                           correlated: bool = True) -> list[dict]:
    """Noise-amplitude bounds: correlated (single symmetrized operator,
    tau_d ~ C^-2) vs uncorrelated (C(n,k) independent operators, tau_d ~ C^-1)."""
    if k % 2 == 0:
        raise UnsupportedConfigurationError(
            f"k={k} is even: the GHZ probe does not dephase under the "
            "collective operator (degenerate branch eigenvalues)"
        )
    rows = []
    for n in ns:
        if correlated:
            tau_d = collective_noise_tau_d(n, k, gamma)
        else:
            tau_d = 1.0 / (gamma * float(binomial(n, k)))
        # only the x2 bound is meaningful here; the Hamiltonian side is idle
        report = TimescaleReport(tau_z=math.inf, tau_d=tau_d,
                                 variance_h=0.0, sum_variance_l=1.0 / tau_d / gamma)
        rows.append({
            "n": int(n),
            "tau_d": tau_d,
            "bound_gamma": sensitivity_bound(report, total_time, "x2", gamma),
        })
    return rows
