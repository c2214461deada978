"""Quantum Fisher information and error-scaling laws for N two-level
systems evolving under commuting many-body Hamiltonians with many-body
dephasing, verified against a brute-force master-equation integrator."""

__version__ = "0.1.0"

from .basis import (
    CollectiveSymmetrizedKBody, CustomDiagonal, DiagonalOperatorSet,
    LongRangeIsing, PairRates, SpinBasis, SpinChainUniform, SymmetrizedUniform,
    UncorrelatedPBody, build_basis, build_diagonals, pair_rates,
    zprod_eigenvalue,
)
from .combinatorics import (
    binomial, gap_spectrum_from_reference, kbody_degeneracy, log_binomial,
    min_nonzero_gap,
)
from .dynamics import (
    DensityMatrix, Ghz, IsingMaxVariance, MaxVariance, Product, TwoLevelProbe,
    evolve_dephasing, fidelity, make_probe, purity, two_level_state,
)
from .oracle import (
    MasterEquationProblem, finite_difference_drho, hermitian_eigendecomposition,
    integrate_master_equation, integrate_with_checkpoints,
    product_state_spectrum_check,
)
from .qfi import (
    QfiBounds, QfiReport, analytic_qfi, qcrb, qfi_bounds, qfi_offdiagonal,
    spectral_qfi,
)
from .scaling import (
    ScalingSeries, TimescaleReport, collective_noise_tau_d, fit_scaling_exponent,
    ghz_timescales, ising_product_variance, ising_seminorm_asymptotic,
    ising_seminorm_exact, kappa_constant, optimal_interrogation,
    probe_timescales, sensitivity_bound,
)
