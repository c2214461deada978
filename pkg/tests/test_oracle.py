"""Integrator, eigensolver, finite differences, and spectrum-structure fit."""

import math

import numpy as np
import pytest

from dephmet.basis import (
    SpinChainUniform, UncorrelatedPBody, build_basis, build_diagonals, pair_rates,
)
from dephmet.combinatorics import gap_spectrum_from_reference
from dephmet.dynamics import (
    DensityMatrix, Product, TwoLevelProbe, evolve_dephasing, make_probe,
    purity, two_level_state,
)
from dephmet.errors import AccuracyError, SamplingError
from dephmet.oracle import (
    DEFAULT_SEED, MasterEquationProblem, finite_difference_drho,
    hermitian_eigendecomposition, integrate_master_equation,
    integrate_with_checkpoints, product_state_spectrum_check,
)


def dense_problem(diag, x1, gamma, hbar=1.0):
    return MasterEquationProblem(
        hamiltonian=np.diag(diag.hamiltonian_diag.astype(np.complex128)),
        lindblads=tuple(np.diag(lv.astype(np.complex128)) for lv in diag.lindblad_diags),
        x1=x1, rates=(gamma,) * len(diag.lindblad_diags), hbar=hbar)


# --------------------------------------------------------------------------
# RK4 integrator
# --------------------------------------------------------------------------

def test_closed_system_matches_exact_phases():
    h = np.diag([0.4, -1.1, 0.9, 0.0])
    psi = np.ones(4) / 2.0
    rho0 = DensityMatrix.from_state_vector(psi)
    problem = MasterEquationProblem(hamiltonian=h, x1=1.0)
    t = 1.3
    out = integrate_master_equation(problem, rho0, t)
    phases = np.exp(-1j * np.diag(h) * t) * psi
    exact = np.outer(phases, phases.conj())
    assert np.abs(out.matrix - exact).max() < 1e-10


def test_zero_time_returns_initial_state():
    h = np.diag([1.0, -1.0])
    rho0 = DensityMatrix.from_state_vector(np.array([1.0, 1.0]))
    out = integrate_master_equation(MasterEquationProblem(hamiltonian=h), rho0, 0.0)
    assert np.allclose(out.matrix, rho0.matrix)


def test_dephasing_scenario_matches_exact_solution():
    b = build_basis(4)
    diag = build_diagonals(SpinChainUniform(k=2), UncorrelatedPBody(p=1), b)
    rr = pair_rates(diag)
    rho0 = make_probe(Product(math.pi / 8), b, diag)
    gamma = 0.5
    problem = dense_problem(diag, 1.0, gamma)
    times = [0.075, 0.15, 0.3, 0.6, 1.2]
    numeric = integrate_with_checkpoints(problem, rho0, times)
    for t, num in zip(times, numeric):
        exact = evolve_dephasing(rho0, rr, 1.0, gamma, t)
        assert np.abs(num.matrix - exact.matrix).max() < 1e-8
        assert abs(num.matrix.trace().real - 1.0) < 1e-10
        assert num.min_eigenvalue() > -1e-9


def test_noncommuting_selftest_preserves_trace_and_purity_decay():
    # dissipator that does not commute with H: oracle handles it, trace stays put
    rng = np.random.default_rng(DEFAULT_SEED)
    h = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = 0.5 * (h + h.conj().T)
    l1 = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    l1 = 0.5 * (l1 + l1.conj().T)
    rho0 = DensityMatrix.from_state_vector(rng.normal(size=4) + 1j * rng.normal(size=4))
    problem = MasterEquationProblem(hamiltonian=h, lindblads=(l1,), x1=0.7, rates=(0.3,))
    states = integrate_with_checkpoints(problem, rho0, [0.2, 0.4, 0.8])
    purities = [purity(rho0)] + [purity(s) for s in states]
    for s in states:
        assert abs(s.matrix.trace().real - 1.0) < 1e-10
        assert s.min_eigenvalue() > -1e-9
    assert all(a >= b - 1e-10 for a, b in zip(purities, purities[1:]))


def test_accuracy_error_when_step_cannot_be_refined():
    # dt far beyond the stability region; coherences blow up while the trace
    # stays exact, so the purity arm of the gate has to fire
    h = np.diag([50.0, -50.0])
    rho0 = DensityMatrix.from_state_vector(np.array([1.0, 1.0]))
    problem = MasterEquationProblem(hamiltonian=h, x1=1.0)
    with pytest.raises(AccuracyError, match="smaller dt"):
        integrate_with_checkpoints(problem, rho0, [5.0], dt=2.5, max_halvings=0)


def test_problem_validation():
    with pytest.raises(ValueError, match="Hermitian"):
        MasterEquationProblem(hamiltonian=np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError, match="rates"):
        MasterEquationProblem(hamiltonian=np.eye(2), lindblads=(np.eye(2),), rates=())
    with pytest.raises(ValueError, match="nonnegative"):
        MasterEquationProblem(hamiltonian=np.eye(2), lindblads=(np.eye(2),), rates=(-1.0,))


# --------------------------------------------------------------------------
# Eigendecomposition
# --------------------------------------------------------------------------

def test_identity_eigenvalues():
    w, v = hermitian_eigendecomposition(np.eye(5), method="jacobi")
    assert np.allclose(w, 1.0)
    assert np.allclose(v.conj().T @ v, np.eye(5))


def test_two_level_state_spectrum():
    pr = TwoLevelProbe(eps=2.0, lambda_sq=4.0, x1=1.0, x2=0.7)
    for t in (0.1, 0.5, 1.5):
        w, _ = hermitian_eigendecomposition(two_level_state(pr, t).matrix, method="jacobi")
        d = math.exp(-2 * t / pr.tau_d)
        assert np.allclose(w, [(1 - d) / 2, (1 + d) / 2], atol=1e-14)


@pytest.mark.parametrize("dim", [2, 3, 7, 16, 33, 64])
def test_jacobi_reconstruction_and_orthogonality(dim):
    rng = np.random.default_rng(DEFAULT_SEED + dim)
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = m + m.conj().T
    w, v = hermitian_eigendecomposition(m, method="jacobi")
    recon = np.linalg.norm(m - v @ np.diag(w) @ v.conj().T) / np.linalg.norm(m)
    assert recon < 1e-10
    assert np.abs(v.conj().T @ v - np.eye(dim)).max() < 1e-10
    assert np.all(np.diff(w) >= 0)
    assert np.allclose(w, np.linalg.eigvalsh(m), atol=1e-10 * np.linalg.norm(m))


def test_eigendecomposition_rejects_non_hermitian():
    with pytest.raises(ValueError, match="Hermitian"):
        hermitian_eigendecomposition(np.array([[0.0, 1.0], [2.0, 0.0]]))


def test_auto_dispatch_large_dimension_uses_lapack():
    rng = np.random.default_rng(1)
    m = rng.normal(size=(80, 80))
    m = m + m.T
    w, v = hermitian_eigendecomposition(m, method="auto")
    assert np.linalg.norm(m - v @ np.diag(w) @ v.conj().T) / np.linalg.norm(m) < 1e-12


# --------------------------------------------------------------------------
# Finite differences
# --------------------------------------------------------------------------

def test_fd_zero_for_parameter_independent_evolution():
    rho = DensityMatrix.from_state_vector(np.array([1.0, 1.0]))
    d = finite_difference_drho(lambda x: rho, 1.0, 1e-5)
    assert np.abs(d).max() == 0.0


def test_fd_matches_analytic_two_level_derivative():
    pr_base = dict(eps=2.0, lambda_sq=4.0, x2=0.5)
    t = 0.7
    x1 = 0.9

    def evolver(x):
        return two_level_state(TwoLevelProbe(x1=x, **pr_base), t)

    fd = finite_difference_drho(evolver, x1, 1e-5 * x1)
    rho = evolver(x1).matrix
    analytic = np.zeros((2, 2), dtype=complex)
    analytic[0, 1] = 1j * pr_base["eps"] * t * rho[0, 1]
    analytic[1, 0] = np.conj(analytic[0, 1])
    assert np.abs(fd - analytic).max() < 1e-9


def test_fd_second_order_convergence():
    pr_base = dict(eps=2.0, lambda_sq=4.0, x2=0.5)
    t, x1 = 0.7, 0.9

    def evolver(x):
        return two_level_state(TwoLevelProbe(x1=x, **pr_base), t)

    rho = evolver(x1).matrix
    analytic = np.zeros((2, 2), dtype=complex)
    analytic[0, 1] = 1j * pr_base["eps"] * t * rho[0, 1]
    analytic[1, 0] = np.conj(analytic[0, 1])

    err = []
    for h in (4e-3, 2e-3):
        fd = finite_difference_drho(evolver, x1, h)
        err.append(np.abs(fd - analytic).max())
    ratio = err[0] / err[1]
    assert 3.5 < ratio < 4.5


# --------------------------------------------------------------------------
# Product-state spectrum structure
# --------------------------------------------------------------------------

def structure_times(n, p, gamma):
    spectrum = gap_spectrum_from_reference(n, p)
    cols = len({lam for _, lam in spectrum if lam > 0})
    cols += 1 if any(lam == 0 for _, lam in spectrum) else 0
    return [j * 0.25 / gamma / n for j in range(cols + 4)]


def test_structure_fit_n4_p1():
    gamma = 0.5
    rep = product_state_spectrum_check(4, 1, gamma, structure_times(4, 1, gamma))
    assert rep.max_residual < 1e-8
    assert rep.kappa_sum_max < 1e-8
    assert rep.rates == tuple(0.5 * gamma * 4 * q for q in range(1, 5))
    assert rep.slowest_active_rate == pytest.approx(2.0 * gamma)


def test_structure_fit_n5_p2_slowest_rate():
    gamma = 0.8
    rep = product_state_spectrum_check(5, 2, gamma, structure_times(5, 2, gamma))
    assert rep.max_residual < 1e-8
    # p >= floor(n/2): outside the closed form's regime, so scan the spectrum;
    # the enumerated minimum still equals 4*C(4,1) = 16 here
    min_gap = min(lam for _, lam in gap_spectrum_from_reference(5, 2) if lam > 0)
    assert min_gap == 16
    assert rep.slowest_active_rate == pytest.approx(0.5 * gamma * min_gap)


def test_structure_fit_requires_enough_times():
    with pytest.raises(SamplingError, match="sample times"):
        product_state_spectrum_check(5, 2, 0.5, [0.0, 0.1, 0.2])
