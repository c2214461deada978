"""Probes, exact dephasing evolution, and the reduced two-level picture."""

import math

import numpy as np
import pytest

from dephmet.basis import (
    CustomDiagonal, LongRangeIsing, SpinChainUniform, UncorrelatedPBody,
    build_basis, build_diagonals, pair_rates,
)
from dephmet.dynamics import (
    DensityMatrix, Ghz, IsingMaxVariance, MaxVariance, Product, TwoLevelProbe,
    evolve_dephasing, fidelity, make_probe, purity, two_level_state,
)
from dephmet.errors import DegenerateProbeError


@pytest.fixture
def chain_scenario():
    b = build_basis(4)
    diag = build_diagonals(SpinChainUniform(k=1), UncorrelatedPBody(p=1), b)
    return b, diag, pair_rates(diag)


def test_ghz_probe_is_bell_corner_block():
    b = build_basis(2)
    diag = build_diagonals(SpinChainUniform(k=1), UncorrelatedPBody(p=1), b)
    rho = make_probe(Ghz(), b, diag)
    m = rho.matrix
    for i, j in [(0, 0), (0, 3), (3, 0), (3, 3)]:
        assert m[i, j] == pytest.approx(0.5)
    assert np.abs(m).sum() == pytest.approx(2.0)


def test_product_probe_single_site_polarization():
    b = build_basis(1)
    diag = build_diagonals(SpinChainUniform(k=1), UncorrelatedPBody(p=1), b)
    for phi in (math.pi / 8, math.pi / 3):
        rho = make_probe(Product(phi), b, diag)
        sz = rho.matrix[1, 1].real - rho.matrix[0, 0].real
        assert sz == pytest.approx(math.cos(2 * phi), abs=1e-12)


def test_product_probe_signals_singular_angle():
    assert Product(math.pi / 4).is_singular
    assert not Product(math.pi / 8).is_singular
    with pytest.raises(ValueError):
        Product(0.0)


def test_ising_max_variance_probe_support():
    b = build_basis(4)
    diag = build_diagonals(LongRangeIsing(alpha=1.0), UncorrelatedPBody(p=1), b)
    rho = make_probe(IsingMaxVariance(), b, diag)
    v2 = b.reference_state(2)
    assert rho.matrix[0, 0] == pytest.approx(0.5)
    assert rho.matrix[v2, v2] == pytest.approx(0.5)
    assert rho.matrix[0, v2] == pytest.approx(0.5)


def test_ghz_rejected_when_branches_degenerate():
    b = build_basis(4)
    # k even: both aligned states have the same chain energy
    diag = build_diagonals(SpinChainUniform(k=2), UncorrelatedPBody(p=1), b)
    with pytest.raises(DegenerateProbeError, match="IsingMaxVariance"):
        make_probe(Ghz(), b, diag)


def test_max_variance_rejected_on_flat_spectrum():
    b = build_basis(2)
    diag = build_diagonals(CustomDiagonal(eigenvalues=(1.0, 1.0, 1.0, 1.0)),
                           UncorrelatedPBody(p=1), b)
    with pytest.raises(DegenerateProbeError):
        make_probe(MaxVariance(), b, diag)


def test_evolution_identity_at_zero_time(chain_scenario):
    b, diag, rr = chain_scenario
    rho0 = make_probe(Ghz(), b, diag)
    out = evolve_dephasing(rho0, rr, x1=1.3, x2=0.7, t=0.0)
    assert np.allclose(out.matrix, rho0.matrix)


def test_unitary_limit_preserves_magnitudes(chain_scenario):
    b, diag, rr = chain_scenario
    rho0 = make_probe(Product(math.pi / 8), b, diag)
    out = evolve_dephasing(rho0, rr, x1=0.9, x2=0.0, t=2.7)
    assert np.allclose(np.abs(out.matrix), np.abs(rho0.matrix), atol=1e-14)


def test_evolution_preserves_trace_hermiticity_psd(chain_scenario):
    b, diag, rr = chain_scenario
    rho0 = make_probe(Product(math.pi / 8), b, diag)
    for t in (0.1, 0.8, 3.0):
        out = evolve_dephasing(rho0, rr, x1=1.0, x2=0.5, t=t)
        m = out.matrix
        assert abs(m.trace() - 1.0) < 1e-12
        assert np.abs(m - m.conj().T).max() < 1e-14
        assert out.min_eigenvalue() > -1e-10


def test_evolution_argument_errors(chain_scenario):
    b, diag, rr = chain_scenario
    rho0 = make_probe(Ghz(), b, diag)
    with pytest.raises(ValueError):
        evolve_dephasing(rho0, rr, 1.0, 0.5, -0.1)
    with pytest.raises(ValueError):
        evolve_dephasing(rho0, rr, 1.0, -0.5, 0.1)


def test_two_level_state_eigenvalues():
    pr = TwoLevelProbe(eps=2.0, lambda_sq=4.0, x1=1.0, x2=1.0)
    w0 = np.linalg.eigvalsh(two_level_state(pr, 0.0).matrix)
    assert np.allclose(w0, [0.0, 1.0], atol=1e-12)

    t_half = pr.tau_d * math.log(2.0) / 2.0
    w = np.linalg.eigvalsh(two_level_state(pr, t_half).matrix)
    assert np.allclose(w, [0.25, 0.75], atol=1e-12)

    w_inf = np.linalg.eigvalsh(two_level_state(pr, 50.0 * pr.tau_d).matrix)
    assert np.allclose(w_inf, [0.5, 0.5], atol=1e-12)


def test_two_level_matches_full_evolution_block():
    b = build_basis(5)
    diag = build_diagonals(SpinChainUniform(k=3), UncorrelatedPBody(p=2), b)
    rr = pair_rates(diag)
    rho0 = make_probe(Ghz(), b, diag)
    x1, x2 = 0.8, 0.6
    i0 = int(np.argmin(diag.hamiltonian_diag))
    i1 = int(np.argmax(diag.hamiltonian_diag))
    eps = diag.hamiltonian_diag[i1] - diag.hamiltonian_diag[i0]
    lam_sq = sum((lv[i1] - lv[i0]) ** 2 for lv in diag.lindblad_diags)
    probe = TwoLevelProbe(eps=eps, lambda_sq=lam_sq, x1=x1, x2=x2)
    for t in (0.0, 0.05, 0.2):
        full = evolve_dephasing(rho0, rr, x1, x2, t).matrix
        block = full[np.ix_([i0, i1], [i0, i1])]
        reduced = two_level_state(probe, t).matrix
        assert np.abs(block - reduced).max() < 1e-14


def test_fidelity_closed_form():
    pr = TwoLevelProbe(eps=3.0, lambda_sq=2.0, x1=1.0, x2=0.4)
    rho0 = two_level_state(pr, 0.0)
    assert fidelity(rho0, rho0) == pytest.approx(1.0)
    for t in (0.1, 0.7, 2.0):
        expected = 0.5 * (1.0 + math.exp(-2 * t / pr.tau_d) * math.cos(t / pr.tau_z))
        assert fidelity(two_level_state(pr, t), rho0) == pytest.approx(expected, abs=1e-12)


def test_fidelity_zero_at_pi_tau_z_without_dephasing():
    pr = TwoLevelProbe(eps=2.0, lambda_sq=4.0, x1=1.0, x2=0.0)
    rho0 = two_level_state(pr, 0.0)
    t = math.pi * pr.tau_z
    assert fidelity(two_level_state(pr, t), rho0) == pytest.approx(0.0, abs=1e-12)


def test_fidelity_long_time_limit_and_dim_check():
    pr = TwoLevelProbe(eps=2.0, lambda_sq=4.0, x1=1.0, x2=1.0)
    rho0 = two_level_state(pr, 0.0)
    assert fidelity(two_level_state(pr, 60 * pr.tau_d), rho0) == pytest.approx(0.5, abs=1e-10)
    with pytest.raises(ValueError):
        fidelity(rho0, DensityMatrix(np.eye(4) / 4.0))


def test_purity_closed_form_and_monotonicity():
    pr = TwoLevelProbe(eps=2.0, lambda_sq=4.0, x1=1.0, x2=1.0)
    assert purity(two_level_state(pr, 0.0)) == pytest.approx(1.0)
    quarter = purity(two_level_state(pr, pr.tau_d / 4.0))
    assert quarter == pytest.approx((1.0 + math.exp(-1.0)) / 2.0, abs=1e-12)
    assert purity(two_level_state(pr, 80 * pr.tau_d)) == pytest.approx(0.5, abs=1e-12)

    values = [purity(two_level_state(pr, t)) for t in np.linspace(0, 3 * pr.tau_d, 25)]
    assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))


def test_dense_evolution_purity_nonincreasing(chain_scenario):
    b, diag, rr = chain_scenario
    rho0 = make_probe(Product(math.pi / 8), b, diag)
    grid = np.linspace(0.0, 3.0, 16)
    values = [purity(evolve_dephasing(rho0, rr, 1.0, 0.4, t)) for t in grid]
    assert all(a >= b_ - 1e-12 for a, b_ in zip(values, values[1:]))


def test_density_matrix_validation():
    with pytest.raises(ValueError, match="Hermitian"):
        DensityMatrix(np.array([[0.5, 0.5], [0.1, 0.5]]))
    with pytest.raises(ValueError, match="trace"):
        DensityMatrix(np.eye(2))
    with pytest.raises(ValueError, match="square"):
        DensityMatrix(np.ones((2, 3)))
