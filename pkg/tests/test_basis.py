"""Basis construction, diagonal spectra, and pair rates."""

import numpy as np
import pytest

from dephmet.basis import (
    CollectiveSymmetrizedKBody, CustomDiagonal, LongRangeIsing, SpinChainUniform,
    SymmetrizedUniform, UncorrelatedPBody, build_basis, build_diagonals,
    pair_rates, zprod_eigenvalue,
)
from dephmet.combinatorics import binomial
from dephmet.errors import CapacityError


def test_single_spin_basis():
    b = build_basis(1)
    assert b.dim == 2
    assert list(b.index_to_bits) == [0, 1]


def test_group_sizes_by_up_count():
    b = build_basis(4)
    counts = np.bincount(b.plus_counts(), minlength=5)
    assert list(counts) == [1, 4, 6, 4, 1]
    assert b.dim == 16


def test_reference_states():
    b = build_basis(10)
    assert b.dim == 1024
    v5 = b.reference_state(5)
    values = b.site_values(v5)
    assert list(values[:5]) == [-1] * 5
    assert list(values[5:]) == [1] * 5
    assert b.reference_state(0) == 0
    assert b.reference_state(10) == 1023


def test_capacity_error_names_limit():
    with pytest.raises(CapacityError, match="14"):
        build_basis(15)
    b = build_basis(5, dense_limit=5)
    assert b.dim == 32
    with pytest.raises(CapacityError, match="5"):
        build_basis(6, dense_limit=5)


def test_zprod_eigenvalue_cases():
    b = build_basis(4)
    assert zprod_eigenvalue(b, 0, (1, 2)) == 1          # |---->
    v1 = b.reference_state(1)                            # |---+>
    assert zprod_eigenvalue(b, v1, (3, 4)) == -1
    v2 = b.reference_state(2)                            # |--++>
    assert zprod_eigenvalue(b, v2, (1, 2)) == 1
    assert zprod_eigenvalue(b, v2, (2, 3)) == -1


def test_zprod_argument_errors():
    b = build_basis(4)
    with pytest.raises(ValueError):
        zprod_eigenvalue(b, 0, (2, 2))
    with pytest.raises(ValueError):
        zprod_eigenvalue(b, 0, (3, 1))
    with pytest.raises(ValueError):
        zprod_eigenvalue(b, 0, (1, 5))


def test_spin_chain_single_body_diagonal():
    b = build_basis(2)
    diag = build_diagonals(SpinChainUniform(k=1), UncorrelatedPBody(p=1), b)
    assert list(diag.hamiltonian_diag) == [-2.0, 0.0, 0.0, 2.0]


def test_chain_diagonal_matches_zprod_sum():
    from itertools import combinations
    for n, k in [(4, 2), (5, 3), (6, 2)]:
        b = build_basis(n)
        diag = build_diagonals(SpinChainUniform(k=k), UncorrelatedPBody(p=1), b)
        for idx in range(0, b.dim, 3):
            expected = sum(zprod_eigenvalue(b, idx, tuple(s + 1 for s in sites))
                           for sites in combinations(range(n), k))
            assert diag.hamiltonian_diag[idx] == pytest.approx(expected, abs=1e-12)


def test_symmetrized_uniform_ghz_branches():
    b = build_basis(5)
    diag = build_diagonals(SymmetrizedUniform(k=3, eps_min=-0.5, eps_max=1.5),
                           UncorrelatedPBody(p=1), b)
    assert diag.hamiltonian_diag[0] == pytest.approx(binomial(5, 3) * (-0.5) ** 3)
    assert diag.hamiltonian_diag[-1] == pytest.approx(binomial(5, 3) * 1.5 ** 3)


def test_long_range_ising_diagonal():
    b4 = build_basis(4)
    diag = build_diagonals(LongRangeIsing(alpha=0.0), UncorrelatedPBody(p=1), b4)
    assert diag.hamiltonian_diag[0] == pytest.approx(-6.0)   # all aligned, -C(4,2)

    b3 = build_basis(3)
    diag3 = build_diagonals(LongRangeIsing(alpha=1.0), UncorrelatedPBody(p=1), b3)
    # |--+> : -[(+1)*1 + (-1)/2 + (-1)*1] = +1/2
    idx = b3.reference_state(1)
    assert diag3.hamiltonian_diag[idx] == pytest.approx(0.5)


def test_custom_diagonal_roundtrip_and_shape_check():
    b = build_basis(2)
    diag = build_diagonals(CustomDiagonal(eigenvalues=(0.0, 1.0, 2.0, 3.0)),
                           UncorrelatedPBody(p=1), b)
    assert list(diag.hamiltonian_diag) == [0.0, 1.0, 2.0, 3.0]
    with pytest.raises(ValueError):
        build_diagonals(CustomDiagonal(eigenvalues=(0.0, 1.0)), UncorrelatedPBody(p=1), b)


def test_lindblad_diags_are_sign_valued():
    b = build_basis(5)
    diag = build_diagonals(SpinChainUniform(k=1), UncorrelatedPBody(p=2), b)
    assert len(diag.lindblad_diags) == binomial(5, 2)
    for lv in diag.lindblad_diags:
        assert set(np.unique(lv)) <= {-1.0, 1.0}


def test_collective_lindblad_single_operator():
    b = build_basis(4)
    diag = build_diagonals(SpinChainUniform(k=1), CollectiveSymmetrizedKBody(k=3), b)
    assert len(diag.lindblad_diags) == 1
    lv = diag.lindblad_diags[0]
    assert lv[0] == pytest.approx(-binomial(4, 3))
    assert lv[-1] == pytest.approx(binomial(4, 3))


def test_flip_symmetry_of_chain_diagonals():
    # global spin flip maps index i -> ~i; k even symmetric, k odd antisymmetric
    for k in (1, 2, 3):
        b = build_basis(5)
        diag = build_diagonals(SpinChainUniform(k=k), UncorrelatedPBody(p=1), b)
        h = diag.hamiltonian_diag
        flipped = h[::-1]
        if k % 2 == 0:
            assert np.allclose(h, flipped)
        else:
            assert np.allclose(h, -flipped)


def test_body_order_beyond_sites_rejected():
    b = build_basis(3)
    with pytest.raises(ValueError):
        build_diagonals(SpinChainUniform(k=4), UncorrelatedPBody(p=1), b)
    with pytest.raises(ValueError):
        build_diagonals(SpinChainUniform(k=1), UncorrelatedPBody(p=4), b)


def test_pair_rates_values_and_symmetries():
    b = build_basis(4)
    diag = build_diagonals(SpinChainUniform(k=1), UncorrelatedPBody(p=1), b)
    rr = pair_rates(diag)
    assert np.allclose(np.diagonal(rr.eps), 0.0)
    assert np.allclose(np.diagonal(rr.lambda_sq), 0.0)
    assert np.allclose(rr.eps, -rr.eps.T)
    assert np.allclose(rr.lambda_sq, rr.lambda_sq.T)
    assert np.all(rr.lambda_sq >= 0)
    # one flipped site contributes (-1 - 1)^2 = 4
    v1 = b.reference_state(1)
    assert rr.lambda_sq[0, v1] == pytest.approx(4.0)


def test_pair_rates_match_gap_spectrum():
    from dephmet.combinatorics import gap_spectrum_from_reference
    b = build_basis(5)
    diag = build_diagonals(SpinChainUniform(k=1), UncorrelatedPBody(p=2), b)
    rr = pair_rates(diag)
    spectrum = dict(gap_spectrum_from_reference(5, 2))
    for q in range(1, 6):
        assert rr.lambda_sq[0, b.reference_state(q)] == pytest.approx(spectrum[q])
