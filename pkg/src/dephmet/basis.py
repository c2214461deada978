"""Computational basis for N two-level systems and diagonal operator tables.

Encoding convention (fixed here, arbitrary in principle): basis index i is
an N-bit word, bit s-1 holds site s, bit value 1 means the site is in the
|+> eigenstate of sigma^z (single-body eigenvalue +1) and 0 means |->.
Site 1 is the least significant bit, so the reference state |v_q> with q
trailing up-spins (sites N-q+1..N) is the word with its top q bits set.
"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Union

import numpy as np

from .combinatorics import binomial
from .errors import CapacityError

__all__ = [
    "DENSE_SITE_LIMIT",
    "SpinBasis",
    "SymmetrizedUniform",
    "LongRangeIsing",
    "SpinChainUniform",
    "CustomDiagonal",
    "HamiltonianSpec",
    "UncorrelatedPBody",
    "CollectiveSymmetrizedKBody",
    "LindbladSpec",
    "DiagonalOperatorSet",
    "PairRates",
    "build_basis",
    "zprod_eigenvalue",
    "build_diagonals",
    "pair_rates",
]

DENSE_SITE_LIMIT = 14


@dataclass(frozen=True)
class SpinBasis:
    """Ordered basis of 2^N spin configurations with bitword encoding."""

    n_sites: int
    index_to_bits: np.ndarray  # identity map, kept explicit as the contract

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    def reference_state(self, q: int) -> int:
        """Index of |v_q>: q trailing up-spins (the top q bits set)."""
        if not 0 <= q <= self.n_sites:
            raise ValueError(f"q={q} outside 0..{self.n_sites}")
        return ((1 << q) - 1) << (self.n_sites - q)

    def site_values(self, index: int) -> np.ndarray:
        """Per-site sigma^z eigenvalues (+-1) of basis state `index`."""
        bits = (index >> np.arange(self.n_sites)) & 1
        return 2 * bits.astype(np.int64) - 1

    def sign_table(self) -> np.ndarray:
        """(dim, n_sites) array of +-1 site values for every basis state."""
        idx = np.arange(self.dim, dtype=np.uint32)[:, None]
        bits = (idx >> np.arange(self.n_sites, dtype=np.uint32)[None, :]) & 1
        return 2 * bits.astype(np.int8) - 1

    def plus_counts(self) -> np.ndarray:
        """Number of up-spins per basis state."""
        return np.bitwise_count(np.arange(self.dim, dtype=np.uint32)).astype(np.int64)


def build_basis(n_sites: int, dense_limit: int = DENSE_SITE_LIMIT) -> SpinBasis:
    """Construct the full 2^N basis; refuses above the dense limit."""
    if n_sites < 1:
        raise ValueError(f"need at least one site, got {n_sites}")
    if n_sites > dense_limit:
        raise CapacityError(
            f"n_sites={n_sites} exceeds the dense limit {dense_limit}; "
            "closed-form paths have no cap, dense ones do"
        )
    return SpinBasis(n_sites=n_sites, index_to_bits=np.arange(1 << n_sites, dtype=np.uint32))


def zprod_eigenvalue(basis: SpinBasis, state_index: int, sites: tuple[int, ...]) -> int:
    """Eigenvalue (+-1) of sigma^z_{i1}...sigma^z_{ik} on one basis state.

    `sites` are 1-based and must be strictly increasing.
    """
    if not 0 <= state_index < basis.dim:
        raise ValueError(f"state index {state_index} outside basis of dim {basis.dim}")
    if len(sites) == 0:
        raise ValueError("need at least one site")
    prev = 0
    value = 1
    for s in sites:
        if s <= prev:
            raise ValueError(f"sites must be strictly increasing, got {sites}")
        if not 1 <= s <= basis.n_sites:
            raise ValueError(f"site {s} outside 1..{basis.n_sites}")
        prev = s
        if not (state_index >> (s - 1)) & 1:
            value = -value
    return value


# --------------------------------------------------------------------------
# Operator specifications
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SymmetrizedUniform:
    """Sum over all k-tuples of a product of identical single-body terms
    with extremal eigenvalues (eps_min on |->, eps_max on |+>)."""

    k: int
    eps_min: float = -1.0
    eps_max: float = 1.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"body order k={self.k} must be >= 1")
        if self.eps_min > self.eps_max:
            raise ValueError("eps_min must not exceed eps_max")


@dataclass(frozen=True)
class LongRangeIsing:
    """Pair couplings 1/|i-j|^alpha with the estimated amplitude factored out."""

    alpha: float

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha={self.alpha} must be >= 0")


@dataclass(frozen=True)
class SpinChainUniform:
    """Sum over all k-tuples of sigma^z products, unit coupling."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"body order k={self.k} must be >= 1")


@dataclass(frozen=True)
class CustomDiagonal:
    """Arbitrary diagonal Hamiltonian given by its eigenvalue table."""

    eigenvalues: tuple[float, ...]


HamiltonianSpec = Union[SymmetrizedUniform, LongRangeIsing, SpinChainUniform, CustomDiagonal]


@dataclass(frozen=True)
class UncorrelatedPBody:
    """One sigma^z-product Lindblad operator per p-tuple of sites."""

    p: int

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"body order p={self.p} must be >= 1")


@dataclass(frozen=True)
class CollectiveSymmetrizedKBody:
    """A single Lindblad operator: the sum of all k-tuple sigma^z products."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"body order k={self.k} must be >= 1")


LindbladSpec = Union[UncorrelatedPBody, CollectiveSymmetrizedKBody]


@dataclass(frozen=True)
class DiagonalOperatorSet:
    """Per-state eigenvalue tables of the Hamiltonian and Lindblad operators."""

    hamiltonian_diag: np.ndarray
    lindblad_diags: tuple[np.ndarray, ...] = field(default_factory=tuple)

    @property
    def dim(self) -> int:
        return self.hamiltonian_diag.shape[0]


@dataclass(frozen=True)
class PairRates:
    """Coherent phase rates eps_ij and dephasing factors lambda^2_ij.

    eps is antisymmetric, lambda_sq symmetric nonnegative with zero
    diagonal; both are dense (dim, dim) tables, so keep dim modest.
    """

    eps: np.ndarray
    lambda_sq: np.ndarray

    @property
    def dim(self) -> int:
        return self.eps.shape[0]


def _kbody_symmetrized_diag(basis: SpinBasis, k: int, eps_min: float, eps_max: float) -> np.ndarray:
    """Eigenvalue of sum_{k-tuples} prod(single-body) per basis state.

    A state with q up-spins gets sum_j C(q,j) C(n-q,k-j) eps_max^j eps_min^(k-j).
    """
    n = basis.n_sites
    by_q = np.zeros(n + 1)
    for q in range(n + 1):
        total = 0.0
        for j in range(k + 1):
            c = binomial(q, j) * binomial(n - q, k - j)
            if c:
                total += c * (eps_max ** j) * (eps_min ** (k - j))
        by_q[q] = total
    return by_q[basis.plus_counts()]


def _long_range_ising_diag(basis: SpinBasis, alpha: float) -> np.ndarray:
    """-sum_{i<j} s_i s_j / |i-j|^alpha per basis state."""
    signs = basis.sign_table().astype(np.float64)
    n = basis.n_sites
    diag = np.zeros(basis.dim)
    for d in range(1, n):
        w = float(d) ** (-alpha)
        for a in range(n - d):
            diag -= w * signs[:, a] * signs[:, a + d]
    return diag


def build_diagonals(spec_h: HamiltonianSpec, spec_l: LindbladSpec, basis: SpinBasis) -> DiagonalOperatorSet:
    """Evaluate the diagonal spectra of the Hamiltonian and Lindblad set."""
    n = basis.n_sites

    if isinstance(spec_h, SymmetrizedUniform):
        if spec_h.k > n:
            raise ValueError(f"body order k={spec_h.k} exceeds n={n}")
        h = _kbody_symmetrized_diag(basis, spec_h.k, spec_h.eps_min, spec_h.eps_max)
    elif isinstance(spec_h, SpinChainUniform):
        if spec_h.k > n:
            raise ValueError(f"body order k={spec_h.k} exceeds n={n}")
        h = _kbody_symmetrized_diag(basis, spec_h.k, -1.0, 1.0)
    elif isinstance(spec_h, LongRangeIsing):
        h = _long_range_ising_diag(basis, spec_h.alpha)
    elif isinstance(spec_h, CustomDiagonal):
        h = np.asarray(spec_h.eigenvalues, dtype=np.float64)
        if h.shape != (basis.dim,):
            raise ValueError(f"custom diagonal has length {h.shape}, basis dim is {basis.dim}")
    else:
        raise TypeError(f"unknown Hamiltonian spec {spec_h!r}")

    if isinstance(spec_l, UncorrelatedPBody):
        if spec_l.p > n:
            raise ValueError(f"body order p={spec_l.p} exceeds n={n}")
        signs = basis.sign_table().astype(np.float64)
        diags = tuple(
            np.prod(signs[:, list(sites)], axis=1)
            for sites in combinations(range(n), spec_l.p)
        )
    elif isinstance(spec_l, CollectiveSymmetrizedKBody):
        if spec_l.k > n:
            raise ValueError(f"body order k={spec_l.k} exceeds n={n}")
        diags = (_kbody_symmetrized_diag(basis, spec_l.k, -1.0, 1.0),)
    else:
        raise TypeError(f"unknown Lindblad spec {spec_l!r}")

    return DiagonalOperatorSet(hamiltonian_diag=h, lindblad_diags=diags)


def pair_rates(diag: DiagonalOperatorSet) -> PairRates:
    """Aggregate pair rates eps_ij = eps_i - eps_j and
    lambda^2_ij = sum_nu (lambda_i^nu - lambda_j^nu)^2."""
    h = diag.hamiltonian_diag
    eps = h[:, None] - h[None, :]
    lam = np.zeros((diag.dim, diag.dim))
    for lv in diag.lindblad_diags:
        d = lv[:, None] - lv[None, :]
        lam += d * d
    return PairRates(eps=eps, lambda_sq=lam)
