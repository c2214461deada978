"""Exact combinatorics of sigma^z-product operators on N spins.

Everything here is closed-form integer arithmetic: degeneracies of the
+1/-1 eigenvalues of k-site sigma^z products on the reference states with
q up-spins, and the dephasing-rate ("gap") spectrum lambda^2 seen from the
all-down state under an uncorrelated p-body dissipator.

Python integers are arbitrary precision, so binomials are exact for any
size; ``log_binomial`` is provided for log-space work at large N where the
float conversion of the exact integer would overflow.
"""

import math

from .errors import UnsupportedConfigurationError

__all__ = [
    "binomial",
    "log_binomial",
    "kbody_degeneracy",
    "gap_spectrum_from_reference",
    "min_nonzero_gap",
]


def binomial(n: int, k: int) -> int:
    """C(n, k), with the convention C(n, k) = 0 for k < 0 or k > n."""
    if k < 0 or k > n:
        return 0
    return math.comb(n, k)


def log_binomial(n: int, k: int) -> float:
    """ln C(n, k) via log-gamma; -inf outside the support."""
    if k < 0 or k > n:
        return -math.inf
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _check_site_args(n: int, k: int, q: int) -> None:
    if n < 1:
        raise ValueError(f"need at least one site, got n={n}")
    if not 1 <= k <= n:
        raise ValueError(f"body order k={k} outside 1..{n}")
    if not 0 <= q <= n:
        raise ValueError(f"up-spin count q={q} outside 0..{n}")


def kbody_degeneracy(n: int, k: int, q: int) -> tuple[int, int]:
    """Counts of k-site sigma^z products with eigenvalue +1 and -1.

    The reference state has q up-spins; a product over a k-tuple picks up
    one factor -1 per site in the down region, so the eigenvalue is
    (-1)^r with r the number of chosen down sites.  Splitting the tuple
    count C(n, k) by the parity of r gives

        count(+1) = sum_{r even} C(n-q, r) * C(q, k-r)
        count(-1) = sum_{r odd}  C(n-q, r) * C(q, k-r)

    which reproduces the odd-k and even-k closed forms with their roles
    swapped automatically.  Returns (count_plus, count_minus).
    """
    _check_site_args(n, k, q)
    count_plus = 0
    count_minus = 0
    for r in range(k + 1):
        term = binomial(n - q, r) * binomial(q, k - r)
        if r % 2 == 0:
            count_plus += term
        else:
            count_minus += term
    return count_plus, count_minus


def gap_spectrum_from_reference(n: int, p: int) -> list[tuple[int, int]]:
    """Dephasing rates lambda^2(q) between the all-down state and |v_q>.

    For the uncorrelated p-body sigma^z dissipator, each p-tuple that
    straddles the q flipped sites an odd number of times contributes 4,
    hence

        lambda^2(q) = 4 * sum_s C(q, 2s+1) * C(n-q, p-2s-1).

    Returns [(q, lambda_sq)] for q = 1..n.
    """
    if not 1 <= p <= n:
        raise ValueError(f"body order p={p} outside 1..{n}")
    spectrum = []
    for q in range(1, n + 1):
        total = 0
        for j in range(1, min(q, p) + 1, 2):
            total += binomial(q, j) * binomial(n - q, p - j)
        spectrum.append((q, 4 * total))
    return spectrum


def min_nonzero_gap(n: int, p: int) -> int:
    """Minimal nonzero dephasing rate, 4*C(n-1, p-1), valid for p < floor(n/2).

    The closed form is the q = 1 entry of the gap spectrum and is only the
    minimum in that regime; outside it the full spectrum must be scanned,
    so we refuse rather than silently return a non-minimal value.
    """
    if not 1 <= p <= n:
        raise ValueError(f"body order p={p} outside 1..{n}")
    if p >= n // 2:
        raise UnsupportedConfigurationError(
            f"closed-form minimal gap requires p < floor(n/2); got p={p}, n={n}. "
            "Scan gap_spectrum_from_reference instead."
        )
    return 4 * binomial(n - 1, p - 1)
