"""Closed-form norm values and paving bounds.

These are targets for the simulations, computed in double precision.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence


class DomainError(ValueError):
    pass


def kesten_norm(k: int) -> float:
    """Norm of the Laplacian of ``F_k``: ``2 sqrt(2k - 1)``."""
    if k < 1:
        raise DomainError("k must be >= 1")
    return 2.0 * math.sqrt(2 * k - 1)


def leinert_norm(n: int) -> float:
    """``2 sqrt(n - 1)``, the norm of ``sum lambda(g_i)`` over an n-element Leinert set.

    For ``n = 1`` the formula gives 0 while a single unitary has norm 1; the
    formula value is returned with a warning.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if n == 1:
        warnings.warn("leinert_norm(1) = 0 is the formula value; a single unitary has norm 1",
                      stacklevel=2)
    return 2.0 * math.sqrt(n - 1)


def coefficient_bound(n: int, alphas: Sequence[complex]) -> float:
    """``2 sqrt(1 - 1/n)`` for coefficients with ``sum |alpha_i|^2 <= 1``."""
    if n < 2:
        raise DomainError("n must be >= 2")
    if len(alphas) != n:
        raise DomainError(f"expected {n} coefficients, got {len(alphas)}")
    norm2 = sum(abs(a) ** 2 for a in alphas)
    if norm2 > 1 + 1e-12:
        raise DomainError(f"sum |alpha_i|^2 = {norm2} exceeds 1")
    return 2.0 * math.sqrt(1.0 - 1.0 / n)


def qpq_norm(tau_p: float, tau_q: float) -> float:
    """Norm of ``qpq`` for free projections with ``0 < tau(q) <= tau(p) <= 1/2``."""
    if not 0 < tau_q <= tau_p <= 0.5:
        raise DomainError(f"need 0 < tau_q <= tau_p <= 1/2, got tau_p={tau_p}, tau_q={tau_q}")
    return (tau_p + tau_q - 2 * tau_p * tau_q
            + 2 * math.sqrt(tau_p * (1 - tau_p) * tau_q * (1 - tau_q)))


def qvq_norm(tau_q: float) -> float:
    """``||q v q|| = 2 sqrt(tau(q)(1 - tau(q)))`` for ``v = 2p - 1``, ``tau(p) = 1/2``, free from q."""
    if not 0 < tau_q < 1:
        raise DomainError(f"need 0 < tau_q < 1, got {tau_q}")
    return 2.0 * math.sqrt(tau_q * (1 - tau_q))


@dataclass(frozen=True)
class PavingBound:
    n: int
    bound: float


def paving_norm_bound(n: int) -> PavingBound:
    if n < 2:
        raise DomainError("n must be >= 2")
    return PavingBound(n, 2.0 * math.sqrt(n - 1) / n)


@dataclass(frozen=True)
class PavingSize:
    epsilon: float
    n: int
    vacuous: bool = False  # n = 1: no partition is needed (epsilon >= 2)


def paving_size(epsilon: float) -> PavingSize:
    """The integer n with ``2 n^-1/2 <= epsilon < 2 (n-1)^-1/2``.

    For that n, ``2 sqrt(n-1)/n <= epsilon`` and ``n < 4 epsilon^-2 + 1``.
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be > 0")
    if epsilon >= 2:
        return PavingSize(epsilon, 1, vacuous=True)
    n = max(1, math.ceil(4.0 / epsilon ** 2))
    # float guard: settle the bracketing with the same comparisons callers check
    while 2.0 / math.sqrt(n) > epsilon:
        n += 1
    while n > 1 and 2.0 / math.sqrt(n - 1) <= epsilon:
        n -= 1
    if n == 1:
        return PavingSize(epsilon, 1, vacuous=True)
    assert n < 4.0 / epsilon ** 2 + 1
    assert paving_norm_bound(n).bound <= epsilon
    return PavingSize(epsilon, n)


__all__ = [
    "DomainError", "PavingBound", "PavingSize", "coefficient_bound", "kesten_norm",
    "leinert_norm", "paving_norm_bound", "paving_size", "qpq_norm", "qvq_norm",
]
