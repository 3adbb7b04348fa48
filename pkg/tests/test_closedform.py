import math
import warnings

import numpy as np
import pytest

from lfree.closedform import (
    DomainError, coefficient_bound, kesten_norm, leinert_norm, paving_norm_bound, paving_size,
    qpq_norm, qvq_norm,
)


def test_kesten_norm():
    assert kesten_norm(1) == 2
    assert kesten_norm(2) == pytest.approx(3.464102, abs=1e-6)
    assert kesten_norm(13) == pytest.approx(10)
    with pytest.raises(DomainError):
        kesten_norm(0)


def test_leinert_norm():
    assert leinert_norm(2) == 2
    assert leinert_norm(5) == 4
    with pytest.warns(UserWarning):
        assert leinert_norm(1) == 0
    with pytest.raises(DomainError):
        leinert_norm(0)


def test_coefficient_bound():
    assert coefficient_bound(2, [1 / math.sqrt(2)] * 2) == pytest.approx(1.414214, abs=1e-6)
    assert coefficient_bound(4, [0.5] * 4) == pytest.approx(1.732051, abs=1e-6)
    with pytest.raises(DomainError):
        coefficient_bound(2, [1, 1])
    with pytest.raises(DomainError):
        coefficient_bound(3, [0.1, 0.1])
    for n in range(2, 30):
        alphas = [1 / math.sqrt(n)] * n
        # 2 sqrt(n-1) / sqrt(n) = 2 sqrt(1 - 1/n)
        assert coefficient_bound(n, alphas) == pytest.approx(leinert_norm(n) / math.sqrt(n), rel=1e-14)


def test_qpq_norm_examples():
    assert qpq_norm(0.5, 0.5) == pytest.approx(1.0, abs=1e-15)
    assert qpq_norm(0.5, 1 / 3) == pytest.approx(0.5 + math.sqrt(2) / 3, abs=1e-12)
    assert qpq_norm(0.5, 1 / 3) == pytest.approx(0.971405, abs=1e-6)
    assert qpq_norm(0.5, 0.25) == pytest.approx(0.933013, abs=1e-6)
    for bad in ((0.3, 0.4), (0.6, 0.2), (0.5, 0.0)):
        with pytest.raises(DomainError):
            qpq_norm(*bad)


def test_qvq_norm_examples():
    assert qvq_norm(0.5) == 1
    assert qvq_norm(1 / 3) == pytest.approx(0.942809, abs=1e-6)
    assert qvq_norm(0.25) == pytest.approx(math.sqrt(3) / 2, abs=1e-15)
    for t in np.linspace(0.01, 0.99, 50):
        assert qvq_norm(t) == pytest.approx(qvq_norm(1 - t), abs=1e-15)
    with pytest.raises(DomainError):
        qvq_norm(1.0)


def test_grid_identities():
    for t in np.linspace(1e-3, 0.5, 200):
        assert qpq_norm(0.5, t) == pytest.approx(0.5 + math.sqrt(t * (1 - t)), abs=1e-14)
        assert qpq_norm(0.5, t) == pytest.approx((1 + qvq_norm(t)) / 2, abs=1e-14)
    for n in range(2, 60):
        assert paving_norm_bound(n).bound == pytest.approx(leinert_norm(n) / n, rel=1e-15)
        assert paving_norm_bound(n).bound == pytest.approx(qvq_norm(1 / n), rel=1e-12)


def test_qpq_norm_range():
    grid = np.linspace(1e-3, 0.5, 60)
    for tp in grid:
        for tq in grid[grid <= tp]:
            v = qpq_norm(tp, tq)
            assert tp - 1e-15 <= v <= 1 + 1e-15


def test_paving_norm_bound():
    assert paving_norm_bound(2).bound == 1
    assert paving_norm_bound(3).bound == pytest.approx(0.942809, abs=1e-6)
    assert paving_norm_bound(5).bound == pytest.approx(0.8)
    bounds = [paving_norm_bound(n).bound for n in range(2, 100)]
    assert all(0 < b <= 1 for b in bounds)
    assert all(a > b for a, b in zip(bounds, bounds[1:]))
    with pytest.raises(DomainError):
        paving_norm_bound(1)


def test_paving_size_examples():
    assert paving_size(1.0).n == 4
    p = paving_size(2.0)
    assert p.n == 1 and p.vacuous
    assert paving_size(0.5).n == 16
    assert paving_size(5.0).vacuous
    with pytest.raises(DomainError):
        paving_size(0)


def test_paving_size_monotone():
    eps = np.linspace(0.01, 2.0, 2000)
    ns = [paving_size(e).n for e in eps]
    assert all(a >= b for a, b in zip(ns, ns[1:]))
    for e, n in zip(eps, ns):
        if n > 1:
            assert paving_norm_bound(n).bound <= e
