import itertools

import numpy as np
import pytest

from lfree import calibration, closedform
from lfree.experiments import haar_trace_experiment, defect_experiment
from lfree.rmt import (
    BlockMatrix, DimensionCapExceeded, RngSpec, lfree_defect, op_norm, rank_for_trace, read_dump,
    sample_contraction, sample_haar_unitary, sample_projection, sample_symmetry, tau, word_trace,
    write_dump,
)


def test_haar_unitarity_and_scalar_case():
    u1 = sample_haar_unitary(1, RngSpec(0))
    assert u1.shape == (1, 1) and abs(abs(u1[0, 0]) - 1) < 1e-15
    for d in (2, 17, 120):
        u = sample_haar_unitary(d, RngSpec(d))
        assert op_norm(u @ u.conj().T - np.eye(d)) < 1e-12
        assert abs(op_norm(u) - 1) < 1e-10


def test_haar_trace_is_small():
    cal = calibration.check("haar_trace")
    rep = haar_trace_experiment(200, 1, 50, cal["threshold"])
    assert rep.passed


def test_haar_phase_correction_removes_bias():
    # without the phase fix the diagonal of Q is biased toward the positive reals
    vals = [sample_haar_unitary(4, RngSpec(7, i))[0, 0] for i in range(2000)]
    assert abs(np.mean(vals)) < 0.05


def test_determinism():
    a = sample_haar_unitary(30, RngSpec(5, 2, (1,)))
    b = sample_haar_unitary(30, RngSpec(5, 2, (1,)))
    c = sample_haar_unitary(30, RngSpec(5, 3, (1,)))
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    assert RngSpec(5, 2, (1,)).provenance() == "sampled(5,2.1)"


def test_op_norm_examples():
    assert op_norm(np.eye(3)) == pytest.approx(1)
    assert op_norm(np.diag([3.0, -1.0])) == pytest.approx(3)
    assert op_norm(np.array([[0, 5.0], [0, 0]])) == pytest.approx(5)
    with pytest.raises(DimensionCapExceeded):
        op_norm(np.eye(5), cap=4)


def test_projection_examples():
    p = sample_projection(0.5, 4, RngSpec(1))
    assert np.linalg.matrix_rank(p) == 2 and tau(p).real == pytest.approx(0.5)
    p = sample_projection("1/3", 60, RngSpec(2))
    assert op_norm(p @ p - p) < 1e-12 and op_norm(p - p.conj().T) < 1e-12
    assert rank_for_trace("1/3", 60) == 20
    with pytest.raises(ValueError):
        rank_for_trace(0.5, 5)
    with pytest.raises(ValueError):
        rank_for_trace(1, 4)


def test_qpq_single_pair():
    p = sample_projection("1/2", 600, RngSpec(3, 0, (0,)))
    q = sample_projection("1/3", 600, RngSpec(3, 0, (1,)))
    assert abs(op_norm(q @ p @ q) - closedform.qpq_norm(0.5, 1 / 3)) < 0.05


def test_residuals_and_trace_property():
    rng = RngSpec(4)
    v = sample_symmetry(40, rng.child(0))
    assert op_norm(v @ v - np.eye(40)) < 1e-10 and op_norm(v - v.conj().T) < 1e-10
    assert abs(tau(v)) < 1e-12
    x = sample_contraction(41, rng.child(1))
    assert op_norm(x) <= 1 + 1e-12 and abs(tau(x)) < 1e-12
    y = sample_haar_unitary(41, rng.child(2))
    assert abs(tau(x @ y) - tau(y @ x)) < 1e-12


def test_block_matrix_matches_dense():
    rng = np.random.default_rng(0)

    def rand_block(nb, bs, keys):
        return BlockMatrix(nb, bs, {k: rng.normal(size=(bs, bs)) + 1j * rng.normal(size=(bs, bs))
                                    for k in keys})

    a = rand_block(3, 4, [(0, 0), (0, 2), (1, 1), (2, 0)])
    b = rand_block(3, 4, [(0, 1), (2, 2), (2, 0)])
    np.testing.assert_allclose((a @ b).to_dense(), a.to_dense() @ b.to_dense(), atol=1e-12)
    np.testing.assert_allclose((a + b).to_dense(), a.to_dense() + b.to_dense())
    np.testing.assert_allclose(a.adjoint().to_dense(), a.to_dense().conj().T)
    assert tau(a) == pytest.approx(np.trace(a.to_dense()) / 12)
    assert np.array_equal(BlockMatrix.identity(2, 3).to_dense(), np.eye(6))


def brute_defect(xs, max_len):
    best = 0.0
    for fam in (0, 1):
        for length in range(2, max_len + 1, 2):
            for idx in itertools.product(range(len(xs)), repeat=length):
                if all(a != b for a, b in zip(idx, idx[1:])):
                    best = max(best, abs(word_trace(xs, fam, idx)))
    return best


def test_defect_matches_brute_force():
    xs = [sample_contraction(6, RngSpec(8, i), centered=False) for i in range(3)]
    res = lfree_defect(xs, max_len=6)
    assert res.max_abs_trace == pytest.approx(brute_defect(xs, 6), abs=1e-14)
    assert abs(word_trace(xs, *res.worst_word)) == pytest.approx(res.max_abs_trace, abs=1e-14)
    # block-sparse operators give the same defect as their dense forms
    blocks = [BlockMatrix(2, 3, {(0, 0): x[:3, :3], (1, 1): x[3:, 3:], (0, 1): x[:3, 3:]}) for x in xs]
    dense = [b.to_dense() for b in blocks]
    assert lfree_defect(blocks, 4).max_abs_trace == pytest.approx(lfree_defect(dense, 4).max_abs_trace,
                                                                  abs=1e-14)


def test_defect_edge_cases():
    u = sample_haar_unitary(10, RngSpec(1))
    with pytest.raises(ValueError):
        lfree_defect([u, u.copy()])
    assert lfree_defect([u]).max_abs_trace == 0
    with pytest.raises(ValueError):
        lfree_defect([])
    with pytest.raises(ValueError):
        lfree_defect([u, np.eye(3)])
    with pytest.raises(ValueError):
        lfree_defect([u, np.eye(10)], max_len=3)


def test_defect_negative_control():
    # commuting projections P <= Q: tau(P Q*) = tau(P) = 1/2
    d = 40
    w = sample_haar_unitary(d, RngSpec(2))
    diag_p = np.r_[np.ones(d // 2), np.zeros(d // 2)]
    diag_q = diag_p.copy()
    diag_q[d // 2] = 1
    p = (w * diag_p) @ w.conj().T
    q = (w * diag_q) @ w.conj().T
    res = lfree_defect([p, q], max_len=2)
    assert res.max_abs_trace == pytest.approx(0.5, abs=1e-12)
    assert res.max_abs_trace > 0.2


def test_haar_family_defect_is_small():
    cal = calibration.check("haar_defect")
    p = cal["params"]
    rep = defect_experiment("haar", p["n"], p["d"], 11, p["trials"], cal["threshold"], p["max_len"])
    assert rep.passed


def test_tensor_lower_bound():
    n, d = 3, 30
    us = [sample_haar_unitary(d, RngSpec(6, i)) for i in range(n)]
    total = sum(np.kron(u, u.conj()) for u in us)
    assert op_norm(total) >= closedform.leinert_norm(n) - 0.1


def test_dump_round_trip(tmp_path):
    x = sample_haar_unitary(5, RngSpec(3))
    path = tmp_path / "x.bin"
    write_dump(x, path)
    assert path.stat().st_size == 5 * 5 * 16
    assert np.array_equal(read_dump(path, 5), x)
    raw = np.frombuffer(path.read_bytes()[:16], dtype="<f8")
    assert raw[0] == x[0, 0].real and raw[1] == x[0, 0].imag
