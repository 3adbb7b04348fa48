import math

import numpy as np
import pytest

from lfree import calibration, closedform
from lfree.constructions import (
    build_paving, dilate, dilation_sum_bound_check, orbit_lfree_check, paving_norm, paving_norms,
    paving_sum, psd_sqrt, sharpness_experiment,
)
from lfree.experiments import defect_experiment, dilation_experiment
from lfree.rmt import (
    BlockMatrix, RngSpec, op_norm, sample_contraction, sample_haar_unitary, sample_symmetry, tau,
)


def test_psd_sqrt_examples():
    assert np.allclose(psd_sqrt(np.eye(3)), np.eye(3))
    assert np.allclose(psd_sqrt(np.diag([4.0, 0.0])), np.diag([2.0, 0.0]))
    x = sample_contraction(50, RngSpec(1), centered=False)
    defect = np.eye(50) - x @ x.conj().T
    c = psd_sqrt(defect)
    assert op_norm(c @ c - defect) < 1e-8
    assert np.linalg.eigvalsh(c).min() > -1e-12


def test_psd_sqrt_rejects_bad_input():
    with pytest.raises(ValueError):
        psd_sqrt(np.array([[0, 1.0], [0, 0]]))
    with pytest.raises(ValueError):
        psd_sqrt(np.diag([1.0, -1e-3]))
    # rounding-level negatives are clipped
    assert np.allclose(psd_sqrt(np.diag([1.0, -1e-9])), np.diag([1.0, 0.0]))


def test_scalar_dilation_is_a_rotation():
    for t in (0.0, 0.3, 1.0):
        res = dilate([np.array([[t]])], RngSpec(0))
        s = math.sqrt(1 - t * t)
        np.testing.assert_allclose(res.dense(0), [[t, s], [-s, t]], atol=1e-15)


def test_unitary_inputs_give_block_diagonal_dilation():
    us = [sample_haar_unitary(6, RngSpec(2, i)) for i in range(2)]
    res = dilate(us, RngSpec(3))
    for c, d in res.defect_parts:
        assert op_norm(c) < 1e-7 and op_norm(d) < 1e-7


def test_dilation_block_structure():
    n, d = 3, 12
    xs = [sample_contraction(d, RngSpec(4, i), centered=False) for i in range(n)]
    res = dilate(xs, RngSpec(5))
    for i, u in enumerate(res.blocks, start=1):
        assert np.array_equal(u[(0, 0)], xs[i - 1])
        assert np.array_equal(u[(i, i)], xs[i - 1].conj().T)
        for j in range(1, n + 1):
            if j != i:
                assert np.array_equal(u[(j, j)], res.free_unitaries[(i, j)])
        allowed = {(0, 0), (i, i), (0, i), (i, 0)} | {(j, j) for j in range(1, n + 1)}
        assert set(u.blocks) <= allowed
        dense = u.to_dense()
        eye = np.eye((n + 1) * d)
        assert op_norm(dense @ dense.conj().T - eye) < 1e-8
        assert op_norm(dense.conj().T @ dense - eye) < 1e-8
    assert res.layout[0][(0, 1)] == "c1" and res.layout[1][(3, 3)] == "u2,3"


def test_intertwining_behind_unitarity():
    x = sample_contraction(30, RngSpec(6), centered=False)
    eye = np.eye(30)
    lhs = x @ psd_sqrt(eye - x.conj().T @ x)
    rhs = psd_sqrt(eye - x @ x.conj().T) @ x
    assert op_norm(lhs - rhs) < 1e-8


def test_dilation_rejects_non_contractions():
    x = np.diag([1.0, 0.5])
    dilate([x * (1 + 5e-11)], RngSpec(0))  # rescaled
    with pytest.raises(ValueError):
        dilate([x * 1.01], RngSpec(0))
    with pytest.raises(ValueError):
        dilate([np.eye(2), np.eye(3)], RngSpec(0))
    with pytest.raises(ValueError):
        dilate([np.eye(2)], RngSpec(0), d=3)


def test_sum_bound_boundary_case():
    res = dilate([np.eye(2), np.eye(2)], RngSpec(0))
    checks = {c.name: c for c in dilation_sum_bound_check(res, [1 / math.sqrt(2)] * 2, tol=1e-9)}
    assert checks["sum_x"].value == pytest.approx(2) and checks["sum_x"].passed
    assert checks["corner_compression"].passed


def test_dilation_sum_bounds_under_freeness():
    cal = calibration.check("dilation_sum")
    p = cal["params"]
    rep = dilation_experiment(p["n"], p["d"], 3, 4, cal["tolerance"])
    assert rep.passed
    for t in rep.trials:
        assert t.extra["checks"]["sum_alpha_x"]["bound"] == pytest.approx(math.sqrt(3))


def test_dilation_defect_is_small():
    cal = calibration.check("dilation_defect")
    p = cal["params"]
    rep = defect_experiment("dilation", p["n"], p["d"], 5, p["trials"], cal["threshold"], p["max_len"])
    assert rep.passed


def test_paving_instance_invariants():
    n, d = 4, 40
    inst = build_paving(n, sample_symmetry(d, RngSpec(1)), RngSpec(2))
    assert op_norm(sum(inst.projections) - np.eye(d)) < 1e-12
    for i in range(n):
        for j in range(n):
            if i != j:
                assert op_norm(inst.projections[i] @ inst.projections[j]) < 1e-12
        assert tau(inst.projections[i]).real == pytest.approx(1 / n)
    assert op_norm(np.linalg.matrix_power(inst.u, n) - np.eye(d)) < 1e-8
    for k in range(1, n):
        assert abs(tau(np.linalg.matrix_power(inst.u, k))) < 1e-12
    assert np.allclose(inst.u_power(1), inst.u)


def test_two_block_paving_is_a_symmetry():
    inst = build_paving(2, sample_symmetry(10, RngSpec(1)), RngSpec(2))
    u = inst.u
    assert np.allclose(u, inst.projections[0] - inst.projections[1])
    assert op_norm(u @ u - np.eye(10)) < 1e-12 and abs(tau(u)) < 1e-12


def test_paving_rejections():
    with pytest.raises(ValueError):
        build_paving(3, np.eye(10), RngSpec(0))
    with pytest.raises(ValueError):
        build_paving(1, np.eye(10), RngSpec(0))
    with pytest.raises(ValueError):
        build_paving(2, 2 * np.eye(10), RngSpec(0))


@pytest.mark.parametrize("n", [2, 3, 5])
def test_averaging_identity(n):
    d = 10 * n
    x = sample_contraction(d, RngSpec(n), centered=False)
    inst = build_paving(n, x, RngSpec(n, 1))
    direct, averaged, gap = paving_norms(inst)
    assert gap < 1e-8 and abs(direct - averaged) < 1e-8
    assert paving_norm(inst) == pytest.approx(direct, abs=1e-12)


def test_paving_boundary_cases():
    inst = build_paving(3, np.eye(30), RngSpec(0))
    assert paving_norm(inst) == pytest.approx(1)
    # a target commuting with the partition is left unchanged
    x = inst.u_power(1) * 0.9
    assert paving_norm(inst.with_target(x)) == pytest.approx(0.9)
    res = orbit_lfree_check(inst.with_target(inst.u), max_len=2)
    assert res.max_abs_trace == pytest.approx(1)


def test_paving_bound_under_freeness():
    cal = calibration.check("paving")
    bound = closedform.paving_norm_bound(4).bound
    norms = [paving_norm(build_paving(4, sample_symmetry(400, RngSpec(7, t, (1,))), RngSpec(7, t, (0,))))
             for t in range(5)]
    assert sum(v <= bound + cal["tolerance"] for v in norms) >= 0.9 * len(norms)
    # the chain sum p x p <= ||x||
    assert max(norms) <= 1 + 1e-12


def test_multipaving_reuses_the_partition():
    inst = build_paving(3, sample_symmetry(60, RngSpec(1)), RngSpec(2))
    other = inst.with_target(sample_symmetry(60, RngSpec(3)))
    assert other.projections is inst.projections
    assert not np.array_equal(paving_sum(other), paving_sum(inst))


def test_orbit_defect_is_small():
    cal = calibration.check("orbit_defect")
    p = cal["params"]
    rep = defect_experiment("orbit", p["n"], p["d"], 9, p["trials"], cal["threshold"], p["max_len"])
    assert rep.passed


def test_sharpness_single_block():
    rep = sharpness_experiment(2, ["1/4", "3/4"], 600, RngSpec(4))
    assert rep.block_norms[0] == pytest.approx(math.sqrt(3) / 2, abs=0.05)
    assert rep.block_targets[0] == pytest.approx(math.sqrt(3) / 2)


def test_sharpness_rejects_bad_traces():
    with pytest.raises(ValueError):
        sharpness_experiment(3, ["1/2", "1/2", "1/2"], 60, RngSpec(0))
    with pytest.raises(ValueError):
        sharpness_experiment(2, ["1/2", "1/2"], 61, RngSpec(0))
    with pytest.raises(ValueError):
        sharpness_experiment(3, ["1/3", "1/3", "1/3"], 62, RngSpec(0))


def test_sharpness_equal_traces_never_far_below():
    bound = closedform.paving_norm_bound(3).bound
    for s in range(3):
        rep = sharpness_experiment(3, ["1/3"] * 3, 300, RngSpec(s))
        assert rep.paving_norm >= bound - 0.05
