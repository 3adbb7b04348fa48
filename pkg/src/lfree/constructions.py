"""Unitary dilation of L-free contractions and pavings by root-of-unity unitaries."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import closedform
from .rmt import (
    BlockMatrix, LFreeDefect, RngSpec, adjoint, lfree_defect, op_norm, rank_for_trace, rotate,
    sample_haar_unitary,
)

HERMITIAN_TOL = 1e-10
NEGATIVE_EIG_TOL = 1e-6
CONTRACTION_SLACK = 1e-10
UNITARY_TOL = 1e-8


class ConstructionError(RuntimeError):
    """An identity that holds exactly by construction failed numerically."""


def psd_sqrt(x: np.ndarray) -> np.ndarray:
    """Spectral square root of a self-adjoint matrix that is PSD up to rounding."""
    x = np.asarray(x)
    if np.max(np.abs(x - x.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise ValueError("input is not self-adjoint")
    w, v = np.linalg.eigh((x + x.conj().T) / 2)
    if w.size and w.min() < -NEGATIVE_EIG_TOL:
        raise ValueError(f"input has eigenvalue {w.min():.3g} < 0")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def defect_operators(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(sqrt(1 - x x*), -sqrt(1 - x* x))`` from one SVD ``x = W S V*``.

    Separate eigendecompositions of ``1 - x x*`` and ``1 - x* x`` break the
    intertwining ``x sqrt(1 - x* x) = sqrt(1 - x x*) x`` at the ``sqrt(eps)``
    level near singular values 1; sharing ``W`` and ``V`` keeps it at rounding.
    """
    w, s, vh = np.linalg.svd(x)
    s = np.clip(s, 0.0, 1.0)
    r = np.sqrt((1.0 - s) * (1.0 + s))
    c = (w * r) @ w.conj().T
    d = -(vh.conj().T * r) @ vh
    return c, d


def _as_contraction(x: np.ndarray) -> np.ndarray:
    norm = op_norm(x)
    if norm <= 1.0:
        return x
    if norm <= 1.0 + CONTRACTION_SLACK:
        return x / norm
    raise ValueError(f"input has norm {norm} > 1")


@dataclass
class DilationResult:
    """Unitaries ``U_1..U_n`` on ``C^(n+1) (x) C^d`` whose (0,0) corners are the ``x_i``.

    ``blocks[i]`` is the block-sparse ``U_{i+1}``; block ``(r, c)`` multiplies
    the matrix unit ``e_rc``.  ``layout[i]`` names the operator placed in each
    nonzero block.
    """

    n: int
    base_dim: int
    blocks: tuple[BlockMatrix, ...]
    layout: tuple[dict, ...]
    defect_parts: tuple[tuple[np.ndarray, np.ndarray], ...]  # (c_i, d_i)
    free_unitaries: dict[tuple[int, int], np.ndarray] = field(repr=False)
    unitarity_residual: float = 0.0

    def dense(self, i: int) -> np.ndarray:
        return self.blocks[i].to_dense()


def _unitarity_residual(u: BlockMatrix) -> float:
    eye = BlockMatrix.identity(u.nb, u.bs)
    worst = 0.0
    for prod in (u @ u.adjoint(), u.adjoint() @ u):
        diff = prod + eye.scale(-1)
        # Frobenius norm dominates the operator norm
        worst = max(worst, math.sqrt(sum(float(np.sum(np.abs(b) ** 2)) for b in diff.blocks.values())))
    return worst


def dilate(xs: Sequence[np.ndarray], rng: RngSpec, d: int | None = None) -> DilationResult:
    """Dilate contractions ``x_i`` to unitaries with ``e00 U_i e00 = x_i``.

    ``U_i`` is the unitary ``[[x_i, c_i], [d_i, x_i*]]`` in block positions
    ``0, i`` with ``c_i = sqrt(1 - x_i x_i*)``, ``d_i = -sqrt(1 - x_i* x_i)``
    (see :func:`defect_operators`),
    plus independent Haar unitaries ``u_{i,j}`` in the diagonal positions
    ``j != 0, i``; the ``u_{i,j}`` stand in for free generators.
    """
    xs = [np.asarray(x, dtype=complex) for x in xs]
    n = len(xs)
    if n < 1:
        raise ValueError("need at least one contraction")
    dims = {x.shape for x in xs}
    if len(dims) != 1 or xs[0].shape[0] != xs[0].shape[1]:
        raise ValueError("contractions must be square and share a dimension")
    base = xs[0].shape[0]
    if d is not None and d != base:
        raise ValueError(f"declared d={d} but contractions are {base}x{base}")
    xs = [_as_contraction(x) for x in xs]
    parts = [defect_operators(x) for x in xs]
    free = {}
    stream = 0
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i != j:
                free[(i, j)] = sample_haar_unitary(base, rng.child(stream))
                stream += 1
    blocks, layout = [], []
    for i in range(1, n + 1):
        x = xs[i - 1]
        c, dd = parts[i - 1]
        blk = {(0, 0): x.copy(), (i, i): x.conj().T, (0, i): c, (i, 0): dd}
        names = {(0, 0): f"x{i}", (i, i): f"x{i}*", (0, i): f"c{i}", (i, 0): f"d{i}"}
        for j in range(1, n + 1):
            if j != i:
                blk[(j, j)] = free[(i, j)]
                names[(j, j)] = f"u{i},{j}"
        blocks.append(BlockMatrix(n + 1, base, blk))
        layout.append(names)
    residual = max(_unitarity_residual(u) for u in blocks)
    if residual > UNITARY_TOL:
        raise ConstructionError(f"dilation unitarity residual {residual:.3g} > {UNITARY_TOL}")
    return DilationResult(n, base, tuple(blocks), tuple(layout), tuple(parts), free, residual)


@dataclass(frozen=True)
class BoundCheck:
    name: str
    value: float
    bound: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.value <= self.bound + self.tolerance

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "bound": self.bound,
                "tolerance": self.tolerance, "pass": self.passed}


def dilation_sum_bound_check(result: DilationResult, alphas: Sequence[complex] | None = None,
                             tol: float = 0.2) -> list[BoundCheck]:
    """Compare sums of the corners and of the dilations with the L-free bounds.

    The corner-compression check ``||sum a_i x_i|| <= ||sum a_i U_i||`` holds
    exactly (up to 1e-8) whatever the inputs; the other two only under the
    freeness model.
    """
    n = result.n
    xs = [b.blocks[(0, 0)] for b in result.blocks]
    sum_x = sum(xs)
    sum_u = result.blocks[0]
    for b in result.blocks[1:]:
        sum_u = sum_u + b
    checks = [
        BoundCheck("sum_x", op_norm(sum_x), 2 * math.sqrt(n - 1), tol),
        BoundCheck("sum_U", op_norm(sum_u, cap=(n + 1) * result.base_dim), 2 * math.sqrt(n - 1), tol),
    ]
    if alphas is not None and n >= 2:
        bound = closedform.coefficient_bound(n, alphas)
        ax = sum(a * x for a, x in zip(alphas, xs))
        au = result.blocks[0].scale(alphas[0])
        for a, b in zip(alphas[1:], result.blocks[1:]):
            au = au + b.scale(a)
        ax_norm = op_norm(ax)
        au_norm = op_norm(au, cap=(n + 1) * result.base_dim)
        checks.append(BoundCheck("sum_alpha_x", ax_norm, bound, tol))
        checks.append(BoundCheck("corner_compression", ax_norm, au_norm, 1e-8))
    return checks


@dataclass(frozen=True)
class PavingInstance:
    """Partition ``p_1..p_n`` (equal traces), ``u = sum lambda^(j-1) p_j`` and a target ``x``.

    The projections are ``W E_j W*`` for the standard diagonal partition
    ``E_j``; ``rotation`` keeps ``W`` so powers of ``u`` are cheap.
    """

    n: int
    dim: int
    projections: tuple[np.ndarray, ...]
    u: np.ndarray
    x: np.ndarray
    rotation: np.ndarray = field(repr=False)

    @property
    def lam(self) -> complex:
        return np.exp(2j * np.pi / self.n)

    def u_power(self, k: int) -> np.ndarray:
        phases = np.repeat(self.lam ** (k * np.arange(self.n)), self.dim // self.n)
        return rotate(phases, self.rotation)

    def with_target(self, x: np.ndarray) -> "PavingInstance":
        """Same partition, new target (multipaving)."""
        _check_target(x, self.dim)
        return replace(self, x=np.asarray(x, dtype=complex))

    def orbit(self) -> list[np.ndarray]:
        """``u^(i-1) x u^(1-i)`` for ``i = 1..n``."""
        out = []
        for k in range(self.n):
            uk = self.u_power(k)
            out.append(uk @ self.x @ uk.conj().T)
        return out


def _check_target(x, d):
    if x.shape != (d, d):
        raise ValueError(f"target must be {d}x{d}")
    if op_norm(x) > 1 + CONTRACTION_SLACK:
        raise ValueError("target is not a contraction")


def build_paving(n: int, x: np.ndarray, rng: RngSpec) -> PavingInstance:
    """Random-position partition into ``n`` projections of trace ``1/n``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    x = np.asarray(x, dtype=complex)
    d = x.shape[0]
    if d % n:
        raise ValueError(f"dimension {d} is not divisible by n={n}")
    _check_target(x, d)
    w = sample_haar_unitary(d, rng)
    size = d // n
    projections = tuple(w[:, j * size:(j + 1) * size] @ w[:, j * size:(j + 1) * size].conj().T
                        for j in range(n))
    lam = np.exp(2j * np.pi / n)
    u = rotate(np.repeat(lam ** np.arange(n), size), w)
    return PavingInstance(n, d, projections, u, x, w)


def paving_sum(inst: PavingInstance) -> np.ndarray:
    return sum(p @ inst.x @ p for p in inst.projections)


def orbit_average(inst: PavingInstance) -> np.ndarray:
    return sum(inst.orbit()) / inst.n


def paving_norms(inst: PavingInstance) -> tuple[float, float, float]:
    """``(||sum p x p||, (1/n)||sum u^k x u^-k||, gap)``.

    ``gap`` is the Frobenius norm of the difference of the two sums, an upper
    bound for its operator norm.
    """
    direct = paving_sum(inst)
    averaged = orbit_average(inst)
    return op_norm(direct), op_norm(averaged), float(np.linalg.norm(direct - averaged))


def paving_norm(inst: PavingInstance) -> float:
    """``||sum_j p_j x p_j||``, cross-checked against the orbit average.

    Works in the eigenbasis of ``u``: with ``y = W* x W`` the paving sum is
    the block diagonal of ``y`` and ``(1/n) sum_k u^k x u^-k`` is ``y`` times
    the entrywise mask ``(1/n) sum_k lambda^(k(a-b))``.  The two agree when
    the geometric sums of roots of unity vanish off the diagonal blocks.
    """
    w, n = inst.rotation, inst.n
    size = inst.dim // n
    y = w.conj().T @ inst.x @ w
    labels = np.repeat(np.arange(n), size)
    diff = labels[:, None] - labels[None, :]
    mask = sum(inst.lam ** (k * diff) for k in range(n)) / n
    block = diff == 0
    gap = float(np.linalg.norm(y * mask - np.where(block, y, 0)))
    if gap > 1e-6:
        raise ConstructionError(f"averaging identity off by {gap:.3g}")
    return max(op_norm(y[j * size:(j + 1) * size, j * size:(j + 1) * size]) for j in range(n))


def orbit_lfree_check(inst: PavingInstance, max_len: int = 6) -> LFreeDefect:
    return lfree_defect(inst.orbit(), max_len=max_len, allow_duplicates=True)


@dataclass
class SharpnessReport:
    n: int
    traces: tuple
    dim: int
    paving_norm: float
    block_norms: list[float]
    block_targets: list[float]
    bound: float
    equal_traces: bool
    tolerance: float
    margin: float

    @property
    def passed(self) -> bool:
        if self.equal_traces:
            return abs(self.paving_norm - self.bound) <= self.tolerance
        return self.paving_norm >= self.bound + self.margin

    def to_dict(self) -> dict:
        return {
            "n": self.n, "traces": [str(t) for t in self.traces], "d": self.dim,
            "paving_norm": self.paving_norm, "block_norms": self.block_norms,
            "block_targets": self.block_targets, "bound": self.bound,
            "equal_traces": self.equal_traces, "tolerance": self.tolerance,
            "margin": self.margin, "pass": self.passed,
        }


def sharpness_experiment(n: int, traces: Sequence, d: int, rng: RngSpec,
                         tolerance: float = 0.05, margin: float = 0.03) -> SharpnessReport:
    """Pave a free trace-zero symmetry ``v`` with projections of the given traces.

    The projections are diagonal (a fixed MASA) and ``v`` is a Haar-rotated
    ``diag(+-1)``.  Equal traces should land on ``2 sqrt(n-1)/n``; a block of
    trace above ``1/n`` pushes the norm up to at least that block's
    ``2 sqrt(t(1-t))``.
    """
    from fractions import Fraction

    traces = tuple(Fraction(t).limit_denominator(10**6) for t in traces)
    if len(traces) != n or any(t <= 0 for t in traces) or sum(traces) != 1:
        raise ValueError("need n positive traces summing to 1")
    if d % 2:
        raise ValueError("d must be even")
    ranks = [rank_for_trace(t, d) for t in traces]
    signs = np.concatenate([np.ones(d // 2), -np.ones(d // 2)])
    v = rotate(signs, sample_haar_unitary(d, rng))
    v = (v + v.conj().T) / 2
    edges = np.cumsum([0] + ranks)
    total = np.zeros_like(v)
    block_norms = []
    for a, b in zip(edges[:-1], edges[1:]):
        blk = v[a:b, a:b]
        total[a:b, a:b] = blk
        block_norms.append(op_norm(blk))
    return SharpnessReport(
        n=n, traces=traces, dim=d, paving_norm=op_norm(total), block_norms=block_norms,
        block_targets=[closedform.qvq_norm(float(t)) for t in traces],
        bound=closedform.paving_norm_bound(n).bound,
        equal_traces=all(t == Fraction(1, n) for t in traces),
        tolerance=tolerance, margin=margin,
    )


__all__ = [
    "BoundCheck", "ConstructionError", "DilationResult", "PavingInstance", "SharpnessReport",
    "build_paving", "defect_operators", "dilate", "dilation_sum_bound_check", "orbit_average", "orbit_lfree_check",
    "paving_norm", "paving_norms", "paving_sum", "psd_sqrt", "sharpness_experiment",
]
