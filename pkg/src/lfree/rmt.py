"""Finite-dimensional model of a tracial von Neumann algebra.

Operators are plain complex ``numpy`` arrays with the normalized trace
``tau(X) = trace(X) / d``.  Freeness is modelled by independent Haar
rotations, so every freeness statement holds only up to finite-``d``
fluctuations.

:class:`BlockMatrix` stores operators on ``C^(n+1) (x) C^d`` by their nonzero
``d x d`` blocks; dilated unitaries are sparse in that layout and products
of a few of them stay cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

DEFAULT_DIM_CAP = 2000


@dataclass(frozen=True)
class RngSpec:
    """Seed plus stream; ``path`` addresses sub-objects sampled within one stream."""

    seed: int
    stream: int = 0
    path: tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, *self.path))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, i: int) -> "RngSpec":
        return RngSpec(self.seed, self.stream, self.path + (i,))

    def provenance(self) -> str:
        tail = "".join(f".{p}" for p in self.path)
        return f"sampled({self.seed},{self.stream}{tail})"


class DimensionCapExceeded(ValueError):
    pass


def tau(x) -> complex:
    """Normalized trace."""
    if isinstance(x, BlockMatrix):
        return x.trace() / x.dim
    return np.trace(x) / x.shape[0]


def adjoint(x):
    if isinstance(x, BlockMatrix):
        return x.adjoint()
    return x.conj().T


def sample_haar_unitary(d: int, rng: RngSpec) -> np.ndarray:
    """Haar unitary from the QR decomposition of a complex Ginibre matrix.

    The phases of ``diag(R)`` are pushed back into ``Q``; without that step
    the distribution of ``Q`` depends on the QR convention and is not Haar.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    g = rng.generator()
    z = (g.standard_normal((d, d)) + 1j * g.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph


def op_norm(x, cap: int = DEFAULT_DIM_CAP) -> float:
    """Largest singular value (dense LAPACK)."""
    if isinstance(x, BlockMatrix):
        x = x.to_dense()
    x = np.asarray(x)
    if x.shape[0] > cap:
        raise DimensionCapExceeded(f"dimension {x.shape[0]} exceeds dense cap {cap}")
    if x.size == 0:
        return 0.0
    if np.array_equal(x, x.conj().T):
        return float(np.max(np.abs(np.linalg.eigvalsh(x))))
    return float(np.linalg.svd(x, compute_uv=False)[0])


def rank_for_trace(tau_value, d: int) -> int:
    r = Fraction(tau_value).limit_denominator(10**9) * d
    if r.denominator != 1:
        raise ValueError(f"tau*d = {float(r)} is not an integer; adjust d")
    r = int(r)
    if not 1 <= r <= d - 1:
        raise ValueError(f"rank {r} must lie in 1..d-1")
    return r


def sample_projection(tau_value, d: int, rng: RngSpec) -> np.ndarray:
    """Rank ``tau*d`` projection in Haar-random position, ``W E W*``."""
    r = rank_for_trace(tau_value, d)
    w = sample_haar_unitary(d, rng)[:, :r]
    return w @ w.conj().T


def rotate(diagonal: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``W diag(values) W*``."""
    return (w * diagonal) @ w.conj().T


def sample_symmetry(d: int, rng: RngSpec) -> np.ndarray:
    """Haar-rotated ``diag(+1, ..., -1, ...)``: a trace-zero self-adjoint unitary (d even)."""
    if d % 2:
        raise ValueError("a trace-zero symmetry needs even d")
    signs = np.concatenate([np.ones(d // 2), -np.ones(d // 2)])
    v = rotate(signs, sample_haar_unitary(d, rng))
    return (v + v.conj().T) / 2


def sample_contraction(d: int, rng: RngSpec, centered: bool = True) -> np.ndarray:
    """Haar-rotated diagonal with entries in the closed unit disk.

    With ``centered`` the eigenvalues come in pairs ``z, -z`` so the trace is
    zero (an odd ``d`` gets one extra zero eigenvalue).
    """
    g = rng.generator()
    half = d // 2 if centered else d
    z = np.sqrt(g.random(half)) * np.exp(2j * np.pi * g.random(half))
    if centered:
        z = np.concatenate([z, -z, np.zeros(d - 2 * half)])
    return rotate(z, sample_haar_unitary(d, rng.child(1)))


# -- block-sparse operators ----------------------------------------------------


class BlockMatrix:
    """Square operator stored as ``{(row, col): d x d array}`` over ``nb x nb`` blocks."""

    __slots__ = ("nb", "bs", "blocks")

    def __init__(self, nb: int, bs: int, blocks: dict[tuple[int, int], np.ndarray]):
        self.nb, self.bs = nb, bs
        self.blocks = blocks

    @property
    def dim(self) -> int:
        return self.nb * self.bs

    @property
    def shape(self) -> tuple[int, int]:
        return (self.dim, self.dim)

    def __getitem__(self, key: tuple[int, int]) -> np.ndarray:
        blk = self.blocks.get(key)
        return np.zeros((self.bs, self.bs), dtype=complex) if blk is None else blk

    def __matmul__(self, other: "BlockMatrix") -> "BlockMatrix":
        rows: dict[int, list[tuple[int, np.ndarray]]] = {}
        for (k, c), b in other.blocks.items():
            rows.setdefault(k, []).append((c, b))
        out: dict[tuple[int, int], np.ndarray] = {}
        for (r, k), a in self.blocks.items():
            for c, b in rows.get(k, ()):
                prod = a @ b
                if (r, c) in out:
                    out[(r, c)] += prod
                else:
                    out[(r, c)] = prod
        return BlockMatrix(self.nb, self.bs, out)

    def __add__(self, other: "BlockMatrix") -> "BlockMatrix":
        out = {k: v.copy() for k, v in self.blocks.items()}
        for k, v in other.blocks.items():
            out[k] = out[k] + v if k in out else v.copy()
        return BlockMatrix(self.nb, self.bs, out)

    def scale(self, c: complex) -> "BlockMatrix":
        return BlockMatrix(self.nb, self.bs, {k: c * v for k, v in self.blocks.items()})

    def adjoint(self) -> "BlockMatrix":
        return BlockMatrix(self.nb, self.bs, {(c, r): v.conj().T for (r, c), v in self.blocks.items()})

    def trace(self) -> complex:
        return sum((np.trace(v) for (r, c), v in self.blocks.items() if r == c), 0j)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        bs = self.bs
        for (r, c), v in self.blocks.items():
            out[r * bs:(r + 1) * bs, c * bs:(c + 1) * bs] = v
        return out

    @classmethod
    def identity(cls, nb: int, bs: int) -> "BlockMatrix":
        return cls(nb, bs, {(i, i): np.eye(bs, dtype=complex) for i in range(nb)})


def _pair_trace(a, b) -> complex:
    """``tau(a @ b)`` without forming the product."""
    if isinstance(a, BlockMatrix):
        total = 0j
        for (r, k), blk in a.blocks.items():
            other = b.blocks.get((k, r))
            if other is not None:
                total += np.sum(blk * other.T)
        return total / a.dim
    return np.sum(a * b.T) / a.shape[0]


def _same(a, b) -> bool:
    if isinstance(a, BlockMatrix):
        return a.blocks.keys() == b.blocks.keys() and all(
            np.array_equal(v, b.blocks[k]) for k, v in a.blocks.items())
    return np.array_equal(a, b)


# -- L-freeness defect -----------------------------------------------------------

FAMILIES = ("x y* x y* ...", "x* y x* y ...")


@dataclass(frozen=True)
class LFreeDefect:
    """Largest ``|tau(word)|`` over the alternating words up to ``max_length``.

    ``worst_word`` is ``(family, indices)``: family 0 stars the even letters'
    partners (``x1 x2* x3 x4* ...``), family 1 the odd ones (``x1* x2 ...``).
    """

    max_abs_trace: float
    worst_word: tuple[int, tuple[int, ...]] | None
    max_length: int
    words_checked: int

    def to_dict(self) -> dict:
        return {
            "max_abs_trace": self.max_abs_trace,
            "worst_word": None if self.worst_word is None else
            {"family": FAMILIES[self.worst_word[0]], "indices": list(self.worst_word[1])},
            "max_length": self.max_length,
            "words_checked": self.words_checked,
        }


def lfree_defect(xs: Sequence, max_len: int = 6, allow_duplicates: bool = False) -> LFreeDefect:
    """Measure how far a finite set is from L-free.

    Enumerates both alternating-word families with adjacent indices distinct,
    for every even length up to ``max_len``.  Each word's trace is obtained as
    ``tau(prefix @ suffix)`` from half-length products (suffixes memoized per
    length, prefixes built depth-first), so a length ``2h`` word costs one
    O(d^2) pairing instead of ``2h - 1`` matrix products.

    ``allow_duplicates`` treats the input as an indexed family (conjugation
    orbits may contain equal operators); otherwise equal entries are rejected,
    since they make the alternation condition meaningless.
    """
    xs = list(xs)
    if not xs:
        raise ValueError("empty operator set")
    if max_len < 2 or max_len % 2:
        raise ValueError("max_len must be an even integer >= 2")
    dims = {x.shape for x in xs}
    if len(dims) != 1:
        raise ValueError(f"mismatched dimensions {sorted(dims)}")
    if not allow_duplicates:
        for i in range(len(xs)):
            for j in range(i + 1, len(xs)):
                if _same(xs[i], xs[j]):
                    raise ValueError(f"elements {i} and {j} are equal")
    n = len(xs)
    if n == 1:
        return LFreeDefect(0.0, None, max_len, 0)
    letters = (xs, [adjoint(x) for x in xs])

    def starred(family: int, pos: int) -> int:
        return (pos + family) % 2  # family 0: odd positions starred

    def patterns(length, first_exclude=None):
        def rec(path):
            if len(path) == length:
                yield tuple(path)
                return
            prev = path[-1] if path else first_exclude
            for i in range(n):
                if i != prev:
                    path.append(i)
                    yield from rec(path)
                    path.pop()
        return rec([])

    best, worst, count = 0.0, None, 0
    for family in (0, 1):
        for length in range(2, max_len + 1, 2):
            h = length // 2
            # suffixes are shared by all prefixes of this length; freed before the next one
            suffix: dict[tuple[int, tuple[int, ...]], object] = {}

            def get_suffix(start, pattern):
                key = (start, pattern)
                if key not in suffix:
                    first = letters[starred(family, start)][pattern[0]]
                    suffix[key] = first if len(pattern) == 1 else first @ get_suffix(start + 1, pattern[1:])
                return suffix[key]

            # prefixes come from a depth-first walk holding one partial product per level
            stack = [((), None)]
            while stack:
                pre, acc = stack.pop()
                if len(pre) == h:
                    for suf in patterns(length - h, first_exclude=pre[-1]):
                        val = abs(_pair_trace(acc, get_suffix(h, suf)))
                        count += 1
                        if val > best:
                            best, worst = float(val), (family, pre + suf)
                    continue
                for i in reversed(range(n)):
                    if pre and i == pre[-1]:
                        continue
                    letter = letters[starred(family, len(pre))][i]
                    stack.append((pre + (i,), letter if acc is None else acc @ letter))
            del suffix
    return LFreeDefect(best, worst, max_len, count)


def word_trace(xs: Sequence, family: int, indices: Sequence[int]) -> complex:
    """Brute-force ``tau`` of one alternating word (oracle for :func:`lfree_defect`)."""
    acc = None
    for pos, i in enumerate(indices):
        x = xs[i]
        letter = adjoint(x) if (pos + family) % 2 else x
        acc = letter if acc is None else acc @ letter
    return tau(acc)


def write_dump(x: np.ndarray, path) -> None:
    """Debug dump: row-major little-endian complex128, no header."""
    np.ascontiguousarray(x, dtype="<c16").tofile(path)


def read_dump(path, d: int) -> np.ndarray:
    return np.fromfile(path, dtype="<c16").reshape(d, d)


__all__ = [
    "BlockMatrix", "DimensionCapExceeded", "LFreeDefect", "RngSpec", "adjoint",
    "lfree_defect", "op_norm", "rank_for_trace", "read_dump", "rotate", "sample_contraction",
    "sample_haar_unitary", "sample_projection", "sample_symmetry", "tau", "word_trace",
    "write_dump",
]
