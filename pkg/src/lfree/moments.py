"""Trace moments of convolution operators on free products of cyclic groups.

``moment(L, m)`` is ``tau((L*L)^m)``, the coefficient of ``e`` in
``(L*L)^m delta_e``.  Every ``moment(L, m) ** (1/2m)`` is a lower bound for
the operator norm of ``L`` on the left regular representation, and the
sequence converges to it.

Coefficients that are Gaussian rationals are handled exactly: they are put
over a common denominator ``D`` and the walk is run on Gaussian-integer
numerators (pairs of Python ints), so the moment is an exact ``Fraction``.
Anything else (floats with a fractional part) switches the engine to complex
doubles and the record is flagged ``exact=False``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Sequence

from .words import (
    E, GroupPresentation, ReducedWord, WordError, inv_syllables, mul_syllables,
    syllable_length, validate,
)

DEFAULT_SUPPORT_CAP = 10_000_000


class SupportCapExceeded(RuntimeError):
    """The walk's support outgrew the configured cap; the instance is too large for exact mode."""


@dataclass(frozen=True)
class GaussianRational:
    re: Fraction
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    def __add__(self, other):
        other = as_gaussian(other)
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __mul__(self, other):
        other = as_gaussian(other)
        return GaussianRational(self.re * other.re - self.im * other.im,
                                self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-as_gaussian(other))

    def __eq__(self, other):
        try:
            other = as_gaussian(other)
        except TypeError:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re or self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __str__(self):
        if not self.im:
            return str(self.re)
        sign = "-" if self.im < 0 else "+"
        return f"{self.re}{sign}{abs(self.im)}i"

    @classmethod
    def parse(cls, text: str) -> "GaussianRational":
        """Parse ``"3"``, ``"-1/2"``, ``"i"``, ``"2/3i"``, ``"1/2-3i"``."""
        s = text.replace(" ", "").replace("j", "i")
        num = r"[+-]?(?:\d+(?:/\d+)?)?"
        m = re.fullmatch(rf"({num})(?:([+-](?:\d+(?:/\d+)?)?)i)?|({num})i", s)
        if not m or not s:
            raise ValueError(f"not a Gaussian rational: {text!r}")

        def part(p):
            return Fraction(p + "1") if p in ("", "+", "-") else Fraction(p)

        if m.group(3) is not None:
            return cls(0, part(m.group(3)))
        re_part = Fraction(m.group(1)) if m.group(1) not in ("", "+", "-") else Fraction(0)
        im_part = part(m.group(2)) if m.group(2) is not None else Fraction(0)
        if m.group(1) in ("+", "-") and m.group(2) is None:
            raise ValueError(f"not a Gaussian rational: {text!r}")
        return cls(re_part, im_part)


def as_gaussian(c) -> GaussianRational:
    """Exact view of ``c``; raises TypeError for values with no exact meaning."""
    if isinstance(c, GaussianRational):
        return c
    if isinstance(c, Rational):
        return GaussianRational(Fraction(c))
    if isinstance(c, float) and c.is_integer():
        return GaussianRational(Fraction(int(c)))
    if isinstance(c, complex) and c.real.is_integer() and c.imag.is_integer():
        return GaussianRational(Fraction(int(c.real)), Fraction(int(c.imag)))
    raise TypeError(f"{c!r} is not an exact Gaussian rational")


def is_exact(c) -> bool:
    try:
        as_gaussian(c)
    except TypeError:
        return False
    return True


def _conj(c):
    return c.conjugate()


def _is_zero(c) -> bool:
    return not c


@dataclass(frozen=True)
class Convolver:
    """Finitely supported element ``sum c * lambda(g)`` of the group algebra."""

    terms: tuple[tuple[object, ReducedWord], ...]
    presentation: GroupPresentation

    @classmethod
    def from_terms(cls, pres: GroupPresentation, terms: Iterable[tuple[object, ReducedWord]]) -> "Convolver":
        """Combine repeated words and drop zero coefficients."""
        acc: dict[ReducedWord, object] = {}
        order: list[ReducedWord] = []
        for c, w in terms:
            validate(w, pres)
            c = as_gaussian(c) if is_exact(c) else complex(c)
            if w in acc:
                acc[w] = acc[w] + c
            else:
                acc[w] = c
                order.append(w)
        return cls(tuple((acc[w], w) for w in order if not _is_zero(acc[w])), pres)

    @classmethod
    def indicator(cls, pres: GroupPresentation, words: Sequence[ReducedWord]) -> "Convolver":
        """``sum_i lambda(g_i)``."""
        if len(set(words)) != len(words):
            raise WordError("indicator convolver needs distinct words")
        return cls.from_terms(pres, [(1, w) for w in words])

    @property
    def support(self) -> tuple[ReducedWord, ...]:
        return tuple(w for _, w in self.terms)

    @property
    def exact(self) -> bool:
        return all(isinstance(c, GaussianRational) for c, _ in self.terms)

    def coefficient(self, w: ReducedWord):
        for c, v in self.terms:
            if v == w:
                return c
        return 0


def adjoint(L: Convolver) -> Convolver:
    orders = L.presentation.orders
    return Convolver(tuple((_conj(c), ReducedWord(inv_syllables(w.syllables, orders)))
                           for c, w in L.terms), L.presentation)


def kesten_laplacian(k: int) -> Convolver:
    """``sum_i lambda(h_i) + lambda(h_i^-1)`` on the free group ``F_k``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    pres = GroupPresentation.free(k)
    terms = [(1, ReducedWord(((i, s),))) for i in range(k) for s in (1, -1)]
    return Convolver.from_terms(pres, terms)


def apply(L: Convolver, state: Mapping[ReducedWord, object]) -> dict[ReducedWord, object]:
    """Left convolution: ``new(g w) += c * state(w)`` for each term ``(c, g)``."""
    orders = L.presentation.orders
    out: dict[ReducedWord, object] = {}
    for w, s in state.items():
        for c, g in L.terms:
            v = ReducedWord(mul_syllables(g.syllables, w.syllables, orders))
            out[v] = out.get(v, 0) + c * s
    return {w: c for w, c in out.items() if not _is_zero(c)}


def delta(w: ReducedWord = E) -> dict[ReducedWord, object]:
    return {w: GaussianRational(1)}


@dataclass(frozen=True)
class MomentRecord:
    m: int
    value: Fraction | float
    lower_bound: float
    exact: bool
    method: str = "walk"

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "value": str(self.value) if self.exact else float(self.value),
            "lower_bound": self.lower_bound,
            "provenance": "exact" if self.exact else "float",
        }


def _root(value, m: int) -> float:
    if value <= 0:
        return 0.0
    if isinstance(value, Fraction):
        log = math.log(value.numerator) - math.log(value.denominator)
    else:
        log = math.log(value)
    return math.exp(log / (2 * m))


def _scaled_terms(L: Convolver):
    """Gaussian-integer numerators over a common denominator."""
    coeffs = [as_gaussian(c) for c, _ in L.terms]
    den = 1
    for c in coeffs:
        den = math.lcm(den, c.re.denominator, c.im.denominator)
    ints = [(int(c.re * den), int(c.im * den)) for c in coeffs]
    return ints, den


def _walk(L: Convolver, m: int, cap: int):
    """Apply L, L*, L, L*, ... (2m steps) to delta_e and return the e coefficient."""
    orders = L.presentation.orders
    exact = L.exact
    words = [w.syllables for _, w in L.terms]
    inv_words = [inv_syllables(w, orders) for w in words]
    max_len = max(syllable_length(w, orders) for w in words)
    if exact:
        ints, den = _scaled_terms(L)
        fwd = list(zip(ints, words))
        bwd = [((a, -b), w) for (a, b), w in zip(ints, inv_words)]
        state: dict = {(): (1, 0)}
    else:
        coeffs = [complex(c) for c, _ in L.terms]
        fwd = list(zip(coeffs, words))
        bwd = [(c.conjugate(), w) for c, w in zip(coeffs, inv_words)]
        state = {(): 1 + 0j}
    steps = 2 * m
    for t in range(steps):
        terms = fwd if t % 2 == 0 else bwd
        # a word farther than the remaining steps can travel never returns to e
        reach = (steps - t - 1) * max_len
        new: dict = {}
        for w, s in state.items():
            for c, g in terms:
                v = mul_syllables(g, w, orders)
                if syllable_length(v, orders) > reach:
                    continue
                if exact:
                    a, b = c
                    x, y = s
                    re_, im_ = a * x - b * y, a * y + b * x
                    old = new.get(v)
                    if old is not None:
                        re_ += old[0]
                        im_ += old[1]
                    new[v] = (re_, im_)
                else:
                    new[v] = new.get(v, 0) + c * s
        if exact:
            state = {w: s for w, s in new.items() if s[0] or s[1]}
        else:
            state = new
        if len(state) > cap:
            raise SupportCapExceeded(f"support {len(state)} exceeds cap {cap} at step {t + 1}/{steps}")
    if exact:
        re_, im_ = state.get((), (0, 0))
        if im_:
            raise AssertionError("moment of a positive operator came out non-real")
        return Fraction(re_, den ** steps), True
    return state.get((), 0j).real, False


def _is_uniform_laplacian(L: Convolver):
    """If L = c * (Kesten Laplacian of F_k) return (k, c), else None."""
    pres = L.presentation
    if not pres.is_free:
        return None
    k = len(pres.orders)
    want = {ReducedWord(((i, s),)) for i in range(k) for s in (1, -1)}
    if set(L.support) != want:
        return None
    coeffs = {c for c, _ in L.terms}
    if len(coeffs) != 1:
        return None
    c = next(iter(coeffs))
    return (k, c) if isinstance(c, GaussianRational) else None


def closed_walks_tree(degree: int, length: int) -> int:
    """Closed walks of the given length at a vertex of the ``degree``-regular tree.

    Uses the sphere counts of the walk distribution: every vertex at distance
    ``r >= 1`` has one neighbour inward and ``degree - 1`` outward.
    """
    spheres = [1]
    for t in range(length):
        reach = length - t - 1  # spheres beyond this cannot get back to the root
        nxt = [0] * (min(len(spheres), reach) + 1)
        for r, mass in enumerate(spheres):
            if r == 0:
                if reach >= 1:
                    nxt[1] += mass * degree
                continue
            if r - 1 <= reach:
                nxt[r - 1] += mass
            if r + 1 <= reach:
                nxt[r + 1] += mass * (degree - 1)
        spheres = nxt
    return spheres[0]


def moment(L: Convolver, m: int, cap: int = DEFAULT_SUPPORT_CAP, method: str = "auto") -> MomentRecord:
    """``tau((L*L)^m)`` with its norm lower bound ``value ** (1/2m)``.

    ``method="auto"`` runs multiples of the Kesten Laplacian through the
    radial tree recursion (the walk there is a function of word length only)
    and everything else through the sparse word walk.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if not L.terms:
        return MomentRecord(m, Fraction(0), 0.0, True, "empty")
    lap = _is_uniform_laplacian(L) if method in ("auto", "radial") else None
    if method == "radial" and lap is None:
        raise ValueError("radial method needs a uniform Kesten Laplacian")
    if lap is not None:
        k, c = lap
        value = c.abs2() ** m * closed_walks_tree(2 * k, 2 * m)
        return MomentRecord(m, value, _root(value, m), True, "radial")
    value, exact = _walk(L, m, cap)
    if not exact and value < 0:
        value = max(value, 0.0)
    return MomentRecord(m, value, _root(value, m), exact, "walk")


def norm_lower_bound(L: Convolver, m: int, cap: int = DEFAULT_SUPPORT_CAP) -> float:
    return moment(L, m, cap).lower_bound


def moment_table(L: Convolver, max_m: int, cap: int = DEFAULT_SUPPORT_CAP) -> list[MomentRecord]:
    return [moment(L, m, cap) for m in range(1, max_m + 1)]


def running_lower_bounds(records: Sequence[MomentRecord]) -> list[float]:
    """Running maximum of the per-m bounds (each is a valid bound; the raw sequence need not be monotone)."""
    out, best = [], 0.0
    for r in records:
        best = max(best, r.lower_bound)
        out.append(best)
    return out


__all__ = [
    "Convolver", "GaussianRational", "MomentRecord", "SupportCapExceeded", "adjoint",
    "apply", "as_gaussian", "closed_walks_tree", "delta", "kesten_laplacian", "moment",
    "moment_table", "norm_lower_bound", "running_lower_bounds",
]
