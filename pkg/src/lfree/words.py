"""Normal forms in free products of cyclic groups and Leinert-set search.

A word is stored as a tuple of syllables ``(factor, exponent)``; adjacent
syllables always belong to different factors, and exponents of a finite
factor of order ``k`` live in ``1..k-1``.  With that normal form, equality of
group elements is plain tuple equality.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

Syllable = tuple[int, int]

IDENTITY_TOKENS = ("", "1")


class WordError(ValueError):
    """Raised for malformed words, presentations or candidate sets."""


@dataclass(frozen=True)
class GroupPresentation:
    """Free product of cyclic factors.

    ``orders[i]`` is ``None`` for an infinite cyclic factor and ``k >= 2`` for
    ``Z/kZ``.  Generator names are single lowercase letters; the uppercase
    letter denotes the inverse.
    """

    orders: tuple[int | None, ...]
    names: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.orders:
            raise WordError("a presentation needs at least one factor")
        for k in self.orders:
            if k is not None and (not isinstance(k, int) or k < 2):
                raise WordError(f"finite factor order must be an integer >= 2, got {k!r}")
        if not self.names:
            if len(self.orders) > 26:
                raise WordError("more than 26 factors need explicit generator names")
            object.__setattr__(self, "names", tuple("abcdefghijklmnopqrstuvwxyz"[: len(self.orders)]))
        if len(self.names) != len(self.orders):
            raise WordError("one generator name per factor is required")
        if len(set(self.names)) != len(self.names):
            raise WordError(f"generator names must be distinct: {self.names}")
        for name in self.names:
            if len(name) != 1 or not name.isalpha() or not name.islower():
                raise WordError(f"generator names must be single lowercase letters, got {name!r}")

    @classmethod
    def free(cls, k: int) -> "GroupPresentation":
        return cls((None,) * k)

    @classmethod
    def from_header(cls, text: str) -> "GroupPresentation":
        """Parse ``"Z,Z"``, ``"Z,C2"`` or ``"u=Z,v=C2"`` (optionally prefixed by ``group:``)."""
        text = text.strip()
        if text.lower().startswith("group:"):
            text = text[len("group:"):]
        orders: list[int | None] = []
        names: list[str] = []
        for token in text.split(","):
            token = token.strip()
            if "=" in token:
                name, token = (part.strip() for part in token.split("=", 1))
                names.append(name)
            m = re.fullmatch(r"Z|C(\d+)", token)
            if m is None:
                raise WordError(f"unknown factor {token!r}; expected Z or C<k>")
            orders.append(None if m.group(1) is None else int(m.group(1)))
        if names and len(names) != len(orders):
            raise WordError("either name every factor or none")
        return cls(tuple(orders), tuple(names))

    @property
    def is_free(self) -> bool:
        return all(k is None for k in self.orders)

    def header(self) -> str:
        tokens = ("Z" if k is None else f"C{k}" for k in self.orders)
        return ",".join(f"{n}={t}" for n, t in zip(self.names, tokens))

    def normalize(self, factor: int, exponent: int) -> int:
        k = self.orders[factor]
        return exponent % k if k is not None else exponent

    # convenience wrappers around the module-level operations
    def parse(self, text: str) -> "ReducedWord":
        return parse_word(text, self)

    def generator(self, i: int) -> "ReducedWord":
        return ReducedWord(((i, 1),))


@dataclass(frozen=True, order=True)
class ReducedWord:
    syllables: tuple[Syllable, ...] = ()

    def __len__(self) -> int:
        return len(self.syllables)

    @property
    def is_identity(self) -> bool:
        return not self.syllables


E = ReducedWord()


def validate(w: ReducedWord, pres: GroupPresentation) -> None:
    prev = None
    for f, e in w.syllables:
        if not 0 <= f < len(pres.orders):
            raise WordError(f"factor index {f} out of range")
        k = pres.orders[f]
        if e == 0 or (k is not None and not 1 <= e < k):
            raise WordError(f"syllable {(f, e)} is not normalized")
        if f == prev:
            raise WordError("adjacent syllables share a factor")
        prev = f


def mul_syllables(a: tuple[Syllable, ...], b: tuple[Syllable, ...],
                  orders: Sequence[int | None]) -> tuple[Syllable, ...]:
    """Reduced product of two normal forms (hot path of the moment engine)."""
    if not a:
        return b
    if not b:
        return a
    out = list(a)
    i = 0
    nb = len(b)
    while out and i < nb:
        f, e = out[-1]
        g, e2 = b[i]
        if f != g:
            break
        s = e + e2
        k = orders[f]
        if k is not None:
            s %= k
        i += 1
        if s == 0:
            out.pop()
            continue
        out[-1] = (f, s)
        break
    if i:
        return tuple(out) + b[i:]
    return a + b


def inv_syllables(a: tuple[Syllable, ...], orders: Sequence[int | None]) -> tuple[Syllable, ...]:
    return tuple((f, -e % orders[f] if orders[f] is not None else -e) for f, e in reversed(a))


def syllable_length(a: tuple[Syllable, ...], orders: Sequence[int | None]) -> int:
    # word metric for the generating set {a_i^±1} ∪ (finite factors minus e);
    # subadditive, which is what the pruning bounds rely on
    return sum(abs(e) if orders[f] is None else 1 for f, e in a)


def multiply(w1: ReducedWord, w2: ReducedWord, pres: GroupPresentation) -> ReducedWord:
    return ReducedWord(mul_syllables(w1.syllables, w2.syllables, pres.orders))


def inverse(w: ReducedWord, pres: GroupPresentation) -> ReducedWord:
    return ReducedWord(inv_syllables(w.syllables, pres.orders))


def product(words: Iterable[ReducedWord], pres: GroupPresentation) -> ReducedWord:
    acc: tuple[Syllable, ...] = ()
    for w in words:
        acc = mul_syllables(acc, w.syllables, pres.orders)
    return ReducedWord(acc)


def word_length(w: ReducedWord, pres: GroupPresentation) -> int:
    return syllable_length(w.syllables, pres.orders)


def parse_word(text: str, pres: GroupPresentation) -> ReducedWord:
    """Parse a word such as ``"abA"``; uppercase letters are inverses.

    Whitespace is ignored and ``""`` or ``"1"`` is the identity.
    """
    text = "".join(text.split())
    if text in IDENTITY_TOKENS:
        return E
    index = {name: i for i, name in enumerate(pres.names)}
    acc: tuple[Syllable, ...] = ()
    for ch in text:
        i = index.get(ch.lower())
        if i is None:
            raise WordError(f"unknown generator symbol {ch!r} for presentation {pres.header()}")
        e = pres.normalize(i, -1 if ch.isupper() else 1)
        acc = mul_syllables(acc, ((i, e),), pres.orders)
    return ReducedWord(acc)


def render_word(w: ReducedWord, pres: GroupPresentation) -> str:
    """Inverse of :func:`parse_word`; the identity renders as ``"1"``."""
    if w.is_identity:
        return "1"
    parts = []
    for f, e in w.syllables:
        name = pres.names[f]
        parts.append(name * e if e > 0 else name.upper() * (-e))
    return "".join(parts)


def read_word_list(text: str) -> tuple[GroupPresentation, list[tuple[ReducedWord, str | None]]]:
    """Parse the word-list file format.

    One word per line, ``#`` starts a comment, a ``group: ...`` header line
    declares the presentation.  An optional second column carries a
    coefficient string (used by the moment commands).
    """
    pres = None
    pending: list[tuple[str, str | None]] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower().startswith("group:"):
            if pres is not None:
                raise WordError("duplicate group header")
            pres = GroupPresentation.from_header(line)
            continue
        cols = line.split()
        if len(cols) > 2:
            raise WordError(f"expected '<word> [coefficient]', got {line!r}")
        pending.append((cols[0], cols[1] if len(cols) == 2 else None))
    if pres is None:
        raise WordError("word list has no 'group:' header")
    return pres, [(parse_word(w, pres), c) for w, c in pending]


# -- Leinert sets --------------------------------------------------------------


LEINERT = "leinert"
NOT_LEINERT = "not_leinert"
UNDECIDED = "undecided"


@dataclass(frozen=True)
class LeinertVerdict:
    """Outcome of a Leinert test.

    ``witness`` is a 0-based index sequence ``(i1, j1, ..., ik, jk)`` with
    ``g[i1] g[j1]^-1 ... g[ik] g[jk]^-1 == e``.
    """

    status: str
    method: str
    witness: tuple[int, ...] | None = None
    note: str = ""
    details: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        out = {"status": self.status, "method": self.method,
               "witness": list(self.witness) if self.witness is not None else None}
        if self.note:
            out["note"] = self.note
        out.update(self.details)
        return out


def _check_candidates(words: Sequence[ReducedWord], pres: GroupPresentation) -> None:
    if not words:
        raise WordError("empty candidate set")
    if len(set(words)) != len(words):
        raise WordError("candidate words must be distinct")
    for w in words:
        validate(w, pres)


def is_admissible(indices: Sequence[int]) -> bool:
    """Adjacent indices differ: i_s != j_s and j_s != i_{s+1}."""
    return len(indices) >= 2 and len(indices) % 2 == 0 and all(
        a != b for a, b in zip(indices, indices[1:]))


def alternating_product(words: Sequence[ReducedWord], indices: Sequence[int],
                        pres: GroupPresentation) -> ReducedWord:
    acc: tuple[Syllable, ...] = ()
    for pos, i in enumerate(indices):
        s = words[i].syllables
        acc = mul_syllables(acc, s if pos % 2 == 0 else inv_syllables(s, pres.orders), pres.orders)
    return ReducedWord(acc)


def verify_witness(words: Sequence[ReducedWord], pres: GroupPresentation,
                   witness: Sequence[int]) -> bool:
    return (is_admissible(witness) and all(0 <= i < len(words) for i in witness)
            and alternating_product(words, witness, pres).is_identity)


def leinert_bounded(words: Sequence[ReducedWord], pres: GroupPresentation, depth: int) -> LeinertVerdict:
    """Search alternating products of at most ``depth`` pairs for a relation.

    A found relation certifies ``not_leinert``; otherwise the verdict is
    ``undecided``, because a finite search cannot certify the Leinert property.
    Within each length the lexicographically smallest witness is returned.
    """
    if depth < 1:
        raise WordError("depth must be >= 1")
    words = list(words)
    _check_candidates(words, pres)
    n = len(words)
    if n == 1:
        return LeinertVerdict(UNDECIDED, "bounded_search", note="vacuously Leinert: no admissible index sequence")
    orders = pres.orders
    letters = (
        [w.syllables for w in words],
        [inv_syllables(w.syllables, orders) for w in words],
    )
    max_len = max(syllable_length(w.syllables, orders) for w in words)

    def runs(start_pos, count, budget, first_prev=None):
        # DFS over index runs; `budget` is how much the complementary half can cancel
        out = []

        def rec(pos, prev, acc, path):
            if len(path) == count:
                out.append((tuple(path), acc))
                return
            for i in range(n):
                if i == prev:
                    continue
                nxt = mul_syllables(acc, letters[pos % 2][i], orders)
                remaining = count - len(path) - 1
                if syllable_length(nxt, orders) > budget + remaining * max_len:
                    continue
                path.append(i)
                rec(pos + 1, i, nxt, path)
                path.pop()

        rec(start_pos, first_prev, (), [])
        return out

    for k in range(1, depth + 1):
        budget = k * max_len
        suffixes: dict[tuple[Syllable, ...], list[tuple[int, ...]]] = {}
        for path, val in runs(k, k, budget):
            suffixes.setdefault(val, []).append(path)
        for path, val in runs(0, k, budget):
            matches = suffixes.get(inv_syllables(val, orders))
            if not matches:
                continue
            ok = [s for s in matches if s[0] != path[-1]]
            if ok:
                witness = path + min(ok)
                assert verify_witness(words, pres, witness)
                return LeinertVerdict(NOT_LEINERT, "bounded_search", witness=witness,
                                      details={"pairs": k})
    return LeinertVerdict(UNDECIDED, "bounded_search",
                          note=f"no relation with at most {depth} pairs")


def random_word(rng, pres: GroupPresentation, max_len: int) -> ReducedWord:
    """Uniform-ish random reduced word of letter length <= ``max_len`` (for tests and sweeps)."""
    length = int(rng.integers(0, max_len + 1))
    acc: tuple[Syllable, ...] = ()
    for _ in range(length):
        f = int(rng.integers(len(pres.orders)))
        e = pres.normalize(f, 1 if rng.random() < 0.5 else -1)
        acc = mul_syllables(acc, ((f, e),), pres.orders)
    return ReducedWord(acc)


def enumerate_words(pres: GroupPresentation, max_len: int) -> list[ReducedWord]:
    """All distinct elements reachable with at most ``max_len`` letters."""
    seen = {E}
    frontier = [E]
    gens = [((f, pres.normalize(f, s)),) for f in range(len(pres.orders)) for s in (1, -1)]
    for _ in range(max_len):
        nxt = []
        for w in frontier:
            for g in gens:
                v = ReducedWord(mul_syllables(w.syllables, g, pres.orders))
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    return sorted(seen, key=lambda w: (word_length(w, pres), w))


__all__ = [
    "E", "GroupPresentation", "LeinertVerdict", "ReducedWord", "WordError",
    "alternating_product", "enumerate_words", "inverse", "is_admissible",
    "leinert_bounded", "multiply", "parse_word", "product", "random_word",
    "read_word_list", "render_word", "validate", "verify_witness", "word_length",
]
