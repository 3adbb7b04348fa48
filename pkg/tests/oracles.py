"""Independent reference implementations used by the tests."""

import itertools
from collections import defaultdict
from fractions import Fraction


def reduce_letters(letters, orders):
    """Free-product reduction of single letters ``(factor, +-1)`` by a stack."""
    stack = []
    for f, e in letters:
        if stack and stack[-1][0] == f:
            _, x = stack.pop()
            x += e
            if orders[f] is not None:
                x %= orders[f]
            if x:
                stack.append((f, x))
        else:
            x = e % orders[f] if orders[f] is not None else e
            if x:
                stack.append((f, x))
    return tuple(stack)


def letters_of(syllables):
    return [(f, 1 if e > 0 else -1) for f, e in syllables for _ in range(abs(e))]


def inverse_letters(letters):
    return [(f, -e) for f, e in reversed(letters)]


def gmul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def gconj(a):
    return (a[0], -a[1])


def gaussian(c):
    c = complex(c) if not isinstance(c, tuple) else c
    if isinstance(c, tuple):
        return (Fraction(c[0]), Fraction(c[1]))
    return (Fraction(c.real), Fraction(c.imag))


def _half_sums(terms, orders, m, start_with_adjoint):
    """Sum of coefficients of all length-``m`` index runs, keyed by reduced product."""
    out = defaultdict(lambda: (Fraction(0), Fraction(0)))
    letters = [letters_of(w) for _, w in terms]
    for seq in itertools.product(range(len(terms)), repeat=m):
        coef = (Fraction(1), Fraction(0))
        word = []
        for pos, j in enumerate(seq):
            adj = (pos % 2 == 0) == start_with_adjoint
            c = terms[j][0]
            coef = gmul(coef, gconj(c) if adj else c)
            word += inverse_letters(letters[j]) if adj else letters[j]
        key = reduce_letters(word, orders)
        acc = out[key]
        out[key] = (acc[0] + coef[0], acc[1] + coef[1])
    return out


def moment_by_enumeration(terms, orders, m):
    """``tau((L*L)^m)``: sum over all ``len(terms)**(2m)`` index sequences.

    ``terms`` is a list of ``(gaussian coefficient, syllables)``.  The sum is
    split into a first and second half of ``m`` letters each (sequences of
    ``L*`` and ``L`` alternate, starting with ``L*``); every sequence is still
    counted exactly once, via the product of the two half sums whose words
    cancel.
    """
    first = _half_sums(terms, orders, m, True)
    second = _half_sums(terms, orders, m, m % 2 == 0)
    total = (Fraction(0), Fraction(0))
    for word, c1 in first.items():
        inv = reduce_letters(inverse_letters(letters_of(word)), orders)
        c2 = second.get(inv)
        if c2 is not None:
            p = gmul(c1, c2)
            total = (total[0] + p[0], total[1] + p[1])
    return total


def moment_by_full_enumeration(terms, orders, m):
    """Same quantity without the split; only for tiny cases."""
    letters = [letters_of(w) for _, w in terms]
    total = (Fraction(0), Fraction(0))
    for seq in itertools.product(range(len(terms)), repeat=2 * m):
        coef = (Fraction(1), Fraction(0))
        word = []
        for pos, j in enumerate(seq):
            c = terms[j][0]
            if pos % 2 == 0:
                coef = gmul(coef, gconj(c))
                word += inverse_letters(letters[j])
            else:
                coef = gmul(coef, c)
                word += letters[j]
        if not reduce_letters(word, orders):
            total = (total[0] + coef[0], total[1] + coef[1])
    return total
