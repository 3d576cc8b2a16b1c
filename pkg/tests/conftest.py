"""Shared random generators and comparison helpers."""

import random
from fractions import Fraction

import pytest
from hypothesis import settings

from vdfield.diffpoly import DiffPoly, gauss_val
from vdfield.valgroup import GroupElement

settings.register_profile("repeatable", derandomize=True, deadline=None)
settings.load_profile("repeatable")


def rat(rng, lo=-4, hi=4, den=3):
    return Fraction(rng.randint(lo, hi), rng.randint(1, den))


def random_value(K, rng, lo=-4, hi=4):
    return GroupElement([rat(rng, lo, hi) for _ in range(K.rank)])


def random_positive_value(K, rng, max_num=5):
    p = rng.randrange(K.rank)
    coords = [Fraction(0)] * K.rank
    coords[p] = Fraction(rng.randint(1, max_num), rng.randint(1, 3))
    for j in range(p + 1, K.rank):
        coords[j] = rat(rng, -5, 5)
    return GroupElement(coords)


def random_series(K, rng, nterms=3, lo=-4, hi=4, nonzero=True):
    out = K.zero_series()
    for _ in range(nterms):
        c = rat(rng, -5, 5)
        out = out + K.monomial_series(K.monomial_of_value(random_value(K, rng, lo, hi)), c)
    if nonzero and not out.terms:
        out = out + K.one()
    return out


def random_small_series(K, rng, nterms=2):
    """Nonzero series with valuation > 0."""
    out = K.zero_series()
    for _ in range(nterms):
        c = Fraction(rng.randint(1, 5), rng.randint(1, 3)) * rng.choice([1, -1])
        out = out + K.monomial_series(
            K.monomial_of_value(random_positive_value(K, rng)), c
        )
    if not out.terms:
        out = K.monomial_series(K.monomial_of_value(random_positive_value(K, rng)))
    return out


def random_bounded_series(K, rng, nterms=2):
    """Series with valuation >= 0 (an element of the valuation ring)."""
    out = K.constant(rat(rng, -3, 3))
    out = out + random_small_series(K, rng, nterms)
    return out


def random_unit_series(K, rng, nterms=2):
    """Series with valuation exactly 0."""
    c = Fraction(rng.randint(1, 4), rng.randint(1, 2)) * rng.choice([1, -1])
    return K.constant(c) + random_small_series(K, rng, nterms)


def random_multi_index(rng, order, max_degree):
    idx = [0] * (order + 1)
    budget = rng.randint(0, max_degree)
    for _ in range(budget):
        idx[rng.randrange(order + 1)] += 1
    return tuple(idx)


def random_poly(K, rng, order=2, max_degree=3, nterms=3, coeff_terms=2):
    terms = {}
    for _ in range(nterms):
        i = random_multi_index(rng, order, max_degree)
        c = random_series(K, rng, nterms=coeff_terms)
        terms[i] = terms.get(i, K.zero_series()) + c
    P = DiffPoly(K, terms, order)
    if P.is_zero():
        P = DiffPoly.variable(K, 0)
    return P


def series_prec(f, g):
    """f strictly smaller than g: v(f) > v(g)."""
    return f.valuation() > g.valuation()


def poly_sim(A, B):
    """A ~ B: the difference sits strictly above A."""
    diff = A - B
    if diff.is_zero():
        return True
    return gauss_val(diff) > gauss_val(A)


@pytest.fixture
def rng():
    return random.Random(20240817)
