"""Shared model fixtures.

Module-scoped where the heavy sum-law caches are worth reusing; tests that
mutate a model (decoupling overrides) must build their own instance.
"""

from fractions import Fraction

import pytest

from ldplab import iid_field, markov_field

DOEBLIN_P = [[0.7, 0.3], [0.4, 0.6]]


def fresh_rademacher():
    return iid_field([Fraction(-1), Fraction(1)], [0.5, 0.5])


def fresh_biased3():
    return iid_field([Fraction(-1), Fraction(0), Fraction(1)],
                     [0.2, 0.3, 0.5])


def fresh_doeblin():
    return markov_field([Fraction(-1), Fraction(1)], DOEBLIN_P)


@pytest.fixture(scope="module")
def rademacher():
    return fresh_rademacher()


@pytest.fixture(scope="module")
def biased3():
    return fresh_biased3()


@pytest.fixture(scope="module")
def doeblin():
    return fresh_doeblin()
