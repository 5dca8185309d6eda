"""Field models: exact laws against combinatorial and enumerative oracles."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldplab import (BudgetExceededError, ValueSpace, affine_image,
                    conditioned, iid_field, make_box, markov_field,
                    mean_law_exact, product_of_marginals, sample, scalarize)

from conftest import DOEBLIN_P, fresh_biased3, fresh_doeblin, fresh_rademacher
from oracles import (conditioned_box_sum_law, iid_sum_law, markov_path_law,
                     multinomial_three_atom_law, rademacher_sum_law,
                     stationary_2x2)


def law_as_dict(law):
    return {k[0]: lp for k, lp in zip(law.keys, law.logp)}


# ---------------------------------------------------------------------------
# iid laws


@pytest.mark.parametrize("n", [1, 2, 7, 40, 100])
def test_rademacher_sum_law_matches_binomial(rademacher, n):
    law = mean_law_exact(rademacher, n)
    want = rademacher_sum_law(n)
    got = law_as_dict(law)
    assert set(got) == set(want)
    for s, p in want.items():
        assert got[s] == pytest.approx(math.log(p), abs=1e-12)
    assert law.total() == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("n", [1, 3, 6])
def test_three_atom_law_matches_multinomial(biased3, n):
    law = mean_law_exact(biased3, n)
    want = multinomial_three_atom_law(
        Fraction(1, 5), Fraction(3, 10), Fraction(1, 2), n)
    got = law_as_dict(law)
    assert set(got) == set(want)
    for s, p in want.items():
        assert got[s] == pytest.approx(math.log(p), abs=1e-12)


def test_fractional_atoms_share_a_scaled_integer_support():
    model = iid_field([Fraction(1, 3), Fraction(1, 2)], [0.5, 0.5])
    law = mean_law_exact(model, 2)
    den, want = iid_sum_law([(Fraction(1, 3), Fraction(1, 2)),
                             (Fraction(1, 2), Fraction(1, 2))], 2)
    assert law.den == den == 6
    got = law_as_dict(law)
    assert set(got) == set(want)
    for key, p in want.items():
        assert got[key] == pytest.approx(math.log(p), abs=1e-12)


def test_iid_cylinder_probability_is_product_of_site_masses():
    model = fresh_biased3()
    lp = model.cylinder_log_prob({0: {0}, 3: {1, 2}, 7: {0, 1, 2}})
    assert lp == pytest.approx(math.log(0.2) + math.log(0.8), abs=1e-12)


def test_mean_law_total_mass_is_one_for_all_kinds():
    models = [fresh_rademacher(), fresh_biased3(), fresh_doeblin(),
              product_of_marginals(fresh_biased3(), 3),
              conditioned(fresh_biased3(), 3, [0, 2]),
              affine_image(fresh_rademacher(), [[2.0]], [1.0])]
    for model in models:
        law = mean_law_exact(model, 7)
        assert law.total() == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------------
# chains


@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_markov_law_matches_path_enumeration(doeblin, n):
    law = mean_law_exact(doeblin, n)
    start = stationary_2x2(DOEBLIN_P)
    want = markov_path_law(DOEBLIN_P, [-1.0, 1.0], start, n)
    got = {k[0]: lp for k, lp in zip(law.keys, law.logp)}
    assert set(got) == set(want)
    for s, p in want.items():
        assert got[s] == pytest.approx(math.log(p), rel=1e-10)


def test_markov_stationary_start_solves_balance():
    model = fresh_doeblin()
    pi = np.exp(model.log_start)
    assert pi @ np.asarray(DOEBLIN_P) == pytest.approx(pi, abs=1e-12)
    assert pi == pytest.approx(stationary_2x2(DOEBLIN_P), abs=1e-12)


def test_markov_law_snapshots_resume_consistently():
    a = fresh_doeblin()
    direct = mean_law_exact(a, 9)
    b = fresh_doeblin()
    for n in (3, 6, 9):      # resumed in stages
        staged = mean_law_exact(b, n)
    assert staged.keys == direct.keys
    assert np.allclose(staged.logp, direct.logp, atol=1e-12)


# ---------------------------------------------------------------------------
# block measures


def test_product_block_law_equals_base_law():
    base = fresh_biased3()
    blocked = product_of_marginals(base, 3)
    for n in (3, 5, 7):
        a = mean_law_exact(base, n)
        b = mean_law_exact(blocked, n)
        assert a.keys == b.keys
        assert np.allclose(a.logp, b.logp, atol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 6, 8])
def test_conditioned_block_law_matches_enumeration(n):
    base_probs = {0: Fraction(1, 5), 1: Fraction(3, 10), 2: Fraction(1, 2)}
    atoms = {0: -1, 1: 0, 2: 1}
    model = conditioned(fresh_biased3(), 3, [1, 2])
    law = mean_law_exact(model, n)
    want = conditioned_box_sum_law(atoms, base_probs, 3, [1, 2], n)
    got = law_as_dict(law)
    assert set(got) == set(want)
    for s, p in want.items():
        assert got[s] == pytest.approx(math.log(p), rel=1e-10, abs=1e-12)


def test_conditioned_block_cylinder_zero_on_excluded_atom():
    model = conditioned(fresh_biased3(), 3, [1, 2])
    assert model.cylinder_log_prob({1: {0}}) == -math.inf
    # within one block the kept atoms renormalize to 0.3/0.8 and 0.5/0.8
    lp = model.cylinder_log_prob({0: {1}})
    assert lp == pytest.approx(math.log(0.3 / 0.8), abs=1e-12)


def test_conditioned_markov_block_law_small_case():
    base = fresh_doeblin()
    model = conditioned(base, 2, [0, 1])   # full support: equals base blocks
    law = mean_law_exact(model, 4)
    start = stationary_2x2(DOEBLIN_P)
    # blocks of 2 are independent copies of the length-2 chain law
    short = markov_path_law(DOEBLIN_P, [-1.0, 1.0], start, 2)
    want = {}
    for s1, p1 in short.items():
        for s2, p2 in short.items():
            want[s1 + s2] = want.get(s1 + s2, 0.0) + p1 * p2
    got = law_as_dict(law)
    assert set(got) == set(want)
    for s, p in want.items():
        assert got[s] == pytest.approx(math.log(p), rel=1e-10)


def test_blocks_are_independent_across_the_boundary():
    model = conditioned(fresh_biased3(), 3, [1, 2])
    left = model.cylinder_log_prob({2: {1}})
    right = model.cylinder_log_prob({3: {2}})
    joint = model.cylinder_log_prob({2: {1}, 3: {2}})
    assert joint == pytest.approx(left + right, abs=1e-12)


def test_conditioned_rejects_zero_mass_blocks():
    from ldplab import ModelError
    with pytest.raises((ModelError, ValueError)):
        conditioned(fresh_biased3(), 3, [])


# ---------------------------------------------------------------------------
# affine images


def test_affine_image_law_transforms_support_exactly():
    base = fresh_rademacher()
    # recentering convention: site value is 2*sigma - 1, so atoms {-3, 1}
    model = affine_image(base, [[2.0]], [1.0])
    assert sorted(v[0] for v in model.atom_fracs) == [-3, 1]
    law = mean_law_exact(model, 5)
    want = {}
    for s, p in rademacher_sum_law(5).items():
        want[2 * s - 5] = p
    got = law_as_dict(law)
    assert set(got) == set(want)
    for s, p in want.items():
        assert got[s] == pytest.approx(math.log(p), abs=1e-12)


def test_scalarize_projects_planar_atoms():
    base = iid_field([(Fraction(0), Fraction(0)),
                      (Fraction(1), Fraction(0)),
                      (Fraction(0), Fraction(1))], [0.5, 0.25, 0.25])
    model = scalarize(base, (1.0, 2.0))
    assert model.k == 1
    vals = sorted(v[0] for v in model.space.points)
    assert vals == [0, 1, 2]


def test_scalarize_identity_shortcut_returns_same_object():
    base = fresh_rademacher()
    assert scalarize(base, 1.0) is base


# ---------------------------------------------------------------------------
# sampling and validation


def test_sampling_is_deterministic_in_the_seed():
    box = make_box((0,), 12, 1)
    for model in (fresh_rademacher(), fresh_doeblin(),
                  conditioned(fresh_biased3(), 3, [1, 2])):
        a = sample(model, box, 42)
        b = sample(model, box, 42)
        c = sample(model, box, 43)
        assert a == b
        assert set(a) == {(i,) for i in range(12)}
        assert any(a[k] != c[k] for k in a) or a == c


def test_conditioned_samples_respect_the_conditioning():
    model = conditioned(fresh_biased3(), 3, [1, 2])
    box = make_box((0,), 30, 1)
    config = sample(model, box, 5)
    assert all(idx in (1, 2) for idx in config.values())


def test_sample_frequencies_match_law_within_three_sigma():
    # binomial check on the block sampler: P(site value = 1) per site
    model = conditioned(fresh_biased3(), 2, [1, 2])
    box = make_box((0,), 2, 1)
    rng_hits = 0
    trials = 10_000
    for s in range(trials):
        config = sample(model, box, s)
        if config[(0,)] == 2:
            rng_hits += 1
    p = 0.5 / 0.8
    se = math.sqrt(p * (1 - p) / trials)
    assert abs(rng_hits / trials - p) <= 3 * se


def test_value_space_rejects_duplicates_and_bad_dims():
    with pytest.raises(ValueError):
        ValueSpace.from_atoms([1, 1])
    with pytest.raises(ValueError):
        ValueSpace.from_atoms([(1, 2, 3)])
    with pytest.raises(ValueError):
        iid_field([1, 2], [0.5])
    with pytest.raises(ValueError):
        iid_field([1, 2], [-0.1, 1.1])
    with pytest.raises(ValueError):
        markov_field([1, 2], [[0.5, 0.5], [0.7, 0.4]])


def test_budget_exceeded_raises():
    model = fresh_biased3()
    model.budget = 5
    with pytest.raises(BudgetExceededError):
        mean_law_exact(model, 50)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 30))
def test_law_mass_and_support_bounds_random_volumes(n):
    model = fresh_biased3()
    law = mean_law_exact(model, n)
    assert law.total() == pytest.approx(0.0, abs=1e-12)
    assert len(law.keys) == 2 * n + 1
    means = law.means()
    assert means.min() == pytest.approx(-1.0) and \
        means.max() == pytest.approx(1.0)
