import math
from fractions import Fraction

import numpy as np
import pytest

from hypermatch.hypergraph import complete, mask_of, random_hypergraph
from hypermatch.pm import (NoPerfectMatchingError, ResourceGuardError,
                           complete_pm_count, count_pm, enumerate_pms,
                           log_big, maxr, weight, weight_table)


def test_complete_pm_count_values():
    assert complete_pm_count(6, 3) == 10
    assert complete_pm_count(9, 3) == 280
    assert complete_pm_count(12, 3) == 15400
    assert complete_pm_count(7, 3) == 0
    assert complete_pm_count(0, 3) == 1


def test_count_matches_closed_form_small():
    for n in (3, 6, 9, 12):
        assert count_pm(complete(n, 3)) == complete_pm_count(n, 3)
    for n in (4, 8, 12):
        assert count_pm(complete(n, 4)) == complete_pm_count(n, 4)


def test_count_recursion_identity():
    for n in (6, 9, 12):
        assert count_pm(complete(n, 3)) == \
            math.comb(n - 1, 2) * count_pm(complete(n - 3, 3))


def test_dense_engine_agrees_with_memo():
    # n = 18 takes the dense int64 path; the closed form is the referee
    assert count_pm(complete(18, 3)) == complete_pm_count(18, 3)
    assert count_pm(complete(16, 4)) == complete_pm_count(16, 4)


def test_oracle_equivalence_random():
    rng = np.random.default_rng(11)
    for _ in range(30):
        n = int(rng.integers(6, 13))
        r = 3 if n % 4 else int(rng.choice([3, 4]))
        m = int(rng.integers(1, math.comb(n, r) + 1))
        H = random_hypergraph(n, r, m, rng)
        assert count_pm(H) == len(enumerate_pms(H))


def test_monotone_in_edges():
    rng = np.random.default_rng(3)
    K = complete(9, 3)
    H = random_hypergraph(9, 3, 30, rng)
    prev = count_pm(H)
    for e in K.edges:
        if e not in H.edges:
            H2 = H.with_edges(H.edges + (e,))
            assert count_pm(H2) >= prev
            break


def test_indivisible_and_empty():
    K = complete(7, 3)
    assert count_pm(K) == 0
    H = complete(6, 3).with_edges([])
    assert count_pm(H) == 0


def test_weight_examples():
    K = complete(9, 3)
    A = K.edges[0]
    assert weight(K, A) == 10            # PMs of the remaining 6 vertices
    spec = weight_table(K, scope="edges")
    assert all(w == 10 for w in spec.weights())
    assert spec.total == 280
    assert sum(spec.weights()) == spec.total * 9 // 3


def test_weight_identity_random():
    rng = np.random.default_rng(21)
    for _ in range(10):
        H = random_hypergraph(9, 3, int(rng.integers(5, 40)), rng)
        phi = count_pm(H)
        total = sum(weight(H, a) for a in H.edges)
        assert total * H.r == phi * H.n_active


def test_maxr():
    assert maxr(complete(6, 3)) == 1
    assert maxr(complete(9, 3)) == 1
    H = complete(6, 3).with_edges([mask_of([0, 1, 2]), mask_of([3, 4, 5])])
    assert maxr(H) == 1
    # drop one edge of K(6,3): cross-check against brute force
    K = complete(6, 3)
    H2 = K.remove_edge(K.edges[0])
    pms = enumerate_pms(H2)
    top = max(sum(1 for f in pms if a in f) for a in H2.edges)
    assert maxr(H2) == Fraction(top * 3 * H2.m, len(pms) * 6)
    with pytest.raises(NoPerfectMatchingError):
        maxr(complete(6, 3).with_edges([mask_of([0, 1, 2])]))


def test_guards():
    with pytest.raises(ResourceGuardError):
        enumerate_pms(complete(18, 3))
    with pytest.raises(ResourceGuardError):
        weight_table(complete(12, 3), scope="all-rsets", max_rsets=10)


def test_log_big():
    x = 12345
    assert log_big(x) == pytest.approx(math.log(x))
    huge = 7 ** 1000
    assert log_big(huge) == pytest.approx(1000 * math.log(7), rel=1e-12)
    with pytest.raises(ValueError):
        log_big(0)
