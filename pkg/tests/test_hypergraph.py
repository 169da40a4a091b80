import math
from fractions import Fraction

import numpy as np
import pytest

from hypermatch.hypergraph import (Hypergraph, HypergraphError, complete,
                                   degree_stats, format_hypergraph, induced,
                                   lowest_bit, mask_of, parse_hypergraph,
                                   popcount, random_hypergraph, remove_rset,
                                   vertices_of)


def test_mask_helpers():
    assert mask_of([0, 2, 5]) == 0b100101
    assert vertices_of(0b100101) == [0, 2, 5]
    assert popcount(0b100101) == 3
    assert lowest_bit(0b100100) == 2


def test_complete_sizes():
    for n, r in [(6, 3), (9, 3), (8, 4)]:
        K = complete(n, r)
        assert K.m == math.comb(n, r)
        assert K.n_active == n
        assert list(K.edges) == sorted(K.edges)


def test_validation():
    with pytest.raises(HypergraphError):
        Hypergraph(6, 3, (0b11,), (1 << 6) - 1)          # wrong edge size
    with pytest.raises(HypergraphError):
        Hypergraph(6, 3, (0b111, 0b111), (1 << 6) - 1)    # duplicate
    with pytest.raises(HypergraphError):
        Hypergraph(6, 3, (0b111,), 0b0111 >> 1)           # edge leaves active set
    with pytest.raises(HypergraphError):
        complete(64, 3)


def test_remove_rset_keeps_labels():
    K = complete(6, 3)
    H = remove_rset(K, mask_of([0, 1, 2]))
    assert H.n_active == 3
    assert H.active_list() == [3, 4, 5]
    assert H.edges == (mask_of([3, 4, 5]),)
    with pytest.raises(HypergraphError):
        remove_rset(H, mask_of([0]))


def test_induced():
    K = complete(6, 3)
    H = induced(K, mask_of([0, 1, 2, 3]))
    assert H.m == 4
    assert H.n_active == 4


def test_degree_stats_complete():
    st = degree_stats(complete(9, 3))
    assert st.min_degree == st.max_degree == 28
    assert st.avg_degree == Fraction(28)
    assert st.max_codegree == 7


def test_parse_format_roundtrip():
    K = complete(6, 3)
    text = format_hypergraph(K)
    assert text.splitlines()[0] == "6 3 20"
    H = parse_hypergraph(text)
    assert H == K
    with pytest.raises(HypergraphError):
        parse_hypergraph("6 3 2\n1 2 3\n")
    with pytest.raises(HypergraphError):
        parse_hypergraph("")


def test_random_hypergraph_deterministic():
    rng1 = np.random.default_rng(5)
    rng2 = np.random.default_rng(5)
    H1 = random_hypergraph(10, 3, 25, rng1)
    H2 = random_hypergraph(10, 3, 25, rng2)
    assert H1 == H2
    assert H1.m == 25
    with pytest.raises(HypergraphError):
        random_hypergraph(6, 3, 21, rng1)
