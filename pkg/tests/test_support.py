import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bandsurf.errors import DimensionMismatch, DomainError
from bandsurf.support import (
    SupportSet,
    centered_rect,
    lq_ball_support,
    minkowski_sum,
    parse_shape,
    rect_support,
    shift_complement,
    translations_within,
)


def as_set(sup):
    return {tuple(int(v) for v in k) for k in sup.freqs}


def brute_complement(gamma, lam):
    g = as_set(gamma)
    return {l for l in g if all(tuple(a - b for a, b in zip(l, k)) in g for k in as_set(lam))}


def brute_translations(gamma, lam):
    g = as_set(gamma)
    lam_pts = as_set(lam)
    span = range(-40, 41)
    out = set()
    for t in itertools.product(span, repeat=gamma.dims):
        if all(tuple(a + b for a, b in zip(k, t)) in g for k in lam_pts):
            out.add(t)
    return out


small_sets = st.lists(
    st.tuples(st.integers(-4, 4), st.integers(-4, 4)), min_size=1, max_size=25
)


def test_rect_counts_and_order():
    s = rect_support([-1, 0], [1, 2])
    assert len(s) == 9
    # lexicographic order, first coordinate slowest
    assert s.freqs[0].tolist() == [-1, 0]
    assert s.freqs[-1].tolist() == [1, 2]
    keys = [tuple(r) for r in s.freqs]
    assert keys == sorted(keys)


def test_duplicates_collapse():
    s = SupportSet([[0, 1], [0, 1], [1, 0]])
    assert len(s) == 2


def test_centered_rect_rejects_even():
    with pytest.raises(DomainError):
        centered_rect([4, 3])


def test_parse_shape():
    assert parse_shape("3x3") == centered_rect((3, 3))
    assert len(parse_shape("5X5x5")) == 125
    with pytest.raises(DomainError):
        parse_shape("3xz")


def test_centered_shift_counts():
    # 11x11 minus-shift 5x5 is 7x7; 13x13 minus-shift 3x3 is 11x11
    assert len(shift_complement(centered_rect((11, 11)), centered_rect((5, 5)))) == 49
    assert len(shift_complement(centered_rect((13, 13)), centered_rect((3, 3)))) == 121


def test_complement_empty_returns_none():
    assert shift_complement(centered_rect((3, 3)), centered_rect((5, 5))) is None


def test_complement_of_itself_is_origin():
    lam = centered_rect((3, 3))
    comp = shift_complement(lam, lam)
    assert as_set(comp) == {(0, 0)}


@settings(max_examples=60, deadline=None)
@given(small_sets, small_sets)
def test_complement_matches_brute_force(g, l):
    gamma, lam = SupportSet(g), SupportSet(l)
    comp = shift_complement(gamma, lam)
    expect = brute_complement(gamma, lam)
    assert (set() if comp is None else as_set(comp)) == expect


@settings(max_examples=40, deadline=None)
@given(small_sets, small_sets)
def test_translations_match_brute_force(g, l):
    gamma, lam = SupportSet(g), SupportSet(l)
    got = {tuple(int(v) for v in t) for t in translations_within(gamma, lam)}
    assert got == brute_translations(gamma, lam)


def test_translations_equal_complement_for_centered():
    gamma, lam = centered_rect((9, 7)), centered_rect((3, 3))
    got = {tuple(t) for t in translations_within(gamma, lam).tolist()}
    assert got == as_set(shift_complement(gamma, lam))


@settings(max_examples=40, deadline=None)
@given(small_sets, small_sets)
def test_minkowski_matches_brute_force(a, b):
    A, B = SupportSet(a), SupportSet(b)
    expect = {(x[0] + y[0], x[1] + y[1]) for x in as_set(A) for y in as_set(B)}
    assert as_set(minkowski_sum(A, B)) == expect


@pytest.mark.parametrize("q", [1, 2, np.inf])
@pytest.mark.parametrize("n,d", [(1, 3), (2, 2.5), (3, 2)])
def test_ball_matches_lattice_enumeration(n, d, q):
    r = int(np.floor(d))
    expect = {
        k for k in itertools.product(range(-r, r + 1), repeat=n)
        if np.linalg.norm(np.array(k, dtype=float), ord=q) <= d + 1e-12
    }
    assert as_set(lq_ball_support(n, d, q)) == expect


def test_ball_small_counts():
    assert len(lq_ball_support(2, 2, 2)) == 13
    assert len(lq_ball_support(1, 2, 1)) == 5
    with pytest.raises(DomainError):
        lq_ball_support(2, 2, 3)


def test_locate_and_positions():
    s = centered_rect((5, 5))
    rows = s.freqs[[3, 3, 10, 0]]
    assert s.locate(rows).tolist() == [3, 3, 10, 0]
    sub = centered_rect((3, 3))
    pos = sub.positions_in(s)
    assert np.array_equal(s.freqs[pos], sub.freqs)
    assert s.index_of((0, 0)) == 12
    assert (2, 2) in s and (3, 0) not in s


def test_locate_missing_raises():
    with pytest.raises(DomainError):
        centered_rect((3, 3)).locate([[5, 5]])


def test_mirror_and_symmetry():
    s = centered_rect((3, 5))
    m = s.mirror_indices()
    assert np.array_equal(s.freqs[m], -s.freqs)
    assert s.is_symmetric
    assert not rect_support([0, 0], [2, 2]).is_symmetric
    assert rect_support([0, 0], [2, 2]).is_rect
    assert not lq_ball_support(2, 2, 2).is_rect


def test_json_roundtrip():
    s = lq_ball_support(3, 2, 1)
    t = SupportSet.from_json(s.to_json())
    assert s == t and hash(s) == hash(t)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        shift_complement(centered_rect((3, 3)), centered_rect((3,)))


def test_freqs_read_only():
    s = centered_rect((3, 3))
    with pytest.raises(ValueError):
        s.freqs[0, 0] = 7
