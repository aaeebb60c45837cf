from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qkd3.exactnum import OMEGA, ExactAmp
from qkd3 import statespace as ss
from qkd3.statespace import StateVector, overlap_prob


def vec(*ints):
    return StateVector.from_ints(ints, 0)


def numeric_overlap(u, v):
    # independent float oracle
    a, b = np.array(u, dtype=complex), np.array(v, dtype=complex)
    return abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real)


@pytest.mark.parametrize(
    "u, v, expected",
    [
        ((1, 0, 0), (1, 1, 1), Fraction(1, 3)),
        ((1, 0, 0), (0, 1, 0), Fraction(0)),
        ((1, -1, 2), (1, 1, 1), Fraction(2, 9)),
    ],
)
def test_overlap_examples(u, v, expected):
    assert overlap_prob(vec(*u), vec(*v)) == expected
    assert float(expected) == pytest.approx(numeric_overlap(u, v), abs=1e-15)


def test_zero_vector_rejected():
    with pytest.raises(ValueError):
        vec(0, 0, 0)


@pytest.fixture(scope="module")
def mub():
    return ss.build_mub4()


@pytest.fixture(scope="module")
def table1():
    return ss.build_table1()


def test_mub4_unbiased(mub):
    assert len(mub.vectors) == 12 and len(mub.bases) == 4
    assert mub.multiplicities == (1,) * 12
    for a, b in combinations(mub.bases, 2):
        for u in a.vectors:
            for v in b.vectors:
                assert overlap_prob(u, v) == Fraction(1, 3)
    for b in mub.bases:
        for u, v in combinations(b.vectors, 2):
            assert overlap_prob(u, v) == 0


def test_mub4_trits_by_position(mub):
    for b in mub.bases:
        assert [v.trit for v in b.vectors] == [0, 1, 2]


def test_table1_green_row():
    greens = {v.label() for v in ss.table1_vectors() if v.color == "green"}
    expected = {(0, 0, 1), (1, 0, 1), (0, -1, 1), (1, -1, 1), (1, -1, 2), (1, 1, 2), (2, -1, 1)}
    assert greens == {vec(*e).canonical().label() for e in expected}


def test_table1_norms(table1):
    assert {v.norm_sq() for v in table1.vectors} == {1, 2, 3, 6}


def test_table1_orthogonal_pairs_differ_in_color(table1):
    for u, v in combinations(table1.vectors, 2):
        if ss.orthogonal(u, v):
            assert u.trit != v.trit


def test_basis_census(table1):
    primary = ss.table1_primary_vectors()
    assert len(ss.enumerate_bases(primary)) == 4
    assert len(ss.orthogonal_pairs(primary)) == 9
    assert len(table1.bases) == 13
    assert sum(not b.complete for b in table1.bases) == 9
    appended = sorted(b.indices[p] for b in table1.bases for p in b.appended)
    assert appended == list(range(12, 21))


def test_computational_basis_present(table1):
    comp = {vec(0, 0, 1).label(), vec(1, 0, 0).label(), vec(0, 1, 0).label()}
    assert any({v.label() for v in b.vectors} == comp for b in table1.bases)


def test_center_vector_basis(table1):
    target = {vec(1, -1, 2).label(), vec(1, 1, 0).label(), vec(-1, 1, 1).canonical().label()}
    assert any({v.label() for v in b.vectors} == target for b in table1.bases)


def test_duplicate_ray_rejected():
    with pytest.raises(ValueError, match="duplicate"):
        ss.enumerate_bases([vec(1, -1, 0), vec(-1, 1, 0), vec(0, 0, 1)])


@pytest.mark.parametrize(
    "ints, m",
    [((0, 0, 1), 2), ((1, 0, 1), 3), ((1, -1, 2), 1)],
)
def test_multiplicity_examples(table1, ints, m):
    assert table1.multiplicities[table1.index(vec(*ints))] == m


def test_multiplicities_by_column(table1):
    expected = {1: 2, 3: 2, 2: 3, 4: 3, 5: 1, 6: 1, 7: 1}
    for v, m in zip(table1.vectors, table1.multiplicities):
        assert m == expected[ss.table1_column(v.tag)]
    assert sum(table1.multiplicities) == 39 == 3 * len(table1.bases)


def test_color_census(table1):
    assert [sum(v.trit == c for v in table1.vectors) for c in range(3)] == [7, 7, 7]
    assert [sum(v.trit == c for v in table1.vectors[:12]) for c in range(3)] == [4, 4, 4]


def test_coloring_report_passes(table1):
    rep = ss.verify_coloring(table1)
    assert rep.ok, rep.violations


def test_third_column_orthogonal_to_111(table1):
    third = [v for v in table1.vectors if ss.table1_column(v.tag) == 3]
    assert {v.label() for v in third} == {
        vec(0, -1, 1).canonical().label(),
        vec(1, 0, -1).label(),
        vec(-1, 1, 0).canonical().label(),
    }
    assert all(ss.orthogonal(ss.UNCOLORABLE_RAY, v) for v in third)
    assert {v.trit for v in third} == {0, 1, 2}


def test_flipped_color_fails(table1):
    data = ss.to_json(table1)
    green = next(v for v in data["vectors"] if v["color"] == "green")
    green["color"] = "red"
    bad = ss.from_json(data)
    rep = ss.verify_coloring(bad)
    assert not rep.checks["orthogonal-pairs-bicolored"]
    assert any(green["tag"] in v for v in rep.violations)


@pytest.mark.parametrize("factor", [-1, 2, OMEGA])
def test_ray_scaling_invariance(table1, factor):
    for u, v in combinations(table1.vectors[:9], 2):
        us = u.scaled(factor)
        assert overlap_prob(us, v) == overlap_prob(u, v)
        assert ss.orthogonal(us, v) == ss.orthogonal(u, v)


@pytest.mark.parametrize("builder", [ss.build_mub4, ss.build_table1])
def test_resolution_of_identity(builder):
    s = builder()
    probes = list(s.vectors) + [vec(1, 2, 3), StateVector((ExactAmp(1), OMEGA, ExactAmp(0, 2)), 0)]
    for b in s.bases:
        for x in probes:
            assert sum(overlap_prob(x, v) for v in b.vectors) == 1


def test_json_round_trip(table1):
    data = ss.to_json(table1)
    assert data["schema"] == "qkd3.stateset/1"
    assert len(data["vectors"]) == 21 and len(data["bases"]) == 13
    back = ss.from_json(data)
    assert back.vectors == table1.vectors
    assert [b.indices for b in back.bases] == [b.indices for b in table1.bases]


def test_qubit_sets_unbiased():
    for n in (2, 3):
        s = ss.build_qubit_set(n)
        assert len(s.bases) == n
        for a, b in combinations(s.bases, 2):
            assert all(overlap_prob(u, v) == Fraction(1, 2) for u in a.vectors for v in b.vectors)


@given(st.lists(st.integers(-3, 3), min_size=3, max_size=3).filter(any), st.integers(1, 4))
def test_canonical_idempotent_and_sign_free(ints, k):
    v = vec(*ints)
    c = v.canonical()
    assert c.canonical() == c
    assert v.scaled(-1).canonical() == c
    assert v.scaled(k).canonical() == c.scaled(k)
