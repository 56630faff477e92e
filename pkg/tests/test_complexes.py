from fractions import Fraction

import pytest

from hodgemc.algebra import FilteredPBWAlgebra
from hodgemc.complexes import (
    ChainMap,
    FreeComplex,
    QQ,
    StrictLComplex,
    cone,
    complex_from_json,
    hom_complex,
    homology_ranks,
    homology_ranks_at_points,
    identity_map,
    koszul_graded_piece,
    koszul_resolution,
    shift,
    tensor_with_koszul,
    zero_map,
)


def q(ranks, diffs=None):
    return FreeComplex(QQ, ranks, diffs or {})


def test_valid_and_invalid_differentials():
    assert q({0: 1, 1: 1}).check() == []
    bad = FreeComplex(QQ, {-1: 1, 0: 1, 1: 1}, {-1: [[Fraction(1)]], 0: [[Fraction(1)]]})
    assert bad.check() == [-1]
    with pytest.raises(ValueError):
        bad.validate()


def test_homology_examples():
    assert homology_ranks(q({0: 1})) == {0: 1}
    iso = q({0: 1, 1: 1}, {0: [[Fraction(1)]]})
    assert all(v == 0 for v in homology_ranks(iso).values())


def test_cone_of_identity_is_acyclic():
    c = q({-1: 2, 0: 3, 1: 1}, {-1: [[1, 0], [0, 1], [0, 0]], 0: [[0, 0, 1]]})
    c.validate()
    assert homology_ranks(c) == {-1: 0, 0: 0, 1: 0}
    d = cone(identity_map(c))
    assert d.check() == []
    assert all(v == 0 for v in homology_ranks(d).values())
    x = q({0: 2, 1: 2}, {0: [[1, 2], [2, 4]]})
    assert homology_ranks(cone(identity_map(x))) == {i: 0 for i in range(-1, 2)}


def test_cone_of_zero_map_is_direct_sum():
    e = q({0: 1, 1: 1}, {0: [[Fraction(1)]]})
    f = q({0: 2})
    c = cone(zero_map(e, f))
    assert c.ranks == {-1: 1, 0: 3}
    assert sum(homology_ranks(c).values()) == 2


def test_shift_roundtrip_and_hom_of_unit():
    e = q({0: 1, 1: 2}, {0: [[1], [3]]})
    assert shift(shift(e, 1), -1) == e
    h = hom_complex(q({0: 1}), q({0: 1}))
    assert h.ranks == {0: 1}


def test_polynomial_complex_is_generically_exact():
    A = FilteredPBWAlgebra("poly", 1, 1)
    x = A.ring.var(0)
    c = FreeComplex(A.ring, {0: 1, 1: 1}, {0: [[x]]})
    rep = homology_ranks_at_points(c, trials=3, seed=1)
    assert rep.ranks == {0: 0, 1: 0}
    special = homology_ranks_at_points(c, points=[(Fraction(0),), (Fraction(2),)])
    assert special.disagreements == {0: [1, 0], 1: [1, 0]}
    empty = homology_ranks_at_points(FreeComplex(A.ring, {}))
    assert empty.ranks == {}


@pytest.mark.parametrize("m,ranks", [(1, {-1: 1, 0: 1}), (2, {-2: 1, -1: 2, 0: 1})])
def test_koszul_shapes(m, ranks):
    A = FilteredPBWAlgebra("weyl", m, m)
    K = koszul_resolution(A)
    assert K.ranks == ranks
    assert K.check() == []


@pytest.mark.parametrize("m", [1, 2])
def test_koszul_graded_pieces_are_acyclic(m):
    A = FilteredPBWAlgebra("weyl", m, m)
    for p in range(1, 5):
        g = koszul_graded_piece(A, p)
        assert all(v == 0 for v in homology_ranks(g).values()), p


def test_tensor_with_koszul():
    A = FilteredPBWAlgebra("weyl", 1, 1)
    unit = StrictLComplex(A, FreeComplex(A.ring, {0: 1}), {})
    T = tensor_with_koszul(unit)
    assert T.complex.ranks == koszul_resolution(A).ranks
    doubled = StrictLComplex(A, FreeComplex(A.ring, {0: 2}), {})
    T2 = tensor_with_koszul(doubled)
    assert T2.complex.ranks == {d: 2 * r for d, r in T.complex.ranks.items()}
    assert T2.complex.check() == []
    for rep in T2.acyclicity_certificate(3).values():
        assert rep.unanimous_zero()


def test_json_roundtrip():
    e = q({-1: 2, 0: 1}, {-1: [[Fraction(1, 2), 3]]})
    assert complex_from_json(e.to_json()) == e


def test_chain_map_defect_detects_non_maps():
    e = q({0: 1, 1: 1}, {0: [[Fraction(1)]]})
    f = ChainMap(e, e, {0: [[Fraction(1)]], 1: [[Fraction(2)]]})
    assert f.defect() == [0]
