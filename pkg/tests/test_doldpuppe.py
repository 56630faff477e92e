import random
from fractions import Fraction

import pytest

from hodgemc import doldpuppe as dp
from hodgemc.complexes import FreeComplex, QQ, homology_ranks, tensor
from hodgemc.hochschild import _rand_complex


def Q(ranks, diffs=None):
    return FreeComplex(QQ, ranks, diffs or {})


def random_complex(rng, lo=-3, hi=0, max_rank=3):
    ranks = {i: rng.randint(0, max_rank) for i in range(lo, hi + 1)}
    ranks = {i: r for i, r in ranks.items() if r}
    return Q(ranks, _rand_complex(rng, ranks)).validate()


@pytest.mark.parametrize("n,ranks", [(0, [1]), (1, [2, 1]), (2, [3, 3, 1])])
def test_standard_simplex_chain_ranks(n, ranks):
    D = dp.build_Dn(n)
    assert [D.complex.rank(-k) for k in range(n + 1)] == ranks


def test_standard_simplex_complexes_are_contractible():
    for n in range(6):
        D = dp.build_Dn(n).complex
        assert D.check() == []
        assert homology_ranks(D) == {-k: int(k == 0) for k in range(n + 1)}


@pytest.mark.parametrize("n", range(5))
def test_diagonal_is_a_coassociative_chain_map(n):
    rep = dp.kappa_check(n)
    assert rep["coassociative"] and rep["chain_map"]


def test_cosimplicial_functoriality():
    assert all(dp.functoriality_check(n) for n in range(1, 5))


def test_level_dimensions():
    unit = Q({0: 1})
    assert [dp.dp_level(unit, n).dim for n in range(4)] == [1, 1, 1, 1]
    loop = Q({-1: 1})
    assert [dp.dp_level(loop, n).dim for n in range(4)] == [0, 1, 2, 3]


def test_homotopy_of_small_complexes():
    assert dp.dp_homotopy_groups(Q({0: 1}), 3) == {0: 1, 1: 0, 2: 0, 3: 0}
    assert dp.dp_homotopy_groups(Q({-2: 1}), 3) == {0: 0, 1: 0, 2: 1, 3: 0}
    acyclic = Q({-1: 1, 0: 1}, {-1: [[Fraction(1)]]})
    assert all(v == 0 for v in dp.dp_homotopy_groups(acyclic, 3).values())


def test_homotopy_matches_homology_on_random_complexes():
    rng = random.Random(8)
    for _ in range(6):
        A = random_complex(rng)
        assert dp.dp_homotopy_groups(A, 3) == dp.expected_homotopy_groups(A, 3)


def test_simplicial_identities_hold():
    rng = random.Random(9)
    A = random_complex(rng, max_rank=2)
    assert dp.simplicial_identities(A, 3)["ok"]


def test_product_unit_and_associativity():
    rng = random.Random(10)
    A = random_complex(rng, -1, 0, 2)
    B = random_complex(rng, -1, 0, 2)
    C = random_complex(rng, -1, 0, 1)
    n = 2
    la, lb, lc = (dp.dp_level(X, n) for X in (A, B, C))

    def rand_vec(lvl):
        return lvl.to_ambient([Fraction(rng.randint(-2, 2)) for _ in range(lvl.dim)])

    a, b, c = rand_vec(la), rand_vec(lb), rand_vec(lc)
    one = Q({0: 1})
    assert dp.dp_product(A, one, n, a, dp.dp_unit(n)) == a
    assert dp.associativity_defect(A, B, C, n, a, b, c) == []
    # faces commute with the product
    AB = tensor(A, B)
    ab = dp.dp_product(A, B, n, a, b, AB)
    assert dp.dp_level(AB, n).contains(ab)
    for i in range(n + 1):
        theta = dp.coface(n, i)
        fa = dp.pullback(A, theta, n - 1, n, a)
        fb = dp.pullback(B, theta, n - 1, n, b)
        assert dp.pullback(AB, theta, n - 1, n, ab) == dp.dp_product(A, B, n - 1, fa, fb, AB)


def _two_term():
    # Q in degrees -1 and 0 with zero differential: 1 and t, t*t = 0
    return Q({-1: 1, 0: 1})


def _algebra_dgc(objects):
    homs = {(x, y): _two_term() for x in objects for y in objects}
    mult = {}
    for x in objects:
        for y in objects:
            for z in objects:
                mult[(x, y, z)] = {
                    ((0, 0), (0, 0)): [Fraction(1)],
                    ((0, 0), (-1, 0)): [Fraction(1)],
                    ((-1, 0), (0, 0)): [Fraction(1)],
                }
    units = {x: [Fraction(1)] for x in objects}
    eps = {(x, y): [Fraction(1)] for x in objects for y in objects}
    return dp.MatrixDGC(objects, homs, mult, units, eps)


def test_matrix_dgc_validates():
    assert _algebra_dgc(["x", "y"]).validate()["ok"]


def test_fiber_of_identity_functor():
    A = _algebra_dgc(["x"])
    ident = {0: [[Fraction(1)]], -1: [[Fraction(1)]]}
    F = dp.DGFunctor(A, A, {"x": "x"}, {("x", "x"): ident})
    fib, bad = dp.dgc_fiber(F, "x")
    assert bad == []
    assert fib.objects == ["x"]
    h = fib.hom("x", "x")
    assert h.ranks == {0: 1}
    assert fib.validate()["ok"]


def test_two_objects_over_one():
    A = _algebra_dgc(["x", "y"])
    B = _algebra_dgc(["b"])
    ident = {0: [[Fraction(1)]], -1: [[Fraction(1)]]}
    F = dp.DGFunctor(A, B, {"x": "b", "y": "b"}, {(s, t): ident for s in "xy" for t in "xy"})
    fib, bad = dp.dgc_fiber(F, "b")
    assert bad == []
    assert fib.objects == ["x", "y"]
    for s in "xy":
        for t in "xy":
            # degree 0: preimage of Q 1_b; degree -1: kernel of the map
            assert fib.hom(s, t).ranks == {0: 1}
    for n in range(3):
        mine = dp.fiber_affine_in_source(fib, "x", "y", n)
        ref = dp.fiber_of_dp(F, "x", "y", "b", n)
        assert mine.same_as(ref), n


def test_non_surjective_functor_is_flagged():
    A = _algebra_dgc(["x"])
    F = dp.DGFunctor(A, A, {"x": "x"}, {("x", "x"): {0: [[Fraction(1)]], -1: [[Fraction(0)]]}})
    fib, bad = dp.dgc_fiber(F, "x")
    assert bad == [("x", "x", -1)]
    assert fib.hom("x", "x").ranks == {-1: 1, 0: 1}
