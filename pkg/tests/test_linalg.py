import random
from fractions import Fraction

import sympy

from hodgemc import linalg


def _rand_matrix(rng, r, c, rank_cap):
    a = [[Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(rank_cap)] for _ in range(r)]
    b = [[Fraction(rng.randint(-4, 4)) for _ in range(c)] for _ in range(rank_cap)]
    return [[sum(a[i][k] * b[k][j] for k in range(rank_cap)) for j in range(c)] for i in range(r)]


def test_rank_matches_sympy():
    rng = random.Random(1)
    for _ in range(40):
        r, c = rng.randint(1, 8), rng.randint(1, 8)
        m = _rand_matrix(rng, r, c, rng.randint(0, 5))
        assert linalg.rank(m) == sympy.Matrix(m).rank()


def test_nullspace_vectors_are_killed_and_count_is_right():
    rng = random.Random(2)
    for _ in range(20):
        m = _rand_matrix(rng, 5, 7, 3)
        ns = linalg.nullspace(m)
        assert len(ns) == 7 - linalg.rank(m)
        for v in ns:
            assert all(sum(row[j] * v[j] for j in range(7)) == 0 for row in m)


def test_solve_returns_solution_or_witness():
    m = [[1, 2], [2, 4]]
    good = linalg.solve(m, [3, 6])
    assert good.ok
    assert good.solution[0] + 2 * good.solution[1] == 3
    bad = linalg.solve(m, [1, 0])
    assert not bad.ok
    y = bad.witness
    assert y[0] * 1 + y[1] * 2 == 0 and y[0] * 1 + y[1] * 0 != 0


def test_sparse_product_and_transpose():
    a = linalg.SparseMatrix.from_dense([[1, 0], [2, 3]])
    b = linalg.SparseMatrix.from_dense([[0, 1], [1, 1]])
    assert (a @ b).to_dense() == [[0, 1], [3, 5]]
    assert a.transpose().to_dense() == [[1, 2], [0, 3]]
    assert not a.is_zero()
