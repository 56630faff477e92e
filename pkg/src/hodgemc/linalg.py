"""Exact linear algebra over the rationals.

Matrices are passed around in a sparse row form: ``SparseMatrix`` keeps
``nrows``, ``ncols`` and a dict ``(i, j) -> Fraction``.  Heavy lifting
(rref, rank) is delegated to FLINT through python-flint; a word-size
modular rank is used as a cheap lower bound when certifying full rank.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import flint

# A 62-bit prime; modular rank never exceeds the rational rank.
DEFAULT_PRIME = 4611686018427387847


@dataclass
class SparseMatrix:
    nrows: int
    ncols: int
    entries: dict = field(default_factory=dict)

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence]) -> "SparseMatrix":
        nrows = len(rows)
        ncols = len(rows[0]) if nrows else 0
        m = cls(nrows, ncols)
        for i, row in enumerate(rows):
            for j, v in enumerate(row):
                if v:
                    m.entries[(i, j)] = Fraction(v)
        return m

    @classmethod
    def from_columns(cls, nrows: int, columns: Sequence[dict]) -> "SparseMatrix":
        m = cls(nrows, len(columns))
        for j, col in enumerate(columns):
            for i, v in col.items():
                if v:
                    m.entries[(i, j)] = Fraction(v)
        return m

    def add(self, i: int, j: int, v) -> None:
        if not v:
            return
        s = self.entries.get((i, j), 0) + v
        if s:
            self.entries[(i, j)] = s
        else:
            self.entries.pop((i, j), None)

    def to_dense(self) -> list[list[Fraction]]:
        out = [[Fraction(0)] * self.ncols for _ in range(self.nrows)]
        for (i, j), v in self.entries.items():
            out[i][j] = Fraction(v)
        return out

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix(self.ncols, self.nrows, {(j, i): v for (i, j), v in self.entries.items()})

    def apply(self, vec: Sequence) -> list[Fraction]:
        out = [Fraction(0)] * self.nrows
        for (i, j), v in self.entries.items():
            if vec[j]:
                out[i] += v * vec[j]
        return out

    def __matmul__(self, other: "SparseMatrix") -> "SparseMatrix":
        if self.ncols != other.nrows:
            raise ValueError("shape mismatch in matrix product")
        by_row: dict[int, list] = {}
        for (k, j), v in other.entries.items():
            by_row.setdefault(k, []).append((j, v))
        out = SparseMatrix(self.nrows, other.ncols)
        for (i, k), u in self.entries.items():
            for j, v in by_row.get(k, ()):
                out.add(i, j, u * v)
        return out

    def is_zero(self) -> bool:
        return not self.entries


def as_sparse(mat) -> SparseMatrix:
    if isinstance(mat, SparseMatrix):
        return mat
    return SparseMatrix.from_dense(mat)


def _to_fmpq(m: SparseMatrix) -> "flint.fmpq_mat":
    out = flint.fmpq_mat(m.nrows, m.ncols)
    for (i, j), v in m.entries.items():
        v = Fraction(v)
        out[i, j] = flint.fmpq(v.numerator, v.denominator)
    return out


def _from_fmpq(x) -> Fraction:
    return Fraction(int(x.p), int(x.q))


def rank_mod_p(mat, p: int = DEFAULT_PRIME) -> int:
    """Rank over F_p; a lower bound for the rational rank."""
    m = as_sparse(mat)
    if m.nrows == 0 or m.ncols == 0:
        return 0
    out = flint.nmod_mat(m.nrows, m.ncols, p)
    for (i, j), v in m.entries.items():
        v = Fraction(v)
        if v.denominator % p == 0:
            raise ZeroDivisionError("denominator vanishes modulo the chosen prime")
        out[i, j] = v.numerator * pow(v.denominator, -1, p) % p
    return out.rank()


def rank_mod_p_sparse(mat, p: int = DEFAULT_PRIME) -> int:
    """Rank over F_p by sparse row echelon reduction (rows kept as dicts).

    Much faster than dense elimination for the very sparse differentials of
    bar-type complexes; the result equals ``rank_mod_p``.
    """
    m = as_sparse(mat)
    if not m.entries:
        return 0
    if m.nrows < m.ncols:
        m = m.transpose()
    rows: dict = {}
    for (i, j), v in m.entries.items():
        v = Fraction(v)
        if v.denominator % p == 0:
            raise ZeroDivisionError("denominator vanishes modulo the chosen prime")
        rows.setdefault(i, {})[j] = v.numerator * pow(v.denominator, -1, p) % p
    # pivot rows normalized to 1 at their leading (smallest) column
    pivots: dict = {}
    for row in sorted(rows.values(), key=len):
        row = dict(row)
        while row:
            c = min(row)
            prow = pivots.get(c)
            if prow is None:
                inv = pow(row[c], -1, p)
                pivots[c] = {k: v * inv % p for k, v in row.items()}
                break
            f = row[c]
            for k, v in prow.items():
                x = (row.get(k, 0) - f * v) % p
                if x:
                    row[k] = x
                else:
                    row.pop(k, None)
    return len(pivots)


def rank_exact_sparse(mat) -> int:
    """Exact rational rank by sparse row echelon reduction with Fractions."""
    m = as_sparse(mat)
    rows: dict = {}
    for (i, j), v in m.entries.items():
        if v:
            rows.setdefault(i, {})[j] = Fraction(v)
    pivots: dict = {}
    for row in sorted(rows.values(), key=len):
        row = dict(row)
        while row:
            c = min(row)
            prow = pivots.get(c)
            if prow is None:
                inv = 1 / row[c]
                pivots[c] = {k: v * inv for k, v in row.items()}
                break
            f = row[c]
            for k, v in prow.items():
                x = row.get(k, 0) - f * v
                if x:
                    row[k] = x
                else:
                    row.pop(k, None)
    return len(pivots)


def rank(mat) -> int:
    """Exact rank over Q (a modular rank certifies full rank cheaply)."""
    m = as_sparse(mat)
    if m.nrows == 0 or m.ncols == 0 or not m.entries:
        return 0
    lower = rank_mod_p_sparse(m)
    if lower == min(m.nrows, m.ncols):
        return lower
    if m.nrows * m.ncols > 250_000:
        return rank_exact_sparse(m)
    return _to_fmpq(m).rank()


def rref(mat) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form and pivot columns."""
    m = as_sparse(mat)
    if m.nrows == 0 or m.ncols == 0:
        return [[Fraction(0)] * m.ncols for _ in range(m.nrows)], []
    r, rk = _to_fmpq(m).rref()
    rows = [[_from_fmpq(r[i, j]) for j in range(m.ncols)] for i in range(rk)]
    pivots = []
    for row in rows:
        pivots.append(next(j for j, v in enumerate(row) if v))
    return rows, pivots


def nullspace(mat) -> list[list[Fraction]]:
    """Basis of {x : M x = 0}, one vector per free column."""
    m = as_sparse(mat)
    rows, pivots = rref(m)
    free = [j for j in range(m.ncols) if j not in set(pivots)]
    basis = []
    for f in free:
        v = [Fraction(0)] * m.ncols
        v[f] = Fraction(1)
        for row, p in zip(rows, pivots):
            v[p] = -row[f]
        basis.append(v)
    return basis


@dataclass
class SolveResult:
    solution: list[Fraction] | None
    witness: list[Fraction] | None = None

    @property
    def ok(self) -> bool:
        return self.solution is not None


def solve(mat, rhs: Sequence) -> SolveResult:
    """Solve M x = b exactly.

    On failure, ``witness`` is a row vector y with y M = 0 and y b != 0.
    """
    m = as_sparse(mat)
    b = [Fraction(v) for v in rhs]
    if len(b) != m.nrows:
        raise ValueError("right-hand side has wrong length")
    aug = SparseMatrix(m.nrows, m.ncols + 1, dict(m.entries))
    for i, v in enumerate(b):
        if v:
            aug.entries[(i, m.ncols)] = v
    rows, pivots = rref(aug)
    if pivots and pivots[-1] == m.ncols:
        for y in nullspace(m.transpose()):
            if sum(yi * bi for yi, bi in zip(y, b)):
                return SolveResult(None, y)
        raise AssertionError("inconsistent system without a left-kernel witness")
    x = [Fraction(0)] * m.ncols
    for row, p in zip(rows, pivots):
        x[p] = row[m.ncols]
    return SolveResult(x)


def column_space_basis(vectors: Iterable[Sequence]) -> list[list[Fraction]]:
    """Maximal independent subset (as rref rows) spanning the given vectors."""
    vecs = [list(map(Fraction, v)) for v in vectors]
    if not vecs:
        return []
    rows, _ = rref(vecs)
    return rows


def random_rational(rng: random.Random, size: int = 5) -> Fraction:
    return Fraction(rng.randint(-size, size), rng.randint(1, 3))
