"""Bounded complexes of finite-rank free modules and standard constructions.

Conventions
-----------
* Cohomological grading, d : C^i -> C^{i+1}.
* ``diffs[i]`` is a matrix with ``rank(i+1)`` rows and ``rank(i)`` columns;
  column c holds the coordinates of d(e_c).
* For modules over the noncommutative ring L the composite of
  ``earlier`` then ``later`` has entries sum_r earlier[r][c] * later[s][r]
  (left modules, coefficients act on the left).
* shift: E[n]^i = E^{i+n}, d multiplied by (-1)^n.
* cone(f: E -> F): Cone^i = F^i (+) E^{i+1}, d(y, e) = (d y + f e, -d e).
* hom(E, F)^i = prod_j Hom(E^j, F^{j+i}), d(phi) = d_F phi - (-1)^i phi d_E.
* tensor: d(e (x) f) = d e (x) f + (-1)^|e| e (x) d f.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from . import linalg
from .algebra import AlgebraElement, FilteredPBWAlgebra, Poly, PolyRing, compositions


class RationalField:
    """The ground field Q with the same small interface as ``PolyRing``."""

    names: tuple = ()
    nvars = 0

    def zero(self) -> Fraction:
        return Fraction(0)

    def one(self) -> Fraction:
        return Fraction(1)

    def const(self, c) -> Fraction:
        return Fraction(c)

    def coerce(self, value) -> Fraction:
        if isinstance(value, str):
            return self.parse(value)
        if isinstance(value, Poly):
            return value.constant_value()
        return Fraction(value)

    def parse(self, text: str) -> Fraction:
        try:
            return Fraction(text.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse rational {text!r}") from exc

    def format(self, c) -> str:
        return str(Fraction(c))

    def __eq__(self, other) -> bool:
        return isinstance(other, RationalField)

    def __hash__(self) -> int:
        return hash("QQ")

    def __repr__(self) -> str:
        return "QQ"


QQ = RationalField()


def ring_zero(ring):
    if isinstance(ring, FilteredPBWAlgebra):
        return AlgebraElement(ring, {})
    return ring.zero()


def ring_one(ring):
    if isinstance(ring, FilteredPBWAlgebra):
        return ring.one()
    return ring.one()


def _is_zero(x) -> bool:
    return not x


# ---------------------------------------------------------------------------
# matrices over a ring


def zero_matrix(ring, nrows: int, ncols: int) -> list:
    z = ring_zero(ring)
    return [[z] * ncols for _ in range(nrows)]


def identity_matrix(ring, n: int) -> list:
    m = zero_matrix(ring, n, n)
    for i in range(n):
        m[i][i] = ring_one(ring)
    return m


def compose(ring, later: Sequence[Sequence], earlier: Sequence[Sequence], inner: int | None = None) -> list:
    """Matrix of ``later`` after ``earlier``: entries sum_r earlier[r][c] * later[s][r]."""
    nrows = len(later)
    ncols = len(earlier[0]) if earlier else 0
    if inner is None:
        inner = len(earlier)
    z = ring_zero(ring)
    out = [[z] * ncols for _ in range(nrows)]
    for s in range(nrows):
        lrow = later[s]
        for r in range(inner):
            l_sr = lrow[r]
            if _is_zero(l_sr):
                continue
            erow = earlier[r]
            for c in range(ncols):
                e_rc = erow[c]
                if not _is_zero(e_rc):
                    out[s][c] = out[s][c] + e_rc * l_sr
    return out


def mat_add(a: Sequence[Sequence], b: Sequence[Sequence]) -> list:
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_scale(a: Sequence[Sequence], c) -> list:
    return [[x * c for x in row] for row in a]


def mat_is_zero(a: Sequence[Sequence]) -> bool:
    return all(_is_zero(x) for row in a for x in row)


def mat_map(a: Sequence[Sequence], fn: Callable) -> list:
    return [[fn(x) for x in row] for row in a]


def evaluate_entry(x, point):
    if isinstance(x, Poly):
        return x.evaluate(point)
    return Fraction(x)


# ---------------------------------------------------------------------------
# complexes


@dataclass
class FreeComplex:
    ring: object
    ranks: dict
    diffs: dict = field(default_factory=dict)
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        self.ranks = {int(i): int(r) for i, r in self.ranks.items() if int(r) > 0}
        full = {}
        for i in self.degrees():
            if self.rank(i + 1):
                m = self.diffs.get(i)
                if m is None:
                    m = zero_matrix(self.ring, self.rank(i + 1), self.rank(i))
                if len(m) != self.rank(i + 1) or any(len(row) != self.rank(i) for row in m):
                    raise ValueError(f"differential in degree {i} has wrong shape")
                full[i] = [list(row) for row in m]
        for i, m in self.diffs.items():
            if int(i) not in full and not mat_is_zero(m):
                raise ValueError(f"nonzero differential out of degree {i} into a zero module")
        self.diffs = full
        for i in self.degrees():
            if i not in self.labels:
                self.labels[i] = [f"{i}:{b}" for b in range(self.rank(i))]

    # shape ---------------------------------------------------------------
    def degrees(self) -> list[int]:
        return sorted(self.ranks)

    @property
    def lo(self) -> int:
        return min(self.ranks) if self.ranks else 0

    @property
    def hi(self) -> int:
        return max(self.ranks) if self.ranks else -1

    def rank(self, i: int) -> int:
        return self.ranks.get(i, 0)

    def d(self, i: int) -> list:
        if i in self.diffs:
            return self.diffs[i]
        return zero_matrix(self.ring, self.rank(i + 1), self.rank(i))

    def total_rank(self) -> int:
        return sum(self.ranks.values())

    def is_zero(self) -> bool:
        return not self.ranks

    def apply_d(self, i: int, vec: Sequence) -> list:
        """d(sum_c v_c e_c) for a coefficient vector (coefficients on the left)."""
        m = self.d(i)
        z = ring_zero(self.ring)
        out = [z] * self.rank(i + 1)
        for r in range(self.rank(i + 1)):
            for c in range(self.rank(i)):
                if not _is_zero(m[r][c]) and not _is_zero(vec[c]):
                    out[r] = out[r] + vec[c] * m[r][c]
        return out

    # validation ----------------------------------------------------------
    def check(self) -> list[int]:
        """Degrees i where d^{i+1} d^i != 0 (empty list means valid)."""
        bad = []
        for i in self.degrees():
            if self.rank(i + 1) and self.rank(i + 2):
                if not mat_is_zero(compose(self.ring, self.d(i + 1), self.d(i))):
                    bad.append(i)
        return bad

    def validate(self) -> "FreeComplex":
        bad = self.check()
        if bad:
            raise ValueError(f"d^2 != 0 in degrees {bad}")
        return self

    def __eq__(self, other) -> bool:
        if not isinstance(other, FreeComplex):
            return NotImplemented
        return (
            self.ring == other.ring
            and self.ranks == other.ranks
            and all(self.d(i) == other.d(i) for i in self.degrees())
        )

    def map_entries(self, fn: Callable, ring=None) -> "FreeComplex":
        return FreeComplex(
            ring if ring is not None else self.ring,
            dict(self.ranks),
            {i: mat_map(m, fn) for i, m in self.diffs.items()},
            {i: list(l) for i, l in self.labels.items()},
        )

    def evaluate(self, point) -> "FreeComplex":
        return self.map_entries(lambda x: evaluate_entry(x, point), QQ)

    # serialization -------------------------------------------------------
    def to_json(self) -> dict:
        fmt = _formatter(self.ring)
        return {
            "ring": _ring_descriptor(self.ring),
            "degrees": {str(i): r for i, r in sorted(self.ranks.items())},
            "differentials": {
                str(i): [[fmt(x) for x in row] for row in m] for i, m in sorted(self.diffs.items())
            },
            "labels": {str(i): l for i, l in sorted(self.labels.items())},
        }


def _ring_descriptor(ring):
    if isinstance(ring, RationalField):
        return "Q"
    if isinstance(ring, FilteredPBWAlgebra):
        return {"over": "L", **ring.descriptor()}
    if isinstance(ring, PolyRing):
        return {"over": "A", "vars": list(ring.names)}
    return repr(ring)


def _formatter(ring):
    if isinstance(ring, FilteredPBWAlgebra):
        return lambda x: x.to_json()
    if isinstance(ring, PolyRing):
        return ring.format
    return lambda x: str(Fraction(x))


def ring_from_descriptor(desc, algebra: FilteredPBWAlgebra | None = None):
    """``"Q"``, or an algebra descriptor with ``over`` = ``"A"`` (default) or ``"L"``."""
    if desc in ("Q", "QQ", None):
        return QQ
    if isinstance(desc, Mapping):
        if "mode" in desc:
            alg = FilteredPBWAlgebra.from_descriptor(desc)
            return alg if desc.get("over", "A") == "L" else alg.ring
        if "vars" in desc:
            return PolyRing(desc["vars"])
    if desc == "A" and algebra is not None:
        return algebra.ring
    if desc == "L" and algebra is not None:
        return algebra
    raise ValueError(f"unrecognized ring descriptor {desc!r}")


def complex_from_json(data: Mapping, algebra: FilteredPBWAlgebra | None = None) -> FreeComplex:
    if "degrees" not in data:
        raise ValueError("complex descriptor needs a 'degrees' field")
    ring = ring_from_descriptor(data.get("ring", "Q"), algebra)
    ranks = {int(i): int(r) for i, r in data["degrees"].items()}
    parse = _parser(ring)
    diffs = {}
    for i, m in data.get("differentials", {}).items():
        try:
            diffs[int(i)] = [[parse(x) for x in row] for row in m]
        except ValueError as exc:
            raise ValueError(f"differential {i}: {exc}") from exc
    labels = {int(i): list(l) for i, l in data.get("labels", {}).items()}
    return FreeComplex(ring, ranks, diffs, labels).validate()


def _parser(ring):
    if isinstance(ring, FilteredPBWAlgebra):
        def parse_l(x):
            if isinstance(x, list):
                return ring.element_from_json(x)
            return ring.scalar(ring.ring.parse(str(x)))
        return parse_l
    if isinstance(ring, PolyRing):
        return lambda x: ring.parse(str(x))
    return lambda x: QQ.parse(str(x))


@dataclass
class ChainMap:
    source: FreeComplex
    target: FreeComplex
    maps: dict  # degree -> matrix rank_target(i) x rank_source(i)
    degree: int = 0

    def __post_init__(self):
        full = {}
        for i in self.source.degrees():
            tr = self.target.rank(i + self.degree)
            if not tr:
                continue
            m = self.maps.get(i)
            if m is None:
                m = zero_matrix(self.source.ring, tr, self.source.rank(i))
            if len(m) != tr or any(len(r) != self.source.rank(i) for r in m):
                raise ValueError(f"map in degree {i} has wrong shape")
            full[i] = [list(r) for r in m]
        self.maps = full

    def at(self, i: int) -> list:
        if i in self.maps:
            return self.maps[i]
        return zero_matrix(self.source.ring, self.target.rank(i + self.degree), self.source.rank(i))

    def defect(self) -> list[int]:
        """Degrees where d f - (-1)^deg f d != 0."""
        bad = []
        ring = self.source.ring
        sign = -1 if self.degree % 2 else 1
        for i in sorted(set(self.source.degrees()) | {j - 1 for j in self.source.degrees()}):
            rows = self.target.rank(i + 1 + self.degree)
            cols = self.source.rank(i)
            if not rows or not cols:
                continue
            lhs = compose(ring, self.target.d(i + self.degree), self.at(i))
            rhs = compose(ring, self.at(i + 1), self.source.d(i))
            if not mat_is_zero(mat_add(lhs, mat_scale(rhs, -sign))):
                bad.append(i)
        return bad

    def validate(self) -> "ChainMap":
        bad = self.defect()
        if bad:
            raise ValueError(f"map does not commute with differentials in degrees {bad}")
        return self

    def then(self, later: "ChainMap") -> "ChainMap":
        ring = self.source.ring
        maps = {}
        for i in self.source.degrees():
            if self.target.rank(i + self.degree):
                maps[i] = compose(ring, later.at(i + self.degree), self.at(i))
        return ChainMap(self.source, later.target, maps, self.degree + later.degree)


def identity_map(c: FreeComplex) -> ChainMap:
    return ChainMap(c, c, {i: identity_matrix(c.ring, c.rank(i)) for i in c.degrees()})


def zero_map(source: FreeComplex, target: FreeComplex, degree: int = 0) -> ChainMap:
    return ChainMap(source, target, {}, degree)


@dataclass
class Homotopy:
    """Degree -1 map on a complex (per-degree matrices rank(i-1) x rank(i))."""

    complex: FreeComplex
    maps: dict

    def at(self, i: int) -> list:
        if i in self.maps:
            return self.maps[i]
        return zero_matrix(self.complex.ring, self.complex.rank(i - 1), self.complex.rank(i))

    def as_map(self) -> ChainMap:
        return ChainMap(self.complex, self.complex, dict(self.maps), -1)

    def boundary(self) -> dict:
        """d(K) = d K + K d per degree."""
        c = self.complex
        out = {}
        for i in c.degrees():
            a = compose(c.ring, c.d(i - 1), self.at(i)) if c.rank(i - 1) else zero_matrix(c.ring, c.rank(i), c.rank(i))
            b = compose(c.ring, self.at(i + 1), c.d(i)) if c.rank(i + 1) else zero_matrix(c.ring, c.rank(i), c.rank(i))
            out[i] = mat_add(a, b)
        return out


# ---------------------------------------------------------------------------
# constructions


def shift(c: FreeComplex, n: int) -> FreeComplex:
    sign = -1 if n % 2 else 1
    ranks = {i - n: r for i, r in c.ranks.items()}
    diffs = {i - n: mat_scale(m, sign) if sign < 0 else [list(r) for r in m] for i, m in c.diffs.items()}
    labels = {i - n: list(l) for i, l in c.labels.items()}
    return FreeComplex(c.ring, ranks, diffs, labels).validate()


def cone(f: ChainMap) -> FreeComplex:
    """Cone^i = F^i (+) E^{i+1} with d = [[d_F, f], [0, -d_E]]."""
    if f.degree != 0:
        raise ValueError("cone needs a degree-0 map")
    e, t = f.source, f.target
    ring = e.ring
    degs = sorted(set(t.degrees()) | {i - 1 for i in e.degrees()})
    ranks = {i: t.rank(i) + e.rank(i + 1) for i in degs}
    diffs = {}
    labels = {}
    for i in degs:
        labels[i] = [f"F{l}" for l in t.labels.get(i, [])] + [f"E{l}" for l in e.labels.get(i + 1, [])]
        rows, cols = ranks.get(i + 1, 0), ranks[i]
        if not rows or not cols:
            continue
        m = zero_matrix(ring, rows, cols)
        tf, te = t.rank(i), e.rank(i + 1)
        tf1 = t.rank(i + 1)
        df = t.d(i)
        for r in range(tf1):
            for c in range(tf):
                m[r][c] = df[r][c]
        fm = f.at(i + 1)
        for r in range(tf1):
            for c in range(te):
                m[r][tf + c] = fm[r][c]
        de = e.d(i + 1)
        for r in range(e.rank(i + 2)):
            for c in range(te):
                m[tf1 + r][tf + c] = -de[r][c]
        diffs[i] = m
    return FreeComplex(ring, ranks, diffs, labels).validate()


def _commutative(ring) -> None:
    if isinstance(ring, FilteredPBWAlgebra):
        raise ValueError("construction needs a commutative base ring")


def hom_complex(e: FreeComplex, f: FreeComplex) -> FreeComplex:
    """Hom(E, F) with basis E^j_c -> F^{j+i}_r, ordered by (j, r, c)."""
    _commutative(e.ring)
    if e.ring != f.ring:
        raise ValueError("ring mismatch")
    ring = e.ring
    degs = sorted({j2 - j1 for j1 in e.degrees() for j2 in f.degrees()})
    bases = {i: [(j, r, c) for j in e.degrees() for r in range(f.rank(j + i)) for c in range(e.rank(j))] for i in degs}
    bases = {i: b for i, b in bases.items() if b}
    ranks = {i: len(b) for i, b in bases.items()}
    diffs = {}
    for i, basis in bases.items():
        target = bases.get(i + 1)
        if not target:
            continue
        index = {key: n for n, key in enumerate(target)}
        m = zero_matrix(ring, len(target), len(basis))
        sign = -1 if i % 2 else 1
        for col, (j, r, c) in enumerate(basis):
            # d_F o phi : E^j_c -> F^{j+i+1}
            df = f.d(j + i)
            for r2 in range(f.rank(j + i + 1)):
                if not _is_zero(df[r2][r]):
                    row = index[(j, r2, c)]
                    m[row][col] = m[row][col] + df[r2][r]
            # -(-1)^i phi o d_E : E^{j-1} -> F^{j+i}
            de = e.d(j - 1)
            for c2 in range(e.rank(j - 1)):
                if not _is_zero(de[c][c2]):
                    row = index[(j - 1, r, c2)]
                    m[row][col] = m[row][col] - sign * de[c][c2]
        diffs[i] = m
    labels = {i: [f"{j}:{c}->{j + i}:{r}" for (j, r, c) in b] for i, b in bases.items()}
    return FreeComplex(ring, ranks, diffs, labels).validate()


def tensor(e: FreeComplex, f: FreeComplex) -> FreeComplex:
    """E (x) F with basis (j, c, r) = e^j_c (x) f^{i-j}_r and Koszul signs."""
    _commutative(e.ring)
    if e.ring != f.ring:
        raise ValueError("ring mismatch")
    ring = e.ring
    degs = sorted({a + b for a in e.degrees() for b in f.degrees()})
    bases = {i: [(j, c, r) for j in e.degrees() for c in range(e.rank(j)) for r in range(f.rank(i - j))] for i in degs}
    bases = {i: b for i, b in bases.items() if b}
    diffs = {}
    for i, basis in bases.items():
        target = bases.get(i + 1)
        if not target:
            continue
        index = {k: n for n, k in enumerate(target)}
        m = zero_matrix(ring, len(target), len(basis))
        for col, (j, c, r) in enumerate(basis):
            de = e.d(j)
            for c2 in range(e.rank(j + 1)):
                if not _is_zero(de[c2][c]):
                    row = index[(j + 1, c2, r)]
                    m[row][col] = m[row][col] + de[c2][c]
            df = f.d(i - j)
            sign = -1 if j % 2 else 1
            for r2 in range(f.rank(i - j + 1)):
                if not _is_zero(df[r2][r]):
                    row = index[(j, c, r2)]
                    m[row][col] = m[row][col] + sign * df[r2][r]
        diffs[i] = m
    labels = {i: [f"{e.labels[j][c]}*{f.labels[i - j][r]}" for (j, c, r) in b] for i, b in bases.items()}
    return FreeComplex(ring, {i: len(b) for i, b in bases.items()}, diffs, labels).validate()


def direct_sum(a: FreeComplex, b: FreeComplex) -> FreeComplex:
    ring = a.ring
    degs = sorted(set(a.degrees()) | set(b.degrees()))
    ranks = {i: a.rank(i) + b.rank(i) for i in degs}
    diffs = {}
    for i in degs:
        rows, cols = ranks.get(i + 1, 0), ranks[i]
        if not rows:
            continue
        m = zero_matrix(ring, rows, cols)
        da, db = a.d(i), b.d(i)
        for r in range(a.rank(i + 1)):
            for c in range(a.rank(i)):
                m[r][c] = da[r][c]
        for r in range(b.rank(i + 1)):
            for c in range(b.rank(i)):
                m[a.rank(i + 1) + r][a.rank(i) + c] = db[r][c]
        diffs[i] = m
    return FreeComplex(ring, ranks, diffs).validate()


# ---------------------------------------------------------------------------
# homology


@dataclass
class HomologyReport:
    ranks: dict  # degree -> rank (minimum over trials)
    per_point: list = field(default_factory=list)
    points: list = field(default_factory=list)
    disagreements: dict = field(default_factory=dict)  # degree -> list of ranks

    def is_acyclic(self) -> bool:
        return all(r == 0 for r in self.ranks.values())

    def unanimous_zero(self) -> bool:
        return all(all(p.get(i, 0) == 0 for p in self.per_point) for i in self.ranks) and self.is_acyclic()

    def to_json(self) -> dict:
        return {
            "ranks": {str(i): r for i, r in sorted(self.ranks.items())},
            "points": [[str(x) for x in p] for p in self.points],
            "per_point": [{str(i): r for i, r in sorted(p.items())} for p in self.per_point],
            "disagreements": {str(i): v for i, v in sorted(self.disagreements.items())},
        }


def _q_matrix(m: Sequence[Sequence]) -> linalg.SparseMatrix:
    out = linalg.SparseMatrix(len(m), len(m[0]) if m else 0)
    for i, row in enumerate(m):
        for j, v in enumerate(row):
            if v:
                out.entries[(i, j)] = Fraction(v)
    return out


def homology_from_matrices(dims: Mapping[int, int], mats: Mapping[int, linalg.SparseMatrix], window=None) -> dict:
    """rank H^i = dim C^i - rank d^i - rank d^{i-1}, exact over Q.

    Modular ranks are tried first; they are lower bounds, so when they already
    force H^i = 0 the answer is certified without rational elimination.
    """
    degs = sorted(dims) if window is None else [i for i in range(window[0], window[1] + 1)]
    lower: dict = {}
    exact: dict = {}

    def low(i):
        if i not in lower:
            m = mats.get(i)
            lower[i] = 0 if m is None or not m.entries else linalg.rank_mod_p_sparse(m)
        return lower[i]

    def ex(i):
        if i not in exact:
            m = mats.get(i)
            exact[i] = 0 if m is None or not m.entries else linalg.rank(m)
        return exact[i]

    out = {}
    for i in degs:
        n = dims.get(i, 0)
        if not n:
            out[i] = 0
            continue
        if n - low(i) - low(i - 1) == 0:
            out[i] = 0
        else:
            out[i] = n - ex(i) - ex(i - 1)
    return out


def homology_ranks(c: FreeComplex, window: tuple | None = None) -> dict:
    """Exact homology ranks of a complex over Q."""
    if not isinstance(c.ring, RationalField):
        raise ValueError("homology_ranks needs rational entries; use homology_ranks_at_points")
    mats = {i: _q_matrix(m) for i, m in c.diffs.items()}
    if window is None:
        window = (c.lo, c.hi) if c.ranks else (0, -1)
    return homology_from_matrices(c.ranks, mats, window)


def random_points(nvars: int, trials: int, seed: int, size: int = 97) -> list[tuple]:
    rng = random.Random(seed)
    return [tuple(Fraction(rng.randint(-size, size), rng.randint(1, 7)) for _ in range(nvars)) for _ in range(trials)]


def sparse_entries(m: Sequence[Sequence]) -> dict:
    """Nonzero entries of a dense matrix as {(row, col): value}."""
    return {(i, j): v for i, row in enumerate(m) for j, v in enumerate(row) if v}


def homology_ranks_at_points(
    c: FreeComplex, trials: int = 3, seed: int = 20240601, window: tuple | None = None, points=None
) -> HomologyReport:
    """Homology after evaluating the base variables at random rational points.

    The reported rank per degree is the minimum over trials (the generic
    value); degrees where trials disagree are listed.
    """
    ring = c.ring
    if isinstance(ring, RationalField):
        r = homology_ranks(c, window)
        return HomologyReport(r, [r], [()], {})
    if window is None:
        window = (c.lo, c.hi) if c.ranks else (0, -1)
    mats = {i: linalg.SparseMatrix(c.rank(i + 1), c.rank(i), sparse_entries(m)) for i, m in c.diffs.items()}
    return sparse_homology_at_points(ring, c.ranks, mats, trials, seed, window, points)


def sparse_homology_at_points(ring, ranks: Mapping, mats: Mapping, trials: int = 3, seed: int = 20240601, window=(0, -1), points=None) -> HomologyReport:
    """As homology_ranks_at_points, for differentials given as sparse matrices of polynomials."""
    if isinstance(ring, RationalField):
        r = homology_from_matrices(ranks, mats, window)
        return HomologyReport(r, [r], [()], {})
    if not isinstance(ring, PolyRing):
        raise ValueError("evaluation needs a commutative polynomial base ring")
    if points is None:
        points = random_points(ring.nvars, trials, seed)
    per_point = []
    for p in points:
        ev = {}
        for i, m in mats.items():
            e = {}
            for k, x in m.entries.items():
                v = x.evaluate(p)
                if v:
                    e[k] = v
            ev[i] = linalg.SparseMatrix(m.nrows, m.ncols, e)
        per_point.append(homology_from_matrices(ranks, ev, window))
    out = {}
    disagreements = {}
    for i in range(window[0], window[1] + 1):
        vals = [h.get(i, 0) for h in per_point]
        out[i] = min(vals) if vals else 0
        if len(set(vals)) > 1:
            disagreements[i] = vals
    return HomologyReport(out, per_point, list(points), disagreements)


def is_quasi_isomorphism(f: ChainMap, **kw) -> bool:
    rep = homology_ranks_at_points(cone(f), **kw)
    return rep.unanimous_zero()


# ---------------------------------------------------------------------------
# strict L-module structures and the de Rham-Koszul resolution


@dataclass
class StrictLComplex:
    """A bounded free A-complex with a strict action of L.

    ``gamma[j][i]`` is the matrix of d_i on the basis of E^j:
    d_i . e_b = sum_c gamma[j][i][c][b] e_c, extended by the Leibniz rule
    d_i (f e) = D_i(f) e + f d_i e.
    """

    algebra: FilteredPBWAlgebra
    complex: FreeComplex
    gamma: dict

    def __post_init__(self):
        if self.complex.ring != self.algebra.ring:
            raise ValueError("complex must live over the base ring of the algebra")
        ring = self.algebra.ring
        full = {}
        for j in self.complex.degrees():
            mats = self.gamma.get(j)
            n = self.complex.rank(j)
            if mats is None:
                mats = [zero_matrix(ring, n, n) for _ in range(self.algebra.m)]
            if len(mats) != self.algebra.m:
                raise ValueError(f"need {self.algebra.m} action matrices in degree {j}")
            full[j] = [[[ring.coerce(x) for x in row] for row in g] for g in mats]
        self.gamma = full

    def generator_act(self, i: int, j: int, vec: Sequence) -> list:
        """d_i . (sum_b v_b e_b) in E^j."""
        alg = self.algebra
        g = self.gamma[j][i]
        out = []
        n = self.complex.rank(j)
        for c in range(n):
            s = alg.deriv(i, vec[c])
            for b in range(n):
                if g[c][b] and vec[b]:
                    s = s + vec[b] * g[c][b]
            out.append(s)
        return out

    def act(self, u: AlgebraElement, j: int, vec: Sequence) -> list:
        """u . v for v in E^j (u in left normal form, so act d^alpha first)."""
        n = self.complex.rank(j)
        out = [self.algebra.ring.zero()] * n
        for alpha, a in u.terms.items():
            w = list(vec)
            for i, k in enumerate(alpha):
                for _ in range(k):
                    w = self.generator_act(i, j, w)
            out = [o + a * x for o, x in zip(out, w)]
        return out

    def violations(self) -> list[str]:
        """Flatness and compatibility with d_E, checked on basis vectors."""
        alg = self.algebra
        ring = alg.ring
        bad = []
        c = self.complex
        for j in c.degrees():
            n = c.rank(j)
            for b in range(n):
                e = [ring.zero()] * n
                e[b] = ring.one()
                for i1 in range(alg.m):
                    for i2 in range(i1 + 1, alg.m):
                        u = self.generator_act(i1, j, self.generator_act(i2, j, e))
                        v = self.generator_act(i2, j, self.generator_act(i1, j, e))
                        if any(x != y for x, y in zip(u, v)):
                            bad.append(f"curvature [d{i1 + 1},d{i2 + 1}] on {j}:{b}")
                if c.rank(j + 1):
                    for i in range(alg.m):
                        lhs = c.apply_d(j, self.generator_act(i, j, e))
                        rhs = self.generator_act(i, j + 1, c.apply_d(j, e))
                        if any(x != y for x, y in zip(lhs, rhs)):
                            bad.append(f"d{i + 1} does not commute with the differential on {j}:{b}")
        return bad

    def validate(self) -> "StrictLComplex":
        bad = self.violations()
        if bad:
            raise ValueError("action not compatible: " + "; ".join(bad))
        return self


def koszul_resolution(alg: FilteredPBWAlgebra) -> FreeComplex:
    """L (x) wedge^r Theta in degree -r, d(e_I) = sum_s (-1)^s d_{i_s} e_{I - i_s}."""
    m = alg.m
    bases = {-r: list(itertools.combinations(range(m), r)) for r in range(m + 1)}
    diffs = {}
    for r in range(1, m + 1):
        src, tgt = bases[-r], bases[-r + 1]
        index = {I: n for n, I in enumerate(tgt)}
        mat = zero_matrix(alg, len(tgt), len(src))
        for col, I in enumerate(src):
            for s, i in enumerate(I):
                rest = I[:s] + I[s + 1:]
                sign = -1 if s % 2 else 1
                mat[index[rest]][col] = mat[index[rest]][col] + alg.generator(i) * sign
        diffs[-r] = mat
    labels = {d: ["^".join(f"t{i + 1}" for i in I) or "1" for I in b] for d, b in bases.items()}
    return FreeComplex(alg, {d: len(b) for d, b in bases.items()}, diffs, labels).validate()


def koszul_augmentation(alg: FilteredPBWAlgebra, u: AlgebraElement):
    """L -> A, u |-> u . 1 (all d_i act by zero on the unit)."""
    return alg.act_standard(u, alg.ring.one())


def koszul_graded_piece(alg: FilteredPBWAlgebra, p: int) -> FreeComplex:
    """Internal-degree-p piece of the Koszul resolution (basis d^alpha e_I, |alpha|+|I| = p).

    Right multiplication by d_i never moves coefficients, so the piece has
    constant entries and is a complex over Q.
    """
    m = alg.m
    bases = {}
    for r in range(min(m, p) + 1):
        bases[-r] = [(a, I) for I in itertools.combinations(range(m), r) for a in compositions(m, p - r)]
    bases = {d: b for d, b in bases.items() if b}
    diffs = {}
    for d, src in bases.items():
        tgt = bases.get(d + 1)
        if not tgt:
            continue
        index = {k: n for n, k in enumerate(tgt)}
        mat = [[Fraction(0)] * len(src) for _ in tgt]
        for col, (a, I) in enumerate(src):
            for s, i in enumerate(I):
                a2 = list(a)
                a2[i] += 1
                key = (tuple(a2), I[:s] + I[s + 1:])
                mat[index[key]][col] += -1 if s % 2 else 1
        diffs[d] = mat
    return FreeComplex(QQ, {d: len(b) for d, b in bases.items()}, diffs).validate()


@dataclass
class KoszulTensor:
    """K (x)^Delta E as a free L-complex with basis theta_I e_b (degree j - |I|)."""

    strict: StrictLComplex
    complex: FreeComplex
    basis: dict  # degree -> list of (I, j, b)

    def weight_piece(self, p: int, graded: bool = True) -> FreeComplex:
        """A-complex spanned by a d^alpha theta_I e_b with |alpha| + |I| = p (or <= p).

        With ``graded`` the differential is projected to weight exactly p,
        otherwise the filtration step F_p (a subcomplex) is returned.
        """
        alg = self.strict.algebra
        ring = alg.ring
        keys = {}
        for deg, basis in self.basis.items():
            ks = []
            for n, (I, j, b) in enumerate(basis):
                lo = p - len(I) if graded else 0
                for t in range(lo, p - len(I) + 1):
                    for a in compositions(alg.m, t):
                        ks.append((a, n))
            if ks:
                keys[deg] = ks
        diffs = {}
        for deg, src in keys.items():
            tgt = keys.get(deg + 1)
            if not tgt:
                continue
            index = {k: n for n, k in enumerate(tgt)}
            mat = zero_matrix(ring, len(tgt), len(src))
            dm = self.complex.d(deg)
            for col, (a, n) in enumerate(src):
                left = alg.monomial(a)
                for r in range(self.complex.rank(deg + 1)):
                    entry = dm[r][n]
                    if not entry:
                        continue
                    prod = alg.multiply(left, entry)
                    for beta, coeff in prod.terms.items():
                        key = (beta, r)
                        if key in index:
                            mat[index[key]][col] = mat[index[key]][col] + coeff
            diffs[deg] = mat
        return FreeComplex(ring, {d: len(k) for d, k in keys.items()}, diffs).validate()

    def acyclicity_certificate(self, max_weight: int, trials: int = 3, seed: int = 7) -> dict:
        """Homology of weight pieces 1..max_weight (all zero means the augmentation is a quasi-isomorphism)."""
        if max_weight < 1:
            raise ValueError("truncation too small: need at least weight 1")
        out = {}
        for p in range(1, max_weight + 1):
            out[p] = homology_ranks_at_points(self.weight_piece(p), trials=trials, seed=seed)
        return out


def tensor_with_koszul(e: StrictLComplex) -> KoszulTensor:
    alg = e.algebra
    c = e.complex
    m = alg.m
    basis: dict = {}
    for r in range(m + 1):
        for I in itertools.combinations(range(m), r):
            for j in c.degrees():
                for b in range(c.rank(j)):
                    basis.setdefault(j - r, []).append((I, j, b))
    diffs = {}
    for deg, src in basis.items():
        tgt = basis.get(deg + 1)
        if not tgt:
            continue
        index = {k: n for n, k in enumerate(tgt)}
        mat = zero_matrix(alg, len(tgt), len(src))
        for col, (I, j, b) in enumerate(src):
            r = len(I)
            for s, i in enumerate(I):
                rest = I[:s] + I[s + 1:]
                sign = -1 if s % 2 else 1
                row = index[(rest, j, b)]
                mat[row][col] = mat[row][col] + alg.generator(i) * sign
                g = e.gamma[j][i]
                for cc in range(c.rank(j)):
                    if g[cc][b]:
                        row = index[(rest, j, cc)]
                        mat[row][col] = mat[row][col] - alg.scalar(g[cc][b]) * sign
            dm = c.d(j)
            sign = -1 if r % 2 else 1
            for cc in range(c.rank(j + 1)):
                if dm[cc][b]:
                    row = index[(I, j + 1, cc)]
                    mat[row][col] = mat[row][col] + alg.scalar(dm[cc][b]) * sign
        diffs[deg] = mat
    labels = {
        d: [("^".join(f"t{i + 1}" for i in I) or "1") + f"@{j}:{b}" for (I, j, b) in bs] for d, bs in basis.items()
    }
    cx = FreeComplex(alg, {d: len(b) for d, b in basis.items()}, diffs, labels).validate()
    return KoszulTensor(e, cx, basis)


def interchange_matrix(e: StrictLComplex, j: int, max_order: int) -> dict:
    """Explicit isomorphism L (x)_{>A<} E^j -> L (x)^Delta E^j up to order ``max_order``.

    Both sides have A-basis d^alpha (x) e_b.  The map sends d^alpha (x) e_b to
    d^alpha . (1 (x) e_b) under the diagonal action, computed by iterating the
    generators.  Returns {"matrix": {(alpha, b): {(beta, c): coeff}},
    "closed_form_agrees": bool, "unitriangular": bool, "intertwines": bool}.
    """
    alg = e.algebra
    ring = alg.ring
    n = e.complex.rank(j)

    def diag_generator(i, elem):
        # elem {(alpha, b): a} stands for d^alpha (x) a e_b (tensor over the left A-structures);
        # d_i . (d^alpha (x) y) = d^(alpha + e_i) (x) y + d^alpha (x) d_i y
        out: dict = {}

        def add(key, coeff):
            if coeff:
                out[key] = out[key] + coeff if key in out else coeff

        for (alpha, b), a in elem.items():
            up = list(alpha)
            up[i] += 1
            add((tuple(up), b), a)
            vec = [ring.zero()] * n
            vec[b] = a
            img = e.generator_act(i, j, vec)
            for cc in range(n):
                add((alpha, cc), img[cc])
        return {k: v for k, v in out.items() if v}

    def diag_power(alpha, b):
        elem = {(alg.zero_alpha, b): ring.one()}
        for i, k in enumerate(alpha):
            for _ in range(k):
                elem = diag_generator(i, elem)
        return elem

    def closed_form(alpha, b):
        # Delta(d^alpha) = sum C(alpha, beta) d^beta (x) d^gamma applied to 1 (x) e_b
        out: dict = {}
        for (beta, gamma), coeff in alg.delta_coproduct(alg.monomial(alpha)).items():
            vec = [ring.zero()] * n
            vec[b] = ring.one()
            img = e.act(alg.monomial(gamma), j, vec)
            for cc in range(n):
                if img[cc]:
                    key = (beta, cc)
                    val = coeff * img[cc]
                    out[key] = out[key] + val if key in out else val
        return {k: v for k, v in out.items() if v}

    alphas = [a for t in range(max_order + 1) for a in compositions(alg.m, t)]
    matrix = {}
    agrees = True
    tri = True
    for alpha in alphas:
        for b in range(n):
            img = diag_power(alpha, b)
            matrix[(alpha, b)] = img
            if img != closed_form(alpha, b):
                agrees = False
            lead = img.get((alpha, b))
            if lead != ring.one():
                tri = False
            for (beta, cc) in img:
                if sum(beta) > sum(alpha) or (sum(beta) == sum(alpha) and (beta, cc) != (alpha, b)):
                    tri = False
    # intertwining: Phi(d_i . w) = d_i . Phi(w) on the left-multiplication side
    intertwines = True
    for alpha in alphas:
        if sum(alpha) >= max_order:
            continue
        for b in range(n):
            for i in range(alg.m):
                a2 = list(alpha)
                a2[i] += 1
                lhs = matrix[(tuple(a2), b)]
                rhs = diag_generator(i, matrix[(alpha, b)])
                if lhs != rhs:
                    intertwines = False
            for v in range(alg.d):
                # d^alpha (x) x e = (d^alpha x) (x) e: Phi of the normal-ordered
                # right side must equal d^alpha acting diagonally on x (x) e
                xv = alg.ring.var(v)
                lhs: dict = {}
                for beta, cf in alg.multiply(alg.monomial(alpha), alg.scalar(xv)).terms.items():
                    for key, val in matrix[(beta, b)].items():
                        lhs[key] = lhs[key] + cf * val if key in lhs else cf * val
                lhs = {k: c for k, c in lhs.items() if c}
                elem = {(alg.zero_alpha, b): xv}
                for i, k in enumerate(alpha):
                    for _ in range(k):
                        elem = diag_generator(i, elem)
                if lhs != elem:
                    intertwines = False
    return {"matrix": matrix, "closed_form_agrees": agrees, "unitriangular": tri, "intertwines": intertwines}
