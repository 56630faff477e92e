"""Globalization over a finite covering nerve, and the pole-bounded line model.

A covering is a finite set of opens with a strict inclusion order.  Chains
are strictly increasing tuples (U_0 c U_1 c ... c U_k) of open indices, the
smallest open first.  A degree-i cochain g assigns to each chain a section
g(U_0..U_k) of degree i-k over U_0.

Sign table (checked by d^2 = 0, Leibniz and associativity in the tests):

    (Dg)(s)     = d g(s) - (-1)^i sum_j (-1)^j g(d_j s)|U_0
    mu(f,g)(s)  = sum_j (-1)^(j |g|) f(U_0..U_j) . g(U_j..U_k)|U_0

Twisted objects use transitions tau(U_0 U_1) = 1 - eta(U_0 U_1) and
tau(s) = -eta(s) for longer chains; a morphism component a(s) goes from
E(U_k)|U_0 to F(U_0).
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from . import hochschild as hs
from . import linalg
from .algebra import FilteredPBWAlgebra, Poly
from .complexes import QQ, ChainMap, FreeComplex, cone, homology_ranks
from .mcgeom import FiniteFilteredDGA, FilteredDGAMap, _acc, basis_vector, vadd

# ---------------------------------------------------------------------------
# rational functions on the line with poles at marked points


class SectionRing:
    """Q(lam)[x, 1/(x - c_i)]: rational functions with poles only at the marked points.

    Numerators are ``Poly`` in x (and lam when ``rees``); denominators are
    exponent tuples over the marked points.  Implements the coefficient-ring
    protocol used by ``FilteredPBWAlgebra``.
    """

    def __init__(self, points: Sequence, rees: bool = False):
        self.points = tuple(Fraction(p) for p in points)
        if len(set(self.points)) != len(self.points):
            raise ValueError("marked points must be distinct")
        self.names = ("x", "lam") if rees else ("x",)
        self.nvars = len(self.names)
        self.lam_index = 1 if rees else None
        self._x = Poly.var(self.nvars, 0)

    def __eq__(self, other) -> bool:
        return isinstance(other, SectionRing) and (self.points, self.names) == (other.points, other.names)

    def __hash__(self) -> int:
        return hash(("sections", self.points, self.names))

    def __repr__(self) -> str:
        return f"SectionRing(points={[str(p) for p in self.points]}, vars={self.names})"

    def make(self, num: Poly, den: Sequence[int] | None = None) -> "Section":
        return Section(self, num, tuple(den) if den is not None else (0,) * len(self.points))

    def zero(self) -> "Section":
        return self.make(Poly.zero(self.nvars))

    def one(self) -> "Section":
        return self.make(Poly.const(self.nvars, 1))

    def const(self, c) -> "Section":
        return self.make(Poly.const(self.nvars, c))

    def var(self, name_or_index) -> "Section":
        i = name_or_index if isinstance(name_or_index, int) else self.names.index(name_or_index)
        return self.make(Poly.var(self.nvars, i))

    def lam(self) -> "Section":
        if self.lam_index is None:
            raise ValueError("ring has no Rees parameter")
        return self.var(self.lam_index)

    def coerce(self, value) -> "Section":
        if isinstance(value, Section):
            return value
        if isinstance(value, Poly):
            return self.make(value)
        return self.const(value)

    def linear(self, i: int) -> Poly:
        """x - c_i."""
        return self._x - self.points[i]

    def diff(self, f: "Section", i: int) -> "Section":
        if i != 0:
            raise ValueError("sections are differentiated in x only")
        return f.diff()

    def format(self, f: "Section") -> str:
        return f.format()

    def parse(self, text: str) -> "Section":
        raise ValueError("sections are not parsed from text")


def _divide_linear(p: Poly, c: Fraction) -> Poly | None:
    """p / (x - c) when exact, else None."""
    if not p:
        return p
    n = p.nvars
    by_deg: dict = {}
    for e, v in p.terms.items():
        by_deg.setdefault(e[0], {})[e[1:]] = v
    top = max(by_deg)
    q: dict = {}
    carry: dict = {}
    for a in range(top, 0, -1):
        cur = dict(by_deg.get(a, {}))
        for k, v in carry.items():
            cur[k] = cur.get(k, 0) + c * v
        cur = {k: v for k, v in cur.items() if v}
        q[a - 1] = cur
        carry = cur
    rem = dict(by_deg.get(0, {}))
    for k, v in carry.items():
        rem[k] = rem.get(k, 0) + c * v
    if any(rem.values()):
        return None
    terms = {}
    for a, cur in q.items():
        for k, v in cur.items():
            terms[(a,) + k] = v
    return Poly(n, terms)


class Section:
    """num / prod (x - c_i)^den_i in lowest terms; immutable."""

    __slots__ = ("ring", "num", "den", "_hash")

    def __init__(self, ring: SectionRing, num: Poly, den: tuple):
        if num.nvars != ring.nvars:
            raise ValueError("numerator from a different ring")
        den = list(den)
        if not num:
            den = [0] * len(den)
        else:
            for i, e in enumerate(den):
                while den[i] > 0:
                    q = _divide_linear(num, ring.points[i])
                    if q is None:
                        break
                    num = q
                    den[i] -= 1
        self.ring = ring
        self.num = num
        self.den = tuple(den)
        self._hash = None

    def _common(self, other: "Section"):
        den = tuple(max(a, b) for a, b in zip(self.den, other.den))
        n1, n2 = self.num, other.num
        for i, (e, a, b) in enumerate(zip(den, self.den, other.den)):
            if e > a:
                n1 = n1 * self.ring.linear(i) ** (e - a)
            if e > b:
                n2 = n2 * self.ring.linear(i) ** (e - b)
        return n1, n2, den

    def _coerce(self, other):
        if isinstance(other, Section):
            return other
        if isinstance(other, Poly) and other.nvars == self.ring.nvars:
            return self.ring.make(other)
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.ring.const(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if not o.num:
            return self
        if not self.num:
            return o
        n1, n2, den = self._common(o)
        return Section(self.ring, n1 + n2, den)

    __radd__ = __add__

    def __neg__(self):
        return Section(self.ring, -self.num, self.den)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return Section(self.ring, self.num * other, self.den)
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Section(self.ring, self.num * o.num, tuple(a + b for a, b in zip(self.den, o.den)))

    __rmul__ = __mul__

    def __bool__(self) -> bool:
        return bool(self.num)

    def __eq__(self, other) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.num == o.num and self.den == o.den

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    def diff(self) -> "Section":
        """d/dx via (f/h)' = (f' prod(x-c_i) - f sum_i e_i prod_{j != i}(x-c_j)) / (h prod(x-c_i))."""
        active = [i for i, e in enumerate(self.den) if e]
        f = self.num
        if not active:
            return Section(self.ring, f.diff(0), self.den)
        lin = {i: self.ring.linear(i) for i in active}
        prod = Poly.const(f.nvars, 1)
        for i in active:
            prod = prod * lin[i]
        num = f.diff(0) * prod
        for i in active:
            rest = Poly.const(f.nvars, 1)
            for j in active:
                if j != i:
                    rest = rest * lin[j]
            num = num - f * rest * self.den[i]
        den = tuple(e + 1 if e else 0 for e in self.den)
        return Section(self.ring, num, den)

    def format(self) -> str:
        s = self.num.format(self.ring.names)
        parts = [f"(x - {c})**{e}" if e > 1 else f"(x - {c})" for c, e in zip(self.ring.points, self.den) if e]
        return s if not parts else f"({s})/({'*'.join(parts)})"

    def __repr__(self) -> str:
        return f"Section({self.format()})"


def section_basis(ring: SectionRing, removed: Sequence[int], m: int) -> list:
    """Basis of sections with poles of order <= m at the removed points and at infinity."""
    den = [0] * len(ring.points)
    for i in removed:
        den[i] = m
    top = m * (len(removed) + 1)
    return [ring.make(Poly.monomial((a,) + (0,) * (ring.nvars - 1)), den) for a in range(top + 1)]


def section_coordinates(s: Section, removed: Sequence[int], m: int) -> list | None:
    """Coordinates of s in ``section_basis`` (Fractions, or Poly in lam), or None if outside."""
    ring = s.ring
    top = m * (len(removed) + 1)
    if not s:
        return [Fraction(0)] * (top + 1)
    num = s.num
    for i, e in enumerate(s.den):
        if e and (i not in removed or e > m):
            return None
    for i in removed:
        if m > s.den[i]:
            num = num * ring.linear(i) ** (m - s.den[i])
    out: list = [Fraction(0)] * (top + 1)
    rees = ring.nvars == 2
    for e, v in num.terms.items():
        a = e[0]
        if a > top:
            return None
        if rees:
            term = Poly(1, {(e[1],): v})
            out[a] = out[a] + term
        else:
            out[a] = out[a] + v
    return out


# ---------------------------------------------------------------------------
# coverings


@dataclass
class Covering:
    """Finite opens with a strict inclusion order; ``order`` holds pairs (small, big)."""

    opens: list
    order: set
    removed: dict = field(default_factory=dict)  # open index -> marked point indices missing from it
    points: tuple = ()
    total: int | None = None  # index of the open equal to the whole space, if present

    def __post_init__(self):
        n = len(self.opens)
        rel = {(int(a), int(b)) for a, b in self.order}
        for a, b in rel:
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"order pair {(a, b)} refers to a missing open")
            if a == b:
                raise ValueError("order must be strict (no identity inclusions)")
        changed = True
        while changed:
            changed = False
            for (a, b), (c, d) in itertools.product(list(rel), repeat=2):
                if b == c and (a, d) not in rel:
                    rel.add((a, d))
                    changed = True
        if any((b, a) in rel for a, b in rel):
            raise ValueError("order has a cycle")
        self.order = rel
        self._chains: dict = {}
        if self.total is not None and any((i, self.total) not in rel for i in range(n) if i != self.total):
            raise ValueError("the total open must contain every other open")

    def less(self, a: int, b: int) -> bool:
        return (a, b) in self.order

    def chains(self, k: int) -> list:
        """Chains U_0 c ... c U_k (k+1 opens), lexicographically ordered."""
        if k not in self._chains:
            if k == 0:
                out = [(i,) for i in range(len(self.opens))]
            else:
                out = [c + (j,) for c in self.chains(k - 1) for j in range(len(self.opens)) if self.less(c[-1], j)]
            self._chains[k] = sorted(out)
        return self._chains[k]

    def max_length(self) -> int:
        k = 0
        while self.chains(k + 1):
            k += 1
        return k

    def below(self, w: int) -> tuple["Covering", list]:
        """Sub-covering of the opens contained in (or equal to) open w, with the index map."""
        keep = [i for i in range(len(self.opens)) if i == w or self.less(i, w)]
        pos = {i: n for n, i in enumerate(keep)}
        order = {(pos[a], pos[b]) for a, b in self.order if a in pos and b in pos}
        sub = Covering(
            [self.opens[i] for i in keep],
            order,
            {pos[i]: self.removed[i] for i in keep if i in self.removed},
            self.points,
            pos[w],
        )
        return sub, keep

    def to_json(self) -> dict:
        out = {
            "opens": [
                {"name": name, "removed": [str(self.points[p]) for p in self.removed.get(i, [])]}
                if self.points
                else name
                for i, name in enumerate(self.opens)
            ],
            "order": sorted([list(p) for p in self.order]),
            "marked_points": [str(p) for p in self.points],
        }
        if self.total is not None:
            out["total"] = self.total
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "Covering":
        try:
            opens_raw = data["opens"]
            order = [tuple(p) for p in data.get("order", [])]
        except KeyError as exc:
            raise ValueError(f"covering descriptor missing field {exc}") from exc
        points = tuple(Fraction(str(p)) for p in data.get("marked_points", []))
        names, removed = [], {}
        for i, o in enumerate(opens_raw):
            if isinstance(o, str):
                names.append(o)
            else:
                names.append(str(o["name"]))
                rem = []
                for p in o.get("removed", []):
                    p = Fraction(str(p))
                    if p not in points:
                        raise ValueError(f"open {o['name']} removes an unmarked point {p}")
                    rem.append(points.index(p))
                removed[i] = sorted(rem)
        cov = cls(names, set(order), removed, points, data.get("total"))
        if points:
            for a, b in cov.order:
                if not set(removed.get(b, [])) <= set(removed.get(a, [])):
                    raise ValueError(f"order pair {(a, b)} is not an inclusion of the opens")
        return cov


def two_open_line(points=(0, 1)) -> Covering:
    """{x != c0}, {x != c1} and their intersection on the affine line."""
    c0, c1 = points
    return Covering(["U", "V", "UV"], {(2, 0), (2, 1)}, {0: [0], 1: [1], 2: [0, 1]}, (Fraction(c0), Fraction(c1)))


def one_open(points: Sequence = ()) -> Covering:
    return Covering(["X"], set(), {0: []}, tuple(Fraction(p) for p in points), 0)


def chain_nerve(n: int) -> Covering:
    """Opens U_0 c U_1 c ... c U_{n-1}, a totally ordered covering with U_{n-1} the total space."""
    return Covering([f"U{i}" for i in range(n)], {(i, j) for i in range(n) for j in range(n) if i < j}, {}, (), n - 1)


# ---------------------------------------------------------------------------
# presheaves of complexes and their globalization


def _sparse_from_dense(m: Sequence[Sequence]) -> dict:
    out: dict = {}
    for r, row in enumerate(m):
        for c, v in enumerate(row):
            if v:
                out.setdefault(c, {})[r] = v
    return out


@dataclass
class PresheafOfComplexes:
    """Per-open complexes over Q with restriction chain maps ``res[(small, big)]``."""

    covering: Covering
    values: dict  # open -> FreeComplex
    res: dict  # (small, big) -> ChainMap big -> small

    def violations(self) -> list[str]:
        bad = []
        cov = self.covering
        for a, b in cov.order:
            f = self.res.get((a, b))
            if f is None:
                bad.append(f"missing restriction {cov.opens[b]} -> {cov.opens[a]}")
                continue
            if f.defect():
                bad.append(f"restriction {cov.opens[b]} -> {cov.opens[a]} is not a chain map")
        for a, b, c in cov.chains(2):
            if (a, b) in self.res and (b, c) in self.res and (a, c) in self.res:
                comp = self.res[(b, c)].then(self.res[(a, b)])
                direct = self.res[(a, c)]
                for i in self.values[c].degrees():
                    if comp.at(i) != direct.at(i):
                        bad.append(f"restrictions not functorial on {cov.opens[a]} c {cov.opens[b]} c {cov.opens[c]}")
                        break
        return bad

    def sparse(self):
        dims = {u: dict(c.ranks) for u, c in self.values.items()}
        d = {u: {i: _sparse_from_dense(m) for i, m in c.diffs.items()} for u, c in self.values.items()}
        res = {k: {i: _sparse_from_dense(m) for i, m in f.maps.items()} for k, f in self.res.items()}
        return dims, d, res


@dataclass
class CechComplex:
    """G = G_U(A): basis per degree i is [(chain, b)] with b a basis index of A^{i-k}(U_0)."""

    covering: Covering
    basis: dict  # degree -> list of (chain, b)
    d: dict  # degree -> {col: {row: coeff}}
    labels: dict

    def index(self, deg: int) -> dict:
        return {key: n for n, key in enumerate(self.basis.get(deg, []))}

    def rank(self, deg: int) -> int:
        return len(self.basis.get(deg, []))

    def to_complex(self) -> FreeComplex:
        ranks = {i: len(b) for i, b in self.basis.items() if b}
        diffs = {}
        for i, cols in self.d.items():
            if not ranks.get(i + 1) or not ranks.get(i):
                continue
            m = [[Fraction(0)] * ranks[i] for _ in range(ranks[i + 1])]
            for c, col in cols.items():
                for r, x in col.items():
                    m[r][c] = x
            diffs[i] = m
        return FreeComplex(QQ, ranks, diffs, {i: list(self.labels[i]) for i in ranks})

    def apply_d(self, deg: int, v: Mapping) -> dict:
        out: dict = {}
        cols = self.d.get(deg, {})
        for c, x in v.items():
            for r, y in cols.get(c, {}).items():
                _acc(out, r, x * y)
        return out

    def square_defect(self) -> list[int]:
        bad = []
        for deg in self.basis:
            for c in range(self.rank(deg)):
                if self.apply_d(deg + 1, self.apply_d(deg, {c: Fraction(1)})):
                    bad.append(deg)
                    break
        return bad

    def summand_shape(self) -> dict:
        """Degree -> list of the open U_0 carrying each chain summand (with multiplicity per chain)."""
        out = {}
        for deg, keys in self.basis.items():
            seen = []
            for chain, _ in keys:
                if chain not in seen:
                    seen.append(chain)
            out[deg] = [(self.covering.opens[c[0]], tuple(self.covering.opens[i] for i in c)) for c in seen]
        return out


def _globalize_sparse(cov: Covering, dims: Mapping, d: Mapping, res: Mapping, degrees: Iterable[int] | None = None, top: int | None = None) -> CechComplex:
    """Core construction from per-open dims, differentials and restriction matrices (all sparse)."""
    K = cov.max_length()
    all_degs = {i for u in dims for i in dims[u]}
    if degrees is None:
        lo = min(all_degs, default=0)
        hi = max(all_degs, default=-1) + K
        degrees = range(lo, hi + 1)
    degrees = [i for i in degrees if top is None or i <= top]
    basis: dict = {}
    for i in degrees:
        keys = []
        for k in range(K + 1):
            for ch in cov.chains(k):
                for b in range(dims[ch[0]].get(i - k, 0)):
                    keys.append((ch, b))
        if keys:
            basis[i] = keys
    pos = {i: {key: n for n, key in enumerate(keys)} for i, keys in basis.items()}
    diff: dict = {}
    for i, keys in basis.items():
        if (i + 1) not in pos:
            continue
        tgt = pos[i + 1]
        sign_i = -1 if i % 2 else 1
        cols: dict = {}
        for n, (ch, b) in enumerate(keys):
            k = len(ch) - 1
            col: dict = {}
            # d_A on the same chain
            for r, x in d[ch[0]].get(i - k, {}).get(b, {}).items():
                _acc(col, tgt[(ch, r)], x)
            # chains s with d_j s = ch
            for j in range(k + 2):
                for v in range(len(cov.opens)):
                    if j > 0 and not cov.less(ch[j - 1], v):
                        continue
                    if j <= k and not cov.less(v, ch[j]):
                        continue
                    s = ch[:j] + (v,) + ch[j:]
                    sign = -sign_i * (1 if j % 2 == 0 else -1)
                    if j == 0:
                        for r, x in res[(v, ch[0])].get(i - k, {}).get(b, {}).items():
                            _acc(col, tgt[(s, r)], x * sign)
                    else:
                        _acc(col, tgt[(s, b)], Fraction(sign))
            if col:
                cols[n] = col
        diff[i] = cols
    labels = {
        i: [f"{'<'.join(cov.opens[u] for u in ch)}:{b}" for ch, b in keys] for i, keys in basis.items()
    }
    return CechComplex(cov, basis, diff, labels)


def globalize_complex(P: PresheafOfComplexes) -> CechComplex:
    """The Cech globalization of a presheaf of complexes; d^2 = 0 is verified."""
    bad = P.violations()
    if bad:
        raise ValueError("presheaf is not valid: " + "; ".join(bad))
    dims, d, res = P.sparse()
    G = _globalize_sparse(P.covering, dims, d, res)
    if G.square_defect():
        raise AssertionError("globalized differential does not square to zero")
    return G


def unit_comparison(P: PresheafOfComplexes) -> dict:
    """A(X) -> G_U(A), a -> (a|U at each one-element chain); reports the cone homology."""
    cov = P.covering
    if cov.total is None:
        raise ValueError("the covering must contain the total space")
    G = globalize_complex(P)
    X = P.values[cov.total]
    maps = {}
    for i in X.degrees():
        if not G.rank(i):
            continue
        idx = G.index(i)
        m = [[Fraction(0)] * X.rank(i) for _ in range(G.rank(i))]
        for u in range(len(cov.opens)):
            for c in range(X.rank(i)):
                if u == cov.total:
                    m[idx[((u,), c)]][c] = Fraction(1)
                    continue
                r_at = P.res[(u, cov.total)].at(i)
                for r in range(len(r_at)):
                    if r_at[r][c]:
                        m[idx[((u,), r)]][c] = r_at[r][c]
        maps[i] = m
    f = ChainMap(X, G.to_complex(), maps)
    chain_ok = not f.defect()
    c = cone(f)
    h = homology_ranks(c, (c.lo, c.hi) if c.ranks else (0, -1))
    return {"chain_map": chain_ok, "cone_homology": {str(k): v for k, v in sorted(h.items())}, "quasi_iso": chain_ok and all(v == 0 for v in h.values())}


# random presheaves ----------------------------------------------------------


def _rand_auto(rng: random.Random, c: FreeComplex):
    """A random chain automorphism: conjugate the complex by random invertible matrices."""
    gs, ginv = {}, {}
    for i in c.degrees():
        g, gi = hs._rand_invertible(rng, c.rank(i))
        gs[i], ginv[i] = g, gi
    return gs, ginv


def _mm(a, b):
    if not a or not b:
        return [[Fraction(0)] * (len(b[0]) if b else 0) for _ in a]
    return [[sum((a[i][k] * b[k][j] for k in range(len(b))), Fraction(0)) for j in range(len(b[0]))] for i in range(len(a))]


def _conjugate(c: FreeComplex, g: dict, gi: dict) -> FreeComplex:
    diffs = {i: _mm(_mm(g[i + 1], m), gi[i]) for i, m in c.diffs.items()}
    return FreeComplex(QQ, dict(c.ranks), diffs)


def random_presheaf(cov: Covering, seed: int, core_ranks: Mapping | None = None, extra_max: int = 2, window=(-1, 1)) -> PresheafOfComplexes:
    """A(U) = g_U(C (+) D_U) with restrictions g_U incl proj g_V^{-1}; functorial by construction."""
    rng = random.Random(seed)
    degs = list(range(window[0], window[1] + 1))
    core_ranks = core_ranks or {i: rng.randint(0, 2) for i in degs}
    C = FreeComplex(QQ, core_ranks, hs._rand_complex(rng, core_ranks))
    values, parts, autos = {}, {}, {}
    for u in range(len(cov.opens)):
        er = {i: rng.randint(0, extra_max) for i in degs}
        D = FreeComplex(QQ, er, hs._rand_complex(rng, er))
        ranks = {i: C.rank(i) + D.rank(i) for i in degs}
        diffs = {}
        for i in degs:
            if ranks.get(i) and ranks.get(i + 1):
                m = [[Fraction(0)] * ranks[i] for _ in range(ranks[i + 1])]
                for r in range(C.rank(i + 1)):
                    for c in range(C.rank(i)):
                        m[r][c] = C.d(i)[r][c]
                for r in range(D.rank(i + 1)):
                    for c in range(D.rank(i)):
                        m[C.rank(i + 1) + r][C.rank(i) + c] = D.d(i)[r][c]
                diffs[i] = m
        S = FreeComplex(QQ, ranks, diffs)
        g, gi = _rand_auto(rng, S)
        values[u] = _conjugate(S, g, gi)
        parts[u] = S
        autos[u] = (g, gi)
    res = {}
    for a, b in cov.order:
        maps = {}
        for i in values[b].degrees():
            if not values[a].rank(i):
                continue
            p = [[Fraction(int(r == c)) for c in range(values[b].rank(i))] for r in range(C.rank(i))]
            inc = [[Fraction(int(r == c)) for c in range(C.rank(i))] for r in range(values[a].rank(i))]
            if not C.rank(i):
                maps[i] = [[Fraction(0)] * values[b].rank(i) for _ in range(values[a].rank(i))]
                continue
            maps[i] = _mm(_mm(autos[a][0][i], _mm(inc, p)), autos[b][1][i])
        res[(a, b)] = ChainMap(values[b], values[a], maps)
    return PresheafOfComplexes(cov, values, res)


def toledotong_check(P: PresheafOfComplexes, w: int) -> dict:
    """Reconstruction over the opens inside w recovers A(w) up to quasi-isomorphism."""
    sub, keep = P.covering.below(w)
    pos = {u: n for n, u in enumerate(keep)}
    values = {pos[u]: P.values[u] for u in keep}
    res = {(pos[a], pos[b]): f for (a, b), f in P.res.items() if a in pos and b in pos}
    return unit_comparison(PresheafOfComplexes(sub, values, res))


@dataclass
class PresheafMap:
    source: PresheafOfComplexes
    target: PresheafOfComplexes
    maps: dict  # open -> ChainMap

    def violations(self) -> list[str]:
        bad = []
        for u, f in self.maps.items():
            if f.defect():
                bad.append(f"component on {self.source.covering.opens[u]} is not a chain map")
        for (a, b) in self.source.covering.order:
            lhs = self.source.res[(a, b)].then(self.maps[a])
            rhs = self.maps[b].then(self.target.res[(a, b)])
            for i in self.source.values[b].degrees():
                if lhs.at(i) != rhs.at(i):
                    bad.append(f"map does not commute with restriction {b} -> {a}")
                    break
        return bad


def globalize_map(f: PresheafMap) -> tuple[CechComplex, CechComplex, dict]:
    """G(f): per degree a sparse {col: {row: coeff}} matrix from G(source) to G(target)."""
    GS, GT = globalize_complex(f.source), globalize_complex(f.target)
    mats = {}
    for i, keys in GS.basis.items():
        tpos = GT.index(i)
        cols = {}
        for n, (ch, b) in enumerate(keys):
            k = len(ch) - 1
            m = f.maps[ch[0]].at(i - k)
            col = {}
            for r in range(len(m)):
                if m[r][b]:
                    col[tpos[(ch, r)]] = m[r][b]
            if col:
                cols[n] = col
        mats[i] = cols
    return GS, GT, mats


def gucinvariant_check(f: PresheafMap) -> dict:
    """Objectwise quasi-isomorphisms globalize to a quasi-isomorphism (cone homology)."""
    local = {}
    for u, m in f.maps.items():
        c = cone(m)
        h = homology_ranks(c, (c.lo, c.hi) if c.ranks else (0, -1))
        local[f.source.covering.opens[u]] = all(v == 0 for v in h.values())
    GS, GT, mats = globalize_map(f)
    S, T = GS.to_complex(), GT.to_complex()
    dense = {}
    for i, cols in mats.items():
        if not T.rank(i):
            continue
        m = [[Fraction(0)] * S.rank(i) for _ in range(T.rank(i))]
        for c, col in cols.items():
            for r, x in col.items():
                m[r][c] = x
        dense[i] = m
    g = ChainMap(S, T, dense)
    c = cone(g)
    h = homology_ranks(c, (c.lo, c.hi) if c.ranks else (0, -1))
    return {"local_quasi_iso": local, "global_quasi_iso": all(v == 0 for v in h.values()), "chain_map": not g.defect()}


def globfib_check(f: PresheafMap) -> dict:
    """Globalization of the kernels equals the kernel of the globalized map.

    Kernels are computed per open by nullspaces, restrictions are induced by
    solving, and the globalized kernel is embedded into G(source); the check
    compares it with the nullspace of G(f) as subspaces and compares the two
    differentials on it.
    """
    src, cov = f.source, f.source.covering
    kvals, kbasis = {}, {}
    for u, m in f.maps.items():
        A = src.values[u]
        basis = {}
        for i in A.degrees():
            mat = m.at(i)
            if mat and mat[0]:
                basis[i] = linalg.nullspace(mat)
            else:
                basis[i] = [[Fraction(int(r == c)) for r in range(A.rank(i))] for c in range(A.rank(i))]
        kbasis[u] = basis
        ranks = {i: len(v) for i, v in basis.items()}
        diffs = {}
        for i, vs in basis.items():
            nxt = basis.get(i + 1, [])
            if not vs or not nxt:
                continue
            cols_t = [list(x) for x in zip(*nxt)]  # matrix with basis vectors as columns
            cols = []
            for v in vs:
                dv = A.apply_d(i, v)
                sol = linalg.solve(cols_t, dv)
                if not sol.ok:
                    raise AssertionError("kernel is not a subcomplex")
                cols.append(sol.solution)
            diffs[i] = [list(r) for r in zip(*cols)]
        kvals[u] = FreeComplex(QQ, ranks, diffs)
    kres = {}
    for (a, b), r in src.res.items():
        maps = {}
        for i, vs in kbasis[b].items():
            tgt = kbasis[a].get(i, [])
            if not tgt or not vs:
                continue
            cols_t = [list(x) for x in zip(*tgt)]
            cols = []
            for v in vs:
                rv = [sum((r.at(i)[row][c] * v[c] for c in range(len(v))), Fraction(0)) for row in range(src.values[a].rank(i))]
                sol = linalg.solve(cols_t, rv)
                if not sol.ok:
                    raise AssertionError("restriction does not preserve kernels")
                cols.append(sol.solution)
            maps[i] = [list(row) for row in zip(*cols)]
        kres[(a, b)] = ChainMap(kvals[b], kvals[a], maps)
    KP = PresheafOfComplexes(cov, kvals, kres)
    GK = globalize_complex(KP)
    GS, GT, mats = globalize_map(f)
    report = {"dims_equal": True, "subspace_equal": True, "differential_equal": True, "dims": {}}
    for i in sorted(set(GS.basis) | set(GK.basis)):
        spos = GS.index(i)
        emb = []
        for ch, b in GK.basis.get(i, []):
            k = len(ch) - 1
            v = kbasis[ch[0]][i - k][b]
            vec = {spos[(ch, r)]: x for r, x in enumerate(v) if x}
            emb.append(vec)
        gm = linalg.SparseMatrix(GT.rank(i), GS.rank(i))
        for c, col in mats.get(i, {}).items():
            for r, x in col.items():
                gm.add(r, c, x)
        kdim = GS.rank(i) - linalg.rank(gm) if GS.rank(i) else 0
        report["dims"][str(i)] = [GK.rank(i), kdim]
        if GK.rank(i) != kdim:
            report["dims_equal"] = False
        for vec in emb:
            img = {}
            for c, x in vec.items():
                for r, y in mats.get(i, {}).get(c, {}).items():
                    _acc(img, r, x * y)
            if img:
                report["subspace_equal"] = False
        if emb:
            em = linalg.SparseMatrix(GS.rank(i), len(emb))
            for n, vec in enumerate(emb):
                for r, x in vec.items():
                    em.add(r, n, x)
            if linalg.rank(em) != len(emb):
                report["subspace_equal"] = False
        # d_GS(emb(e)) == emb(d_GK(e))
        nxt = []
        spos1 = GS.index(i + 1)
        for ch, b in GK.basis.get(i + 1, []):
            k = len(ch) - 1
            v = kbasis[ch[0]][i + 1 - k][b]
            nxt.append({spos1[(ch, r)]: x for r, x in enumerate(v) if x})
        for n, vec in enumerate(emb):
            lhs = GS.apply_d(i, vec)
            rhs: dict = {}
            for r, x in GK.apply_d(i, {n: Fraction(1)}).items():
                for c, y in nxt[r].items():
                    _acc(rhs, c, x * y)
            if lhs != rhs:
                report["differential_equal"] = False
    report["ok"] = report["dims_equal"] and report["subspace_equal"] and report["differential_equal"]
    return report


def random_surjection(cov: Covering, seed: int, acyclic_kernel: bool = False) -> PresheafMap:
    """A = h(B (+) K) -> B, the projection twisted by random automorphisms h_U."""
    rng = random.Random(seed)
    B = random_presheaf(cov, rng.randint(0, 10**6))
    if acyclic_kernel:
        Kp = _acyclic_presheaf(cov, rng)
    else:
        Kp = random_presheaf(cov, rng.randint(0, 10**6))
    values, autos, maps = {}, {}, {}
    for u in range(len(cov.opens)):
        b, k = B.values[u], Kp.values[u]
        S = _block_sum(b, k)
        g, gi = _rand_auto(rng, S)
        values[u] = _conjugate(S, g, gi)
        autos[u] = (g, gi)
        proj = {}
        for i in S.degrees():
            if not b.rank(i):
                continue
            p = [[Fraction(int(r == c)) for c in range(S.rank(i))] for r in range(b.rank(i))]
            proj[i] = _mm(p, gi[i])
        maps[u] = ChainMap(values[u], b, proj)
    res = {}
    for a, bb in cov.order:
        rm = {}
        for i in values[bb].degrees():
            if not values[a].rank(i):
                continue
            blk = _block_matrix(B.res[(a, bb)].at(i), Kp.res[(a, bb)].at(i), B.values[a].rank(i), B.values[bb].rank(i), Kp.values[a].rank(i), Kp.values[bb].rank(i))
            rm[i] = _mm(_mm(autos[a][0][i], blk), autos[bb][1][i])
        res[(a, bb)] = ChainMap(values[bb], values[a], rm)
    A = PresheafOfComplexes(cov, values, res)
    return PresheafMap(A, B, maps)


def _block_matrix(m1, m2, r1, c1, r2, c2):
    out = [[Fraction(0)] * (c1 + c2) for _ in range(r1 + r2)]
    for r in range(r1):
        for c in range(c1):
            out[r][c] = m1[r][c]
    for r in range(r2):
        for c in range(c2):
            out[r1 + r][c1 + c] = m2[r][c]
    return out


def _block_sum(a: FreeComplex, b: FreeComplex) -> FreeComplex:
    degs = sorted(set(a.degrees()) | set(b.degrees()))
    ranks = {i: a.rank(i) + b.rank(i) for i in degs}
    diffs = {}
    for i in degs:
        if ranks.get(i + 1) and ranks[i]:
            diffs[i] = _block_matrix(a.d(i), b.d(i), a.rank(i + 1), a.rank(i), b.rank(i + 1), b.rank(i))
    return FreeComplex(QQ, ranks, diffs)


def _acyclic_presheaf(cov: Covering, rng: random.Random) -> PresheafOfComplexes:
    """Per open a sum of cones of identities; restrictions zero (still functorial)."""
    values = {}
    for u in range(len(cov.opens)):
        r = rng.randint(0, 2)
        values[u] = FreeComplex(QQ, {-1: r, 0: r}, {-1: [[Fraction(int(i == j)) for j in range(r)] for i in range(r)]})
    res = {(a, b): ChainMap(values[b], values[a], {}) for a, b in cov.order}
    return PresheafOfComplexes(cov, values, res)


# ---------------------------------------------------------------------------
# presheaves of finite filtered dgas


@dataclass
class PresheafOfDGAs:
    covering: Covering
    values: dict  # open -> FiniteFilteredDGA
    res: dict  # (small, big) -> FilteredDGAMap big -> small

    def violations(self, check_mult: bool = True) -> list[str]:
        bad = []
        cov = self.covering
        for a, b in cov.order:
            f = self.res.get((a, b))
            if f is None:
                bad.append(f"missing restriction {cov.opens[b]} -> {cov.opens[a]}")
                continue
            if check_mult:
                bad += [f"{cov.opens[b]} -> {cov.opens[a]}: {v}" for v in f.violations()]
        for a, b, c in cov.chains(2):
            comp = self.res[(b, c)].then(self.res[(a, b)])
            direct = self.res[(a, c)]
            for deg in self.values[c].dims:
                for i in range(self.values[c].dim(deg)):
                    if comp.apply(deg, basis_vector(i)) != direct.apply(deg, basis_vector(i)):
                        bad.append(f"restrictions not functorial on chain {cov.opens[a]}<{cov.opens[b]}<{cov.opens[c]}")
                        break
        return bad

    @property
    def top(self) -> int:
        return min(z.top for z in self.values.values())

    def restrict(self, small: int, big: int, deg: int, v: Mapping) -> dict:
        if small == big:
            return dict(v)
        return self.res[(small, big)].apply(deg, v)


def globalize_dga(P: PresheafOfDGAs, check: bool = True) -> tuple[FiniteFilteredDGA, CechComplex]:
    """G_U(Z) as a finite filtered dga (differential D, product mu, unit, base point)."""
    if check:
        bad = P.violations()
        if bad:
            raise ValueError("presheaf of dgas is not valid: " + "; ".join(bad[:5]))
    cov = P.covering
    top = P.top
    dims = {u: dict(z.dims) for u, z in P.values.items()}
    d = {u: z.d for u, z in P.values.items()}
    res = {k: f.mats for k, f in P.res.items()}
    C = _globalize_sparse(cov, dims, d, res, degrees=range(0, top + 1), top=top)
    pos = {i: C.index(i) for i in C.basis}
    mult: dict = {}
    for (p, keys_p), (q, keys_q) in itertools.product(C.basis.items(), repeat=2):
        if p + q > top:
            continue
        by_first: dict = {}
        for n, (ch, b) in enumerate(keys_q):
            by_first.setdefault(ch[0], []).append((n, ch, b))
        table = {}
        for m, (ch1, a) in enumerate(keys_p):
            k1 = len(ch1) - 1
            Zu = P.values[ch1[0]]
            sign = -1 if (k1 * q) % 2 else 1
            for n, ch2, b in by_first.get(ch1[-1], []):
                k2 = len(ch2) - 1
                s = ch1 + ch2[1:]
                bv = P.restrict(ch1[0], ch2[0], q - k2, {b: Fraction(1)})
                prod = Zu.mul(p - k1, {a: Fraction(1)}, q - k2, bv)
                if prod:
                    table[(m, n)] = {pos[p + q][(s, r)]: x * sign for r, x in prod.items()}
        mult[(p, q)] = table
    levels = {i: [P.values[ch[0]].level(i - len(ch) + 1, b) for ch, b in keys] for i, keys in C.basis.items()}
    unit = eta0 = None
    if all(z.unit is not None for z in P.values.values()):
        unit = {}
        for u, z in P.values.items():
            for b, x in z.unit.items():
                unit[pos[0][((u,), b)]] = x
    eta0 = {}
    for u, z in P.values.items():
        for b, x in z.eta0.items():
            eta0[pos[1][((u,), b)]] = x
    lam = any(z.lam for z in P.values.values())
    C.labels = {
        i: [f"{'<'.join(cov.opens[u] for u in ch)}|{P.values[ch[0]].labels[i - len(ch) + 1][b]}" for ch, b in keys]
        for i, keys in C.basis.items()
    }
    G = FiniteFilteredDGA(
        {i: len(k) for i, k in C.basis.items()},
        levels,
        C.d,
        mult,
        unit=unit,
        eta0=eta0,
        labels=C.labels,
        lam=lam,
        top=top,
    )
    return G, C


# ---------------------------------------------------------------------------
# twisted objects and the globalized MC category


@dataclass
class TwistedObject:
    """Local MC points E(U) and transitions tau(s) in Z(U_0) of degree 1 - k."""

    local: dict  # open -> degree-1 vector of Z_U
    tau: dict  # chain (length >= 2) -> vector of degree 1-k


class TwistedCategory:
    """G^eq_U(U -> MC(Z_U)): objects, hom differentials and composition.

    Computed directly from the local dgas and restrictions (no use of the
    globalized dga), with outer faces absorbed into composition with the
    transitions and only inner faces appearing explicitly.
    """

    def __init__(self, P: PresheafOfDGAs):
        self.P = P
        self.cov = P.covering
        self.K = self.cov.max_length()

    def chains(self):
        for k in range(self.K + 1):
            yield from self.cov.chains(k)

    def _res(self, small, big, deg, v):
        return self.P.restrict(small, big, deg, v)

    def mc_residual(self, obj: TwistedObject) -> dict:
        """Per chain: dE + E^2 on opens; on longer chains
        d tau + E(U_0) tau + (-1)^k tau E(U_k)| + sum_{0<j<k} (-1)^j [tau(d_j s)| - tau(U_0..U_j) tau(U_j..U_k)|].
        """
        out = {}
        top = self.P.top
        for s in self.chains():
            k = len(s) - 1
            Z = self.P.values[s[0]]
            if k == 0:
                out[s] = Z.curvature(obj.local.get(s[0], {}))
                continue
            deg = 1 - k
            if deg + 1 < 0 or deg + 1 > top:
                continue
            r: dict = {}
            if deg >= 0:
                t = obj.tau.get(s, {})
                r = Z.dmap(deg, t)
                r = vadd(r, Z.mul(1, obj.local.get(s[0], {}), deg, t))
                ek = self._res(s[0], s[-1], 1, obj.local.get(s[-1], {}))
                r = vadd(r, Z.mul(deg, t, 1, ek), coeffs=[1, -1 if k % 2 else 1])
            for j in range(1, k):
                sign = -1 if j % 2 else 1
                face = s[:j] + s[j + 1:]
                r = vadd(r, obj.tau.get(face, {}), coeffs=[1, sign])
                ld, rd = 1 - j, 1 - (k - j)
                if ld < 0 or rd < 0:
                    continue
                left = obj.tau.get(s[: j + 1], {})
                right = self._res(s[0], s[j], rd, obj.tau.get(s[j:], {}))
                r = vadd(r, Z.mul(ld, left, rd, right), coeffs=[1, -sign])
            out[s] = r
        return out

    def hom_d(self, E: TwistedObject, F: TwistedObject, i: int, a: Mapping) -> dict:
        """Differential on Hom^i(E, F); components a(s) : E(U_k)|U_0 -> F(U_0) of degree i - k.

        d_loc a(s) - (-1)^i sum_{0<j<k} (-1)^j a(d_j s)|
          - sum_{j>=1} (-1)^(j i) tau_F(U_0..U_j) a(U_j..U_k)|
          + (-1)^i sum_{j<k} (-1)^j a(U_0..U_j) tau_E(U_j..U_k)|
        with d_loc a = d a + F(U_0) a - (-1)^(i-k) a E(U_k)|.
        """
        out = {}
        si = -1 if i % 2 else 1
        for s in self.chains():
            k = len(s) - 1
            Z = self.P.values[s[0]]
            deg = i + 1 - k
            if deg < 0 or deg > Z.top:
                continue
            acc: dict = {}
            # local part, from a(s) of degree i - k
            if i - k >= 0:
                x = a.get(s, {})
                acc = vadd(acc, Z.dmap(i - k, x))
                acc = vadd(acc, Z.mul(1, F.local.get(s[0], {}), i - k, x))
                ek = self._res(s[0], s[-1], 1, E.local.get(s[-1], {}))
                acc = vadd(acc, Z.mul(i - k, x, 1, ek), coeffs=[1, -1 if (i - k) % 2 == 0 else 1])
            for j in range(1, k):
                face = s[:j] + s[j + 1:]
                sign = -si * (-1 if j % 2 else 1)
                acc = vadd(acc, a.get(face, {}), coeffs=[1, sign])
            for j in range(1, k + 1):
                tdeg = 1 - j
                adeg = i - (k - j)
                if adeg < 0:
                    continue
                t = F.tau.get(s[: j + 1], {})
                x = self._res(s[0], s[j], adeg, a.get(s[j:], {}))
                sign = -(-1 if (j * i) % 2 else 1)
                acc = vadd(acc, Z.mul(tdeg, t, adeg, x), coeffs=[1, sign])
            for j in range(0, k):
                adeg = i - j
                tdeg = 1 - (k - j)
                if adeg < 0:
                    continue
                x = a.get(s[: j + 1], {})
                t = self._res(s[0], s[j], tdeg, E.tau.get(s[j:], {}))
                sign = si * (-1 if j % 2 else 1)
                acc = vadd(acc, Z.mul(adeg, x, tdeg, t), coeffs=[1, sign])
            if acc:
                out[s] = acc
        return out

    def compose(self, b: Mapping, bdeg: int, a: Mapping, adeg: int) -> dict:
        """(b o a)(s) = sum_j (-1)^(j |a|) b(U_0..U_j) a(U_j..U_k)|."""
        out = {}
        for s in self.chains():
            k = len(s) - 1
            Z = self.P.values[s[0]]
            acc: dict = {}
            for j in range(k + 1):
                db = bdeg - j
                da = adeg - (k - j)
                if db < 0 or da < 0:
                    continue
                x = self._res(s[0], s[j], da, a.get(s[j:], {}))
                sign = -1 if (j * adeg) % 2 else 1
                acc = vadd(acc, Z.mul(db, b.get(s[: j + 1], {}), da, x), coeffs=[1, sign])
            if acc:
                out[s] = acc
        return out


def split_cochain(C: CechComplex, deg: int, v: Mapping) -> dict:
    """Vector on G^deg -> {chain: local vector}."""
    out: dict = {}
    for n, x in v.items():
        ch, b = C.basis[deg][n]
        out.setdefault(ch, {})[b] = x
    return out


def join_cochain(C: CechComplex, deg: int, parts: Mapping) -> dict:
    pos = C.index(deg)
    out = {}
    for ch, vec in parts.items():
        for b, x in vec.items():
            if x:
                out[pos[(ch, b)]] = x
    return out


def twisted_from_point(P: PresheafOfDGAs, C: CechComplex, eta: Mapping) -> TwistedObject:
    """eta in G^1 -> (E(U) = eta(U), tau(U_0U_1) = 1 - eta(U_0U_1), tau(s) = -eta(s) for longer s)."""
    parts = split_cochain(C, 1, eta)
    local, tau = {}, {}
    for s in (ch for k in range(C.covering.max_length() + 1) for ch in C.covering.chains(k)):
        v = parts.get(s, {})
        if len(s) == 1:
            local[s[0]] = v
        elif len(s) == 2:
            tau[s] = vadd(P.values[s[0]].one(), v, coeffs=[1, -1])
        else:
            tau[s] = {b: -x for b, x in v.items()}
    return TwistedObject(local, tau)


def mc_glob_commute(P: PresheafOfDGAs, points: Sequence[Mapping], probes: Sequence[Mapping] = (), hom_degrees: Iterable[int] | None = None) -> dict:
    """Compare MC(G_U(Z)) with the twisted-object category built from the local MC categories.

    For every supplied degree-1 cochain (MC points and arbitrary probes) the
    curvature in the globalized dga is compared with the twisted MC residual
    (equal up to the fixed sign -1 on chains of length >= 2), so the two MC
    sets coincide.  For every ordered pair of MC points the hom differential
    d_{eta,phi} of the globalized dga and the twisted hom differential are
    compared entrywise on every basis cochain, and so are compositions.
    """
    G, C = globalize_dga(P)
    T = TwistedCategory(P)
    report = {"objects": len(points), "probes": len(probes), "residual_mismatch": [], "hom_mismatch": [], "compose_mismatch": [], "transitions_invertible": True}
    pts = [dict(p) for p in points]
    for n, eta in enumerate(list(pts) + [dict(p) for p in probes]):
        obj = twisted_from_point(P, C, eta)
        g_res = split_cochain(C, 2, G.curvature(eta)) if G.top >= 2 else {}
        t_res = T.mc_residual(obj)
        for s in set(g_res) | set(t_res):
            want = t_res.get(s, {})
            if len(s) > 1:
                want = {b: -x for b, x in want.items()}
            if g_res.get(s, {}) != want:
                report["residual_mismatch"].append({"sample": n, "chain": [C.covering.opens[u] for u in s]})
        for s, t in obj.tau.items():
            if n < len(pts) and len(s) == 2:
                Z = P.values[s[0]]
                diff = vadd(t, Z.one(), coeffs=[1, -1])
                if any(Z.level(0, b) == 0 for b in diff):
                    report["transitions_invertible"] = False
    degs = list(hom_degrees) if hom_degrees is not None else [i for i in sorted(G.dims) if i + 1 <= G.top]
    objs = [twisted_from_point(P, C, p) for p in pts]
    for (x, ex), (y, ey) in itertools.product(list(enumerate(pts)), repeat=2):
        for i in degs:
            for c in range(G.dim(i)):
                v = {c: Fraction(1)}
                lhs = G.twisted_d(i, v, ey, ex)
                rhs = join_cochain(C, i + 1, T.hom_d(objs[x], objs[y], i, split_cochain(C, i, v)))
                if lhs != rhs:
                    report["hom_mismatch"].append({"source": x, "target": y, "degree": i, "basis": C.labels[i][c]})
    for p, q in itertools.product(sorted(G.dims), repeat=2):
        if p + q > G.top:
            continue
        for a in range(G.dim(p)):
            for b in range(G.dim(q)):
                lhs = G.mul(p, {a: Fraction(1)}, q, {b: Fraction(1)})
                rhs = join_cochain(C, p + q, T.compose(split_cochain(C, p, {a: Fraction(1)}), p, split_cochain(C, q, {b: Fraction(1)}), q))
                if lhs != rhs:
                    report["compose_mismatch"].append([C.labels[p][a], C.labels[q][b]])
    report["ok"] = not (report["residual_mismatch"] or report["hom_mismatch"] or report["compose_mismatch"]) and report["transitions_invertible"]
    return report


def constant_presheaf(cov: Covering, Z: FiniteFilteredDGA) -> PresheafOfDGAs:
    ident = {deg: {c: {c: Fraction(1)} for c in range(n)} for deg, n in Z.dims.items()}
    return PresheafOfDGAs(cov, {u: Z for u in range(len(cov.opens))}, {(a, b): FilteredDGAMap(Z, Z, ident) for a, b in cov.order})


# ---------------------------------------------------------------------------
# the pole-bounded model


@dataclass
class PoleSchedule:
    """m(p): allowed pole order at J-level p (at every marked point and at infinity)."""

    m: tuple

    def __post_init__(self):
        self.m = tuple(int(v) for v in self.m)
        if not self.m or self.m[0] != 0:
            raise ValueError("schedule must start with m(0) = 0")
        if any(b < a for a, b in zip(self.m, self.m[1:])):
            raise ValueError("schedule must be non-decreasing")

    def __call__(self, p: int) -> int:
        return self.m[p] if p < len(self.m) else self.m[-1]

    def check(self, k: int) -> list[str]:
        """Superadditivity m(p) + m(q) <= m(p+q) for p + q < k."""
        bad = []
        for p in range(k):
            for q in range(k - p):
                if self(p) + self(q) > self(p + q):
                    bad.append(f"m({p}) + m({q}) > m({p + q})")
        return bad


@dataclass
class PoleModel:
    covering: Covering
    schedule: PoleSchedule
    k: int
    mode: str
    rank: int
    presheaf: PresheafOfDGAs
    G: FiniteFilteredDGA
    cech: CechComplex
    local_index: dict  # open -> degree -> list of (coord, a)

    def summary(self) -> dict:
        out = self.G.summary()
        out.update({"k": self.k, "schedule": list(self.schedule.m), "mode": self.mode, "rank": self.rank})
        return out


def _word_label(w: tuple) -> str:
    return "[" + ",".join("d" * a[0] if len(a) == 1 and a[0] else "1" if not any(a) else str(a) for a in w) + "]"


def _local_model(alg: FilteredPBWAlgebra, ring: SectionRing, rank: int, N: int, removed: list, sched: PoleSchedule, top: int):
    E = FreeComplex(ring, {0: rank})
    sp = hs.QSpace(alg, E, E, N)
    basis: dict = {}
    for i in range(0, top + 1):
        keys = []
        for coord in sp.coordinates(i):
            p = hs.level(coord[0])
            for a in range(len(section_basis(ring, removed, sched(p)))):
                keys.append((coord, a))
        if keys:
            basis[i] = keys
    pos = {i: {key: n for n, key in enumerate(keys)} for i, keys in basis.items()}
    sb_cache: dict = {}

    def sbasis(p):
        if p not in sb_cache:
            sb_cache[p] = section_basis(ring, removed, sched(p))
        return sb_cache[p]

    def element(i, n):
        (w, j, b, c), a = basis[i][n]
        return hs.QElement(sp, i, {(w, j, b): {c: sbasis(hs.level(w))[a]}})

    def decompose(q: hs.QElement, i: int) -> dict:
        out = {}
        for (w, j, b), vec in q.data.items():
            p = hs.level(w)
            for c, s in vec.items():
                coords = section_coordinates(s, removed, sched(p))
                if coords is None:
                    raise ValueError(f"pole bound violated: coefficient {s.format()} at word {w} (level {p}) leaves the model")
                for a, x in enumerate(coords):
                    if x:
                        out[pos[i][((w, j, b, c), a)]] = x
        return out

    d = {}
    for i, keys in basis.items():
        if i + 1 > top:
            continue
        d[i] = {}
        for n in range(len(keys)):
            v = decompose(hs.d_Q(element(i, n)), i + 1)
            if v:
                d[i][n] = v
    mult = {}
    elems = {i: [element(i, n) for n in range(len(keys))] for i, keys in basis.items()}
    for p, q in itertools.product(sorted(basis), repeat=2):
        if p + q > top:
            continue
        t = {}
        out_keys = sp.keys(p + q)
        for m_, x in enumerate(elems[p]):
            for n, y in enumerate(elems[q]):
                prod = hs.compose(x, y, sp, out_keys)
                if not prod.is_zero():
                    t[(m_, n)] = decompose(prod, p + q)
        mult[(p, q)] = t
    unit = decompose(hs.identity(sp), 0)
    eta0 = decompose(hs.one_of_one(sp), 1) if top >= 1 else {}
    levels = {i: [hs.level(coord[0]) for coord, _ in keys] for i, keys in basis.items()}
    labels = {
        i: [f"{_word_label(coord[0])}:e{coord[2]}>e{coord[3]}:{sbasis(hs.level(coord[0]))[a].format()}" for coord, a in keys]
        for i, keys in basis.items()
    }
    Z = FiniteFilteredDGA(
        {i: len(k) for i, k in basis.items()},
        levels,
        d,
        mult,
        unit=unit,
        eta0=eta0,
        labels=labels,
        lam=alg.mode == "rees",
        top=top,
    )
    return Z, basis, sbasis


def pole_bounded_model(cov: Covering, schedule: Sequence[int] | PoleSchedule, k: int, rank: int = 1, mode: str = "weyl", top: int = 2) -> PoleModel:
    """Cech globalization of U -> sum_p (J^p Q(E,E)/J^k) (x) O(m(p) D)(U) for E = O^rank on the line.

    Every open is the line minus some marked points; sections may have poles
    of order m(p) at the missing points and at infinity.  Products that leave
    the model raise ``ValueError`` naming the offending coefficient.
    """
    sched = schedule if isinstance(schedule, PoleSchedule) else PoleSchedule(tuple(schedule))
    bad = sched.check(k)
    if bad:
        raise ValueError("schedule is not superadditive: " + "; ".join(bad))
    if not cov.points and any(cov.removed.get(u) for u in range(len(cov.opens))):
        raise ValueError("covering needs marked points")
    ring = SectionRing(cov.points, rees=(mode == "rees"))
    alg = FilteredPBWAlgebra(mode, 1, 1, ring=ring)
    values, bases, sbases = {}, {}, {}
    for u in range(len(cov.opens)):
        Z, basis, sb = _local_model(alg, ring, rank, k, cov.removed.get(u, []), sched, top)
        values[u], bases[u], sbases[u] = Z, basis, sb
    res = {}
    for a, b in cov.order:
        mats = {}
        tpos = {i: {key: n for n, key in enumerate(keys)} for i, keys in bases[a].items()}
        for i, keys in bases[b].items():
            cols = {}
            for n, (coord, al) in enumerate(keys):
                p = hs.level(coord[0])
                s = sbases[b](p)[al]
                coords = section_coordinates(s, cov.removed.get(a, []), sched(p))
                if coords is None:
                    raise ValueError("restriction leaves the smaller open's model")
                cols[n] = {tpos[i][(coord, t)]: x for t, x in enumerate(coords) if x}
            mats[i] = cols
        res[(a, b)] = FilteredDGAMap(values[b], values[a], mats)
    P = PresheafOfDGAs(cov, values, res)
    G, C = globalize_dga(P, check=False)
    return PoleModel(cov, sched, k, mode, rank, P, G, C, bases)


def model_inclusion(small: PoleModel, big: PoleModel) -> FilteredDGAMap:
    """The inclusion of a model into one with a pointwise larger schedule (same covering, k, mode)."""
    if (small.k, small.mode, small.rank) != (big.k, big.mode, big.rank) or small.covering.opens != big.covering.opens:
        raise ValueError("models are not comparable")
    cov = small.covering
    ring = SectionRing(cov.points, rees=(small.mode == "rees"))
    mats = {}
    for deg, keys in small.cech.basis.items():
        tpos = big.cech.index(deg)
        cols = {}
        for n, (ch, b) in enumerate(keys):
            u = ch[0]
            kk = len(ch) - 1
            coord, al = small.local_index[u][deg - kk][b]
            p = hs.level(coord[0])
            s = section_basis(ring, cov.removed.get(u, []), small.schedule(p))[al]
            coords = section_coordinates(s, cov.removed.get(u, []), big.schedule(p))
            if coords is None:
                raise ValueError("target schedule is not larger")
            bpos = {key: i for i, key in enumerate(big.local_index[u][deg - kk])}
            cols[n] = {tpos[(ch, bpos[(coord, t)])]: x for t, x in enumerate(coords) if x}
        mats[deg] = cols
    return FilteredDGAMap(small.G, big.G, mats)


def graded_comparison(small: PoleModel, big: PoleModel, p: int) -> dict:
    """Homology of Gr^p for two schedules and whether the inclusion is a quasi-isomorphism there."""
    from .mcgeom import graded_complex, trusted_window

    f = model_inclusion(small, big)
    Gs, Gb = small.G.specialize(1) if small.G.lam else small.G, big.G.specialize(1) if big.G.lam else big.G
    if small.G.lam:
        f = FilteredDGAMap(Gs, Gb, {deg: {c: {r: (x.evaluate([1]) if isinstance(x, Poly) else x) for r, x in col.items()} for c, col in cols.items()} for deg, cols in f.mats.items()})
    w = trusted_window(Gs)
    hs_ = homology_ranks(graded_complex(Gs, p), w)
    hb = homology_ranks(graded_complex(Gb, p), w)
    qi = f.graded_quasi_iso([p])[p]
    return {
        "level": p,
        "small": {str(k): v for k, v in sorted(hs_.items())},
        "big": {str(k): v for k, v in sorted(hb.items())},
        "ranks_equal": hs_ == hb,
        "quasi_iso": qi,
    }


def flat_connection_data(model: PoleModel, gamma: Sequence[Sequence[Poly]]) -> dict:
    """Independent construction of the MC point of a global connection matrix on the line model.

    ``gamma`` is a rank x rank matrix of polynomials in x of degree <= m(1).
    The point is 1_E(1) plus, on every open, the one-letter word d acting by
    gamma, written in that open's section basis; chain components vanish.
    Only valid for k = 2 (the level-1 part of the structure).
    """
    if model.k != 2:
        raise ValueError("flat-connection data are compared at k = 2")
    cov = model.covering
    ring = SectionRing(cov.points, rees=(model.mode == "rees"))
    G = model.G
    pos = model.cech.index(1)
    out = dict(G.eta0)
    m1 = model.schedule(1)
    for u in range(len(cov.opens)):
        removed = cov.removed.get(u, [])
        lpos = {key: n for n, key in enumerate(model.local_index[u][1])}
        for b in range(model.rank):
            for c in range(model.rank):
                g = gamma[c][b]
                if not g:
                    continue
                num = g if ring.nvars == 1 else g.add_var(1)
                coords = section_coordinates(ring.make(num), removed, m1)
                if coords is None:
                    raise ValueError("connection coefficient exceeds the pole bound")
                for a, x in enumerate(coords):
                    if x:
                        n = lpos[((((1,),), 0, b, c), a)]
                        out[pos[((u,), n)]] = x
    return out


# ---------------------------------------------------------------------------
# the structure sheaf on two opens


def structure_presheaf(cov: Covering, M: int) -> PresheafOfComplexes:
    """U -> O(M D)(U) in degree 0, sections with poles of order <= M at removed points and infinity."""
    ring = SectionRing(cov.points)
    bases = {u: section_basis(ring, cov.removed.get(u, []), M) for u in range(len(cov.opens))}
    values = {
        u: FreeComplex(QQ, {0: len(b)}, {}, {0: [s.format() for s in b]}) for u, b in bases.items()
    }
    res = {}
    for a, b in cov.order:
        cols = []
        for s in bases[b]:
            coords = section_coordinates(s, cov.removed.get(a, []), M)
            if coords is None:
                raise ValueError("restriction leaves the bounded sections")
            cols.append(coords)
        res[(a, b)] = ChainMap(values[b], values[a], {0: [list(r) for r in zip(*cols)]})
    return PresheafOfComplexes(cov, values, res)


def two_open_resolution(M: int = 1, with_total: bool = False) -> dict:
    """Globalize O over {x != 0}, {x != 1} and check the shape O_U + O_V + O_UV -> O_UV + O_UV.

    The differential is compared block by block with the expected one: each
    degree-1 summand (UV c W) receives -res from O_W, +1 from O_UV and
    nothing else (any sign pattern per summand is accepted as a relabeling).
    """
    cov = two_open_line()
    if with_total:
        cov = Covering(["U", "V", "UV", "X"], {(2, 0), (2, 1), (0, 3), (1, 3), (2, 3)}, {0: [0], 1: [1], 2: [0, 1], 3: []}, cov.points, 3)
    P = structure_presheaf(cov, M)
    G = globalize_complex(P)
    shape = G.summand_shape()
    report = {
        "degree0": [s[0] for s in shape.get(0, [])],
        "degree1": [s[0] for s in shape.get(1, [])],
        "ranks": {str(i): G.rank(i) for i in sorted(G.basis)},
        "square_zero": not G.square_defect(),
    }
    if not with_total:
        ok = report["degree0"] == ["U", "V", "UV"] and report["degree1"] == ["UV", "UV"] and sorted(G.basis) == [0, 1]
        pos0 = G.index(0)
        n_uv = P.values[2].rank(0)
        for w in (0, 1):
            chain = (2, w)
            blocks = {}
            for u in (0, 1, 2):
                m = [[Fraction(0)] * P.values[u].rank(0) for _ in range(n_uv)]
                for b in range(P.values[u].rank(0)):
                    for r, x in G.d.get(0, {}).get(pos0[((u,), b)], {}).items():
                        ch, rr = G.basis[1][r]
                        if ch == chain:
                            m[rr][b] = x
                blocks[u] = m
            ident = [[Fraction(int(r == c)) for c in range(n_uv)] for r in range(n_uv)]
            resm = P.res[(2, w)].at(0)
            other = 1 - w
            neg = lambda m: [[-x for x in row] for row in m]
            sign_ok = (blocks[w] == neg(resm) and blocks[2] == ident) or (blocks[w] == resm and blocks[2] == neg(ident))
            zero_ok = all(not any(row) for row in blocks[other])
            ok = ok and sign_ok and zero_ok
        report["shape_ok"] = ok
        h = homology_ranks(G.to_complex(), (0, 1))
        report["homology"] = {str(k): v for k, v in sorted(h.items())}
    else:
        report["unit_comparison"] = unit_comparison(P)
        report["shape_ok"] = report["unit_comparison"]["quasi_iso"]
    return report
