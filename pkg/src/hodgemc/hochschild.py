"""The truncated complex Q(E,F) = Hom_A(TL (x) E, F) and weak L-module structures.

An element q of degree i is stored on the A-basis of TL (x) E: a key
(word, j, b) with word = (alpha_1, ..., alpha_k) and e_b in E^j maps to a
vector in F^{j+i-k}.  Only words of J-level <= N-1 are kept, which is
exactly the quotient Q/J^N.

Sign table (used everywhere in this module)
-------------------------------------------
* T^k L sits in degree -k; D(w (x) e) = delta(w) (x) e + (-1)^k w (x) d_E e
  with delta(u_1..u_k) = sum_{l=1}^{k-1} (-1)^{l+1} (.., u_l u_{l+1}, ..).
* d_Q q = d_F o q - (-1)^|q| q o D.
* (p q)(w; e) = sum_{s=0}^{k} (-1)^{|q| s} p(w[:s]; q(w[s:]; e)).
* d_{eta,phi} q = d_Q q + phi q - (-1)^|q| q eta.
* (H q)(w; e) = sum_{m=0}^{k} (-1)^{|q|+m} q(w with a 1 inserted after m letters; e).
* 1_E(1): the degree-1 element sending the one-letter word (0..0) (x) e to e.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

from . import linalg
from .algebra import FilteredPBWAlgebra, Poly, compositions
from .complexes import (
    ChainMap,
    FreeComplex,
    Homotopy,
    HomologyReport,
    StrictLComplex,
    cone,
    homology_ranks_at_points,
    sparse_homology_at_points,
    zero_matrix,
)


# ---------------------------------------------------------------------------
# symbolic coefficients


class LinearForm:
    """Formal linear combination sum_key coeff * X_key with ring coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping | None = None):
        self.terms = {k: v for k, v in (terms or {}).items() if v}

    def __add__(self, other):
        if isinstance(other, LinearForm):
            t = dict(self.terms)
            for k, v in other.terms.items():
                if k in t:
                    s = t[k] + v
                    if s:
                        t[k] = s
                    else:
                        del t[k]
                else:
                    t[k] = v
            out = LinearForm()
            out.terms = t
            return out
        if not other:
            return self
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        out = LinearForm()
        out.terms = {k: -v for k, v in self.terms.items()}
        return out

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        if isinstance(c, LinearForm):
            return NotImplemented
        return LinearForm({k: v * c for k, v in self.terms.items()})

    def __rmul__(self, c):
        if isinstance(c, LinearForm):
            return NotImplemented
        return LinearForm({k: c * v for k, v in self.terms.items()})

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, LinearForm):
            return self.terms == other.terms
        if not other:
            return not self.terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        return f"LinearForm({self.terms})"


def _acc(target: dict, key, value) -> None:
    if not value:
        return
    if key in target:
        s = target[key] + value
        if s:
            target[key] = s
        else:
            del target[key]
    else:
        target[key] = value


def _scaled(vec: Mapping, c) -> dict:
    out = {}
    for k, v in vec.items():
        x = c * v
        if x:
            out[k] = x
    return out


# ---------------------------------------------------------------------------
# words


@lru_cache(maxsize=None)
def words(m: int, k: int, max_level: int) -> tuple:
    """All words of k multi-indices in N^m with total level <= max_level."""
    if k == 0:
        return ((),)
    out = []
    for first_level in range(max_level + 1):
        for first in compositions(m, first_level):
            for rest in words(m, k - 1, max_level - first_level):
                out.append((first,) + rest)
    return tuple(out)


def level(word: tuple) -> int:
    return sum(sum(a) for a in word)


def merge(word: tuple, l: int) -> tuple:
    """Merge letters l and l+1 (1-based): d^a d^b = d^(a+b)."""
    a, b = word[l - 1], word[l]
    return word[: l - 1] + (tuple(x + y for x, y in zip(a, b)),) + word[l + 1:]


def insert_one(word: tuple, pos: int, m: int) -> tuple:
    return word[:pos] + ((0,) * m,) + word[pos:]


# ---------------------------------------------------------------------------
# the space Q(E, F)/J^N


class QSpace:
    """Bookkeeping for Q(E,F)/J^N: keys, reduction of coefficients, evaluation."""

    def __init__(self, algebra: FilteredPBWAlgebra, E: FreeComplex, F: FreeComplex, N: int):
        if N < 1:
            raise ValueError("truncation N must be at least 1")
        for c in (E, F):
            if c.ring != algebra.ring:
                raise ValueError("complexes must live over the base ring of the algebra")
        self.alg = algebra
        self.E = E
        self.F = F
        self.N = N
        self._keys: dict = {}

    def compatible(self, other: "QSpace") -> bool:
        return self.alg == other.alg and self.N == other.N

    def words(self, k: int) -> tuple:
        return words(self.alg.m, k, self.N - 1)

    def keys(self, i: int, lev: int | None = None) -> list:
        """Keys (word, j, b) of Q^i; with ``lev`` only words of that J-level."""
        ck = (i, lev)
        if ck in self._keys:
            return self._keys[ck]
        out = []
        for j in self.E.degrees():
            for f in self.F.degrees():
                k = j + i - f
                if k < 0:
                    continue
                for w in self.words(k):
                    if lev is not None and level(w) != lev:
                        continue
                    for b in range(self.E.rank(j)):
                        out.append((w, j, b))
        self._keys[ck] = out
        return out

    def target_degree(self, i: int, key) -> int:
        w, j, _ = key
        return j + i - len(w)

    def coordinates(self, i: int, lev: int | None = None) -> list:
        out = []
        for key in self.keys(i, lev):
            f = self.target_degree(i, key)
            for c in range(self.F.rank(f)):
                out.append(key + (c,))
        return out

    def degrees_present(self, lo: int, hi: int) -> list[int]:
        return [i for i in range(lo, hi + 1) if self.keys(i)]

    def reduce(self, word: tuple, vec: Mapping) -> dict:
        """Rewrite w (x) sum_c g_c e_c as sum (w', c) coeff with coefficients moved left."""
        state = {((), c): g for c, g in vec.items() if g}
        alg = self.alg
        for alpha in reversed(word):
            new: dict = {}
            if not any(alpha):
                for (suffix, c), g in state.items():
                    new[((alpha,) + suffix, c)] = g
                state = new
                continue
            for (suffix, c), g in state.items():
                if isinstance(g, LinearForm):
                    for (beta, key), h in _left_normal_symbolic(alg, alpha, g).items():
                        _acc(new, ((beta,) + suffix, c), LinearForm({key: h}))
                else:
                    for beta, h in alg.left_normal(alpha, g).items():
                        _acc(new, ((beta,) + suffix, c), h)
            state = new
        return state


def _left_normal_symbolic(alg: FilteredPBWAlgebra, alpha: tuple, g: LinearForm) -> dict:
    """d^alpha * (sum poly D^g0 X) in left normal form, keys (alpha - gamma, (X, g0 + gamma - delta)).

    Symbolic keys are pairs (coordinate, jet multi-index): the unknown values
    are arbitrary elements of A, so moving them through d^alpha produces
    their derivatives D^gamma X, kept as independent formal unknowns.
    """
    out: dict = {}
    if alg.mode == "poly":
        for key, poly in g.terms.items():
            _acc(out, (alpha, key), poly)
        return out
    for (coord, g0), poly in g.terms.items():
        for gamma in itertools.product(*(range(a + 1) for a in alpha)):
            c1 = 1
            for a, b in zip(alpha, gamma):
                c1 *= math.comb(a, b)
            rest = tuple(a - b for a, b in zip(alpha, gamma))
            for delta in itertools.product(*(range(b + 1) for b in gamma)):
                c2 = c1
                for a, b in zip(gamma, delta):
                    c2 *= math.comb(a, b)
                dp = alg.d_gamma(delta, poly)
                if not dp:
                    continue
                jet = tuple(x + y - z for x, y, z in zip(g0, gamma, delta))
                _acc(out, (rest, (coord, jet)), dp * c2)
    return out


def _zero_jet(m_vars: int) -> tuple:
    return (0,) * m_vars


def _plain_terms(lf: LinearForm):
    """(coordinate, coeff) pairs; derivative jets mean the map is not A-linear here."""
    for (coord, jet), coeff in lf.terms.items():
        if any(jet):
            raise ValueError("differential is not A-linear on this piece (derivatives of unknowns appear)")
        yield coord, coeff


class QElement:
    """Degree-i element of Q(E,F)/J^N; ``data[(word, j, b)] = {c: coeff}``."""

    __slots__ = ("space", "degree", "data")

    def __init__(self, space: QSpace, degree: int, data: Mapping | None = None):
        self.space = space
        self.degree = degree
        clean = {}
        for key, vec in (data or {}).items():
            v = {c: x for c, x in vec.items() if x}
            if v:
                clean[key] = v
        self.data = clean

    # access ---------------------------------------------------------------
    def get(self, word, j, b) -> dict:
        return self.data.get((word, j, b), {})

    def evaluate(self, word: tuple, j: int, vec: Mapping) -> dict:
        """q(w; sum_c vec_c e_c) for e_c in E^j."""
        out: dict = {}
        for (w2, c), g in self.space.reduce(word, vec).items():
            val = self.data.get((w2, j, c))
            if val:
                for r, x in val.items():
                    _acc(out, r, g * x)
        return out

    # linear structure ----------------------------------------------------
    def _check(self, other: "QElement") -> None:
        if other.space is not self.space and not (
            other.space.E is self.space.E and other.space.F is self.space.F and other.space.compatible(self.space)
        ):
            raise ValueError("elements live in different Q spaces")
        if other.degree != self.degree:
            raise ValueError("degree mismatch")

    def __add__(self, other: "QElement") -> "QElement":
        self._check(other)
        data = {k: dict(v) for k, v in self.data.items()}
        for k, v in other.data.items():
            tgt = data.setdefault(k, {})
            for c, x in v.items():
                _acc(tgt, c, x)
        return QElement(self.space, self.degree, data)

    def __neg__(self) -> "QElement":
        return self.scale(-1)

    def __sub__(self, other: "QElement") -> "QElement":
        return self + (-other)

    def scale(self, c) -> "QElement":
        return QElement(self.space, self.degree, {k: _scaled(v, c) for k, v in self.data.items()})

    def is_zero(self) -> bool:
        return not self.data

    def __eq__(self, other) -> bool:
        if not isinstance(other, QElement):
            return NotImplemented
        return self.degree == other.degree and (self - other).is_zero()

    def restrict(self, predicate) -> "QElement":
        return QElement(self.space, self.degree, {k: v for k, v in self.data.items() if predicate(k)})

    def P(self) -> "QElement":
        """Projection to Hom(TA (x) E, F): keep words whose letters are all 1."""
        return self.restrict(lambda k: level(k[0]) == 0)

    def P0(self) -> "QElement":
        """The associated usual morphism: the empty-word component."""
        return self.restrict(lambda k: len(k[0]) == 0)

    def level_part(self, p: int) -> "QElement":
        return self.restrict(lambda k: level(k[0]) == p)

    def in_J(self, p: int) -> bool:
        return all(level(k[0]) >= p for k in self.data)

    def map_coefficients(self, fn, space: QSpace | None = None) -> "QElement":
        return QElement(space or self.space, self.degree, {k: {c: fn(x) for c, x in v.items()} for k, v in self.data.items()})

    def P0_matrices(self) -> dict:
        """Matrices of the empty-word component: E^j -> F^{j+i}."""
        sp = self.space
        ring = sp.alg.ring
        out = {}
        for j in sp.E.degrees():
            f = j + self.degree
            if not sp.F.rank(f):
                continue
            m = zero_matrix(ring, sp.F.rank(f), sp.E.rank(j))
            for b in range(sp.E.rank(j)):
                for c, x in self.get((), j, b).items():
                    m[c][b] = x
            out[j] = m
        return out

    def __repr__(self) -> str:
        return f"QElement(degree={self.degree}, entries={len(self.data)})"


def zero(space: QSpace, degree: int) -> QElement:
    return QElement(space, degree, {})


def identity(space: QSpace) -> QElement:
    """The unit 1_E: empty word, e_b -> e_b (requires E = F)."""
    if space.E is not space.F:
        raise ValueError("identity needs E = F")
    one = space.alg.ring.one()
    return QElement(space, 0, {((), j, b): {b: one} for j in space.E.degrees() for b in range(space.E.rank(j))})


def one_of_one(space: QSpace) -> QElement:
    """1_E(1): the normalized trivial structure (one-letter word 1, e -> e)."""
    if space.E is not space.F:
        raise ValueError("1_E(1) needs E = F")
    one = space.alg.ring.one()
    w = ((0,) * space.alg.m,)
    return QElement(space, 1, {(w, j, b): {b: one} for j in space.E.degrees() for b in range(space.E.rank(j))})


def from_chain_map(space: QSpace, maps: Mapping, degree: int = 0) -> QElement:
    """Embed a map of A-complexes (matrices per source degree) as an empty-word element."""
    data = {}
    for j, m in maps.items():
        for b in range(space.E.rank(j)):
            vec = {r: m[r][b] for r in range(len(m)) if m[r][b]}
            if vec:
                data[((), j, b)] = vec
    return QElement(space, degree, data)


def symbolic(space: QSpace, degree: int, lev: int | None = None) -> QElement:
    """Generic element whose coordinates are the formal variables X_(w, j, b, c)."""
    one = space.alg.ring.one()
    z = _zero_jet(space.alg.m)
    data = {}
    for key in space.keys(degree, lev):
        f = space.target_degree(degree, key)
        data[key] = {c: LinearForm({(key + (c,), z): one}) for c in range(space.F.rank(f))}
    return QElement(space, degree, data)


# ---------------------------------------------------------------------------
# differential, product, insertion operator


def _d_E_column(E: FreeComplex, j: int, b: int) -> dict:
    m = E.d(j)
    return {r: m[r][b] for r in range(E.rank(j + 1)) if m[r][b]}


def d_Q(q: QElement, out_keys: Iterable | None = None) -> QElement:
    """Untwisted differential d_F q - (-1)^|q| q D."""
    sp = q.space
    i = q.degree
    sign_i = -1 if i % 2 else 1
    keys = sp.keys(i + 1) if out_keys is None else out_keys
    F = sp.F
    out = {}
    for key in keys:
        w, j, b = key
        k = len(w)
        acc: dict = {}
        # d_F q(w; e_b)
        val = q.data.get(key)
        if val:
            f = j + i - k
            dm = F.d(f)
            for c, x in val.items():
                for r in range(F.rank(f + 1)):
                    if dm[r][c]:
                        _acc(acc, r, x * dm[r][c])
        # -(-1)^i q(delta w; e_b)
        for l in range(1, k):
            v = q.data.get((merge(w, l), j, b))
            if v:
                s = -sign_i * (1 if l % 2 else -1)
                for c, x in v.items():
                    _acc(acc, c, x * s)
        # -(-1)^i (-1)^k q(w; d_E e_b)
        col = _d_E_column(sp.E, j, b)
        if col:
            s = -sign_i * (-1 if k % 2 else 1)
            for c, x in q.evaluate(w, j + 1, col).items():
                _acc(acc, c, x * s)
        if acc:
            out[key] = acc
    return QElement(sp, i + 1, out)


def compose(p: QElement, q: QElement, out_space: QSpace | None = None, out_keys: Iterable | None = None) -> QElement:
    """(p q)(w; e) = sum_s (-1)^{|q| s} p(w[:s]; q(w[s:]; e))."""
    if p.space.E is not q.space.F and p.space.E != q.space.F:
        raise ValueError("composition needs matching middle complexes")
    if not p.space.compatible(q.space):
        raise ValueError("algebra or truncation mismatch")
    sp = out_space or QSpace(q.space.alg, q.space.E, p.space.F, q.space.N)
    deg = p.degree + q.degree
    keys = sp.keys(deg) if out_keys is None else out_keys
    qd = q.degree
    out = {}
    for key in keys:
        w, j, b = key
        acc: dict = {}
        for s in range(len(w) + 1):
            qv = q.data.get((w[s:], j, b))
            if not qv:
                continue
            f = j + qd - (len(w) - s)
            val = p.evaluate(w[:s], f, qv)
            sign = -1 if (qd * s) % 2 else 1
            for c, x in val.items():
                _acc(acc, c, x * sign if sign < 0 else x)
        if acc:
            out[key] = acc
    return QElement(sp, deg, out)


def twisted_d(q: QElement, eta: QElement | None, phi: QElement | None, out_keys: Iterable | None = None) -> QElement:
    """d_{eta,phi} q = d_Q q + phi q - (-1)^|q| q eta."""
    keys = list(q.space.keys(q.degree + 1)) if out_keys is None else list(out_keys)
    out = d_Q(q, keys)
    if phi is not None:
        out = out + compose(phi, q, q.space, keys)
    if eta is not None:
        t = compose(q, eta, q.space, keys)
        out = out - t if q.degree % 2 == 0 else out + t
    return out


def insert_ones_H(q: QElement) -> QElement:
    """(Hq)(w; e) = sum_{m=0}^{k} (-1)^{|q|+m} q(w with 1 inserted after m letters; e)."""
    sp = q.space
    i = q.degree
    m = sp.alg.m
    out = {}
    for key in sp.keys(i - 1):
        w, j, b = key
        acc: dict = {}
        for pos in range(len(w) + 1):
            v = q.data.get((insert_one(w, pos, m), j, b))
            if v:
                s = -1 if (i + pos) % 2 else 1
                for c, x in v.items():
                    _acc(acc, c, x * s)
        if acc:
            out[key] = acc
    return QElement(sp, i - 1, out)


def power_series(x: QElement, unit: QElement, max_terms: int | None = None) -> QElement:
    """sum_{m>=0} x^m for a nilpotent degree-0 x (terminates when x^m = 0)."""
    total = unit
    term = unit
    limit = max_terms if max_terms is not None else 10_000
    for _ in range(limit):
        term = compose(term, x, unit.space)
        if term.is_zero():
            return total
        total = total + term
    raise ValueError("series did not terminate; element is not nilpotent at this truncation")


def inverse(g: QElement) -> QElement:
    """Inverse of 1 + n with n nilpotent (degree 0, E = F)."""
    one = identity(g.space)
    n = g - one
    return power_series(n.scale(-1), one)


# ---------------------------------------------------------------------------
# Maurer-Cartan elements


@dataclass
class MCReport:
    equation_violations: list = field(default_factory=list)  # (word, basis label, value)
    normalization_violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.equation_violations and not self.normalization_violations

    @property
    def equation_ok(self) -> bool:
        return not self.equation_violations

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "equation_violations": [
                {"word": [list(a) for a in w], "basis": lab, "value": val} for (w, lab, val) in self.equation_violations
            ],
            "normalization_violations": [
                {"word": [list(a) for a in w], "basis": lab, "value": val} for (w, lab, val) in self.normalization_violations
            ],
        }


def curvature(eta: QElement) -> QElement:
    """d_Q eta + eta^2."""
    return d_Q(eta) + compose(eta, eta, eta.space)


def _fmt_vec(space: QSpace, vec: Mapping) -> dict:
    ring = space.alg.ring
    return {str(c): ring.format(x) for c, x in sorted(vec.items())}


def check_mc(eta: QElement, normalized: bool = True) -> MCReport:
    """Violated entries of d_Q eta + eta^2 = 0 in Q/J^N and of P(eta) = 1_E(1)."""
    sp = eta.space
    if eta.degree != 1:
        raise ValueError("an MC element has degree 1")
    rep = MCReport()
    curv = curvature(eta)
    for (w, j, b), v in sorted(curv.data.items(), key=lambda kv: (len(kv[0][0]), kv[0])):
        rep.equation_violations.append((w, sp.E.labels[j][b], _fmt_vec(sp, v)))
    if normalized:
        diff = eta.P() - one_of_one(sp)
        for (w, j, b), v in sorted(diff.data.items(), key=lambda kv: (len(kv[0][0]), kv[0])):
            rep.normalization_violations.append((w, sp.E.labels[j][b], _fmt_vec(sp, v)))
    return rep


def weakify(strict: StrictLComplex, N: int, space: QSpace | None = None) -> QElement:
    """eta(u; e) = u . e on one-letter words, zero on all other word lengths."""
    strict.validate()
    alg = strict.algebra
    E = strict.complex
    sp = space or QSpace(alg, E, E, N)
    ring = alg.ring
    data = {}
    for lev in range(N):
        for alpha in compositions(alg.m, lev):
            u = alg.monomial(alpha)
            for j in E.degrees():
                for b in range(E.rank(j)):
                    vec = [ring.zero()] * E.rank(j)
                    vec[b] = ring.one()
                    img = strict.act(u, j, vec)
                    data[((alpha,), j, b)] = {c: x for c, x in enumerate(img) if x}
    return QElement(sp, 1, data)


def induced_action(eta: QElement, alpha: tuple, j: int, vec: Mapping) -> dict:
    """The operator e |-> eta(d^alpha; e) on E^j (a chain-level action)."""
    return eta.evaluate((tuple(alpha),), j, vec)


# ---------------------------------------------------------------------------
# homotopy transfer


@dataclass
class TransferData:
    a0: ChainMap  # E -> F
    b0: ChainMap  # F -> E
    K: Homotopy  # on E

    def homotopy_defect(self) -> dict:
        """Degrees where dK + Kd != b0 a0 - 1."""
        E = self.a0.source
        ring = E.ring
        bnd = self.K.boundary()
        bad = {}
        comp = self.a0.then(self.b0)
        for j in E.degrees():
            n = E.rank(j)
            target = [[comp.at(j)[r][c] - (ring.one() if r == c else ring.zero()) for c in range(n)] for r in range(n)]
            if bnd[j] != target:
                bad[j] = True
        return bad

    def validate(self) -> "TransferData":
        self.a0.validate()
        self.b0.validate()
        bad = self.homotopy_defect()
        if bad:
            raise ValueError(f"homotopy identity dK = b0 a0 - 1 fails in degrees {sorted(bad)}")
        return self


@dataclass
class NormalizationOutcome:
    success: bool
    gauge: QElement | None = None
    message: str = ""


@dataclass
class TransferResult:
    phi: QElement
    a: QElement
    normalized_input: bool  # P(phi) == 1_F(1) before the post-pass
    normalization: NormalizationOutcome | None = None
    phi_normalized: QElement | None = None
    a_normalized: QElement | None = None

    def report(self) -> dict:
        return {
            "mc_equation": check_mc(self.phi, normalized=False).equation_ok,
            "closedness": twisted_d(self.a, self.a_source_eta, self.phi).is_zero() if hasattr(self, "a_source_eta") else None,
            "normalized_before_pass": self.normalized_input,
            "normalization_success": None if self.normalization is None else self.normalization.success,
        }


def transfer(eta: QElement, t: TransferData, normalize: bool = True) -> TransferResult:
    """phi = a0 eta sum (K eta)^m b0 and a = a0 sum (eta K)^m.

    The series are finite: K eta vanishes on the empty word, so (K eta)^m
    vanishes on words shorter than m, and boundedness of E caps word length.
    """
    t.validate()
    spE = eta.space
    E, F = t.a0.source, t.a0.target
    if spE.E is not E:
        raise ValueError("eta must live on the source of a0")
    alg, N = spE.alg, spE.N
    spEF = QSpace(alg, E, F, N)
    spFE = QSpace(alg, F, E, N)
    spFF = QSpace(alg, F, F, N)
    a0 = from_chain_map(spEF, t.a0.maps)
    b0 = from_chain_map(spFE, t.b0.maps)
    K = from_chain_map(spE, t.K.maps, degree=-1)
    one_E = identity(spE)
    s_KE = power_series(compose(K, eta, spE), one_E)
    s_EK = power_series(compose(eta, K, spE), one_E)
    Y = compose(eta, s_KE, spE)
    phi = compose(compose(a0, Y, spEF), b0, spFF)
    a = compose(a0, s_EK, spEF)
    normalized = (phi.P() - one_of_one(spFF)).is_zero()
    res = TransferResult(phi, a, normalized)
    res.a_source_eta = eta
    if normalize:
        if normalized:
            res.normalization = NormalizationOutcome(True, identity(spFF), "already normalized")
            res.phi_normalized, res.a_normalized = phi, a
        else:
            out = normalize_mc(phi)
            res.normalization = out
            if out.success:
                g = out.gauge
                ginv = inverse(g)
                phin = compose(compose(g, phi, spFF) - d_Q(g), ginv, spFF)
                res.phi_normalized = phin
                res.a_normalized = compose(g, a, spEF)
    return res


def normalize_mc(phi: QElement, degree_slack: int = 0) -> NormalizationOutcome:
    """Find g with g^0 = 1 on words of J-level 0 solving g rho - d g - 1_F(1) g = 0, rho = P(phi).

    Then (g phi - d g) g^{-1} is normalized.  The unknown entries of g are
    polynomials of degree <= (max degree of the data) + ``degree_slack``;
    the resulting linear system over Q is solved exactly.
    """
    sp = phi.space
    alg = sp.alg
    ring = alg.ring
    rho = phi.P()
    iota = one_of_one(sp)
    unknown_keys = [k for k in sp.keys(0) if level(k[0]) == 0 and len(k[0]) > 0]
    one = identity(sp)
    if not unknown_keys:
        resid = compose(one, rho, sp) - compose(iota, one, sp)
        if resid.is_zero():
            return NormalizationOutcome(True, one, "no freedom needed")
        return NormalizationOutcome(False, None, "no level-0 freedom and P(phi) differs from 1_F(1)")
    # polynomial ansatz
    deg = max(
        [x.degree() for v in rho.data.values() for x in v.values()]
        + [x.degree() for j in sp.F.degrees() for row in sp.F.d(j) for x in row]
        + [0]
    ) + degree_slack
    monos = []
    for total in range(deg + 1):
        for e in _exponents(ring.nvars, total):
            monos.append(e)
    cols = []
    data = {}
    zj = _zero_jet(alg.m)
    for key in unknown_keys:
        f = sp.target_degree(0, key)
        vec = {}
        for c in range(sp.F.rank(f)):
            terms = {}
            for e in monos:
                idx = len(cols)
                cols.append((key, c, e))
                terms[(idx, zj)] = Poly.monomial(e)
            vec[c] = LinearForm(terms)
        data[key] = vec
    gsym = QElement(sp, 0, data)
    # g = 1 + gsym ; equation: g rho - d g - iota g = 0 on level-0 keys of degree 1
    out_keys = [k for k in sp.keys(1) if level(k[0]) == 0]
    lhs = compose(gsym, rho, sp, out_keys) - d_Q(gsym, out_keys) - compose(iota, gsym, sp, out_keys)
    const = compose(one, rho, sp, out_keys) - compose(iota, one, sp, out_keys)
    rows: dict = {}
    rhs: dict = {}

    def row_id(key, c, e):
        rid = (key, c, e)
        if rid not in rows:
            rows[rid] = len(rows)
        return rows[rid]

    mat = linalg.SparseMatrix(0, len(cols))
    for key, vec in lhs.data.items():
        for c, lf in vec.items():
            for idx, poly in _plain_terms(lf):
                for e, val in poly.terms.items():
                    mat.add(row_id(key, c, e), idx, val)
    for key, vec in const.data.items():
        for c, poly in vec.items():
            for e, val in poly.terms.items():
                r = row_id(key, c, e)
                rhs[r] = rhs.get(r, 0) - val
    mat.nrows = len(rows)
    b = [Fraction(rhs.get(r, 0)) for r in range(mat.nrows)]
    if mat.nrows == 0:
        return NormalizationOutcome(True, one, "trivially normalized")
    sol = linalg.solve(mat, b)
    if not sol.ok:
        return NormalizationOutcome(False, None, f"no gauge with polynomial degree <= {deg}")
    gdata = {k: dict(v) for k, v in one.data.items()}
    for idx, val in enumerate(sol.solution):
        if val:
            key, c, e = cols[idx]
            tgt = gdata.setdefault(key, {})
            _acc(tgt, c, Poly.monomial(e, val))
    g = QElement(sp, 0, gdata)
    return NormalizationOutcome(True, g, "solved")


def _exponents(n: int, total: int):
    return compositions(n, total)


def is_weak_equivalence(a: QElement, trials: int = 3, seed: int = 11) -> bool:
    """True iff the empty-word component P0(a) is a quasi-isomorphism."""
    sp = a.space
    if a.degree != 0:
        raise ValueError("weak morphisms have degree 0")
    cm = ChainMap(sp.E, sp.F, a.P0_matrices())
    if cm.defect():
        return False
    rep = homology_ranks_at_points(cone(cm), trials=trials, seed=seed)
    return rep.unanimous_zero()


# ---------------------------------------------------------------------------
# matrices of twisted differentials, graded pieces, HKR scan


def differential_matrix(space: QSpace, i: int, eta, phi, lev: int | None = None):
    """Matrix (over A) of d_{eta,phi}: Q^i -> Q^{i+1}, restricted to one J-level if given.

    Returns (rows, cols, entries) with entries[(r, c)] a ring element.
    """
    q = symbolic(space, i, lev)
    out_keys = space.keys(i + 1, lev)
    dq = twisted_d(q, eta, phi, out_keys)
    cols = space.coordinates(i, lev)
    rows = space.coordinates(i + 1, lev)
    cidx = {c: n for n, c in enumerate(cols)}
    ridx = {r: n for n, r in enumerate(rows)}
    entries = {}
    for key, vec in dq.data.items():
        for c, lf in vec.items():
            r = ridx.get(key + (c,))
            if r is None:
                continue
            for var, coeff in _plain_terms(lf):
                if var in cidx:
                    entries[(r, cidx[var])] = coeff
    return rows, cols, entries


def graded_piece(space: QSpace, eta, phi, p: int, window: tuple) -> FreeComplex:
    """The A-complex (J^p Q / J^{p+1}, d_{eta,phi}) in degrees window[0]..window[1]."""
    ring = space.alg.ring
    ranks = {}
    diffs = {}
    lo, hi = window
    for i in range(lo, hi + 1):
        ranks[i] = len(space.coordinates(i, p))
    for i in range(lo, hi):
        if ranks[i] and ranks[i + 1]:
            rows, cols, entries = differential_matrix(space, i, eta, phi, p)
            m = zero_matrix(ring, len(rows), len(cols))
            for (r, c), v in entries.items():
                m[r][c] = v
            diffs[i] = m
    return FreeComplex(ring, ranks, diffs)


def graded_piece_sparse(space: QSpace, eta, phi, p: int, window: tuple) -> tuple[dict, dict]:
    """Ranks and sparse differential matrices of the graded piece (no dense storage)."""
    lo, hi = window
    ranks = {i: len(space.coordinates(i, p)) for i in range(lo, hi + 1)}
    mats = {}
    for i in range(lo, hi):
        if ranks[i] and ranks[i + 1]:
            rows, cols, entries = differential_matrix(space, i, eta, phi, p)
            mats[i] = linalg.SparseMatrix(len(rows), len(cols), entries)
    return ranks, mats


@dataclass
class ScanRow:
    level: int
    report: HomologyReport
    window: tuple
    checked_degrees: list

    def acyclic(self) -> bool:
        return all(self.report.ranks.get(i, 0) == 0 for i in self.checked_degrees) and all(
            all(p.get(i, 0) == 0 for p in self.report.per_point) for i in self.checked_degrees
        )


def graded_acyclicity_scan(
    eta: QElement, phi: QElement, space: QSpace, k_max: int, window: tuple = (-2, 2), trials: int = 3, seed: int = 20240601
) -> dict:
    """Homology of each graded piece J^k Q/J^{k+1} for k = 0..k_max.

    Homology is reported for degrees window[0]+1 .. window[1]-1 (both
    neighbours are materialized); the window edges are not meaningful.
    """
    if space.N <= k_max:
        raise ValueError("truncation must exceed k_max to see the graded piece")
    lo, hi = window
    if hi - lo < 2:
        raise ValueError("window too narrow: need at least three degrees")
    out = {}
    for k in range(k_max + 1):
        ranks, mats = graded_piece_sparse(space, eta, phi, k, (lo, hi))
        checked = list(range(lo + 1, hi))
        rep = sparse_homology_at_points(space.alg.ring, ranks, mats, trials, seed, (lo + 1, hi - 1))
        out[k] = ScanRow(k, rep, window, checked)
    return out


def normequiv_quotient(space: QSpace, window: tuple) -> FreeComplex:
    """The complex of maps on TA-words of length >= 1 (J-level 0) with d_{1(1),1(1)}."""
    if space.E is not space.F:
        raise ValueError("needs E = F")
    iota = one_of_one(space)
    ring = space.alg.ring
    lo, hi = window

    def coords(i):
        return [c for c in space.coordinates(i, 0) if len(c[0]) > 0]

    ranks = {i: len(coords(i)) for i in range(lo, hi + 1)}
    diffs = {}
    for i in range(lo, hi):
        cols, rows = coords(i), coords(i + 1)
        if not cols or not rows:
            continue
        q = symbolic(space, i, 0).restrict(lambda k: len(k[0]) > 0)
        out_keys = [k for k in space.keys(i + 1, 0) if len(k[0]) > 0]
        dq = twisted_d(q, iota, iota, out_keys)
        cidx = {c: n for n, c in enumerate(cols)}
        ridx = {r: n for n, r in enumerate(rows)}
        m = zero_matrix(ring, len(rows), len(cols))
        for key, vec in dq.data.items():
            for c, lf in vec.items():
                r = ridx.get(key + (c,))
                if r is None:
                    continue
                for var, coeff in _plain_terms(lf):
                    if var in cidx:
                        m[r][cidx[var]] = coeff
        diffs[i] = m
    return FreeComplex(ring, ranks, diffs)


# ---------------------------------------------------------------------------
# the bar complex d^+ and the Hom identification


@dataclass
class BarComplex:
    """L (x)_A TL (x)_A E with differential d^+_eta, basis 1 (x) w (x) e_b."""

    complex: FreeComplex  # over L
    basis: dict  # degree -> list of (word, j, b)
    eta: QElement


def bar_dplus(eta: QElement, max_length: int) -> BarComplex:
    """d^+(1 (x) w (x) e) = 1 (x) D(w (x) e) - u_1 (x) w[1:] (x) e + sum_s (-1)^s 1 (x) w[:s] (x) eta(w[s:]; e).

    Words are limited to J-level <= N-1 and length <= max_length; neither
    bound is ever increased by d^+, so the result is a subcomplex.
    """
    sp = eta.space
    alg = sp.alg
    E = sp.E
    basis: dict = {}
    for k in range(max_length + 1):
        for w in sp.words(k):
            for j in E.degrees():
                for b in range(E.rank(j)):
                    basis.setdefault(j - k, []).append((w, j, b))
    index = {deg: {key: n for n, key in enumerate(keys)} for deg, keys in basis.items()}
    diffs = {}
    for deg, keys in basis.items():
        tgt = index.get(deg + 1)
        if not tgt:
            continue
        m = zero_matrix(alg, len(tgt), len(keys))

        def put(key, col, coeff):
            r = tgt[key]
            m[r][col] = m[r][col] + coeff

        for col, (w, j, b) in enumerate(keys):
            k = len(w)
            for l in range(1, k):
                put((merge(w, l), j, b), col, alg.scalar(1 if l % 2 else -1))
            dcol = _d_E_column(E, j, b)
            if dcol:
                s = -1 if k % 2 else 1
                for (w2, c), g in sp.reduce(w, dcol).items():
                    put((w2, j + 1, c), col, alg.scalar(g * s))
            if k >= 1:
                put((w[1:], j, b), col, -alg.monomial(w[0]))
            for s_ in range(k + 1):
                vec = eta.get(w[s_:], j, b)
                if not vec:
                    continue
                f = j + 1 - (k - s_)
                sign = -1 if s_ % 2 else 1
                for (w2, c), g in sp.reduce(w[:s_], vec).items():
                    put((w2, f, c), col, alg.scalar(g * sign))
        diffs[deg] = m
    cx = FreeComplex(alg, {d: len(k) for d, k in basis.items()}, diffs).validate()
    return BarComplex(cx, basis, eta)


def hom_identification_defect(bar: BarComplex, q: QElement, strict_F: StrictLComplex) -> list:
    """Keys where d_F Phi - (-1)^i Phi d^+ differs from d_{eta,phi} q.

    Phi(1 (x) w (x) e) = q(w; e) is the L-linear map attached to q and phi is
    the weakified strict structure of F.  Only keys whose word length is
    strictly below the bar length bound are compared (the bound truncates
    the domain).
    """
    sp = q.space
    F = sp.F
    i = q.degree
    ring = sp.alg.ring
    phi = weakify(strict_F, sp.N, QSpace(sp.alg, F, F, sp.N))
    max_len = max(len(k[0]) for keys in bar.basis.values() for k in keys)
    wanted = [k for k in sp.keys(i + 1) if len(k[0]) < max_len]
    sign = -1 if i % 2 else 1
    lhs_data = {}
    for deg, keys in bar.basis.items():
        tgt_keys = bar.basis.get(deg + 1, [])
        dm = bar.complex.d(deg)
        pos = {key: n for n, key in enumerate(keys)}
        for key in wanted:
            if key not in pos:
                continue
            col = pos[key]
            w, j, b = key
            acc: dict = {}
            val = q.get(w, j, b)
            if val:
                f = j + i - len(w)
                dF = F.d(f)
                for c, x in val.items():
                    for r in range(F.rank(f + 1)):
                        if dF[r][c]:
                            _acc(acc, r, x * dF[r][c])
            for r, (w2, j2, c2) in enumerate(tgt_keys):
                coeff = dm[r][col]
                if not coeff:
                    continue
                v = q.get(w2, j2, c2)
                if not v:
                    continue
                f = j2 + i - len(w2)
                vec = [v.get(c, ring.zero()) for c in range(F.rank(f))]
                img = strict_F.act(coeff, f, vec)
                for c, x in enumerate(img):
                    if x:
                        _acc(acc, c, x * (-sign))
            if acc:
                lhs_data[key] = acc
    lhs = QElement(sp, i + 1, lhs_data)
    rhs = twisted_d(q, bar.eta, phi, wanted)
    return sorted((lhs - rhs).data)


# ---------------------------------------------------------------------------
# the augmented complex Q(L,E)^+ and the counit


@dataclass
class WStar:
    """Hom from the weak bimodule L into (E, eta), with its augmentation.

    A degree-i element has components q_n : T^n L -> E^{i-n+1}, n >= 0 (n = 0
    is the augmentation slot).  The last letter of a word is the module slot.
    """

    eta: QElement

    @property
    def space(self) -> QSpace:
        return self.eta.space

    def keys(self, i: int, lev: int | None = None) -> list:
        sp = self.space
        out = []
        for e in sp.E.degrees():
            n = i + 1 - e
            if n < 0:
                continue
            for w in sp.words(n):
                if lev is None or level(w) == lev:
                    out.append(w)
        return out

    def coordinates(self, i: int, lev: int | None = None) -> list:
        sp = self.space
        out = []
        for w in self.keys(i, lev):
            e = i + 1 - len(w)
            for c in range(sp.E.rank(e)):
                out.append((w, c))
        return out

    def differential(self, q: dict, i: int, out_words: Iterable) -> dict:
        """(d^+ q)(v) = d_E q(v) - (-1)^i sum_l (-1)^{l+1} q(merge_l v) + sum_{s=0}^{n} (-1)^{i s} eta(v[:s]; q(v[s:]))."""
        sp = self.space
        E = sp.E
        sign_i = -1 if i % 2 else 1
        out = {}
        for v in out_words:
            n = len(v)
            acc: dict = {}
            val = q.get(v)
            if val:
                e = i + 1 - n
                dm = E.d(e)
                for c, x in val.items():
                    for r in range(E.rank(e + 1)):
                        if dm[r][c]:
                            _acc(acc, r, x * dm[r][c])
            for l in range(1, n):
                w2 = merge(v, l)
                val = q.get(w2)
                if val:
                    s = -sign_i * (1 if l % 2 else -1)
                    for c, x in val.items():
                        _acc(acc, c, x * s)
            for s_ in range(n + 1):
                val = q.get(v[s_:])
                if not val:
                    continue
                e = i + 1 - (n - s_)
                sign = -1 if (i * s_) % 2 else 1
                for c, x in self.eta.evaluate(v[:s_], e, val).items():
                    _acc(acc, c, x * sign)
            if acc:
                out[v] = acc
        return out

    def symbolic(self, i: int, lev: int | None = None) -> dict:
        one = self.space.alg.ring.one()
        sp = self.space
        z = _zero_jet(sp.alg.m)
        q = {}
        for w in self.keys(i, lev):
            e = i + 1 - len(w)
            q[w] = {c: LinearForm({((w, c), z): one}) for c in range(sp.E.rank(e))}
        return q

    def graded_piece(self, p: int, window: tuple) -> FreeComplex:
        ring = self.space.alg.ring
        lo, hi = window
        ranks = {i: len(self.coordinates(i, p)) for i in range(lo, hi + 1)}
        diffs = {}
        for i in range(lo, hi):
            cols, rows = self.coordinates(i, p), self.coordinates(i + 1, p)
            if not cols or not rows:
                continue
            dq = self.differential(self.symbolic(i, p), i, self.keys(i + 1, p))
            cidx = {c: n for n, c in enumerate(cols)}
            ridx = {r: n for n, r in enumerate(rows)}
            m = zero_matrix(ring, len(rows), len(cols))
            for w, vec in dq.items():
                for c, lf in vec.items():
                    r = ridx.get((w, c))
                    if r is None:
                        continue
                    for var, coeff in _plain_terms(lf):
                        if var in cidx:
                            m[r][cidx[var]] = coeff
            diffs[i] = m
        return FreeComplex(ring, ranks, diffs)

    def square_defect(self, i: int) -> bool:
        """True when d^+ d^+ = 0 on all degree-i coordinates."""
        q = self.symbolic(i)
        d1 = self.differential(q, i, self.keys(i + 1))
        d2 = self.differential(d1, i + 1, self.keys(i + 2))
        return not d2

    def acyclicity_certificate(self, levels: Iterable[int], window: tuple, trials: int = 3, seed: int = 5) -> dict:
        """Homology of each J-level graded piece in the interior of ``window``."""
        lo, hi = window
        out = {}
        for p in levels:
            cx = self.graded_piece(p, window)
            out[p] = homology_ranks_at_points(cx, trials=trials, seed=seed, window=(lo + 1, hi - 1))
        return out

    # the counit xi(u_1..u_k; f) = f(u_1..u_k, 1)
    def counit_defect(self, max_word_length: int) -> list:
        """Words u where d_{psi,eta}(xi)(u; f) != 0 for a generic f.

        psi is the strict action of L on W* by right multiplication in the
        module slot.  f is symbolic, so a zero result is an exact identity.
        """
        sp = self.space
        m = sp.alg.m
        one_letter = (0,) * m
        bad = []
        lo_e, hi_e = sp.E.lo, sp.E.hi
        for k in range(max_word_length + 1):
            for u in sp.words(k):
                for fdeg in range(lo_e - 1, hi_e + max_word_length + 2):
                    res = self._counit_closedness(u, fdeg, one_letter)
                    if res:
                        bad.append((u, fdeg))
        return bad

    def _counit_closedness(self, u: tuple, fdeg: int, one_letter: tuple) -> dict:
        """Value of d_{psi,eta}(xi) on (u; f) for symbolic f of degree fdeg, as {c: LinearForm}.

        xi(v; f) = (-1)^{|v| |f|} f(v, 1): the Koszul sign of moving the word
        past f is needed for closedness.
        """
        sp = self.space
        k = len(u)
        # f lives in W* itself, so the augmentation slot (empty word) is absent
        f = {w: v for w, v in self.symbolic(fdeg).items() if w}
        w = u + (one_letter,)
        df = self.differential(f, fdeg, [w])

        def xi(elem, deg, word):
            val = elem.get(word + (one_letter,), {})
            if (len(word) * deg) % 2:
                return {c: -x for c, x in val.items()}
            return val

        acc: dict = {}
        # d_E xi(u; f)
        val = xi(f, fdeg, u)
        if val:
            e = fdeg - k
            dm = sp.E.d(e)
            for c, x in val.items():
                for r in range(sp.E.rank(e + 1)):
                    if dm[r][c]:
                        _acc(acc, r, x * dm[r][c])
        # - xi(delta u; f)
        for l in range(1, k):
            s = -1 if l % 2 else 1
            for c, x in xi(f, fdeg, merge(u, l)).items():
                _acc(acc, c, x * s)
        # - (-1)^k xi(u; d f)
        s = -1 if k % 2 == 0 else 1
        for c, x in xi(df, fdeg + 1, u).items():
            _acc(acc, c, x * s)
        # + sum_s eta(u[:s]; xi(u[s:]; f))
        for s_ in range(k + 1):
            val = xi(f, fdeg, u[s_:])
            if not val:
                continue
            e = fdeg - (k - s_)
            for c, x in self.eta.evaluate(u[:s_], e, val).items():
                _acc(acc, c, x)
        # - (xi psi)(u; f) = -(-1)^{k-1} xi(u[:k-1]; u_k . f), (u_k . f)(v) = f(v u_k)
        if k >= 1:
            s = -1 if (k - 1) % 2 == 0 else 1
            if ((k - 1) * fdeg) % 2:
                s = -s
            for c, x in f.get(u[:-1] + (u[-1],), {}).items():
                _acc(acc, c, x * s)
        return acc

    def augmentation_left_inverse(self) -> bool:
        """P0(xi) after the augmentation E -> W*, e |-> (v |-> eta(v; e)), is the identity on E."""
        sp = self.space
        m = sp.alg.m
        ring = sp.alg.ring
        for j in sp.E.degrees():
            for b in range(sp.E.rank(j)):
                img = self.eta.evaluate(((0,) * m,), j, {b: ring.one()})
                if img != {b: ring.one()}:
                    return False
        return True


def w_star(eta: QElement) -> WStar:
    return WStar(eta)


# ---------------------------------------------------------------------------
# JSON


def element_to_json(q: QElement) -> dict:
    sp = q.space
    ring = sp.alg.ring
    entries = []
    for (w, j, b), vec in sorted(q.data.items(), key=lambda kv: (len(kv[0][0]), kv[0])):
        f = j + q.degree - len(w)
        value = [ring.format(vec.get(c, ring.zero())) for c in range(sp.F.rank(f))]
        entries.append({"word": [list(a) for a in w], "basis": sp.E.labels[j][b], "value": value})
    return {"degree": q.degree, "truncation": sp.N, "entries": entries}


def element_from_json(space: QSpace, data: Mapping, degree: int = 1) -> QElement:
    ring = space.alg.ring
    label_index = {}
    for j in space.E.degrees():
        for b, lab in enumerate(space.E.labels[j]):
            label_index[lab] = (j, b)
    if int(data.get("truncation", space.N)) != space.N:
        raise ValueError("truncation mismatch between element and space")
    deg = int(data.get("degree", degree))
    out = {}
    for n, ent in enumerate(data.get("entries", [])):
        try:
            w = tuple(tuple(int(x) for x in a) for a in ent["word"])
            j, b = label_index[str(ent["basis"])]
        except KeyError as exc:
            raise ValueError(f"entry {n}: unknown field or basis label {exc}") from exc
        if any(len(a) != space.alg.m for a in w):
            raise ValueError(f"entry {n}: multi-index length must be {space.alg.m}")
        if level(w) > space.N - 1:
            raise ValueError(f"entry {n}: word level exceeds truncation")
        f = j + deg - len(w)
        vals = ent["value"]
        if len(vals) != space.F.rank(f):
            raise ValueError(f"entry {n}: value must have length {space.F.rank(f)}")
        out[(w, j, b)] = {c: ring.parse(str(x)) for c, x in enumerate(vals) if str(x).strip() not in ("0", "")}
    return QElement(space, deg, out)


# ---------------------------------------------------------------------------
# generated transfer instances


def _rand_invertible(rng: random.Random, n: int) -> tuple[list, list]:
    """A random unitriangular-by-permutation rational matrix and its inverse."""
    while True:
        m = [[Fraction(rng.randint(-2, 2)) if r != c else Fraction(1) for c in range(n)] for r in range(n)]
        for r in range(n):
            for c in range(r):
                m[r][c] = Fraction(0) if rng.random() < 0.5 else m[r][c]
        if n == 0:
            return m, m
        flat = linalg.SparseMatrix.from_dense(m)
        if linalg.rank(flat) == n:
            inv = []
            cols = []
            for c in range(n):
                e = [Fraction(int(r == c)) for r in range(n)]
                cols.append(linalg.solve(flat, e).solution)
            inv = [[cols[c][r] for c in range(n)] for r in range(n)]
            return m, inv


def _rand_complex(rng: random.Random, ranks: dict) -> dict:
    """Random rational differentials d^i with d^{i+1} d^i = 0 (built from ranks of factors)."""
    diffs = {}
    degs = sorted(ranks)
    prev = None
    for i in degs:
        if i + 1 not in ranks:
            prev = None
            continue
        rows, cols = ranks[i + 1], ranks[i]
        # d^i = U V with V killing the image of the previous differential
        if prev is None:
            m = [[Fraction(rng.randint(-2, 2)) for _ in range(cols)] for _ in range(rows)]
        else:
            # rows of d^i must annihilate the image of prev: choose them in the left kernel of prev
            left = linalg.nullspace(linalg.SparseMatrix.from_dense([list(col) for col in zip(*prev)]))
            m = []
            for _ in range(rows):
                row = [Fraction(0)] * cols
                for v in left:
                    c = rng.randint(-1, 1)
                    if c:
                        row = [a + c * b for a, b in zip(row, v)]
                m.append(row)
        diffs[i] = m
        prev = m
    return diffs


@dataclass
class TransferInstance:
    eta: QElement
    data: TransferData
    strict: StrictLComplex
    sdr: bool


def random_transfer_instance(alg: FilteredPBWAlgebra, N: int, seed: int, sdr: bool = True) -> TransferInstance:
    """E = g (F + Cone(id_C)) g^{-1} with eta from a gradient connection on E.

    F and C are random bounded complexes with constant entries; a0, b0 are the
    projection and inclusion of F and K = -h on the cone.  With ``sdr=False``
    a0 and K are perturbed (a0 + [d,Z], K + b0 Z + [d,Y]) so the side
    conditions fail while dK + Kd = b0 a0 - 1 still holds.
    """
    rng = random.Random(seed)
    R = alg.ring
    lo = rng.randint(-1, 0)
    fr = {lo + t: rng.randint(1, 2) for t in range(rng.randint(1, 2))}
    cr = {lo + t: rng.randint(0, 1) for t in range(-1, 2)}
    cr = {i: r for i, r in cr.items() if r}
    dF = _rand_complex(rng, fr)
    dC = _rand_complex(rng, cr)
    # cone(id_C): degree i piece C^i + C^{i+1}
    degs = sorted(set(fr) | {i for i in cr} | {i - 1 for i in cr})
    ranks = {}
    blocks = {}
    for i in degs:
        f, c0, c1 = fr.get(i, 0), cr.get(i, 0), cr.get(i + 1, 0)
        ranks[i] = f + c0 + c1
        blocks[i] = (f, c0, c1)
    ranks = {i: r for i, r in ranks.items() if r}
    degs = sorted(ranks)

    def zeros(r, c):
        return [[Fraction(0)] * c for _ in range(r)]

    def get(ms, i, r, c):
        return ms.get(i, zeros(r, c)) if r and c else zeros(r, c)

    d0 = {}
    for i in degs:
        if i + 1 not in ranks:
            continue
        f, c0, c1 = blocks[i]
        g, e0, e1 = blocks[i + 1]
        m = zeros(ranks[i + 1], ranks[i])
        dfi = get(dF, i, g, f)
        for r in range(g):
            for c in range(f):
                m[r][c] = dfi[r][c]
        dci = get(dC, i, e0, c0)
        dci1 = get(dC, i + 1, e1, c1)
        for r in range(e0):
            for c in range(c0):
                m[g + r][f + c] = dci[r][c]
            if r < c1:
                m[g + r][f + c0 + r] = Fraction(1)
        for r in range(e1):
            for c in range(c1):
                m[g + e0 + r][f + c0 + c] = -dci1[r][c]
        d0[i] = m
    a = {}
    b = {}
    K = {}
    for i in degs:
        f, c0, c1 = blocks[i]
        if f:
            a[i] = [[Fraction(int(r == c)) for c in range(ranks[i])] for r in range(f)]
            b[i] = [[Fraction(int(r == c)) for c in range(f)] for r in range(ranks[i])]
        if i - 1 in ranks:
            pf, p0, p1 = blocks[i - 1]
            m = zeros(ranks[i - 1], ranks[i])
            # h(c, c') = (0, c): C^i sits in position p1 of degree i-1
            for t in range(c0):
                m[pf + p0 + t][f + t] = Fraction(-1)
            K[i] = m
    # conjugate by constant g
    gs = {i: _rand_invertible(rng, ranks[i]) for i in degs}

    def mm(x, y):
        return [[sum((x[r][k] * y[k][c] for k in range(len(y))), Fraction(0)) for c in range(len(y[0]) if y else 0)] for r in range(len(x))]

    dE = {i: mm(mm(gs[i + 1][0], d0[i]), gs[i][1]) for i in d0}
    a = {i: mm(a[i], gs[i][1]) for i in a}
    b = {i: mm(gs[i][0], b[i]) for i in b}
    K = {i: mm(mm(gs[i - 1][0], K[i]), gs[i][1]) for i in K}
    to_R = lambda m: [[R.const(x) for x in row] for row in m]
    E = FreeComplex(R, ranks, {i: to_R(m) for i, m in dE.items()}).validate()
    F = FreeComplex(R, fr, {i: to_R(m) for i, m in dF.items()}).validate()
    if not sdr:
        Z = {}
        for i in degs:
            if fr.get(i - 1):
                Z[i] = [[Fraction(rng.randint(-1, 1)) for _ in range(ranks[i])] for _ in range(fr[i - 1])]
        Y = {}
        for i in degs:
            if ranks.get(i - 2):
                Y[i] = [[Fraction(rng.randint(-1, 1)) for _ in range(ranks[i])] for _ in range(ranks[i - 2])]

        def d_at(ds, i, rows, cols):
            return ds.get(i, zeros(rows, cols))

        # a0 += dF Z + Z dE ; K += b0 Z + dE Y - Y dE
        for i in degs:
            f = fr.get(i, 0)
            if not f:
                continue
            extra = zeros(f, ranks[i])
            if i in Z:
                t = mm(d_at(dF, i - 1, f, fr[i - 1]), Z[i])
                extra = [[u + v for u, v in zip(r1, r2)] for r1, r2 in zip(extra, t)]
            if i + 1 in Z:
                t = mm(Z[i + 1], dE[i]) if i in dE else zeros(f, ranks[i])
                extra = [[u + v for u, v in zip(r1, r2)] for r1, r2 in zip(extra, t)]
            a[i] = [[u + v for u, v in zip(r1, r2)] for r1, r2 in zip(a.get(i, zeros(f, ranks[i])), extra)]
        for i in degs:
            if i - 1 not in ranks:
                continue
            m = K.get(i, zeros(ranks[i - 1], ranks[i]))
            if i in Z and (i - 1) in b:
                t = mm(b[i - 1], Z[i])
                m = [[u + v for u, v in zip(r1, r2)] for r1, r2 in zip(m, t)]
            if i in Y:
                if i - 2 in dE:
                    t = mm(dE[i - 2], Y[i])
                    m = [[u + v for u, v in zip(r1, r2)] for r1, r2 in zip(m, t)]
            if i + 1 in Y and i in dE:
                t = mm(Y[i + 1], dE[i])
                m = [[u - v for u, v in zip(r1, r2)] for r1, r2 in zip(m, t)]
            K[i] = m
    data = TransferData(
        ChainMap(E, F, {i: to_R(m) for i, m in a.items()}),
        ChainMap(F, E, {i: to_R(m) for i, m in b.items()}),
        Homotopy(E, {i: to_R(m) for i, m in K.items()}),
    )
    # gradient connection d_i . e = D_i(f) e for a random polynomial f
    xs = [R.var(t) for t in range(alg.d)]
    pot = R.zero()
    for t in range(alg.d):
        pot = pot + R.const(rng.randint(-2, 2)) * xs[t] * xs[t] + R.const(rng.randint(-2, 2)) * xs[t]
    if alg.d >= 2:
        pot = pot + R.const(rng.randint(-1, 1)) * xs[0] * xs[1]
    grads = [R.diff(pot, t) for t in range(alg.m)]
    gamma = {i: [[[grads[t] if r == c else R.zero() for c in range(ranks[i])] for r in range(ranks[i])] for t in range(alg.m)] for i in degs}
    strict = StrictLComplex(alg, E, gamma)
    eta = weakify(strict, N)
    return TransferInstance(eta, data, strict, sdr)
