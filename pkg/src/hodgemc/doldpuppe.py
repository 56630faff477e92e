"""Dold-Puppe: the cosimplicial complexes D(n), simplicial levels Hom(D(n), A),
their products and homotopy groups, and the affine construction for augmented
dg-categories.

Conventions: the basis of D(n) in degree -k is the set of strictly monotone
injections [k] -> [n], stored as increasing tuples of length k+1.  The
differential is d(phi) = sum_i (-1)^i phi o d_i, where d_i skips the i-th
element.  kappa(phi) = sum_i phi[:i+1] (x) phi[i:] (front face (x) back face).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

from . import linalg
from .complexes import QQ, FreeComplex, homology_ranks, tensor


# ---------------------------------------------------------------------------
# D(n)


@lru_cache(maxsize=None)
def injections(k: int, n: int) -> tuple:
    """Strictly monotone maps [k] -> [n] as increasing tuples."""
    if k < 0 or k > n:
        return ()
    return tuple(itertools.combinations(range(n + 1), k + 1))


def boundary(phi: tuple) -> list[tuple[int, tuple]]:
    """d(phi) as (sign, face) pairs."""
    if len(phi) == 1:
        return []
    return [((-1) ** i, phi[:i] + phi[i + 1:]) for i in range(len(phi))]


def kappa(phi: tuple) -> list[tuple[tuple, tuple]]:
    return [(phi[: i + 1], phi[i:]) for i in range(len(phi))]


@dataclass
class DnComplex:
    n: int
    complex: FreeComplex
    basis: dict  # degree -> list of injections

    def index(self, phi: tuple) -> int:
        return self.basis[-(len(phi) - 1)].index(phi)


@lru_cache(maxsize=None)
def build_Dn(n: int) -> DnComplex:
    if n < 0:
        raise ValueError("n must be non-negative")
    basis = {-k: list(injections(k, n)) for k in range(n + 1)}
    idx = {deg: {phi: i for i, phi in enumerate(b)} for deg, b in basis.items()}
    diffs = {}
    for deg in range(-n, 0):
        rows, cols = len(basis[deg + 1]), len(basis[deg])
        m = [[Fraction(0)] * cols for _ in range(rows)]
        for c, phi in enumerate(basis[deg]):
            for s, face in boundary(phi):
                m[idx[deg + 1][face]][c] += s
        diffs[deg] = m
    labels = {deg: ["".join(map(str, phi)) for phi in b] for deg, b in basis.items()}
    cx = FreeComplex(QQ, {deg: len(b) for deg, b in basis.items()}, diffs, labels).validate()
    return DnComplex(n, cx, basis)


def _chain(terms) -> dict:
    out: dict = {}
    for key, c in terms:
        out[key] = out.get(key, 0) + c
    return {k: v for k, v in out.items() if v}


def d_chain(x: Mapping) -> dict:
    """Differential on a chain {phi: coeff}."""
    return _chain((face, c * s) for phi, c in x.items() for s, face in boundary(phi))


def d_tensor(x: Mapping) -> dict:
    """Differential on D(n) (x) D(n) chains {(a, b): coeff} with the Koszul sign (-1)^{|a|}."""
    terms = []
    for (a, b), c in x.items():
        for s, fa in boundary(a):
            terms.append(((fa, b), c * s))
        sign = (-1) ** (len(a) - 1)
        for s, fb in boundary(b):
            terms.append(((a, fb), c * s * sign))
    return _chain(terms)


def kappa_check(n: int) -> dict:
    """Coassociativity (kappa (x) 1) kappa = (1 (x) kappa) kappa and kappa d = d kappa on every basis element."""
    coassoc_bad = []
    chain_bad = []
    for k in range(n + 1):
        for phi in injections(k, n):
            left = _chain(((a1, a2, b), 1) for a, b in kappa(phi) for a1, a2 in kappa(a))
            right = _chain(((a, b1, b2), 1) for a, b in kappa(phi) for b1, b2 in kappa(b))
            if left != right:
                coassoc_bad.append(phi)
            lhs = _chain(((a, b), c) for face, c in d_chain({phi: 1}).items() for a, b in kappa(face))
            rhs = d_tensor(_chain(((a, b), 1) for a, b in kappa(phi)))
            if lhs != rhs:
                chain_bad.append(phi)
    return {"n": n, "coassociative": not coassoc_bad, "chain_map": not chain_bad, "coassoc_failures": coassoc_bad, "chain_failures": chain_bad}


def induced_map(theta: Sequence[int], phi: tuple) -> tuple | None:
    """D(theta)(phi) = theta o phi if injective, else None (zero)."""
    img = tuple(theta[i] for i in phi)
    return img if len(set(img)) == len(img) else None


def functoriality_check(n: int, trials: int = 20, seed: int = 3) -> bool:
    """D(theta o theta') = D(theta) D(theta') and each D(theta) is a chain map, for random monotone maps."""
    import random

    rng = random.Random(seed)
    for _ in range(trials):
        a, b, c = sorted(rng.randint(0, n) for _ in range(3))
        t1 = tuple(sorted(rng.randint(0, b) for _ in range(a + 1)))
        t2 = tuple(sorted(rng.randint(0, c) for _ in range(b + 1)))
        comp = tuple(t2[i] for i in t1)
        for k in range(a + 1):
            for phi in injections(k, a):
                x = induced_map(t1, phi)
                lhs = induced_map(t2, x) if x is not None else None
                if lhs != induced_map(comp, phi):
                    return False
                # chain map: D(t1)(d phi) = d D(t1)(phi)
                left = _chain((induced_map(t1, f), s) for s, f in boundary(phi) if induced_map(t1, f) is not None)
                right = d_chain({x: 1}) if x is not None else {}
                if left != right:
                    return False
    return True


# ---------------------------------------------------------------------------
# simplicial levels Hom(D(n), A)


def _rational(c: FreeComplex) -> None:
    if c.ring != QQ:
        raise ValueError("Dold-Puppe levels need a complex over Q")


@dataclass
class SimplicialLevel:
    """Chain maps D(n) -> A: coordinates (phi, c) with phi in degree -k and c a basis index of A^{-k}."""

    A: FreeComplex
    n: int
    coords: list
    basis: list  # list of ambient vectors (nullspace basis)
    free: list  # free coordinate index of each basis vector

    @property
    def dim(self) -> int:
        return len(self.basis)

    def to_ambient(self, coeffs: Sequence) -> list:
        out = [Fraction(0)] * len(self.coords)
        for c, v in zip(coeffs, self.basis):
            if c:
                for i, x in enumerate(v):
                    if x:
                        out[i] += c * x
        return out

    def from_ambient(self, vec: Sequence) -> list:
        """Coefficients of an ambient chain map in the level basis (reads the free coordinates)."""
        coeffs = [Fraction(vec[f]) for f in self.free]
        if self.to_ambient(coeffs) != [Fraction(x) for x in vec]:
            raise ValueError("vector is not a chain map D(n) -> A")
        return coeffs

    def value(self, vec: Sequence, phi: tuple) -> list:
        """f(phi) in A^{-k} for an ambient vector."""
        k = len(phi) - 1
        return [vec[self._pos[(phi, c)]] for c in range(self.A.rank(-k))]

    def contains(self, vec: Sequence) -> bool:
        try:
            self.from_ambient(vec)
            return True
        except ValueError:
            return False

    def __post_init__(self):
        self._pos = {key: i for i, key in enumerate(self.coords)}


_LEVEL_CACHE: dict = {}


def dp_level(A: FreeComplex, n: int) -> SimplicialLevel:
    """DP(A)_n = Hom(D(n), A), as the solution space of the chain-map equations."""
    _rational(A)
    key = (id(A), n)
    hit = _LEVEL_CACHE.get(key)
    if hit is not None and hit[0] is A:
        return hit[1]
    coords = [(phi, c) for k in range(n + 1) for phi in injections(k, n) for c in range(A.rank(-k))]
    pos = {key: i for i, key in enumerate(coords)}
    rows = []
    # d_A f(phi) - f(d phi) = 0 in A^{-k+1}
    for k in range(n + 1):
        for phi in injections(k, n):
            dA = A.d(-k)
            for r in range(A.rank(-k + 1)):
                row = {}
                for c in range(A.rank(-k)):
                    if dA[r][c]:
                        row[pos[(phi, c)]] = row.get(pos[(phi, c)], 0) + dA[r][c]
                for s, face in boundary(phi):
                    p = pos[(face, r)]
                    row[p] = row.get(p, 0) - s
                rows.append(row)
    mat = linalg.SparseMatrix(len(rows), len(coords))
    for i, row in enumerate(rows):
        for j, v in row.items():
            mat.add(i, j, Fraction(v))
    if len(coords) == 0:
        basis, free = [], []
    elif mat.nrows == 0:
        basis = [[Fraction(int(i == j)) for i in range(len(coords))] for j in range(len(coords))]
        free = list(range(len(coords)))
    else:
        _, pivots = linalg.rref(mat)
        free = [j for j in range(len(coords)) if j not in set(pivots)]
        basis = linalg.nullspace(mat)
    lvl = SimplicialLevel(A, n, coords, basis, free)
    _LEVEL_CACHE[key] = (A, lvl)
    return lvl


def pullback(A: FreeComplex, theta: Sequence[int], m: int, n: int, vec: Sequence) -> list:
    """theta^*: DP_n -> DP_m for monotone theta: [m] -> [n], on ambient vectors."""
    src = dp_level(A, n)
    tgt = dp_level(A, m)
    out = [Fraction(0)] * len(tgt.coords)
    for i, (phi, c) in enumerate(tgt.coords):
        img = induced_map(theta, phi)
        if img is not None:
            out[i] = Fraction(vec[src._pos[(img, c)]])
    return out


def coface(n: int, i: int) -> tuple:
    """delta_i: [n-1] -> [n] skipping i."""
    return tuple(j if j < i else j + 1 for j in range(n))


def codegeneracy(n: int, i: int) -> tuple:
    """sigma_i: [n+1] -> [n] hitting i twice."""
    return tuple(j if j <= i else j - 1 for j in range(n + 2))


def face_matrix(A: FreeComplex, n: int, i: int) -> list:
    """d_i: DP_n -> DP_{n-1} in the level bases (columns = source basis)."""
    src, tgt = dp_level(A, n), dp_level(A, n - 1)
    cols = [tgt.from_ambient(pullback(A, coface(n, i), n - 1, n, v)) for v in src.basis]
    return [[cols[c][r] for c in range(len(cols))] for r in range(tgt.dim)]


def degeneracy_matrix(A: FreeComplex, n: int, i: int) -> list:
    """s_i: DP_n -> DP_{n+1}."""
    src, tgt = dp_level(A, n), dp_level(A, n + 1)
    cols = [tgt.from_ambient(pullback(A, codegeneracy(n, i), n + 1, n, v)) for v in src.basis]
    return [[cols[c][r] for c in range(len(cols))] for r in range(tgt.dim)]


def _mm(a: list, b: list, rows: int, inner: int, cols: int) -> list:
    """Product of a (rows x inner) and b (inner x cols); shapes are explicit so empty matrices compose."""
    return [[sum((a[r][k] * b[k][c] for k in range(inner)), Fraction(0)) for c in range(cols)] for r in range(rows)]


def simplicial_identities(A: FreeComplex, max_level: int) -> dict:
    """Check the five families of simplicial identities for levels <= max_level."""
    fails: dict = {"dd": [], "ds_lower": [], "ds_equal": [], "ds_upper": [], "ss": []}
    dims = {n: dp_level(A, n).dim for n in range(max_level + 2)}
    F = {(n, i): face_matrix(A, n, i) for n in range(1, max_level + 2) for i in range(n + 1)}
    S = {(n, i): degeneracy_matrix(A, n, i) for n in range(max_level + 1) for i in range(n + 1)}

    def ident(k):
        return [[Fraction(int(r == c)) for c in range(k)] for r in range(k)]

    for n in range(2, max_level + 1):
        for i in range(n + 1):
            for j in range(i + 1, n + 1):
                # d_i d_j = d_{j-1} d_i on DP_n
                shape = (dims[n - 2], dims[n - 1], dims[n])
                if _mm(F[(n - 1, i)], F[(n, j)], *shape) != _mm(F[(n - 1, j - 1)], F[(n, i)], *shape):
                    fails["dd"].append((n, i, j))
    for n in range(0, max_level):
        for j in range(n + 1):
            for i in range(n + 2):
                # d_i s_j on DP_n
                lhs = _mm(F[(n + 1, i)], S[(n, j)], dims[n], dims[n + 1], dims[n])
                if i < j:
                    rhs = _mm(S[(n - 1, j - 1)], F[(n, i)], dims[n], dims[n - 1], dims[n])
                    if lhs != rhs:
                        fails["ds_lower"].append((n, i, j))
                elif i in (j, j + 1):
                    if lhs != ident(dims[n]):
                        fails["ds_equal"].append((n, i, j))
                else:
                    rhs = _mm(S[(n - 1, j)], F[(n, i - 1)], dims[n], dims[n - 1], dims[n])
                    if lhs != rhs:
                        fails["ds_upper"].append((n, i, j))
    for n in range(0, max_level - 1):
        for i in range(n + 1):
            for j in range(i, n + 1):
                # s_i s_j = s_{j+1} s_i on DP_n
                shape = (dims[n + 2], dims[n + 1], dims[n])
                if _mm(S[(n + 1, i)], S[(n, j)], *shape) != _mm(S[(n + 1, j + 1)], S[(n, i)], *shape):
                    fails["ss"].append((n, i, j))
    return {"ok": not any(fails.values()), "failures": fails, "dims": dims}


def dp_homotopy_groups(A: FreeComplex, n_max: int) -> dict:
    """pi_n from the normalized complex N_n = cap_{i<n} ker d_i with differential d_n."""
    _rational(A)
    N: dict = {}
    for n in range(n_max + 2):
        lvl = dp_level(A, n)
        if n == 0 or lvl.dim == 0:
            N[n] = [[Fraction(int(r == c)) for c in range(lvl.dim)] for r in range(lvl.dim)] if n == 0 else []
            continue
        stacked = []
        for i in range(n):
            stacked.extend(face_matrix(A, n, i))
        if stacked:
            N[n] = linalg.nullspace(stacked) if lvl.dim else []
        else:
            N[n] = [[Fraction(int(r == c)) for c in range(lvl.dim)] for r in range(lvl.dim)]
    ranks = {}
    for n in range(1, n_max + 2):
        if not N[n]:
            ranks[n] = 0
            continue
        dn = face_matrix(A, n, n)
        imgs = [[sum((row[c] * v[c] for c in range(len(v))), Fraction(0)) for row in dn] for v in N[n]]
        ranks[n] = linalg.rank(imgs) if imgs and imgs[0] else 0
    out = {}
    for n in range(n_max + 1):
        out[n] = len(N[n]) - ranks.get(n, 0) - ranks.get(n + 1, 0)
    return out


def expected_homotopy_groups(A: FreeComplex, n_max: int) -> dict:
    """dim H^{-n}(A) for 0 <= n <= n_max (the comparison side)."""
    h = homology_ranks(A, (-n_max, 0))
    return {n: h.get(-n, 0) for n in range(n_max + 1)}


# ---------------------------------------------------------------------------
# products


def tensor_index(A: FreeComplex, B: FreeComplex) -> dict:
    """Position (degree, index) of e^p_c (x) f^q_r, keyed (p, c, q, r), in the basis of tensor(A, B)."""
    out = {}
    degs = sorted({a + b for a in A.degrees() for b in B.degrees()})
    for i in degs:
        n = 0
        for j in A.degrees():
            for c in range(A.rank(j)):
                for r in range(B.rank(i - j)):
                    out[(j, c, i - j, r)] = (i, n)
                    n += 1
    return out


def dp_product_ambient(A: FreeComplex, B: FreeComplex, n: int, a: Sequence, b: Sequence) -> dict:
    """(a b)(phi) = sum_i a(phi[:i+1]) (x) b(phi[i:]); returns {phi: {(p, c, q, r): coeff}}."""
    la, lb = dp_level(A, n), dp_level(B, n)
    out = {}
    for k in range(n + 1):
        for phi in injections(k, n):
            val: dict = {}
            for front, back in kappa(phi):
                p, q = -(len(front) - 1), -(len(back) - 1)
                va, vb = la.value(a, front), lb.value(b, back)
                for c, x in enumerate(va):
                    if not x:
                        continue
                    for r, y in enumerate(vb):
                        if y:
                            key = (p, c, q, r)
                            val[key] = val.get(key, 0) + x * y
            out[phi] = {kk: v for kk, v in val.items() if v}
    return out


def dp_product(A: FreeComplex, B: FreeComplex, n: int, a: Sequence, b: Sequence, AB: FreeComplex | None = None) -> list:
    """The product as an ambient vector of dp_level(A (x) B, n)."""
    AB = AB if AB is not None else tensor(A, B)
    idx = tensor_index(A, B)
    lvl = dp_level(AB, n)
    vec = [Fraction(0)] * len(lvl.coords)
    for phi, val in dp_product_ambient(A, B, n, a, b).items():
        for (p, c, q, r), x in val.items():
            deg, pos = idx[(p, c, q, r)]
            vec[lvl._pos[(phi, pos)]] += x
    return vec


def dp_unit(n: int) -> list:
    """The unit of DP(Q[0])_n: every vertex maps to 1."""
    one = FreeComplex(QQ, {0: 1})
    lvl = dp_level(one, n)
    vec = [Fraction(0)] * len(lvl.coords)
    for i, (phi, c) in enumerate(lvl.coords):
        if len(phi) == 1:
            vec[i] = Fraction(1)
    return vec


def associativity_defect(A, B, C, n, a, b, c) -> list:
    """Compare (ab)c and a(bc) computed by two-step products through the tensor complexes."""
    AB = tensor(A, B)
    BC = tensor(B, C)
    ab = dp_product(A, B, n, a, b, AB)
    bc = dp_product(B, C, n, b, c, BC)
    left = dp_product_ambient(AB, C, n, ab, c)
    right = dp_product_ambient(A, BC, n, a, bc)
    iab = {v: k for k, v in tensor_index(A, B).items()}
    ibc = {v: k for k, v in tensor_index(B, C).items()}

    def flat_left(key):
        p, c1, q, r = key  # (AB)^p basis c1, C^q basis r
        j, ca, jb, rb = iab[(p, c1)]
        return ((j, ca), (jb, rb), (q, r))

    def flat_right(key):
        p, c1, q, r = key  # A^p basis c1, (BC)^q basis r
        j, cb, jc, rc = ibc[(q, r)]
        return ((p, c1), (j, cb), (jc, rc))

    bad = []
    for phi in left:
        l = {}
        for kk, v in left[phi].items():
            fk = flat_left(kk)
            l[fk] = l.get(fk, 0) + v
        r = {}
        for kk, v in right[phi].items():
            fk = flat_right(kk)
            r[fk] = r.get(fk, 0) + v
        if {k: v for k, v in l.items() if v} != {k: v for k, v in r.items() if v}:
            bad.append(phi)
    return bad


# ---------------------------------------------------------------------------
# augmented dg-categories


class AugmentedDGC:
    """Interface: objects, hom complexes over Q, composition, units, augmentation.

    Morphisms are (degree, vector) pairs; ``compose(x, y, z, g, f)`` is g o f
    for f: x -> y and g: y -> z.
    """

    objects: list

    def hom(self, x, y) -> FreeComplex:
        raise NotImplementedError

    def compose(self, x, y, z, g, f):
        raise NotImplementedError

    def unit(self, x):
        raise NotImplementedError

    def epsilon(self, x, y, v) -> Fraction:
        raise NotImplementedError

    # checks ----------------------------------------------------------------
    def basis_elements(self, x, y):
        h = self.hom(x, y)
        for deg in h.degrees():
            for b in range(h.rank(deg)):
                vec = [Fraction(0)] * h.rank(deg)
                vec[b] = Fraction(1)
                yield deg, vec

    def validate(self) -> dict:
        """Associativity, units, Leibniz, epsilon multiplicative with eps(1) = 1 and eps(dv) = 0."""
        problems = []
        objs = list(self.objects)
        for x in objs:
            u = self.unit(x)
            if self.epsilon(x, x, u) != 1:
                problems.append(f"eps(1_{x}) != 1")
            for y in objs:
                h = self.hom(x, y)
                for f in self.basis_elements(x, y):
                    if self.compose(x, y, y, self.unit(y), f)[1] != f[1] or self.compose(x, x, y, f, self.unit(x))[1] != f[1]:
                        problems.append(f"unit law fails on {x}->{y}")
                    if f[0] == -1 and h.rank(0):
                        df = h.apply_d(-1, f[1])
                        if self.epsilon(x, y, (0, df)):
                            problems.append(f"eps(dv) != 0 on {x}->{y}")
        for x, y, z in itertools.product(objs, repeat=3):
            for f in self.basis_elements(x, y):
                for g in self.basis_elements(y, z):
                    gf = self.compose(x, y, z, g, f)
                    # Leibniz d(gf) = dg f + (-1)^|g| g df
                    hxz = self.hom(x, z)
                    lhs = hxz.apply_d(gf[0], gf[1]) if hxz.rank(gf[0] + 1) else []
                    terms = []
                    hyz, hxy = self.hom(y, z), self.hom(x, y)
                    if hyz.rank(g[0] + 1):
                        terms.append(self.compose(x, y, z, (g[0] + 1, hyz.apply_d(g[0], g[1])), f)[1])
                    if hxy.rank(f[0] + 1):
                        t = self.compose(x, y, z, g, (f[0] + 1, hxy.apply_d(f[0], f[1])))[1]
                        terms.append([c * (-1) ** (g[0] % 2) for c in t])
                    rhs = [sum(col) for col in zip(*terms)] if terms else [Fraction(0)] * len(lhs)
                    if lhs and list(lhs) != list(rhs):
                        problems.append(f"Leibniz fails for {x}->{y}->{z}")
                    if f[0] == 0 and g[0] == 0:
                        if self.epsilon(x, z, gf) != self.epsilon(x, y, f) * self.epsilon(y, z, g):
                            problems.append(f"eps not multiplicative on {x}->{y}->{z}")
        for w, x, y, z in itertools.product(objs, repeat=4):
            for f in self.basis_elements(w, x):
                for g in self.basis_elements(x, y):
                    for h in self.basis_elements(y, z):
                        a = self.compose(w, y, z, h, self.compose(w, x, y, g, f))
                        b = self.compose(w, x, z, self.compose(x, y, z, h, g), f)
                        if a != b:
                            problems.append(f"associativity fails on {w}->{x}->{y}->{z}")
        return {"ok": not problems, "problems": sorted(set(problems))}


class MatrixDGC(AugmentedDGC):
    """Augmented dgc given by tables.

    ``homs[(x, y)]``: FreeComplex over Q; ``mult[(x, y, z)]``: dict
    ((deg_g, i), (deg_f, j)) -> vector in hom(x,z)^{deg_g+deg_f};
    ``units[x]``: vector in hom(x,x)^0; ``eps[(x, y)]``: list of values on
    the degree-0 basis.
    """

    def __init__(self, objects, homs, mult, units, eps):
        self.objects = list(objects)
        self.homs = homs
        self.mult = mult
        self.units = units
        self.eps = eps

    def hom(self, x, y):
        return self.homs[(x, y)]

    def compose(self, x, y, z, g, f):
        dg, vg = g
        df, vf = f
        deg = dg + df
        n = self.homs[(x, z)].rank(deg)
        out = [Fraction(0)] * n
        table = self.mult.get((x, y, z), {})
        for i, a in enumerate(vg):
            if not a:
                continue
            for j, b in enumerate(vf):
                if not b:
                    continue
                v = table.get(((dg, i), (df, j)))
                if v:
                    for t, c in enumerate(v):
                        out[t] += a * b * c
        return (deg, out)

    def unit(self, x):
        return (0, list(self.units[x]))

    def epsilon(self, x, y, v):
        deg, vec = v
        if deg != 0:
            return Fraction(0)
        vals = self.eps.get((x, y), [])
        return sum((Fraction(a) * Fraction(b) for a, b in zip(vals, vec)), Fraction(0))


@dataclass
class DGFunctor:
    source: AugmentedDGC
    target: AugmentedDGC
    objects: dict  # source object -> target object
    maps: dict  # (x, y) -> {degree: matrix}

    def apply(self, x, y, v):
        deg, vec = v
        m = self.maps[(x, y)].get(deg)
        tgt = self.target.hom(self.objects[x], self.objects[y])
        if m is None:
            return (deg, [Fraction(0)] * tgt.rank(deg))
        return (deg, [sum((m[r][c] * vec[c] for c in range(len(vec))), Fraction(0)) for r in range(tgt.rank(deg))])

    def surjectivity_violations(self) -> list:
        """(x, y, degree) where the hom map is not onto (fibrancy condition)."""
        bad = []
        for x in self.source.objects:
            for y in self.source.objects:
                tgt = self.target.hom(self.objects[x], self.objects[y])
                for deg in tgt.degrees():
                    m = self.maps[(x, y)].get(deg)
                    r = linalg.rank(m) if m and m[0] else 0
                    if r < tgt.rank(deg):
                        bad.append((x, y, deg))
        return bad


@dataclass
class AffineSpace:
    particular: list | None
    directions: list

    @property
    def empty(self) -> bool:
        return self.particular is None

    def dim(self) -> int:
        return -1 if self.empty else len(self.directions)

    def same_as(self, other: "AffineSpace") -> bool:
        if self.empty or other.empty:
            return self.empty and other.empty
        if len(self.directions) != len(other.directions):
            return False
        d = len(self.directions)
        both = self.directions + other.directions
        if d and linalg.rank(both) != d:
            return False
        diff = [a - b for a, b in zip(self.particular, other.particular)]
        return linalg.rank(self.directions + [diff]) == d if any(diff) else True


class FiberDGC(AugmentedDGC):
    """Fib+(f/b): objects over b; degree != 0 morphisms in ker f, degree 0 ones with f(v) in Q 1_b."""

    def __init__(self, functor: DGFunctor, b):
        self.functor = functor
        self.b = b
        self.objects = [x for x in functor.source.objects if functor.objects[x] == b]
        self._sub = {}
        self._cx = {}
        A = functor.source
        unit_b = functor.target.unit(b)[1]
        for x in self.objects:
            for y in self.objects:
                h = A.hom(x, y)
                bases = {}
                for deg in h.degrees():
                    m = functor.maps[(x, y)].get(deg)
                    rows = functor.target.hom(b, b).rank(deg)
                    n = h.rank(deg)
                    if m is None or rows == 0:
                        bases[deg] = [[Fraction(int(i == j)) for i in range(n)] for j in range(n)]
                        continue
                    if deg == 0:
                        # f(v) - c 1_b = 0 with an extra unknown c
                        aug = [list(row) + [-Fraction(unit_b[r])] for r, row in enumerate(m)]
                        sols = linalg.nullspace(aug)
                        bases[deg] = [s[:n] for s in sols if any(s[:n])]
                    else:
                        bases[deg] = linalg.nullspace(m)
                self._sub[(x, y)] = bases

    def inclusion(self, x, y) -> dict:
        return self._sub[(x, y)]

    def hom(self, x, y) -> FreeComplex:
        if (x, y) in self._cx:
            return self._cx[(x, y)]
        A = self.functor.source
        h = A.hom(x, y)
        bases = self._sub[(x, y)]
        diffs = {}
        for deg, basis in bases.items():
            tgt = bases.get(deg + 1)
            if not basis or not tgt:
                continue
            cols = []
            for v in basis:
                dv = h.apply_d(deg, v)
                cols.append(self._coords(tgt, dv))
            diffs[deg] = [[cols[c][r] for c in range(len(cols))] for r in range(len(tgt))]
        cx = FreeComplex(QQ, {d: len(b) for d, b in bases.items()}, diffs).validate()
        self._cx[(x, y)] = cx
        return cx

    @staticmethod
    def _coords(basis, vec):
        mat = [[basis[c][r] for c in range(len(basis))] for r in range(len(vec))]
        sol = linalg.solve(mat, vec)
        if not sol.ok:
            raise ValueError("vector outside the fiber subcomplex")
        return sol.solution

    def _embed(self, x, y, v):
        deg, coeffs = v
        basis = self._sub[(x, y)].get(deg, [])
        n = self.functor.source.hom(x, y).rank(deg)
        out = [Fraction(0)] * n
        for c, b in zip(coeffs, basis):
            for i in range(n):
                out[i] += c * b[i]
        return (deg, out)

    def compose(self, x, y, z, g, f):
        A = self.functor.source
        deg, vec = A.compose(x, y, z, self._embed(y, z, g), self._embed(x, y, f))
        return (deg, self._coords(self._sub[(x, z)].get(deg, []), vec) if self._sub[(x, z)].get(deg) else [])

    def unit(self, x):
        A = self.functor.source
        deg, vec = A.unit(x)
        return (0, self._coords(self._sub[(x, x)][0], vec))

    def epsilon(self, x, y, v):
        if v[0] != 0:
            return Fraction(0)
        deg, vec = self._embed(x, y, v)
        img = self.functor.apply(x, y, (0, vec))[1]
        unit_b = self.functor.target.unit(self.b)[1]
        for a, u in zip(img, unit_b):
            if u:
                return Fraction(a) / Fraction(u)
        return Fraction(0)


def dgc_fiber(functor: DGFunctor, b) -> tuple[FiberDGC, list]:
    """The fiber dgc at b and the list of fibrancy (surjectivity) violations."""
    return FiberDGC(functor, b), functor.surjectivity_violations()


def affine_dp_level(dgc: AugmentedDGC, x, y, n: int) -> AffineSpace:
    """Chain maps g: D(n) -> Hom(x, y) with eps(g(v)) = 1 at every vertex, as an affine space."""
    h = dgc.hom(x, y)
    lvl = dp_level(h, n)
    # eps(g(v)) = sum_i coeff_i eps(basis_i(v))
    rows, rhs = [], []
    for v in range(n + 1):
        row = []
        for bvec in lvl.basis:
            val = lvl.value(bvec, (v,))
            row.append(dgc.epsilon(x, y, (0, val)) if val else Fraction(0))
        rows.append(row)
        rhs.append(Fraction(1))
    if lvl.dim == 0:
        return AffineSpace(None, [])
    sol = linalg.solve(rows, rhs)
    if not sol.ok:
        return AffineSpace(None, [])
    dirs = linalg.nullspace(rows)
    return AffineSpace(lvl.to_ambient(sol.solution), [lvl.to_ambient(d) for d in dirs])


def fiber_of_dp(functor: DGFunctor, x, y, b, n: int) -> AffineSpace:
    """Preimage in DP(Hom_A(x,y))_n of the degenerate unit simplex of b (vertices -> 1_b, rest 0).

    Returned in the ambient coordinates of dp_level(Hom_A(x,y), n).
    """
    A = functor.source
    h = A.hom(x, y)
    lvl = dp_level(h, n)
    unit_b = functor.target.unit(b)[1]
    rows, rhs = [], []
    for k in range(n + 1):
        for phi in injections(k, n):
            deg = -k
            m = functor.maps[(x, y)].get(deg)
            trank = functor.target.hom(b, b).rank(deg)
            for r in range(trank):
                row = []
                for bvec in lvl.basis:
                    val = lvl.value(bvec, phi)
                    row.append(sum((m[r][c] * val[c] for c in range(len(val))), Fraction(0)) if m else Fraction(0))
                rows.append(row)
                rhs.append(Fraction(unit_b[r]) if k == 0 else Fraction(0))
    if lvl.dim == 0:
        return AffineSpace(None, [])
    if not rows:
        return AffineSpace([Fraction(0)] * len(lvl.coords), [lvl.to_ambient(e) for e in _identity_rows(lvl.dim)])
    sol = linalg.solve(rows, rhs)
    if not sol.ok:
        return AffineSpace(None, [])
    return AffineSpace(lvl.to_ambient(sol.solution), [lvl.to_ambient(d) for d in linalg.nullspace(rows)])


def _identity_rows(n):
    return [[Fraction(int(i == j)) for i in range(n)] for j in range(n)]


def fiber_affine_in_source(fib: FiberDGC, x, y, n: int) -> AffineSpace:
    """affine_dp_level of the fiber, pushed into the ambient coordinates of DP(Hom_A(x,y))_n."""
    aff = affine_dp_level(fib, x, y, n)
    if aff.empty:
        return aff
    sub = fib.hom(x, y)
    lvl_sub = dp_level(sub, n)
    lvl_A = dp_level(fib.functor.source.hom(x, y), n)
    incl = fib.inclusion(x, y)

    def push(vec):
        out = [Fraction(0)] * len(lvl_A.coords)
        for i, (phi, c) in enumerate(lvl_sub.coords):
            if vec[i]:
                deg = -(len(phi) - 1)
                for t, val in enumerate(incl[deg][c]):
                    if val:
                        out[lvl_A._pos[(phi, t)]] += vec[i] * val
        return out

    return AffineSpace(push(aff.particular), [push(d) for d in aff.directions])
