"""Finite nilpotent-filtered dg-algebras and their Maurer-Cartan geometry.

A ``FiniteFilteredDGA`` is given by structure constants on a finite basis in
a window of non-negative degrees ``0..top``.  Products or differentials that
land above ``top`` are dropped; since every degree is non-negative this is
the quotient by an ideal, so all identities survive, but cohomology in
degree ``top`` is not meaningful and is never reported.

Coefficients are ``Fraction`` or, for Rees-type builds, polynomials in a
single variable ``lam`` (``Poly`` with one variable).

Vectors are sparse dicts ``index -> coefficient`` within one degree.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from . import linalg
from .algebra import Poly, PolyRing
from .complexes import QQ, FreeComplex, homology_ranks
from .doldpuppe import AugmentedDGC

LAM_RING = PolyRing(["lam"])


# ---------------------------------------------------------------------------
# coefficient helpers


def _fmt(x) -> str:
    if isinstance(x, Poly):
        return x.format(LAM_RING.names)
    return str(Fraction(x))


def _parse(text, lam: bool):
    if lam:
        return LAM_RING.parse(str(text))
    return Fraction(str(text))


def _eval_lam(x, value):
    if isinstance(x, Poly):
        return x.evaluate([value])
    return x


def _acc(vec: dict, key, value) -> None:
    if not value:
        return
    s = vec[key] + value if key in vec else value
    if s:
        vec[key] = s
    else:
        vec.pop(key, None)


def vadd(*vecs: Mapping, coeffs: Sequence | None = None) -> dict:
    out: dict = {}
    for n, v in enumerate(vecs):
        c = 1 if coeffs is None else coeffs[n]
        for k, x in v.items():
            _acc(out, k, x * c if c != 1 else x)
    return out


def vscale(v: Mapping, c) -> dict:
    return {k: x * c for k, x in v.items() if x * c}


# ---------------------------------------------------------------------------
# the dga type


class FiniteFilteredDGA:
    """Finite filtered dga ``Z`` with basis, differential, product, unit, augmentation and base point.

    ``d[deg][c] = {r: coeff}`` gives d(e_c) in degree deg+1;
    ``mult[(da, db)][(i, j)] = {r: coeff}`` gives e_i e_j in degree da+db;
    ``levels[deg][i]`` is the filtration level of e_i (e_i in J^level);
    ``eta0`` is a degree-1 vector of level-0 basis elements, the base point mod J^1.
    """

    def __init__(
        self,
        dims: Mapping,
        levels: Mapping,
        d: Mapping | None = None,
        mult: Mapping | None = None,
        *,
        unit: Mapping | None = None,
        eps: Mapping | None = None,
        eta0: Mapping | None = None,
        labels: Mapping | None = None,
        lam: bool = False,
        top: int | None = None,
    ):
        self.dims = {int(k): int(v) for k, v in dims.items() if int(v) > 0}
        if any(k < 0 for k in self.dims):
            raise ValueError("finite filtered dgas live in non-negative degrees")
        self.levels = {k: [int(x) for x in levels[k]] for k in self.dims}
        for k in self.dims:
            if len(self.levels[k]) != self.dims[k]:
                raise ValueError(f"level list in degree {k} has wrong length")
        self.top = top if top is not None else (max(self.dims) if self.dims else 0)
        self.d = {}
        for deg, cols in (d or {}).items():
            t = {c: {r: x for r, x in col.items() if x} for c, col in cols.items()}
            t = {c: col for c, col in t.items() if col}
            if t and deg + 1 <= self.top:
                self.d[int(deg)] = t
        self.mult = {}
        for (da, db), table in (mult or {}).items():
            if da + db > self.top:
                continue
            t = {ij: {r: x for r, x in col.items() if x} for ij, col in table.items()}
            t = {ij: col for ij, col in t.items() if col}
            if t:
                self.mult[(int(da), int(db))] = t
        self.unit = dict(unit) if unit is not None else None
        self.eps = dict(eps) if eps is not None else None
        self.eta0 = {k: v for k, v in (eta0 or {}).items() if v}
        self.labels = {k: list(labels[k]) for k in self.dims} if labels else {
            k: [f"{k}:{i}" for i in range(n)] for k, n in self.dims.items()
        }
        self.lam = lam

    # shape --------------------------------------------------------------
    def dim(self, deg: int) -> int:
        return self.dims.get(deg, 0)

    def level(self, deg: int, i: int) -> int:
        return self.levels[deg][i]

    @property
    def K(self) -> int:
        """Nilpotency index: J^K = 0."""
        return max((max(l) for l in self.levels.values() if l), default=-1) + 1

    def indices(self, deg: int, min_level: int = 0, exact: int | None = None) -> list[int]:
        lv = self.levels.get(deg, [])
        if exact is not None:
            return [i for i, l in enumerate(lv) if l == exact]
        return [i for i, l in enumerate(lv) if l >= min_level]

    def vector_level(self, deg: int, v: Mapping) -> int:
        """Largest p with v in J^p (K for the zero vector)."""
        return min((self.levels[deg][i] for i in v), default=self.K)

    def level_part(self, deg: int, v: Mapping, p: int) -> dict:
        return {i: x for i, x in v.items() if self.levels[deg][i] == p}

    # operations ---------------------------------------------------------
    def dmap(self, deg: int, v: Mapping) -> dict:
        cols = self.d.get(deg)
        out: dict = {}
        if not cols:
            return out
        for c, x in v.items():
            col = cols.get(c)
            if col:
                for r, y in col.items():
                    _acc(out, r, x * y)
        return out

    def mul(self, da: int, a: Mapping, db: int, b: Mapping) -> dict:
        table = self.mult.get((da, db))
        out: dict = {}
        if not table or not a or not b:
            return out
        for i, x in a.items():
            for j, y in b.items():
                col = table.get((i, j))
                if col:
                    xy = x * y
                    for r, z in col.items():
                        _acc(out, r, xy * z)
        return out

    def twisted_d(self, deg: int, q: Mapping, left: Mapping | None, right: Mapping | None) -> dict:
        """d q + left q - (-1)^deg q right, the differential of Hom(right, left)."""
        out = self.dmap(deg, q)
        if left:
            out = vadd(out, self.mul(1, left, deg, q))
        if right:
            out = vadd(out, self.mul(deg, q, 1, right), coeffs=[1, -1 if deg % 2 == 0 else 1])
        return out

    def one(self) -> dict:
        if self.unit is None:
            raise ValueError("this dga has no unit")
        return dict(self.unit)

    def curvature(self, eta: Mapping) -> dict:
        return vadd(self.dmap(1, eta), self.mul(1, eta, 1, eta))

    # specialization / comparison ---------------------------------------
    def map_coefficients(self, fn, lam: bool) -> "FiniteFilteredDGA":
        def mv(v):
            return {k: fn(x) for k, x in v.items() if fn(x)}

        return FiniteFilteredDGA(
            self.dims,
            self.levels,
            {deg: {c: mv(col) for c, col in cols.items()} for deg, cols in self.d.items()},
            {k: {ij: mv(col) for ij, col in t.items()} for k, t in self.mult.items()},
            unit=mv(self.unit) if self.unit is not None else None,
            eps=mv(self.eps) if self.eps is not None else None,
            eta0=mv(self.eta0),
            labels=self.labels,
            lam=lam,
            top=self.top,
        )

    def specialize(self, value) -> "FiniteFilteredDGA":
        """Substitute lam := value."""
        if not self.lam:
            return self
        value = Fraction(value)
        return self.map_coefficients(lambda x: _eval_lam(x, value), lam=False)

    def structure(self) -> tuple:
        """Canonical data for structural equality (coefficients compared after normalization)."""

        def norm(x):
            if isinstance(x, Poly) and x.is_constant():
                return x.constant_value()
            return x

        def sv(v):
            return tuple(sorted((k, norm(x)) for k, x in v.items()))

        return (
            tuple(sorted(self.dims.items())),
            tuple(sorted((k, tuple(v)) for k, v in self.levels.items())),
            self.top,
            tuple(sorted((deg, tuple(sorted((c, sv(col)) for c, col in cols.items()))) for deg, cols in self.d.items())),
            tuple(sorted((k, tuple(sorted((ij, sv(col)) for ij, col in t.items()))) for k, t in self.mult.items())),
            sv(self.unit) if self.unit is not None else None,
            sv(self.eps) if self.eps is not None else None,
            sv(self.eta0),
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteFilteredDGA):
            return NotImplemented
        return self.structure() == other.structure()

    __hash__ = None

    def summary(self) -> dict:
        return {
            "dims": {str(k): v for k, v in sorted(self.dims.items())},
            "top": self.top,
            "nilpotency": self.K,
            "mc_coordinates": len(self.indices(1, 1)),
            "lam": self.lam,
        }

    # serialization ------------------------------------------------------
    def to_json(self) -> dict:
        def sv(v):
            return {str(k): _fmt(x) for k, x in sorted(v.items())}

        return {
            "dims": {str(k): v for k, v in sorted(self.dims.items())},
            "levels": {str(k): v for k, v in sorted(self.levels.items())},
            "labels": {str(k): v for k, v in sorted(self.labels.items())},
            "top": self.top,
            "lam": self.lam,
            "d": [
                [deg, c, r, _fmt(x)]
                for deg, cols in sorted(self.d.items())
                for c, col in sorted(cols.items())
                for r, x in sorted(col.items())
            ],
            "mult": [
                [da, db, i, j, r, _fmt(x)]
                for (da, db), t in sorted(self.mult.items())
                for (i, j), col in sorted(t.items())
                for r, x in sorted(col.items())
            ],
            "unit": sv(self.unit) if self.unit is not None else None,
            "eps": sv(self.eps) if self.eps is not None else None,
            "eta0": sv(self.eta0),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "FiniteFilteredDGA":
        try:
            lam = bool(data.get("lam", False))
            dims = {int(k): int(v) for k, v in data["dims"].items()}
            levels = {int(k): v for k, v in data["levels"].items()}
            d: dict = {}
            for deg, c, r, x in data.get("d", []):
                d.setdefault(int(deg), {}).setdefault(int(c), {})[int(r)] = _parse(x, lam)
            mult: dict = {}
            for da, db, i, j, r, x in data.get("mult", []):
                mult.setdefault((int(da), int(db)), {}).setdefault((int(i), int(j)), {})[int(r)] = _parse(x, lam)

            def pv(v):
                return None if v is None else {int(k): _parse(x, lam) for k, x in v.items()}

            labels = data.get("labels")
            return cls(
                dims,
                levels,
                d,
                mult,
                unit=pv(data.get("unit")),
                eps=pv(data.get("eps")),
                eta0=pv(data.get("eta0")) or {},
                labels={int(k): v for k, v in labels.items()} if labels else None,
                lam=lam,
                top=data.get("top"),
            )
        except KeyError as exc:
            raise ValueError(f"dga description missing field {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise ValueError(f"malformed dga description: {exc}") from exc


def basis_vector(i: int) -> dict:
    return {i: Fraction(1)}


# ---------------------------------------------------------------------------
# validation and the quasi-nilpotence level


def validate_dga(Z: FiniteFilteredDGA, max_pairs: int | None = None, seed: int = 0) -> dict:
    """Check d^2 = 0, Leibniz, associativity, filtration, unit, augmentation and the base point.

    With ``max_pairs`` the pair and triple checks use a seeded random sample
    of that size per degree combination; otherwise they are exhaustive.
    """
    bad: list[str] = []
    rng = random.Random(seed)
    degs = sorted(Z.dims)

    def sample(items):
        items = list(items)
        if max_pairs is not None and len(items) > max_pairs:
            return rng.sample(items, max_pairs)
        return items

    for deg in degs:
        for c in range(Z.dim(deg)):
            e = basis_vector(c)
            if Z.dmap(deg + 1, Z.dmap(deg, e)):
                bad.append(f"d^2 != 0 on {Z.labels[deg][c]}")
            for r in Z.d.get(deg, {}).get(c, {}):
                if Z.level(deg + 1, r) < Z.level(deg, c):
                    bad.append(f"d lowers the filtration on {Z.labels[deg][c]}")
    for (da, db), t in Z.mult.items():
        for (i, j), col in t.items():
            for r in col:
                if Z.level(da + db, r) < Z.level(da, i) + Z.level(db, j):
                    bad.append(f"product {Z.labels[da][i]}*{Z.labels[db][j]} violates J^p J^q in J^(p+q)")
    for da, db in itertools.product(degs, repeat=2):
        if da + db + 1 > Z.top:
            continue
        sign = -1 if da % 2 else 1
        for i, j in sample(itertools.product(range(Z.dim(da)), range(Z.dim(db)))):
            a, b = basis_vector(i), basis_vector(j)
            lhs = Z.dmap(da + db, Z.mul(da, a, db, b))
            rhs = vadd(Z.mul(da + 1, Z.dmap(da, a), db, b), Z.mul(da, a, db + 1, Z.dmap(db, b)), coeffs=[1, sign])
            if vadd(lhs, rhs, coeffs=[1, -1]):
                bad.append(f"Leibniz fails on {Z.labels[da][i]}, {Z.labels[db][j]}")
    for da, db, dc in itertools.product(degs, repeat=3):
        if da + db + dc > Z.top:
            continue
        for i, j, k in sample(itertools.product(range(Z.dim(da)), range(Z.dim(db)), range(Z.dim(dc)))):
            a, b, c = basis_vector(i), basis_vector(j), basis_vector(k)
            left = Z.mul(da + db, Z.mul(da, a, db, b), dc, c)
            right = Z.mul(da, a, db + dc, Z.mul(db, b, dc, c))
            if vadd(left, right, coeffs=[1, -1]):
                bad.append(f"associativity fails on {Z.labels[da][i]}, {Z.labels[db][j]}, {Z.labels[dc][k]}")
    if Z.unit is not None:
        if Z.dmap(0, Z.unit):
            bad.append("d(1) != 0")
        for deg in degs:
            for i in range(Z.dim(deg)):
                e = basis_vector(i)
                if Z.mul(0, Z.unit, deg, e) != e or Z.mul(deg, e, 0, Z.unit) != e:
                    bad.append(f"unit law fails on {Z.labels[deg][i]}")
    if Z.eps is not None:
        def ev(v):
            return sum((x * Z.eps.get(i, 0) for i, x in v.items()), Fraction(0))

        if Z.unit is not None and ev(Z.unit) != 1:
            bad.append("eps(1) != 1")
        for i, j in sample(itertools.product(range(Z.dim(0)), repeat=2)):
            a, b = basis_vector(i), basis_vector(j)
            if ev(Z.mul(0, a, 0, b)) != ev(a) * ev(b):
                bad.append(f"eps not multiplicative on {Z.labels[0][i]}, {Z.labels[0][j]}")
    if any(Z.level(1, i) != 0 for i in Z.eta0):
        bad.append("base point has components in J^1")
    curv = Z.curvature(Z.eta0)
    if Z.top >= 2 and any(Z.level(2, r) == 0 for r in curv):
        bad.append("base point is not Maurer-Cartan modulo J^1")
    return {"ok": not bad, "violations": bad}


def graded_complex(Z: FiniteFilteredDGA, p: int, twisted: bool = True) -> FreeComplex:
    """Gr^p = J^p/J^{p+1} with the (base-point twisted) differential, over Q."""
    if Z.lam:
        raise ValueError("specialize lam before computing cohomology")
    idx = {deg: Z.indices(deg, exact=p) for deg in Z.dims}
    ranks = {deg: len(v) for deg, v in idx.items() if v}
    diffs = {}
    eta = Z.eta0 if twisted else None
    for deg, cols in idx.items():
        rows = idx.get(deg + 1, [])
        if not rows or not cols:
            continue
        pos = {r: n for n, r in enumerate(rows)}
        m = [[Fraction(0)] * len(cols) for _ in rows]
        for n, c in enumerate(cols):
            for r, x in Z.twisted_d(deg, basis_vector(c), eta, eta).items():
                if r in pos:
                    m[pos[r]][n] = x
        diffs[deg] = m
    labels = {deg: [Z.labels[deg][i] for i in v] for deg, v in idx.items() if v}
    return FreeComplex(QQ, ranks, diffs, labels)


def trusted_window(Z: FiniteFilteredDGA) -> tuple:
    return (0, Z.top - 1)


def find_k0(Z: FiniteFilteredDGA, twisted: bool = True) -> dict:
    """Least k0 such that every Gr^k with k >= k0 is acyclic in the trusted window."""
    K = Z.K
    acyclic = {}
    window = trusted_window(Z)
    for p in range(K):
        h = homology_ranks(graded_complex(Z, p, twisted), window)
        acyclic[p] = all(v == 0 for v in h.values())
    k0 = K
    for p in reversed(range(K)):
        if acyclic[p]:
            k0 = p
        else:
            break
    return {"k0": k0, "K": K, "acyclic": acyclic, "window": list(window)}


def truncate(Z: FiniteFilteredDGA, k0: int) -> FiniteFilteredDGA:
    """The quotient Z/J^k0."""
    keep = {deg: [i for i in range(n) if Z.level(deg, i) < k0] for deg, n in Z.dims.items()}
    pos = {deg: {i: n for n, i in enumerate(v)} for deg, v in keep.items()}

    def mv(deg, v):
        return {pos[deg][i]: x for i, x in v.items() if i in pos.get(deg, {})}

    d = {}
    for deg, cols in Z.d.items():
        d[deg] = {pos[deg][c]: mv(deg + 1, col) for c, col in cols.items() if c in pos[deg]}
    mult = {}
    for (da, db), t in Z.mult.items():
        mult[(da, db)] = {
            (pos[da][i], pos[db][j]): mv(da + db, col)
            for (i, j), col in t.items()
            if i in pos[da] and j in pos[db]
        }
    return FiniteFilteredDGA(
        {deg: len(v) for deg, v in keep.items()},
        {deg: [Z.level(deg, i) for i in v] for deg, v in keep.items()},
        d,
        mult,
        unit=mv(0, Z.unit) if Z.unit is not None else None,
        eps={pos[0][i]: x for i, x in Z.eps.items() if i in pos.get(0, {})} if Z.eps is not None else None,
        eta0=mv(1, Z.eta0),
        labels={deg: [Z.labels[deg][i] for i in v] for deg, v in keep.items()},
        lam=Z.lam,
        top=Z.top,
    )


# ---------------------------------------------------------------------------
# the Maurer-Cartan variety


@dataclass
class MCVariety:
    """Polynomial system in the coordinates of (J^1 Z)^1, base point folded in."""

    vars: list  # labels
    var_index: list  # degree-1 basis indices
    equations: list  # {"row", "constant", "linear": {v: c}, "quadratic": {(v, w): c}}
    lam: bool = False

    def point(self, y: Sequence, eta0: Mapping) -> dict:
        return vadd(eta0, {self.var_index[n]: Fraction(v) for n, v in enumerate(y) if v})

    def coordinates(self, eta: Mapping) -> list:
        return [eta.get(i, Fraction(0)) for i in self.var_index]

    def residual(self, y: Sequence) -> list:
        out = []
        for eq in self.equations:
            s = eq["constant"]
            for v, c in eq["linear"].items():
                s = s + c * y[v]
            for (v, w), c in eq["quadratic"].items():
                s = s + c * y[v] * y[w]
            out.append(s)
        return out

    def vanishes_at(self, y: Sequence) -> bool:
        return not any(self.residual(y))

    def jacobian(self, y: Sequence) -> linalg.SparseMatrix:
        m = linalg.SparseMatrix(len(self.equations), len(self.vars))
        for r, eq in enumerate(self.equations):
            for v, c in eq["linear"].items():
                m.add(r, v, c)
            for (v, w), c in eq["quadratic"].items():
                m.add(r, v, c * y[w])
                m.add(r, w, c * y[v])
        return m

    def specialize(self, value) -> "MCVariety":
        value = Fraction(value)
        eqs = []
        for eq in self.equations:
            lin = {v: _eval_lam(c, value) for v, c in eq["linear"].items()}
            quad = {vw: _eval_lam(c, value) for vw, c in eq["quadratic"].items()}
            new = {
                "row": eq["row"],
                "constant": _eval_lam(eq["constant"], value),
                "linear": {v: c for v, c in lin.items() if c},
                "quadratic": {vw: c for vw, c in quad.items() if c},
            }
            if new["constant"] or new["linear"] or new["quadratic"]:
                eqs.append(new)
        return MCVariety(list(self.vars), list(self.var_index), eqs, False)

    def to_json(self) -> dict:
        return {
            "vars": list(self.vars),
            "equations": [
                {
                    "row": eq["row"],
                    "constant": _fmt(eq["constant"]),
                    "linear": {self.vars[v]: _fmt(c) for v, c in sorted(eq["linear"].items())},
                    "quadratic": {
                        f"{self.vars[v]}*{self.vars[w]}": _fmt(c) for (v, w), c in sorted(eq["quadratic"].items())
                    },
                }
                for eq in self.equations
            ],
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, MCVariety):
            return NotImplemented
        return self.to_json() == other.to_json()

    __hash__ = None


def mc_equations(Z: FiniteFilteredDGA) -> MCVariety:
    """d(eta) + eta^2 = 0 for eta = eta0 + sum y_v e_v, e_v running over (J^1 Z)^1."""
    var_index = Z.indices(1, 1)
    names = [f"y[{Z.labels[1][i]}]" for i in var_index]
    const = Z.curvature(Z.eta0)
    rows: dict = {}

    def row(r):
        if r not in rows:
            rows[r] = {"constant": Fraction(0), "linear": {}, "quadratic": {}}
        return rows[r]

    for r, x in const.items():
        row(r)["constant"] = x
    for n, i in enumerate(var_index):
        e = basis_vector(i)
        lin = Z.twisted_d(1, e, Z.eta0, None)
        lin = vadd(lin, Z.mul(1, e, 1, Z.eta0))
        for r, x in lin.items():
            _acc(row(r)["linear"], n, x)
    for n, i in enumerate(var_index):
        for m, j in enumerate(var_index):
            for r, x in Z.mul(1, basis_vector(i), 1, basis_vector(j)).items():
                _acc(row(r)["quadratic"], (min(n, m), max(n, m)), x)
    eqs = []
    for r in sorted(rows):
        eq = rows[r]
        if eq["constant"] or eq["linear"] or eq["quadratic"]:
            eqs.append({"row": Z.labels[2][r], **eq})
    return MCVariety(names, var_index, eqs, Z.lam)


def is_mc_point(Z: FiniteFilteredDGA, eta: Mapping, check_base: bool = True) -> bool:
    """Exact test of d(eta) + eta^2 = 0 (and eta = eta0 mod J^1 unless disabled)."""
    for i in eta:
        if not 0 <= i < Z.dim(1):
            raise ValueError("point has coordinates outside degree 1")
    if Z.curvature(eta):
        return False
    if check_base:
        low = {i: x for i, x in eta.items() if Z.level(1, i) == 0}
        if vadd(low, Z.eta0, coeffs=[1, -1]):
            return False
    return True


# ---------------------------------------------------------------------------
# staged lifting (successive linear solves on graded pieces)


def _graded_operator(Z: FiniteFilteredDGA, eta_low: Mapping, p: int, deg: int = 1):
    cols = Z.indices(deg, exact=p)
    rows = Z.indices(deg + 1, exact=p)
    pos = {r: n for n, r in enumerate(rows)}
    m = linalg.SparseMatrix(len(rows), len(cols))
    for n, c in enumerate(cols):
        for r, x in Z.twisted_d(deg, basis_vector(c), eta_low, eta_low).items():
            if r in pos:
                m.add(pos[r], n, x)
    return m, cols, rows


@dataclass
class Obstruction:
    stage: int
    residue: dict  # row label -> coefficient
    witness: dict  # row label -> coefficient; pairs to zero with every coboundary

    def to_json(self) -> dict:
        return {
            "stage": self.stage,
            "residue": {k: _fmt(v) for k, v in sorted(self.residue.items())},
            "witness": {k: _fmt(v) for k, v in sorted(self.witness.items())},
        }


@dataclass
class LiftResult:
    point: dict | None
    stages: list = field(default_factory=list)  # per stage: {"stage", "residue_norm", "correction"}
    obstruction: Obstruction | None = None

    @property
    def ok(self) -> bool:
        return self.point is not None


def staged_lift(
    Z: FiniteFilteredDGA,
    start: Mapping,
    first_stage: int = 1,
    rng: random.Random | None = None,
    keep: Mapping | None = None,
) -> LiftResult:
    """Correct ``start`` level by level until it is Maurer-Cartan.

    At stage p the residual d(eta) + eta^2 lies in J^p; its level-p part r is
    removed by solving Gr(d_{eta0,eta0}) c = -r on Gr^p Z^1 and adding c.
    ``keep`` optionally supplies an additional level-p piece to add before
    solving (used to transport a given point); with ``rng`` a random closed
    element of Gr^p is added, which samples the fibre of the lift.
    """
    if Z.lam:
        raise ValueError("specialize lam before solving")
    eta = dict(start)
    low = {i: x for i, x in eta.items() if Z.level(1, i) == 0}
    stages = []
    for p in range(first_stage, Z.K):
        res = Z.curvature(eta)
        below = {r: x for r, x in res.items() if Z.level(2, r) < p}
        if below:
            raise ValueError(f"residual has components below level {p}; start is not Maurer-Cartan modulo J^{p}")
        r_p = Z.level_part(2, res, p)
        m, cols, rows = _graded_operator(Z, low, p)
        rhs = [-r_p.get(r, Fraction(0)) for r in rows]
        correction: dict = {}
        if any(rhs):
            sol = linalg.solve(m, rhs)
            if not sol.ok:
                residue = {Z.labels[2][r]: r_p[r] for r in rows if r in r_p}
                witness = {Z.labels[2][r]: w for r, w in zip(rows, sol.witness) if w}
                return LiftResult(None, stages, Obstruction(p, residue, witness))
            correction = {cols[n]: x for n, x in enumerate(sol.solution) if x}
        if rng is not None and cols:
            for v in linalg.nullspace(m):
                t = Fraction(rng.randint(-2, 2))
                if t:
                    correction = vadd(correction, {cols[n]: x for n, x in enumerate(v) if x}, coeffs=[1, t])
        eta = vadd(eta, correction)
        stages.append({"stage": p, "residue_nonzero": bool(r_p), "correction_size": len(correction)})
    if Z.curvature(eta):
        raise AssertionError("staged lift finished with a nonzero residual")
    return LiftResult(eta, stages)


def random_mc_point(Z: FiniteFilteredDGA, seed: int, attempts: int = 10) -> dict | None:
    """A Maurer-Cartan point over eta0 with random free choices at every stage."""
    for n in range(attempts):
        out = staged_lift(Z, Z.eta0, rng=random.Random(seed * 7919 + n))
        if out.ok:
            return out.point
    return None


# ---------------------------------------------------------------------------
# gauge equivalence


def _require_q(Z: FiniteFilteredDGA) -> None:
    if Z.lam:
        raise ValueError("specialize lam before solving")


def inverse_unipotent(Z: FiniteFilteredDGA, alpha: Mapping) -> dict:
    """(1 + a')^{-1} = sum (-a')^n, finite because a' is in J^1."""
    one = Z.one()
    ap = vadd(alpha, one, coeffs=[1, -1])
    if any(Z.level(0, i) == 0 for i in ap):
        raise ValueError("element is not 1 modulo J^1")
    out = dict(one)
    term = dict(one)
    for _ in range(Z.K + 1):
        term = vscale(Z.mul(0, term, 0, ap), -1)
        if not term:
            break
        out = vadd(out, term)
    return out


def gauge_act(Z: FiniteFilteredDGA, phi: Mapping, alpha: Mapping) -> dict:
    """psi = alpha^{-1}(phi alpha + d alpha), so that d alpha + phi alpha - alpha psi = 0."""
    inv = inverse_unipotent(Z, alpha)
    inner = vadd(Z.mul(1, phi, 0, alpha), Z.dmap(0, alpha))
    return Z.mul(0, inv, 1, inner)


def gauge_defect(Z: FiniteFilteredDGA, phi: Mapping, psi: Mapping, alpha: Mapping) -> dict:
    """d alpha + phi alpha - alpha psi: alpha is a closed degree-0 map psi -> phi when this vanishes."""
    return vadd(Z.dmap(0, alpha), Z.mul(1, phi, 0, alpha), Z.mul(0, alpha, 1, psi), coeffs=[1, 1, -1])


@dataclass
class GaugeResult:
    alpha: dict | None
    witness: dict | None = None
    residual_ok: bool = False

    @property
    def ok(self) -> bool:
        return self.alpha is not None

    def to_json(self, Z: FiniteFilteredDGA) -> dict:
        out = {"equivalent": self.ok}
        if self.ok:
            out["alpha"] = {Z.labels[0][i]: _fmt(x) for i, x in sorted(self.alpha.items())}
            out["closed"] = self.residual_ok
        else:
            out["witness"] = {k: _fmt(v) for k, v in sorted(self.witness.items())}
        return out


def gauge_system(Z: FiniteFilteredDGA, phi: Mapping, psi: Mapping):
    """Matrix and right-hand side of d a' + phi a' - a' psi = psi - phi (plus eps(a') = 0)."""
    cols = Z.indices(0, 1)
    nrows = Z.dim(1)
    m = linalg.SparseMatrix(nrows + (1 if Z.eps is not None else 0), len(cols))
    for n, c in enumerate(cols):
        e = basis_vector(c)
        v = vadd(Z.dmap(0, e), Z.mul(1, phi, 0, e), Z.mul(0, e, 1, psi), coeffs=[1, 1, -1])
        for r, x in v.items():
            m.add(r, n, x)
        if Z.eps is not None:
            m.add(nrows, n, Z.eps.get(c, 0))
    rhs_v = vadd(psi, phi, coeffs=[1, -1])
    rhs = [rhs_v.get(r, Fraction(0)) for r in range(nrows)]
    if Z.eps is not None:
        rhs.append(Fraction(0))
    return m, rhs, cols


def gauge_solve(Z: FiniteFilteredDGA, phi: Mapping, psi: Mapping) -> GaugeResult:
    """Find alpha = 1 + a', a' in (J^1 Z)^0, with d alpha + phi alpha - alpha psi = 0."""
    _require_q(Z)
    for name, pt in (("phi", phi), ("psi", psi)):
        if not is_mc_point(Z, pt):
            raise ValueError(f"{name} is not a Maurer-Cartan point over the base point")
    m, rhs, cols = gauge_system(Z, phi, psi)
    if not any(rhs):
        alpha = Z.one()
        return GaugeResult(alpha, None, not gauge_defect(Z, phi, psi, alpha))
    sol = linalg.solve(m, rhs)
    if not sol.ok:
        labels = Z.labels[1] + (["eps"] if Z.eps is not None else [])
        return GaugeResult(None, {labels[r]: w for r, w in enumerate(sol.witness) if w})
    alpha = vadd(Z.one(), {cols[n]: x for n, x in enumerate(sol.solution) if x})
    return GaugeResult(alpha, None, not gauge_defect(Z, phi, psi, alpha))


def brute_force_gauge(Z: FiniteFilteredDGA, phi: Mapping, psi: Mapping) -> bool:
    """Independent decision: does phi - psi lie in the column span of the gauge operator?

    Compares ranks of the operator with and without the right-hand side
    instead of solving, so it shares no code path with ``gauge_solve``.
    """
    m, rhs, _ = gauge_system(Z, phi, psi)
    aug = linalg.SparseMatrix(m.nrows, m.ncols + 1, dict(m.entries))
    for r, x in enumerate(rhs):
        aug.add(r, m.ncols, x)
    return linalg.rank_exact_sparse(aug) == linalg.rank_exact_sparse(m)


# ---------------------------------------------------------------------------
# charts


@dataclass
class ChartPoint:
    alpha: dict
    psi: dict
    psi_is_mc: bool
    equation_ok: bool
    staged_agrees: bool

    @property
    def ok(self) -> bool:
        return self.psi_is_mc and self.equation_ok and self.staged_agrees


def _psi_by_iteration(Z: FiniteFilteredDGA, phi: Mapping, alpha: Mapping) -> dict:
    # alpha psi = phi alpha + d alpha, with alpha = 1 + a': psi = rhs - a' psi, iterated
    rhs = vadd(Z.mul(1, phi, 0, alpha), Z.dmap(0, alpha))
    ap = vadd(alpha, Z.one(), coeffs=[1, -1])
    psi = dict(rhs)
    for _ in range(Z.K + 1):
        new = vadd(rhs, Z.mul(0, ap, 1, psi), coeffs=[1, -1])
        if new == psi:
            break
        psi = new
    return psi


def chart_fiber(Z: FiniteFilteredDGA, phi: Mapping, alpha_primes: Iterable[Mapping]) -> list[ChartPoint]:
    """For each a' in (J^1 Z)^0, the point psi gauge-equivalent to phi via alpha = 1 + a'."""
    _require_q(Z)
    out = []
    for ap in alpha_primes:
        if any(Z.level(0, i) < 1 for i in ap):
            raise ValueError("alpha' must lie in J^1")
        alpha = vadd(Z.one(), ap)
        psi = gauge_act(Z, phi, alpha)
        other = _psi_by_iteration(Z, phi, alpha)
        out.append(
            ChartPoint(
                alpha,
                psi,
                is_mc_point(Z, psi),
                not gauge_defect(Z, phi, psi, alpha),
                other == psi,
            )
        )
    return out


def chart_equations(Z: FiniteFilteredDGA, phi: Mapping) -> dict:
    """Equations of C = {(y, a')}: psi = eta0 + y is Maurer-Cartan and gauge-related to phi by 1 + a'."""
    var = mc_equations(Z)
    gcols = Z.indices(0, 1)
    gnames = [f"a[{Z.labels[0][i]}]" for i in gcols]
    names = list(var.vars) + gnames
    nv = len(var.vars)
    eqs = [dict(eq) for eq in var.to_json()["equations"]]
    # d a' + phi a' - a' psi + phi - psi = 0 with psi = eta0 + sum y_v e_v
    rows: dict = {}

    def row(r):
        return rows.setdefault(r, {"constant": Fraction(0), "linear": {}, "quadratic": {}})

    base = vadd(phi, Z.eta0, coeffs=[1, -1])
    for r, x in base.items():
        row(r)["constant"] = x
    for n, i in enumerate(var.var_index):
        _acc(row(i)["linear"], n, Fraction(-1))
    for n, c in enumerate(gcols):
        e = basis_vector(c)
        v = vadd(Z.dmap(0, e), Z.mul(1, phi, 0, e), Z.mul(0, e, 1, Z.eta0), coeffs=[1, 1, -1])
        for r, x in v.items():
            _acc(row(r)["linear"], nv + n, x)
        for m_, i in enumerate(var.var_index):
            for r, x in Z.mul(0, e, 1, basis_vector(i)).items():
                _acc(row(r)["quadratic"], (m_, nv + n), -x)
    for r in sorted(rows):
        eq = rows[r]
        if eq["constant"] or eq["linear"] or eq["quadratic"]:
            eqs.append(
                {
                    "row": f"gauge:{Z.labels[1][r]}",
                    "constant": _fmt(eq["constant"]),
                    "linear": {names[v]: _fmt(c) for v, c in sorted(eq["linear"].items())},
                    "quadratic": {f"{names[v]}*{names[w]}": _fmt(c) for (v, w), c in sorted(eq["quadratic"].items())},
                }
            )
    return {"vars": names, "equations": eqs}


# ---------------------------------------------------------------------------
# tangent cohomology


def tangent_complex(Z: FiniteFilteredDGA, eta: Mapping) -> FreeComplex:
    """(J^1 Z, d_{eta,eta}) over Q."""
    _require_q(Z)
    idx = {deg: Z.indices(deg, 1) for deg in Z.dims}
    ranks = {deg: len(v) for deg, v in idx.items() if v}
    diffs = {}
    for deg, cols in idx.items():
        rows = idx.get(deg + 1, [])
        if not rows or not cols:
            continue
        pos = {r: n for n, r in enumerate(rows)}
        m = [[Fraction(0)] * len(cols) for _ in rows]
        for n, c in enumerate(cols):
            for r, x in Z.twisted_d(deg, basis_vector(c), eta, eta).items():
                if r not in pos:
                    raise AssertionError("twisted differential leaves J^1")
                m[pos[r]][n] = x
        diffs[deg] = m
    return FreeComplex(QQ, ranks, diffs, {deg: [Z.labels[deg][i] for i in v] for deg, v in idx.items() if v})


def tangent_cohomology(Z: FiniteFilteredDGA, eta: Mapping) -> dict:
    """Dims of H^i(J^1 Z, d_{eta,eta}) with an independent H^1 cross-check.

    The cross-check computes corank of the Jacobian of the emitted MC system
    at eta minus the rank of the infinitesimal gauge directions
    eta a - a eta - d a.
    """
    if not is_mc_point(Z, eta):
        raise ValueError("tangent cohomology needs a Maurer-Cartan point")
    tc = tangent_complex(Z, eta)
    square = tc.check()
    window = trusted_window(Z)
    dims = homology_ranks(tc, window)
    var = mc_equations(Z)
    y = var.coordinates(eta)
    jac = var.jacobian(y)
    rank_jac = linalg.rank(jac) if var.equations else 0
    gcols = Z.indices(0, 1)
    gm = linalg.SparseMatrix(len(var.vars), len(gcols))
    vpos = {i: n for n, i in enumerate(var.var_index)}
    for n, c in enumerate(gcols):
        e = basis_vector(c)
        v = vadd(Z.mul(1, eta, 0, e), Z.mul(0, e, 1, eta), Z.dmap(0, e), coeffs=[1, -1, -1])
        for r, x in v.items():
            gm.add(vpos[r], n, x)
    rank_gauge = linalg.rank(gm)
    cross = len(var.vars) - rank_jac - rank_gauge
    return {
        "dims": {str(k): v for k, v in sorted(dims.items())},
        "square_zero": not square,
        "h1": dims.get(1, 0),
        "jacobian_corank_mod_gauge": cross,
        "agree": dims.get(1, 0) == cross,
    }


def conjugation_check(Z: FiniteFilteredDGA, phi: Mapping, alpha: Mapping) -> bool:
    """x -> alpha^{-1} x alpha intertwines d_{phi,phi} and d_{psi,psi} on J^1 Z (psi = alpha . phi)."""
    psi = gauge_act(Z, phi, alpha)
    inv = inverse_unipotent(Z, alpha)
    for deg in sorted(Z.dims):
        if deg + 1 > Z.top:
            continue
        for c in Z.indices(deg, 1):
            x = basis_vector(c)
            conj = Z.mul(deg, Z.mul(0, inv, deg, x), 0, alpha)
            lhs = Z.twisted_d(deg, conj, psi, psi)
            t = Z.twisted_d(deg, x, phi, phi)
            rhs = Z.mul(deg + 1, Z.mul(0, inv, deg + 1, t), 0, alpha)
            if vadd(lhs, rhs, coeffs=[1, -1]):
                return False
    return True


# ---------------------------------------------------------------------------
# filtered maps and transport


@dataclass
class FilteredDGAMap:
    source: FiniteFilteredDGA
    target: FiniteFilteredDGA
    mats: dict  # deg -> {c: {r: coeff}}

    def apply(self, deg: int, v: Mapping) -> dict:
        cols = self.mats.get(deg, {})
        out: dict = {}
        for c, x in v.items():
            for r, y in cols.get(c, {}).items():
                _acc(out, r, x * y)
        return out

    def then(self, later: "FilteredDGAMap") -> "FilteredDGAMap":
        mats = {}
        for deg in self.source.dims:
            mats[deg] = {c: later.apply(deg, self.apply(deg, basis_vector(c))) for c in range(self.source.dim(deg))}
        return FilteredDGAMap(self.source, later.target, mats)

    def violations(self) -> list[str]:
        S, T = self.source, self.target
        bad = []
        for deg in S.dims:
            for c in range(S.dim(deg)):
                e = basis_vector(c)
                img = self.apply(deg, e)
                if any(T.level(deg, r) < S.level(deg, c) for r in img):
                    bad.append(f"{S.labels[deg][c]} maps to a lower filtration level")
                if deg + 1 <= min(S.top, T.top) and vadd(T.dmap(deg, img), self.apply(deg + 1, S.dmap(deg, e)), coeffs=[1, -1]):
                    bad.append(f"map does not commute with d on {S.labels[deg][c]}")
        for (da, db), _ in sorted(S.mult.items()):
            if da + db > T.top:
                continue
            for i in range(S.dim(da)):
                for j in range(S.dim(db)):
                    a, b = basis_vector(i), basis_vector(j)
                    lhs = self.apply(da + db, S.mul(da, a, db, b))
                    rhs = T.mul(da, self.apply(da, a), db, self.apply(db, b))
                    if vadd(lhs, rhs, coeffs=[1, -1]):
                        bad.append(f"map is not multiplicative on {S.labels[da][i]}*{S.labels[db][j]}")
        if S.unit is not None and T.unit is not None and self.apply(0, S.unit) != T.unit:
            bad.append("unit not preserved")
        low = {i: x for i, x in self.apply(1, S.eta0).items() if T.level(1, i) == 0}
        if vadd(low, T.eta0, coeffs=[1, -1]):
            bad.append("base points do not match modulo J^1")
        return bad

    def graded_quasi_iso(self, levels: Iterable[int]) -> dict:
        """Per level p: is Gr^p of the map a quasi-isomorphism in the trusted window?"""
        S, T = self.source, self.target
        out = {}
        for p in levels:
            gs, gt = graded_complex(S, p), graded_complex(T, p)
            maps = {}
            for deg in gs.degrees():
                cols = S.indices(deg, exact=p)
                rows = T.indices(deg, exact=p)
                if not rows:
                    continue
                pos = {r: n for n, r in enumerate(rows)}
                m = [[Fraction(0)] * len(cols) for _ in rows]
                for n, c in enumerate(cols):
                    for r, x in self.apply(deg, basis_vector(c)).items():
                        if r in pos:
                            m[pos[r]][n] = x
                maps[deg] = m
            out[p] = _induced_iso(gs, gt, maps, trusted_window(S)[1])
        return out


def _induced_iso(gs: FreeComplex, gt: FreeComplex, maps: Mapping, top: int) -> bool:
    """H^j(f) is bijective for 0 <= j <= top: rank of f(Z^j) + B^j modulo B^j against both dimensions."""

    def cols_of(m, nrows):
        return [[m[r][c] for r in range(nrows)] for c in range(len(m[0]) if m else 0)]

    for j in range(0, top + 1):
        ns, nt = gs.rank(j), gt.rank(j)
        d_s = gs.d(j) if gs.rank(j + 1) and ns else []
        z_s = linalg.nullspace(d_s) if d_s else [[Fraction(int(r == c)) for r in range(ns)] for c in range(ns)]
        b_s = linalg.rank(gs.d(j - 1)) if gs.rank(j - 1) and ns else 0
        z_t = nt - (linalg.rank(gt.d(j)) if gt.rank(j + 1) and nt else 0)
        b_cols = cols_of(gt.d(j - 1), nt) if gt.rank(j - 1) and nt else []
        b_t = linalg.rank(linalg.SparseMatrix.from_columns(nt, [dict(enumerate(v)) for v in b_cols])) if b_cols else 0
        h_s, h_t = len(z_s) - b_s, z_t - b_t
        if h_s != h_t:
            return False
        if not h_s:
            continue
        f = maps.get(j)
        imgs = [[sum((f[r][c] * v[c] for c in range(ns)), Fraction(0)) for r in range(nt)] for v in z_s] if f else []
        both = linalg.SparseMatrix.from_columns(nt, [dict(enumerate(v)) for v in imgs + b_cols])
        if linalg.rank(both) - b_t != h_s:
            return False
    return True


def identity_map(Z: FiniteFilteredDGA) -> FilteredDGAMap:
    return FilteredDGAMap(Z, Z, {deg: {c: basis_vector(c) for c in range(n)} for deg, n in Z.dims.items()})


@dataclass
class TransportResult:
    point: dict | None
    hypotheses: dict
    stages: list
    obstruction: Obstruction | None = None

    @property
    def ok(self) -> bool:
        return self.point is not None

    def to_json(self, Z: FiniteFilteredDGA) -> dict:
        out = {"ok": self.ok, "hypotheses": self.hypotheses, "stages": self.stages}
        if self.point is not None:
            out["point"] = {Z.labels[1][i]: _fmt(x) for i, x in sorted(self.point.items())}
        if self.obstruction is not None:
            out["obstruction"] = self.obstruction.to_json()
        return out


def gm_transport(psimap: FilteredDGAMap, eta: Mapping) -> TransportResult:
    """Transport an MC point of the source to the target, one filtration level at a time.

    Stage p takes the level-p part of the image of eta, adds the correction
    from one linear solve on Gr^p of the target, and checks that the new
    residual lies in J^{p+1}.  For an honest dga map every correction is 0.
    """
    S, T = psimap.source, psimap.target
    _require_q(T)
    if not is_mc_point(S, eta):
        raise ValueError("input is not a Maurer-Cartan point of the source")
    viol = psimap.violations()
    filtered = not any("filtration" in v for v in viol)
    if not filtered:
        raise ValueError("map is not filtered: " + "; ".join(v for v in viol if "filtration" in v))
    hyp = {
        "violations": viol,
        "graded_quasi_iso": {str(k): v for k, v in psimap.graded_quasi_iso(range(1, T.K)).items()},
    }
    image = psimap.apply(1, eta)
    cur = {i: x for i, x in image.items() if T.level(1, i) == 0}
    stages = []
    for p in range(1, T.K):
        cur = vadd(cur, T.level_part(1, image, p))
        res = T.curvature(cur)
        if any(T.level(2, r) < p for r in res):
            raise AssertionError("residual below the current stage")
        r_p = T.level_part(2, res, p)
        correction: dict = {}
        if r_p:
            m, cols, rows = _graded_operator(T, T.eta0, p)
            sol = linalg.solve(m, [-r_p.get(r, Fraction(0)) for r in rows])
            if not sol.ok:
                residue = {T.labels[2][r]: x for r, x in r_p.items()}
                witness = {T.labels[2][r]: w for r, w in zip(rows, sol.witness) if w}
                return TransportResult(None, hyp, stages, Obstruction(p, residue, witness))
            correction = {cols[n]: x for n, x in enumerate(sol.solution) if x}
        cur = vadd(cur, correction)
        stages.append({"stage": p, "correction": bool(correction)})
    if T.curvature(cur):
        raise AssertionError("transport finished with a nonzero residual")
    return TransportResult(cur, hyp, stages)


def hodge_specialize(Z: FiniteFilteredDGA, value) -> FiniteFilteredDGA:
    """Set the Rees parameter to ``value`` (0 gives the Higgs-type fibre, 1 the flat one)."""
    if not Z.lam:
        raise ValueError("dga has no formal lam")
    return Z.specialize(value)


def commutator_free(var: MCVariety) -> bool:
    """True when no coefficient of the system involves lam (all commutator terms gone)."""
    for eq in var.equations:
        vals = [eq["constant"], *eq["linear"].values(), *eq["quadratic"].values()]
        for c in vals:
            if isinstance(c, Poly) and not c.is_constant():
                return False
    return True


# ---------------------------------------------------------------------------
# the MC category as an augmented dg-category


class MCCategory(AugmentedDGC):
    """Objects: named MC points; Hom(x, y) = (Z, d_{x,y}) with composition the product."""

    def __init__(self, Z: FiniteFilteredDGA, points: Mapping):
        _require_q(Z)
        if Z.unit is None or Z.eps is None:
            raise ValueError("an MC category needs a unit and an augmentation")
        for name, p in points.items():
            if not is_mc_point(Z, p):
                raise ValueError(f"object {name} is not Maurer-Cartan")
        self.Z = Z
        self.points = dict(points)
        self.objects = list(points)
        self._homs: dict = {}

    def hom(self, x, y) -> FreeComplex:
        key = (x, y)
        if key not in self._homs:
            Z = self.Z
            ranks = dict(Z.dims)
            diffs = {}
            for deg in Z.dims:
                if not Z.dim(deg + 1) or deg + 1 > Z.top:
                    continue
                m = [[Fraction(0)] * Z.dim(deg) for _ in range(Z.dim(deg + 1))]
                for c in range(Z.dim(deg)):
                    for r, v in Z.twisted_d(deg, basis_vector(c), self.points[y], self.points[x]).items():
                        m[r][c] = v
                diffs[deg] = m
            self._homs[key] = FreeComplex(QQ, ranks, diffs)
        return self._homs[key]

    def compose(self, x, y, z, g, f):
        dg, vg = g
        df, vf = f
        deg = dg + df
        n = self.Z.dim(deg)
        prod = self.Z.mul(dg, {i: v for i, v in enumerate(vg) if v}, df, {i: v for i, v in enumerate(vf) if v})
        return deg, [prod.get(i, Fraction(0)) for i in range(n)]

    def unit(self, x):
        u = self.Z.one()
        return 0, [u.get(i, Fraction(0)) for i in range(self.Z.dim(0))]

    def epsilon(self, x, y, v) -> Fraction:
        deg, vec = v
        if deg != 0:
            return Fraction(0)
        return sum((c * self.Z.eps.get(i, 0) for i, c in enumerate(vec)), Fraction(0))


# ---------------------------------------------------------------------------
# small examples


def toy_square_dga() -> FiniteFilteredDGA:
    """Basis 1 (deg 0), e (deg 1, level 1), f (deg 2, level 2); de = 0, e.e = f."""
    one = Fraction(1)
    mult = {
        (0, 0): {(0, 0): {0: one}},
        (0, 1): {(0, 0): {0: one}},
        (1, 0): {(0, 0): {0: one}},
        (0, 2): {(0, 0): {0: one}},
        (2, 0): {(0, 0): {0: one}},
        (1, 1): {(0, 0): {0: one}},
    }
    return FiniteFilteredDGA(
        {0: 1, 1: 1, 2: 1},
        {0: [0], 1: [1], 2: [2]},
        {},
        mult,
        unit={0: one},
        eps={0: one},
        labels={0: ["1"], 1: ["e"], 2: ["f"]},
        top=2,
    )


def toy_gauge_dga() -> FiniteFilteredDGA:
    """Basis 1, a (deg 0), e, e' (deg 1), da = e; a, e, e' in J^1 with all products of them zero."""
    one = Fraction(1)
    mult: dict = {}
    dims = {0: 2, 1: 2}
    for deg, n in dims.items():
        for i in range(n):
            mult.setdefault((0, deg), {})[(0, i)] = {i: one}
            mult.setdefault((deg, 0), {})[(i, 0)] = {i: one}
    return FiniteFilteredDGA(
        dims,
        {0: [0, 1], 1: [1, 1]},
        {0: {1: {0: one}}},
        mult,
        unit={0: one},
        eps={0: one},
        labels={0: ["1", "a"], 1: ["e", "e'"]},
        top=2,
    )


def free_nilpotent_dga(gens: Mapping, dgen: Mapping, length: int, top: int = 2) -> FiniteFilteredDGA:
    """Tensor algebra on generators of degree 0 or 1, truncated at word length ``length``.

    ``gens`` maps generator names to degrees; ``dgen`` maps a degree-0
    generator to a {degree-1 generator: coeff} differential.  The filtration
    is word length, so J^length = 0; the unit is the empty word and eps
    is its coefficient.
    """
    names = sorted(gens)
    words = [()]
    frontier = [()]
    for _ in range(length - 1):
        nxt = []
        for w in frontier:
            for g in names:
                nw = w + (g,)
                if sum(gens[x] for x in nw) <= top:
                    nxt.append(nw)
        words += nxt
        frontier = nxt
    by_deg: dict = {}
    for w in words:
        by_deg.setdefault(sum(gens[x] for x in w), []).append(w)
    pos = {deg: {w: n for n, w in enumerate(ws)} for deg, ws in by_deg.items()}

    def wdeg(w):
        return sum(gens[x] for x in w)

    def dword(w) -> dict:
        out: dict = {}
        sign = 1
        for k, g in enumerate(w):
            for h, c in dgen.get(g, {}).items():
                nw = w[:k] + (h,) + w[k + 1:]
                if nw in pos.get(wdeg(nw), {}):
                    _acc(out, pos[wdeg(nw)][nw], Fraction(c) * sign)
            if gens[g] % 2:
                sign = -sign
        return out

    d = {deg: {n: dword(w) for n, w in enumerate(ws)} for deg, ws in by_deg.items()}
    mult: dict = {}
    for da, wa in by_deg.items():
        for db, wb in by_deg.items():
            if da + db > top:
                continue
            t = {}
            for i, u in enumerate(wa):
                for j, v in enumerate(wb):
                    w = u + v
                    if w in pos.get(da + db, {}):
                        t[(i, j)] = {pos[da + db][w]: Fraction(1)}
            mult[(da, db)] = t
    return FiniteFilteredDGA(
        {deg: len(ws) for deg, ws in by_deg.items()},
        {deg: [len(w) for w in ws] for deg, ws in by_deg.items()},
        d,
        mult,
        unit={pos[0][()]: Fraction(1)},
        eps={pos[0][()]: Fraction(1)},
        labels={deg: ["".join(w) or "1" for w in ws] for deg, ws in by_deg.items()},
        top=top,
    )
