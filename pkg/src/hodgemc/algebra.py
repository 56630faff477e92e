"""Exact base rings and the filtered almost-polynomial algebra L.

Coefficients are ``fractions.Fraction``.  ``Poly`` is a sparse polynomial in
x_1..x_d and, in Rees mode, a central variable ``lam``.  ``FilteredPBWAlgebra``
presents L = A<d_1..d_m> with [d_i, x_j] = c * delta_ij where c is 0, 1 or
lam.  Elements are stored in left normal form sum a_alpha d^alpha.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Iterable, Iterator, Mapping, Sequence

import sympy

Exp = tuple  # tuple[int, ...]


def _frac(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, bool):
        raise TypeError("booleans are not coefficients")
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, float):
        raise TypeError("floating point coefficients are not accepted")
    return Fraction(c)


class Poly:
    """Sparse polynomial with rational coefficients; immutable."""

    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping | None = None, *, _clean: bool = False):
        self.nvars = nvars
        if terms is None:
            self.terms = {}
        elif _clean:
            self.terms = terms
        else:
            t = {}
            for e, c in terms.items():
                if len(e) != nvars:
                    raise ValueError("exponent length does not match variable count")
                c = _frac(c)
                if c:
                    t[tuple(e)] = c
            self.terms = t
        self._hash = None

    # constructors -------------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls(nvars, {}, _clean=True)

    @classmethod
    def const(cls, nvars: int, c) -> "Poly":
        c = _frac(c)
        return cls(nvars, {(0,) * nvars: c} if c else {}, _clean=True)

    @classmethod
    def var(cls, nvars: int, i: int) -> "Poly":
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): Fraction(1)}, _clean=True)

    @classmethod
    def monomial(cls, exps: Sequence[int], c=1) -> "Poly":
        return cls(len(exps), {tuple(exps): c})

    # arithmetic ---------------------------------------------------------
    def _coerce(self, other) -> "Poly | None":
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise ValueError("polynomials live in different rings")
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return Poly.const(self.nvars, other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if not o.terms:
            return self
        if not self.terms:
            return o
        t = dict(self.terms)
        for e, c in o.terms.items():
            s = t.get(e, 0) + c
            if s:
                t[e] = s
            else:
                t.pop(e, None)
        return Poly(self.nvars, t, _clean=True)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.nvars, {e: -c for e, c in self.terms.items()}, _clean=True)

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
            c = _frac(other)
            if not c:
                return Poly.zero(self.nvars)
            return Poly(self.nvars, {e: v * c for e, v in self.terms.items()}, _clean=True)
        if not isinstance(other, Poly):
            return NotImplemented
        if other.nvars != self.nvars:
            raise ValueError("polynomials live in different rings")
        if not self.terms or not other.terms:
            return Poly.zero(self.nvars)
        t: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                s = t.get(e, 0) + c1 * c2
                if s:
                    t[e] = s
                else:
                    t.pop(e, None)
        return Poly(self.nvars, t, _clean=True)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Poly":
        out = Poly.const(self.nvars, 1)
        for _ in range(n):
            out = out * self
        return out

    # predicates ---------------------------------------------------------
    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.nvars == other.nvars and self.terms == other.terms
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.terms == Poly.const(self.nvars, other).terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return self.terms.get((0,) * self.nvars, Fraction(0))

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def degree_in(self, i: int) -> int:
        return max((e[i] for e in self.terms), default=-1)

    # calculus and substitution ------------------------------------------
    def diff(self, i: int) -> "Poly":
        t = {}
        for e, c in self.terms.items():
            if e[i]:
                ne = list(e)
                ne[i] -= 1
                t[tuple(ne)] = c * e[i]
        return Poly(self.nvars, t, _clean=True)

    def evaluate(self, point: Sequence) -> Fraction:
        total = Fraction(0)
        for e, c in self.terms.items():
            v = c
            for x, k in zip(point, e):
                if k:
                    v *= Fraction(x) ** k
            total += v
        return total

    def subs(self, i: int, value) -> "Poly":
        """Substitute x_i := value (rational), keeping the variable slot."""
        value = _frac(value)
        t: dict = {}
        for e, c in self.terms.items():
            ne = list(e)
            k = ne[i]
            ne[i] = 0
            ne = tuple(ne)
            s = t.get(ne, 0) + c * value ** k
            if s:
                t[ne] = s
            else:
                t.pop(ne, None)
        return Poly(self.nvars, t, _clean=True)

    def drop_var(self, i: int, value=None) -> "Poly":
        """Substitute x_i := value and remove the slot (value None requires absence)."""
        p = self if value is None else self.subs(i, value)
        t = {}
        for e, c in p.terms.items():
            if e[i]:
                raise ValueError("variable still present")
            t[e[:i] + e[i + 1:]] = c
        return Poly(self.nvars - 1, t, _clean=True)

    def add_var(self, i: int) -> "Poly":
        return Poly(self.nvars + 1, {e[:i] + (0,) + e[i:]: c for e, c in self.terms.items()}, _clean=True)

    def sorted_terms(self) -> list:
        return sorted(self.terms.items(), key=lambda ec: (sum(ec[0]), ec[0]), reverse=True)

    def format(self, names: Sequence[str]) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(
                n if k == 1 else f"{n}**{k}" for n, k in zip(names, e) if k
            )
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        s = " + ".join(parts)
        return s.replace("+ -", "- ")

    def __repr__(self) -> str:
        names = [f"x{i + 1}" for i in range(self.nvars)]
        return f"Poly({self.format(names)})"


class PolyRing:
    """The ring A = Q[names]; owns variable names and string conversion."""

    def __init__(self, names: Sequence[str], lam_index: int | None = None):
        self.names = tuple(names)
        self.nvars = len(self.names)
        self.lam_index = lam_index
        self._symbols = {n: sympy.Symbol(n) for n in self.names}

    def __eq__(self, other) -> bool:
        return isinstance(other, PolyRing) and (self.names, self.lam_index) == (other.names, other.lam_index)

    def __hash__(self) -> int:
        return hash((self.names, self.lam_index))

    def zero(self) -> Poly:
        return Poly.zero(self.nvars)

    def one(self) -> Poly:
        return Poly.const(self.nvars, 1)

    def const(self, c) -> Poly:
        return Poly.const(self.nvars, c)

    def var(self, name_or_index) -> Poly:
        i = name_or_index if isinstance(name_or_index, int) else self.names.index(name_or_index)
        return Poly.var(self.nvars, i)

    def lam(self) -> Poly:
        if self.lam_index is None:
            raise ValueError("ring has no Rees parameter")
        return self.var(self.lam_index)

    def coerce(self, value) -> Poly:
        if isinstance(value, Poly):
            if value.nvars != self.nvars:
                raise ValueError("polynomial from a different ring")
            return value
        if isinstance(value, str):
            return self.parse(value)
        return self.const(value)

    def parse(self, text: str) -> Poly:
        """Parse a polynomial string such as ``"3/2*x**2 - lam*x + 1"``."""
        try:
            expr = sympy.sympify(text, locals=dict(self._symbols), rational=True)
        except (sympy.SympifyError, SyntaxError, TypeError) as exc:
            raise ValueError(f"cannot parse polynomial {text!r}: {exc}") from exc
        stray = expr.free_symbols - set(self._symbols.values())
        if stray:
            raise ValueError(f"unknown symbols {sorted(map(str, stray))} in {text!r}")
        if not self.names:
            if not expr.is_Rational:
                raise ValueError(f"{text!r} is not a rational number")
            return Poly.const(0, Fraction(int(expr.p), int(expr.q)))
        try:
            sp = sympy.Poly(expr, *[self._symbols[n] for n in self.names], domain="QQ")
        except sympy.PolynomialError as exc:
            raise ValueError(f"{text!r} is not a polynomial: {exc}") from exc
        terms = {}
        for e, c in sp.terms():
            c = sympy.Rational(c)
            terms[tuple(e)] = Fraction(int(c.p), int(c.q))
        return Poly(self.nvars, terms)

    def format(self, p: Poly) -> str:
        return p.format(self.names)

    def diff(self, p: Poly, i: int) -> Poly:
        return p.diff(i)


MODES = ("poly", "weyl", "rees")


class AlgebraElement:
    """Left normal form sum a_alpha d^alpha; immutable."""

    __slots__ = ("algebra", "terms", "_hash")

    def __init__(self, algebra: "FilteredPBWAlgebra", terms: Mapping | None = None):
        self.algebra = algebra
        t = {}
        for a, c in (terms or {}).items():
            c = algebra.ring.coerce(c) if not isinstance(c, Poly) else c
            if c:
                t[tuple(a)] = c
        self.terms = t
        self._hash = None

    def level(self) -> int:
        """Filtration level: max |alpha| (-1 for zero)."""
        return max((sum(a) for a in self.terms), default=-1)

    def _check(self, other: "AlgebraElement") -> None:
        if other.algebra != self.algebra:
            raise ValueError("elements belong to different algebras")

    def __add__(self, other):
        if not isinstance(other, AlgebraElement):
            other = self.algebra.scalar(other)
        self._check(other)
        t = dict(self.terms)
        for a, c in other.terms.items():
            t[a] = t[a] + c if a in t else c
        return AlgebraElement(self.algebra, t)

    __radd__ = __add__

    def __neg__(self):
        return AlgebraElement(self.algebra, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            return self.algebra.multiply(self, other)
        return self.algebra.multiply(self, self.algebra.scalar(other))

    def __rmul__(self, other):
        return self.algebra.multiply(self.algebra.scalar(other), self)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AlgebraElement):
            try:
                other = self.algebra.scalar(other)
            except (TypeError, ValueError):
                return NotImplemented
        return self.algebra == other.algebra and self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __bool__(self) -> bool:
        return bool(self.terms)

    def coeff(self, alpha) -> Poly:
        return self.terms.get(tuple(alpha), self.algebra.ring.zero())

    def to_json(self) -> list:
        return [
            {"alpha": list(a), "coeff": self.algebra.ring.format(c)}
            for a, c in sorted(self.terms.items(), key=lambda t: (sum(t[0]), t[0]))
        ]

    def __repr__(self) -> str:
        parts = []
        for a, c in sorted(self.terms.items(), key=lambda t: (sum(t[0]), t[0]), reverse=True):
            mono = "*".join(
                (g if k == 1 else f"{g}^{k}") for g, k in zip(self.algebra.generator_names, a) if k
            )
            coeff = self.algebra.ring.format(c)
            if not mono:
                parts.append(f"({coeff})")
            else:
                parts.append(mono if coeff == "1" else f"({coeff})*{mono}")
        return " + ".join(parts) if parts else "0"


class FilteredPBWAlgebra:
    """L = A<d_1..d_m> with [d_i, f] = scale * df/dx_i, filtered by d-order.

    ``mode`` is ``"poly"`` (scale 0, commutative), ``"weyl"`` (scale 1; an
    optional rational ``scale`` gives the Weyl algebra at another nonzero
    value of the Rees parameter) or ``"rees"`` (scale = central ``lam``).

    ``ring`` replaces the coefficient ring Q[x, (lam)] by another commutative
    ring with the same variable names and a ``diff(f, i)`` method, for
    instance rational functions with prescribed poles.
    """

    def __init__(self, mode: str, base_vars: int | Sequence[str], generators: int, *, scale=None, ring=None):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if isinstance(base_vars, int):
            names = ["x"] if base_vars == 1 else [f"x{i + 1}" for i in range(base_vars)]
        else:
            names = list(base_vars)
        if generators < 0:
            raise ValueError("generator count must be non-negative")
        if mode != "poly" and generators > len(names):
            raise ValueError("each generator needs a base variable to differentiate")
        self.mode = mode
        self.d = len(names)
        self.m = generators
        if mode == "rees" and "lam" in names:
            raise ValueError("'lam' is reserved for the Rees parameter")
        if ring is not None:
            want = tuple(names + ["lam"]) if mode == "rees" else tuple(names)
            if tuple(ring.names) != want:
                raise ValueError(f"coefficient ring variables {tuple(ring.names)} do not match {want}")
            self.ring = ring
        elif mode == "rees":
            self.ring = PolyRing(names + ["lam"], lam_index=len(names))
        else:
            self.ring = PolyRing(names)
        if mode == "weyl":
            self.scale = Fraction(1) if scale is None else _frac(scale)
            if not self.scale:
                raise ValueError("weyl scale must be nonzero; use poly mode for 0")
        elif scale is not None:
            raise ValueError("scale only applies to weyl mode")
        else:
            self.scale = None
        self.generator_names = ["d"] if generators == 1 else [f"d{i + 1}" for i in range(generators)]
        self._cache_dgamma: dict = {}
        self._cache_normal: dict = {}

    # identity -------------------------------------------------------------
    def key(self) -> tuple:
        return (self.mode, self.ring, self.m, self.scale)

    def __eq__(self, other) -> bool:
        return isinstance(other, FilteredPBWAlgebra) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"FilteredPBWAlgebra(mode={self.mode!r}, base_vars={list(self.ring.names[:self.d])}, generators={self.m})"

    def descriptor(self) -> dict:
        out = {"mode": self.mode, "base_vars": self.d, "generators": self.m}
        if self.mode == "weyl" and self.scale != 1:
            out["scale"] = str(self.scale)
        return out

    @classmethod
    def from_descriptor(cls, desc: Mapping) -> "FilteredPBWAlgebra":
        try:
            mode = desc["mode"]
            base_vars = desc["base_vars"]
            gens = desc["generators"]
        except KeyError as exc:
            raise ValueError(f"algebra descriptor missing field {exc}") from exc
        scale = desc.get("scale")
        return cls(mode, base_vars, int(gens), scale=Fraction(scale) if scale is not None else None)

    # basic elements -------------------------------------------------------
    @property
    def zero_alpha(self) -> tuple:
        return (0,) * self.m

    def scalar(self, c) -> AlgebraElement:
        p = self.ring.coerce(c)
        return AlgebraElement(self, {self.zero_alpha: p})

    def one(self) -> AlgebraElement:
        return self.scalar(1)

    def monomial(self, alpha, coeff=1) -> AlgebraElement:
        return AlgebraElement(self, {tuple(alpha): self.ring.coerce(coeff)})

    def generator(self, i: int) -> AlgebraElement:
        a = [0] * self.m
        a[i] = 1
        return self.monomial(a)

    def element(self, terms: Mapping) -> AlgebraElement:
        return AlgebraElement(self, {tuple(a): self.ring.coerce(c) for a, c in terms.items()})

    def element_from_json(self, data: Sequence[Mapping]) -> AlgebraElement:
        terms: dict = {}
        for item in data:
            alpha = tuple(int(v) for v in item["alpha"])
            if len(alpha) != self.m:
                raise ValueError(f"multi-index {alpha} has wrong length (expected {self.m})")
            if any(v < 0 for v in alpha):
                raise ValueError(f"multi-index {alpha} has a negative entry")
            c = self.ring.coerce(str(item.get("coeff", "1")))
            terms[alpha] = terms[alpha] + c if alpha in terms else c
        return AlgebraElement(self, terms)

    # derivations ----------------------------------------------------------
    def commutator_value(self, i: int, j: int) -> Poly:
        """[d_i, x_j] as an element of A."""
        if i != j or self.mode == "poly":
            return self.ring.zero()
        if self.mode == "rees":
            return self.ring.lam()
        return self.ring.const(self.scale)

    def deriv(self, i: int, f):
        """The derivation [d_i, -] applied to a coefficient f."""
        if self.mode == "poly":
            return f * 0
        g = self.ring.diff(f, i)
        if self.mode == "rees":
            return g * self.ring.lam()
        return g * self.scale if self.scale != 1 else g

    def d_gamma(self, gamma: tuple, f):
        """Iterated derivation D^gamma f."""
        if not any(gamma):
            return f
        key = (gamma, f)
        hit = self._cache_dgamma.get(key)
        if hit is not None:
            return hit
        i = next(k for k, v in enumerate(gamma) if v)
        g = list(gamma)
        g[i] -= 1
        out = self.deriv(i, self.d_gamma(tuple(g), f))
        if len(self._cache_dgamma) < 200000:
            self._cache_dgamma[key] = out
        return out

    def left_normal(self, alpha: tuple, f) -> dict:
        """d^alpha * f = sum_gamma C(alpha, gamma) D^gamma(f) d^(alpha - gamma)."""
        key = (alpha, f)
        hit = self._cache_normal.get(key)
        if hit is not None:
            return hit
        out: dict = {}
        if self.mode == "poly" or not any(alpha):
            if f:
                out[alpha] = f
        else:
            for gamma in itertools.product(*(range(a + 1) for a in alpha)):
                g = self.d_gamma(gamma, f)
                if not g:
                    continue
                c = 1
                for a, b in zip(alpha, gamma):
                    c *= comb(a, b)
                rest = tuple(a - b for a, b in zip(alpha, gamma))
                term = g * c if c != 1 else g
                out[rest] = out[rest] + term if rest in out else term
            out = {k: v for k, v in out.items() if v}
        if len(self._cache_normal) < 200000:
            self._cache_normal[key] = out
        return out

    # ring structure -------------------------------------------------------
    def multiply(self, u: AlgebraElement, v: AlgebraElement) -> AlgebraElement:
        if u.algebra != self or v.algebra != self:
            raise ValueError("algebra mismatch in multiply")
        out: dict = {}
        for alpha, a in u.terms.items():
            for beta, b in v.terms.items():
                for rest, g in self.left_normal(alpha, b).items():
                    key = tuple(x + y for x, y in zip(rest, beta))
                    term = a * g
                    out[key] = out[key] + term if key in out else term
        return AlgebraElement(self, out)

    def normal_order(self, tokens: Iterable) -> AlgebraElement:
        """Normal form of a product of tokens (variable/generator names or rationals)."""
        result = self.one()
        for tok in tokens:
            result = self.multiply(result, self._token(tok))
        return result

    def _token(self, tok) -> AlgebraElement:
        if isinstance(tok, AlgebraElement):
            return tok
        if isinstance(tok, (int, Fraction)) and not isinstance(tok, bool):
            return self.scalar(tok)
        if isinstance(tok, Poly):
            return self.scalar(tok)
        name = str(tok).replace("∂", "d").replace("λ", "lam")
        if name in self.generator_names:
            return self.generator(self.generator_names.index(name))
        if name == "d1" and self.m == 1:
            return self.generator(0)
        if name in self.ring.names:
            return self.scalar(self.ring.var(name))
        if name == "x1" and self.d == 1:
            return self.scalar(self.ring.var(0))
        return self.scalar(self.ring.parse(name))

    def act_standard(self, u: AlgebraElement, f):
        """Action of L on the standard module A: a d^alpha . f = a * D^alpha f."""
        out = self.ring.zero() if isinstance(f, Poly) else f * 0
        for alpha, a in u.terms.items():
            g = self.d_gamma(alpha, f)
            if g:
                out = out + a * g
        return out

    def delta_coproduct(self, u: AlgebraElement, level: int | None = None) -> dict:
        """Delta(a d^alpha) = sum_{beta+gamma=alpha} C(alpha,beta) a d^beta (x) d^gamma.

        Returned as {(beta, gamma): coefficient}, the coefficient sitting in
        the left factor; terms with |alpha| above ``level`` are dropped.
        """
        out: dict = {}
        for alpha, a in u.terms.items():
            if level is not None and sum(alpha) > level:
                continue
            for beta in itertools.product(*(range(k + 1) for k in alpha)):
                gamma = tuple(k - b for k, b in zip(alpha, beta))
                c = 1
                for k, b in zip(alpha, beta):
                    c *= comb(k, b)
                key = (beta, gamma)
                term = a * c
                out[key] = out[key] + term if key in out else term
        return {k: v for k, v in out.items() if v}

    def tensor_act(self, u: AlgebraElement, f, g):
        """u . (f (x) g) on A (x)_A A = A via the coproduct: sum act(psi, f) * act(eta, g)."""
        out = self.ring.zero()
        for (beta, gamma), a in self.delta_coproduct(u).items():
            out = out + a * self.d_gamma(beta, f) * self.d_gamma(gamma, g)
        return out

    # Rees specialization ------------------------------------------------
    def specialize(self, value) -> "FilteredPBWAlgebra":
        """Set lam := value in a Rees algebra (0 gives poly mode, c != 0 a scaled Weyl algebra)."""
        if self.mode != "rees":
            raise ValueError("only Rees algebras can be specialized")
        value = _frac(value)
        names = list(self.ring.names[: self.d])
        if value == 0:
            return FilteredPBWAlgebra("poly", names, self.m)
        return FilteredPBWAlgebra("weyl", names, self.m, scale=value)

    def specialize_poly(self, p: Poly, value) -> Poly:
        return p.drop_var(self.ring.lam_index, _frac(value))

    def specialize_element(self, u: AlgebraElement, target: "FilteredPBWAlgebra", value) -> AlgebraElement:
        return AlgebraElement(target, {a: self.specialize_poly(c, value) for a, c in u.terms.items()})


def multi_indices(m: int, max_level: int) -> list[tuple]:
    """All alpha in N^m with |alpha| <= max_level, ordered by level then lexicographically."""
    out = []
    for total in range(max_level + 1):
        out.extend(_compositions(m, total))
    return out


@lru_cache(maxsize=None)
def _compositions_cached(m: int, total: int) -> tuple:
    if m == 0:
        return ((),) if total == 0 else ()
    res = []
    for first in range(total, -1, -1):
        for rest in _compositions_cached(m - 1, total - first):
            res.append((first,) + rest)
    return tuple(res)


def _compositions(m: int, total: int) -> Iterator[tuple]:
    return iter(_compositions_cached(m, total))


def compositions(m: int, total: int) -> tuple:
    """All alpha in N^m with |alpha| = total."""
    return _compositions_cached(m, total)
