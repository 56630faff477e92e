"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the
"acceptance" summary section) or ``python3 tests/test_acceptance.py``.
"""

import math
import random
import sys
from fractions import Fraction
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import pytest  # noqa: E402

from conftest import ACCEPTANCE_LINES, twisted_chain_presheaf  # noqa: E402
from hodgemc import cech, doldpuppe as dp, hochschild as hs, linalg, mcgeom as mg  # noqa: E402
from hodgemc.algebra import FilteredPBWAlgebra, Poly  # noqa: E402
from hodgemc.complexes import (  # noqa: E402
    FreeComplex,
    QQ,
    StrictLComplex,
    koszul_graded_piece,
    koszul_resolution,
)

SEED = 20240601


def record(number, title, checks):
    failed = [name for name, ok in checks.items() if not ok]
    line = f"criterion {number} ({title}): {'PASS' if not failed else 'FAIL'}"
    if failed:
        line += " [" + ", ".join(failed) + "]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert not failed, line


# 1 ---------------------------------------------------------------------------


def _fuzz_element(space, degree, rng):
    ring = space.alg.ring
    data = {}
    for key in space.keys(degree):
        if rng.random() < 0.5:
            f = space.target_degree(degree, key)
            data[key] = {
                c: Poly.monomial([rng.randint(0, 2) for _ in range(ring.nvars)], rng.randint(-3, 3))
                for c in range(space.F.rank(f))
            }
    return hs.QElement(space, degree, data)


def _fuzz_space(rng):
    mode = rng.choice(["poly", "weyl", "rees"])
    m = rng.randint(1, 2)
    A = FilteredPBWAlgebra(mode, m, m)
    lo = rng.randint(-1, 0)
    ranks = {lo + t: rng.randint(1, 2) for t in range(rng.randint(1, 2))}
    E = FreeComplex(A.ring, ranks, {i: [[A.ring.const(x) for x in row] for row in mat] for i, mat in hs._rand_complex(rng, ranks).items()})
    return hs.QSpace(A, E, E, rng.randint(2, 3))


def test_structural_identities():
    rng = random.Random(SEED)
    checks = {}
    checks["D(n) d^2=0, n<=5"] = all(dp.build_Dn(n).complex.check() == [] for n in range(6))
    koszul = True
    for mode in ("poly", "weyl", "rees"):
        for m in (1, 2):
            A = FilteredPBWAlgebra(mode, m, m)
            koszul &= koszul_resolution(A).check() == []
            koszul &= all(koszul_graded_piece(A, p).check() == [] for p in range(1, 4))
    checks["Koszul d^2=0, m<=2"] = koszul
    fuzz_ok, count = True, 0
    while count < 200:
        sp = _fuzz_space(rng)
        q = _fuzz_element(sp, rng.randint(-1, 1), rng)
        fuzz_ok &= hs.d_Q(hs.d_Q(q)).is_zero()
        count += 1
    checks["Q-truncation d^2=0 (200 fuzz instances)"] = fuzz_ok and count >= 200
    checks["kappa coassociative chain map, n<=4"] = all(
        r["coassociative"] and r["chain_map"] for r in (dp.kappa_check(n) for n in range(5))
    )
    ranks = {-3: 2, -2: 2, -1: 2, 0: 2}
    A = FreeComplex(QQ, ranks, hs._rand_complex(rng, ranks)).validate()
    checks["simplicial identities through level 4"] = dp.simplicial_identities(A, 4)["ok"]
    record(1, "structural identities", checks)


# 2 ---------------------------------------------------------------------------


def test_dold_kan():
    rng = random.Random(SEED + 2)
    bad = []
    for t in range(50):
        lo = rng.randint(-3, 0)
        ranks = {i: rng.randint(0, 3) for i in range(lo, 1)}
        ranks = {i: r for i, r in ranks.items() if r}
        A = FreeComplex(QQ, ranks, hs._rand_complex(rng, ranks)).validate()
        if dp.dp_homotopy_groups(A, 3) != dp.expected_homotopy_groups(A, 3):
            bad.append(t)
    record(2, "Dold-Kan homotopy equals homology, 50 complexes", {"pi_n = H^-n": not bad})


# 3 ---------------------------------------------------------------------------


def _strict_pair(A, rng):
    """A rank <= 2, amplitude <= 2 complex with constant differential and a scalar connection."""
    lo = rng.randint(-2, 0)
    ranks = {lo + t: rng.randint(1, 2) for t in range(rng.randint(1, 3)) if lo + t <= 0}
    diffs = {i: [[A.ring.const(x) for x in row] for row in mat] for i, mat in hs._rand_complex(rng, ranks).items()}
    E = FreeComplex(A.ring, ranks, diffs).validate()
    coeffs = [Fraction(rng.randint(-2, 2)) for _ in range(A.m)]
    gamma = {j: [[[coeffs[i] if r == c else 0 for c in range(n)] for r in range(n)] for i in range(A.m)] for j, n in ranks.items()}
    return StrictLComplex(A, E, gamma).validate()


def test_graded_acyclicity_threshold():
    rng = random.Random(SEED + 3)
    checks = {}
    for m in (1, 2):
        for mode in ("poly", "weyl"):
            A = FilteredPBWAlgebra(mode, m, m)
            N = m + 4
            ok = True
            for _ in range(2):
                E, F = _strict_pair(A, rng), _strict_pair(A, rng)
                eta = hs.weakify(E, N)
                phi = hs.weakify(F, N)
                sp = hs.QSpace(A, E.complex, F.complex, N)
                scan = hs.graded_acyclicity_scan(eta, phi, sp, m + 3, (-3, 3), trials=3, seed=rng.randint(0, 10**6))
                ok &= all(scan[k].acyclic() for k in range(m + 1, m + 4))
            checks[f"m={m} {mode}"] = ok
    record(3, "graded pieces acyclic for m+1<=k<=m+3", checks)


# 4 ---------------------------------------------------------------------------


def test_transfer():
    rows = []
    seed = SEED
    for m in (1, 2):
        for mode in ("poly", "weyl"):
            A = FilteredPBWAlgebra(mode, m, m)
            for t in range(8):
                inst = hs.random_transfer_instance(A, m + 2, seed, sdr=(t % 2 == 0))
                seed += 1
                res = hs.transfer(inst.eta, inst.data)
                rows.append(
                    {
                        "mc": hs.check_mc(res.phi, normalized=False).equation_ok,
                        "closed": hs.twisted_d(res.a, inst.eta, res.phi).is_zero(),
                        "p0": all(res.a.P0_matrices()[j] == inst.data.a0.at(j) for j in inst.data.a0.maps),
                        "normalization_reported": res.normalization is not None,
                        "normalization_ok": res.normalization is not None and res.normalization.success,
                    }
                )
    checks = {key: all(r[key] for r in rows) for key in rows[0]}
    checks["at least 30 instances"] = len(rows) >= 30
    record(4, f"MC transfer on {len(rows)} instances", checks)


# 5 ---------------------------------------------------------------------------


def test_cech_fidelity():
    checks = {}
    rep = cech.two_open_resolution(M=1)
    checks["two-open shape"] = rep["shape_ok"] and rep["degree0"] == ["U", "V", "UV"] and rep["degree1"] == ["UV", "UV"]
    # bounded sections: 2M+1 functions on each single open and 3M+1 on the overlap
    checks["two-open ranks"] = rep["ranks"] == {"0": 10, "1": 8}
    unit_ok = cech.two_open_resolution(M=1, with_total=True)["unit_comparison"]["quasi_iso"]
    for seed in range(6):
        cov = cech.chain_nerve(2 + seed % 3)
        P = cech.random_presheaf(cov, seed)
        unit_ok &= cech.unit_comparison(P)["quasi_iso"]
    checks["unit comparison when X is in the covering"] = unit_ok
    certs = []
    P = twisted_chain_presheaf()
    G, _ = cech.globalize_dga(P)
    pts = [G.eta0] + [mg.random_mc_point(G, s) for s in range(3)]
    rng = random.Random(SEED + 5)
    probes = [{i: Fraction(rng.randint(-2, 2)) for i in range(G.dim(1)) if rng.random() < 0.5} for _ in range(4)]
    certs.append(cech.mc_glob_commute(P, pts, probes)["ok"])
    model = cech.pole_bounded_model(cech.two_open_line(), [0, 1], 2, rank=2)
    pts = [model.G.eta0] + [mg.random_mc_point(model.G, s) for s in range(2)]
    certs.append(cech.mc_glob_commute(model.presheaf, pts)["ok"])
    Z = mg.free_nilpotent_dga({"a": 0, "e": 1}, {"a": {"e": 1}}, 3, top=2)
    Pc = cech.constant_presheaf(cech.chain_nerve(3), Z)
    Gc, _ = cech.globalize_dga(Pc)
    certs.append(cech.mc_glob_commute(Pc, [Gc.eta0, mg.random_mc_point(Gc, 1)])["ok"])
    checks["MC/globalization certificate"] = all(certs)
    record(5, "Cech fidelity", checks)


# 6 ---------------------------------------------------------------------------


def _enumerate_gauge(Z, phi, psi, box=2):
    cols = Z.indices(0, 1)

    def rec(i, cur):
        if i == len(cols):
            return not mg.gauge_defect(Z, phi, psi, mg.vadd(Z.one(), cur))
        return any(rec(i + 1, mg.vadd(cur, {cols[i]: Fraction(t)})) for t in range(-box, box + 1))

    return rec(0, {})


def _jacobian_corank_by_differences(Z, eta):
    """Corank of the MC map's derivative modulo gauge directions, by exact finite differences.

    The curvature is quadratic, so a central difference is its exact
    derivative; the gauge orbit is polynomial in t of degree below the
    nilpotency, so interpolation at K + 2 nodes recovers its velocity.
    """
    var_cols = Z.indices(1, 1)
    jac = []
    for c in var_cols:
        plus = Z.curvature(mg.vadd(eta, {c: Fraction(1)}))
        minus = Z.curvature(mg.vadd(eta, {c: Fraction(-1)}))
        diff = mg.vadd(plus, minus, coeffs=[Fraction(1, 2), Fraction(-1, 2)])
        jac.append([diff.get(r, Fraction(0)) for r in range(Z.dim(2))])
    rank_jac = linalg.rank(jac) if jac and jac[0] else 0
    gauge = []
    nodes = list(range(1, Z.K + 3))
    for a in Z.indices(0, 1):
        samples = [mg.gauge_act(Z, eta, mg.vadd(Z.one(), {a: Fraction(t)})) for t in nodes]
        # Lagrange derivative at t = 0 through (0, eta) and the samples
        ts = [0] + nodes
        vals = [eta] + samples
        vel = {}
        for i, ti in enumerate(ts):
            w = Fraction(0)
            # derivative at 0 of the i-th Lagrange basis polynomial
            if ti == 0:
                w = sum(Fraction(-1, tj) for tj in ts if tj != 0)
            else:
                w = Fraction(1, ti) * math.prod(Fraction(-tj, ti - tj) for tj in ts if tj not in (0, ti))
            vel = mg.vadd(vel, vals[i], coeffs=[1, w])
        gauge.append([vel.get(c, Fraction(0)) for c in var_cols])
    rank_gauge = linalg.rank(gauge) if gauge and gauge[0] else 0
    return len(var_cols) - rank_jac - rank_gauge


def test_finite_chart_pipeline():
    checks = {}
    model = cech.pole_bounded_model(cech.two_open_line(), [0, 1], 2, rank=2)
    G = model.G
    var = mg.mc_equations(G)
    trivial = G.eta0
    checks["trivial connection in MC variety"] = mg.is_mc_point(G, trivial) and var.vanishes_at(var.coordinates(trivial))
    # flat connections d + Gamma, Gamma a 2x2 matrix of polynomials of degree <= m(1) = 1
    linear_system = all(not eq["quadratic"] for eq in var.equations)
    jac = var.jacobian([0] * len(var.vars))
    mc_dim = len(var.vars) - (linalg.rank(jac) if var.equations else 0)
    params = []
    for b in range(2):
        for c in range(2):
            for a in range(2):
                params.append((b, c, a))

    def point(coeffs):
        gamma = [[Poly.zero(1) for _ in range(2)] for _ in range(2)]
        for (b, c, a), v in zip(params, coeffs):
            gamma[c][b] = gamma[c][b] + Poly.monomial((a,), v)
        return cech.flat_connection_data(model, gamma)

    images = []
    for k in range(len(params)):
        e = [0] * len(params)
        e[k] = 1
        p = point(e)
        images.append([p.get(i, Fraction(0)) - trivial.get(i, Fraction(0)) for i in var.var_index])
    injective = linalg.rank(images) == len(params)
    rng = random.Random(SEED + 6)
    grid = all(mg.is_mc_point(G, point([rng.randint(-2, 2) for _ in params])) for _ in range(25))
    checks["MC set equals flat connections (affine dim 8)"] = linear_system and injective and grid and mc_dim == len(params) == 8
    # gauge: conjugates solved, distinct points refused, matched by enumeration
    gauge_ok = True
    pts = [trivial] + [mg.random_mc_point(G, s) for s in range(3)]
    for phi in pts:
        for psi in pts:
            res = mg.gauge_solve(G, phi, psi)
            gauge_ok &= res.ok == _enumerate_gauge(G, phi, psi) == (phi == psi)
            if res.ok:
                gauge_ok &= res.residual_ok
    for Z in (mg.toy_gauge_dga(), mg.free_nilpotent_dga({"a": 0, "e": 1, "f": 1}, {"a": {"e": 1}}, 2, top=2)):
        for s in range(3):
            phi = mg.random_mc_point(Z, s)
            alpha = mg.vadd(Z.one(), {c: Fraction(rng.randint(-2, 2)) for c in Z.indices(0, 1)})
            conj = mg.gauge_act(Z, phi, alpha)
            res = mg.gauge_solve(Z, phi, conj)
            gauge_ok &= res.ok and res.residual_ok and _enumerate_gauge(Z, phi, conj)
            other = mg.vadd(phi, {Z.indices(1, 1)[-1]: Fraction(1)})
            if mg.is_mc_point(Z, other):
                gauge_ok &= mg.gauge_solve(Z, phi, other).ok == _enumerate_gauge(Z, phi, other)
    checks["gauge_solve matches enumeration"] = gauge_ok
    tan = mg.tangent_cohomology(G, trivial)
    checks["tangent H1 equals Jacobian corank mod gauge"] = tan["h1"] == _jacobian_corank_by_differences(G, trivial)
    toy = mg.toy_gauge_dga()
    checks["tangent cross-check on toy"] = mg.tangent_cohomology(toy, {})["h1"] == _jacobian_corank_by_differences(toy, {})
    record(6, "finite chart pipeline", checks)


# 7 ---------------------------------------------------------------------------


def test_hodge_family():
    rng = random.Random(SEED + 7)
    checks = {}
    pipelines = {
        "two opens, rank 2, k 2": (cech.two_open_line(), [0, 1], 2, 2),
        "one chart, rank 1, k 3": (cech.one_open(), [0, 1, 2], 3, 1),
    }
    for name, (cov, sched, k, rank) in pipelines.items():
        build = {mode: cech.pole_bounded_model(cov, sched, k, rank=rank, mode=mode).G for mode in ("rees", "weyl", "poly")}
        R = build["rees"]
        var = mg.mc_equations(R)
        one, zero = mg.hodge_specialize(R, 1), mg.hodge_specialize(R, 0)
        checks[f"{name}: lambda=1 equals weyl build"] = one == build["weyl"] and mg.mc_equations(one) == mg.mc_equations(build["weyl"])
        checks[f"{name}: lambda=0 equals commutative build"] = zero == build["poly"]
        zero_var = mg.mc_equations(zero)
        checks[f"{name}: lambda=0 commutator-free"] = mg.commutator_free(zero_var) and zero_var == mg.mc_equations(build["poly"])
        if k >= 3:
            # the commutator terms are visible in the family before specializing
            checks[f"{name}: family carries lambda"] = not mg.commutator_free(var)
        values = [Fraction(rng.randint(-9, 9), rng.randint(1, 9)) for _ in range(2)]
        checks[f"{name}: specialization commutes"] = all(var.specialize(v) == mg.mc_equations(mg.hodge_specialize(R, v)) for v in values)
    record(7, "Hodge family", checks)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
