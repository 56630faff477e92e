import random
from fractions import Fraction

import pytest

from hodgemc import cech, mcgeom as mg

one = Fraction(1)


def abelian_dga():
    """Unit 1; degree 1: u (level 0), v (level 1); degree 2: g (level 1); du = dv = g; only unit products."""
    mult = {
        (0, 0): {(0, 0): {0: one}},
        (0, 1): {(0, 0): {0: one}, (0, 1): {1: one}},
        (1, 0): {(0, 0): {0: one}, (1, 0): {1: one}},
        (0, 2): {(0, 0): {0: one}},
        (2, 0): {(0, 0): {0: one}},
    }
    return mg.FiniteFilteredDGA(
        {0: 1, 1: 2, 2: 1},
        {0: [0], 1: [0, 1], 2: [1]},
        {1: {0: {0: one}, 1: {0: one}}},
        mult,
        unit={0: one},
        eps={0: one},
        eta0={0: one},
        labels={0: ["1"], 1: ["u", "v"], 2: ["g"]},
        top=2,
    )


def square_source():
    """Like the squaring toy but with e.e = 0, so every multiple of e is Maurer-Cartan."""
    T = mg.toy_square_dga()
    mult = {k: v for k, v in T.mult.items() if k != (1, 1)}
    return mg.FiniteFilteredDGA(T.dims, T.levels, {}, mult, unit=T.unit, eps=T.eps, labels=T.labels, top=2)


def test_zero_dga():
    Z = mg.FiniteFilteredDGA({}, {})
    assert mg.validate_dga(Z)["ok"]
    assert mg.find_k0(Z)["k0"] == 0
    assert mg.is_mc_point(Z, {})


def test_non_multiplicative_filtration_is_rejected():
    T = mg.toy_square_dga()
    bad = mg.FiniteFilteredDGA(T.dims, {0: [0], 1: [1], 2: [1]}, {}, T.mult, unit=T.unit, eps=T.eps, top=2)
    assert not mg.validate_dga(bad)["ok"]


def test_toy_dgas_validate():
    for Z in (mg.toy_square_dga(), mg.toy_gauge_dga(), abelian_dga(), square_source()):
        assert mg.validate_dga(Z)["ok"]


def test_abelian_equations_are_linear():
    Z = abelian_dga()
    var = mg.mc_equations(Z)
    assert var.vars == ["y[v]"]
    (eq,) = var.equations
    assert eq["constant"] == 1 and eq["linear"] == {0: 1} and eq["quadratic"] == {}
    assert mg.is_mc_point(Z, {0: one, 1: -one})
    assert not mg.is_mc_point(Z, {0: one})


def test_squaring_toy_equation():
    Z = mg.toy_square_dga()
    var = mg.mc_equations(Z)
    assert [(e["row"], e["constant"], e["linear"], e["quadratic"]) for e in var.equations] == [("f", 0, {}, {(0, 0): 1})]
    assert mg.is_mc_point(Z, {})
    assert not mg.is_mc_point(Z, {0: one})
    assert var.vanishes_at([0]) and not var.vanishes_at([1])


def test_gauge_identity_and_conjugates():
    Z = mg.toy_gauge_dga()
    phi = {1: Fraction(3)}
    res = mg.gauge_solve(Z, phi, phi)
    assert res.alpha == Z.one()
    for t in (-2, 1, 5):
        alpha = mg.vadd(Z.one(), {1: Fraction(t)})
        psi = mg.gauge_act(Z, phi, alpha)
        assert mg.is_mc_point(Z, psi)
        got = mg.gauge_solve(Z, phi, psi)
        assert got.ok and got.residual_ok
        assert not mg.gauge_defect(Z, phi, psi, got.alpha)


def _enumerate_gauge(Z, phi, psi, box=3):
    """Search alpha = 1 + sum t_i a_i over integer t_i in [-box, box]."""
    cols = Z.indices(0, 1)

    def rec(i, cur):
        if i == len(cols):
            alpha = mg.vadd(Z.one(), cur)
            return not mg.gauge_defect(Z, phi, psi, alpha)
        return any(rec(i + 1, mg.vadd(cur, {cols[i]: Fraction(t)})) for t in range(-box, box + 1))

    return rec(0, {})


def test_gauge_refusal_carries_a_witness():
    Z = mg.toy_gauge_dga()
    phi, psi = {}, {1: one}
    res = mg.gauge_solve(Z, phi, psi)
    assert not res.ok
    m, rhs, _ = mg.gauge_system(Z, phi, psi)
    labels = Z.labels[1] + ["eps"]
    y = [res.witness.get(lab, 0) for lab in labels]
    dense = m.to_dense()
    assert all(sum(y[r] * dense[r][c] for r in range(len(y))) == 0 for c in range(m.ncols))
    assert sum(a * b for a, b in zip(y, rhs)) != 0
    assert not _enumerate_gauge(Z, phi, psi)


@pytest.mark.parametrize("seed", range(4))
def test_gauge_solver_agrees_with_enumeration(seed):
    Z = mg.free_nilpotent_dga({"a": 0, "e": 1, "f": 1}, {"a": {"e": 1}}, 2, top=2)
    rng = random.Random(seed)
    phi = mg.random_mc_point(Z, seed)
    pick = {c: Fraction(rng.randint(-2, 2)) for c in Z.indices(1, 1)}
    psi_candidates = [mg.gauge_act(Z, phi, mg.vadd(Z.one(), {c: Fraction(rng.randint(-2, 2)) for c in Z.indices(0, 1)})), mg.vadd(phi, pick)]
    for psi in psi_candidates:
        if not mg.is_mc_point(Z, psi):
            continue
        solved = mg.gauge_solve(Z, phi, psi).ok
        assert solved == _enumerate_gauge(Z, phi, psi)
        assert solved == mg.brute_force_gauge(Z, phi, psi)


def test_chart_fiber():
    Z = mg.toy_gauge_dga()
    phi = {1: Fraction(2)}
    (same,) = mg.chart_fiber(Z, phi, [{}])
    assert same.psi == phi and same.ok
    pts = mg.chart_fiber(Z, phi, [{1: Fraction(t)} for t in (-1, 2, 3)])
    assert all(p.ok for p in pts)
    for p in pts:
        back = mg.gauge_solve(Z, phi, p.psi)
        assert back.ok and back.alpha == p.alpha  # the toy has no automorphisms
    with pytest.raises(ValueError):
        mg.chart_fiber(Z, phi, [{0: one}])


def test_chart_equations_vanish_on_chart_points():
    Z = mg.toy_gauge_dga()
    phi = {1: Fraction(2)}
    eqs = mg.chart_equations(Z, phi)
    pts = mg.chart_fiber(Z, phi, [{1: Fraction(t)} for t in (0, 1, -3)])
    names = eqs["vars"]
    for p in pts:
        values = {f"y[{Z.labels[1][i]}]": p.psi.get(i, Fraction(0)) for i in Z.indices(1, 1)}
        values.update({f"a[{Z.labels[0][i]}]": p.alpha.get(i, Fraction(0)) for i in Z.indices(0, 1)})
        for eq in eqs["equations"]:
            s = Fraction(eq["constant"])
            s += sum(Fraction(c) * values[v] for v, c in eq["linear"].items())
            for vw, c in eq["quadratic"].items():
                v, w = vw.split("*")
                s += Fraction(c) * values[v] * values[w]
            assert s == 0, eq
    assert set(names) == {"y[e]", "y[e']", "a[a]"}


def test_staged_lift_and_obstruction_at_stage_two():
    S, T = square_source(), mg.toy_square_dga()
    f = mg.identity_map(S)
    eta = {0: Fraction(3)}
    assert mg.gm_transport(f, eta).point == eta
    broken = mg.FilteredDGAMap(S, T, {deg: {c: {c: one} for c in range(n)} for deg, n in S.dims.items()})
    out = mg.gm_transport(broken, eta)
    assert not out.ok
    assert out.obstruction.stage == 2
    assert out.obstruction.residue == {"f": Fraction(9)}


def test_transport_between_pole_models(line_model, line_model_wide):
    f = cech.model_inclusion(line_model, line_model_wide)
    for s in range(2):
        eta = mg.random_mc_point(line_model.G, s)
        res = mg.gm_transport(f, eta)
        assert res.ok and mg.is_mc_point(line_model_wide.G, res.point)
        assert res.point == f.apply(1, eta)


def test_tangent_cohomology_examples():
    G = mg.toy_gauge_dga()
    t = mg.tangent_cohomology(G, {})
    assert t["dims"] == {"0": 0, "1": 1} and t["agree"]
    T = mg.toy_square_dga()
    t = mg.tangent_cohomology(T, {})
    assert t["h1"] == 1 and t["agree"]
    with pytest.raises(ValueError):
        mg.tangent_cohomology(T, {0: one})


def test_conjugation_intertwines_tangent_complexes():
    Z = mg.free_nilpotent_dga({"a": 0, "e": 1}, {"a": {"e": 1}}, 3, top=2)
    phi = mg.random_mc_point(Z, 1)
    assert mg.conjugation_check(Z, phi, mg.vadd(Z.one(), {Z.labels[0].index("a"): Fraction(2)}))


def test_mc_category_is_an_augmented_dgc():
    Z = mg.toy_gauge_dga()
    C = mg.MCCategory(Z, {"p": {}, "q": {0: one}})
    assert C.validate()["ok"]


def test_truncation_drops_high_levels():
    T = mg.toy_square_dga()
    small = mg.truncate(T, 2)
    assert small.dims == {0: 1, 1: 1}
    assert mg.validate_dga(small)["ok"]


def test_json_roundtrip():
    Z = mg.toy_gauge_dga()
    back = mg.FiniteFilteredDGA.from_json(Z.to_json())
    assert back == Z


def test_rees_single_chart_specializations():
    models = {m: cech.pole_bounded_model(cech.one_open(), [0, 1, 2], 3, rank=1, mode=m) for m in ("rees", "weyl", "poly")}
    R = models["rees"].G
    assert {d: R.dim(d) for d in R.dims} == {0: 1, 1: 6, 2: 14}
    assert mg.hodge_specialize(R, 1) == models["weyl"].G
    assert mg.hodge_specialize(R, 0) == models["poly"].G
    var = mg.mc_equations(R)
    assert not mg.commutator_free(var)
    assert mg.commutator_free(mg.mc_equations(mg.hodge_specialize(R, 0)))
    for v in (Fraction(2, 3), Fraction(-5, 7)):
        assert var.specialize(v) == mg.mc_equations(mg.hodge_specialize(R, v))
