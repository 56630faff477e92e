import random
from fractions import Fraction
from math import comb

import pytest

from hodgemc import cech, mcgeom as mg
from hodgemc.algebra import Poly
from hodgemc.complexes import FreeComplex, QQ, homology_ranks, identity_map


def test_sections_arithmetic():
    R = cech.SectionRing([0, 1])
    x = R.var("x")
    inv = R.make(Poly.const(1, 1), (1, 0))  # 1/x
    assert x * inv == R.one()
    s = inv * inv + x
    assert s.diff() == R.make(Poly.const(1, -2), (3, 0)) + R.one()
    assert (s - s) == R.zero()
    with pytest.raises(ValueError):
        cech.SectionRing([0, 0])


def test_section_basis_and_coordinates():
    R = cech.SectionRing([0, 1])
    basis = cech.section_basis(R, [0], 1)
    assert len(basis) == 3
    x = R.var("x")
    target = x * x * R.make(Poly.const(1, 1), (1, 0)) + R.const(3)  # x + 3
    coords = cech.section_coordinates(target, [0], 1)
    rebuilt = sum((c * b for c, b in zip(coords, basis)), R.zero())
    assert rebuilt == target
    assert cech.section_coordinates(R.make(Poly.const(1, 1), (0, 1)), [0], 1) is None
    assert cech.section_coordinates(x * x * x * x, [0], 1) is None


def test_covering_closure_and_chains():
    cov = cech.Covering(["A", "B", "C"], {(0, 1), (1, 2)}, total=2)
    assert cov.less(0, 2)
    assert cov.chains(2) == [(0, 1, 2)]
    assert cov.max_length() == 2
    with pytest.raises(ValueError):
        cech.Covering(["A", "B"], {(0, 1), (1, 0)})
    with pytest.raises(ValueError):
        cech.Covering(["A", "B"], set(), total=1)
    line = cech.two_open_line()
    assert cech.Covering.from_json(line.to_json()).order == line.order


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_chain_nerve_ranks_match_chain_counts(n):
    cov = cech.chain_nerve(n)
    Z = FreeComplex(QQ, {0: 1})
    P = cech.PresheafOfComplexes(cov, {u: Z for u in range(n)}, {(a, b): identity_map(Z) for a, b in cov.order})
    G = cech.globalize_complex(P)
    # chains of k+1 opens are the (k+1)-subsets of a totally ordered set
    for k in range(n):
        assert G.rank(k) == comb(n, k + 1)
    assert homology_ranks(G.to_complex()) == {k: int(k == 0) for k in range(n)}


def test_one_open_globalizes_to_itself():
    cov = cech.one_open()
    A = FreeComplex(QQ, {0: 2, 1: 1}, {0: [[Fraction(1), Fraction(2)]]})
    G = cech.globalize_complex(cech.PresheafOfComplexes(cov, {0: A}, {}))
    assert G.to_complex().ranks == A.ranks
    assert G.to_complex().diffs == A.diffs


def test_two_open_resolution_shape():
    rep = cech.two_open_resolution(M=1)
    assert rep["degree0"] == ["U", "V", "UV"]
    assert rep["degree1"] == ["UV", "UV"]
    assert rep["shape_ok"] and rep["square_zero"]
    # counts from the bounded section spaces: 2M+1 on each single open, 3M+1 on UV
    assert rep["ranks"] == {"0": 3 + 3 + 4, "1": 4 + 4}
    # global sections of O with pole order <= 1 at infinity only: 1, x
    assert rep["homology"] == {"0": 2, "1": 0}


def test_unit_comparison_with_total_open():
    rep = cech.two_open_resolution(M=1, with_total=True)
    assert rep["unit_comparison"]["chain_map"]
    assert rep["unit_comparison"]["quasi_iso"]


@pytest.mark.parametrize("seed", range(4))
def test_random_presheaves_reconstruct(seed):
    P = cech.random_presheaf(cech.chain_nerve(3), seed)
    assert P.violations() == []
    G = cech.globalize_complex(P)
    assert G.square_defect() == []
    assert cech.unit_comparison(P)["quasi_iso"]
    assert cech.toledotong_check(P, 1)["quasi_iso"]


@pytest.mark.parametrize("seed", range(3))
def test_kernels_and_quasi_isomorphisms_globalize(seed):
    f = cech.random_surjection(cech.two_open_line(), seed)
    assert f.violations() == []
    assert cech.globfib_check(f)["ok"]
    g = cech.random_surjection(cech.chain_nerve(3), seed, acyclic_kernel=True)
    rep = cech.gucinvariant_check(g)
    assert all(rep["local_quasi_iso"].values())
    assert rep["global_quasi_iso"] and rep["chain_map"]


def test_globalized_dga_is_a_dga(chain_presheaf):
    assert chain_presheaf.violations() == []
    G, C = cech.globalize_dga(chain_presheaf)
    assert mg.validate_dga(G)["ok"]
    assert C.square_defect() == []


def test_mc_globalization_commutes_on_twisted_presheaf(chain_presheaf):
    G, _ = cech.globalize_dga(chain_presheaf)
    points = [G.eta0]
    for s in range(2):
        p = mg.random_mc_point(G, s)
        assert p is not None and mg.is_mc_point(G, p)
        points.append(p)
    rng = random.Random(3)
    probes = [{i: Fraction(rng.randint(-2, 2)) for i in range(G.dim(1)) if rng.random() < 0.5} for _ in range(3)]
    rep = cech.mc_glob_commute(chain_presheaf, points, probes)
    assert rep["ok"], {k: v for k, v in rep.items() if v}


def test_mc_globalization_certificate_detects_sign_errors(chain_presheaf, monkeypatch):
    G, _ = cech.globalize_dga(chain_presheaf)
    rng = random.Random(4)
    probes = [{i: Fraction(rng.randint(1, 2)) for i in range(G.dim(1))}]
    original = cech.TwistedCategory.mc_residual

    def flipped(self, obj):
        return {s: {b: -x for b, x in v.items()} for s, v in original(self, obj).items()}

    monkeypatch.setattr(cech.TwistedCategory, "mc_residual", flipped)
    rep = cech.mc_glob_commute(chain_presheaf, [G.eta0], probes)
    assert not rep["ok"] and rep["residual_mismatch"]


def test_pole_model_sizes(line_model):
    s = line_model.summary()
    assert s["dims"] == {"0": 12, "1": 60, "2": 132}
    assert s["mc_coordinates"] == 40
    assert mg.validate_dga(line_model.G)["ok"]


def test_pole_model_globalization_commutes(line_model):
    G = line_model.G
    points = [G.eta0] + [p for p in (mg.random_mc_point(G, s) for s in range(2)) if p is not None]
    assert len(points) == 3
    rep = cech.mc_glob_commute(line_model.presheaf, points)
    assert rep["ok"]


def test_schedule_rules():
    assert cech.PoleSchedule((0, 1, 2)).check(3) == []
    assert cech.PoleSchedule((0, 2, 3)).check(3) == ["m(1) + m(1) > m(2)"]
    with pytest.raises(ValueError):
        cech.PoleSchedule((1, 2))
    with pytest.raises(ValueError):
        cech.PoleSchedule((0, 2, 1))
    with pytest.raises(ValueError):
        cech.pole_bounded_model(cech.two_open_line(), [0, 2, 3], 3)


def test_model_without_higher_levels_is_degree_zero():
    m = cech.pole_bounded_model(cech.two_open_line(), [0], 1, rank=1)
    assert all(x == 0 for deg in m.G.dims for x in m.G.levels[deg])


def test_level_zero_comparison_between_schedules(line_model, line_model_wide):
    rep = cech.graded_comparison(line_model, line_model_wide, 0)
    assert rep["ranks_equal"] and rep["quasi_iso"]


@pytest.mark.xfail(strict=True, reason="bounded-pole sections on the affine line are not finite over the full localization; Gr^1 grows with the bound")
def test_level_one_comparison_between_schedules(line_model, line_model_wide):
    rep = cech.graded_comparison(line_model, line_model_wide, 1)
    assert rep["ranks_equal"] and rep["quasi_iso"]


def test_flat_connection_gives_mc_point(line_model):
    x = Poly.var(1, 0)
    gamma = [[x, Poly.const(1, 2)], [Poly.zero(1), x - 1]]
    pt = cech.flat_connection_data(line_model, gamma)
    assert mg.is_mc_point(line_model.G, pt)


def test_model_inclusion_is_a_filtered_map(line_model, line_model_wide):
    f = cech.model_inclusion(line_model, line_model_wide)
    assert f.violations() == []
