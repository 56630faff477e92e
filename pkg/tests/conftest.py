from fractions import Fraction

import pytest

from hodgemc import cech, mcgeom as mg


def _generator_map(Z, images):
    """Multiplicative extension of generator images on a free nilpotent dga."""
    mats = {}
    for deg, labs in Z.labels.items():
        cols = {}
        for c, lab in enumerate(labs):
            word = [] if lab == "1" else list(lab)
            v, vd = dict(Z.unit), 0
            for g in word:
                gd = 0 if g == "a" else 1
                v = Z.mul(vd, v, gd, images[g])
                vd += gd
            cols[c] = v
        mats[deg] = cols
    return mg.FilteredDGAMap(Z, Z, mats)


def twisted_chain_presheaf():
    """Three nested opens, each carrying the free dga on a (deg 0) and e, f (deg 1), da = e.

    Restrictions send f to f + e (and f + 2e across two steps), so the
    transition data are not identities.
    """
    Z = mg.free_nilpotent_dga({"a": 0, "e": 1, "f": 1}, {"a": {"e": 1}}, 3, top=3)

    def gen(g):
        return {Z.labels[0 if g == "a" else 1].index(g): Fraction(1)}

    one_step = _generator_map(Z, {"a": gen("a"), "e": gen("e"), "f": mg.vadd(gen("f"), gen("e"))})
    two_steps = _generator_map(Z, {"a": gen("a"), "e": gen("e"), "f": mg.vadd(gen("f"), gen("e"), coeffs=[1, 2])})
    cov = cech.chain_nerve(3)
    return cech.PresheafOfDGAs(cov, {0: Z, 1: Z, 2: Z}, {(0, 1): one_step, (1, 2): one_step, (0, 2): two_steps})


@pytest.fixture(scope="session")
def chain_presheaf():
    return twisted_chain_presheaf()


@pytest.fixture(scope="session")
def line_model():
    """O^2 on {x != 0}, {x != 1}, k = 2, schedule (0, 1), lambda = 1."""
    return cech.pole_bounded_model(cech.two_open_line(), [0, 1], 2, rank=2)


@pytest.fixture(scope="session")
def line_model_wide():
    return cech.pole_bounded_model(cech.two_open_line(), [0, 2], 2, rank=2)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
