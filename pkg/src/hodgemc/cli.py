"""Command-line entry point: ``hodgemc <subcommand> [options]``.

Every subcommand prints one JSON report (sorted keys) to stdout or ``--out``
and exits 0 on success, 1 when an invariant check fails and 2 on bad input.
``HODGEMC_SCRATCH`` names a directory for intermediate artifacts; nothing
else is read from the environment.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from fractions import Fraction
from pathlib import Path

from . import cech, doldpuppe, hochschild as hs, mcgeom as mg
from .algebra import FilteredPBWAlgebra, Poly
from .complexes import (
    ChainMap,
    FreeComplex,
    QQ,
    StrictLComplex,
    complex_from_json,
    homology_ranks,
    homology_ranks_at_points,
)

MODELS = {
    "a1-two-opens": lambda: cech.two_open_line(),
    "a1-one-chart": lambda: cech.one_open(),
}

DEFAULT_WINDOW = (-2, 2)
DEFAULT_SEED = 20240601


class InputError(Exception):
    """Malformed input file or flag; reported with exit status 2."""


# ---------------------------------------------------------------------------
# helpers


def _load(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _field(data, key, where):
    try:
        return data[key]
    except (KeyError, TypeError) as exc:
        raise InputError(f"{where}: missing field '{key}'") from exc


def _window(text: str | None) -> tuple:
    if text is None:
        return DEFAULT_WINDOW
    try:
        lo, hi = (int(t) for t in text.split(","))
    except ValueError as exc:
        raise InputError(f"--window expects 'lo,hi', got {text!r}") from exc
    if lo > hi:
        raise InputError("--window: lo must not exceed hi")
    return lo, hi


def _ints(text: str, flag: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(f"{flag} expects comma-separated integers, got {text!r}") from exc


def _scratch() -> Path | None:
    d = os.environ.get("HODGEMC_SCRATCH")
    if not d:
        return None
    p = Path(d)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _stash(name: str, payload) -> str | None:
    d = _scratch()
    if d is None:
        return None
    path = d / name
    path.write_text(json.dumps(payload, sort_keys=True, indent=1))
    return str(path)


def _algebra(args) -> FilteredPBWAlgebra:
    return FilteredPBWAlgebra(args.mode, args.m, args.m)


def _truncation(args, alg: FilteredPBWAlgebra) -> int:
    return args.truncation if args.truncation is not None else alg.m + 2


def _module(data: dict, where: str) -> StrictLComplex:
    """{"algebra": descriptor, "complex": complex over A, "action": {deg: [matrix per generator]}}."""
    try:
        alg = FilteredPBWAlgebra.from_descriptor(_field(data, "algebra", where))
        E = complex_from_json(_field(data, "complex", where), alg)
    except ValueError as exc:
        raise InputError(f"{where}: {exc}") from exc
    gamma = {}
    for deg, mats in data.get("action", {}).items():
        gamma[int(deg)] = [[[alg.ring.parse(str(x)) for x in row] for row in m] for m in mats]
    try:
        return StrictLComplex(alg, E, gamma).validate()
    except ValueError as exc:
        raise InputError(f"{where}: {exc}") from exc


def _standard_module(alg: FilteredPBWAlgebra, rank: int = 1) -> StrictLComplex:
    E = FreeComplex(alg.ring, {0: rank})
    return StrictLComplex(alg, E, {})


def _vec_json(Z: mg.FiniteFilteredDGA, deg: int, v) -> dict:
    return {Z.labels[deg][i]: mg._fmt(x) for i, x in sorted(v.items())}


def _vec_from_json(Z: mg.FiniteFilteredDGA, deg: int, data: dict, where: str) -> dict:
    pos = {lab: i for i, lab in enumerate(Z.labels.get(deg, []))}
    out = {}
    for lab, x in data.items():
        if lab not in pos:
            raise InputError(f"{where}: unknown basis label {lab!r}")
        out[pos[lab]] = Fraction(str(x))
    return out


def _model(args, mode: str | None = None) -> cech.PoleModel:
    if args.model not in MODELS:
        raise InputError(f"--model must be one of {sorted(MODELS)}")
    cov = MODELS[args.model]()
    schedule = _ints(args.schedule, "--schedule") if args.schedule else list(range(args.k))
    try:
        return cech.pole_bounded_model(cov, schedule, args.k, rank=args.rank, mode=mode or "weyl", top=args.top)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _lambda_dga(args) -> tuple[mg.FiniteFilteredDGA, cech.PoleModel]:
    """Rees build specialized at --lambda (formal when omitted)."""
    model = _model(args, "rees")
    if args.lam is None:
        return model.G, model
    return mg.hodge_specialize(model.G, Fraction(args.lam)), model


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> tuple[dict, bool]:
    data = _load(args.file)
    kind = args.kind or ("dga" if "mult" in data else "covering" if "opens" in data else "module" if "action" in data or "algebra" in data else "complex")
    if kind == "complex":
        try:
            c = complex_from_json(data)
        except ValueError as exc:
            return {"kind": kind, "violations": [str(exc)]}, False
        return {"kind": kind, "ranks": {str(i): r for i, r in sorted(c.ranks.items())}, "violations": []}, True
    if kind == "module":
        try:
            _module(data, args.file)
        except InputError as exc:
            return {"kind": kind, "violations": [str(exc)]}, False
        return {"kind": kind, "violations": []}, True
    if kind == "covering":
        try:
            cov = cech.Covering.from_json(data)
            if "schedule" in data:
                bad = cech.PoleSchedule(tuple(data["schedule"])).check(len(data["schedule"]))
                if bad:
                    return {"kind": kind, "violations": bad}, False
        except ValueError as exc:
            return {"kind": kind, "violations": [str(exc)]}, False
        return {"kind": kind, "chains": {str(k): len(cov.chains(k)) for k in range(cov.max_length() + 1)}, "violations": []}, True
    try:
        Z = mg.FiniteFilteredDGA.from_json(data)
    except (ValueError, KeyError) as exc:
        return {"kind": kind, "violations": [str(exc)]}, False
    rep = mg.validate_dga(Z)
    out = {"kind": kind, "violations": rep["violations"], "summary": Z.summary()}
    if rep["ok"] and not Z.lam:
        out["k0"] = mg.find_k0(Z)
    return out, rep["ok"]


def cmd_homology(args) -> tuple[dict, bool]:
    data = _load(args.file)
    try:
        c = complex_from_json(data)
    except ValueError as exc:
        raise InputError(f"{args.file}: {exc}") from exc
    window = _window(args.window)
    if c.ring == QQ:
        h = homology_ranks(c, window)
        return {"window": list(window), "ranks": {str(k): v for k, v in sorted(h.items())}}, True
    rep = homology_ranks_at_points(c, trials=args.trials, seed=args.seed, window=window)
    return {"window": list(window), **rep.to_json()}, True


def cmd_dp(args) -> tuple[dict, bool]:
    data = _load(args.file)
    try:
        A = complex_from_json(data)
    except ValueError as exc:
        raise InputError(f"{args.file}: {exc}") from exc
    if A.ring != QQ:
        raise InputError("dp needs a complex over Q")
    n = args.levels
    dims = {str(k): doldpuppe.dp_level(A, k).dim for k in range(n + 1)}
    pi = doldpuppe.dp_homotopy_groups(A, n)
    expected = doldpuppe.expected_homotopy_groups(A, n)
    ident = doldpuppe.simplicial_identities(A, n)
    ok = pi == expected and ident["ok"]
    return {
        "dims": dims,
        "homotopy_groups": {str(k): v for k, v in sorted(pi.items())},
        "homology_comparison": {str(k): v for k, v in sorted(expected.items())},
        "simplicial_identities": ident["ok"],
        "ok": ok,
    }, ok


def _space_and_eta(args):
    mod = _module(_load(args.module), args.module)
    N = _truncation(args, mod.algebra)
    sp = hs.QSpace(mod.algebra, mod.complex, mod.complex, N)
    return mod, sp, N


def cmd_weakify(args) -> tuple[dict, bool]:
    mod, sp, N = _space_and_eta(args)
    eta = hs.weakify(mod, N, sp)
    rep = hs.check_mc(eta)
    return {"truncation": N, "element": hs.element_to_json(eta), "mc": rep.to_json()}, rep.ok


def cmd_mc_check(args) -> tuple[dict, bool]:
    mod, sp, N = _space_and_eta(args)
    if args.element:
        try:
            eta = hs.element_from_json(sp, _load(args.element))
        except ValueError as exc:
            raise InputError(f"{args.element}: {exc}") from exc
    else:
        eta = hs.weakify(mod, N, sp)
    rep = hs.check_mc(eta, normalized=not args.unnormalized)
    return {"truncation": N, **rep.to_json()}, rep.ok


def cmd_transfer(args) -> tuple[dict, bool]:
    alg = _algebra(args)
    N = _truncation(args, alg)
    rows = []
    ok = True
    for t in range(args.trials):
        inst = hs.random_transfer_instance(alg, N, args.seed + t)
        res = hs.transfer(inst.eta, inst.data)
        mc = hs.check_mc(res.phi, normalized=False).equation_ok
        closed = hs.twisted_d(res.a, inst.eta, res.phi).is_zero()
        mats = res.a.P0_matrices()
        p0 = all(mats.get(j) == inst.data.a0.at(j) for j in inst.data.a0.maps)
        norm = None if res.normalization is None else res.normalization.success
        rows.append({"seed": args.seed + t, "mc": mc, "closed": closed, "p0_equals_a0": p0, "normalization": norm})
        ok = ok and mc and closed and p0 is not False and norm is not False
    return {"truncation": N, "mode": alg.mode, "m": alg.m, "instances": rows, "ok": ok}, ok


def cmd_hkr_scan(args) -> tuple[dict, bool]:
    alg = _algebra(args)
    kmax = args.kmax
    N = args.truncation if args.truncation is not None else kmax + 1
    if args.module:
        mod = _module(_load(args.module), args.module)
        alg = mod.algebra
    else:
        mod = _standard_module(alg, args.rank)
    sp = hs.QSpace(alg, mod.complex, mod.complex, N)
    eta = hs.weakify(mod, N, sp)
    window = _window(args.window)
    scan = hs.graded_acyclicity_scan(eta, eta, sp, kmax, window, args.trials, args.seed)
    table = {}
    ok = True
    for k, row in sorted(scan.items()):
        acyc = row.acyclic()
        table[str(k)] = {"ranks": {str(i): r for i, r in sorted(row.report.ranks.items())}, "acyclic": acyc}
        if k >= alg.m + 1 and not acyc:
            ok = False
    return {"m": alg.m, "mode": alg.mode, "truncation": N, "window": list(window), "levels": table, "threshold": alg.m + 1, "ok": ok}, ok


def _presheaf_from_json(data: dict, where: str) -> cech.PresheafOfComplexes:
    try:
        cov = cech.Covering.from_json(_field(data, "covering", where))
    except ValueError as exc:
        raise InputError(f"{where}: covering: {exc}") from exc
    names = {n: i for i, n in enumerate(cov.opens)}
    values = {}
    for name, cdata in _field(data, "values", where).items():
        if name not in names:
            raise InputError(f"{where}: values: unknown open {name!r}")
        try:
            values[names[name]] = complex_from_json(cdata)
        except ValueError as exc:
            raise InputError(f"{where}: values[{name}]: {exc}") from exc
    if len(values) != len(cov.opens):
        raise InputError(f"{where}: every open needs a complex")
    res = {}
    for n, r in enumerate(data.get("restrictions", [])):
        try:
            a, b = names[r["small"]], names[r["big"]]
        except KeyError as exc:
            raise InputError(f"{where}: restrictions[{n}]: unknown open or missing field {exc}") from exc
        maps = {int(i): [[QQ.parse(str(x)) for x in row] for row in m] for i, m in r.get("maps", {}).items()}
        try:
            res[(a, b)] = ChainMap(values[b], values[a], maps)
        except ValueError as exc:
            raise InputError(f"{where}: restrictions[{n}]: {exc}") from exc
    return cech.PresheafOfComplexes(cov, values, res)


def cmd_cech(args) -> tuple[dict, bool]:
    if args.presheaf:
        P = _presheaf_from_json(_load(args.presheaf), args.presheaf)
        bad = P.violations()
        if bad:
            return {"violations": bad}, False
        G = cech.globalize_complex(P)
        out = {
            "ranks": {str(i): G.rank(i) for i in sorted(G.basis)},
            "homology": {str(k): v for k, v in sorted(homology_ranks(G.to_complex(), _window(args.window)).items())},
            "square_zero": not G.square_defect(),
            "violations": [],
        }
        ok = out["square_zero"]
        if P.covering.total is not None:
            out["unit_comparison"] = cech.unit_comparison(P)
            ok = ok and out["unit_comparison"]["quasi_iso"]
        return out, ok
    if args.pole_model:
        model = _model(args, args.mode)
        G = model.G
        val = mg.validate_dga(G)
        out = {"summary": model.summary(), "validation": val}
        ok = val["ok"]
        if not G.lam:
            pts = [G.eta0]
            for s in range(args.trials):
                p = mg.random_mc_point(G, args.seed + s)
                if p is not None:
                    pts.append(p)
            rng = random.Random(args.seed)
            probes = [{i: Fraction(rng.randint(-2, 2)) for i in range(G.dim(1)) if rng.random() < 0.3} for _ in range(args.trials)]
            cert = cech.mc_glob_commute(model.presheaf, pts, probes)
            out["mc_globalization"] = {k: (len(v) if isinstance(v, list) else v) for k, v in sorted(cert.items())}
            ok = ok and cert["ok"]
        path = _stash("pole_model_dga.json", G.to_json())
        if path:
            out["scratch"] = Path(path).name
        return out, ok
    raise InputError("cech needs --presheaf FILE or --pole-model")


def cmd_fiber(args) -> tuple[dict, bool]:
    Z, model = _lambda_dga(args)
    var = mg.mc_equations(Z)
    out = {"model": args.model, "rank": args.rank, "k": args.k, "lambda": args.lam, "summary": {**model.summary(), **Z.summary()}, "variety": var.to_json()}
    if Z.lam:
        return out, True
    trivial = Z.eta0
    ok_pt = mg.is_mc_point(Z, trivial) and var.vanishes_at(var.coordinates(trivial))
    out["trivial_connection"] = {"mc": ok_pt}
    tan = mg.tangent_cohomology(Z, trivial)
    out["tangent"] = tan
    ok = ok_pt and tan["agree"] and tan["square_zero"]
    return out, ok


def _model_dga(args) -> mg.FiniteFilteredDGA:
    if getattr(args, "dga", None):
        try:
            return mg.FiniteFilteredDGA.from_json(_load(args.dga))
        except (ValueError, KeyError) as exc:
            raise InputError(f"{args.dga}: {exc}") from exc
    Z, _ = _lambda_dga(args)
    if Z.lam:
        raise InputError("this subcommand needs a numeric --lambda")
    return Z


def cmd_chart(args) -> tuple[dict, bool]:
    Z = _model_dga(args)
    phi = _vec_from_json(Z, 1, _load(args.point), args.point) if args.point else Z.eta0
    if not mg.is_mc_point(Z, phi):
        return {"violations": ["base point is not Maurer-Cartan"]}, False
    eqs = mg.chart_equations(Z, phi)
    rng = random.Random(args.seed)
    gcols = Z.indices(0, 1)
    samples = [{c: Fraction(rng.randint(-2, 2)) for c in gcols if rng.random() < 0.5} for _ in range(args.trials)]
    fib = mg.chart_fiber(Z, phi, samples)
    ok = all(p.ok for p in fib)
    samples_out = [
        {
            "alpha": _vec_json(Z, 0, p.alpha),
            "psi": _vec_json(Z, 1, p.psi),
            "psi_is_mc": p.psi_is_mc,
            "equation_ok": p.equation_ok,
            "staged_agrees": p.staged_agrees,
        }
        for p in fib
    ]
    return {"equations": eqs, "samples": samples_out, "ok": ok}, ok


def cmd_gauge(args) -> tuple[dict, bool]:
    Z = _model_dga(args)
    if args.points:
        data = _load(args.points)
        phi = _vec_from_json(Z, 1, _field(data, "phi", args.points), args.points)
        psi = _vec_from_json(Z, 1, _field(data, "psi", args.points), args.points)
        for name, p in (("phi", phi), ("psi", psi)):
            if not mg.is_mc_point(Z, p):
                return {"violations": [f"{name} is not Maurer-Cartan"]}, False
        res = mg.gauge_solve(Z, phi, psi)
        brute = mg.brute_force_gauge(Z, phi, psi)
        ok = (res.alpha is not None) == brute
        return {"result": res.to_json(Z), "brute_force_equivalent": brute, "agree": ok}, ok
    rng = random.Random(args.seed)
    rows = []
    ok = True
    for t in range(args.trials):
        phi = mg.random_mc_point(Z, args.seed + t) or Z.eta0
        alpha = vadd_unit(Z, {c: Fraction(rng.randint(-2, 2)) for c in Z.indices(0, 1) if rng.random() < 0.5})
        psi = mg.gauge_act(Z, phi, alpha)
        res = mg.gauge_solve(Z, phi, psi)
        brute = mg.brute_force_gauge(Z, phi, psi)
        row = {"trial": t, "conjugate_solved": res.alpha is not None and res.residual_ok, "brute_force": brute}
        ok = ok and row["conjugate_solved"] and brute
        rows.append(row)
    return {"trials": rows, "gauge_group_dim": len(Z.indices(0, 1)), "ok": ok}, ok


def vadd_unit(Z: mg.FiniteFilteredDGA, a: dict) -> dict:
    return mg.vadd(Z.one(), a)


def cmd_transport(args) -> tuple[dict, bool]:
    small = _model(args, "weyl")
    big_sched = _ints(args.target_schedule, "--target-schedule") if args.target_schedule else [2 * v for v in small.schedule.m]
    try:
        big = cech.pole_bounded_model(small.covering, big_sched, small.k, rank=small.rank, mode="weyl", top=small.G.top)
        f = cech.model_inclusion(small, big)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    rows = []
    ok = True
    for t in range(args.trials):
        eta = mg.random_mc_point(small.G, args.seed + t) or small.G.eta0
        res = mg.gm_transport(f, eta)
        good = res.ok and mg.is_mc_point(big.G, res.point)
        rows.append({"trial": t, **res.to_json(big.G), "verified": good})
        ok = ok and good
    return {"source_schedule": list(small.schedule.m), "target_schedule": list(big.schedule.m), "transports": rows, "ok": ok}, ok


def cmd_hodge(args) -> tuple[dict, bool]:
    models = {m: _model(args, m) for m in ("rees", "weyl", "poly")}
    R = models["rees"].G
    var = mg.mc_equations(R)
    rng = random.Random(args.seed)
    values = [Fraction(rng.randint(-9, 9), rng.randint(1, 9)) for _ in range(2)]
    commute = {str(v): var.specialize(v) == mg.mc_equations(mg.hodge_specialize(R, v)) for v in values}
    one = mg.hodge_specialize(R, 1)
    zero = mg.hodge_specialize(R, 0)
    out = {
        "summary": models["rees"].summary(),
        "lambda_one_equals_weyl": one == models["weyl"].G,
        "lambda_zero_equals_poly": zero == models["poly"].G,
        "lambda_zero_commutator_free": mg.commutator_free(mg.mc_equations(zero)),
        "formal_lambda_present": not mg.commutator_free(var),
        "specialization_commutes": commute,
    }
    ok = out["lambda_one_equals_weyl"] and out["lambda_zero_equals_poly"] and out["lambda_zero_commutator_free"] and all(commute.values())
    out["ok"] = ok
    return out, ok


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--truncation", type=int, default=None, help="J-truncation N (default m + 2)")
    p.add_argument("--window", default=None, help="degree window 'lo,hi' (default -2,2)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--out", default=None, help="write the report here instead of stdout")


def _model_flags(p: argparse.ArgumentParser, lam: bool = True) -> None:
    p.add_argument("--model", default="a1-two-opens", help=f"one of {sorted(MODELS)}")
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--k", type=int, default=2, help="J-level truncation of the model")
    p.add_argument("--schedule", default=None, help="pole orders m(0),m(1),... (default 0,1,...,k-1)")
    p.add_argument("--top", type=int, default=2, help="top cohomological degree kept")
    if lam:
        p.add_argument("--lambda", dest="lam", default="1", help="value of lambda, or 'formal'")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hodgemc", description="Weak L-modules, Cech globalization and Maurer-Cartan charts.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a complex, module, covering or dga file")
    p.add_argument("file")
    p.add_argument("--kind", choices=["complex", "module", "covering", "dga"])
    _common(p)

    p = sub.add_parser("homology", help="homology ranks of a complex file")
    p.add_argument("file")
    _common(p)

    p = sub.add_parser("dp", help="Dold-Puppe levels and homotopy groups of a complex over Q")
    p.add_argument("--complex", dest="file", required=True)
    p.add_argument("--levels", type=int, default=3)
    _common(p)

    for name, fn in (("weakify", "weakify a strict module"), ("mc-check", "check the MC equation")):
        p = sub.add_parser(name, help=fn)
        p.add_argument("--module", required=True, help="strict module file")
        if name == "mc-check":
            p.add_argument("--element", default=None, help="MC element file (default: weakify the module)")
            p.add_argument("--unnormalized", action="store_true")
        _common(p)

    for name, fn in (("transfer", "homotopy transfer on generated instances"), ("hkr-scan", "graded acyclicity scan")):
        p = sub.add_parser(name, help=fn)
        p.add_argument("--m", type=int, default=1)
        p.add_argument("--mode", choices=["poly", "weyl"], default="weyl")
        if name == "hkr-scan":
            p.add_argument("--kmax", type=int, default=3)
            p.add_argument("--rank", type=int, default=1)
            p.add_argument("--module", default=None)
        _common(p)

    p = sub.add_parser("cech", help="globalize a presheaf file or build the pole-bounded model")
    p.add_argument("--presheaf", default=None)
    p.add_argument("--globalize", action="store_true", help="(default action for --presheaf)")
    p.add_argument("--pole-model", action="store_true")
    p.add_argument("--mode", choices=["poly", "weyl", "rees"], default="weyl")
    _model_flags(p, lam=False)
    _common(p)

    for name, fn in (
        ("fiber", "MC variety, trivial point and tangent dims of a model"),
        ("chart", "chart equations and sampled chart points"),
        ("gauge", "gauge equivalence solving"),
    ):
        p = sub.add_parser(name, help=fn)
        _model_flags(p)
        if name in ("chart", "gauge"):
            p.add_argument("--dga", default=None, help="finite dga file instead of a model")
        if name == "chart":
            p.add_argument("--point", default=None, help="base MC point {label: value}")
        if name == "gauge":
            p.add_argument("--points", default=None, help='file {"phi": {...}, "psi": {...}}')
        _common(p)

    p = sub.add_parser("transport", help="transport MC points along a pole-model inclusion")
    _model_flags(p, lam=False)
    p.add_argument("--target-schedule", default=None)
    _common(p)

    p = sub.add_parser("hodge", help="lambda-family checks on the Rees build")
    _model_flags(p, lam=False)
    _common(p)
    p.set_defaults(model="a1-one-chart", rank=1, k=3, schedule="0,1,2")
    return ap


COMMANDS = {
    "validate": cmd_validate,
    "homology": cmd_homology,
    "dp": cmd_dp,
    "weakify": cmd_weakify,
    "mc-check": cmd_mc_check,
    "transfer": cmd_transfer,
    "hkr-scan": cmd_hkr_scan,
    "cech": cmd_cech,
    "fiber": cmd_fiber,
    "chart": cmd_chart,
    "gauge": cmd_gauge,
    "transport": cmd_transport,
    "hodge": cmd_hodge,
}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (Fraction, Poly)):
        return mg._fmt(x)
    return x


def run(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "lam", None) == "formal":
        args.lam = None
    elif getattr(args, "lam", None) is not None:
        try:
            Fraction(args.lam)
        except ValueError:
            ap.error(f"--lambda expects a rational or 'formal', got {args.lam!r}")
    for flag in ("trials", "rank", "k", "levels", "kmax", "m"):
        v = getattr(args, flag, None)
        if v is not None and v < (0 if flag in ("trials", "levels", "kmax") else 1):
            ap.error(f"--{flag} must be positive")
    try:
        report, ok = COMMANDS[args.command](args)
    except InputError as exc:
        print(f"hodgemc {args.command}: {exc}", file=sys.stderr)
        return 2
    report = {"command": args.command, "seed": args.seed, "passed": bool(ok), **_jsonable(report)}
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
