"""Command-line front-end.

Usage::

    algebroid-fedosov --spec heis3 star f=p1 g=p2
    algebroid-fedosov --spec my.spec --kappa 0 --nu-order 6 assoc-check --trials 50

Command arguments are ``key=value`` pairs.  Every report ends with a
``RESULT: PASS`` or ``RESULT: FAIL`` trailer.  Exit status is 0 when all
checks pass, 1 when a check fails and 2 for input errors.
"""

from __future__ import annotations

import argparse
import random
import re
import sys
from typing import Callable, Dict, List, Optional, Tuple

from .algebroid import EConnection, curvature, d_E, validate_chart
from .equivalence import (
    connection_equivalence,
    connection_report,
    gauge_iso,
    gauge_report,
    kappa_equivalence,
    make_connection_change,
    make_gauge,
    make_ordering_change,
    ordering_report,
)
from .fedosov import (
    CheckReport,
    InternalConsistencyError,
    associativity_report,
    homogeneity_check,
    parity_check,
    star,
    verify_solution,
)
from .modular import (
    divergence_property_failures,
    modular_vector_field,
    tr_ad,
    tr_ad_failures,
    trace_certificate,
)
from .ring import BasePoly, InputError, scalar
from .samples import random_section
from .sections import EFormSeries, PolySection
from .specfile import RunSpec, load_spec
from .uea import associativity_test, confluence_test, gutt_compare, phi_check

COMMANDS = [
    "validate",
    "d-e",
    "curvature",
    "solve-r",
    "tau",
    "star",
    "c-r",
    "assoc-check",
    "homog-check",
    "parity-check",
    "equiv-gauge",
    "equiv-connection",
    "equiv-kappa",
    "uea-check",
    "gutt-compare",
    "modular",
    "trace-check",
]

_ENTRY = re.compile(r"\(\s*(\d+(?:\s*,\s*\d+)*)\s*\)\s*:")


def parse_entries(text: str) -> List[Tuple[Tuple[int, ...], str]]:
    """``"(1,2): q1, (2,3): 1/2"`` -> ``[((0, 1), "q1"), ((1, 2), "1/2")]`` (0-based)."""
    matches = list(_ENTRY.finditer(text))
    if not matches or text[: matches[0].start()].strip():
        raise InputError(f"expected entries like '(1,2): poly', got {text!r}")
    out = []
    for j, m in enumerate(matches):
        end = matches[j + 1].start() if j + 1 < len(matches) else len(text)
        poly = text[m.end():end].strip().rstrip(",").strip()
        if not poly:
            raise InputError(f"missing polynomial after {m.group(0)!r}")
        idx = tuple(int(x) - 1 for x in m.group(1).split(","))
        if any(i < 0 for i in idx):
            raise InputError("indices start at 1")
        out.append((idx, poly))
    return out


def parse_form(args: Dict[str, str], prefix: str, n: int, N: int) -> EFormSeries:
    """Collect ``prefix`` (nu^0) and ``prefix<k>`` (nu^k) entries into a form series."""
    entries = []
    for key, text in args.items():
        m = re.fullmatch(re.escape(prefix) + r"(\d*)", key)
        if not m:
            continue
        k = int(m.group(1) or 0)
        for idx, poly in parse_entries(text):
            entries.append((k, idx, BasePoly.parse(poly, n)))
    return EFormSeries.from_entries(n, N, entries)


class Context:
    def __init__(self, spec: RunSpec, ns: argparse.Namespace, kv: Dict[str, str]):
        self.spec = spec
        self.ns = ns
        self.kv = kv
        self._setup = None

    @property
    def setup(self):
        if self._setup is None:
            self._setup = self.spec.fedosov_setup()
        return self._setup

    def section(self, key: str, default: Optional[str] = None) -> PolySection:
        text = self.kv.get(key, default)
        if text is None:
            raise InputError(f"missing argument {key}=...")
        return PolySection.parse(text, self.spec.n, self.spec.N)

    def rng(self) -> random.Random:
        return random.Random(self.ns.seed)

    def pairs(self, count: int, max_fibre: int = 2):
        rng = self.rng()
        n, N = self.spec.n, self.spec.N
        return [
            (random_section(rng, n, N, max_fibre=max_fibre, max_base=1), random_section(rng, n, N, max_fibre=max_fibre, max_base=1))
            for _ in range(count)
        ]


Handler = Callable[[Context], Tuple[List[str], bool]]


def _validate(ctx: Context):
    rep = validate_chart(ctx.spec.chart())
    lines = [ctx.spec.echo()] + [f"note: {x}" for x in ctx.spec.notes]
    lines += ["chart valid" if rep.ok else str(rep)]
    return lines, rep.ok


def _d_e(ctx: Context):
    ch = ctx.spec.chart()
    ch.require_valid()
    form = parse_form(ctx.kv, "form", ch.n, ch.N) if any(k.startswith("form") for k in ctx.kv) else None
    if form is None:
        u = BasePoly.parse(ctx.kv.get("u", "0"), ch.n)
        form = EFormSeries.function(u, ch.N)
    return [f"d_E({form}) = {d_E(form, ch)}"], True


def _curvature(ctx: Context):
    st = ctx.setup
    R = curvature(st.conn, st.chart, st.trunc)
    return ["R =", R.dump() or "0"], True


def _solve_r(ctx: Context):
    sol = ctx.setup.solution()
    problems = verify_solution(sol)
    lines = ["r =", sol.r.dump() or "0"] + [f"FAIL {p}" for p in problems]
    return lines, not problems


def _tau(ctx: Context):
    sol = ctx.setup.solution()
    return ["tau =", sol.tau(ctx.section("s")).dump()], True


def _star(ctx: Context):
    sol = ctx.setup.solution()
    res = star(ctx.section("f"), ctx.section("g"), sol, stabilize=True)
    return [str(res)], True


def _c_r(ctx: Context):
    sol = ctx.setup.solution()
    res = star(ctx.section("f"), ctx.section("g"), sol)
    if "r" in ctx.kv:
        r = int(ctx.kv["r"])
        return [f"C_{r} = {res.C_r(r)}"], True
    return [f"C_{r} = {c}" for r, c in sorted(res.C.items())], True


def _assoc(ctx: Context):
    rep = associativity_report(
        ctx.setup.solution(), seed=ctx.ns.seed, trials=ctx.ns.trials, max_fibre=3, max_base=1, threads=ctx.ns.threads
    )
    return [str(rep)], rep.passed


def _homog(ctx: Context):
    sol = ctx.setup.solution()
    ok, witness = homogeneity_check(sol, ctx.rng(), ctx.ns.trials)
    expected = all(k == 1 for (k, _, _) in ctx.setup.B.terms)
    rep = CheckReport()
    detail = "H is a derivation" if ok else f"H is not a derivation; witness {witness}"
    rep.add(f"homogeneity (expected {'derivation' if expected else 'failure'})", ok == expected, detail)
    return [str(rep)], rep.passed


def _parity(ctx: Context):
    st = ctx.setup
    if st.kappa != scalar("1/2"):
        raise InputError("parity-check needs kappa = 1/2")
    if any(k % 2 for (k, _, _) in st.B.terms):
        raise InputError("parity-check needs B even in nu")
    ok = parity_check(st.solution(), ctx.rng(), ctx.ns.trials)
    rep = CheckReport()
    rep.add("nu -> -nu is an anti-automorphism of *Weyl", ok)
    return [str(rep)], ok


def _outputs(ctx: Context, fn) -> List[str]:
    out = []
    for key in sorted(k for k in ctx.kv if re.fullmatch(r"f\d*", k)):
        f = ctx.section(key)
        out.append(f"image of {f} : {fn(f)}")
    return out


def _equiv_gauge(ctx: Context):
    st = ctx.setup
    A = parse_form(ctx.kv, "A", st.n, st.N)
    gauge = make_gauge(st, A)
    lines = [f"A = {A}", f"B' = {gauge.setup_prime.B}"] + _outputs(ctx, lambda f: gauge_iso(f, gauge))
    secs = [p[0] for p in ctx.pairs(3)]
    rep = gauge_report(gauge, ctx.pairs(ctx.ns.trials), secs)
    return lines + [str(rep)], rep.passed


def _equiv_connection(ctx: Context):
    st = ctx.setup
    n, N = st.n, st.N
    if "perturb" not in ctx.kv:
        raise InputError("missing argument perturb='(a,b,g): poly, ...'")
    gamma = [[[v for v in s] for s in r] for r in st.conn.gamma]
    for idx, poly in parse_entries(ctx.kv["perturb"]):
        if len(idx) != 3 or max(idx) >= N:
            raise InputError(f"perturbation index {tuple(i + 1 for i in idx)} invalid for N={N}")
        a, b, g = idx
        gamma[a][b][g] = gamma[a][b][g] + BasePoly.parse(poly, n)
    target = EConnection(n, N, gamma)
    cc = make_connection_change(st, target)
    lines = [f"target {target!r}"] + _outputs(ctx, lambda f: connection_equivalence(f, cc))
    rep = connection_report(cc, ctx.pairs(ctx.ns.trials))
    return lines + [str(rep)], rep.passed


def _equiv_kappa(ctx: Context):
    st = ctx.setup
    if "kappa2" not in ctx.kv:
        raise InputError("missing argument kappa2=<rational>")
    gamma = parse_form(ctx.kv, "gamma", st.n, st.N) if any(k.startswith("gamma") for k in ctx.kv) else None
    oc = make_ordering_change(st, scalar(ctx.kv["kappa2"]), gamma)
    lines = [f"gamma_tr = {oc.gamma_tr}"] + _outputs(ctx, lambda f: kappa_equivalence(f, oc))
    rep = ordering_report(oc, ctx.pairs(ctx.ns.trials))
    return lines + [str(rep)], rep.passed


def _uea(ctx: Context):
    st = ctx.setup
    rep = CheckReport()
    rep.add("normal ordering is confluent (random strategies)", confluence_test(st.chart, ctx.rng()))
    rep.add("PBW product is associative", associativity_test(st.chart, ctx.rng()))
    phi = phi_check(st.solution(), ctx.ns.max_degree if ctx.ns.max_degree is not None else 4)
    return [str(rep), str(phi)], rep.passed and phi.passed


def _gutt(ctx: Context):
    lines = gutt_compare(ctx.setup.solution(), ctx.ns.max_degree if ctx.ns.max_degree is not None else 3)
    mism = sum(not l.equal for l in lines)
    out = [str(l) for l in lines] + [f"{len(lines) - mism} equal, {mism} mismatches (reported findings)"]
    return out, True


def _modular(ctx: Context):
    ch = ctx.spec.chart()
    ch.require_valid()
    dw = ctx.spec.weights()
    rep = CheckReport()
    fails = divergence_property_failures(ch, dw, ctx.rng())
    rep.add("divergence identities", not fails, "; ".join(fails))
    fails = tr_ad_failures(ch, dw, ctx.rng())
    rep.add("tr ad closed, C(M)-linear, shifts by d_E(v)", not fails, "; ".join(fails))
    t = tr_ad(dw, ch)
    mvf = modular_vector_field(dw, ch)
    lines = [f"tr ad = {t}", f"unimodular for these weights: {'yes' if not t else 'no'}", f"modular vector field = {mvf}"]
    return lines + [str(rep)], rep.passed


def _trace(ctx: Context):
    st = ctx.setup
    u = BasePoly.parse(ctx.kv["u"], st.n) if "u" in ctx.kv else None
    d = ctx.ns.max_degree if ctx.ns.max_degree is not None else 3
    r = ctx.ns.max_order if ctx.ns.max_order is not None else min(4, st.trunc.L)
    cert = trace_certificate(st.solution(), ctx.spec.weights(), d, r, u=u)
    return [str(cert)], cert.passed


HANDLERS: Dict[str, Handler] = {
    "validate": _validate,
    "d-e": _d_e,
    "curvature": _curvature,
    "solve-r": _solve_r,
    "tau": _tau,
    "star": _star,
    "c-r": _c_r,
    "assoc-check": _assoc,
    "homog-check": _homog,
    "parity-check": _parity,
    "equiv-gauge": _equiv_gauge,
    "equiv-connection": _equiv_connection,
    "equiv-kappa": _equiv_kappa,
    "uea-check": _uea,
    "gutt-compare": _gutt,
    "modular": _modular,
    "trace-check": _trace,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="algebroid-fedosov", description="Fedosov star products on Lie algebroid duals.")
    p.add_argument("--spec", required=True, help="spec file or bundled fixture name")
    p.add_argument("--kappa", help="ordering parameter (rational)")
    p.add_argument("--nu-order", type=int, help="truncation L in nu")
    p.add_argument("--total-degree", type=int, help="truncation T in total degree")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--max-degree", type=int)
    p.add_argument("--max-order", type=int)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("args", nargs="*", help="key=value arguments")
    return p


def run(argv: Optional[List[str]] = None) -> Tuple[int, str]:
    """Parse ``argv``, run the command and return ``(exit status, report text)``."""
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return (2 if e.code else 0), ""
    try:
        kv = {}
        for a in ns.args:
            key, sep, value = a.partition("=")
            if not sep or not key:
                raise InputError(f"argument {a!r} is not key=value")
            kv[key.strip()] = value.strip()
        spec = load_spec(ns.spec)
        if ns.kappa is not None:
            spec.kappa = scalar(ns.kappa)
        if ns.nu_order is not None:
            spec.L = ns.nu_order
            if spec.T is not None and spec.T < spec.L and ns.total_degree is None:
                spec.T = spec.L
        if ns.total_degree is not None:
            spec.T = ns.total_degree
        spec.truncation
        lines, ok = HANDLERS[ns.command](Context(spec, ns, kv))
    except InputError as e:
        return 2, f"input error: {e}\nRESULT: ERROR\n"
    except InternalConsistencyError as e:
        return 1, f"internal consistency failure: {e}\nRESULT: FAIL\n"
    text = "\n".join(lines) + f"\nRESULT: {'PASS' if ok else 'FAIL'}\n"
    return (0 if ok else 1), text


def main(argv: Optional[List[str]] = None) -> int:
    status, text = run(argv)
    sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
