"""Acceptance criteria 1 to 6, one PASS/FAIL line each (exact arithmetic throughout)."""

import time

import pytest
from gmpy2 import mpq

from weilspin import cli
from weilspin import orlov as O
from weilspin import secant as S
from weilspin import suites
from weilspin.exterior import power

from conftest import context


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail
    return emit


def flagship_classes(ctx):
    cfg = cli.parse_config(cli.FLAGSHIP)
    return cli.named_class(ctx, cfg, "alpha0", "classes.alpha"), cli.named_class(ctx, cfg, "betaprime", "classes.beta")


def test_criterion_1_dimensions(report):
    start = time.perf_counter()
    ctx = context("t3d4")
    dims = cli.run_command("dims", cli.parse_config(cli.FLAGSHIP)).sections["dims"]
    bb = sum(S.bb_dims(ctx))
    elapsed = time.perf_counter() - start
    want = {"dimB": 4, "dimHW": 4, "dimA2": 2, "BB": [4, 8, 4], "dimKB1": 4, "dimH11alg": 9}
    ok = dims == want and bb == 16 and elapsed < 10
    report(1, ok, f"dims={dims} dim(BxB)={bb} in {elapsed:.1f}s")


def test_criterion_2_flagship(report):
    start = time.perf_counter()
    ctx = context("t3d4")
    a0, bp = flagship_classes(ctx)
    th = ctx.rm.theta
    rep = O.criterion_check(ctx, a0, bp)
    elapsed = time.perf_counter() - start
    ok = (
        a0 == th - power(th, 3).scale(mpq(1, 6))
        and rep.r == -56
        and rep.kb1_member is False
        and len(rep.kb1_sums) == 4
        and all(rep.kb1_sums.values())
        and not rep.hw_part.is_zero()
        and ctx.SymPart.member(dict(rep.sym_part.terms))
        and elapsed < 300
    )
    report(2, ok, f"r={rep.r} kb1_member={rep.kb1_member} hw_nonzero={not rep.hw_part.is_zero()} in {elapsed:.1f}s")


def test_criterion_3_controls(report):
    ctx = context("t3d4")
    a0, bp = flagship_classes(ctx)
    sqrt_t_beta = S.secant_basis(ctx).vectors[3]
    control = O.criterion_check(ctx, a0, a0)
    passing = {
        "betaprime": O.criterion_check(ctx, a0, bp),
        "alpha0+sqrt(t)beta~": O.criterion_check(ctx, a0, a0 + sqrt_t_beta),
    }
    ok = (
        not control.verdict
        and control.hw_part.is_zero()
        and all(r.r != 0 and r.verdict for r in passing.values())
    )
    detail = f"control r={control.r} hw=0; " + ", ".join(f"{k}: r={r.r} {'pass' if r.verdict else 'fail'}" for k, r in passing.items())
    report(3, ok, detail)


def test_criterion_4_e2_isomorphism(report):
    res = S.bb1_to_hw(context("t0d4"))
    ok = res["injective"] and res["image_equals_HW"] and res["rank"] == res["dimHW"] == res["dimBB1"]
    report(4, ok, f"{res}")


def test_criterion_5_suites(report):
    start = time.perf_counter()
    results = suites.run_suites(context("t3d4"), seed=0, cases=100)
    elapsed = time.perf_counter() - start
    failed = [name for name, res in results.items() if not res.passed]
    skipped = [name for name, res in results.items() if res.skipped]
    short = [name for name, res in results.items() if res.cases < 100 and name not in suites.EXHAUSTIVE]
    ok = not failed and not skipped and not short and elapsed < 600
    report(5, ok, f"{len(results)} families, failed={failed} skipped={skipped} short={short} in {elapsed:.1f}s")


def test_criterion_6_family(report):
    ctx = context("t3d4")
    spec, q = ctx.spec, ctx.spec.q
    th = ctx.rm.theta
    th3 = power(th, 3)
    base = S.b_family(ctx, spec.one)
    checks = {}
    f = spec.elt(2, 1)
    checks["unit norm one"] = f * f.gamma() == spec.one
    x = S.theta_family_class(ctx, spec.elt(3, -1), S.family_graph_f2(ctx, spec.elt(3, -1), spec.one))
    checks["m_f maps B_1 into B_f"] = S.b_family(ctx, f).member(S.m_f(ctx, f, x).terms)
    checks["B_1 and B_f meet trivially"] = S.h2h6_part(ctx, base.intersect(S.b_family(ctx, f))).dim == 0
    g = lambda y: S.pullback(ctx, f, y)  # noqa: E731
    checks["pullback part one"] = S.b_family(ctx, f * f.gamma() * f).member((th + g(th3).scale(-q / 6)).terms)
    checks["pullback part two"] = S.b_family(ctx, f.inv().gamma()).member((g(th) + th3.scale(-q / 6)).terms)
    y = S.pullback(ctx, f, th) - S.pullback(ctx, f.inv(), th3).scale(q / 6)
    checks["new class in B_1 outside P_K0"] = base.member(y.terms) and not S.p_k0(ctx).member(y.terms)
    bad = [k for k, v in checks.items() if not v]
    report(6, not bad, f"{len(checks) - len(bad)}/{len(checks)} family statements hold; failing={bad}")
