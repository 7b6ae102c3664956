"""Acceptance gate: one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the verdict lines are
written straight to the terminal.
"""

import copy
import json
import random
import time
from fractions import Fraction
from functools import lru_cache

import pytest

from instances import random_element, random_series, solved_instances
from padic_witness import FieldElement, PrimeContext, SubspaceBasis, TruncatedSeries, analyze, evaluate, recenter, solve
from padic_witness.exact_linalg import bound_A, expand, rank_over_prime_field
from padic_witness.oracle import (
    check_combinations,
    check_high_degree_bound,
    enumerate_valuation_set,
    verify_certificate,
    verify_injectivity_grid,
)
from padic_witness.series import point_add
from padic_witness.witness import decompose, level_series

pytestmark = pytest.mark.acceptance
F = Fraction


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")

    return emit


@lru_cache(maxsize=None)
def random_suite():
    """The 200-instance suite: p in {2,3,5}, d <= 3, r <= 2, n <= 5, degree <= 4, D <= 4."""
    start = time.perf_counter()
    out = list(solved_instances(20240611, 200))
    return out, time.perf_counter() - start


@lru_cache(maxsize=None)
def depth_suite():
    return list(solved_instances(1729, 50, fixed_r=3))


def worked_basis():
    ctx = PrimeContext(2)
    return SubspaceBasis.scalar([TruncatedSeries(ctx, 1, {(0,): 1}), TruncatedSeries(ctx, 1, {(1,): 1})])


def test_criterion_1_worked_example(report):
    start = time.perf_counter()
    basis = worked_basis()
    out = analyze(basis)
    _, cert = solve(basis)
    obj = json.loads(json.dumps(cert.to_json()))
    audit = verify_certificate(obj)
    grid = verify_injectivity_grid(basis, cert.witness, 3)
    elapsed = time.perf_counter() - start
    expected_u = FieldElement.prime_power(PrimeContext(2, 3), F(7, 3))
    ok = (
        (out["m"], out["A"], out["q"], out["N"]) == (2, "1", [3], 2)
        and cert.witness == (expected_u,)
        and obj["witness_text"] == ["2^(7/3)"]
        and audit.passed
        and grid.status == "pass"
        and elapsed < 1.0
    )
    report(1, ok, f"m=2 A=1 q=[3] N=2 u=2^(7/3), audit and L=3 grid pass, {elapsed:.3f}s < 1s")
    assert ok


def test_criterion_2_random_solver_suite(report):
    suite, solve_time = random_suite()
    start = time.perf_counter()
    ranks = sum(cert.rank_check == basis.n for basis, _, cert in suite)
    grids = sum(verify_injectivity_grid(basis, cert.witness, 3).status == "pass" for basis, _, cert in suite)
    elapsed = solve_time + time.perf_counter() - start
    ok = len(suite) == 200 and ranks == 200 and grids == 200 and elapsed < 120
    report(2, ok, f"{ranks}/200 rank_check = n, {grids}/200 grid L=3 pass, {elapsed:.1f}s < 120s")
    assert ok


def valuation_family(seed, count):
    """n, s <= 3, entries +-unit * p^v with v in [-2, 2] and small units, independent vectors."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        p = rng.choice([2, 3, 5])
        D = rng.choice([1, 2])
        ctx = PrimeContext(p, D)
        n, s = rng.randint(1, 3), rng.randint(1, 3)

        def entry():
            if rng.random() < 0.2:
                return FieldElement.zero(ctx)
            v = F(rng.randint(-2 * D, 2 * D), D)
            unit = rng.choice([x for x in range(1, 10) if x % p]) * rng.choice([1, -1])
            return FieldElement.prime_power(ctx, v) * unit

        t = [tuple(entry() for _ in range(s)) for _ in range(n)]
        if rank_over_prime_field(expand(t, support_only=True)) == n:
            out.append(t)
    return out


def test_criterion_3_valuation_set_soundness(report):
    ctx = PrimeContext(2)
    known = [
        tuple(FieldElement.rational(ctx, x) for x in row)
        for row in [(F(-1, 4), 5, F(9, 4)), (F(-1, 4), -6, -10), (-12, 20, 7)]
    ]
    family = valuation_family(11, 100) + [known]
    sound = stable = 0
    for t in family:
        A = bound_A(expand(t, support_only=True))
        vs = enumerate_valuation_set(t, 6)
        sound += all(v < A for v in vs.values)
        stable += vs.stabilized
    total = len(family)
    ok = sound == total and stable == total
    report(3, ok, f"{sound}/{total} below bound_A, {stable}/{total} stabilized by L=6")
    assert ok


def grid_precision(p, n, cap=2000):
    L = 1
    while L < 3 and p ** ((L + 1) * n) <= cap:
        L += 1
    return L


def level_data(basis, chain):
    """``(series, m, N, q, offset)`` per level, rebuilt from the region chain."""
    parts = decompose(basis)
    for idx, (part, (origin, region)) in enumerate(zip(parts, chain)):
        lb = level_series(part, origin if idx else None)
        yield lb, region


def test_criterion_4_inequalities(report):
    suite, _ = random_suite()
    high = combos = levels = 0
    failures = []
    for basis, chain, cert in suite:
        for level, (lb, region) in zip(cert.levels, level_data(basis, chain)):
            series = lb.scalars()
            u = region.witness()
            levels += 1
            if check_high_degree_bound(series, level.m, level.N, u):
                high += 1
            rep = check_combinations(series, level.m, level.N, level.q, u, grid_precision(basis.ctx.p, lb.n))
            if rep.ok:
                combos += 1
            else:
                failures.append(rep.failures[:3])
    ok = high == levels and combos == levels
    report(4, ok, f"{high}/{levels} levels satisfy the high-degree bound, {combos}/{levels} pass low-term, distinct-valuation and exponent-recovery checks")
    assert ok, failures[:3]


def test_criterion_5_negative_control(report):
    res = verify_injectivity_grid(worked_basis(), (FieldElement.rational(PrimeContext(2), 2),), 3)
    ok = res.status == "fail" and res.counterexample == (-2, 1)
    report(5, ok, f"u=2 gives {res.status} with counterexample {res.counterexample} (f = z - 2)")
    assert ok


def test_criterion_6_induction_depth(report):
    suite = depth_suite()
    ranks = sum(cert.rank_check == basis.n for basis, _, cert in suite)
    rng = random.Random(6)
    trips = 0
    for _ in range(100):
        ctx = PrimeContext(rng.choice([2, 3, 5]), rng.randint(1, 3))
        d = rng.randint(1, 3)
        f = random_series(rng, ctx, d, max_degree=4)
        u = tuple(random_element(rng, ctx) for _ in range(d))
        w = tuple(random_element(rng, ctx) for _ in range(d))
        trips += evaluate(recenter(f, u), w) == evaluate(f, point_add(u, w))
    ok = len(suite) == 50 and ranks == 50 and trips == 100
    report(6, ok, f"{ranks}/50 r=3 instances reach rank_check = n, {trips}/100 recentering round trips exact")
    assert ok


def leaves(obj, path=()):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from leaves(v, path + (k,))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from leaves(v, path + (i,))
    else:
        yield path, obj


def tamper(value):
    if isinstance(value, bool):
        return not value
    if isinstance(value, int):
        return value + 1
    if isinstance(value, str):
        try:
            return str(Fraction(value) + 1)
        except ValueError:
            return value + "x"
    return "x"


def rejected(obj):
    try:
        return not verify_certificate(obj).passed
    except Exception:
        return True


def test_criterion_7_certificate_audit(report):
    suite, _ = random_suite()
    certs = [cert.to_json() for _, _, cert in suite] + [cert.to_json() for _, _, cert in depth_suite()]
    audited = sum(verify_certificate(json.loads(json.dumps(c))).passed for c in certs)
    rng = random.Random(7)
    tampered = detected = 0
    for i, obj in enumerate(certs):
        paths = list(leaves(obj))
        # every field of the first ten, a random sample of the rest
        chosen = paths if i < 10 else rng.sample(paths, min(8, len(paths)))
        for path, value in chosen:
            bad = copy.deepcopy(obj)
            target = bad
            for k in path[:-1]:
                target = target[k]
            target[path[-1]] = tamper(value)
            tampered += 1
            detected += rejected(bad)
    ok = audited == len(certs) and detected == tampered
    report(7, ok, f"{audited}/{len(certs)} certificates re-verify from JSON, {detected}/{tampered} single-field tampers detected")
    assert ok
