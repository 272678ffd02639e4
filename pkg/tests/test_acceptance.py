"""Acceptance criteria, each timed against its limit.

Every test prints one ``criterion N: PASS|FAIL`` line, visible without ``-s``.
"""

from __future__ import annotations

import contextlib
import itertools
import random
import time

from conftest import GF5, GF7
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from vmds.algebra import make_field
from vmds.analysis import (
    basis_vector_degrees,
    bound_max_k,
    check_invariance,
    determinant_criterion,
    diagonal_structure_check,
    intersection_profile,
    is_constant,
    is_optimal_access,
    is_optimal_bandwidth,
    is_optimal_update,
)
from vmds.construct import constant_scheme_transform, diagonal_code, figure1_code, shorten
from vmds.model import decode_from_any_k, encode, is_mds, normalize_last_row
from vmds.repair import bandwidth_floor, repair_node, zero_state
from vmds.search import certify_max_k, extend_code


@contextlib.contextmanager
def criterion(pytestconfig, number: int, title: str, limit: float):
    capture = pytestconfig.pluginmanager.getplugin("capturemanager")
    start = time.perf_counter()
    verdict = "FAIL"
    try:
        yield
        elapsed = time.perf_counter() - start
        assert elapsed < limit, f"took {elapsed:.2f}s, limit {limit}s"
        verdict = "PASS"
    finally:
        elapsed = time.perf_counter() - start
        with capture.global_and_fixture_disabled():
            print(f"\ncriterion {number}: {verdict} ({elapsed:.2f}s / {limit:g}s) {title}")


def test_criterion_1_figure1_fidelity(pytestconfig):
    with criterion(pytestconfig, 1, "figure-1 code is MDS with optimal bandwidth 5", 1):
        code, scheme = figure1_code()
        assert is_mds(code)
        assert is_optimal_bandwidth(code, scheme)
        assert bandwidth_floor(code.n, code.k, code.l) == 5
        for m in range(1, 5):
            transcript = repair_node(code, scheme, zero_state(code), m)
            assert transcript.total_bandwidth == 5


def test_criterion_2_access_differs_from_bandwidth(pytestconfig):
    with criterion(pytestconfig, 2, "repairing N3 reads 10 symbols, N1 reads 5", 1):
        code, scheme = figure1_code()
        data = encode(code, [[1, 5], [2, 6], [3, 0], [4, 1]])
        n3 = repair_node(code, scheme, data, 3)
        assert (n3.total_access, n3.total_bandwidth) == (10, 5)
        n1 = repair_node(code, scheme, data, 1)
        assert (n1.total_access, n1.total_bandwidth) == (5, 5)


def test_criterion_3_shortened_fixtures(pytestconfig):
    with criterion(pytestconfig, 3, "shortenings {1,2} and {3,4} hit their family bounds", 1):
        code, scheme = figure1_code()
        c12, s12 = shorten(code, scheme, [1, 2])
        assert is_optimal_access(s12) and is_optimal_bandwidth(c12, s12)
        assert c12.k == 2 == bound_max_k(2, 2, "access")
        c34, s34 = shorten(code, scheme, [3, 4])
        assert is_optimal_update(c34) and is_optimal_bandwidth(c34, s34)
        assert not is_constant(s34)
        assert c34.k == 2 == bound_max_k(2, 2, "diagonal", constant_scheme=False)
        assert c34.k == bound_max_k(2, 2, "diagonal") + 1


def test_criterion_4_diagonal_tightness(pytestconfig):
    with criterion(pytestconfig, 4, "diagonal constant max k is log_r l", 60):
        cert = certify_max_k(2, 2, GF7, "diagonal", constant_scheme=True)
        assert (cert.achieved_k, cert.exhausted) == (1, True)
        code, scheme = diagonal_code(2, 2, GF5)
        assert code.k == 2 == bound_max_k(4, 2, "diagonal")
        assert extend_code(code, scheme, family="diagonal", constant=True) is None


def test_criterion_5_access_tightness(pytestconfig):
    with criterion(pytestconfig, 5, "access constant max k is r log_r l", 60):
        cert = certify_max_k(2, 2, GF7, "access", constant_scheme=True)
        assert (cert.achieved_k, cert.exhausted) == (2, True)
        assert cert.achieved_k == bound_max_k(2, 2, "access")


def test_criterion_6_constant_scheme_transform(pytestconfig):
    with criterion(pytestconfig, 6, "transform of figure 1 is a constant-scheme (5,3,2) code", 1):
        out, scheme = constant_scheme_transform(*figure1_code())
        assert (out.n, out.k, out.l, out.ctx.q) == (5, 3, 2, 7)
        assert is_mds(out)
        assert is_optimal_bandwidth(out, scheme)
        assert is_constant(scheme)
        assert check_invariance(out, scheme)


def _fixture_pool():
    f1 = figure1_code()
    d22 = diagonal_code(2, 2, GF5)
    base = [f1, d22, diagonal_code(2, 1, GF5), diagonal_code(3, 1, GF7), diagonal_code(2, 3, GF7)]
    pool = list(base)
    for code, scheme in base:
        if code.k >= 2:
            for d in range(1, code.k + 1):
                pool.append(constant_scheme_transform(code, scheme, deleted=d))
    for q, family in itertools.product((5, 7), ("diagonal", "access")):
        witness = certify_max_k(2, 2, make_field(q), family, constant_scheme=True).witness_code()
        pool.append(witness)
    return pool


POOL: list = []


def _run_suites(code, scheme):
    assert is_mds(code) and is_optimal_bandwidth(code, scheme)
    if not is_constant(scheme):
        return 0
    norm = normalize_last_row(code)
    assert intersection_profile(scheme).passed
    assert determinant_criterion(norm, scheme).passed
    if is_optimal_access(scheme):
        assert basis_vector_degrees(scheme)[1].passed
    if norm.is_diagonal():
        assert all(diagonal_structure_check(norm, scheme, m).passed for m in range(1, code.k + 1))
    return 1


@given(pick=st.integers(0, 2**16), keep_seed=st.integers(0, 2**16))
@settings(max_examples=80, deadline=None, suppress_health_check=list(HealthCheck), database=None)
def _invariant_property(pick, keep_seed):
    code, scheme = POOL[pick % len(POOL)]
    rng = random.Random(keep_seed)
    keep = sorted(rng.sample(range(1, code.k + 1), rng.randint(1, code.k)))
    _run_suites(*shorten(code, scheme, keep))


def test_criterion_7_invariant_suites(pytestconfig):
    with criterion(pytestconfig, 7, "invariant suites pass on every verified fixture", 60):
        POOL[:] = _fixture_pool()
        checked = sum(_run_suites(code, scheme) for code, scheme in POOL)
        assert checked >= 10
        _invariant_property()


def test_criterion_8_bound_goldens(pytestconfig):
    with criterion(pytestconfig, 8, "bound evaluator reproduces 24, 80, 2, 4", 1):
        assert bound_max_k(4, 2, "general") == 24
        assert bound_max_k(2**40, 2, "access") == 80
        assert bound_max_k(4, 2, "diagonal") == 2
        assert bound_max_k(4, 2, "access") == 4


def test_criterion_9_decode_exhaustive(pytestconfig):
    with criterion(pytestconfig, 9, "decode every erasure pattern of size <= r", 30):
        rng = random.Random(2024)
        for code, _ in (figure1_code(), diagonal_code(2, 2, GF5)):
            nodes = range(1, code.n + 1)
            patterns = [p for size in range(code.r + 1) for p in itertools.combinations(nodes, size)]
            for _ in range(100):
                data = encode(code, [[rng.randrange(code.ctx.q) for _ in range(code.l)] for _ in range(code.k)])
                for erased in patterns:
                    assert decode_from_any_k(code, data.survivors(erased)) == data
