from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import settings
from hypothesis import strategies as st

from vmds.algebra import Matrix, make_field
from vmds.construct import constant_scheme_transform, diagonal_code, figure1_code, shorten

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

GF7 = make_field(7)
GF5 = make_field(5)
SMALL_FIELDS = [make_field(2), make_field(3), make_field(5), GF7, make_field(2, 2), make_field(3, 2), make_field(2, 3)]


def matrices(ctx, nrows, ncols):
    return st.lists(
        st.lists(st.integers(0, ctx.q - 1), min_size=ncols, max_size=ncols), min_size=nrows, max_size=nrows
    ).map(lambda rows: Matrix.from_rows(ctx, rows, ncols))


@st.composite
def field_and_matrix(draw, max_n=4, square=True):
    ctx = draw(st.sampled_from(SMALL_FIELDS))
    n = draw(st.integers(1, max_n))
    m = n if square else draw(st.integers(1, max_n))
    return ctx, draw(matrices(ctx, n, m))


def leibniz_det(mat: Matrix) -> int:
    """Permutation-sum determinant, independent of elimination."""
    ctx = mat.ctx
    n = mat.nrows
    total = 0
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for i, j in itertools.combinations(range(n), 2) if perm[i] > perm[j])
        term = 1
        for i, j in enumerate(perm):
            term = ctx.mul(term, mat[i, j])
        total = ctx.sub(total, term) if inversions % 2 else ctx.add(total, term)
    return total


def all_vectors_in_span(ctx, vectors, ambient):
    """Brute-force span: every linear combination of ``vectors``."""
    out = set()
    for coeffs in itertools.product(range(ctx.q), repeat=len(vectors)):
        v = [0] * ambient
        for c, vec in zip(coeffs, vectors):
            v = [ctx.add(a, ctx.mul(c, b)) for a, b in zip(v, vec)]
        out.add(tuple(v))
    return out


def random_data(code, rng: random.Random):
    return [[rng.randrange(code.ctx.q) for _ in range(code.l)] for _ in range(code.k)]


@pytest.fixture(scope="session")
def figure1():
    return figure1_code()


@pytest.fixture(scope="session")
def diag22():
    return diagonal_code(2, 2, GF5)


@pytest.fixture(scope="session")
def transformed(figure1):
    return constant_scheme_transform(*figure1)


@pytest.fixture(scope="session")
def fig12(figure1):
    return shorten(*figure1, [1, 2])


@pytest.fixture(scope="session")
def fig34(figure1):
    return shorten(*figure1, [3, 4])
