"""Concrete code builders.

Every builder certifies its output with the checkers in
:mod:`vmds.analysis` before returning and raises
:class:`~vmds.errors.ConstructionFailed` if certification fails.
"""

from __future__ import annotations

import itertools
import random
from typing import Iterable, Sequence

from vmds.algebra import FieldCtx, Matrix, Subspace, det, inverse, make_field, matmul, random_invertible, span
from vmds.analysis import is_optimal_access, is_optimal_bandwidth, is_optimal_update
from vmds.errors import BudgetExhausted, ConstructionFailed, EmptyKeepSet, NotMds, NotOptimalBandwidth
from vmds.model import RepairScheme, VectorMdsCode, is_mds

_FIGURE1_ROW2 = (
    ((1, 5), (0, 3)),
    ((1, 0), (2, 3)),
    ((2, 0), (0, 4)),
    ((5, 0), (0, 5)),
)


def _certify(code: VectorMdsCode, scheme: RepairScheme | None, what: str) -> None:
    mds = is_mds(code)
    if not mds:
        raise ConstructionFailed(f"{what}: output is not MDS, singular block {mds.witness}")
    if scheme is not None:
        report = is_optimal_bandwidth(code, scheme)
        if not report:
            raise ConstructionFailed(f"{what}: output is not optimal bandwidth: {report.violations[0]}")


def figure1_code() -> tuple[VectorMdsCode, RepairScheme]:
    """The (6,4,2) optimal-bandwidth MDS code over GF(7).

    Parity 1 stores ``a+b+c+d, w+x+y+z``; parity 2 stores
    ``a+5w+b+2c+5d, 3w+2b+3x+4y+5z`` for nodes (a,w), (b,x), (c,y), (d,z).
    """
    ctx = make_field(7)
    identity = Matrix.identity(ctx, 2)
    code = VectorMdsCode.from_blocks(ctx, [[identity] * 4, [Matrix.from_rows(ctx, c) for c in _FIGURE1_ROW2]])
    e1 = span(ctx, [(1, 0)])
    e2 = span(ctx, [(0, 1)])
    scheme = RepairScheme(
        (
            (e1, e1),
            (e2, e2),
            (span(ctx, [(1, 1)]),) * 2,
            (span(ctx, [(1, 4)]), span(ctx, [(1, 2)])),
        )
    )
    _certify(code, scheme, "figure1_code")
    return code, scheme


# --- diagonal family -----------------------------------------------------------


def _digit(x: int, j: int, r: int) -> int:
    """Base-r digit of coordinate x that node j (1-based) reads."""
    return (x // r ** (j - 1)) % r


def _tables_compatible(ctx: FieldCtx, tables: Sequence[Sequence[Sequence[int]]], r: int) -> bool:
    """Scalar MDS test for the newest node table against all earlier ones.

    ``tables[j][i][d]`` is the eigenvalue of C_{i+1, j+1} on coordinates whose
    digit j+1 equals d; the last row is all ones.
    """
    new = len(tables) - 1
    full = [list(t) + [[1] * r] for t in tables]
    # the new node's own r x r table must be invertible
    if det(Matrix(ctx, tuple(tuple(row) for row in full[new]), r)) == 0:
        return False
    for t in range(2, min(r, len(tables)) + 1):
        for others in itertools.combinations(range(new), t - 1):
            nodes = others + (new,)
            for rows in itertools.combinations(range(r), t):
                for digits in itertools.product(range(r), repeat=t):
                    mat = tuple(tuple(full[j][i][d] for j, d in zip(nodes, digits)) for i in rows)
                    if det(Matrix(ctx, mat, t)) == 0:
                        return False
    return True


def _search_tables(ctx: FieldCtx, r: int, t: int, budget: int) -> list[list[list[int]]]:
    tried = 0
    chosen: list[list[list[int]]] = []

    def place() -> bool:
        nonlocal tried
        if len(chosen) == t:
            return True
        for opt in itertools.product(ctx.nonzero(), repeat=(r - 1) * r):
            tried += 1
            if tried > budget:
                raise ConstructionFailed(f"eigenvalue search exceeded budget {budget}")
            table = [list(opt[i * r : (i + 1) * r]) for i in range(r - 1)]
            chosen.append(table)
            if _tables_compatible(ctx, chosen, r) and place():
                return True
            chosen.pop()
        return False

    if not place():
        raise ConstructionFailed(f"no eigenvalue table for r={r}, t={t} over {ctx}")
    return chosen


def diagonal_code(r: int, t: int, ctx: FieldCtx, budget: int = 200_000) -> tuple[VectorMdsCode, RepairScheme]:
    """Optimal-update, optimal-bandwidth code with k = t and l = r^t.

    Node j acts on coordinate x through its base-r digit ``d = digit_j(x)``:
    ``C_{i,j}`` is diagonal with entry ``lam[j][i][d]`` and the last row is
    the identity.  Node j is repaired from
    ``S_j = span(sum_d e_{x + d r^(j-1)} : digit_j(x) = 0)``, the all-ones
    vectors on the fibres where only digit j varies.  The eigenvalue tables
    come from a lexicographic sweep over nonzero field elements.
    """
    if r < 2 or t < 1:
        raise ValueError(f"need r >= 2 and t >= 1, got r={r}, t={t}")
    l = r**t
    if l > 256:
        raise ValueError(f"l = {r}^{t} = {l} exceeds 256")
    tables = _search_tables(ctx, r, t, budget)
    identity = Matrix.identity(ctx, l)
    grid = []
    for i in range(r - 1):
        grid.append(
            tuple(Matrix.diag(ctx, [tables[j - 1][i][_digit(x, j, r)] for x in range(l)]) for j in range(1, t + 1))
        )
    grid.append((identity,) * t)
    code = VectorMdsCode(ctx, t, r, l, tuple(grid))

    spaces = []
    for j in range(1, t + 1):
        step = r ** (j - 1)
        rows = []
        for x in range(l):
            if _digit(x, j, r) == 0:
                v = [0] * l
                for d in range(r):
                    v[x + d * step] = 1
                rows.append(tuple(v))
        spaces.append(Subspace(Matrix(ctx, tuple(rows), l)))
    scheme = RepairScheme.constant_scheme(spaces, r)
    _certify(code, scheme, "diagonal_code")
    if not is_optimal_update(code):  # pragma: no cover - diagonal by construction
        raise ConstructionFailed("diagonal_code: blocks are not diagonal")
    return code, scheme


# --- transformations -----------------------------------------------------------


def constant_scheme_transform(
    code: VectorMdsCode, scheme: RepairScheme, deleted: int | None = None
) -> tuple[VectorMdsCode, RepairScheme]:
    """Drop one systematic node and make the repair scheme constant.

    With ``A`` the input blocks and ``d`` the deleted node, the surviving
    nodes get ``C_{j,m} = A_{r,d} A_{j,d}^{-1} A_{j,m} A_{r,m}^{-1}`` and node
    m is repaired from ``S_{r,m}`` at every parity.
    """
    if code.k < 2:
        raise ValueError("need at least two systematic nodes")
    d = code.k if deleted is None else deleted
    if not 1 <= d <= code.k:
        raise ValueError(f"deleted node {d} outside 1..{code.k}")
    mds = is_mds(code)
    if not mds:
        raise NotMds(f"input is not MDS, singular block {mds.witness}")
    report = is_optimal_bandwidth(code, scheme)
    if not report:
        raise NotOptimalBandwidth(str(report.violations[0]))
    r = code.r
    left = [matmul(code.block(r, d), inverse(code.block(j, d))) for j in range(1, r + 1)]
    keep = [m for m in range(1, code.k + 1) if m != d]
    columns = []
    for m in keep:
        last_inv = inverse(code.block(r, m))
        columns.append(tuple(matmul(matmul(left[j - 1], code.block(j, m)), last_inv) for j in range(1, r + 1)))
    out = code.with_columns(columns)
    out_scheme = RepairScheme.constant_scheme([scheme.subspace(r, m) for m in keep], r)
    _certify(out, out_scheme, "constant_scheme_transform")
    if code.is_diagonal() and not out.is_diagonal():
        raise ConstructionFailed("constant_scheme_transform: diagonal input gave non-diagonal output")
    if is_optimal_access(scheme) and not is_optimal_access(out_scheme):
        raise ConstructionFailed("constant_scheme_transform: access-aligned input lost alignment")
    return out, out_scheme


def shorten(
    code: VectorMdsCode, scheme: RepairScheme | None, keep: Iterable[int]
) -> tuple[VectorMdsCode, RepairScheme | None]:
    """Restrict the code (and scheme) to the systematic nodes in ``keep``."""
    nodes = sorted(set(keep))
    if not nodes:
        raise EmptyKeepSet("keep set is empty")
    for m in nodes:
        if not 1 <= m <= code.k:
            raise ValueError(f"node {m} outside 1..{code.k}")
    out = code.with_columns([code.column(m) for m in nodes])
    out_scheme = scheme.restrict(nodes) if scheme is not None else None
    if is_mds(code) and not is_mds(out):
        raise ConstructionFailed("shorten: MDS property lost")
    if scheme is not None and is_optimal_bandwidth(code, scheme) and not is_optimal_bandwidth(out, out_scheme):
        raise ConstructionFailed("shorten: optimal bandwidth lost")
    return out, out_scheme


def random_mds_code(k: int, r: int, l: int, ctx: FieldCtx, seed: int, budget: int = 1000) -> VectorMdsCode:
    """Rejection-sample invertible blocks until the grid is MDS."""
    rng = random.Random(seed)
    for _ in range(budget):
        grid = tuple(tuple(random_invertible(ctx, l, rng) for _ in range(k)) for _ in range(r))
        code = VectorMdsCode(ctx, k, r, l, grid)
        if is_mds(code):
            return code
    raise BudgetExhausted(f"no MDS ({k + r},{k},{l}) code over {ctx} in {budget} draws")
