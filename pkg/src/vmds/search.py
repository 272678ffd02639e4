"""Certify the largest k reachable for tiny (l, r, q) by clique search.

A search candidate is one systematic node: a column ``(C_1, ..., C_{r-1}, I)``
together with its repairing subspaces.  Fixing the last block to ``I`` loses
nothing: rescaling node j by ``C_{r,j}`` keeps the repair scheme, diagonality
and basis alignment.  In that form node ``a`` is compatible with node ``b``
exactly when ``S_{i,a} C_{i,b} == S_{r,a}`` for every i (and vice versa) and
every block submatrix across the two columns is invertible.  A valid code is
then a clique of pairwise compatible candidates (plus the higher-order MDS
minors when r >= 3), and the certificate records the largest clique.

Cliques are grown per root candidate with purely local pruning, so every root
is an independent job and serial and parallel runs agree bit for bit.  The
witness is the lexicographically smallest clique of maximum size.
"""

from __future__ import annotations

import itertools
import math
import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from vmds.algebra import (
    FieldCtx,
    Matrix,
    Subspace,
    block,
    enumerate_matrices,
    enumerate_subspaces,
    gaussian_binomial,
    inverse,
    is_invertible,
    make_field,
    random_invertible,
    rank,
    row_space,
    subspace_apply,
    vstack,
)
from vmds.analysis import FAMILIES, bound_max_k, is_constant, is_optimal_access, is_optimal_bandwidth
from vmds.errors import InvariantViolation, NotPowerOfR, ParseError
from vmds.model import RepairScheme, VectorMdsCode, deserialize, is_mds, serialize

EXHAUSTIVE_MAX_LR = 16
EXHAUSTIVE_MAX_Q = 11
DEFAULT_BUDGET = 2_000_000

FIELD_NOTE = "result is specific to GF({q}); absence of a larger code here does not rule one out over other fields"


@dataclass(frozen=True)
class Certificate:
    l: int
    r: int
    p: int
    m: int
    family: str
    constant_scheme: bool
    achieved_k: int
    exhausted: bool
    status: str  # complete | budget-exhausted | randomized
    witness: str | None
    enumeration_count: int
    elapsed: float
    bound: int
    notes: tuple[str, ...] = ()

    @property
    def q(self) -> int:
        return self.p**self.m

    def witness_code(self) -> tuple[VectorMdsCode, RepairScheme] | None:
        if self.witness is None:
            return None
        code, scheme = deserialize(self.witness)
        assert scheme is not None
        return code, scheme


class _Budget(Exception):
    pass


def search_threads() -> int:
    """Worker count from ``VMDS_THREADS``: unset means 1, 0 means one per CPU."""
    raw = os.environ.get("VMDS_THREADS", "").strip()
    if not raw:
        return 1
    n = int(raw)
    if n < 0:
        raise ValueError(f"VMDS_THREADS must be >= 0, got {n}")
    return n or (os.cpu_count() or 1)


def family_bound(l: int, r: int, family: str, constant_scheme: bool) -> int:
    try:
        return bound_max_k(l, r, family, constant_scheme)
    except NotPowerOfR:
        return bound_max_k(l, r, "general", constant_scheme)


# --- candidate pools -----------------------------------------------------------


def _gl_order(l: int, q: int) -> int:
    return math.prod(q**l - q**i for i in range(l))


def _matrix_count(l: int, q: int, family: str) -> int:
    return (q - 1) ** l if family == "diagonal" else _gl_order(l, q)


def _space_count(l: int, r: int, q: int, family: str) -> int:
    if family == "access":
        return math.comb(l, l // r)
    return gaussian_binomial(l, l // r, q)


def _family_matrices(ctx: FieldCtx, l: int, family: str) -> Iterator[Matrix]:
    if family == "diagonal":
        for values in itertools.product(ctx.nonzero(), repeat=l):
            yield Matrix.diag(ctx, values)
    else:
        for mat in enumerate_matrices(ctx, l, l):
            if is_invertible(mat):
                yield mat


def _family_spaces(ctx: FieldCtx, l: int, r: int, family: str) -> Iterator[Subspace]:
    if family == "access":
        for coords in itertools.combinations(range(l), l // r):
            yield Subspace.coordinate(ctx, l, coords)
    else:
        yield from enumerate_subspaces(ctx, l, l // r)


def _random_matrix(ctx: FieldCtx, l: int, family: str, rng: random.Random) -> Matrix:
    if family == "diagonal":
        return Matrix.diag(ctx, [rng.randrange(1, ctx.q) for _ in range(l)])
    return random_invertible(ctx, l, rng)


def _random_space(ctx: FieldCtx, l: int, r: int, family: str, rng: random.Random) -> Subspace:
    if family == "access":
        return Subspace.coordinate(ctx, l, sorted(rng.sample(range(l), l // r)))
    while True:
        s = row_space(Matrix(ctx, tuple(tuple(rng.randrange(ctx.q) for _ in range(l)) for _ in range(l // r)), l))
        if s.dim == l // r:
            return s


def _in_family(s: Subspace, family: str) -> bool:
    return s.is_coordinate() if family == "access" else True


class _Images:
    """Memoised ``S C`` for subspace/matrix pairs."""

    def __init__(self) -> None:
        self._cache: dict[tuple[Subspace, Matrix], Subspace] = {}

    def __call__(self, s: Subspace, c: Matrix) -> Subspace:
        key = (s, c)
        out = self._cache.get(key)
        if out is None:
            out = self._cache[key] = subspace_apply(s, c)
        return out


def _full_rank(ctx: FieldCtx, images: Sequence[Subspace], l: int) -> bool:
    return rank(vstack([s.basis for s in images])) == l


@dataclass
class _Pool:
    ctx: FieldCtx
    l: int
    r: int
    columns: list[tuple[Matrix, ...]]  # each of length r, last block I
    candidates: list[tuple[int, tuple[Subspace, ...]]]  # (column index, scheme)
    adjacency: list[frozenset[int]] = field(default_factory=list)
    count: int = 0


def _schemes_fixed_by(
    column: Sequence[Matrix], spaces: Sequence[Subspace], constant: bool, family: str, img: _Images
) -> list[tuple[Subspace, ...]]:
    """Schemes (for some other node) that ``column`` leaves aligned: ``S_i C_i == S_r``."""
    r = len(column)
    out = []
    for t in spaces:
        if constant:
            if all(img(t, c) == t for c in column[:-1]):
                out.append((t,) * r)
        else:
            sigma = tuple(img(t, inverse(c)) for c in column[:-1]) + (t,)
            if all(_in_family(s, family) for s in sigma):
                out.append(sigma)
    return out


def _pair_mds(a: Sequence[Matrix], b: Sequence[Matrix]) -> bool:
    r = len(a)
    for i, j in itertools.combinations(range(r), 2):
        if j == r - 1:
            # [[A_i, B_i], [I, I]] is invertible iff A_i - B_i is
            if not is_invertible(a[i] - b[i]):
                return False
        elif not is_invertible(block([[a[i], b[i]], [a[j], b[j]]])):
            return False
    return True


def _higher_mds(columns: Sequence[Sequence[Matrix]], clique: Sequence[int], new: int) -> bool:
    """Block minors of order >= 3 that involve the newest column."""
    r = len(columns[new])
    for t in range(3, min(r, len(clique) + 1) + 1):
        for others in itertools.combinations(clique, t - 1):
            cols = [columns[c] for c in others] + [columns[new]]
            for rows in itertools.combinations(range(r), t):
                if not is_invertible(block([[col[i] for col in cols] for i in rows])):
                    return False
    return True


def _build_pool(
    ctx: FieldCtx,
    l: int,
    r: int,
    family: str,
    constant: bool,
    matrices: list[Matrix],
    spaces: list[Subspace],
    budget: int,
) -> tuple[_Pool, bool]:
    """Candidates and forward adjacency; the flag is False if the budget ran out."""
    identity = Matrix.identity(ctx, l)
    columns = [tuple(combo) + (identity,) for combo in itertools.product(matrices, repeat=r - 1)]
    img = _Images()
    pool = _Pool(ctx, l, r, columns, [])
    fixes: list[set[tuple[Subspace, ...]]] = []
    schemes = [(s,) * r for s in spaces] if constant else list(itertools.product(spaces, repeat=r))
    for ci, col in enumerate(columns):
        fixes.append(set(_schemes_fixed_by(col, spaces, constant, family, img)))
        for sigma in schemes:
            pool.count += 1
            if pool.count > budget:
                return pool, False
            if _full_rank(ctx, [img(s, c) for s, c in zip(sigma, col)], l):
                pool.candidates.append((ci, sigma))
    index = {cand: idx for idx, cand in enumerate(pool.candidates)}
    fixing: dict[tuple[Subspace, ...], list[int]] = {}
    for ci, sigmas in enumerate(fixes):
        for sigma in sigmas:
            fixing.setdefault(sigma, []).append(ci)
    pair_cache: dict[tuple[int, int], bool] = {}
    for a, (ca, sa) in enumerate(pool.candidates):
        nbrs = set()
        # b must fix a's scheme and a must fix b's scheme
        for cb in fixing.get(sa, ()):
            for sb in fixes[ca]:
                pool.count += 1
                if pool.count > budget:
                    return pool, False
                b = index.get((cb, sb))
                if b is None or b <= a:
                    continue
                key = (min(ca, cb), max(ca, cb))
                ok = pair_cache.get(key)
                if ok is None:
                    ok = pair_cache[key] = ca != cb and _pair_mds(columns[ca], columns[cb])
                if ok:
                    nbrs.add(b)
        pool.adjacency.append(frozenset(nbrs))
    return pool, True


# --- clique search -------------------------------------------------------------

_WORKER_POOL: _Pool | None = None


def _init_worker(pool: _Pool) -> None:
    global _WORKER_POOL
    _WORKER_POOL = pool


def _grow(pool: _Pool, root: int, cap: int) -> tuple[tuple[int, ...], int, bool]:
    """Largest clique whose smallest member is ``root``; (clique, count, budget hit)."""
    best: tuple[int, ...] = (root,)
    count = 0
    col_of = [c for c, _ in pool.candidates]
    need_higher = pool.r >= 3

    def expand(clique: tuple[int, ...], cands: list[int]) -> None:
        nonlocal best, count
        for pos, b in enumerate(cands):
            count += 1
            if count > cap:
                raise _Budget
            if len(clique) + len(cands) - pos <= len(best):
                return
            if need_higher and not _higher_mds(pool.columns, [col_of[c] for c in clique], col_of[b]):
                continue
            grown = clique + (b,)
            if len(grown) > len(best):
                best = grown
            nbrs = pool.adjacency[b]
            expand(grown, [c for c in cands[pos + 1 :] if c in nbrs])

    try:
        expand((root,), sorted(pool.adjacency[root]))
    except _Budget:
        return best, count, True
    return best, count, False


def _grow_worker(args: tuple[int, int]) -> tuple[tuple[int, ...], int, bool]:
    assert _WORKER_POOL is not None
    return _grow(_WORKER_POOL, *args)


def _max_clique(pool: _Pool, budget: int, workers: int) -> tuple[tuple[int, ...], bool]:
    """Aggregate per-root results in root order; roots after a budget overrun are ignored."""
    roots = range(len(pool.candidates))
    remaining = budget - pool.count
    if workers > 1 and len(pool.candidates) > 1:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(pool,)) as ex:
            results: Iterator = ex.map(_grow_worker, [(root, remaining) for root in roots], chunksize=16)
            return _aggregate(pool, results, remaining)
    return _aggregate(pool, (_grow(pool, root, remaining) for root in roots), remaining)


def _aggregate(pool: _Pool, results, remaining: int) -> tuple[tuple[int, ...], bool]:
    best: tuple[int, ...] = ()
    spent = 0
    for clique, count, hit in results:
        spent += count
        if hit or spent > remaining:
            pool.count += spent
            return best, False
        if len(clique) > len(best):
            best = clique
    pool.count += spent
    return best, True


# --- witnesses -----------------------------------------------------------------


def _witness(pool: _Pool, clique: Sequence[int]) -> tuple[VectorMdsCode, RepairScheme]:
    cols = [pool.columns[pool.candidates[c][0]] for c in clique]
    grid = tuple(tuple(col[i] for col in cols) for i in range(pool.r))
    code = VectorMdsCode(pool.ctx, len(cols), pool.r, pool.l, grid)
    scheme = RepairScheme(tuple(pool.candidates[c][1] for c in clique))
    return code, scheme


def verify_witness(code: VectorMdsCode, scheme: RepairScheme, family: str, constant_scheme: bool) -> list[str]:
    """Failed checks for a witness, empty when it passes the full suite."""
    failures = []
    if not is_mds(code):
        failures.append("mds")
    if not is_optimal_bandwidth(code, scheme):
        failures.append("bandwidth")
    if family == "diagonal" and not code.is_diagonal():
        failures.append("diagonal")
    if family == "access" and not is_optimal_access(scheme):
        failures.append("access")
    if constant_scheme and not is_constant(scheme):
        failures.append("constant")
    return failures


def _certified_witness(pool: _Pool, clique: Sequence[int], family: str, constant: bool) -> str:
    code, scheme = _witness(pool, clique)
    failures = verify_witness(code, scheme, family, constant)
    if failures:
        raise InvariantViolation(f"search witness fails {', '.join(failures)}")
    text = serialize(code, scheme)
    code2, scheme2 = deserialize(text)
    assert scheme2 is not None
    failures = verify_witness(code2, scheme2, family, constant)
    if failures:
        raise InvariantViolation(f"serialized witness fails {', '.join(failures)}")
    return text


# --- certification -------------------------------------------------------------


def certify_max_k(
    l: int,
    r: int,
    ctx: FieldCtx,
    family: str = "general",
    constant_scheme: bool = True,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    workers: int | None = None,
) -> Certificate:
    """Largest k with a valid code of the given family found over ``ctx``.

    Exhaustive when ``l*r <= 16``, ``q <= 11`` and the candidate pool fits in
    the budget; otherwise columns and subspaces are sampled and the
    certificate is never marked exhausted.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    if r < 2 or l < 2 or l % r:
        raise ValueError(f"need r >= 2, l >= 2 and r | l, got l={l}, r={r}")
    if budget < 1:
        raise ValueError(f"budget must be positive, got {budget}")
    workers = search_threads() if workers is None else max(1, workers)
    start = time.perf_counter()
    q = ctx.q
    bound = family_bound(l, r, family, constant_scheme)
    n_cols = _matrix_count(l, q, family) ** (r - 1)
    n_spaces = _space_count(l, r, q, family)
    n_schemes = n_spaces if constant_scheme else n_spaces**r
    notes = [FIELD_NOTE.format(q=q)]

    in_range = l * r <= EXHAUSTIVE_MAX_LR and q <= EXHAUSTIVE_MAX_Q
    if in_range and n_cols * n_schemes <= budget:
        matrices = list(_family_matrices(ctx, l, family))
        spaces = list(_family_spaces(ctx, l, r, family))
        randomized = False
    else:
        rng = random.Random(seed)
        per_axis = max(1, int(math.sqrt(budget / 16)))
        matrices = sorted(
            {_random_matrix(ctx, l, family, rng) for _ in range(min(per_axis, _matrix_count(l, q, family)))},
            key=lambda mat: mat.rows,
        )
        if n_spaces <= per_axis:
            spaces = list(_family_spaces(ctx, l, r, family))
        else:
            spaces = sorted(
                {_random_space(ctx, l, r, family, rng) for _ in range(per_axis)}, key=lambda s: s.basis.rows
            )
        randomized = True
        why = "outside the exhaustive range" if not in_range else "candidate pool exceeds the budget"
        notes.append(f"randomized: {why}; sampled {len(matrices)} matrices and {len(spaces)} subspaces (seed {seed})")

    pool, complete = _build_pool(ctx, l, r, family, constant_scheme, matrices, spaces, budget)
    if complete:
        clique, complete = _max_clique(pool, budget, workers)
    else:
        clique = (0,) if pool.candidates else ()
    achieved = len(clique)
    if achieved > bound:
        raise InvariantViolation(f"search found k={achieved} above the bound {bound} for {family}")
    witness = _certified_witness(pool, clique, family, constant_scheme) if clique else None

    if randomized:
        status, exhausted = "randomized", False
    elif not complete:
        status, exhausted = "budget-exhausted", False
        notes.append(f"budget of {budget} enumerations exhausted; achieved_k is a lower bound")
    else:
        status, exhausted = "complete", True
    return Certificate(
        l=l,
        r=r,
        p=ctx.p,
        m=ctx.m,
        family=family,
        constant_scheme=constant_scheme,
        achieved_k=achieved,
        exhausted=exhausted,
        status=status,
        witness=witness,
        enumeration_count=pool.count,
        elapsed=time.perf_counter() - start,
        bound=bound,
        notes=tuple(notes),
    )


# --- single-node extension -----------------------------------------------------


@dataclass(frozen=True)
class Extension:
    code: VectorMdsCode | None
    scheme: RepairScheme | None
    enumeration_count: int
    exhausted: bool

    @property
    def found(self) -> bool:
        return self.code is not None


def infer_family(code: VectorMdsCode, scheme: RepairScheme) -> str:
    if code.is_diagonal():
        return "diagonal"
    if is_optimal_access(scheme):
        return "access"
    return "general"


def _aligned(spaces: Sequence[Subspace], column: Sequence[Matrix], img: _Images) -> bool:
    """``S_i C_i`` is the same subspace for every parity i."""
    first = img(spaces[0], column[0])
    return all(img(s, c) == first for s, c in zip(spaces[1:], column[1:]))


def _new_schemes(code: VectorMdsCode, family: str, constant: bool, img: _Images) -> Iterator[tuple[Subspace, ...]]:
    """Schemes for an extra node that every existing column leaves aligned."""
    ctx, l, r = code.ctx, code.l, code.r
    existing = [code.column(m) for m in range(1, code.k + 1)]
    for t in _family_spaces(ctx, l, r, family):
        if constant:
            options: Iterator[tuple[Subspace, ...]] = iter([(t,) * r])
        elif existing:
            first = existing[0]
            target = img(t, first[-1])
            options = iter([tuple(img(target, inverse(c)) for c in first[:-1]) + (t,)])
        else:
            options = (rest + (t,) for rest in itertools.product(_family_spaces(ctx, l, r, family), repeat=r - 1))
        for sigma in options:
            if all(_in_family(s, family) for s in sigma) and all(_aligned(sigma, col, img) for col in existing):
                yield sigma


def search_extension(
    code: VectorMdsCode,
    scheme: RepairScheme,
    budget: int = 200_000,
    family: str | None = None,
    constant: bool | None = None,
) -> Extension:
    """First extra node, in lexicographic order, keeping every property of the input."""
    family = infer_family(code, scheme) if family is None else family
    constant = is_constant(scheme) if constant is None else constant
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    ctx, l, r = code.ctx, code.l, code.r
    img = _Images()
    count = 0
    schemes = list(_new_schemes(code, family, constant, img))
    count += len(schemes)
    identity = Matrix.identity(ctx, l)

    def columns() -> Iterator[tuple[Matrix, ...]]:
        if r == 2:
            for mat in _family_matrices(ctx, l, family):
                yield (mat, identity)
        else:
            mats = list(_family_matrices(ctx, l, family))
            for combo in itertools.product(mats, repeat=r - 1):
                yield tuple(combo) + (identity,)

    if schemes:
        for col in columns():
            count += 1
            if count > budget:
                return Extension(None, None, count, False)
            if not all(_aligned(scheme.for_node(m), col, img) for m in range(1, code.k + 1)):
                continue
            own = [sigma for sigma in schemes if _full_rank(ctx, [img(s, c) for s, c in zip(sigma, col)], l)]
            count += len(schemes)
            if not own:
                continue
            grown = code.with_columns([code.column(m) for m in range(1, code.k + 1)] + [col])
            if not is_mds(grown):
                continue
            new_scheme = RepairScheme(scheme.subspaces + (own[0],))
            if verify_witness(grown, new_scheme, family, constant):
                raise InvariantViolation("extension candidate failed re-verification")
            return Extension(grown, new_scheme, count, True)
    return Extension(None, None, count, True)


def extend_code(
    code: VectorMdsCode,
    scheme: RepairScheme,
    budget: int = 200_000,
    family: str | None = None,
    constant: bool | None = None,
) -> tuple[VectorMdsCode, RepairScheme] | None:
    ext = search_extension(code, scheme, budget, family, constant)
    return (ext.code, ext.scheme) if ext.found else None


def empty_code(ctx: FieldCtx, r: int, l: int) -> tuple[VectorMdsCode, RepairScheme]:
    """The k = 0 code, a starting point for :func:`extend_code`."""
    return VectorMdsCode(ctx, 0, r, l, tuple(() for _ in range(r))), RepairScheme(())


# --- certificate documents -----------------------------------------------------


def render_certificate(cert: Certificate) -> str:
    lines = [
        "certificate v1",
        f"params {cert.l} {cert.r} {cert.p} {cert.m}",
        f"family {cert.family}",
        f"constant {'yes' if cert.constant_scheme else 'no'}",
        f"achieved_k {cert.achieved_k}",
        f"bound {cert.bound}",
        f"exhausted {'yes' if cert.exhausted else 'no'}",
        f"status {cert.status}",
        f"enumeration_count {cert.enumeration_count}",
        f"elapsed {cert.elapsed:.3f}",
    ]
    lines += [f"note {n}" for n in cert.notes]
    lines.append("end")
    text = "\n".join(lines) + "\n"
    return text + (cert.witness or "")


def parse_certificate(text: str) -> Certificate:
    lines = text.splitlines(keepends=True)
    if not lines or lines[0].strip() != "certificate v1":
        raise ParseError("expected 'certificate v1' header", 1)
    fields: dict[str, str] = {}
    notes: list[str] = []
    for num, raw in enumerate(lines[1:], 2):
        line = raw.strip()
        if line == "end":
            rest = "".join(lines[num:])
            break
        key, _, value = line.partition(" ")
        if key == "note":
            notes.append(value)
        elif key in fields:
            raise ParseError(f"duplicate field {key!r}", num)
        else:
            fields[key] = value
    else:
        raise ParseError("certificate header is not terminated by 'end'", len(lines))

    def get(key: str) -> str:
        if key not in fields:
            raise ParseError(f"missing field {key!r}", 1)
        return fields[key]

    def flag(key: str) -> bool:
        value = get(key)
        if value not in ("yes", "no"):
            raise ParseError(f"{key} must be yes or no, got {value!r}", 1)
        return value == "yes"

    try:
        l, r, p, m = (int(x) for x in get("params").split())
        cert = Certificate(
            l=l,
            r=r,
            p=p,
            m=m,
            family=get("family"),
            constant_scheme=flag("constant"),
            achieved_k=int(get("achieved_k")),
            exhausted=flag("exhausted"),
            status=get("status"),
            witness=rest if rest.strip() else None,
            enumeration_count=int(get("enumeration_count")),
            elapsed=float(get("elapsed")),
            bound=int(get("bound")),
            notes=tuple(notes),
        )
    except ValueError as exc:
        raise ParseError(f"malformed certificate field: {exc}", 1) from None
    if cert.witness is not None:
        code, _ = deserialize(cert.witness)
        if code.k != cert.achieved_k or code.ctx != make_field(p, m):
            raise ParseError("witness does not match the certificate header", 1)
    return cert


__all__ = [
    "Certificate",
    "Extension",
    "certify_max_k",
    "empty_code",
    "extend_code",
    "family_bound",
    "infer_family",
    "parse_certificate",
    "render_certificate",
    "search_extension",
    "search_threads",
    "verify_witness",
]
