"""Systematic vector MDS codes: data model, encoding, decoding, documents.

Node numbering is 1-based throughout: systematic nodes are ``1..k`` and
parity node ``k + i`` stores ``a_{k+i} = sum_j C[i][j] a_j``.  Vector
coordinates are 0-based.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from vmds.algebra import (
    FieldCtx,
    Matrix,
    Subspace,
    Vector,
    block,
    det,
    inverse,
    is_invertible,
    make_field,
    matmul,
    rank,
    row_space,
)
from vmds.errors import (
    FieldMismatch,
    InvariantViolation,
    NotMds,
    ParseError,
    ShapeMismatch,
    Singular,
    TooManyErasures,
    VmdsError,
)

FORMAT_VERSION = "v1"


@dataclass(frozen=True)
class VectorMdsCode:
    """The r x k grid of l x l encoding blocks; ``grid[i-1][j-1]`` is C_{i,j}."""

    ctx: FieldCtx
    k: int
    r: int
    l: int
    grid: tuple[tuple[Matrix, ...], ...]

    def __post_init__(self) -> None:
        if self.r < 2:
            raise InvariantViolation(f"need r >= 2 parities, got r={self.r}")
        if self.l < 2:
            raise InvariantViolation(f"need node capacity l >= 2, got l={self.l}")
        if self.l % self.r:
            raise InvariantViolation(f"r={self.r} does not divide l={self.l}")
        if self.k < 0:
            raise InvariantViolation(f"negative k={self.k}")
        if len(self.grid) != self.r or any(len(row) != self.k for row in self.grid):
            raise InvariantViolation(f"grid is not {self.r} x {self.k}")
        for i, row in enumerate(self.grid, 1):
            for j, c in enumerate(row, 1):
                if c.ctx != self.ctx:
                    raise FieldMismatch(f"block C_{i},{j} is over {c.ctx}, code is over {self.ctx}")
                if c.shape != (self.l, self.l):
                    raise InvariantViolation(f"block has shape {c.shape}, expected {(self.l, self.l)}", (i, j))
                if not is_invertible(c):
                    raise InvariantViolation("encoding block is singular", (i, j))

    @classmethod
    def from_blocks(cls, ctx: FieldCtx, blocks: Sequence[Sequence[Matrix | Sequence[Sequence[int]]]]) -> VectorMdsCode:
        grid = tuple(tuple(c if isinstance(c, Matrix) else Matrix.from_rows(ctx, c) for c in row) for row in blocks)
        r = len(grid)
        k = len(grid[0]) if grid else 0
        l = grid[0][0].nrows if k else 0
        return cls(ctx, k, r, l, grid)

    @property
    def n(self) -> int:
        return self.k + self.r

    def block(self, i: int, j: int) -> Matrix:
        return self.grid[i - 1][j - 1]

    def column(self, j: int) -> tuple[Matrix, ...]:
        return tuple(row[j - 1] for row in self.grid)

    def with_columns(self, columns: Sequence[Sequence[Matrix]]) -> VectorMdsCode:
        """Code with the given systematic columns (each a per-parity tuple)."""
        grid = tuple(tuple(col[i] for col in columns) for i in range(self.r))
        return VectorMdsCode(self.ctx, len(columns), self.r, self.l, grid)

    def is_normalized(self) -> bool:
        return all(c.is_identity() for c in self.grid[-1])

    def is_diagonal(self) -> bool:
        return all(c.is_diagonal() for row in self.grid for c in row)


@dataclass(frozen=True)
class RepairScheme:
    """``subspaces[m-1][i-1]`` is S_{i,m}, the subspace parity k+i projects on to repair node m."""

    subspaces: tuple[tuple[Subspace, ...], ...]

    def __post_init__(self) -> None:
        if not self.subspaces:
            return
        r = len(self.subspaces[0])
        ambient = self.subspaces[0][0].ambient
        if ambient % r:
            raise InvariantViolation(f"r={r} does not divide l={ambient}")
        for m, spaces in enumerate(self.subspaces, 1):
            if len(spaces) != r:
                raise InvariantViolation(f"node {m} has {len(spaces)} subspaces, expected {r}")
            for i, s in enumerate(spaces, 1):
                if s.ambient != ambient or s.dim != ambient // r:
                    raise InvariantViolation(
                        f"repairing subspace has dim {s.dim} in ambient {s.ambient}, expected dim {ambient // r}",
                        ("S", i, m),
                    )

    @classmethod
    def constant_scheme(cls, spaces: Sequence[Subspace], r: int) -> RepairScheme:
        return cls(tuple((s,) * r for s in spaces))

    @property
    def k(self) -> int:
        return len(self.subspaces)

    @property
    def constant(self) -> bool:
        return all(len(set(spaces)) == 1 for spaces in self.subspaces)

    def subspace(self, i: int, m: int) -> Subspace:
        return self.subspaces[m - 1][i - 1]

    def for_node(self, m: int) -> tuple[Subspace, ...]:
        return self.subspaces[m - 1]

    def restrict(self, keep: Sequence[int]) -> RepairScheme:
        return RepairScheme(tuple(self.subspaces[m - 1] for m in keep))


@dataclass(frozen=True)
class DataState:
    """Contents of all n nodes.  Build with :func:`encode`."""

    systematic: tuple[Vector, ...]
    parity: tuple[Vector, ...]

    @property
    def nodes(self) -> tuple[Vector, ...]:
        return self.systematic + self.parity

    def node(self, idx: int) -> Vector:
        return self.nodes[idx - 1]

    def survivors(self, erased: Iterable[int]) -> dict[int, Vector]:
        gone = set(erased)
        return {idx: vec for idx, vec in enumerate(self.nodes, 1) if idx not in gone}


# --- encoding / decoding -------------------------------------------------------


def _check_vector(ctx: FieldCtx, vec: Sequence[int], l: int) -> Vector:
    if len(vec) != l:
        raise ShapeMismatch(f"node vector of length {len(vec)}, expected {l}")
    for x in vec:
        if not isinstance(x, int) or not 0 <= x < ctx.q:
            raise FieldMismatch(f"{x!r} is not an element of {ctx}")
    return tuple(vec)


def _vec_add(ctx: FieldCtx, u: Sequence[int], v: Sequence[int]) -> Vector:
    return tuple(ctx.add(a, b) for a, b in zip(u, v))


def _vec_sub(ctx: FieldCtx, u: Sequence[int], v: Sequence[int]) -> Vector:
    return tuple(ctx.sub(a, b) for a, b in zip(u, v))


def encode(code: VectorMdsCode, systematic: Sequence[Sequence[int]]) -> DataState:
    if len(systematic) != code.k:
        raise ShapeMismatch(f"expected {code.k} systematic vectors, got {len(systematic)}")
    ctx = code.ctx
    data = tuple(_check_vector(ctx, a, code.l) for a in systematic)
    parity = []
    for i in range(1, code.r + 1):
        acc: Vector = (0,) * code.l
        for j, a in enumerate(data, 1):
            acc = _vec_add(ctx, acc, code.block(i, j).apply(a))
        parity.append(acc)
    return DataState(data, tuple(parity))


@dataclass(frozen=True)
class MdsCheck:
    ok: bool
    witness: tuple[tuple[int, ...], tuple[int, ...]] | None = None

    def __bool__(self) -> bool:
        return self.ok


def block_submatrix(code: VectorMdsCode, rows: Sequence[int], cols: Sequence[int]) -> Matrix:
    return block([[code.block(i, j) for j in cols] for i in rows])


def _diag_block_invertible(code: VectorMdsCode, rows: Sequence[int], cols: Sequence[int]) -> bool:
    # A block matrix of diagonal blocks is permutation-similar to the direct
    # sum over coordinates of the t x t scalar matrices.
    diags = {(i, j): code.block(i, j).diagonal() for i in rows for j in cols}
    for x in range(code.l):
        scalar = Matrix(code.ctx, tuple(tuple(diags[i, j][x] for j in cols) for i in rows), len(cols))
        if det(scalar) == 0:
            return False
    return True


def is_mds(code: VectorMdsCode, method: str = "auto") -> MdsCheck:
    """Every t x t block submatrix, t <= r, is invertible.

    On failure the witness is the first offending ``(rows, cols)`` pair in
    order of increasing t.  ``method="generic"`` forces the rank test even
    for diagonal codes.
    """
    diagonal = method == "auto" and code.is_diagonal()
    for t in range(1, min(code.r, code.k) + 1):
        for rows in itertools.combinations(range(1, code.r + 1), t):
            for cols in itertools.combinations(range(1, code.k + 1), t):
                if diagonal:
                    ok = _diag_block_invertible(code, rows, cols)
                else:
                    ok = rank(block_submatrix(code, rows, cols)) == t * code.l
                if not ok:
                    return MdsCheck(False, (rows, cols))
    return MdsCheck(True)


def decode_from_any_k(code: VectorMdsCode, survivors: Mapping[int, Sequence[int]]) -> DataState:
    """Rebuild every node from the surviving ones (node id -> stored vector)."""
    ctx, k, l = code.ctx, code.k, code.l
    for idx in survivors:
        if not 1 <= idx <= code.n:
            raise ShapeMismatch(f"node id {idx} outside 1..{code.n}")
    erased = [idx for idx in range(1, code.n + 1) if idx not in survivors]
    if len(erased) > code.r:
        raise TooManyErasures(f"{len(erased)} erasures exceed r={code.r}")
    known = {idx: _check_vector(ctx, vec, l) for idx, vec in survivors.items()}
    lost_sys = [j for j in erased if j <= k]
    if lost_sys:
        parities = [idx - k for idx in sorted(known) if idx > k][: len(lost_sys)]
        rhs: list[int] = []
        for i in parities:
            acc = known[k + i]
            for j in range(1, k + 1):
                if j in known:
                    acc = _vec_sub(ctx, acc, code.block(i, j).apply(known[j]))
            rhs.extend(acc)
        system = block_submatrix(code, parities, lost_sys)
        try:
            solution = inverse(system).apply(rhs)
        except Singular as exc:
            raise NotMds(f"block submatrix rows {parities} cols {lost_sys} is singular") from exc
        for pos, j in enumerate(lost_sys):
            known[j] = tuple(solution[pos * l : (pos + 1) * l])
    return encode(code, [known[j] for j in range(1, k + 1)])


def normalize_last_row(code: VectorMdsCode) -> VectorMdsCode:
    """C'_{i,j} = C_{i,j} C_{r,j}^{-1}, so the last parity row becomes identities."""
    columns = []
    for j in range(1, code.k + 1):
        col = code.column(j)
        last_inv = inverse(col[-1])
        columns.append(tuple(matmul(c, last_inv) for c in col))
    return code.with_columns(columns)


# --- documents -----------------------------------------------------------------


def serialize(code: VectorMdsCode, scheme: RepairScheme | None = None) -> str:
    lines = [
        f"vmds {FORMAT_VERSION}",
        f"field {code.ctx.p} {code.ctx.m}",
        f"params {code.k} {code.r} {code.l}",
    ]
    for i in range(1, code.r + 1):
        for j in range(1, code.k + 1):
            lines.append(f"C {i} {j}")
            lines.extend(" ".join(map(str, row)) for row in code.block(i, j).rows)
    if scheme is not None:
        lines.append("scheme")
        for m in range(1, scheme.k + 1):
            for i in range(1, code.r + 1):
                lines.append(f"S {i} {m}")
                lines.extend(" ".join(map(str, row)) for row in scheme.subspace(i, m).basis.rows)
    return "\n".join(lines) + "\n"


class _Lines:
    def __init__(self, text: str) -> None:
        stripped = ((num, line.split("#", 1)[0].strip()) for num, line in enumerate(text.splitlines(), 1))
        self.items = [(num, line) for num, line in stripped if line]
        self.pos = 0

    def peek(self) -> tuple[int, str] | None:
        return self.items[self.pos] if self.pos < len(self.items) else None

    def next(self, what: str) -> tuple[int, str]:
        item = self.peek()
        if item is None:
            last = self.items[-1][0] if self.items else 0
            raise ParseError(f"unexpected end of document, expected {what}", last + 1)
        self.pos += 1
        return item


def _ints(num: int, line: str, count: int | None = None) -> list[int]:
    try:
        values = [int(tok) for tok in line.split()]
    except ValueError:
        raise ParseError(f"expected integers, got {line!r}", num) from None
    if count is not None and len(values) != count:
        raise ParseError(f"expected {count} integers, got {len(values)}", num)
    return values


def _keyword(num: int, line: str, key: str, count: int) -> list[int]:
    parts = line.split()
    if not parts or parts[0] != key:
        raise ParseError(f"expected '{key}', got {line!r}", num)
    return _ints(num, " ".join(parts[1:]), count)


def _read_rows(lines: _Lines, ctx: FieldCtx, nrows: int, ncols: int) -> Matrix:
    rows = []
    for _ in range(nrows):
        num, line = lines.next("matrix row")
        row = _ints(num, line, ncols)
        for x in row:
            if not 0 <= x < ctx.q:
                raise ParseError(f"entry {x} is not an element of {ctx}", num)
        rows.append(tuple(row))
    return Matrix(ctx, tuple(rows), ncols)


def parse_document(lines: _Lines) -> tuple[VectorMdsCode, RepairScheme | None]:
    num, header = lines.next("header")
    parts = header.split()
    if len(parts) != 2 or parts[0] != "vmds":
        raise ParseError(f"expected 'vmds {FORMAT_VERSION}' header, got {header!r}", num)
    if parts[1] != FORMAT_VERSION:
        raise ParseError(f"unsupported document version {parts[1]!r}", num)
    num, line = lines.next("field line")
    p, m = _keyword(num, line, "field", 2)
    try:
        ctx = make_field(p, m)
    except VmdsError as exc:
        raise ParseError(str(exc), num) from None
    num, line = lines.next("params line")
    k, r, l = _keyword(num, line, "params", 3)
    if r < 2 or l < 2 or k < 0:
        raise InvariantViolation(f"invalid parameters k={k} r={r} l={l}", ("params", num))
    if l % r:
        raise InvariantViolation(f"r={r} does not divide l={l}", ("params", num))
    blocks: dict[tuple[int, int], Matrix] = {}
    while (item := lines.peek()) is not None and item[1].split()[0] == "C":
        num, line = lines.next("block")
        i, j = _keyword(num, line, "C", 2)
        if not (1 <= i <= r and 1 <= j <= k) or (i, j) in blocks:
            raise ParseError(f"unexpected block C {i} {j}", num)
        blocks[i, j] = _read_rows(lines, ctx, l, l)
    missing = [(i, j) for i in range(1, r + 1) for j in range(1, k + 1) if (i, j) not in blocks]
    if missing:
        raise ParseError(f"missing block C {missing[0][0]} {missing[0][1]}", lines.peek()[0] if lines.peek() else None)
    for (i, j), c in sorted(blocks.items()):
        if not is_invertible(c):
            raise InvariantViolation("encoding block is singular", (i, j))
    code = VectorMdsCode(ctx, k, r, l, tuple(tuple(blocks[i, j] for j in range(1, k + 1)) for i in range(1, r + 1)))
    scheme = None
    item = lines.peek()
    if item is not None and item[1] == "scheme":
        lines.next("scheme")
        spaces: dict[tuple[int, int], Subspace] = {}
        while (item := lines.peek()) is not None and item[1].split()[0] == "S":
            num, line = lines.next("scheme block")
            i, mm = _keyword(num, line, "S", 2)
            if not (1 <= i <= r and 1 <= mm <= k) or (i, mm) in spaces:
                raise ParseError(f"unexpected block S {i} {mm}", num)
            s = row_space(_read_rows(lines, ctx, l // r, l))
            if s.dim != l // r:
                raise InvariantViolation(f"repairing subspace has rank {s.dim} < {l // r}", ("S", i, mm))
            spaces[i, mm] = s
        missing = [(i, mm) for mm in range(1, k + 1) for i in range(1, r + 1) if (i, mm) not in spaces]
        if missing:
            raise ParseError(f"missing block S {missing[0][0]} {missing[0][1]}")
        scheme = RepairScheme(tuple(tuple(spaces[i, mm] for i in range(1, r + 1)) for mm in range(1, k + 1)))
    return code, scheme


def deserialize(text: str) -> tuple[VectorMdsCode, RepairScheme | None]:
    lines = _Lines(text)
    code, scheme = parse_document(lines)
    item = lines.peek()
    if item is not None:
        raise ParseError(f"trailing content {item[1]!r}", item[0])
    return code, scheme
