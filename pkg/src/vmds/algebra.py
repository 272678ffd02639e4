"""Exact arithmetic over GF(p^m) and dense linear algebra over it.

Field elements are plain ints in ``[0, q)``.  For ``m > 1`` an element packs
the base-p coefficient vector of its polynomial residue little-endian, so
``x`` in GF(4) is ``2`` and ``x + 1`` is ``3``.

Matrices are immutable; a :class:`Subspace` is a row space held by its
canonical reduced row echelon basis, which makes equality of subspaces
literal equality of bases.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from vmds.errors import DivideByZero, FieldMismatch, NotPrime, OrderTooLarge, ShapeMismatch, Singular

MAX_ORDER = 1 << 16

Vector = tuple[int, ...]


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


# --- polynomials over GF(p), little-endian coefficient lists ---------------


def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_rem(a: Sequence[int], monic: Sequence[int], p: int) -> list[int]:
    out = _trim(list(a))
    deg = len(monic) - 1
    while len(out) - 1 >= deg:
        coef = out[-1]
        shift = len(out) - 1 - deg
        for i, c in enumerate(monic):
            out[shift + i] = (out[shift + i] - coef * c) % p
        _trim(out)
    return out


def _monic_polys(p: int, degree: int) -> Iterator[tuple[int, ...]]:
    """Monic polynomials of the given degree, ordered by their packed value."""
    for low in range(p**degree):
        coeffs = [(low // p**i) % p for i in range(degree)]
        yield tuple(coeffs) + (1,)


def is_irreducible(poly: Sequence[int], p: int) -> bool:
    """Trial division by every monic polynomial of degree 1..deg/2."""
    degree = len(poly) - 1
    if degree < 1:
        return False
    for d in range(1, degree // 2 + 1):
        for g in _monic_polys(p, d):
            if not _poly_rem(poly, g, p):
                return False
    return True


# --- field -----------------------------------------------------------------


@dataclass(frozen=True)
class FieldCtx:
    """GF(p^m).  Build through :func:`make_field`."""

    p: int
    m: int
    modulus: tuple[int, ...] | None = None

    @property
    def q(self) -> int:
        return self.p**self.m

    @property
    def is_prime_field(self) -> bool:
        return self.m == 1

    def __str__(self) -> str:
        return f"GF({self.p})" if self.m == 1 else f"GF({self.p}^{self.m})"

    def __repr__(self) -> str:
        return f"FieldCtx({self})"

    def elements(self) -> range:
        return range(self.q)

    def nonzero(self) -> range:
        return range(1, self.q)

    def check(self, a: int) -> int:
        if not isinstance(a, int) or not 0 <= a < self.q:
            raise ValueError(f"{a!r} is not an element of {self}")
        return a

    # digit packing for m > 1
    def digits(self, a: int) -> list[int]:
        p = self.p
        return [(a // p**i) % p for i in range(self.m)]

    def from_digits(self, digits: Sequence[int]) -> int:
        return sum(d * self.p**i for i, d in enumerate(digits))

    def add(self, a: int, b: int) -> int:
        if self.m == 1:
            return (a + b) % self.p
        p = self.p
        return self.from_digits([(x + y) % p for x, y in zip(self.digits(a), self.digits(b))])

    def neg(self, a: int) -> int:
        if self.m == 1:
            return -a % self.p
        return self.from_digits([-x % self.p for x in self.digits(a)])

    def sub(self, a: int, b: int) -> int:
        if self.m == 1:
            return (a - b) % self.p
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if self.m == 1:
            return a * b % self.p
        if a == 0 or b == 0:
            return 0
        p = self.p
        da, db = self.digits(a), self.digits(b)
        prod = [0] * (2 * self.m - 1)
        for i, x in enumerate(da):
            if x:
                for j, y in enumerate(db):
                    prod[i + j] = (prod[i + j] + x * y) % p
        assert self.modulus is not None
        rem = _poly_rem(prod, self.modulus, p)
        return self.from_digits(rem + [0] * (self.m - len(rem)))

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            return self.pow(self.inv(a), -e)
        if self.m == 1:
            return pow(a, e, self.p)
        result, base = 1, a
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def inv(self, a: int) -> int:
        if a == 0:
            raise DivideByZero(f"0 has no inverse in {self}")
        return self.pow(a, self.q - 2)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    # row kernels used by the elimination routines
    def axpy(self, dst: Sequence[int], f: int, src: Sequence[int]) -> list[int]:
        """``dst - f * src`` elementwise."""
        if self.m == 1:
            p = self.p
            return [(d - f * s) % p for d, s in zip(dst, src)]
        return [self.sub(d, self.mul(f, s)) for d, s in zip(dst, src)]

    def scale(self, row: Sequence[int], f: int) -> list[int]:
        if self.m == 1:
            p = self.p
            return [x * f % p for x in row]
        return [self.mul(x, f) for x in row]

    def dot(self, u: Sequence[int], v: Sequence[int]) -> int:
        if self.m == 1:
            return sum(x * y for x, y in zip(u, v)) % self.p
        acc = 0
        for x, y in zip(u, v):
            if x and y:
                acc = self.add(acc, self.mul(x, y))
        return acc


def make_field(p: int, m: int = 1) -> FieldCtx:
    """GF(p^m) with the lexicographically smallest monic irreducible modulus."""
    if not is_prime(p):
        raise NotPrime(p)
    if m < 1:
        raise ValueError(f"extension degree must be >= 1, got {m}")
    if p**m > MAX_ORDER:
        raise OrderTooLarge(f"field order {p}^{m} exceeds {MAX_ORDER}")
    if m == 1:
        return FieldCtx(p, 1, None)
    for poly in _monic_polys(p, m):
        if poly[0] != 0 and is_irreducible(poly, p):
            return FieldCtx(p, m, poly)
    raise AssertionError(f"no irreducible polynomial of degree {m} over GF({p})")  # pragma: no cover


# --- matrices ----------------------------------------------------------------


@dataclass(frozen=True)
class Matrix:
    ctx: FieldCtx
    rows: tuple[Vector, ...]
    ncols: int

    @classmethod
    def from_rows(cls, ctx: FieldCtx, rows: Iterable[Iterable[int]], ncols: int | None = None) -> Matrix:
        data = tuple(tuple(int(x) for x in row) for row in rows)
        if ncols is None:
            if not data:
                raise ShapeMismatch("column count needed for an empty matrix")
            ncols = len(data[0])
        for row in data:
            if len(row) != ncols:
                raise ShapeMismatch(f"ragged row of length {len(row)}, expected {ncols}")
            for x in row:
                ctx.check(x)
        return cls(ctx, data, ncols)

    @classmethod
    def identity(cls, ctx: FieldCtx, n: int) -> Matrix:
        return cls(ctx, tuple(tuple(int(i == j) for j in range(n)) for i in range(n)), n)

    @classmethod
    def zeros(cls, ctx: FieldCtx, nrows: int, ncols: int) -> Matrix:
        return cls(ctx, tuple((0,) * ncols for _ in range(nrows)), ncols)

    @classmethod
    def diag(cls, ctx: FieldCtx, values: Sequence[int]) -> Matrix:
        n = len(values)
        return cls.from_rows(ctx, [[values[i] if i == j else 0 for j in range(n)] for i in range(n)], n)

    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), self.ncols)

    @property
    def entries(self) -> tuple[int, ...]:
        return tuple(x for row in self.rows for x in row)

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return self.rows[i][j]

    def __matmul__(self, other: Matrix) -> Matrix:
        return matmul(self, other)

    def __add__(self, other: Matrix) -> Matrix:
        _same_shape(self, other)
        add = self.ctx.add
        return Matrix(
            self.ctx, tuple(tuple(add(a, b) for a, b in zip(r, s)) for r, s in zip(self.rows, other.rows)), self.ncols
        )

    def __sub__(self, other: Matrix) -> Matrix:
        _same_shape(self, other)
        sub = self.ctx.sub
        return Matrix(
            self.ctx, tuple(tuple(sub(a, b) for a, b in zip(r, s)) for r, s in zip(self.rows, other.rows)), self.ncols
        )

    @property
    def T(self) -> Matrix:
        return Matrix(
            self.ctx, tuple(zip(*self.rows)) if self.rows else tuple(() for _ in range(self.ncols)), self.nrows
        )

    def is_square(self) -> bool:
        return self.nrows == self.ncols

    def is_diagonal(self) -> bool:
        return self.is_square() and all(x == 0 for i, row in enumerate(self.rows) for j, x in enumerate(row) if i != j)

    def is_identity(self) -> bool:
        return self.is_square() and all(x == int(i == j) for i, row in enumerate(self.rows) for j, x in enumerate(row))

    def diagonal(self) -> Vector:
        return tuple(self.rows[i][i] for i in range(min(self.shape)))

    def nonzero_columns(self) -> int:
        return sum(1 for j in range(self.ncols) if any(row[j] for row in self.rows))

    def apply(self, v: Sequence[int]) -> Vector:
        """Matrix-vector product ``M v`` for a column vector ``v``."""
        if len(v) != self.ncols:
            raise ShapeMismatch(f"vector of length {len(v)} against {self.shape} matrix")
        dot = self.ctx.dot
        return tuple(dot(row, v) for row in self.rows)

    def tolist(self) -> list[list[int]]:
        return [list(row) for row in self.rows]


def _same_shape(a: Matrix, b: Matrix) -> None:
    if a.ctx != b.ctx:
        raise FieldMismatch(f"{a.ctx} vs {b.ctx}")
    if a.shape != b.shape:
        raise ShapeMismatch(f"{a.shape} vs {b.shape}")


def matmul(a: Matrix, b: Matrix) -> Matrix:
    if a.ctx != b.ctx:
        raise FieldMismatch(f"{a.ctx} vs {b.ctx}")
    if a.ncols != b.nrows:
        raise ShapeMismatch(f"cannot multiply {a.shape} by {b.shape}")
    ctx = a.ctx
    cols = list(zip(*b.rows)) if b.rows else [()] * b.ncols
    if ctx.is_prime_field:
        p = ctx.p
        rows = tuple(tuple(sum(x * y for x, y in zip(row, col)) % p for col in cols) for row in a.rows)
    else:
        rows = tuple(tuple(ctx.dot(row, col) for col in cols) for row in a.rows)
    return Matrix(ctx, rows, b.ncols)


def vstack(mats: Sequence[Matrix]) -> Matrix:
    if not mats:
        raise ShapeMismatch("vstack needs at least one matrix")
    ctx, ncols = mats[0].ctx, mats[0].ncols
    for mat in mats:
        if mat.ctx != ctx:
            raise FieldMismatch(f"{mat.ctx} vs {ctx}")
        if mat.ncols != ncols:
            raise ShapeMismatch(f"vstack column counts differ: {mat.ncols} vs {ncols}")
    return Matrix(ctx, tuple(row for mat in mats for row in mat.rows), ncols)


def hstack(mats: Sequence[Matrix]) -> Matrix:
    if not mats:
        raise ShapeMismatch("hstack needs at least one matrix")
    nrows = mats[0].nrows
    if any(mat.nrows != nrows for mat in mats):
        raise ShapeMismatch("hstack row counts differ")
    rows = tuple(tuple(x for mat in mats for x in mat.rows[i]) for i in range(nrows))
    return Matrix(mats[0].ctx, rows, sum(mat.ncols for mat in mats))


def block(blocks: Sequence[Sequence[Matrix]]) -> Matrix:
    return vstack([hstack(list(row)) for row in blocks])


def submatrix(mat: Matrix, rows: Sequence[int], cols: Sequence[int]) -> Matrix:
    for i in rows:
        if not 0 <= i < mat.nrows:
            raise ShapeMismatch(f"row index {i} out of range for {mat.shape}")
    for j in cols:
        if not 0 <= j < mat.ncols:
            raise ShapeMismatch(f"column index {j} out of range for {mat.shape}")
    return Matrix(mat.ctx, tuple(tuple(mat.rows[i][j] for j in cols) for i in rows), len(cols))


# --- elimination -------------------------------------------------------------


def _rref_rows(ctx: FieldCtx, rows: list[list[int]], ncols: int) -> list[int]:
    """Reduce ``rows`` in place to RREF; return the pivot columns."""
    pivots: list[int] = []
    r = 0
    n = len(rows)
    for c in range(ncols):
        if r == n:
            break
        pivot = next((i for i in range(r, n) if rows[i][c]), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        lead = rows[r][c]
        if lead != 1:
            rows[r] = ctx.scale(rows[r], ctx.inv(lead))
        src = rows[r]
        for i in range(n):
            if i != r and rows[i][c]:
                rows[i] = ctx.axpy(rows[i], rows[i][c], src)
        pivots.append(c)
        r += 1
    return pivots


def rref(mat: Matrix) -> tuple[Matrix, tuple[int, ...]]:
    """Reduced row echelon form (same shape, zero rows last) and pivot columns."""
    rows = [list(row) for row in mat.rows]
    pivots = _rref_rows(mat.ctx, rows, mat.ncols)
    return Matrix(mat.ctx, tuple(tuple(row) for row in rows), mat.ncols), tuple(pivots)


def rank(mat: Matrix) -> int:
    rows = [list(row) for row in mat.rows]
    return len(_rref_rows(mat.ctx, rows, mat.ncols))


def det(mat: Matrix) -> int:
    if not mat.is_square():
        raise ShapeMismatch(f"determinant of non-square {mat.shape} matrix")
    ctx = mat.ctx
    rows = [list(row) for row in mat.rows]
    n = len(rows)
    acc = 1
    for c in range(n):
        pivot = next((i for i in range(c, n) if rows[i][c]), None)
        if pivot is None:
            return 0
        if pivot != c:
            rows[c], rows[pivot] = rows[pivot], rows[c]
            acc = ctx.neg(acc)
        lead = rows[c][c]
        acc = ctx.mul(acc, lead)
        inv_lead = ctx.inv(lead)
        for i in range(c + 1, n):
            if rows[i][c]:
                rows[i] = ctx.axpy(rows[i], ctx.mul(rows[i][c], inv_lead), rows[c])
    return acc


def inverse(mat: Matrix) -> Matrix:
    if not mat.is_square():
        raise ShapeMismatch(f"inverse of non-square {mat.shape} matrix")
    n = mat.nrows
    ctx = mat.ctx
    aug = [list(row) + [int(i == j) for j in range(n)] for i, row in enumerate(mat.rows)]
    pivots = _rref_rows(ctx, aug, n)
    if len(pivots) < n:
        raise Singular(f"matrix of rank {len(pivots)} < {n} is not invertible")
    return Matrix(ctx, tuple(tuple(row[n:]) for row in aug), n)


def is_invertible(mat: Matrix) -> bool:
    return mat.is_square() and rank(mat) == mat.nrows


def nullspace(mat: Matrix) -> Matrix:
    """Basis (as rows) of ``{v : mat v = 0}``."""
    ctx = mat.ctx
    r, pivots = rref(mat)
    free = [j for j in range(mat.ncols) if j not in pivots]
    basis = []
    for f in free:
        v = [0] * mat.ncols
        v[f] = 1
        for row_idx, pc in enumerate(pivots):
            v[pc] = ctx.neg(r.rows[row_idx][f])
        basis.append(tuple(v))
    return Matrix(ctx, tuple(basis), mat.ncols)


# --- subspaces ---------------------------------------------------------------


@dataclass(frozen=True)
class Subspace:
    """Row space of ``basis``, which is kept in RREF without zero rows."""

    basis: Matrix

    def __post_init__(self) -> None:
        prev = -1
        rows = self.basis.rows
        for i, row in enumerate(rows):
            lead = next((j for j, x in enumerate(row) if x), None)
            if lead is None or lead <= prev or row[lead] != 1:
                raise ValueError("subspace basis is not in reduced row echelon form")
            if any(other[lead] for k, other in enumerate(rows) if k != i):
                raise ValueError("subspace basis is not in reduced row echelon form")
            prev = lead

    @property
    def ctx(self) -> FieldCtx:
        return self.basis.ctx

    @property
    def dim(self) -> int:
        return self.basis.nrows

    @property
    def ambient(self) -> int:
        return self.basis.ncols

    @property
    def pivots(self) -> tuple[int, ...]:
        return tuple(next(j for j, x in enumerate(row) if x) for row in self.basis.rows)

    def support(self) -> tuple[int, ...]:
        """Coordinates on which some vector of the subspace is nonzero."""
        return tuple(j for j in range(self.ambient) if any(row[j] for row in self.basis.rows))

    def is_coordinate(self) -> bool:
        """True when spanned by standard basis vectors."""
        return all(sum(1 for x in row if x) == 1 for row in self.basis.rows)

    def contains(self, v: Sequence[int]) -> bool:
        if len(v) != self.ambient:
            raise ShapeMismatch(f"vector of length {len(v)} in ambient {self.ambient}")
        return rank(vstack([self.basis, Matrix(self.ctx, (tuple(v),), self.ambient)])) == self.dim

    def coordinates(self, v: Sequence[int]) -> Vector:
        """Coefficients of ``v`` in the RREF basis; ``v`` must lie in the subspace."""
        coeffs = tuple(v[c] for c in self.pivots)
        ctx = self.ctx
        recon = [0] * self.ambient
        for coef, row in zip(coeffs, self.basis.rows):
            recon = ctx.axpy(recon, ctx.neg(coef), row)
        if tuple(recon) != tuple(v):
            raise ValueError("vector is not in the subspace")
        return coeffs

    @classmethod
    def zero(cls, ctx: FieldCtx, ambient: int) -> Subspace:
        return cls(Matrix(ctx, (), ambient))

    @classmethod
    def full(cls, ctx: FieldCtx, ambient: int) -> Subspace:
        return cls(Matrix.identity(ctx, ambient))

    @classmethod
    def coordinate(cls, ctx: FieldCtx, ambient: int, coords: Iterable[int]) -> Subspace:
        """``span(e_i : i in coords)`` with 0-based coordinates."""
        idx = sorted(set(coords))
        return cls(Matrix(ctx, tuple(tuple(int(j == i) for j in range(ambient)) for i in idx), ambient))

    def __str__(self) -> str:
        return "span(" + ", ".join(str(list(row)) for row in self.basis.rows) + ")"


def row_space(mat: Matrix) -> Subspace:
    r, pivots = rref(mat)
    return Subspace(Matrix(mat.ctx, r.rows[: len(pivots)], mat.ncols))


def span(ctx: FieldCtx, vectors: Sequence[Sequence[int]], ambient: int | None = None) -> Subspace:
    if ambient is None:
        ambient = len(vectors[0])
    return row_space(Matrix.from_rows(ctx, vectors, ambient))


def subspace_apply(s: Subspace, c: Matrix) -> Subspace:
    """Row space of ``basis(s) @ c``."""
    if not c.is_square() or c.nrows != s.ambient:
        raise ShapeMismatch(f"cannot apply {c.shape} matrix to subspace of ambient {s.ambient}")
    return row_space(matmul(s.basis, c))


def _check_ambient(spaces: Sequence[Subspace]) -> None:
    if len({s.ambient for s in spaces}) > 1:
        raise ShapeMismatch("subspaces live in different ambient spaces")
    if len({s.ctx for s in spaces}) > 1:
        raise FieldMismatch("subspaces live over different fields")


def subspace_sum(u: Subspace, v: Subspace) -> Subspace:
    _check_ambient([u, v])
    return row_space(vstack([u.basis, v.basis]))


def subspace_intersect(u: Subspace, v: Subspace) -> Subspace:
    """Intersection via the left kernel of the stacked bases.

    ``x U = y V`` exactly when ``(x, -y)`` kills ``[U; V]``; the intersection
    is spanned by the corresponding ``x U``.
    """
    _check_ambient([u, v])
    if u.dim == 0 or v.dim == 0:
        return Subspace.zero(u.ctx, u.ambient)
    stacked = vstack([u.basis, v.basis])
    kernel = nullspace(stacked.T)
    if kernel.nrows == 0:
        return Subspace.zero(u.ctx, u.ambient)
    coeffs = Matrix(u.ctx, tuple(row[: u.dim] for row in kernel.rows), u.dim)
    return row_space(matmul(coeffs, u.basis))


def intersect_all(spaces: Sequence[Subspace]) -> Subspace:
    if not spaces:
        raise ShapeMismatch("intersection of no subspaces")
    out = spaces[0]
    for s in spaces[1:]:
        out = subspace_intersect(out, s)
    return out


def is_direct_sum(spaces: Sequence[Subspace]) -> bool:
    if not spaces:
        return True
    _check_ambient(spaces)
    return rank(vstack([s.basis for s in spaces])) == sum(s.dim for s in spaces)


# --- enumeration -------------------------------------------------------------


def gaussian_binomial(n: int, k: int, q: int) -> int:
    """Number of ``k``-dimensional subspaces of GF(q)^n."""
    if not 0 <= k <= n:
        return 0
    num = den = 1
    for i in range(k):
        num *= q ** (n - i) - 1
        den *= q ** (i + 1) - 1
    return num // den


def enumerate_subspaces(ctx: FieldCtx, ambient: int, dim: int) -> Iterator[Subspace]:
    """All ``dim``-dimensional subspaces, ordered by pivot set then free entries."""
    q = ctx.q
    for pivots in itertools.combinations(range(ambient), dim):
        free = [(i, j) for i, pc in enumerate(pivots) for j in range(pc + 1, ambient) if j not in pivots]
        for values in itertools.product(range(q), repeat=len(free)):
            rows = [[0] * ambient for _ in pivots]
            for i, pc in enumerate(pivots):
                rows[i][pc] = 1
            for (i, j), x in zip(free, values):
                rows[i][j] = x
            yield Subspace(Matrix(ctx, tuple(tuple(row) for row in rows), ambient))


def enumerate_matrices(ctx: FieldCtx, nrows: int, ncols: int) -> Iterator[Matrix]:
    for values in itertools.product(range(ctx.q), repeat=nrows * ncols):
        yield Matrix(ctx, tuple(tuple(values[i * ncols : (i + 1) * ncols]) for i in range(nrows)), ncols)


def random_matrix(ctx: FieldCtx, nrows: int, ncols: int, rng) -> Matrix:
    return Matrix(ctx, tuple(tuple(rng.randrange(ctx.q) for _ in range(ncols)) for _ in range(nrows)), ncols)


def random_invertible(ctx: FieldCtx, n: int, rng, attempts: int = 1000) -> Matrix:
    for _ in range(attempts):
        mat = random_matrix(ctx, n, n, rng)
        if is_invertible(mat):
            return mat
    raise Singular(f"no invertible {n}x{n} matrix found in {attempts} draws")  # pragma: no cover
