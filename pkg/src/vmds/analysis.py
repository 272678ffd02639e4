"""Checkers and diagnostics for repair schemes of vector MDS codes.

Every check returns a :class:`CheckReport` listing *all* violations, sorted
by condition id and node indices, so a failing search candidate can be
triaged in one pass.  Condition ids:

``repair-rank``         stacked ``S_{i,m} C_{i,m}`` is not of full rank l
``interference-rank``   stacked ``S_{i,m} C_{i,m'}`` has rank other than l/r
``invariance``          ``S_{i,m} C_{i,m'}`` differs from ``S_{r,m}``
``intersection-dim``    ``dim(cap_{t in T} S_t) > l / r^|T|``
``basis-degree``        some e_i lies in more than log_r(l) repair subspaces
``edge-count``          coordinate/subspace incidences differ from k*l/r
``not-coordinate``      a subspace is not spanned by standard basis vectors
``decomposition``       ``S`` is not the direct sum of its pieces ``S cap span(e_x)``
``block-dimension``     ``dim(S cap span(e_x)) != |x|/r``
``block-size``          a block z of ``P_x`` has ``|z| > |x|/r``
``entropy-floor``       base-r entropy of ``P_x`` under the uniform law is below 1
``determinant-pattern`` ``f_m(S_{m'})`` is zero iff ``m' == m`` fails
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

from vmds.algebra import (
    Matrix,
    Subspace,
    det,
    matmul,
    rank,
    submatrix,
    subspace_apply,
    subspace_intersect,
    subspace_sum,
    vstack,
)
from vmds.errors import NotDiagonal, NotNormalized, NotPowerOfR, NoValidIndexSet, ShapeMismatch
from vmds.model import RepairScheme, VectorMdsCode


@dataclass(frozen=True, order=True)
class Violation:
    condition: str
    nodes: tuple[int, ...]
    observed: Any = field(compare=False)
    required: Any = field(compare=False)

    def __str__(self) -> str:
        nodes = ",".join(map(str, self.nodes))
        return f"{self.condition} nodes={nodes} observed={self.observed} required={self.required}"


@dataclass(frozen=True)
class CheckReport:
    name: str
    violations: tuple[Violation, ...] = ()
    notes: tuple[str, ...] = ()
    data: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def __bool__(self) -> bool:
        return self.passed


def make_report(name: str, violations: Iterable[Violation] = (), notes: Iterable[str] = (), data=None) -> CheckReport:
    return CheckReport(name, tuple(sorted(violations)), tuple(notes), dict(data or {}))


def merge_reports(name: str, reports: Sequence[CheckReport]) -> CheckReport:
    return make_report(
        name,
        (v for rep in reports for v in rep.violations),
        (n for rep in reports for n in rep.notes),
    )


def render_report(report: CheckReport) -> str:
    """Line-oriented key/value rendering used by the CLI."""
    lines = [f"check {report.name}", f"verdict {report.verdict}"]
    lines += [f"violation {v}" for v in report.violations]
    lines += [f"note {n}" for n in report.notes]
    return "\n".join(lines) + "\n"


def _require_shape(code: VectorMdsCode, scheme: RepairScheme) -> None:
    if scheme.k != code.k:
        raise ShapeMismatch(f"scheme covers {scheme.k} nodes, code has k={code.k}")
    for spaces in scheme.subspaces:
        if len(spaces) != code.r or spaces[0].ambient != code.l or spaces[0].ctx != code.ctx:
            raise ShapeMismatch("scheme does not match the code's r, l or field")


# --- repair conditions ---------------------------------------------------------


def check_repair_validity(code: VectorMdsCode, scheme: RepairScheme, m: int) -> CheckReport:
    _require_shape(code, scheme)
    l, r = code.l, code.r
    spaces = scheme.for_node(m)
    found = []
    own = rank(vstack([matmul(s.basis, code.block(i, m)) for i, s in enumerate(spaces, 1)]))
    if own != l:
        found.append(Violation("repair-rank", (m,), own, l))
    for mp in range(1, code.k + 1):
        if mp == m:
            continue
        got = rank(vstack([matmul(s.basis, code.block(i, mp)) for i, s in enumerate(spaces, 1)]))
        if got != l // r:
            found.append(Violation("interference-rank", (m, mp), got, l // r))
    return make_report(f"repair-validity[{m}]", found)


def is_optimal_bandwidth(code: VectorMdsCode, scheme: RepairScheme) -> CheckReport:
    reports = [check_repair_validity(code, scheme, m) for m in range(1, code.k + 1)]
    return merge_reports("optimal-bandwidth", reports)


def is_constant(scheme: RepairScheme) -> bool:
    return scheme.constant


def check_invariance(code: VectorMdsCode, scheme: RepairScheme) -> CheckReport:
    """``S_{i,m} C_{i,m'} == S_{r,m}`` for all i and m' != m on a normalized code.

    For a constant scheme this is the statement that ``S_m`` is invariant
    under every ``C_{i,m'}``.
    """
    _require_shape(code, scheme)
    if not code.is_normalized():
        raise NotNormalized("invariance check needs identity blocks in the last parity row")
    found = []
    for m in range(1, code.k + 1):
        spaces = scheme.for_node(m)
        target = spaces[-1]
        for mp in range(1, code.k + 1):
            if mp == m:
                continue
            for i, s in enumerate(spaces, 1):
                image = subspace_apply(s, code.block(i, mp))
                if image != target:
                    found.append(Violation("invariance", (m, mp, i), str(image), str(target)))
    return make_report("invariance", found)


def is_optimal_access(scheme: RepairScheme) -> bool:
    return all(s.is_coordinate() for spaces in scheme.subspaces for s in spaces)


def is_optimal_update(code: VectorMdsCode) -> bool:
    """Diagonal encoding blocks: one symbol change touches one symbol per parity."""
    return code.is_diagonal()


# --- bounds --------------------------------------------------------------------


def exact_log(l: int, r: int) -> int:
    """``t`` with ``r**t == l``; raises :class:`NotPowerOfR` otherwise."""
    if r < 2 or l < 1:
        raise NotPowerOfR(f"log_{r}({l}) is undefined")
    t, v = 0, 1
    while v < l:
        v *= r
        t += 1
    if v != l:
        raise NotPowerOfR(f"l={l} is not a power of r={r}")
    return t


FAMILIES = ("general", "diagonal", "access")


def bound_max_k(l: int, r: int, family: str = "general", constant_scheme: bool = True) -> int:
    """Upper bound on k for an optimal-bandwidth (k+r, k, l) MDS code.

    general   l * C(l, l/r)
    diagonal  log_r(l)
    access    r * log_r(l)

    Dropping the constant-scheme requirement adds one.
    """
    if r < 2:
        raise ValueError(f"need r >= 2, got {r}")
    if family == "general":
        if l % r:
            raise ValueError(f"r={r} does not divide l={l}")
        bound = l * math.comb(l, l // r)
    elif family == "diagonal":
        bound = exact_log(l, r)
    elif family == "access":
        bound = r * exact_log(l, r)
    else:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    return bound if constant_scheme else bound + 1


def known_lower_bound(l: int, r: int) -> int:
    """k = (r+1) log_r l, achieved by a published optimal-bandwidth construction."""
    return (r + 1) * exact_log(l, r)


# --- optimal-access structure --------------------------------------------------


def _constant_spaces(scheme: RepairScheme) -> list[Subspace]:
    if not scheme.constant:
        raise ValueError("diagnostic needs a constant repair scheme")
    return [spaces[0] for spaces in scheme.subspaces]


def _alignment_notes(spaces: Sequence[Subspace]) -> list[str]:
    bad = [m for m, s in enumerate(spaces, 1) if not s.is_coordinate()]
    return [f"subspaces of nodes {bad} are not coordinate-aligned"] if bad else []


def intersection_profile(scheme: RepairScheme, t_max: int | None = None) -> CheckReport:
    """``dim(cap_{t in T} S_t) <= l / r^|T|`` for every ``T`` with ``|T| <= t_max``."""
    spaces = _constant_spaces(scheme)
    if not spaces:
        return make_report("intersection-profile")
    k = len(spaces)
    r = len(scheme.subspaces[0])
    l = spaces[0].ambient
    t_max = k if t_max is None else min(t_max, k)
    inters: dict[tuple[int, ...], Subspace] = {}
    found = []
    for size in range(1, t_max + 1):
        for subset in itertools.combinations(range(1, k + 1), size):
            last = spaces[subset[-1] - 1]
            inter = last if size == 1 else subspace_intersect(inters[subset[:-1]], last)
            inters[subset] = inter
            if inter.dim * r**size > l:
                found.append(Violation("intersection-dim", subset, inter.dim, Fraction(l, r**size)))
    dims = {t: s.dim for t, s in inters.items()}
    return make_report("intersection-profile", found, _alignment_notes(spaces), {"dims": dims})


def basis_vector_degrees(scheme: RepairScheme) -> tuple[tuple[int, ...], CheckReport]:
    """How many repair subspaces contain each standard basis vector.

    Passes when every degree is at most log_r(l) and the degrees sum to
    k * l / r, the number of incidences a coordinate-aligned scheme has.
    """
    spaces = _constant_spaces(scheme)
    if not spaces:
        return (), make_report("basis-degrees")
    r = len(scheme.subspaces[0])
    l = spaces[0].ambient
    cap = exact_log(l, r)
    degrees = []
    for x in range(l):
        e = tuple(int(j == x) for j in range(l))
        degrees.append(sum(1 for s in spaces if s.contains(e)))
    found = [
        Violation("not-coordinate", (m,), str(s), "span of basis vectors")
        for m, s in enumerate(spaces, 1)
        if not s.is_coordinate()
    ]
    found += [Violation("basis-degree", (x,), d, cap) for x, d in enumerate(degrees) if d > cap]
    edges = len(spaces) * l // r
    if sum(degrees) != edges:
        found.append(Violation("edge-count", (), sum(degrees), edges))
    return tuple(degrees), make_report("basis-degrees", found, data={"degrees": tuple(degrees), "cap": cap})


# --- partitions ----------------------------------------------------------------


@dataclass(frozen=True)
class Partition:
    """Partition of ``{0, ..., size-1}``; blocks sorted, ordered by least element."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for b in self.blocks:
            if not b:
                raise ValueError("empty block in partition")
            if seen.intersection(b):
                raise ValueError("partition blocks overlap")
            seen.update(b)
        if seen != set(range(len(seen))):
            raise ValueError("partition does not cover 0..size-1")

    @classmethod
    def of(cls, blocks: Iterable[Iterable[int]]) -> Partition:
        return cls(tuple(sorted((tuple(sorted(b)) for b in blocks), key=lambda b: b[0])))

    @classmethod
    def from_labels(cls, labels: Sequence[Any]) -> Partition:
        groups: dict[Any, list[int]] = {}
        for idx, lab in enumerate(labels):
            groups.setdefault(lab, []).append(idx)
        return cls.of(groups.values())

    @classmethod
    def trivial(cls, size: int) -> Partition:
        return cls((tuple(range(size)),))

    @property
    def size(self) -> int:
        return sum(len(b) for b in self.blocks)

    def labels(self) -> list[int]:
        out = [0] * self.size
        for label, b in enumerate(self.blocks):
            for x in b:
                out[x] = label
        return out

    def restrict(self, subset: Iterable[int]) -> tuple[tuple[int, ...], ...]:
        """Blocks of this partition intersected with ``subset`` (empties dropped)."""
        keep = set(subset)
        parts = [tuple(x for x in b if x in keep) for b in self.blocks]
        return tuple(p for p in parts if p)


def meet(partitions: Iterable[Partition], size: int | None = None) -> Partition:
    """Common refinement; the meet of nothing is the one-block partition of ``size``."""
    parts = list(partitions)
    if not parts:
        if size is None:
            raise ValueError("size required for the meet of no partitions")
        return Partition.trivial(size)
    n = parts[0].size
    if any(p.size != n for p in parts) or (size is not None and size != n):
        raise ShapeMismatch("partitions of different ground sets")
    labels = [p.labels() for p in parts]
    return Partition.from_labels([tuple(lab[x] for lab in labels) for x in range(n)])


def eigen_partitions(code: VectorMdsCode) -> tuple[tuple[Partition, ...], ...]:
    """``[i-1][j-1]`` groups coordinates by equal diagonal entry of C_{i,j}."""
    if not code.is_diagonal():
        raise NotDiagonal("eigenvalue partitions need diagonal encoding blocks")
    return tuple(tuple(Partition.from_labels(c.diagonal()) for c in row) for row in code.grid)


def diagonal_structure_check(code: VectorMdsCode, scheme: RepairScheme, m: int) -> CheckReport:
    """Block structure a repair subspace of a diagonal code must have.

    With X the meet of the partitions of all C_{i,m'} (m' != m) and
    P_x = x meet the partitions of C_{i,m}, checks that S_m splits as the
    direct sum of ``S_m cap span(e_x)``, each piece has dim |x|/r, every
    block of every P_x has at most |x|/r coordinates, and the base-r entropy
    of P_x under the uniform law on x is at least 1.
    """
    if not code.is_diagonal():
        raise NotDiagonal("structure check needs diagonal encoding blocks")
    if not code.is_normalized():
        raise NotNormalized("structure check needs identity blocks in the last parity row")
    _require_shape(code, scheme)
    spaces = _constant_spaces(scheme)
    l, r, ctx = code.l, code.r, code.ctx
    parts = eigen_partitions(code)
    others = [parts[i][mp - 1] for i in range(r) for mp in range(1, code.k + 1) if mp != m]
    big_x = meet(others, l)
    own = meet([parts[i][m - 1] for i in range(r)], l)
    s = spaces[m - 1]

    found = []
    pieces = []
    entropies: dict[tuple[int, ...], float] = {}
    max_prob = Fraction(0)
    cond_entropy = 0.0
    for x in big_x.blocks:
        piece = subspace_intersect(s, Subspace.coordinate(ctx, l, x))
        pieces.append(piece)
        if piece.dim * r != len(x):
            found.append(Violation("block-dimension", (m,), f"dim={piece.dim} on x={list(x)}", Fraction(len(x), r)))
        blocks = own.restrict(x)
        for z in blocks:
            if len(z) * r > len(x):
                found.append(
                    Violation("block-size", (m,), f"|z|={len(z)} z={list(z)} in x={list(x)}", Fraction(len(x), r))
                )
        probs = [Fraction(len(z), len(x)) for z in blocks]
        max_prob = max(max_prob, max(probs))
        h = -sum(float(pz) * math.log(float(pz), r) for pz in probs)
        entropies[x] = h
        cond_entropy += len(x) / l * h
        if h < 1 - 1e-9:
            found.append(Violation("entropy-floor", (m,), f"H={h:.6f} on x={list(x)}", 1))
    total = pieces[0]
    for piece in pieces[1:]:
        total = subspace_sum(total, piece)
    if total != s or sum(p.dim for p in pieces) != s.dim:
        found.append(Violation("decomposition", (m,), sum(p.dim for p in pieces), s.dim))
    data = {
        "meet": big_x,
        "piece_dims": tuple(p.dim for p in pieces),
        "max_block_probability": max_prob,
        "entropies": entropies,
        "conditional_entropy": cond_entropy,
    }
    return make_report(f"diagonal-structure[{m}]", found, data=data)


# --- determinant criterion -----------------------------------------------------


def _stack(code: VectorMdsCode, basis: Matrix, m: int) -> Matrix:
    return vstack([matmul(basis, code.block(i, m)) for i in range(1, code.r + 1)])


def determinant_criterion(code: VectorMdsCode, scheme: RepairScheme) -> CheckReport:
    """Evaluate the minors ``f_m(S) = det(stack(S C_{i,m}))[rows, I]``.

    ``rows`` are the last l/r + 1 rows of the stack; ``I`` is the
    lexicographically first column set making ``f_m(S_m)`` nonzero.  Passes
    when ``f_m(S_{m'})`` vanishes exactly for ``m' != m``.
    """
    _require_shape(code, scheme)
    if not code.is_normalized():
        raise NotNormalized("determinant criterion needs identity blocks in the last parity row")
    spaces = _constant_spaces(scheme)
    l, r = code.l, code.r
    width = l // r + 1
    rows = list(range(l * (r - 1) // r - 1, l))
    index_sets: dict[int, tuple[int, ...]] = {}
    values: dict[tuple[int, int], int] = {}
    found = []
    for m in range(1, code.k + 1):
        own = _stack(code, spaces[m - 1].basis, m)
        chosen = next(
            (cols for cols in itertools.combinations(range(l), width) if det(submatrix(own, rows, cols)) != 0),
            None,
        )
        if chosen is None:
            raise NoValidIndexSet(f"no invertible {width}x{width} minor on rows {rows} for node {m}")
        index_sets[m] = chosen
        for mp in range(1, code.k + 1):
            value = det(submatrix(_stack(code, spaces[mp - 1].basis, m), rows, chosen))
            values[m, mp] = value
            if (value != 0) != (mp == m):
                found.append(Violation("determinant-pattern", (m, mp), value, "nonzero" if mp == m else 0))
    return make_report("determinant-criterion", found, data={"index_sets": index_sets, "values": values})
