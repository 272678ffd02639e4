"""Single systematic-node repair with exact bandwidth and access accounting.

Parity ``k+i`` sends ``B_i a_{k+i}`` where ``B_i`` is the RREF basis of
S_{i,m}.  Each surviving systematic node ``m'`` sends ``R a_{m'}`` with ``R``
the RREF basis of the row space spanned by all ``B_i C_{i,m'}``.  Because
``R`` is in RREF, the interference ``B_i C_{i,m'} a_{m'}`` is read off the
received symbols through the pivot columns of ``R``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from vmds.algebra import Matrix, Vector, inverse, matmul, row_space, vstack
from vmds.analysis import check_repair_validity
from vmds.errors import ErasedOutOfRange, InvalidScheme, Singular
from vmds.model import DataState, RepairScheme, VectorMdsCode


@dataclass(frozen=True)
class NodeTransmission:
    node: int
    projection: Matrix
    symbols: Vector

    @property
    def transmitted(self) -> int:
        return self.projection.nrows

    @property
    def accessed(self) -> int:
        return self.projection.nonzero_columns()


@dataclass(frozen=True)
class RepairTranscript:
    erased: int
    transmissions: tuple[NodeTransmission, ...]
    reconstructed: Vector

    @property
    def transmitted_symbols(self) -> dict[int, int]:
        return {t.node: t.transmitted for t in self.transmissions}

    @property
    def accessed_symbols(self) -> dict[int, int]:
        return {t.node: t.accessed for t in self.transmissions}

    @property
    def total_bandwidth(self) -> int:
        return sum(t.transmitted for t in self.transmissions)

    @property
    def total_access(self) -> int:
        return sum(t.accessed for t in self.transmissions)


def bandwidth_floor(n: int, k: int, l: int) -> Fraction:
    """Minimum symbols moved to repair one node of an (n, k, l) MDS code."""
    if not n > k >= 1:
        raise ValueError(f"need n > k >= 1, got n={n}, k={k}")
    return Fraction(l * (n - 1), n - k)


def projections(code: VectorMdsCode, scheme: RepairScheme, m: int) -> dict[int, Matrix]:
    """Projection matrix applied by every surviving node when node ``m`` is erased."""
    if not 1 <= m <= code.k:
        raise ErasedOutOfRange(f"node {m} is not a systematic node of 1..{code.k}")
    spaces = scheme.for_node(m)
    out: dict[int, Matrix] = {}
    for mp in range(1, code.k + 1):
        if mp != m:
            stacked = vstack([matmul(s.basis, code.block(i, mp)) for i, s in enumerate(spaces, 1)])
            out[mp] = row_space(stacked).basis
    for i, s in enumerate(spaces, 1):
        out[code.k + i] = s.basis
    return out


def _check(code: VectorMdsCode, scheme: RepairScheme, m: int) -> None:
    report = check_repair_validity(code, scheme, m)
    if not report.passed:
        v = report.violations[0]
        raise InvalidScheme(m, f"{v.condition} at nodes {v.nodes}: observed {v.observed}, required {v.required}")


def repair_node(
    code: VectorMdsCode, scheme: RepairScheme, data: DataState, m: int, validate: bool = True
) -> RepairTranscript:
    """Rebuild systematic node ``m`` from what the survivors transmit.

    With ``validate=False`` schemes that move more than the minimum are
    still simulated; only a singular recovery system is rejected.
    """
    if not 1 <= m <= code.k:
        raise ErasedOutOfRange(f"node {m} is not a systematic node of 1..{code.k}")
    if validate:
        _check(code, scheme, m)
    ctx = code.ctx
    proj = projections(code, scheme, m)
    sent = {node: p.apply(data.node(node)) for node, p in proj.items()}

    cleaned: list[int] = []
    lhs = []
    for i, s in enumerate(scheme.for_node(m), 1):
        acc = list(sent[code.k + i])
        for mp in range(1, code.k + 1):
            if mp == m:
                continue
            r_mat = proj[mp]
            pivots = [next(j for j, x in enumerate(row) if x) for row in r_mat.rows]
            interference = matmul(s.basis, code.block(i, mp))
            # rows of B_i C_{i,m'} in the coordinates of R's rows
            coeffs = Matrix(ctx, tuple(tuple(row[c] for c in pivots) for row in interference.rows), len(pivots))
            if matmul(coeffs, r_mat) != interference:
                raise InvalidScheme(m, f"interference from node {mp} is not spanned by its transmission")
            removed = coeffs.apply(sent[mp])
            acc = [ctx.sub(a, b) for a, b in zip(acc, removed)]
        cleaned.extend(acc)
        lhs.append(matmul(s.basis, code.block(i, m)))
    system = vstack(lhs)
    if system.nrows != code.l:
        raise InvalidScheme(m, f"repair system has {system.nrows} rows, expected {code.l}")
    try:
        recovered = inverse(system).apply(cleaned)
    except Singular:
        raise InvalidScheme(m, "stacked repair projections are not full rank") from None

    order = [n for n in range(1, code.n + 1) if n != m]
    transmissions = tuple(NodeTransmission(n, proj[n], sent[n]) for n in order)
    return RepairTranscript(m, transmissions, tuple(recovered))


def access_profile(code: VectorMdsCode, scheme: RepairScheme, m: int) -> dict[int, int]:
    """Symbols each survivor reads to repair node ``m``; independent of the data."""
    _check(code, scheme, m)
    return {node: p.nonzero_columns() for node, p in sorted(projections(code, scheme, m).items())}


def render_transcript(t: RepairTranscript) -> str:
    lines = [f"node {x.node} tx={x.transmitted} access={x.accessed}" for x in t.transmissions]
    lines.append(f"total bw={t.total_bandwidth} access={t.total_access}")
    lines.append("reconstructed=[" + ",".join(map(str, t.reconstructed)) + "]")
    return "\n".join(lines) + "\n"


def zero_state(code: VectorMdsCode) -> DataState:
    return DataState(tuple((0,) * code.l for _ in range(code.k)), tuple((0,) * code.l for _ in range(code.r)))
