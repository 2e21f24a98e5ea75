"""Classical constraint logic of the Peres-Mermin square.

Everything here is exhaustive enumeration over at most 512 sign assignments;
no algebraic shortcuts.  The same enumeration doubles as the oracle the
protocol runner uses to audit multi-agent records.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .qsim import (
    STRUCT_TOL,
    QubitRegister,
    SpectralObservable,
    identity_observable,
    pauli_observable,
    tensor_product,
)

SIGNS = (+1, -1)

# Grid layout: grid[row][col], columns ordered (A, B, C).
ROW_LABELS = (("A1", "B1", "C1"), ("A2", "B2", "C2"), ("A3", "B3", "C3"))


def _parity(values) -> int:
    out = 1
    for v in values:
        out *= v
    return out


@dataclass(frozen=True)
class PMSquare:
    """3x3 grid of observable labels with row/column product targets.

    A target of None leaves that line unconstrained (used for the rows-only
    variant of the argument).
    """

    labels: tuple[tuple[str, str, str], ...] = ROW_LABELS
    row_targets: tuple[int | None, int | None, int | None] = (+1, +1, +1)
    col_targets: tuple[int | None, int | None, int | None] = (+1, +1, -1)


def standard_square() -> PMSquare:
    """Row products +1, column products (+1, +1, -1): the full constraint set."""
    return PMSquare()


def rows_only_square() -> PMSquare:
    return PMSquare(col_targets=(None, None, None))


@dataclass(frozen=True)
class PMAssignment:
    """One +/-1 value per grid cell, row-major."""

    values: tuple[tuple[int, int, int], ...]

    def row(self, i: int) -> tuple[int, int, int]:
        return self.values[i]

    def col(self, j: int) -> tuple[int, int, int]:
        return tuple(self.values[i][j] for i in range(3))

    def satisfies(self, square: PMSquare) -> bool:
        for i, target in enumerate(square.row_targets):
            if target is not None and _parity(self.row(i)) != target:
                return False
        for j, target in enumerate(square.col_targets):
            if target is not None and _parity(self.col(j)) != target:
                return False
        return True


def enumerate_assignments(square: PMSquare) -> list[PMAssignment]:
    """All of the 512 sign assignments satisfying the square's targets."""
    satisfying = []
    for flat in itertools.product(SIGNS, repeat=9):
        assignment = PMAssignment((flat[0:3], flat[3:6], flat[6:9]))
        if assignment.satisfies(square):
            satisfying.append(assignment)
    return satisfying


@dataclass(frozen=True)
class LineCheck:
    line: str
    target: int
    value: float
    deviation: float
    ok: bool


@dataclass(frozen=True)
class SquareReport:
    commutation_ok: bool
    max_commutator: float
    lines: tuple[LineCheck, ...]

    @property
    def all_ok(self) -> bool:
        return self.commutation_ok and all(line.ok for line in self.lines)

    @property
    def violations(self) -> tuple[LineCheck, ...]:
        return tuple(line for line in self.lines if not line.ok)


def verify_square_constraints(operators, tol: float = STRUCT_TOL) -> SquareReport:
    """Check row/column commutation and the six product constraints of a 3x3 grid.

    `operators` is a 3x3 row-major grid of SpectralObservables on a common
    register.  Each line's operator product must equal target * S, where S is
    the product of the three supports (the subspace the line is jointly
    defined on); this evaluates the constraint on every reachable state at
    once.
    """
    grid = [list(row) for row in operators]
    if len(grid) != 3 or any(len(row) != 3 for row in grid):
        raise ValueError("expected a 3x3 grid of observables")
    register = grid[0][0].register
    for row in grid:
        for obs in row:
            if obs.register.labels != register.labels:
                raise ValueError(
                    f"observable {obs.name!r} lives on {obs.register.labels}, "
                    f"expected {register.labels}"
                )

    lines: list[tuple[str, int, list[SpectralObservable]]] = []
    for i in range(3):
        lines.append((f"row{i + 1}", +1, grid[i]))
    col_targets = (+1, +1, -1)
    for j, col_name in enumerate("ABC"):
        lines.append((f"col{col_name}", col_targets[j], [grid[i][j] for i in range(3)]))

    max_comm = 0.0
    for _, _, members in lines:
        mats = [m.matrix() for m in members]
        for a, b in itertools.combinations(mats, 2):
            max_comm = max(max_comm, float(np.max(np.abs(a @ b - b @ a))))

    checks = []
    for line_name, target, members in lines:
        product = np.eye(register.dim, dtype=complex)
        support = np.eye(register.dim, dtype=complex)
        for member in members:
            product = product @ member.matrix()
            support = support @ member.support
        deviation = float(np.max(np.abs(product - target * support)))
        value = float(np.trace(product).real / max(np.trace(support).real, 1.0))
        checks.append(LineCheck(line_name, target, value, deviation, deviation <= tol))

    return SquareReport(max_comm <= tol, max_comm, tuple(checks))


def unbarred_square(labels: tuple[str, str] = ("s1", "s2")) -> list[list[SpectralObservable]]:
    """The plain two-qubit Peres-Mermin operator grid (no friend levels)."""
    l1, l2 = labels

    def single(p: str, lbl: str) -> SpectralObservable:
        if p == "I":
            return identity_observable(QubitRegister((lbl,)))
        return pauli_observable(p, lbl)

    def two_qubit(p1: str, p2: str, name: str) -> SpectralObservable:
        return tensor_product([single(p1, l1), single(p2, l2)]).renamed(name)

    return [
        [two_qubit("Z", "I", "A1"), two_qubit("I", "Z", "B1"), two_qubit("Z", "Z", "C1")],
        [two_qubit("I", "X", "A2"), two_qubit("X", "I", "B2"), two_qubit("X", "X", "C2")],
        [two_qubit("Z", "X", "A3"), two_qubit("X", "Z", "B3"), two_qubit("Y", "Y", "C3")],
    ]


@dataclass(frozen=True)
class RetrodictionVerdict:
    """What an observed C triple forces about A's outcomes.

    required_a_parity is -1 (odd count of -1s) or +1 (even) when forced by the
    consistent completions, 0 when both parities occur.  parity_pairs lists the
    (parity_a, parity_b) combinations seen across all consistent pairs.
    """

    c: tuple[int, int, int]
    required_a_parity: int
    consistent_pairs: int
    parity_pairs: frozenset
    satisfiable_with_even_a: bool


def _row_consistent_pairs(c, require_b_even: bool):
    for a in itertools.product(SIGNS, repeat=3):
        for b in itertools.product(SIGNS, repeat=3):
            if any(a[i] * b[i] != c[i] for i in range(3)):
                continue
            if require_b_even and _parity(b) != +1:
                continue
            yield a, b


def retrodict_from_c(c, require_b_even: bool = True) -> RetrodictionVerdict:
    """Infer A's parity from C's outcome triple by exhausting row-consistent pairs.

    With require_b_even the B column constraint (even number of -1s) is
    imposed; without it only the row relations c_i = a_i * b_i are used, which
    still forbid A and B from both having odd parity.
    """
    c = tuple(int(v) for v in c)
    if _parity(c) != -1:
        raise ValueError(f"C triple {c} violates the column constraint c1*c2*c3 = -1")
    a_parities = set()
    parity_pairs = set()
    count = 0
    for a, b in _row_consistent_pairs(c, require_b_even):
        count += 1
        a_parities.add(_parity(a))
        parity_pairs.add((_parity(a), _parity(b)))
    required = a_parities.pop() if len(a_parities) == 1 else 0
    even_a = any(pa == +1 for pa, _ in parity_pairs)
    return RetrodictionVerdict(c, required, count, frozenset(parity_pairs), even_a)


@dataclass(frozen=True)
class PredictionVerdict:
    a: tuple[int, int, int]
    required_c_parity: int
    consistent_pairs: int


def predict_from_a(a) -> PredictionVerdict:
    """Infer C's parity from A's outcome triple over B-consistent completions."""
    a = tuple(int(v) for v in a)
    if _parity(a) != +1:
        raise ValueError(f"A triple {a} violates the column constraint a1*a2*a3 = +1")
    c_parities = set()
    count = 0
    for b in itertools.product(SIGNS, repeat=3):
        if _parity(b) != +1:
            continue
        c = tuple(a[i] * b[i] for i in range(3))
        c_parities.add(_parity(c))
        count += 1
    required = c_parities.pop() if len(c_parities) == 1 else 0
    return PredictionVerdict(a, required, count)


@dataclass(frozen=True)
class RecordAudit:
    violated: tuple[str, ...]

    @property
    def consistent(self) -> bool:
        return not self.violated


def audit_records(a, b, c) -> RecordAudit:
    """Check three record triples against the row relations and column targets."""
    a, b, c = (tuple(int(v) for v in t) for t in (a, b, c))
    violated = []
    for i in range(3):
        if a[i] * b[i] != c[i]:
            violated.append(f"row{i + 1}: a{i + 1}*b{i + 1} != c{i + 1}")
    if _parity(a) != +1:
        violated.append("colA: a1*a2*a3 != +1")
    if _parity(b) != +1:
        violated.append("colB: b1*b2*b3 != +1")
    if _parity(c) != -1:
        violated.append("colC: c1*c2*c3 != -1")
    return RecordAudit(tuple(violated))


def c_outcome_consistent(c) -> bool:
    """Is there any (a, b) with even parities explaining the C triple? (Never, for valid c.)"""
    c = tuple(int(v) for v in c)
    for a, b in _row_consistent_pairs(c, require_b_even=True):
        if _parity(a) == +1:
            return True
    return False


def valid_c_triples() -> list[tuple[int, int, int]]:
    """The four C triples compatible with c1*c2*c3 = -1."""
    return [c for c in itertools.product(SIGNS, repeat=3) if _parity(c) == -1]
