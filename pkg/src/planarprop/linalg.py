"""Exact rational matrices: arithmetic, RREF, deterministic nullspace bases.

All entries are `fractions.Fraction`; no floating point anywhere.  The
nullspace basis convention is fixed once and for all: reduced row echelon
form with pivots chosen left to right, one basis vector per free column,
free columns taken in increasing index order.  Every caller that freezes
expected values relies on this being deterministic.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

Q0 = Fraction(0)
Q1 = Fraction(1)


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


class Matrix:
    """Dense matrix over the rationals."""

    __slots__ = ("nrows", "ncols", "rows")

    def __init__(self, rows: Sequence[Sequence]):
        self.rows = [[_frac(x) for x in r] for r in rows]
        self.nrows = len(self.rows)
        self.ncols = len(self.rows[0]) if self.rows else 0
        for r in self.rows:
            if len(r) != self.ncols:
                raise ValueError("ragged rows")

    # -- constructors -------------------------------------------------

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "Matrix":
        m = cls.__new__(cls)
        m.nrows, m.ncols = nrows, ncols
        m.rows = [[Q0] * ncols for _ in range(nrows)]
        return m

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        m = cls.zeros(n, n)
        for i in range(n):
            m.rows[i][i] = Q1
        return m

    @classmethod
    def from_cols(cls, cols: Sequence[Sequence], nrows: int | None = None) -> "Matrix":
        cols = [list(c) for c in cols]
        if nrows is None:
            nrows = len(cols[0]) if cols else 0
        m = cls.zeros(nrows, len(cols))
        for j, c in enumerate(cols):
            for i, x in enumerate(c):
                m.rows[i][j] = _frac(x)
        return m

    @classmethod
    def column(cls, vec: Sequence) -> "Matrix":
        return cls([[x] for x in vec])

    # -- basic access -------------------------------------------------

    def col(self, j: int) -> list[Fraction]:
        return [r[j] for r in self.rows]

    def copy(self) -> "Matrix":
        return Matrix(self.rows)

    def is_zero(self) -> bool:
        return all(x == 0 for r in self.rows for x in r)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return (self.nrows, self.ncols) == (other.nrows, other.ncols) and self.rows == other.rows

    def __hash__(self):
        return hash((self.nrows, self.ncols, tuple(tuple(r) for r in self.rows)))

    def __repr__(self):
        return f"Matrix({self.rows!r})"

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other: "Matrix") -> "Matrix":
        if (self.nrows, self.ncols) != (other.nrows, other.ncols):
            raise ValueError("shape mismatch in matrix addition")
        return Matrix([[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)])

    def __sub__(self, other: "Matrix") -> "Matrix":
        if (self.nrows, self.ncols) != (other.nrows, other.ncols):
            raise ValueError("shape mismatch in matrix subtraction")
        return Matrix([[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)])

    def __neg__(self) -> "Matrix":
        return Matrix([[-a for a in r] for r in self.rows])

    def scale(self, c) -> "Matrix":
        c = _frac(c)
        return Matrix([[c * a for a in r] for r in self.rows])

    def __matmul__(self, other: "Matrix") -> "Matrix":
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch: {self.nrows}x{self.ncols} @ {other.nrows}x{other.ncols}")
        out = Matrix.zeros(self.nrows, other.ncols)
        orows = other.rows
        for i, r in enumerate(self.rows):
            acc = out.rows[i]
            for k, a in enumerate(r):
                if a:
                    ork = orows[k]
                    for j in range(other.ncols):
                        b = ork[j]
                        if b:
                            acc[j] += a * b
        return out

    def apply(self, vec: Sequence) -> list[Fraction]:
        """Matrix-vector product."""
        if len(vec) != self.ncols:
            raise ValueError("vector length mismatch")
        return [sum((a * _frac(x) for a, x in zip(r, vec) if a), Q0) for r in self.rows]

    def kron(self, other: "Matrix") -> "Matrix":
        """Kronecker product; index convention is big-endian (first factor
        owns the most significant digit), matching the tensor-basis
        linearisation used throughout the package."""
        out = Matrix.zeros(self.nrows * other.nrows, self.ncols * other.ncols)
        for i, r in enumerate(self.rows):
            for k, a in enumerate(r):
                if a:
                    for i2, r2 in enumerate(other.rows):
                        tr = out.rows[i * other.nrows + i2]
                        base = k * other.ncols
                        for k2, b in enumerate(r2):
                            if b:
                                tr[base + k2] = a * b
        return out

    def transpose(self) -> "Matrix":
        return Matrix([[self.rows[i][j] for i in range(self.nrows)] for j in range(self.ncols)])

    def hstack(self, other: "Matrix") -> "Matrix":
        if self.nrows != other.nrows:
            raise ValueError("row count mismatch")
        return Matrix([r1 + r2 for r1, r2 in zip(self.rows, other.rows)])

    def vstack(self, other: "Matrix") -> "Matrix":
        if self.ncols != other.ncols:
            raise ValueError("column count mismatch")
        return Matrix(self.rows + other.rows)

    # -- elimination --------------------------------------------------

    def rref(self) -> tuple["Matrix", list[int]]:
        """Reduced row echelon form and the list of pivot columns."""
        m = [row[:] for row in self.rows]
        pivots: list[int] = []
        pr = 0
        for pc in range(self.ncols):
            sel = None
            for i in range(pr, self.nrows):
                if m[i][pc]:
                    sel = i
                    break
            if sel is None:
                continue
            m[pr], m[sel] = m[sel], m[pr]
            inv = Q1 / m[pr][pc]
            m[pr] = [x * inv for x in m[pr]]
            for i in range(self.nrows):
                if i != pr and m[i][pc]:
                    f = m[i][pc]
                    m[i] = [a - f * b for a, b in zip(m[i], m[pr])]
            pivots.append(pc)
            pr += 1
            if pr == self.nrows:
                break
        return Matrix(m), pivots

    def rank(self) -> int:
        return len(self.rref()[1])

    def nullspace(self) -> list[list[Fraction]]:
        """Deterministic kernel basis: one vector per free column, free
        columns in increasing order.  rank + len(result) == ncols."""
        red, pivots = self.rref()
        pivset = set(pivots)
        basis = []
        for j in range(self.ncols):
            if j in pivset:
                continue
            v = [Q0] * self.ncols
            v[j] = Q1
            for pr, pc in enumerate(pivots):
                v[pc] = -red.rows[pr][j]
            basis.append(v)
        return basis

    def solve(self, rhs: Sequence) -> list[Fraction] | None:
        """One exact solution of self @ x = rhs, or None if inconsistent."""
        aug = Matrix([r + [_frac(b)] for r, b in zip(self.rows, rhs)])
        red, pivots = aug.rref()
        if self.ncols in pivots:
            return None
        x = [Q0] * self.ncols
        for pr, pc in enumerate(pivots):
            x[pc] = red.rows[pr][self.ncols]
        return x


def nullspace(m: Matrix) -> list[list[Fraction]]:
    """Module-level alias; kernel basis of a rational matrix."""
    return m.nullspace()


class SparseEchelon:
    """Incremental row-space echelon over the rationals with sparse rows.

    Feed constraint rows one at a time; at the end, `nullspace()` returns
    the same canonical basis as dense RREF of the stacked rows would
    (the fully reduced echelon form of a row space is unique, so the
    result does not depend on insertion order).
    """

    def __init__(self, ncols: int):
        self.ncols = ncols
        self.pivot_rows: dict[int, dict[int, Fraction]] = {}

    def add_row(self, row: dict[int, Fraction]) -> bool:
        """Reduce a sparse row against the current pivots; returns True if
        it contributed a new pivot."""
        row = {j: v for j, v in row.items() if v}
        while row:
            lead = min(row)
            piv = self.pivot_rows.get(lead)
            if piv is None:
                inv = Q1 / row[lead]
                self.pivot_rows[lead] = {j: v * inv for j, v in row.items()}
                return True
            f = row[lead]
            for j, v in piv.items():
                nv = row.get(j, Q0) - f * v
                if nv:
                    row[j] = nv
                else:
                    row.pop(j, None)
        return False

    @property
    def rank(self) -> int:
        return len(self.pivot_rows)

    def _back_reduce(self):
        for lead in sorted(self.pivot_rows, reverse=True):
            piv = self.pivot_rows[lead]
            for lead2 in sorted(self.pivot_rows):
                if lead2 >= lead:
                    break
                r2 = self.pivot_rows[lead2]
                f = r2.get(lead)
                if f:
                    for j, v in piv.items():
                        nv = r2.get(j, Q0) - f * v
                        if nv:
                            r2[j] = nv
                        else:
                            r2.pop(j, None)

    def nullspace(self) -> list[list[Fraction]]:
        self._back_reduce()
        pivcols = set(self.pivot_rows)
        basis = []
        for j in range(self.ncols):
            if j in pivcols:
                continue
            v = [Q0] * self.ncols
            v[j] = Q1
            for pc, prow in self.pivot_rows.items():
                c = prow.get(j)
                if c:
                    v[pc] = -c
            basis.append(v)
        return basis


def sparse_nullspace(rows: Iterable[dict[int, Fraction]], ncols: int) -> list[list[Fraction]]:
    ech = SparseEchelon(ncols)
    for row in rows:
        ech.add_row(row)
    return ech.nullspace()


def span_rank(vectors: Sequence[Sequence[Fraction]]) -> int:
    """Rank of the span of a family of vectors."""
    if not vectors:
        return 0
    ech = SparseEchelon(len(vectors[0]))
    for v in vectors:
        ech.add_row({j: _frac(x) for j, x in enumerate(v) if x})
    return ech.rank


def in_span(vectors: Sequence[Sequence[Fraction]], target: Sequence[Fraction]) -> bool:
    """Exact membership of `target` in the span of `vectors`."""
    n = span_rank(list(vectors))
    return span_rank(list(vectors) + [list(target)]) == n
