"""Exact linear algebra over Fraction or PolyFn entries.

One implementation serves both coefficient fields: arbitrary-precision
rationals for pointwise computations and rational functions for symbolic
(generic-point) computations. The only requirements on entries are exact
field arithmetic and an exact zero test, which both Fraction and PolyFn
provide, so ranks and reduced forms computed here are never approximate.

Subspaces are stored in reduced row echelon form with pivot columns strictly
increasing. Over a field that form is unique, so subspace equality is
representation equality; the whole package leans on this for its exact
fiberwise comparisons.

Note on symbolic ranks: the rank of a PolyFn matrix computed here is the rank
over the rational-function field, i.e. the rank at a generic point of the
chart. Rank at a specific point can be lower; constant-rank claims over a
region are always established by sampling in the calling modules, never
asserted from the generic rank alone.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import DimensionMismatch
from .scalars import PolyFn


def zero_like(entry):
    """The additive zero of the field an entry lives in."""
    return entry * 0


def one_like(entry):
    return entry * 0 + 1


def _is_zero(entry):
    if isinstance(entry, PolyFn):
        return entry.is_zero()
    return entry == 0


class Matrix:
    """An immutable rectangular matrix with Fraction or PolyFn entries.

    The zero element of the coefficient field is carried explicitly so that
    empty matrices (zero rows or columns) still know their field.
    """

    __slots__ = ("rows", "cols", "entries", "zero")

    def __init__(self, entries, cols=None, zero=None):
        entries = tuple(tuple(row) for row in entries)
        if entries:
            cols = len(entries[0]) if cols is None else cols
            for row in entries:
                if len(row) != cols:
                    raise DimensionMismatch("ragged matrix rows")
        elif cols is None:
            raise DimensionMismatch("empty matrix needs an explicit column count")
        if zero is None:
            if not entries or cols == 0:
                raise DimensionMismatch("empty matrix needs an explicit zero element")
            zero = zero_like(entries[0][0])
        object.__setattr__(self, "rows", len(entries))
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "zero", zero)

    def __setattr__(self, name, value):
        raise AttributeError("Matrix is immutable")

    # -- constructors --------------------------------------------------------

    @classmethod
    def identity(cls, n, zero=Fraction(0)):
        one = one_like(zero)
        return cls(
            [[one if i == j else zero for j in range(n)] for i in range(n)],
            cols=n,
            zero=zero,
        )

    @classmethod
    def zero_matrix(cls, rows, cols, zero=Fraction(0)):
        return cls([[zero] * cols for _ in range(rows)], cols=cols, zero=zero)

    @classmethod
    def from_columns(cls, columns, rows=None, zero=None):
        if not columns:
            if rows is None or zero is None:
                raise DimensionMismatch("empty column list needs rows and zero")
            return cls([[] for _ in range(rows)], cols=0, zero=zero)
        rows = len(columns[0])
        return cls(
            [[col[i] for col in columns] for i in range(rows)],
            cols=len(columns),
            zero=zero,
        )

    # -- basic algebra --------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and self.entries == other.entries
        )

    def __hash__(self):
        return hash((self.rows, self.cols, self.entries))

    def __repr__(self):
        body = "; ".join(" ".join(str(e) for e in row) for row in self.entries)
        return f"Matrix({self.rows}x{self.cols}: {body})"

    def __add__(self, other):
        if self.rows != other.rows or self.cols != other.cols:
            raise DimensionMismatch("matrix addition shape mismatch")
        return Matrix(
            [
                [a + b for a, b in zip(ra, rb)]
                for ra, rb in zip(self.entries, other.entries)
            ],
            cols=self.cols,
            zero=self.zero,
        )

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        return Matrix(
            [[e * c for e in row] for row in self.entries],
            cols=self.cols,
            zero=self.zero,
        )

    def __matmul__(self, other):
        if self.cols != other.rows:
            raise DimensionMismatch(
                f"matrix product shape mismatch: {self.cols} vs {other.rows}"
            )
        out = []
        for row in self.entries:
            new_row = []
            for j in range(other.cols):
                acc = self.zero
                for k in range(self.cols):
                    acc = acc + row[k] * other.entries[k][j]
                new_row.append(acc)
            out.append(new_row)
        return Matrix(out, cols=other.cols, zero=self.zero)

    def transpose(self):
        return Matrix(
            [[self.entries[i][j] for i in range(self.rows)] for j in range(self.cols)],
            cols=self.rows,
            zero=self.zero,
        )

    def apply(self, vector):
        """Matrix times a column vector given (and returned) as a tuple."""
        if len(vector) != self.cols:
            raise DimensionMismatch("vector length does not match column count")
        out = []
        for row in self.entries:
            acc = self.zero
            for e, v in zip(row, vector):
                acc = acc + e * v
            out.append(acc)
        return tuple(out)

    def stack(self, other):
        """Rows of self followed by rows of other."""
        if self.cols != other.cols:
            raise DimensionMismatch("stack needs equal column counts")
        return Matrix(self.entries + other.entries, cols=self.cols, zero=self.zero)

    def augment(self, other):
        if self.rows != other.rows:
            raise DimensionMismatch("augment needs equal row counts")
        return Matrix(
            [ra + rb for ra, rb in zip(self.entries, other.entries)],
            cols=self.cols + other.cols,
            zero=self.zero,
        )

    def is_zero(self):
        return all(_is_zero(e) for row in self.entries for e in row)

    def is_symmetric(self):
        return self.rows == self.cols and self == self.transpose()

    def is_skew(self):
        return self.rows == self.cols and (self + self.transpose()).is_zero()

    # -- elimination ----------------------------------------------------------

    def rref(self):
        """(reduced row echelon form with zero rows dropped, pivot columns)."""
        work = [list(row) for row in self.entries]
        pivots = []
        r = 0
        for c in range(self.cols):
            pivot_row = None
            for i in range(r, len(work)):
                if not _is_zero(work[i][c]):
                    pivot_row = i
                    break
            if pivot_row is None:
                continue
            work[r], work[pivot_row] = work[pivot_row], work[r]
            inv = one_like(work[r][c]) / work[r][c]
            work[r] = [e * inv for e in work[r]]
            for i in range(len(work)):
                if i != r and not _is_zero(work[i][c]):
                    factor = work[i][c]
                    work[i] = [a - factor * b for a, b in zip(work[i], work[r])]
            pivots.append(c)
            r += 1
            if r == len(work):
                break
        reduced = Matrix(work[:r], cols=self.cols, zero=self.zero)
        return reduced, tuple(pivots)

    def rank(self):
        """Exact rank. Fraction matrices use fraction-free Bareiss elimination;
        PolyFn matrices are reduced over the rational-function field, which
        yields the generic rank."""
        if self.rows == 0 or self.cols == 0:
            return 0
        if isinstance(self.entries[0][0], Fraction):
            return _bareiss_rank(self.entries, self.rows, self.cols)
        return len(self.rref()[1])

    def kernel(self):
        """Right null space {v : M v = 0} as a Subspace of the column space."""
        reduced, pivots = self.rref()
        free = [c for c in range(self.cols) if c not in pivots]
        zero = self.zero
        one = one_like(zero) if not isinstance(zero, PolyFn) else zero + 1
        vectors = []
        for f in free:
            v = [zero] * self.cols
            v[f] = one
            for i, p in enumerate(pivots):
                v[p] = -reduced.entries[i][f]
            vectors.append(tuple(v))
        return Subspace.from_rows(vectors, self.cols, zero=zero)

    def column_space(self):
        """The image of the matrix as a Subspace of the row-index space."""
        cols = [tuple(self.entries[i][j] for i in range(self.rows)) for j in range(self.cols)]
        return Subspace.from_rows(cols, self.rows, zero=self.zero)

    def evaluate(self, point):
        """Entry-wise evaluation of a PolyFn matrix at a point (name -> value)."""
        from .scalars import evaluate as eval_fn

        return Matrix(
            [
                [
                    eval_fn(e, point) if isinstance(e, PolyFn) else Fraction(e)
                    for e in row
                ]
                for row in self.entries
            ],
            cols=self.cols,
            zero=Fraction(0),
        )

    def inverse(self):
        if self.rows != self.cols:
            raise DimensionMismatch("inverse of a non-square matrix")
        augmented = self.augment(Matrix.identity(self.rows, zero=self.zero))
        reduced, pivots = augmented.rref()
        if list(pivots) != list(range(self.rows)):
            raise ZeroDivisionError("matrix is singular")
        return Matrix(
            [row[self.rows :] for row in reduced.entries],
            cols=self.rows,
            zero=self.zero,
        )

    def det(self):
        if self.rows != self.cols:
            raise DimensionMismatch("determinant of a non-square matrix")
        n = self.rows
        if n == 0:
            return one_like(self.zero)
        work = [list(row) for row in self.entries]
        det = one_like(self.zero)
        for c in range(n):
            pivot_row = None
            for i in range(c, n):
                if not _is_zero(work[i][c]):
                    pivot_row = i
                    break
            if pivot_row is None:
                return self.zero
            if pivot_row != c:
                work[c], work[pivot_row] = work[pivot_row], work[c]
                det = -det
            det = det * work[c][c]
            inv = one_like(work[c][c]) / work[c][c]
            for i in range(c + 1, n):
                if not _is_zero(work[i][c]):
                    factor = work[i][c] * inv
                    work[i] = [a - factor * b for a, b in zip(work[i], work[c])]
        return det


def _bareiss_rank(entries, rows, cols):
    """Fraction-free Bareiss elimination on a denominator-cleared copy."""
    work = []
    for row in entries:
        lcm = 1
        for e in row:
            lcm = lcm * e.denominator // _gcd_int(lcm, e.denominator)
        work.append([int(e * lcm) for e in row])
    rank = 0
    prev = 1
    r = 0
    for c in range(cols):
        pivot_row = None
        for i in range(r, rows):
            if work[i][c] != 0:
                pivot_row = i
                break
        if pivot_row is None:
            continue
        work[r], work[pivot_row] = work[pivot_row], work[r]
        for i in range(r + 1, rows):
            for j in range(c + 1, cols):
                work[i][j] = (work[r][c] * work[i][j] - work[i][c] * work[r][j]) // prev
            work[i][c] = 0
        prev = work[r][c]
        rank += 1
        r += 1
        if r == rows:
            break
    return rank


def _gcd_int(a, b):
    while b:
        a, b = b, a % b
    return abs(a)


class Subspace:
    """A linear subspace of a coordinate space, in unique reduced form.

    The basis matrix is in reduced row echelon form with no zero rows, so two
    Subspace objects are equal as sets exactly when their representations are
    equal. This is the workhorse of every Lagrangian computation.
    """

    __slots__ = ("ambient_dim", "basis", "pivots")

    def __init__(self, basis, pivots, ambient_dim):
        object.__setattr__(self, "ambient_dim", ambient_dim)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "pivots", pivots)

    def __setattr__(self, name, value):
        raise AttributeError("Subspace is immutable")

    @classmethod
    def from_rows(cls, vectors, ambient_dim, zero=Fraction(0)):
        matrix = Matrix(list(vectors), cols=ambient_dim, zero=zero)
        reduced, pivots = matrix.rref()
        return cls(reduced, pivots, ambient_dim)

    @classmethod
    def zero_space(cls, ambient_dim, zero=Fraction(0)):
        return cls.from_rows([], ambient_dim, zero=zero)

    @classmethod
    def full_space(cls, ambient_dim, zero=Fraction(0)):
        return cls.from_rows(
            Matrix.identity(ambient_dim, zero=zero).entries, ambient_dim, zero=zero
        )

    @property
    def dim(self):
        return self.basis.rows

    @property
    def zero(self):
        return self.basis.zero

    def vectors(self):
        return list(self.basis.entries)

    def __eq__(self, other):
        if not isinstance(other, Subspace):
            return NotImplemented
        return self.ambient_dim == other.ambient_dim and self.basis == other.basis

    def __hash__(self):
        return hash((self.ambient_dim, self.basis))

    def __repr__(self):
        return f"Subspace(dim {self.dim} of {self.ambient_dim})"

    def contains(self, vector):
        if len(vector) != self.ambient_dim:
            raise DimensionMismatch("vector length does not match ambient dimension")
        residual = list(vector)
        for row, p in zip(self.basis.entries, self.pivots):
            coeff = residual[p]
            if not _is_zero(coeff):
                residual = [a - coeff * b for a, b in zip(residual, row)]
        return all(_is_zero(e) for e in residual)

    def contains_subspace(self, other):
        return all(self.contains(v) for v in other.vectors())

    def coordinates_of(self, vector):
        """Coefficients of vector in the basis rows, or None if not a member."""
        residual = list(vector)
        coeffs = []
        for row, p in zip(self.basis.entries, self.pivots):
            coeff = residual[p]
            coeffs.append(coeff)
            if not _is_zero(coeff):
                residual = [a - coeff * b for a, b in zip(residual, row)]
        if not all(_is_zero(e) for e in residual):
            return None
        return tuple(coeffs)

    def sum(self, other):
        self._check_ambient(other)
        return Subspace.from_rows(
            list(self.basis.entries) + list(other.basis.entries),
            self.ambient_dim,
            zero=self.zero,
        )

    def intersect(self, other):
        """Kernel-of-stacked-equations: cut by both annihilators at once."""
        self._check_ambient(other)
        eq_self = self.annihilator().basis
        eq_other = other.annihilator().basis
        stacked = eq_self.stack(eq_other)
        if stacked.rows == 0:
            return Subspace.full_space(self.ambient_dim, zero=self.zero)
        return stacked.kernel()

    def annihilator(self):
        """Covectors vanishing on the subspace, in dual coordinates."""
        if self.dim == 0:
            return Subspace.full_space(self.ambient_dim, zero=self.zero)
        return self.basis.kernel()

    def image(self, matrix):
        """The image {M v : v in self} in the target coordinate space."""
        if matrix.cols != self.ambient_dim:
            raise DimensionMismatch("matrix does not act on this ambient space")
        return Subspace.from_rows(
            [matrix.apply(v) for v in self.vectors()], matrix.rows, zero=self.zero
        )

    def preimage(self, matrix):
        """{v : M v in self} in the source coordinate space of the matrix."""
        if matrix.rows != self.ambient_dim:
            raise DimensionMismatch("matrix does not land in this ambient space")
        ann = self.annihilator().basis
        if ann.rows == 0:
            return Subspace.full_space(matrix.cols, zero=matrix.zero)
        return (ann @ matrix).kernel()

    def _check_ambient(self, other):
        if self.ambient_dim != other.ambient_dim:
            raise DimensionMismatch(
                f"ambient dimensions differ: {self.ambient_dim} vs {other.ambient_dim}"
            )


def dual_map(matrix):
    """The dual of a linear map in coordinates: the transpose."""
    return matrix.transpose()


def solve_particular(matrix, rhs):
    """One solution x of M x = rhs, or None if inconsistent."""
    augmented = matrix.augment(
        Matrix([[v] for v in rhs], cols=1, zero=matrix.zero)
    )
    reduced, pivots = augmented.rref()
    if matrix.cols in pivots:
        return None
    zero = matrix.zero
    x = [zero] * matrix.cols
    for i, p in enumerate(pivots):
        x[p] = reduced.entries[i][matrix.cols]
    return tuple(x)


def char_poly(matrix):
    """Characteristic polynomial coefficients [1, c1, ..., cn] of a square
    Fraction matrix, via the Faddeev-LeVerrier recursion (exact)."""
    if matrix.rows != matrix.cols:
        raise DimensionMismatch("characteristic polynomial of a non-square matrix")
    n = matrix.rows
    coeffs = [Fraction(1)]
    m = Matrix.zero_matrix(n, n)
    ident = Matrix.identity(n)
    for k in range(1, n + 1):
        m = matrix @ (m + ident.scale(coeffs[k - 1]))
        trace = sum((m.entries[i][i] for i in range(n)), Fraction(0))
        coeffs.append(-trace / k)
    return coeffs


def symmetric_signature(matrix):
    """(positives, negatives, zeros) of the spectrum of a symmetric Fraction
    matrix, certified exactly.

    All eigenvalues of a symmetric matrix are real, so Descartes' rule of
    signs applied to the characteristic polynomial and its reflection counts
    them exactly (for real-rooted polynomials the sign-change bound is
    attained)."""
    if not matrix.is_symmetric():
        raise DimensionMismatch("signature needs a symmetric matrix")
    coeffs = char_poly(matrix)
    n = matrix.rows

    def sign_changes(seq):
        seq = [c for c in seq if c != 0]
        return sum(1 for a, b in zip(seq, seq[1:]) if (a < 0) != (b < 0))

    pos = sign_changes(coeffs)
    neg = sign_changes([c if i % 2 == 0 else -c for i, c in enumerate(coeffs)])
    return pos, neg, n - pos - neg
